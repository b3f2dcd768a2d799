"""Gabor matrix of an operator: assembly, decay fits, sparse application.

The matrix entry at (mu, lambda) is <T g_lambda, g_mu>, computed by
quadrature on a doubled grid (twice the points, twice the length, same
spacing) so that operators translating content toward the edge of the
original box are still integrated accurately. Entries concentrate along
mu = chi(lambda); every fit is in the distance d(mu, chi(lambda)).

Lattice points whose image chi(lambda) leaves the reliable region of the
original grid (half extent minus a fixed margin) are flagged, kept in the
matrix, and excluded from fits.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import InsufficientDataError
from .fio import FioOperator, canonical_map, ensure_nondegenerate
from .fitting import (DEFAULT_S_GRID, fixed_s_fit, shell_decay_fit,
                      sorted_tail_fit)
from .gabor import GaborFrame
from .signals import Grid, SampledSignal

__all__ = [
    "GaborMatrix",
    "DecayFit",
    "SparsityReport",
    "assemble",
    "fit_decay",
    "restricted_decay_fit",
    "decay_bound_check",
    "sparsity_curve",
    "sparse_apply",
]

# chi(lambda) must stay this far inside the original grid's half extents
# for the column to count as reliable.
RELIABLE_MARGIN = 3.0

# Quadrature noise in assembled entries sits near 1e-14 of the peak;
# bound checks ignore entries below this.
NOISE_FLOOR = 1e-12

# Columns are processed in fixed-size chunks so results are bitwise
# independent of the worker count.
COLUMN_CHUNK = 32


@dataclass(frozen=True, eq=False)
class GaborMatrix:
    """Coordinate-format Gabor matrix with per-column reliability flags.

    Flat arrays run lambda-major: entry l * n + m holds
    <T g_{lambda_l}, g_{mu_m}> and the phase-space distance from mu_m to
    chi(lambda_l). Entry count is always len(lattice)^2.
    """

    operator_name: str
    grid: Grid
    window: object
    lattice: object
    symbol_order: float
    entries: np.ndarray = field(repr=False)
    distances: np.ndarray = field(repr=False)
    chi: np.ndarray = field(repr=False)
    flags: np.ndarray = field(repr=False)

    def __post_init__(self):
        n = len(self.lattice)
        if self.entries.shape != (n * n,) or self.distances.shape != (n * n,):
            raise ValueError("entry arrays must be flat with length |L|^2")
        for arr in (self.entries, self.distances, self.chi, self.flags):
            arr.flags.writeable = False

    def __len__(self):
        return self.entries.size

    @property
    def n_lattice(self) -> int:
        return len(self.lattice)

    def dense(self) -> np.ndarray:
        """Matrix with rows indexed by mu, columns by lambda."""
        n = self.n_lattice
        return self.entries.reshape(n, n).T

    def magnitudes(self) -> np.ndarray:
        return np.abs(self.entries)

    def unflagged(self) -> np.ndarray:
        """Flat mask of entries in columns whose chi stayed reliable."""
        return ~np.repeat(self.flags, self.n_lattice)

    def to_csv(self, path) -> None:
        pts = self.lattice.as_array()
        n = self.n_lattice
        lam = np.repeat(pts, n, axis=0)
        mu = np.tile(pts, (n, 1))
        with open(path, "w") as fh:
            fh.write("lambda1,lambda2,mu1,mu2,re,im,abs,dist\n")
            for i in range(n * n):
                e = self.entries[i]
                fh.write("%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n"
                         % (lam[i, 0], lam[i, 1], mu[i, 0], mu[i, 1],
                            e.real, e.imag, abs(e), self.distances[i]))


@dataclass(frozen=True)
class DecayFit:
    """Decay law fit |M| ~ C exp(-eps d^(1/s)) plus an envelope calibration.

    The fitted (s_hat, epsilon_hat, log_c) come from shell means; the
    envelope pair (envelope_log_c, envelope_epsilon) is calibrated so
    exp(envelope_log_c - envelope_epsilon d^(1/s_hat)) dominates every
    above-floor sample, for pointwise bound checks.
    """

    operator: str
    s_hat: float
    epsilon_hat: float
    log_c: float
    r_squared: float
    n_points: int
    n_shells: int
    weight_exponent: float
    envelope_log_c: float
    envelope_epsilon: float

    def to_dict(self) -> dict:
        return {
            "operator": self.operator,
            "s_hat": self.s_hat,
            "epsilon_hat": self.epsilon_hat,
            "logC": self.log_c,
            "r2": self.r_squared,
            "n_points": self.n_points,
        }


@dataclass(frozen=True)
class SparsityReport:
    """Per-row (or per-column) tail fits log a_n ~ log C - eps n^exponent."""

    operator: str
    axis: str
    exponent_used: float
    epsilons: np.ndarray = field(repr=False)
    log_cs: np.ndarray = field(repr=False)
    r_squareds: np.ndarray = field(repr=False)
    n_used: np.ndarray = field(repr=False)
    indices: np.ndarray = field(repr=False)

    @property
    def worst_index(self) -> int:
        return int(self.indices[int(np.argmin(self.epsilons))])

    def to_dict(self) -> dict:
        k = int(np.argmin(self.epsilons))
        return {
            "row_worst": {
                "C": float(math.exp(self.log_cs[k])),
                "epsilon": float(self.epsilons[k]),
                "r2": float(self.r_squareds[k]),
            },
            "exponent_used": self.exponent_used,
        }


def _worker_count(workers: int | None) -> int:
    if workers is not None:
        return max(1, int(workers))
    env = os.environ.get("GABORFIO_WORKERS", "")
    if env.strip():
        return max(1, int(env))
    return os.cpu_count() or 1


def assemble(op: FioOperator, frame: GaborFrame, *,
             workers: int | None = None) -> GaborMatrix:
    """Assemble <T g_lambda, g_mu> for all lattice pairs.

    Work is one dense kernel build plus three matrix products on the
    doubled grid, chunked over lambda columns across threads (the BLAS
    calls release the GIL). Chunk boundaries are fixed, so the result is
    bitwise identical for any worker count.
    """
    ensure_nondegenerate(op)
    grid = frame.grid
    grid.require_1d()
    pad = Grid(grid.dim, 2 * grid.points_per_axis, 2 * grid.length)
    t = pad.times()
    om = pad.freqs()
    pts = frame.lattice.as_array()
    n_lam = len(pts)

    atoms = np.empty((pad.size, n_lam), dtype=complex)
    for j, (x, w) in enumerate(pts):
        atoms[:, j] = frame.window.evaluate(t - x) * np.exp(2j * np.pi * w * t)
    atoms_hat = pad.spacing * np.fft.fftshift(
        np.fft.fft(np.fft.ifftshift(atoms, axes=0), axis=0), axes=0)

    kern = (np.exp(2j * np.pi * op.phase.value(t[:, None], om[None, :]))
            * np.asarray(op.symbol.value(t[:, None], om[None, :]),
                         dtype=complex))

    t_atoms = np.empty_like(atoms)
    chunks = [slice(i, min(i + COLUMN_CHUNK, n_lam))
              for i in range(0, n_lam, COLUMN_CHUNK)]

    def run_chunk(sl):
        t_atoms[:, sl] = (kern @ atoms_hat[:, sl]) / pad.length

    n_workers = _worker_count(workers)
    if n_workers == 1:
        for sl in chunks:
            run_chunk(sl)
    else:
        with ThreadPoolExecutor(max_workers=n_workers) as pool:
            list(pool.map(run_chunk, chunks))

    dense = pad.spacing * (atoms.conj().T @ t_atoms)

    chi = canonical_map(op, pts)
    flags = ((np.abs(chi[:, 0]) > grid.half_width - RELIABLE_MARGIN)
             | (np.abs(chi[:, 1]) > grid.freq_half_width - RELIABLE_MARGIN))
    dist = np.hypot(pts[None, :, 0] - chi[:, 0, None],
                    pts[None, :, 1] - chi[:, 1, None])

    return GaborMatrix(
        operator_name=op.name, grid=grid, window=frame.window,
        lattice=frame.lattice,
        symbol_order=float(op.symbol.weight_exponent),
        entries=dense.T.ravel().copy(), distances=dist.ravel().copy(),
        chi=chi, flags=flags)


def _normalized_magnitudes(matrix: GaborMatrix) -> np.ndarray:
    """|entries| divided by the symbol weight (1 + mu1^2 + lam2^2)^(N/2)."""
    mags = matrix.magnitudes()
    if matrix.symbol_order == 0.0:
        return mags
    pts = matrix.lattice.as_array()
    n = matrix.n_lattice
    lam2 = np.repeat(pts[:, 1], n)
    mu1 = np.tile(pts[:, 0], n)
    weight = (1.0 + mu1 * mu1 + lam2 * lam2) ** (matrix.symbol_order / 2.0)
    return mags / weight


def fit_decay(matrix: GaborMatrix, *, floor: float = 1e-14,
              exclusion_radius: float = 0.5, s_grid=None,
              min_samples: int = 200) -> DecayFit:
    """Fit the concentration law of a Gabor matrix.

    Same procedure as the STFT classifier (shell means over the s grid),
    applied to weight-normalized magnitudes of unflagged entries, with a
    near-diagonal exclusion: below exclusion_radius the discrete distance
    does not resolve the law. Requires min_samples entries above floor.

    The envelope pair is calibrated on the same samples: the constant is
    the peak magnitude and the rate is the largest one the peak-anchored
    envelope can afford while still dominating every sample.
    """
    keep = matrix.unflagged()
    dist = matrix.distances[keep]
    mags = _normalized_magnitudes(matrix)[keep]
    fit = shell_decay_fit(
        dist, mags, floor=floor, exclusion_radius=exclusion_radius,
        s_grid=s_grid if s_grid is not None else DEFAULT_S_GRID,
        min_samples=min_samples)

    above = mags >= floor
    log_m = np.log(mags[above])
    env_log_c = float(np.max(log_m))
    spread = dist[above] > 1e-9
    if np.any(spread):
        ratios = (env_log_c - log_m[spread]) / dist[above][spread] ** (
            1.0 / fit.s_hat)
        env_eps = float(max(0.0, np.min(ratios)))
    else:
        env_eps = 0.0

    return DecayFit(
        operator=matrix.operator_name, s_hat=fit.s_hat,
        epsilon_hat=fit.epsilon_hat, log_c=fit.log_c,
        r_squared=fit.r_squared, n_points=fit.n_samples,
        n_shells=fit.n_shells, weight_exponent=matrix.symbol_order,
        envelope_log_c=env_log_c, envelope_epsilon=env_eps)


def restricted_decay_fit(matrix: GaborMatrix, s: float, *,
                         floor: float = 1e-14,
                         exclusion_radius: float = 0.5):
    """Decay-rate fit with the order s imposed instead of grid-searched.

    Same data pipeline as fit_decay (flagged columns excluded, weight
    normalization, near-diagonal exclusion). Returns
    (epsilon, log_c, r_squared) for comparing candidate orders directly.
    """
    keep = matrix.unflagged()
    mags = _normalized_magnitudes(matrix)[keep]
    return fixed_s_fit(matrix.distances[keep], mags, s, floor=floor,
                       exclusion_radius=exclusion_radius)


def decay_bound_check(matrix: GaborMatrix, fit: DecayFit, *,
                      constant_slack: float = 1.05,
                      rate_slack: float = 0.95,
                      noise_floor: float = NOISE_FLOOR) -> dict:
    """Check every reliable entry against the slackened envelope bound.

    Entries below noise_floor are quadrature noise and are skipped.
    Returns checked and violation counts plus the worst entry/bound ratio.
    """
    keep = matrix.unflagged()
    mags = _normalized_magnitudes(matrix)[keep]
    dist = matrix.distances[keep]
    above = mags >= noise_floor
    bound = (constant_slack * np.exp(fit.envelope_log_c)
             * np.exp(-rate_slack * fit.envelope_epsilon
                      * dist[above] ** (1.0 / fit.s_hat)))
    ratio = mags[above] / bound
    return {
        "checked": int(above.sum()),
        "violations": int(np.sum(ratio > 1.0)),
        "max_ratio": float(ratio.max()) if ratio.size else 0.0,
    }


def sparsity_curve(matrix: GaborMatrix, s_hat: float, *, axis: str = "rows",
                   floor: float = 1e-14) -> SparsityReport:
    """Fit each row's (or column's) sorted magnitudes against n^(1/(2s)).

    Rows are output indices mu (restricted to unflagged columns); columns
    are input indices lambda (flagged columns skipped entirely). Vectors
    with fewer than three entries above floor are skipped.
    """
    if axis not in ("rows", "cols"):
        raise ValueError(f"axis must be 'rows' or 'cols', got {axis!r}")
    if s_hat <= 0:
        raise ValueError("s_hat must be positive")
    exponent = 1.0 / (2.0 * matrix.grid.dim * s_hat)
    dense = np.abs(matrix.dense())
    ok_cols = ~matrix.flags
    if axis == "rows":
        vectors = [(m, dense[m, ok_cols]) for m in range(dense.shape[0])]
    else:
        vectors = [(l, dense[:, l]) for l in range(dense.shape[1])
                   if ok_cols[l]]
    eps, logc, r2, used, idx = [], [], [], [], []
    for i, vec in vectors:
        try:
            e, lc, r, n = sorted_tail_fit(vec, exponent, floor=floor)
        except InsufficientDataError:
            continue
        eps.append(e)
        logc.append(lc)
        r2.append(r)
        used.append(n)
        idx.append(i)
    if not eps:
        raise InsufficientDataError(
            "no row had three entries above the floor")
    return SparsityReport(
        operator=matrix.operator_name, axis=axis, exponent_used=exponent,
        epsilons=np.asarray(eps), log_cs=np.asarray(logc),
        r_squareds=np.asarray(r2), n_used=np.asarray(used, dtype=int),
        indices=np.asarray(idx, dtype=int))


def sparse_apply(matrix: GaborMatrix, frame: GaborFrame, f: SampledSignal,
                 tau: float, *, analysis: str = "dual"):
    """Apply the operator through the thresholded Gabor matrix.

    Coefficients come from dual-window analysis (or plain frame analysis
    with analysis="frame"); entries with |M| < tau are dropped; the output
    is synthesized with the dual window. Returns (signal, kept_ratio)
    where kept_ratio counts surviving entries against len(lattice)^2.
    tau = 0 keeps everything; tau = inf yields the zero signal, ratio 0.
    """
    if math.isnan(tau) or tau < 0:
        raise ValueError(f"threshold must be nonnegative, got {tau}")
    if analysis not in ("dual", "frame"):
        raise ValueError(f"analysis must be 'dual' or 'frame', got "
                         f"{analysis!r}")
    if f.grid != frame.grid:
        raise ValueError("grid mismatch")
    coeffs = (frame.dual_analysis(f) if analysis == "dual"
              else frame.analysis(f))
    dense = matrix.dense().copy()
    drop = np.abs(dense) < tau
    dense[drop] = 0.0
    kept = dense.size - int(drop.sum())
    out_coeffs = dense @ coeffs
    out = SampledSignal(frame.grid, frame.dual_atoms() @ out_coeffs)
    return out, kept / float(dense.size)
