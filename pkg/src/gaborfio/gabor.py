"""Windows, lattices, Gabor frames, STFT, and the decay classifier.

A frame is a window plus a truncated separable lattice alpha*Z x beta*Z on a
fixed grid. Frame bounds are Rayleigh-quotient extremes over the span of the
central atoms (|lambda_i| <= truncation/2): eigenvalues of the full frame
operator on the grid are polluted by lattice-edge effects, while on the
central span the truncation error is negligible. The dual window is solved
on a doubled grid with an enlarged lattice, then restricted, because the
frame operator restricted to the original truncation is rank-deficient at
its edges.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import hermite as _hermite

from .errors import NotAFrameError, SolverError
from .fitting import DEFAULT_S_GRID, ShellFit, shell_decay_fit
from .signals import Grid, SampledSignal, inner_product

__all__ = [
    "Window",
    "gaussian",
    "hermite",
    "Lattice",
    "make_lattice",
    "GaborFrame",
    "tf_shift",
    "stft",
    "frame_bounds",
    "dual_window",
    "gs_decay_classify",
    "moment_constant_conversion",
    "moment_epsilon_bound",
    "inversion_formula_reconstruct",
]

WINDOW_KINDS = ("gaussian", "hermite")

# Frame bounds need edge atoms to be represented accurately on the grid:
# the grid must extend past the lattice truncation by this margin (time and
# frequency units).
GRID_MARGIN = 5.0

# Lower frame bound below this is reported as "not a frame".
FRAME_FLOOR = 1e-8

# Dual-window solve: lattice enlargement on the doubled grid, eigenvalue
# deflation cut for the edge null-space, and CG tolerance. 1e-11 rather
# than the contractual 1e-10 so that downstream reconstruction keeps its
# 1e-8 margin (solution error scales like residual / A).
DUAL_EXTRA_TRUNCATION = 12.0
DUAL_EDGE_CLEARANCE = 4.0
DUAL_DEFLATION_CUT = 1e-2
DUAL_CG_TOL = 1e-11


@dataclass(frozen=True)
class Window:
    """Closed-form window: gaussian(a) or hermite(k, a), unnormalized.

    gaussian(a) evaluates exp(-(pi/a) x^2); hermite(k, a) multiplies that
    by the degree-k Hermite polynomial in sqrt(2 pi / a) x. Both families
    have Gaussian decay in time and frequency.
    """

    kind: str
    width: float
    order: int = 0

    def __post_init__(self):
        if self.kind not in WINDOW_KINDS:
            raise ValueError(f"unknown window kind {self.kind!r}")
        if not (self.width > 0 and math.isfinite(self.width)):
            raise ValueError(f"window width must be positive, got {self.width}")
        if self.order < 0 or (self.kind == "gaussian" and self.order != 0):
            raise ValueError(f"bad window order {self.order}")

    def evaluate(self, x):
        x = np.asarray(x, dtype=float)
        envelope = np.exp(-(np.pi / self.width) * x * x)
        if self.kind == "gaussian":
            return envelope
        coef = np.zeros(self.order + 1)
        coef[self.order] = 1.0
        poly = _hermite.hermval(np.sqrt(2.0 * np.pi / self.width) * x, coef)
        return poly * envelope

    def sampled(self, grid: Grid) -> SampledSignal:
        return _sampled_window(self, grid)


@functools.lru_cache(maxsize=64)
def _sampled_window(window: Window, grid: Grid) -> SampledSignal:
    grid.require_1d()
    return SampledSignal(grid, window.evaluate(grid.times()))


def gaussian(width: float) -> Window:
    return Window("gaussian", width)


def hermite(order: int, width: float) -> Window:
    if order < 1:
        raise ValueError("hermite order must be >= 1")
    return Window("hermite", width, order)


@dataclass(frozen=True)
class Lattice:
    """Separable lattice alpha*Z x beta*Z truncated to a centered box.

    Points are ordered lexicographically so every downstream artifact is
    deterministic.
    """

    alpha: float
    beta: float
    time_range: float
    freq_range: float
    points: tuple = field(init=False, repr=False)

    def __post_init__(self):
        if not (self.alpha > 0 and self.beta > 0):
            raise ValueError("lattice steps must be positive")
        if not (self.time_range >= 0 and self.freq_range >= 0):
            raise ValueError("truncation radii must be nonnegative")
        k1 = int(math.floor(self.time_range / self.alpha + 1e-9))
        k2 = int(math.floor(self.freq_range / self.beta + 1e-9))
        pts = tuple((i * self.alpha, j * self.beta)
                    for i in range(-k1, k1 + 1)
                    for j in range(-k2, k2 + 1))
        object.__setattr__(self, "points", pts)

    @property
    def redundancy(self) -> float:
        """Density parameter alpha*beta; frames need it < 1."""
        return self.alpha * self.beta

    def __len__(self):
        return len(self.points)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.points, dtype=float)

    def center_index(self) -> int:
        """Index of the origin point (always on a centered lattice)."""
        arr = self.as_array()
        idx = int(np.argmin(np.abs(arr).sum(axis=1)))
        return idx


def make_lattice(alpha: float, beta: float, truncation: float) -> Lattice:
    return Lattice(alpha, beta, truncation, truncation)


def tf_shift(g: SampledSignal, lam, *, window: Window | None = None
             ) -> SampledSignal:
    """Time-frequency shift to g(x - lam1) * exp(2 pi i lam2 x).

    With a window given, the shift is evaluated analytically from the
    closed form. Otherwise the time shift is a periodic spectral shift of
    the samples (exact for grid functions whose boundary values vanish),
    followed by the modulation.
    """
    x, w = float(lam[0]), float(lam[1])
    if not (math.isfinite(x) and math.isfinite(w)):
        raise ValueError(f"shift must be finite, got {lam}")
    g.grid.require_1d()
    t = g.grid.times()
    if window is not None:
        vals = window.evaluate(t - x).astype(complex)
    else:
        spec = np.fft.fft(np.fft.ifftshift(g.values))
        freqs = np.fft.fftfreq(g.grid.points_per_axis, d=g.grid.spacing)
        vals = np.fft.fftshift(np.fft.ifft(
            spec * np.exp(-2j * np.pi * freqs * x)))
    return SampledSignal(g.grid, vals * np.exp(2j * np.pi * w * t))


def stft(f: SampledSignal, window, eval_points) -> np.ndarray:
    """V f(x, w) = <f, window shifted to (x, w)> at each requested point.

    window is a Window (analytic atoms) or a SampledSignal on f's grid.
    """
    f.grid.require_1d()
    if isinstance(window, Window):
        base = window.sampled(f.grid)
        win = window
    else:
        if window.grid != f.grid:
            raise ValueError("grid mismatch between signal and window")
        base, win = window, None
    out = np.empty(len(eval_points), dtype=complex)
    for i, lam in enumerate(eval_points):
        out[i] = inner_product(f, tf_shift(base, lam, window=win))
    return out


@dataclass(eq=False)
class GaborFrame:
    """A window and truncated lattice on a grid, with write-once caches."""

    window: Window
    lattice: Lattice
    grid: Grid

    _atoms: np.ndarray | None = field(default=None, repr=False)
    _bounds: tuple | None = field(default=None, repr=False)
    _dual: SampledSignal | None = field(default=None, repr=False)
    _dual_residuals: tuple | None = field(default=None, repr=False)

    def atoms(self) -> np.ndarray:
        """Dense atom matrix, one analytic atom per lattice point column."""
        if self._atoms is None:
            t = self.grid.times()
            pts = self.lattice.as_array()
            mat = np.empty((self.grid.size, len(pts)), dtype=complex)
            for j, (x, w) in enumerate(pts):
                mat[:, j] = (self.window.evaluate(t - x)
                             * np.exp(2j * np.pi * w * t))
            mat.flags.writeable = False
            self._atoms = mat
        return self._atoms

    def analysis(self, f: SampledSignal) -> np.ndarray:
        """Coefficients <f, g_lambda> for all lattice points."""
        if f.grid != self.grid:
            raise ValueError("grid mismatch")
        return self.grid.spacing * (self.atoms().conj().T @ f.values)

    def synthesis(self, coeffs) -> SampledSignal:
        return SampledSignal(self.grid, self.atoms() @ np.asarray(coeffs))

    def dual_atoms(self) -> np.ndarray:
        """Atom matrix of the dual window (spectral shifts of its samples)."""
        dual = dual_window(self)
        spec = np.fft.fft(np.fft.ifftshift(dual.values))
        freqs = np.fft.fftfreq(self.grid.points_per_axis, d=self.grid.spacing)
        t = self.grid.times()
        pts = self.lattice.as_array()
        mat = np.empty((self.grid.size, len(pts)), dtype=complex)
        shift_cache: dict[float, np.ndarray] = {}
        for j, (x, w) in enumerate(pts):
            if x not in shift_cache:
                shift_cache[x] = np.fft.fftshift(np.fft.ifft(
                    spec * np.exp(-2j * np.pi * freqs * x)))
            mat[:, j] = shift_cache[x] * np.exp(2j * np.pi * w * t)
        return mat

    def dual_analysis(self, f: SampledSignal) -> np.ndarray:
        if f.grid != self.grid:
            raise ValueError("grid mismatch")
        return self.grid.spacing * (self.dual_atoms().conj().T @ f.values)

    def dual_synthesis(self, coeffs) -> SampledSignal:
        return SampledSignal(self.grid,
                             self.dual_atoms() @ np.asarray(coeffs))

    @property
    def dual_residuals(self) -> tuple:
        """(solver relative residual, restricted-system relative residual).

        Available after dual_window has run. The first is the conjugate-
        direction solver's terminal residual in the extended deflated
        system it actually solves; the second measures S gamma = g on the
        original grid and truncation, where edge rank-deficiency leaves a
        much larger floor.
        """
        if self._dual_residuals is None:
            raise ValueError("dual window has not been computed yet")
        return self._dual_residuals


def _frame_operator_matrix(window: Window, alpha: float, beta: float,
                           k_time: int, k_freq: int, grid: Grid
                           ) -> np.ndarray:
    """Dense frame operator on the grid for a real window.

    Separability splits S into a translation Gram times a modulation
    Dirichlet kernel, entrywise.
    """
    t = grid.times()
    shifts = np.arange(-k_time, k_time + 1) * alpha
    wmat = np.stack([window.evaluate(t - x) for x in shifts])
    js = np.arange(-k_freq, k_freq + 1) * beta
    vmat = np.exp(2j * np.pi * np.outer(js, t))
    return grid.spacing * (wmat.T @ wmat) * (vmat.conj().T @ vmat).real


def frame_bounds(frame: GaborFrame) -> tuple:
    """Extreme Rayleigh quotients of the frame operator on the central span.

    The test space is span{g_lambda : |lambda_i| <= truncation/2}; with
    C the central atom matrix and G all atoms, the quotient pencil is
    (dx G^H C)^H (dx G^H C) against dx C^H C, reduced by an eigenvalue
    cutoff on the Gram matrix.
    """
    if frame._bounds is not None:
        return frame._bounds
    grid, lat = frame.grid, frame.lattice
    if (grid.half_width < lat.time_range + GRID_MARGIN
            or grid.freq_half_width < lat.freq_range + GRID_MARGIN):
        raise ValueError(
            "grid too small for this lattice truncation: need margin "
            f"{GRID_MARGIN} beyond ({lat.time_range}, {lat.freq_range})")
    pts = lat.as_array()
    central = ((np.abs(pts[:, 0]) <= lat.time_range / 2 + 1e-9)
               & (np.abs(pts[:, 1]) <= lat.freq_range / 2 + 1e-9))
    g_all = frame.atoms()
    c = g_all[:, central]
    y = grid.spacing * (g_all.conj().T @ c)
    t_mat = y.conj().T @ y
    p_mat = grid.spacing * (c.conj().T @ c)
    ev, vec = np.linalg.eigh(p_mat)
    keep = ev > 1e-10 * ev[-1]
    basis = vec[:, keep] / np.sqrt(ev[keep])
    quot = np.linalg.eigvalsh(basis.conj().T @ t_mat @ basis)
    a, b = float(quot[0]), float(quot[-1])
    if a <= FRAME_FLOOR:
        raise NotAFrameError(
            f"not a frame at this truncation: lower bound {a:.3e}")
    frame._bounds = (a, b)
    return frame._bounds


def dual_window(frame: GaborFrame, *, max_iterations: int | None = None
                ) -> SampledSignal:
    """Canonical dual window gamma solving S gamma = g.

    Solved on a doubled grid with the lattice enlarged by
    DUAL_EXTRA_TRUNCATION (limited by the doubled grid's own margins), so
    the restriction to the original grid is free of truncation-edge
    artifacts. S there is real symmetric; its edge null-space is deflated
    by eigendecomposition, and conjugate gradients run in the deflated
    subspace. Iteration budget is 10x the deflated condition estimate
    unless max_iterations overrides it.
    """
    if frame._dual is not None:
        return frame._dual
    frame_bounds(frame)
    grid, lat = frame.grid, frame.lattice
    ext = Grid(grid.dim, 2 * grid.points_per_axis, 2 * grid.length)
    trunc_t = min(lat.time_range + DUAL_EXTRA_TRUNCATION,
                  ext.half_width - DUAL_EDGE_CLEARANCE)
    trunc_f = min(lat.freq_range + DUAL_EXTRA_TRUNCATION,
                  ext.freq_half_width - DUAL_EDGE_CLEARANCE)
    k_t = int(math.floor(trunc_t / lat.alpha + 1e-9))
    k_f = int(math.floor(trunc_f / lat.beta + 1e-9))
    s_big = _frame_operator_matrix(frame.window, lat.alpha, lat.beta,
                                   k_t, k_f, ext)
    ev, vec = np.linalg.eigh(s_big)
    kept = ev > DUAL_DEFLATION_CUT * ev[-1]
    basis = vec[:, kept]
    cond_estimate = float(ev[-1] / ev[kept].min())
    budget = max_iterations if max_iterations is not None else \
        max(10, int(10 * cond_estimate))

    g_vals = frame.window.evaluate(ext.times())
    rhs = basis @ (basis.T @ g_vals)
    x = np.zeros_like(rhs)
    r = rhs.copy()
    p = r.copy()
    rs = float(r @ r)
    rhs_norm = math.sqrt(rs)
    iterations = 0
    while math.sqrt(rs) > DUAL_CG_TOL * rhs_norm:
        if iterations >= budget:
            raise SolverError(
                f"dual-window solve stalled after {iterations} iterations",
                residual=math.sqrt(rs) / rhs_norm)
        s_p = basis @ (basis.T @ (s_big @ p))
        alpha_step = rs / float(p @ s_p)
        x += alpha_step * p
        r -= alpha_step * s_p
        rs_next = float(r @ r)
        p = r + (rs_next / rs) * p
        rs = rs_next
        iterations += 1
    solver_residual = math.sqrt(rs) / rhs_norm

    n = grid.points_per_axis
    central = x[n // 2: n // 2 + n]
    dual = SampledSignal(grid, central.astype(complex))

    k_t0 = int(math.floor(lat.time_range / lat.alpha + 1e-9))
    k_f0 = int(math.floor(lat.freq_range / lat.beta + 1e-9))
    s_small = _frame_operator_matrix(frame.window, lat.alpha, lat.beta,
                                     k_t0, k_f0, grid)
    g_small = frame.window.evaluate(grid.times())
    restricted = float(np.linalg.norm(s_small @ central - g_small)
                       / np.linalg.norm(g_small))
    frame._dual = dual
    frame._dual_residuals = (solver_residual, restricted)
    return dual


def gs_decay_classify(points, magnitudes, *, floor: float = 1e-14,
                      s_grid=None) -> ShellFit:
    """Classify phase-space decay exp(-eps |z|**(1/s)) from STFT samples.

    points is an (n, 2) array of phase-space locations, magnitudes the
    matching |V f(z)| values. Returns the shell fit over the s grid
    (default 0.40 to 2.00, step 0.05).
    """
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    dist = np.hypot(pts[:, 0], pts[:, 1])
    return shell_decay_fit(dist, magnitudes, floor=floor,
                           s_grid=s_grid if s_grid is not None
                           else DEFAULT_S_GRID, min_samples=50)


def moment_constant_conversion(epsilon: float, r: float, d: int) -> float:
    """Constant C = (r d / epsilon)**r matching the exponential rate."""
    if epsilon <= 0 or r <= 0 or d < 1:
        raise ValueError("epsilon and r must be positive, d >= 1")
    return (r * d / epsilon) ** r

def moment_epsilon_bound(c: float, r: float, d: int) -> float:
    """Supremum bound r (d C)**(-1/r) on rates admissible for constant C."""
    if c <= 0 or r <= 0 or d < 1:
        raise ValueError("C and r must be positive, d >= 1")
    return r * (d * c) ** (-1.0 / r)


def inversion_formula_reconstruct(f: SampledSignal, window: Window,
                                  step: float = 0.125, extent: float = 10.0
                                  ) -> SampledSignal:
    """Riemann-sum STFT inversion over a fine phase-space grid.

    rec = step^2 / ||g||^2 * sum_{x,w} V_g f(x,w) g_{x,w}. Step 0.125 over
    a box of radius 10 reproduces centered Gaussians to machine precision;
    step 0.25 already misses the 1e-6 target.
    """
    f.grid.require_1d()
    t = f.grid.times()
    xs = np.arange(-extent, extent + 1e-9, step)
    ws = np.arange(-extent, extent + 1e-9, step)
    emod = np.exp(2j * np.pi * np.outer(ws, t))
    dx = f.grid.spacing
    rec = np.zeros(f.grid.size, dtype=complex)
    for x in xs:
        win_x = window.evaluate(t - x)
        v_x = dx * (emod.conj() @ (f.values * win_x))
        rec += win_x * (emod.T @ v_x)
    g_sq = inner_product(window.sampled(f.grid), window.sampled(f.grid)).real
    return SampledSignal(f.grid, rec * step * step / g_sq)
