"""Log-linear decay-law fitting shared by the classifier and matrix fits.

The model is log m = logC - eps * r**(1/s) with s scanned over a fixed grid.
Raw point clouds of lattice data are anisotropic (a quadratic decay law seen
through a lattice has direction-dependent rates), so samples are first
grouped into radial shells of width 0.5 and each shell contributes its mean
log-magnitude against its mean r**(1/s). Shells touching the floor are
censored entirely: a shell mean taken over only the surviving samples would
be biased upward. Ties in the residual scan resolve toward the smallest s.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InsufficientDataError, NoSignalError

__all__ = [
    "DEFAULT_S_GRID",
    "SHELL_WIDTH",
    "ShellFit",
    "shell_decay_fit",
    "fixed_s_fit",
    "sorted_tail_fit",
]

DEFAULT_S_GRID = tuple(np.round(np.arange(0.40, 2.0001, 0.05), 2))
SHELL_WIDTH = 0.5


@dataclass(frozen=True)
class ShellFit:
    s_hat: float
    epsilon_hat: float
    log_c: float
    r_squared: float
    n_shells: int
    n_samples: int


def _censored_shells(dist, mags, floor):
    """Group samples into radial shells, dropping shells that hit the floor.

    Returns per-shell radius arrays and mean log magnitudes.
    """
    idx = np.floor(dist / SHELL_WIDTH).astype(int)
    radii, ybars = [], []
    for i in np.unique(idx):
        m = mags[idx == i]
        if np.all(m >= floor):
            radii.append(dist[idx == i])
            ybars.append(float(np.mean(np.log(m))))
    return radii, np.asarray(ybars)


def _line_fit(xs, ys):
    """LS fit ys ~ logC - eps*xs. Returns (eps, logc, ssr, sst)."""
    a = np.column_stack([np.ones_like(xs), -xs])
    coef, *_ = np.linalg.lstsq(a, ys, rcond=None)
    resid = ys - a @ coef
    ssr = float(resid @ resid)
    sst = float(np.sum((ys - ys.mean()) ** 2))
    return float(coef[1]), float(coef[0]), ssr, sst


def shell_decay_fit(dist, mags, *, floor, exclusion_radius=None,
                    s_grid=None, min_samples=50) -> ShellFit:
    """Scan the s grid, fit each candidate, keep the smallest residual.

    dist and mags are flat arrays of radial distances and magnitudes.
    Samples closer than exclusion_radius are dropped first (near-field
    plateau); samples below floor never enter a fit. Raises NoSignalError
    when nothing survives the floor and InsufficientDataError when fewer
    than min_samples do.
    """
    dist = np.asarray(dist, dtype=float).ravel()
    mags = np.asarray(mags, dtype=float).ravel()
    if exclusion_radius is not None:
        keep = dist >= exclusion_radius
        dist, mags = dist[keep], mags[keep]
    n_above = int(np.count_nonzero(mags >= floor))
    if n_above == 0:
        raise NoSignalError("no signal: all samples below floor "
                            f"{floor:g}")
    if n_above < min_samples:
        raise InsufficientDataError(
            f"insufficient data: {n_above} samples above floor {floor:g}, "
            f"need {min_samples}")
    radii, ybars = _censored_shells(dist, mags, floor)
    if len(ybars) < 3:
        raise InsufficientDataError(
            f"insufficient data: only {len(ybars)} clean shells")
    best = None
    for s in (s_grid if s_grid is not None else DEFAULT_S_GRID):
        xs = np.array([np.mean(r ** (1.0 / s)) for r in radii])
        eps, logc, ssr, sst = _line_fit(xs, ybars)
        if best is None or ssr < best[0] - 1e-15:
            r2 = 1.0 - ssr / sst if sst > 0 else 1.0
            best = (ssr, float(s), eps, logc, r2)
    _, s_hat, eps, logc, r2 = best
    return ShellFit(s_hat, eps, logc, r2, len(ybars), n_above)


def fixed_s_fit(dist, mags, s, *, floor, exclusion_radius=None):
    """Shell fit at one fixed s. Returns (epsilon, logc, r_squared)."""
    dist = np.asarray(dist, dtype=float).ravel()
    mags = np.asarray(mags, dtype=float).ravel()
    if exclusion_radius is not None:
        keep = dist >= exclusion_radius
        dist, mags = dist[keep], mags[keep]
    radii, ybars = _censored_shells(dist, mags, floor)
    if len(ybars) < 3:
        raise InsufficientDataError(
            f"insufficient data: only {len(ybars)} clean shells")
    xs = np.array([np.mean(r ** (1.0 / s)) for r in radii])
    eps, logc, ssr, sst = _line_fit(xs, ybars)
    return eps, logc, (1.0 - ssr / sst if sst > 0 else 1.0)


def sorted_tail_fit(mags, exponent, *, floor):
    """Fit log of the descending-sorted magnitudes against n**exponent.

    n counts from 1. Returns (epsilon, logc, r_squared, n_used). Used for
    per-row sparsity profiles where the model is
    |a|_n <= C exp(-eps n**exponent).
    """
    v = np.sort(np.asarray(mags, dtype=float).ravel())[::-1]
    v = v[v >= floor]
    if v.size < 3:
        raise InsufficientDataError(
            f"insufficient data: {v.size} magnitudes above floor {floor:g}")
    xs = np.arange(1, v.size + 1, dtype=float) ** exponent
    eps, logc, ssr, sst = _line_fit(xs, np.log(v))
    return eps, logc, (1.0 - ssr / sst if sst > 0 else 1.0), int(v.size)
