"""Shared fixtures: one production-scale frame and the matrices built on it.

Scale matches the documented reference setup: dimension 1, 1024 samples on a
window of length 32, gaussian(2) analysis window, lattice steps 1/sqrt(2),
truncation 8.  Everything heavy is session-scoped so the suite builds each
object exactly once.
"""

import numpy as np
import pytest

import gaborfio as gf

PROD_N = 1024
PROD_L = 32.0
LATTICE_STEP = 2.0 ** -0.5
TRUNCATION = 8.0

# Assembled-matrix fits run with the floor lifted to 1e-12: quadrature noise
# in the matrix entries sits around 1e-14 and poisons shells at the default
# floor.  STFT-sample fits keep the 1e-14 default.
MATRIX_FLOOR = 1e-12


def rel_error(candidate, reference):
    """L2 error of candidate against reference, relative to the reference."""
    return float(np.linalg.norm(candidate.values - reference.values)
                 / np.linalg.norm(reference.values))


def centered_gaussian(grid, width):
    return gf.gaussian(width).sampled(grid)


@pytest.fixture(scope="session")
def grid():
    return gf.Grid(1, PROD_N, PROD_L)


@pytest.fixture(scope="session")
def g2_frame(grid):
    lattice = gf.make_lattice(LATTICE_STEP, LATTICE_STEP, TRUNCATION)
    return gf.GaborFrame(gf.gaussian(2.0), lattice, grid)


@pytest.fixture(scope="session")
def g1_frame(grid):
    lattice = gf.make_lattice(LATTICE_STEP, LATTICE_STEP, TRUNCATION)
    return gf.GaborFrame(gf.gaussian(1.0), lattice, grid)


@pytest.fixture(scope="session")
def dual_frame(g2_frame):
    """The production frame with bounds and dual window already solved."""
    gf.dual_window(g2_frame)
    return g2_frame


@pytest.fixture(scope="session")
def matrices(g2_frame):
    """Gabor matrices of every shipped operator on the production frame."""
    return {
        name: gf.assemble(gf.parse_operator(name), g2_frame)
        for name in gf.shipped_operator_names()
    }


@pytest.fixture(scope="session")
def harmonic_matrix(matrices):
    return matrices["harmonic:0.7853981633974483"]


@pytest.fixture(scope="session")
def harmonic_g1_matrix(g1_frame):
    """Quarter-period rotation against the width-1 window.

    The closed-form concentration law 2^{-1/2} exp(-(pi/2) dist^2) is exact
    for this window; the width-2 window exceeds it already on the diagonal.
    """
    op = gf.parse_operator("harmonic:0.7853981633974483")
    return gf.assemble(op, g1_frame)


@pytest.fixture(scope="session")
def fits(matrices):
    return {
        name: gf.fit_decay(m, floor=MATRIX_FLOOR)
        for name, m in matrices.items()
    }
