"""Phases, symbols, quadrature application, and the canonical map."""

import numpy as np
import pytest

import gaborfio as gf
from gaborfio.fio import linear_phase
from conftest import centered_gaussian, rel_error


def _random_points(n=100, box=5.0, seed=0):
    rng = np.random.default_rng(seed)
    return rng.uniform(-box, box, size=(n, 2))


# ------------------------------------------------------------ validation

def test_phase_rejects_inconsistent_gradient():
    with pytest.raises(ValueError):
        gf.Phase(value=lambda x, eta: x * eta,
                 gradient=lambda x, eta: (1.1 * np.asarray(eta, dtype=float),
                                          np.asarray(x, dtype=float)),
                 hessian=lambda x, eta: ((0.0, 1.0), (1.0, 0.0)))


def test_phase_rejects_asymmetric_hessian():
    with pytest.raises(ValueError):
        gf.Phase(value=lambda x, eta: x * eta,
                 gradient=lambda x, eta: (np.asarray(eta, dtype=float),
                                          np.asarray(x, dtype=float)),
                 hessian=lambda x, eta: ((0.0, 1.0), (0.5, 0.0)))


def test_phase_rejects_bad_smoothness_metadata():
    kwargs = dict(value=lambda x, eta: x * eta,
                  gradient=lambda x, eta: (np.asarray(eta, dtype=float),
                                           np.asarray(x, dtype=float)),
                  hessian=lambda x, eta: ((0.0, 1.0), (1.0, 0.0)))
    with pytest.raises(ValueError):
        gf.Phase(smoothness_order=0.3, **kwargs)
    with pytest.raises(ValueError):
        gf.Phase(smoothness_constant=0.0, **kwargs)


def test_symbol_rejects_negative_weight():
    with pytest.raises(ValueError):
        gf.Symbol(value=lambda x, eta: np.ones_like(x), weight_exponent=-1.0)


def test_operator_kind_validation():
    with pytest.raises(ValueError):
        gf.FioOperator(phase=linear_phase(), symbol=gf.unit_symbol(),
                       kind="pseudodifferential")
    with pytest.raises(ValueError):
        gf.FioOperator(phase=linear_phase(), symbol=gf.unit_symbol(),
                       kind="multiplier")


def test_multiplier_apply_guards_kind(grid):
    f = centered_gaussian(grid, 2.0)
    with pytest.raises(ValueError):
        gf.multiplier_apply(gf.identity_operator(), f)


def test_nondegeneracy_guard():
    flat = gf.FioOperator(
        phase=gf.Phase(
            value=lambda x, eta: 0.5 * np.asarray(x, dtype=float) ** 2
            + 0.0 * np.asarray(eta, dtype=float),
            gradient=lambda x, eta: (np.asarray(x, dtype=float),
                                     np.zeros_like(np.asarray(eta, dtype=float))),
            hessian=lambda x, eta: ((1.0, 0.0), (0.0, 0.0))),
        symbol=gf.unit_symbol(), name="flat")
    with pytest.raises(gf.HypothesisError) as err:
        gf.ensure_nondegenerate(flat)
    assert err.value.min_det == 0.0


# --------------------------------------------------------------- apply

def test_identity_apply(grid):
    f = centered_gaussian(grid, 2.0)
    out = gf.apply(gf.identity_operator(), f)
    assert rel_error(out, f) <= 1e-10


def test_multiplier_preserves_magnitude_and_norm(grid):
    f = centered_gaussian(grid, 2.0)
    op = gf.parse_operator("multiplier:cos")
    exact = gf.multiplier_apply(op, f)
    assert np.max(np.abs(np.abs(exact.values) - np.abs(f.values))) <= 1e-14
    assert abs(exact.norm() - f.norm()) <= 1e-12 * f.norm()


def test_multiplier_quadrature_matches_shortcut(grid):
    f = centered_gaussian(grid, 2.0)
    for name in ("multiplier:cos", "multiplier:poly:0.5"):
        op = gf.parse_operator(name)
        quad = gf.apply(op, f)
        exact = gf.multiplier_apply(op, f)
        assert rel_error(quad, exact) <= 1e-8, name


def test_apply_is_linear(grid):
    op = gf.parse_operator("harmonic:0.7853981633974483")
    f = centered_gaussian(grid, 2.0)
    g = gf.tf_shift(centered_gaussian(grid, 1.0), (0.5, -1.0))
    combo = gf.SampledSignal(grid, 2.0 * f.values - 1.5j * g.values)
    left = gf.apply(op, combo)
    right = 2.0 * gf.apply(op, f).values - 1.5j * gf.apply(op, g).values
    assert (np.linalg.norm(left.values - right)
            <= 1e-10 * np.linalg.norm(right))


# --------------------------------------------------------- canonical map

def test_canonical_map_identity():
    pts = _random_points()
    out = gf.canonical_map(gf.identity_operator(), pts)
    np.testing.assert_allclose(out, pts, atol=1e-12)


def test_canonical_map_shears_frequency_for_multipliers():
    op = gf.parse_operator("multiplier:poly:0.5")
    pts = _random_points()
    out = gf.canonical_map(op, pts)
    np.testing.assert_allclose(out[:, 0], pts[:, 0], atol=1e-12)
    # phi(x) = 0.5 x^2 shears eta by phi'(y) = y.
    np.testing.assert_allclose(out[:, 1], pts[:, 1] + pts[:, 0], atol=1e-9)


def test_canonical_map_newton_matches_closed_forms():
    pts = _random_points()
    for name in gf.shipped_operator_names():
        op = gf.parse_operator(name)
        x, xi = op.closed_map(pts[:, 0], pts[:, 1])
        gap = np.max(np.abs(gf.canonical_map(op, pts)
                            - np.column_stack([x, xi])))
        assert gap <= 1e-9, f"{name}: {gap:.3e}"


def test_canonical_map_is_symplectic():
    # Finite-difference Jacobian of chi has unit symplectic form.
    h = 1e-5
    j_form = np.array([[0.0, 1.0], [-1.0, 0.0]])
    for name in ("multiplier:cos", "harmonic:0.7853981633974483"):
        op = gf.parse_operator(name)
        for y, eta in [(0.3, -1.2), (-2.0, 0.4), (1.1, 2.2)]:
            px = gf.canonical_map(op, [(y + h, eta), (y - h, eta)])
            pe = gf.canonical_map(op, [(y, eta + h), (y, eta - h)])
            jac = np.column_stack([(px[0] - px[1]) / (2 * h),
                                   (pe[0] - pe[1]) / (2 * h)])
            defect = jac.T @ j_form @ jac - j_form
            assert np.max(np.abs(defect)) <= 1e-6, name


def test_canonical_map_budget_exhaustion_reports_iterate():
    op = gf.parse_operator("metaplectic:dilation:2.0")
    with pytest.raises(gf.SolverError) as err:
        gf.canonical_map(op, [(2.0, 1.0)], max_iterations=0)
    assert err.value.residual is not None and err.value.residual > 0
    assert err.value.last_iterate is not None


# ----------------------------------------------------------- hypotheses

def test_validate_hypotheses_identity():
    report = gf.validate_hypotheses(gf.identity_operator())
    assert report["operator"] == "identity"
    assert report["min_mixed_hessian"] == 1.0
    assert report["nondegenerate"] is True
    assert report["symbol_weight_exponent"] == 0.0
    assert abs(report["symbol_weight_constant"] - 1.0) <= 1e-12


def test_validate_hypotheses_cos_multiplier():
    report = gf.validate_hypotheses(gf.parse_operator("multiplier:cos"))
    assert report["min_mixed_hessian"] == 1.0
    assert report["nondegenerate"] is True


def test_validate_hypotheses_metaplectic_blocks():
    # The mixed phase Hessian of a linear-map operator is 1/a.
    cases = {
        "metaplectic:chirp:1.0": (1.0, 1.0),
        "metaplectic:dilation:2.0": (0.5, 2.0 ** -0.5),
        "harmonic:0.7853981633974483": (2.0 ** 0.5, 2.0 ** 0.25),
    }
    for name, (mixed, constant) in cases.items():
        report = gf.validate_hypotheses(gf.parse_operator(name))
        assert abs(report["min_mixed_hessian"] - mixed) <= 1e-9, name
        assert abs(report["symbol_weight_constant"] - constant) <= 1e-9, name
