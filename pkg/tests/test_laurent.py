import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from varpole.laurent import (
    ContourError,
    ConvergenceError,
    LaurentExpansion,
    ReconstructionError,
    annihilation_check,
    contour_coefficients,
    growth_exponent,
    toeplitz_reconstruct,
    verify_fundamental_identities,
)
from varpole.matpoly import MatrixPolynomial, evaluate, from_var
from varpole.polecore import detect_pole_order, leading_matrix
from varpole.simkit import SmithSpec, generate_smith_model, random_degrees

PAIR = from_var([[[0.5, 0.5], [0.5, 0.5]]])


def scalar(*c):
    return MatrixPolynomial(np.array(c, dtype=float).reshape(-1, 1, 1))


def diag_poly(a, b):
    """diag(a(z), b(z)) for coefficient lists of equal length."""
    k = max(len(a), len(b))
    C = np.zeros((k, 2, 2))
    C[: len(a), 0, 0] = a
    C[: len(b), 1, 1] = b
    return MatrixPolynomial(C)


RW = scalar(1, -1)
AR = scalar(1, -0.5)


@st.composite
def smith_models(draw, n_max=4, top_max=4):
    n = draw(st.integers(2, n_max))
    top = draw(st.integers(1, top_max))
    seed = draw(st.integers(0, 2**16))
    degs = random_degrees(n, top, np.random.default_rng(seed))
    P, m = generate_smith_model(SmithSpec(n, degs, seed=seed))
    return P, m


# -- contour examples -------------------------------------------------------------

def test_random_walk_contour():
    exp = contour_coefficients(RW, j_min=-3, j_max=2, radius=0.1)
    assert exp.m == 1
    assert exp.coefficient(-1)[0, 0] == pytest.approx(-1.0, abs=1e-12)
    assert abs(exp.coefficient(0)[0, 0]) < 1e-12
    assert abs(exp.coefficient(1)[0, 0]) < 1e-12
    assert abs(exp.coefficient(-2)[0, 0]) < 1e-12


def test_stationary_ar_contour():
    exp = contour_coefficients(AR, j_min=-2, j_max=1, radius=0.1)
    assert exp.m == 0
    assert exp.principal == []
    assert exp.coefficient(0)[0, 0] == pytest.approx(2.0, abs=1e-12)
    assert exp.coefficient(1)[0, 0] == pytest.approx(2.0, abs=1e-12)


def test_blockwise_contour():
    P = diag_poly([1, -1], [1, -0.5])
    exp = contour_coefficients(P, j_min=-2, j_max=1, radius=0.1)
    assert exp.m == 1
    np.testing.assert_allclose(exp.coefficient(-1), np.diag([-1.0, 0.0]), atol=1e-12)
    np.testing.assert_allclose(exp.coefficient(0), np.diag([0.0, 2.0]), atol=1e-12)


def test_contour_reports_metadata():
    exp = contour_coefficients(RW, radius=0.2, nodes=64)
    assert exp.radius == 0.2
    assert exp.nodes >= 128 and exp.nodes & (exp.nodes - 1) == 0
    assert exp.change_on_doubling <= 1e-10
    assert exp.j_min == -5 and exp.j_max == 4


def test_coefficient_range():
    exp = contour_coefficients(RW, j_min=-1, j_max=1, radius=0.1)
    np.testing.assert_array_equal(exp.coefficient(-4), np.zeros((1, 1)))
    with pytest.raises(IndexError):
        exp.coefficient(2)


# -- contour errors -------------------------------------------------------------

def test_contour_through_root():
    # det roots at 1 and 2; |z - 1| = 1 passes through 2
    P = diag_poly([1, -1], [1, -0.5])
    with pytest.raises(ContourError, match="smaller radius"):
        contour_coefficients(P, radius=1.0, nodes=64)


def test_convergence_error():
    # root at 1.25 sits just outside rho = 0.24, so the integrand converges slowly
    P = diag_poly([1, -1], [1, -0.8])
    with pytest.raises(ConvergenceError):
        contour_coefficients(P, radius=0.24, nodes=64, max_nodes=128)


@pytest.mark.parametrize("kw", [dict(nodes=100), dict(nodes=32), dict(radius=0.0),
                                dict(radius=-0.1), dict(j_min=2, j_max=1)])
def test_contour_invalid_arguments(kw):
    with pytest.raises(ValueError):
        contour_coefficients(RW, **kw)


# -- toeplitz reconstruction ----------------------------------------------------

def test_toeplitz_random_walk():
    rec = toeplitz_reconstruct(RW, 1, q=1)
    np.testing.assert_allclose(rec.coeffs[:, 0, 0], [-1.0, 0.0, 0.0], atol=1e-12)
    assert rec.residual < 1e-12


def test_toeplitz_double_root():
    # h = 0..2 only fix N_-2 = 1 (A^(0) = A^(1) = 0), so q = 0 is rank deficient
    with pytest.raises(ReconstructionError, match="increase q"):
        toeplitz_reconstruct(scalar(1, -2, 1), 2, q=0)
    rec = toeplitz_reconstruct(scalar(1, -2, 1), 2, q=1)
    np.testing.assert_allclose(rec.coeffs[:3, 0, 0], [1.0, 0.0, 0.0], atol=1e-12)


def test_toeplitz_stationary_is_taylor():
    P = from_var([[[0.3, 0.1], [-0.2, 0.4]], [[0.1, 0.0], [0.05, -0.1]]])
    rec = toeplitz_reconstruct(P, 0, q=3)
    exp = contour_coefficients(P, j_min=0, j_max=3)
    np.testing.assert_allclose(rec.coeffs, exp.coeffs, atol=1e-10)
    assert rec.principal == []


def test_toeplitz_default_q():
    rec = toeplitz_reconstruct(RW, 1)
    assert rec.q == 1 and len(rec.regular) == 2


def test_toeplitz_rejects_negative():
    with pytest.raises(ValueError):
        toeplitz_reconstruct(RW, -1)


@settings(max_examples=25)
@given(smith_models())
def test_toeplitz_matches_oracle(model):
    P, m = model
    rec = toeplitz_reconstruct(P, m)
    exp = contour_coefficients(P, j_min=-m, j_max=0)
    a = np.stack(rec.principal)
    b = np.stack(exp.with_pole_order(m).principal)
    assert np.linalg.norm(a - b) <= 1e-7 * np.linalg.norm(b)


# -- fundamental identities -----------------------------------------------------

def test_identities_random_walk():
    exp = contour_coefficients(RW, j_min=-2, j_max=3, radius=0.1)
    res = verify_fundamental_identities(exp, RW, h_max=4)
    assert res.h == [0, 1, 2, 3, 4]
    assert res.max_relative < 1e-10 and res.ok


def test_identities_detect_corruption():
    exp = contour_coefficients(RW, j_min=-2, j_max=3, radius=0.1)
    bad = exp.coeffs.copy()
    bad[-1 - exp.j_min] += 0.1
    bexp = LaurentExpansion(1, exp.j_min, bad, exp.radius, exp.nodes, exp.imag_leak)
    res = verify_fundamental_identities(bexp, RW, h_max=4)
    assert res.left[0] == pytest.approx(0.0, abs=1e-12)
    assert res.left[1] == pytest.approx(0.1, rel=1e-9)
    assert res.right[1] == pytest.approx(0.1, rel=1e-9)
    assert not res.ok


def test_identities_stationary():
    exp = contour_coefficients(AR, j_min=0, j_max=4, radius=0.1)
    res = verify_fundamental_identities(exp, AR)
    assert res.h[-1] == 4
    assert res.max_relative < 1e-10


def test_identities_range_check():
    exp = contour_coefficients(RW, j_min=-1, j_max=1, radius=0.1)
    with pytest.raises(ValueError):
        verify_fundamental_identities(exp, RW, h_max=5)


# -- annihilation ---------------------------------------------------------------

def test_annihilation_pair():
    exp = contour_coefficients(PAIR, j_min=-2, j_max=1)
    P1 = 0.5 * np.array([[1.0, -1.0], [-1.0, 1.0]])
    v = annihilation_check(P1, exp)
    assert v.ok and v.max_residual < 1e-12


def test_annihilation_random_walk_trivial():
    exp = contour_coefficients(RW, radius=0.1)
    assert annihilation_check(np.zeros((1, 1)), exp).max_residual == 0.0


def test_annihilation_negative_control():
    exp = contour_coefficients(PAIR)
    v = annihilation_check(np.eye(2), exp)
    assert not v.ok and v.max_residual == pytest.approx(1.0)


def test_annihilation_needs_pole():
    with pytest.raises(ValueError):
        annihilation_check(np.eye(1), contour_coefficients(AR))


# -- invariants -----------------------------------------------------------------

@settings(max_examples=30)
@given(smith_models())
def test_node_doubling_and_leak(model):
    P, m = model
    exp = contour_coefficients(P)
    assert exp.m == m
    assert exp.change_on_doubling < 1e-10
    assert exp.imag_leak <= 1e-9


@settings(max_examples=30)
@given(smith_models())
def test_radius_invariance(model):
    P, m = model
    a = contour_coefficients(P, j_min=-m, j_max=2)
    b = contour_coefficients(P, j_min=-m, j_max=2, radius=a.radius / 2)
    scale = np.max(np.linalg.norm(a.coeffs, axis=(1, 2)))
    assert np.max(np.linalg.norm(a.coeffs - b.coeffs, axis=(1, 2))) < 1e-8 * scale


@settings(max_examples=30)
@given(smith_models())
def test_oracle_matches_closed_form(model):
    P, m = model
    exp = contour_coefficients(P, j_min=-m, j_max=0)
    N = leading_matrix(P, detect_pole_order(P))
    assert np.linalg.norm(exp.coefficient(-m) - N) <= 1e-8 * np.linalg.norm(N)


@settings(max_examples=20)
@given(smith_models(n_max=3))
def test_reconstructs_inverse_on_contour(model):
    P, m = model
    exp = contour_coefficients(P, j_min=-m, j_max=16)
    # a circle well inside the contour, where the truncated series has converged
    for t in np.linspace(0, 2 * np.pi, 7, endpoint=False):
        z = 1 + 0.25 * exp.radius * np.exp(1j * t)
        direct = np.linalg.inv(evaluate(P, z))
        assert np.linalg.norm(exp.evaluate(z) - direct) <= 1e-8 * np.linalg.norm(direct)


@settings(max_examples=20)
@given(smith_models())
def test_identities_on_generated(model):
    P, m = model
    exp = contour_coefficients(P, j_min=-m - 1, j_max=m)
    assert verify_fundamental_identities(exp, P, h_max=2 * m).max_relative <= 1e-8


def test_growth_exponent():
    assert growth_exponent(RW) == pytest.approx(1.0, abs=1e-6)
    assert growth_exponent(scalar(1, -2, 1)) == pytest.approx(2.0, abs=1e-6)
    assert abs(growth_exponent(AR)) < 1e-2
    with pytest.raises(ValueError):
        growth_exponent(RW, radii=(1e-3, 1e-2))
