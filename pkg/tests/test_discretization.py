import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fraclab import constants as C
from fraclab import discretization as D
from fraclab.errors import ArgumentError, DomainError


@pytest.fixture(scope="module")
def op256():
    return D.assemble_operator(D.build_grid(1.0, 256), 0.25)


def test_build_grid():
    g = D.build_grid(1.0, 3)
    assert g.h == 0.5
    assert np.allclose(g.nodes, [-0.5, 0.0, 0.5])
    for R, n in ((0.0, 8), (1.0, 2), (1.0, 4.5)):
        with pytest.raises(ArgumentError):
            D.build_grid(R, n)


def test_field_shape_and_csv():
    g = D.build_grid(2.0, 3)
    with pytest.raises(ArgumentError):
        D.DiscreteField(g, np.zeros(4))
    text = D.DiscreteField(g, [1.0, 2.5, 1 / 3]).to_csv()
    assert text.splitlines() == ["x,u", "-1,1", "0,2.5", "1,0.333333333333"]


def test_order_rejected():
    g = D.build_grid(1.0, 8)
    for s in (0.0, 1.0, -0.2):
        with pytest.raises(DomainError):
            D.assemble_operator(g, s)
        with pytest.raises(DomainError):
            D.gagliardo_matrix(g, s)


@pytest.mark.parametrize("s", [0.1, 0.25, 0.4, 0.75])
@pytest.mark.parametrize("n", [16, 64, 200])
def test_operator_symmetric_positive(s, n):
    L = D.assemble_operator(D.build_grid(1.0, n), s).matrix
    assert np.max(np.abs(L - L.T)) <= 1e-12 * np.max(np.abs(L))
    assert np.linalg.eigvalsh(L)[0] > 0


def test_kernel_factor_scales_linearly():
    g = D.build_grid(1.0, 32)
    a = D.assemble_operator(g, 0.3).matrix
    b = D.assemble_operator(g, 0.3, kernel_factor=1.0).matrix
    assert np.allclose(a, 2 * b, rtol=1e-15, atol=0)


def test_apply_operator(op256):
    g = op256.grid
    rng = np.random.default_rng(3)
    u, v = rng.standard_normal((2, g.n))
    zero = D.apply_operator(op256, D.zero_field(g)).values
    assert not np.any(zero)
    lhs = D.apply_operator(op256, D.DiscreteField(g, 2.5 * u - 0.7 * v)).values
    rhs = 2.5 * (op256.matrix @ u) - 0.7 * (op256.matrix @ v)
    assert np.max(np.abs(lhs - rhs)) <= 1e-12 * np.max(np.abs(rhs))
    with pytest.raises(ArgumentError):
        D.apply_operator(op256, D.zero_field(D.build_grid(1.0, 64)))


def _interior_error(s, n):
    g = D.build_grid(1.0, n)
    u = D.solve_torsion(D.assemble_operator(g, s))
    exact = D.torsion_profile(g, s)
    mid = np.abs(g.nodes) <= 0.5
    return float(np.max(np.abs(u.values - exact.values)[mid]))


@pytest.mark.parametrize("s", [0.25, 0.4])
def test_torsion_refinement(s):
    errs = [_interior_error(s, n) for n in (64, 128, 256)]
    assert errs[0] > errs[1] > errs[2]
    assert errs[0] / errs[1] >= 1.3 and errs[1] / errs[2] >= 1.3


def test_torsion_residual_shrinks():
    res = []
    for n in (64, 128, 256):
        g = D.build_grid(1.0, n)
        L = D.assemble_operator(g, 0.25)
        r = L.matrix @ D.torsion_profile(g, 0.25).values - 1.0
        res.append(np.max(np.abs(r[np.abs(g.nodes) <= 0.5])))
    assert res[0] > res[1] > res[2]


def test_torsion_solution_even_positive(op256):
    u = D.solve_torsion(op256).values
    assert np.all(u > 0)
    assert np.max(np.abs(u - u[::-1])) <= 1e-10 * np.max(u)


def test_torsion_s_half_norms():
    g = D.build_grid(1.0, 512)
    u = D.torsion_profile(g, 0.5)
    assert D.lp_norm(u, 1.0) == pytest.approx(0.25, rel=5e-3)
    assert D.gagliardo_seminorm_sq(u, 0.5) == pytest.approx(0.25, rel=1e-2)


def test_lp_norm_basics():
    g = D.build_grid(1.0, 32)
    assert D.lp_norm(D.zero_field(g), 2.0) == 0.0
    with pytest.raises(DomainError):
        D.lp_norm(D.zero_field(g), 0.5)
    # trapezoid with zero end values is exact on the hat of the middle node
    e = np.zeros(g.n)
    e[10] = 1.0
    assert D.lp_norm(D.DiscreteField(g, e), 1.0) == pytest.approx(g.h)


@settings(max_examples=30)
@given(st.floats(min_value=-50, max_value=50).filter(lambda c: c == 0 or abs(c) > 1e-30),
       st.floats(min_value=1.0, max_value=6.0))
def test_lp_norm_homogeneity(c, nu):
    g = D.build_grid(1.0, 40)
    u = D.DiscreteField(g, np.sin(np.linspace(0, 3, g.n)))
    assert D.lp_norm(u.with_values(c * u.values), nu) == pytest.approx(
        abs(c) * D.lp_norm(u, nu), rel=1e-12
    )


def test_gagliardo_zero_and_scaling():
    g = D.build_grid(1.0, 64)
    assert D.gagliardo_seminorm_sq(D.zero_field(g), 0.3) == 0.0
    u = D.torsion_profile(g, 0.3)
    base = D.gagliardo_seminorm_sq(u, 0.3)
    for c in (-3.0, 0.01, 7.5):
        assert D.gagliardo_seminorm_sq(u.with_values(c * u.values), 0.3) == pytest.approx(
            c * c * base, rel=1e-12
        )


# Entries of S for hats on the grid R=1, n=3 (h = 1/2). Oracle:
# [phi_i, phi_j] = (1/pi) int |xi|^{2s} phi_i^(xi) conj(phi_j^(xi)) dxi
# times 2/C(1,s), with the hat transform h sinc^2(xi h/2) e^{-i xi x}, by
# mpmath oscillatory quadrature.
_FOURIER = {
    0.3: {(1, 1): 4.8043991203, (1, 2): -0.2735138879, (0, 2): -0.6402575139},
    0.75: {(1, 1): 11.78201759, (1, 2): -4.43551821, (0, 2): -0.93545237},
}


@pytest.mark.parametrize("s,tol", [(0.3, 1e-5), (0.75, 1e-3)])
def test_gagliardo_matrix_fourier_oracle(s, tol):
    S = D.gagliardo_matrix(D.build_grid(1.0, 3), s)
    for (i, j), want in _FOURIER[s].items():
        assert S[i, j] == pytest.approx(want, rel=tol)


def test_gagliardo_matrix_symmetric():
    S = D.gagliardo_matrix(D.build_grid(1.0, 50), 0.35)
    assert np.allclose(S, S.T, rtol=0, atol=1e-13 * np.max(np.abs(S)))
    assert np.linalg.eigvalsh(S)[0] > 0


def test_consistency_profiles(op256):
    g = op256.grid
    x = g.nodes
    bank = [
        D.torsion_profile(g, 0.25),
        D.DiscreteField(g, (1 - x**2) ** 2),
        D.DiscreteField(g, np.cos(np.pi * x / 2)),
        D.DiscreteField(g, np.exp(-8 * x**2) - math.exp(-8)),
        D.DiscreteField(g, x * (1 - x**2)),
    ]
    for u in bank:
        assert D.operator_seminorm_consistency(u, op256, 0.25) < 5e-2
    assert D.operator_seminorm_consistency(D.zero_field(g), op256, 0.25) == 0.0
    with pytest.raises(ArgumentError):
        D.operator_seminorm_consistency(bank[0], op256, 0.3)


def test_consistency_gap_shrinks():
    gaps = []
    for n in (64, 128, 256):
        g = D.build_grid(1.0, n)
        u = D.DiscreteField(g, (1 - g.nodes**2) ** 2)
        gaps.append(D.operator_seminorm_consistency(u, D.assemble_operator(g, 0.25), 0.25))
    assert gaps[0] > gaps[1] > gaps[2]


def test_torsion_quadratic_form_matches_closed_form():
    g = D.build_grid(1.0, 512)
    L = D.assemble_operator(g, 0.25)
    u = D.solve_torsion(L)
    want = C.torsion_lp_norm(C.FracParams(1, 0.25), 1.0, 1.0)
    assert D.lp_norm(u, 1.0) == pytest.approx(want, rel=1e-2)
    assert L.quad_form(u.values) == pytest.approx(want, rel=1e-2)
