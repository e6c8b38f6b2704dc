import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fraclab import constants as C
from fraclab.errors import DomainError

# reference values below were computed once with mpmath at 40 digits


def test_gamma_exact_values():
    assert C.gamma_fn(0.5) == pytest.approx(math.sqrt(math.pi), rel=1e-15)
    assert C.gamma_fn(5) == pytest.approx(24.0, rel=1e-15)


def test_gamma_against_mpmath():
    # mpmath.gamma('1.75')
    assert C.gamma_fn(1.75) == pytest.approx(0.9190625268488832338468237275, rel=1e-14)


@pytest.mark.parametrize("x", [0.0, -1.0, -0.5])
def test_gamma_rejects_nonpositive(x):
    with pytest.raises(DomainError):
        C.gamma_fn(x)


@given(st.floats(min_value=0.1, max_value=30.0))
def test_gamma_recurrence(x):
    assert abs(C.gamma_fn(x + 1) - x * C.gamma_fn(x)) / C.gamma_fn(x + 1) <= 1e-12


def test_fracparams_validation():
    assert C.FracParams(1, 0.25).crit_exp == pytest.approx(4.0)
    with pytest.raises(DomainError):
        C.FracParams(2, 1.0)
    with pytest.raises(DomainError):
        C.FracParams(1, 0.5)
    with pytest.raises(DomainError):
        C.FracParams(0, 0.3)


def test_domain_spec_invariants():
    d = C.DomainSpec.interval(2.0)
    assert (d.measure, d.inradius) == (4.0, 2.0)
    assert C.DomainSpec.ball(2, 1.0).measure == pytest.approx(math.pi)
    with pytest.raises(DomainError):
        C.DomainSpec("interval", 1.0, 3.0, 1.0)
    with pytest.raises(DomainError):
        C.DomainSpec("general", 1.0, 3.0, 2.0)


def test_power_reaction():
    r = C.PowerReaction(((1.0, 3.0),))
    assert float(r.f(2.0)) == pytest.approx(4.0)
    assert float(r.F(2.0)) == pytest.approx(8.0 / 3.0)
    assert float(r.f(-1.0)) == 0.0 and float(r.F(-1.0)) == 0.0
    with pytest.raises(DomainError):
        C.PowerReaction(((-1.0, 3.0),))
    with pytest.raises(DomainError, match="growth bound"):
        C.PowerReaction(((1.0, 4.5),)).check_growth(C.FracParams(1, 0.25))


def test_talenti_example_value():
    T = C.talenti_constant(C.FracParams(2, 0.5))
    assert T == pytest.approx(1 / (2 * math.pi**0.75), rel=1e-13)
    assert T == pytest.approx(0.2118886040618787983955, rel=1e-13)


def test_talenti_one_quarter():
    assert C.talenti_constant(C.FracParams(1, 0.25)) == pytest.approx(
        0.3431063137796630785946, rel=1e-13
    )


def test_torsion_amplitude_values():
    assert C._torsion_amp(1, 0.5) == pytest.approx(1 / (2 * math.pi), rel=1e-14)
    assert C.torsion_amplitude(C.FracParams(3, 0.6)) == pytest.approx(
        0.02409054298544581507193, rel=1e-13
    )


@given(st.floats(min_value=0.01, max_value=0.49))
def test_torsion_amplitude_reflection(s):
    want = math.sin(math.pi * s) / (2 * math.pi)
    assert abs(C.torsion_amplitude(C.FracParams(1, s)) - want) <= 1e-12 * want


def test_normalization_constant():
    # Gamma(1/2 + s) cancels Gamma(1 - s) at s = 1/4
    assert C.normalization_constant(C.FracParams(1, 0.25)) == pytest.approx(
        0.25 * math.sqrt(2 / math.pi), rel=1e-14
    )
    assert C.normalization_constant(C.FracParams(2, 0.5)) == pytest.approx(
        0.1591549430918953357688, rel=1e-13
    )
    assert C.normalization_constant(C.FracParams(4, 0.9)) == pytest.approx(
        0.06099286408690747362585, rel=1e-13
    )


def test_torsion_norms():
    # s = 1/2 on (-1, 1): u = (1 - x^2)^(1/2) / (2 pi), ||u||_1 = 1/4
    assert C._torsion_lp(1, 0.5, 1.0, 1.0) == pytest.approx(0.25, rel=1e-14)
    assert C._torsion_semi_sq(1, 0.5, 1.0) == pytest.approx(0.25, rel=1e-14)
    p = C.FracParams(1, 0.25)
    # 1-D quadrature of A^2 (1 - x^2)^(2s) on (-1, 1)
    assert C.torsion_lp_norm(C.FracParams(1, 0.25), 1.0, 2.0) == pytest.approx(
        0.1410473958869390717370, rel=1e-12
    )
    # radial quadrature 2 pi int_0^2 A^3 (4 - r^2)^(3/2) r dr, cube root
    assert C.torsion_lp_norm(C.FracParams(2, 0.5), 2.0, 3.0) == pytest.approx(
        0.1735628900384245157634, rel=1e-12
    )
    with pytest.raises(DomainError):
        C.torsion_lp_norm(p, 1.0, 0.5)


def test_torsion_seminorm_fourier_oracle():
    # [u]^2 = (2 / C(1,s)) (1 / 2 pi) int |xi|^{2s} |u^(xi)|^2 with the Bessel
    # transform of (1 - x^2)_+^s, oscillatory quadrature to ~1e-8
    semi_sq = C.torsion_seminorm(C.FracParams(1, 0.25), 1.0) ** 2
    assert semi_sq == pytest.approx(0.19672343441500984, rel=1e-7)


@settings(max_examples=60)
@given(
    st.sampled_from([1, 2, 3]),
    st.floats(min_value=0.05, max_value=0.49),
    st.floats(min_value=0.1, max_value=5.0),
)
def test_torsion_identity(N, s, R):
    p = C.FracParams(N, s)
    a = C.torsion_seminorm(p, R) ** 2
    b = C.torsion_lp_norm(p, R, 1.0)
    assert abs(a - b) <= 1e-12 * b


# ---------------------------------------------------------------------------
# subcritical thresholds


def test_lambda_star_against_maximisation_oracle():
    # lambda* = max_r r / (A r^{p/2} + B r^{q/2}); found with mpmath.findroot
    p = C.FracParams(1, 0.4)
    d = C.DomainSpec.interval(1.0)
    assert C.lambda_star_subcritical(p, d, 1.0, 1.5, 1.0, 3.0) == pytest.approx(
        0.9954534125296747108963, rel=1e-12
    )
    assert C.radius_subcritical(p, d, 1.0, 1.5, 1.0, 3.0) == pytest.approx(
        1.990906825059349396216, rel=1e-12
    )


def test_lambda_star_generic():
    p = C.FracParams(3, 0.7)
    d = C.DomainSpec("general", 2.0, 4.2, 1.0)
    assert C.lambda_star_subcritical(p, d, 0.8, 1.3, 2.5, 3.1) == pytest.approx(
        11.95780660449149233500, rel=1e-12
    )
    assert C.radius_subcritical(p, d, 0.8, 1.3, 2.5, 3.1) == pytest.approx(
        30.01560810534908868544, rel=1e-12
    )


def test_example_thresholds():
    p = C.FracParams(2, 0.5)
    d = C.DomainSpec("general", 3.0, 6 * math.pi, 2.0)
    mu = C.mu_star_subcritical(p, d, 1.5, 3.0)
    assert mu == pytest.approx(2**0.75 * math.pi**1.5 / 3**0.75, rel=1e-13)
    assert C.radius_subcritical(p, d, 1.0, 1.5, 1.0, 3.0) == pytest.approx(
        48.35098949159219030579, rel=1e-12
    )
    for m in (0.5 * mu, 0.99 * mu):
        assert C.lambda_star_subcritical(p, d, m, 1.5, 1.0, 3.0) > 1
    for m in (1.01 * mu, 2 * mu):
        assert C.lambda_star_subcritical(p, d, m, 1.5, 1.0, 3.0) < 1


def test_mu_star_subcritical_generic():
    # root of lambda*(mu, 1) = 1 by mpmath.findroot
    p = C.FracParams(3, 0.7)
    d = C.DomainSpec("general", 2.0, 4.2, 1.0)
    assert C.mu_star_subcritical(p, d, 1.3, 3.1) == pytest.approx(83.12933503397943984, rel=1e-11)


def test_subcritical_ordering_errors():
    p = C.FracParams(1, 0.4)
    d = C.DomainSpec.interval(1.0)
    with pytest.raises(DomainError):
        C.lambda_star_subcritical(p, d, 1.0, 2.5, 1.0, 3.0)
    with pytest.raises(DomainError):
        C.mu_star_subcritical(p, d, 1.0, 3.0)
    with pytest.raises(DomainError, match="near-degenerate"):
        C.radius_subcritical(p, d, 1.0, 1.5, 1.0, 2.0 + 1e-12)


_admissible = st.tuples(
    st.sampled_from([1, 2, 3]),
    st.floats(min_value=0.05, max_value=0.45),
    st.floats(min_value=1.0, max_value=1.95),
    st.floats(min_value=0.05, max_value=0.95),
    st.floats(min_value=0.5, max_value=3.0),
)


def _tuple(N, s, p_exp, qfrac, R):
    par = C.FracParams(N, s)
    q = 2.05 + qfrac * (min(par.crit_exp, 12.0) - 2.1)
    return par, C.DomainSpec.ball(N, R), p_exp, q


@given(_admissible, st.floats(min_value=0.01, max_value=100.0),
       st.floats(min_value=0.1, max_value=10), st.floats(min_value=0.1, max_value=10))
def test_lambda_star_homogeneity(t, c, a_p, a_q):
    par, d, p, q = _tuple(*t)
    base = C.lambda_star_subcritical(par, d, a_p, p, a_q, q)
    scaled = C.lambda_star_subcritical(par, d, c * a_p, p, c * a_q, q)
    assert abs(scaled * c - base) <= 1e-12 * base


@given(_admissible, st.floats(min_value=0.01, max_value=100.0))
def test_radius_depends_on_ratio_only(t, c):
    par, d, p, q = _tuple(*t)
    r1 = C.radius_subcritical(par, d, 1.3, p, 0.7, q)
    r2 = C.radius_subcritical(par, d, 1.3 * c, p, 0.7 * c, q)
    assert abs(r1 - r2) <= 1e-12 * r1


@given(_admissible, st.floats(min_value=-1.0, max_value=1.0))
def test_threshold_equivalence(t, logm):
    par, d, p, q = _tuple(*t)
    if p <= 1.0:
        p = 1.01
    mu_star = C.mu_star_subcritical(par, d, p, q)
    mu = mu_star * math.exp(logm)
    lam = C.lambda_star_subcritical(par, d, mu, p, 1.0, q)
    if abs(lam - 1) > 1e-10:
        assert np.sign(lam - 1) == np.sign(mu_star - mu)


def test_radius_diverges_near_q_two():
    p = C.FracParams(1, 0.4)
    d = C.DomainSpec.interval(1.0)
    vals = [C.radius_subcritical(p, d, 1.0, 1.5, 1.0, 2 + eps) for eps in (1e-1, 1e-2, 1e-3)]
    assert vals[0] < vals[1] < vals[2]


# ---------------------------------------------------------------------------
# critical thresholds


def test_radius_critical_values():
    assert C.radius_critical(C.FracParams(1, 0.25)) == pytest.approx(6.013175983118897985, rel=1e-12)
    assert C.radius_critical(C.FracParams(2, 0.5)) == pytest.approx(41.34170224039976023, rel=1e-12)


@pytest.mark.parametrize("N,s", [(1, 0.25), (2, 0.5), (3, 0.8), (1, 0.1)])
def test_radius_critical_second_branch(N, s):
    p = C.FracParams(N, s)
    r = C.radius_critical(p)
    val = (s / (2 * N * r)) ** (2 * s / (N - 2 * s)) / C.talenti_constant(p) ** p.crit_exp
    assert val >= 1.5 ** (2 * s / (N - 2 * s)) * (1 - 1e-12)


def test_mu_star_critical():
    p = C.FracParams(1, 0.25)
    d = C.DomainSpec.interval(1.0)
    # 1 / (2 * mu-coefficient of the first branch at r_crit), mpmath
    assert C.mu_star_critical(p, d, 1.5) == pytest.approx(2.253086850789410456, rel=1e-12)
    assert C.mu_star_critical(p, d, 1.5, 4.0) == pytest.approx(C.mu_star_critical(p, d, 1.5) / 4)


@given(st.floats(min_value=0.001, max_value=0.999))
def test_first_branch_bound(frac):
    p = C.FracParams(1, 0.25)
    d = C.DomainSpec.interval(1.0)
    ms = C.mu_star_critical(p, d, 1.5)
    mu = frac * ms
    first, _ = C.lambda_r_star_branches(p, d, 1.5, 1.0, mu, C.radius_critical(p))
    assert 1 / first <= 0.5 + mu / (2 * ms) + 1e-12
    assert C.lambda_r_star(p, d, 1.5, 1.0, mu, C.radius_critical(p)) > 1


def test_lambda_r_star_limits_and_generic():
    p = C.FracParams(2, 0.5)
    d = C.DomainSpec("general", 3.0, 6 * math.pi, 2.0)
    T = C.talenti_constant(p)
    first, _ = C.lambda_r_star_branches(p, d, 1.5, 1.0, 1e-300, 3.0)
    assert 1 / first == pytest.approx(2**2 * T**4 * 3.0 / 4)
    assert C.lambda_r_star(p, d, 1.5, 1.0, 0.7, 3.0) == pytest.approx(2.698552673864774226, rel=1e-12)
    with pytest.raises(DomainError):
        C.lambda_r_star(p, d, 1.5, 1.0, 0.0, 3.0)


@settings(max_examples=80)
@given(st.sampled_from([1, 2, 3]), st.floats(min_value=0.05, max_value=0.45),
       st.floats(min_value=0.0, max_value=1.0), st.floats(min_value=0.001, max_value=0.999))
def test_critical_bundle(N, s, pfrac, mufrac):
    p = C.FracParams(N, s)
    p_exp = 1.01 + pfrac * (p.crit_exp - 1.02)
    d = C.DomainSpec.ball(N, 1.0)
    mu = mufrac * C.mu_star_critical(p, d, p_exp)
    assert C.lambda_r_star(p, d, p_exp, 1.0, mu, C.radius_critical(p)) > 1


def test_critical_level():
    p = C.FracParams(1, 0.25)
    assert C.critical_level(p) == pytest.approx(18.03952794935669396, rel=1e-12)
    assert C.critical_level(C.FracParams(2, 0.5)) == pytest.approx(124.0251067211992807, rel=1e-12)
    crit = p.crit_exp
    T = C.talenti_constant(p)
    alt = (0.5 - 1 / crit) * T ** (-2 * crit / (crit - 2))
    assert C.critical_level(p) == pytest.approx(alt, rel=1e-13)


# ---------------------------------------------------------------------------
# test-function scale


def test_testfn_scale():
    p = C.FracParams(1, 0.4)
    d = C.DomainSpec.interval(1.0)
    r, K, eps = 1.99, 5.0, 0.01
    b1, b2 = C.testfn_scale_bounds(p, d, r, eps)
    delta = C.testfn_scale(p, d, r, K, eps)
    assert delta == pytest.approx(0.99 * min(b1, b2))
    assert C.torsion_phi(p, d, delta) < r
    assert delta * C.torsion_amplitude(p) * d.inradius ** (2 * p.s) < eps
    with pytest.raises(DomainError):
        C.testfn_scale(p, d, -1.0, K, eps)


def test_threshold_bundle_fields():
    p = C.FracParams(1, 0.25)
    b = C.threshold_bundle(p, C.DomainSpec.interval(1.0), 1.5, 3.0, mu=1.0)
    vals = b.as_dict()
    assert all(v > 0 for v in vals.values())
    assert b.lambda_r_star > 1
    assert C.threshold_bundle(p).lambda_star is None
