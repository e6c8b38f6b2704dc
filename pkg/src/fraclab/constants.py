"""Closed-form constants and thresholds for (-Delta)^s u = lambda f(u).

Everything here is a pure function of its arguments. The fractional
Laplacian is normalised as ``2 P.V. int (u(x)-u(y)) |x-y|^{-N-2s} dy`` (no
C(N,s) factor); ``normalization_constant`` is only a converter to the
Fourier-normalised convention.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError

# exponent gaps below this make the threshold formulas blow up
DEGENERATE_GAP = 1e-9


def gamma_fn(x: float) -> float:
    """Gamma function on the positive real axis."""
    if not x > 0:
        raise DomainError(f"gamma_fn requires x > 0, got {x!r}")
    return math.gamma(x)


@dataclass(frozen=True)
class FracParams:
    """Space dimension ``N`` and fractional order ``s`` with ``N > 2s``."""

    N: int
    s: float

    def __post_init__(self):
        _check_order(self.s)
        if int(self.N) != self.N or self.N < 1:
            raise DomainError(f"N must be a positive integer, got {self.N!r}")
        if not self.N > 2 * self.s:
            raise DomainError(f"need N > 2s, got N={self.N}, s={self.s}")

    @property
    def crit_exp(self) -> float:
        """Fractional critical Sobolev exponent 2N/(N-2s)."""
        return 2.0 * self.N / (self.N - 2.0 * self.s)


def _check_order(s):
    if not 0.0 < s < 1.0:
        raise DomainError(f"fractional order s must lie in (0,1), got {s!r}")


@dataclass(frozen=True)
class DomainSpec:
    """Bounded domain summary: half-length / radius, measure, inradius.

    ``kind`` is ``"interval"`` (N=1, domain (-R, R)), ``"ball"`` or
    ``"general"``; the last only carries a measure and an inscribed radius,
    which is all the threshold formulas need.
    """

    kind: str
    R: float
    measure: float
    inradius: float

    def __post_init__(self):
        if self.kind not in ("interval", "ball", "general"):
            raise DomainError(f"unknown domain kind {self.kind!r}")
        if not (self.R > 0 and self.measure > 0 and self.inradius > 0):
            raise DomainError("R, measure and inradius must be positive")
        if self.inradius > self.R * (1 + 1e-14):
            raise DomainError("inradius cannot exceed R")
        if self.kind == "interval":
            if abs(self.measure - 2 * self.R) > 1e-14 * self.R or self.inradius != self.R:
                raise DomainError("interval requires measure = 2R and inradius = R")

    @classmethod
    def interval(cls, R: float = 1.0) -> "DomainSpec":
        return cls("interval", R, 2.0 * R, R)

    @classmethod
    def ball(cls, N: int, R: float = 1.0) -> "DomainSpec":
        vol = math.pi ** (N / 2) * R**N / math.gamma(N / 2 + 1)
        return cls("ball", R, vol, R)


@dataclass(frozen=True)
class PowerReaction:
    """Reaction ``f(t) = sum a (t^+)^(rho-1)`` with primitive ``sum a (t^+)^rho / rho``.

    ``terms`` is a sequence of ``(a, rho)`` pairs, ``a >= 0`` and ``rho > 1``.
    """

    terms: tuple

    def __post_init__(self):
        terms = tuple((float(a), float(rho)) for a, rho in self.terms)
        for a, rho in terms:
            if a < 0:
                raise DomainError(f"reaction coefficients must be >= 0, got {a}")
            if not rho > 1:
                raise DomainError(f"reaction exponents must exceed 1, got {rho}")
        object.__setattr__(self, "terms", terms)

    @property
    def max_exponent(self) -> float:
        return max(rho for _, rho in self.terms)

    def check_growth(self, params: FracParams, tol: float = 1e-12):
        crit = params.crit_exp
        for _, rho in self.terms:
            if rho > crit * (1 + tol):
                raise DomainError(
                    f"growth bound violated: exponent {rho} exceeds 2*_s = {crit:.12g}"
                )

    def f(self, t):
        tp = np.maximum(t, 0.0)
        out = np.zeros_like(tp, dtype=float)
        for a, rho in self.terms:
            out = out + a * tp ** (rho - 1.0)
        return out

    def F(self, t):
        tp = np.maximum(t, 0.0)
        out = np.zeros_like(tp, dtype=float)
        for a, rho in self.terms:
            out = out + a * tp**rho / rho
        return out

    def df(self, t):
        """Derivative of ``f`` for ``t > 0`` (zero for ``t <= 0``)."""
        t = np.asarray(t, dtype=float)
        out = np.zeros_like(t)
        pos = t > 0
        for a, rho in self.terms:
            out[pos] += a * (rho - 1.0) * t[pos] ** (rho - 2.0)
        return out


# ---------------------------------------------------------------------------
# Sobolev / torsion constants


def talenti_constant(p: FracParams) -> float:
    """Best constant T(N,s) in ||u||_{2*_s} <= T [u]_s."""
    N, s = p.N, p.s
    num = math.sqrt(s) * math.sqrt(gamma_fn((N - 2 * s) / 2)) * gamma_fn(N) ** (s / N)
    den = (
        math.sqrt(2.0)
        * math.pi ** ((N + 2 * s) / 4)
        * math.sqrt(gamma_fn(1 - s))
        * gamma_fn(N / 2) ** (s / N)
    )
    return num / den


def _torsion_amp(N: int, s: float) -> float:
    # valid for every s in (0,1); the public wrapper also enforces N > 2s
    _check_order(s)
    return (
        s * gamma_fn(N / 2)
        / (2 * math.pi ** (N / 2) * gamma_fn(1 + s) * gamma_fn(1 - s))
    )


def torsion_amplitude(p: FracParams) -> float:
    """Amplitude A(N,s) of the torsion function A (R^2 - |x|^2)_+^s."""
    return _torsion_amp(p.N, p.s)


def normalization_constant(p: FracParams) -> float:
    """C(N,s) of the Fourier-normalised fractional Laplacian.

    Conversion only: (-Delta)^s_Fourier = (C(N,s)/2) (-Delta)^s_here.
    """
    N, s = p.N, p.s
    return 2 ** (2 * s) * s * gamma_fn((N + 2 * s) / 2) / (math.pi ** (N / 2) * gamma_fn(1 - s))


def _torsion_lp(N: int, s: float, R: float, nu: float) -> float:
    if not R > 0:
        raise DomainError(f"R must be positive, got {R}")
    if not nu >= 1:
        raise DomainError(f"nu must be >= 1, got {nu}")
    inner = (
        math.pi ** (N / 2) * gamma_fn(1 + nu * s) * R ** (N + 2 * nu * s)
        / gamma_fn((N + 2 * nu * s + 2) / 2)
    )
    return _torsion_amp(N, s) * inner ** (1.0 / nu)


def torsion_lp_norm(p: FracParams, R: float, nu: float) -> float:
    """L^nu norm of the torsion function on the ball of radius R."""
    return _torsion_lp(p.N, p.s, R, nu)


def _torsion_semi_sq(N: int, s: float, R: float) -> float:
    if not R > 0:
        raise DomainError(f"R must be positive, got {R}")
    _check_order(s)
    return s * gamma_fn(N / 2) * R ** (N + 2 * s) / (
        2 * gamma_fn(1 - s) * gamma_fn((N + 2 * s + 2) / 2)
    )


def torsion_seminorm(p: FracParams, R: float) -> float:
    """Gagliardo seminorm of the torsion function; its square is the L^1 norm."""
    return math.sqrt(_torsion_semi_sq(p.N, p.s, R))


# ---------------------------------------------------------------------------
# subcritical thresholds


def _embedding_factor(p: FracParams, d: DomainSpec) -> float:
    # 2 T^2 |Omega|^{(2*-2)/2*}
    crit = p.crit_exp
    return 2 * talenti_constant(p) ** 2 * d.measure ** ((crit - 2) / crit)


def _check_subcritical(p: FracParams, p_exp: float, q_exp: float, allow_p_one: bool):
    lo_ok = p_exp >= 1 if allow_p_one else p_exp > 1
    if not (lo_ok and p_exp < 2 < q_exp < p.crit_exp):
        raise DomainError(
            f"need {'1 <=' if allow_p_one else '1 <'} p < 2 < q < 2*_s = {p.crit_exp:.6g}, "
            f"got p={p_exp}, q={q_exp}"
        )
    if 2 - p_exp < DEGENERATE_GAP or q_exp - 2 < DEGENERATE_GAP:
        raise DomainError("near-degenerate exponents: p or q within 1e-9 of 2")


def _check_coeffs(*coeffs):
    for c in coeffs:
        if not c > 0:
            raise DomainError(f"coefficients must be positive, got {c}")


def lambda_star_subcritical(
    p: FracParams, d: DomainSpec, a_p: float, p_exp: float, a_q: float, q_exp: float
) -> float:
    """Upper end of the parameter interval giving two solutions (subcritical case)."""
    _check_subcritical(p, p_exp, q_exp, allow_p_one=True)
    _check_coeffs(a_p, a_q)
    pp, q = p_exp, q_exp
    return (
        (a_p / pp) ** ((2 - q) / (q - pp))
        * (a_q / q) ** ((pp - 2) / (q - pp))
        * ((2 - pp) / (q - 2)) ** ((2 - pp) / (q - pp))
        * (q - 2) / (q - pp)
        / _embedding_factor(p, d)
    )


def radius_subcritical(
    p: FracParams, d: DomainSpec, a_p: float, p_exp: float, a_q: float, q_exp: float
) -> float:
    """Sublevel radius r of Phi used with ``lambda_star_subcritical``."""
    _check_subcritical(p, p_exp, q_exp, allow_p_one=True)
    _check_coeffs(a_p, a_q)
    pp, q = p_exp, q_exp
    crit = p.crit_exp
    ratio = a_p * q * (2 - pp) / (a_q * pp * (q - 2))
    return d.measure ** (2 / crit) / (2 * talenti_constant(p) ** 2) * ratio ** (2 / (q - pp))


def mu_star_subcritical(p: FracParams, d: DomainSpec, p_exp: float, q_exp: float) -> float:
    """Threshold on mu for ``mu t^(p-1) + t^(q-1)``, 1 < p < 2 < q < 2*_s."""
    _check_subcritical(p, p_exp, q_exp, allow_p_one=False)
    pp, q = p_exp, q_exp
    return (
        _embedding_factor(p, d) ** ((pp - q) / (q - 2))
        * pp
        * q ** ((2 - pp) / (q - 2))
        * ((2 - pp) / (q - 2)) ** ((2 - pp) / (q - 2))
        * ((q - 2) / (q - pp)) ** ((q - pp) / (q - 2))
    )


# ---------------------------------------------------------------------------
# critical thresholds


def _check_critical_p(p: FracParams, p_exp: float):
    if not 1 < p_exp < p.crit_exp:
        raise DomainError(f"need 1 < p < 2*_s = {p.crit_exp:.6g}, got p={p_exp}")


def lambda_r_star_branches(
    p: FracParams, d: DomainSpec, p_exp: float, a_p: float, mu: float, r: float
) -> tuple[float, float]:
    """The two expressions whose minimum is ``lambda_r_star``."""
    _check_critical_p(p, p_exp)
    if not (r > 0 and mu > 0):
        raise DomainError(f"r and mu must be positive, got r={r}, mu={mu}")
    _check_coeffs(a_p)
    N, s = p.N, p.s
    crit = p.crit_exp
    T = talenti_constant(p)
    first = (
        2 ** (crit / 2) * T**crit * r ** ((crit - 2) / 2) / crit
        + mu * 2 ** (p_exp / 2) * a_p * T**p_exp
        * d.measure ** ((crit - p_exp) / crit) * r ** ((p_exp - 2) / 2) / p_exp
    )
    second = (s / (2 * N * r)) ** (2 * s / (N - 2 * s)) / T**crit
    return 1.0 / first, second


def lambda_r_star(
    p: FracParams, d: DomainSpec, p_exp: float, a_p: float, mu: float, r: float
) -> float:
    """Parameter bound below which the local Palais-Smale condition holds on {Phi <= r}."""
    return min(lambda_r_star_branches(p, d, p_exp, a_p, mu, r))


def radius_critical(p: FracParams) -> float:
    crit = p.crit_exp
    T = talenti_constant(p)
    first = (crit / (2 ** ((crit + 2) / 2) * T**crit)) ** (2 / (crit - 2))
    second = p.s / (3 * p.N * T ** (p.N / p.s))
    return min(first, second)


def mu_star_critical(p: FracParams, d: DomainSpec, p_exp: float, a_p: float = 1.0) -> float:
    """Threshold on mu for ``mu g(t) + (t^+)^(2*_s - 1)`` with ``g(t) <= a_p |t|^(p-1)``."""
    _check_critical_p(p, p_exp)
    _check_coeffs(a_p)
    crit = p.crit_exp
    T = talenti_constant(p)
    return (
        radius_critical(p) ** ((2 - p_exp) / 2)
        * p_exp
        / (2 ** ((p_exp + 2) / 2) * a_p * T**p_exp * d.measure ** ((crit - p_exp) / crit))
    )


def critical_level(p: FracParams) -> float:
    """Energy level s / (N T^(N/s)) below which compactness is restored."""
    return p.s / (p.N * talenti_constant(p) ** (p.N / p.s))


# ---------------------------------------------------------------------------
# test function built from the torsion profile


def torsion_ratio_factor(p: FracParams, d: DomainSpec) -> float:
    """Lower bound of Psi/Phi at a small multiple of the torsion function, per unit K.

    With F(t) >= K t^2 near 0, Psi(du_R)/Phi(du_R) >= K * this factor.
    """
    N, s = p.N, p.s
    R = d.inradius
    return (
        s * gamma_fn(N / 2) * gamma_fn(1 + 2 * s) * gamma_fn((N + 2 * s + 2) / 2) * R ** (2 * s)
        / (
            math.pi ** (N / 2) * gamma_fn(1 + s) ** 2 * gamma_fn(1 - s)
            * gamma_fn((N + 4 * s + 2) / 2)
        )
    )


def testfn_scale_bounds(p: FracParams, d: DomainSpec, r: float, eps: float) -> tuple[float, float]:
    """Upper bounds on delta from Phi(delta u_R) < r and max(delta u_R) < eps."""
    N, s = p.N, p.s
    R = d.inradius
    by_phi = math.sqrt(
        4 * gamma_fn(1 - s) * gamma_fn((N + 2 * s + 2) / 2) * r
        / (s * gamma_fn(N / 2) * R ** (N + 2 * s))
    )
    by_sup = (
        2 * math.pi ** (N / 2) * gamma_fn(1 + s) * gamma_fn(1 - s) * eps
        / (s * gamma_fn(N / 2) * R ** (2 * s))
    )
    return by_phi, by_sup


def testfn_scale(p: FracParams, d: DomainSpec, r: float, K: float, eps: float,
                 margin: float = 0.99) -> float:
    """Scale delta for the seed ``delta * u_R``: ``margin`` times the smaller bound.

    ``K`` is the quadratic lower-bound constant for F on [0, eps]; it does not
    enter delta but must be positive for the construction to make sense.
    """
    for name, val in (("r", r), ("K", K), ("eps", eps)):
        if not val > 0:
            raise DomainError(f"{name} must be positive, got {val}")
    return margin * min(testfn_scale_bounds(p, d, r, eps))


def torsion_phi(p: FracParams, d: DomainSpec, delta: float) -> float:
    """Phi(delta u_R) = delta^2 [u_R]^2 / 2 for the inscribed ball."""
    return 0.5 * delta**2 * torsion_seminorm(p, d.inradius) ** 2


# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ThresholdBundle:
    talenti: float
    torsion_amp: float
    lambda_star: float | None = None
    r_sub: float | None = None
    mu_star_sub: float | None = None
    r_crit: float | None = None
    lambda_r_star: float | None = None
    mu_star_crit: float | None = None
    c_star: float | None = None

    def as_dict(self) -> dict:
        return {k: v for k, v in self.__dict__.items()}


def threshold_bundle(
    p: FracParams,
    d: DomainSpec | None = None,
    p_exp: float | None = None,
    q_exp: float | None = None,
    a_p: float = 1.0,
    a_q: float = 1.0,
    mu: float | None = None,
) -> ThresholdBundle:
    """Evaluate every constant that the given inputs determine; the rest stay None."""
    vals = dict(talenti=talenti_constant(p), torsion_amp=torsion_amplitude(p))
    vals["r_crit"] = radius_critical(p)
    vals["c_star"] = critical_level(p)
    if d is not None and p_exp is not None:
        if q_exp is not None and q_exp < p.crit_exp:
            vals["lambda_star"] = lambda_star_subcritical(p, d, a_p, p_exp, a_q, q_exp)
            vals["r_sub"] = radius_subcritical(p, d, a_p, p_exp, a_q, q_exp)
            if p_exp > 1:
                vals["mu_star_sub"] = mu_star_subcritical(p, d, p_exp, q_exp)
        if 1 < p_exp < p.crit_exp:
            vals["mu_star_crit"] = mu_star_critical(p, d, p_exp, a_p)
            if mu is not None:
                vals["lambda_r_star"] = lambda_r_star(p, d, p_exp, a_p, mu, vals["r_crit"])
    return ThresholdBundle(**vals)
