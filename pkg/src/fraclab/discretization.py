"""Dense 1-D discretisation of the fractional Laplacian with zero exterior data.

The domain is (-R, R) with ``n`` interior nodes; node values outside are zero.
Two independent quadratures are provided:

* ``assemble_operator``: pointwise product-integration scheme for
  ``2 P.V. int (u(x_i) - u(y)) |x_i - y|^{-1-2s} dy`` (near field exact on
  quadratics, far field against the piecewise-linear interpolant, exterior in
  closed form).  The matrix is symmetric Toeplitz.
* ``gagliardo_seminorm_sq``: the double integral of the Gagliardo seminorm of
  the piecewise-linear interpolant, assembled cell pair by cell pair.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from functools import cached_property, lru_cache

import numpy as np
import scipy.linalg as sla

from .constants import _check_order, _torsion_amp
from .errors import ArgumentError, DomainError


@dataclass(frozen=True, eq=False)
class Grid1D:
    """Uniform grid on (-R, R) without the two boundary nodes."""

    R: float
    n: int

    @property
    def h(self) -> float:
        return 2.0 * self.R / (self.n + 1)

    @cached_property
    def nodes(self) -> np.ndarray:
        x = -self.R + self.h * np.arange(1, self.n + 1)
        x.setflags(write=False)
        return x

    def same_as(self, other: "Grid1D") -> bool:
        return self is other or (self.n == other.n and self.R == other.R)


def build_grid(R: float, n: int) -> Grid1D:
    if not R > 0:
        raise ArgumentError(f"R must be positive, got {R}")
    if int(n) != n or n < 3:
        raise ArgumentError(f"need at least 3 interior nodes, got n={n}")
    return Grid1D(float(R), int(n))


@dataclass(eq=False)
class DiscreteField:
    """Node values on a grid; implicitly zero outside (-R, R)."""

    grid: Grid1D
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.grid.n,):
            raise ArgumentError(
                f"field has shape {self.values.shape}, grid expects ({self.grid.n},)"
            )

    def with_values(self, values) -> "DiscreteField":
        return DiscreteField(self.grid, values)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["x", "u"])
        for x, v in zip(self.grid.nodes, self.values):
            w.writerow([format(x, ".12g"), format(v, ".12g")])
        return buf.getvalue()


def zero_field(grid: Grid1D) -> DiscreteField:
    return DiscreteField(grid, np.zeros(grid.n))


def _check_same_grid(a: Grid1D, b: Grid1D):
    if not a.same_as(b):
        raise ArgumentError(f"grid mismatch: (R={a.R}, n={a.n}) vs (R={b.R}, n={b.n})")


def _power_integral(lo, hi, e):
    """int_lo^hi t^e dt for 0 <= lo < hi (elementwise); e == -1 gives the log."""
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    if e == -1:
        with np.errstate(divide="ignore"):
            return np.log(hi) - np.log(lo)
    with np.errstate(divide="ignore"):
        return (hi ** (e + 1) - lo ** (e + 1)) / (e + 1)


@dataclass(eq=False)
class FractionalOperator:
    """Dense symmetric matrix ``L`` with ``(L u)_i`` ~ ((-Delta)^s u)(x_i)."""

    s: float
    grid: Grid1D
    matrix: np.ndarray
    kernel_factor: float = 2.0
    _chol: tuple | None = field(default=None, repr=False)

    @property
    def cho(self):
        if self._chol is None:
            self._chol = sla.cho_factor(self.matrix, lower=True)
        return self._chol

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        return sla.cho_solve(self.cho, rhs)

    def quad_form(self, u: np.ndarray) -> float:
        """h u^T L u, the discrete counterpart of [u]_s^2."""
        return float(self.grid.h * (u @ (self.matrix @ u)))


def _operator_column(n: int, h: float, s: float) -> np.ndarray:
    """First column of the Toeplitz matrix, with kernel factor 1."""
    a = 2.0 * s
    # near field |z| < h: second difference times int_0^h z^{1-2s} dz, both sides
    near = h ** (-a) / (2.0 - a)
    # far field, cell [m h, (m+1) h] at offset m >= 1 from x_i, linear interpolant
    m = np.arange(1, n + 1, dtype=float)
    lo, hi = m * h, (m + 1) * h
    i0 = _power_integral(lo, hi, -1.0 - a)
    i1 = _power_integral(lo, hi, -a)
    w_left = (m + 1) * i0 - i1 / h
    w_right = i1 / h - m * i0
    wts = np.zeros(n + 2)
    wts[1 : n + 1] += w_left
    wts[2 : n + 2] += w_right
    col = np.zeros(n)
    # u_i times int_{|z|>h} |z|^{-1-2s} over the whole line (exterior included)
    col[0] = 2.0 * near + 2.0 * h ** (-a) / a
    col[1] -= near
    col[1:] -= wts[1:n]
    return col


def assemble_operator(grid: Grid1D, s: float, kernel_factor: float = 2.0) -> FractionalOperator:
    """Assemble the discrete fractional Laplacian on ``grid``.

    ``kernel_factor`` multiplies the kernel; 2 is the convention used by every
    threshold in ``constants``.  Other values exist to test convention
    sensitivity.
    """
    _check_order(s)
    col = kernel_factor * _operator_column(grid.n, grid.h, s)
    mat = sla.toeplitz(col)
    mat.setflags(write=False)
    return FractionalOperator(s=s, grid=grid, matrix=mat, kernel_factor=kernel_factor)


def apply_operator(L: FractionalOperator, u: DiscreteField) -> DiscreteField:
    _check_same_grid(L.grid, u.grid)
    return DiscreteField(u.grid, L.matrix @ u.values)


def solve_torsion(L: FractionalOperator) -> DiscreteField:
    """Discrete solution of L u = 1."""
    try:
        vals = L.solve(np.ones(L.grid.n))
    except np.linalg.LinAlgError as exc:
        raise np.linalg.LinAlgError(f"torsion solve failed: {exc}") from exc
    return DiscreteField(L.grid, vals)


def torsion_profile(grid: Grid1D, s: float, amplitude: float | None = None) -> DiscreteField:
    """Exact 1-D torsion function A(1,s) (R^2 - x^2)^s sampled at the nodes."""
    A = _torsion_amp(1, s) if amplitude is None else amplitude
    x = grid.nodes
    return DiscreteField(grid, A * (grid.R**2 - x**2) ** s)


def lp_norm(u: DiscreteField, nu: float) -> float:
    """Composite trapezoid L^nu norm; boundary values are zero."""
    if not nu >= 1:
        raise DomainError(f"nu must be >= 1, got {nu}")
    return float((u.grid.h * np.sum(np.abs(u.values) ** nu)) ** (1.0 / nu))


# ---------------------------------------------------------------------------
# Gagliardo seminorm of the piecewise-linear interpolant

_GL_X, _GL_W = np.polynomial.legendre.leggauss(10)
_GL_X = 0.5 * (_GL_X + 1.0)
_GL_W = 0.5 * _GL_W


def _pair_matrices(n_cells: int, h: float, s: float) -> np.ndarray:
    """4x4 local forms for cell pairs at offsets m = 2 .. n_cells-1.

    Row/column order is (u_k, u_{k+1}, u_{k+m}, u_{k+m+1}); entries are
    h^2 int int c c^T |x-y|^{-1-2s} over the unit square with
    c = (phi0(xi), phi1(xi), -phi0(eta), -phi1(eta)).
    """
    m = np.arange(2, n_cells, dtype=float)
    xi = _GL_X[:, None]
    eta = _GL_X[None, :]
    w2 = _GL_W[:, None] * _GL_W[None, :]
    c = np.stack(
        [
            np.broadcast_to(1 - xi, w2.shape),
            np.broadcast_to(xi, w2.shape),
            np.broadcast_to(-(1 - eta), w2.shape),
            np.broadcast_to(-eta, w2.shape),
        ]
    )
    cc = np.einsum("aij,bij->abij", c, c) * w2
    dist = h * (m[:, None, None] + eta - xi)
    ker = dist ** (-1.0 - 2.0 * s)
    return h**2 * np.einsum("abij,mij->mab", cc, ker)


@lru_cache(maxsize=16)
def _gagliardo_matrix(R: float, n: int, s: float) -> np.ndarray:
    h = 2.0 * R / (n + 1)
    n_nodes = n + 2
    n_cells = n + 1
    S = np.zeros((n_nodes, n_nodes))
    k = np.arange(n_cells)

    # same cell: (u(x)-u(y))^2 = slope^2 (x-y)^2, integrated in closed form
    c0 = 2.0 * h ** (1.0 - 2.0 * s) / ((2.0 - 2.0 * s) * (3.0 - 2.0 * s))
    np.add.at(S, (k, k), c0)
    np.add.at(S, (k + 1, k + 1), c0)
    np.add.at(S, (k, k + 1), -c0)
    np.add.at(S, (k + 1, k), -c0)

    # neighbouring cells: Duffy split at the shared node makes the radial part
    # int_0^1 rho^{2-2s} = 1/(3-2s); the angular part is smooth
    t, wt = _GL_X, _GL_W
    den = (1.0 + t) ** (-1.0 - 2.0 * s)
    m0 = float(np.sum(wt * (1.0 + t**2) * den))
    m1 = float(np.sum(wt * t * den))
    scale = 2.0 * h ** (1.0 - 2.0 * s) / (3.0 - 2.0 * s)  # factor 2: both orderings
    kk = np.arange(n_cells - 1)
    # a1 = u_k - u_{k+1}, a2 = u_{k+2} - u_{k+1}
    # (a1^2 + a2^2) m0 - 4 a1 a2 m1 as a quadratic form in (u_k, u_{k+1}, u_{k+2})
    loc = np.array(
        [
            [m0, -m0 + 2 * m1, -2 * m1],
            [-m0 + 2 * m1, 2 * m0 - 4 * m1, -m0 + 2 * m1],
            [-2 * m1, -m0 + 2 * m1, m0],
        ]
    )
    for a in range(3):
        for b in range(3):
            np.add.at(S, (kk + a, kk + b), scale * loc[a, b])

    # well-separated cells: tensor Gauss-Legendre
    if n_cells > 2:
        mats = 2.0 * _pair_matrices(n_cells, h, s)  # both orderings
        for idx, m in enumerate(range(2, n_cells)):
            kk = np.arange(n_cells - m)
            off = (0, 1, m, m + 1)
            for a in range(4):
                for b in range(4):
                    np.add.at(S, (kk + off[a], kk + off[b]), mats[idx, a, b])

    # exterior strips: 2 int_Omega u(x)^2 int_{Omega^c} |x-y|^{-1-2s} dy dx,
    # the inner integral being (d_right^{-2s} + d_left^{-2s}) / (2s)
    x = -R + h * np.arange(n_nodes)
    for dist in (R - x, R + x):
        d_a, d_b = dist[:-1], dist[1:]
        lo, hi = np.minimum(d_a, d_b), np.maximum(d_a, d_b)
        i0 = _power_integral(lo, hi, -2.0 * s)
        i1 = _power_integral(lo, hi, 1.0 - 2.0 * s)
        i2 = _power_integral(lo, hi, 2.0 - 2.0 * s)
        # basis hat of node a is (d - d_b)/(d_a - d_b); d_b == 0 at the boundary cell
        sa = d_a - d_b
        # entries of the boundary nodes may be infinite; those rows are dropped below
        with np.errstate(invalid="ignore", over="ignore"):
            aa = (i2 - 2 * d_b * i1 + np.where(d_b == 0, 0.0, d_b**2 * i0)) / sa**2
            bb = (i2 - 2 * d_a * i1 + np.where(d_a == 0, 0.0, d_a**2 * i0)) / sa**2
            ab = -(i2 - (d_a + d_b) * i1 + np.where(d_a * d_b == 0, 0.0, d_a * d_b * i0)) / sa**2
        fac = 2.0 / (2.0 * s)
        kk = np.arange(n_cells)
        for rows, cols, vals in ((kk, kk, aa), (kk + 1, kk + 1, bb), (kk, kk + 1, ab), (kk + 1, kk, ab)):
            vals = np.where(np.isfinite(vals), vals, 0.0)
            np.add.at(S, (rows, cols), fac * vals)

    inner = S[1:-1, 1:-1].copy()
    inner = 0.5 * (inner + inner.T)
    inner.setflags(write=False)
    return inner


def gagliardo_matrix(grid: Grid1D, s: float) -> np.ndarray:
    """Matrix S with [u_h]_s^2 = u^T S u for the piecewise-linear interpolant u_h."""
    _check_order(s)
    return _gagliardo_matrix(grid.R, grid.n, float(s))


def gagliardo_seminorm_sq(u: DiscreteField, s: float) -> float:
    S = gagliardo_matrix(u.grid, s)
    v = u.values
    return float(max(v @ (S @ v), 0.0))


def operator_seminorm_consistency(u: DiscreteField, L: FractionalOperator, s: float) -> float:
    """Relative gap between h u^T L u and the cell-pair Gagliardo value."""
    _check_same_grid(u.grid, L.grid)
    if s != L.s:
        raise ArgumentError(f"order mismatch: operator has s={L.s}, got s={s}")
    g = gagliardo_seminorm_sq(u, s)
    return abs(L.quad_form(u.values) - g) / max(1e-30, g)
