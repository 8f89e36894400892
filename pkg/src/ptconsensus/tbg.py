"""Time base generators (TBGs).

A collection of ``n`` polynomials ``h_1..h_n`` of degree ``2n+1`` with

    h_k^(j)(0)   = 1 if j == k-1 else 0,   j = 0..n
    h_k^(j)(t_f) = 0,                      j = 0..n

and ``h_k(t) = 0`` for ``t >= t_f``. The coefficients are solved in the
normalized time ``u = t / t_f``; with ``h_k(t) = t_f**(k-1) * p_k(u)`` the
scaled polynomials ``p_k`` obey the same boundary conditions on ``[0, 1]`` and
do not depend on ``t_f`` at all.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from math import comb, factorial

import numpy as np

__all__ = [
    "TbgBasis",
    "TbgEvaluation",
    "build_basis",
    "evaluate",
    "evaluate_grid",
    "chain_matrices",
    "check_hdot_identity",
    "boundary_residuals",
]

_SOLVE_RESIDUAL_TOL = 1e-10


@dataclass(frozen=True)
class TbgEvaluation:
    H: np.ndarray
    Kt: np.ndarray


@dataclass(frozen=True, eq=False)
class TbgBasis:
    """Solved TBG collection for a system of order ``n``.

    ``scaled`` has shape ``(n, 2n+2)``; row ``k-1`` holds the coefficients of
    ``p_k(u)`` in ascending powers of ``u``.
    """

    order: int
    settling_time: float
    scaled: np.ndarray
    # deriv[j, k, m]: coefficient of u**m in p_k^(j)(u), j = 0..n
    _deriv: np.ndarray = field(repr=False)
    # time_scale[j, k] = t_f**(k - j), converts d^j/du^j of p_{k+1} to d^j/dt^j of h_{k+1}
    _time_scale: np.ndarray = field(repr=False)

    @property
    def degree(self) -> int:
        return 2 * self.order + 1

    @property
    def coeffs(self) -> np.ndarray:
        """Raw-time coefficient vectors ``c_k``, highest degree first.

        Row ``k-1`` satisfies ``h_k(t) = tau(t) . c_k`` with
        ``tau(t) = [t**r, ..., t, 1]``.
        """
        n, r, tf = self.order, self.degree, self.settling_time
        powers = np.arange(r + 1)
        out = np.empty_like(self.scaled)
        for k in range(n):
            ascending = self.scaled[k] * tf ** (k - powers.astype(float))
            out[k] = ascending[::-1]
        return out

    def derivative(self, j: int, t: float) -> np.ndarray:
        """Vector ``[h_1^(j)(t), ..., h_n^(j)(t)]`` for any ``j >= 0``."""
        if t < 0:
            raise ValueError(f"TBG evaluated at negative time t={t}")
        n = self.order
        if t >= self.settling_time:
            return np.zeros(n)
        u = t / self.settling_time
        if j <= n:
            table = self._deriv[j]
        else:
            table = _derivative_table(self.scaled, j)[j]
        vals = table @ (u ** np.arange(table.shape[1]))
        return vals * self.settling_time ** (np.arange(n) - float(j))

    def __call__(self, t: float) -> TbgEvaluation:
        return evaluate(self, t)


def _derivative_table(scaled: np.ndarray, max_order: int) -> np.ndarray:
    n, width = scaled.shape
    table = np.zeros((max_order + 1, n, width))
    table[0] = scaled
    m = np.arange(width)
    for j in range(1, max_order + 1):
        prev = table[j - 1]
        table[j, :, :-1] = prev[:, 1:] * m[1:]
    return table


def _boundary_matrix(n: int) -> np.ndarray:
    """Rows: d^j/du^j of the monomials u^0..u^r at u=0 (j=0..n), then at u=1, each divided by j!."""
    r = 2 * n + 1
    rows = np.zeros((2 * (n + 1), r + 1))
    for j in range(n + 1):
        rows[j, j] = 1.0
        for m in range(j, r + 1):
            rows[n + 1 + j, m] = comb(m, j)
    return rows


def _solve_exact(n: int) -> list[list[Fraction]]:
    """Exact rational coefficients of ``p_1..p_n`` in ascending powers of ``u``.

    The conditions at ``u=0`` fix the coefficients of ``u^0..u^n`` directly;
    the ``n+1`` conditions at ``u=1`` (divided by ``j!``) leave the square
    binomial system ``sum_m C(m, j) c_m = 0``, solved by Gauss-Jordan
    elimination over the rationals.
    """
    r = 2 * n + 1
    size = n + 1
    out = []
    for k in range(n):
        low = [Fraction(int(j == k), factorial(j)) for j in range(size)]
        aug = [
            [Fraction(comb(m, j)) for m in range(size, r + 1)] + [-sum(comb(m, j) * low[m] for m in range(size))]
            for j in range(size)
        ]
        for col in range(size):
            piv = next(i for i in range(col, size) if aug[i][col] != 0)
            aug[col], aug[piv] = aug[piv], aug[col]
            for i in range(size):
                if i != col and aug[i][col] != 0:
                    f = aug[i][col] / aug[col][col]
                    aug[i] = [x - f * y for x, y in zip(aug[i], aug[col])]
        out.append(low + [aug[i][size] / aug[i][i] for i in range(size)])
    return out


def build_basis(n: int, t_f: float) -> TbgBasis:
    """Solve the ``n`` TBG polynomials of degree ``2n+1`` for settling time ``t_f``."""
    if int(n) != n or n < 1:
        raise ValueError(f"TBG order must be a positive integer, got {n!r}")
    if not np.isfinite(t_f) or t_f <= 0:
        raise ValueError(f"settling time must be positive, got {t_f!r}")
    n = int(n)
    t_f = float(t_f)

    sol = np.array([[float(c) for c in row] for row in _solve_exact(n)]).T
    system = _boundary_matrix(n)
    rhs = np.zeros((2 * (n + 1), n))
    for k in range(n):
        rhs[k, k] = 1.0 / factorial(k)
    # relative to the size of the summed terms, which grow quickly with n
    scale = np.maximum(1.0, np.abs(system) @ np.abs(sol))
    residual = np.max(np.abs(system @ sol - rhs) / scale)
    if residual > _SOLVE_RESIDUAL_TOL:  # pragma: no cover
        raise RuntimeError(f"TBG boundary solve residual {residual:.3e} exceeds tolerance")

    scaled = np.ascontiguousarray(sol.T)
    deriv = _derivative_table(scaled, n)
    k = np.arange(n)
    j = np.arange(n + 1)[:, None]
    time_scale = t_f ** (k[None, :] - j.astype(float))
    for arr in (scaled, deriv, time_scale):
        arr.setflags(write=False)
    return TbgBasis(order=n, settling_time=t_f, scaled=scaled, _deriv=deriv, _time_scale=time_scale)


def evaluate(basis: TbgBasis, t: float) -> TbgEvaluation:
    """Matrix ``H(t)`` (row j = j-th derivatives) and gain row ``K_t(t)``.

    Both are exactly zero for ``t >= t_f``.
    """
    if t < 0:
        raise ValueError(f"TBG evaluated at negative time t={t}")
    n = basis.order
    if t >= basis.settling_time:
        return TbgEvaluation(H=np.zeros((n, n)), Kt=np.zeros(n))
    u = t / basis.settling_time
    powers = u ** np.arange(basis.degree + 1)
    vals = (basis._deriv @ powers) * basis._time_scale
    return TbgEvaluation(H=vals[:n].copy(), Kt=vals[n].copy())


def evaluate_grid(basis: TbgBasis, times) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized ``evaluate`` over a 1-D array of times: ``H (T, n, n)``, ``Kt (T, n)``."""
    times = np.asarray(times, dtype=float)
    if np.any(times < 0):
        raise ValueError("TBG evaluated at negative time")
    n = basis.order
    T = times.shape[0]
    H = np.zeros((T, n, n))
    Kt = np.zeros((T, n))
    inside = times < basis.settling_time
    u = times[inside] / basis.settling_time
    powers = u[:, None] ** np.arange(basis.degree + 1)[None, :]
    vals = np.einsum("jkm,tm->tjk", basis._deriv, powers) * basis._time_scale[None]
    H[inside] = vals[:, :n]
    Kt[inside] = vals[:, n]
    return H, Kt


def chain_matrices(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Integrator-chain pair ``(A, B)``: ``A`` has ones on the superdiagonal, ``B = e_n``."""
    A = np.eye(n, k=1)
    B = np.zeros((n, 1))
    B[-1, 0] = 1.0
    return A, B


def _evaluate_extended(basis: TbgBasis, t) -> tuple[np.ndarray, np.ndarray]:
    """``(H, K_t)`` for ``0 <= t < t_f`` in ``np.longdouble``, for finite-difference checks."""
    ld = np.longdouble
    n, tf = basis.order, ld(basis.settling_time)
    u = ld(t) / tf
    powers = u ** np.arange(basis.degree + 1, dtype=ld)
    scale = tf ** (np.arange(n)[None, :] - np.arange(n + 1)[:, None]).astype(ld)
    vals = (basis._deriv.astype(ld) @ powers) * scale
    return vals[:n], vals[n]


def check_hdot_identity(basis: TbgBasis, t: float, dt_fd: float) -> float:
    """Max-abs residual of ``dH/dt = A H + B K_t`` using a 5-point central difference of ``H``.

    The stencil is evaluated in extended precision: the monomial sums cancel by
    several orders of magnitude for larger ``n``, and in float64 that noise,
    divided by ``dt_fd``, would swamp the residual.
    """
    tf = basis.settling_time
    if not 0 < t < tf:
        raise ValueError(f"identity is checked on the open interval (0, {tf}), got t={t}")
    if not 0 < 2 * dt_fd < min(t, tf - t):
        raise ValueError(f"finite-difference step {dt_fd} does not fit inside (0, t_f) around t={t}")
    A, B = chain_matrices(basis.order)
    t_ld, h = np.longdouble(t), np.longdouble(dt_fd)
    Hs = [_evaluate_extended(basis, t_ld + m * h)[0] for m in (-2, -1, 1, 2)]
    hdot = (Hs[0] - 8 * Hs[1] + 8 * Hs[2] - Hs[3]) / (12 * h)
    H, Kt = _evaluate_extended(basis, t_ld)
    return float(np.max(np.abs(hdot - (A @ H + B @ Kt[None, :]))))


def boundary_residuals(basis: TbgBasis) -> np.ndarray:
    """Residuals of all ``2n+2`` boundary conditions per polynomial, in scaled time.

    Shape ``(n, 2, n+1)``: ``[k, 0, j]`` is the condition at ``u=0`` and
    ``[k, 1, j]`` the one at ``u=1`` for derivative order ``j``. Each entry is
    ``p_k^(j)(u) / j!`` minus its target, the Taylor-coefficient scaling that
    keeps the high-order conditions comparable to the low-order ones.
    """
    n = basis.order
    out = np.empty((n, 2, n + 1))
    ones = np.ones(basis.degree + 1)
    for j in range(n + 1):
        at0 = basis._deriv[j, :, 0] / factorial(j)
        at1 = basis._deriv[j] @ ones / factorial(j)
        target0 = np.zeros(n)
        if j < n:
            target0[j] = 1.0 / factorial(j)
        out[:, 0, j] = at0 - target0
        out[:, 1, j] = at1
    return out
