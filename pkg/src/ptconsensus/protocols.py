"""Consensus errors, TBG tracking errors and the three auxiliary control laws.

Every law has the form ``v_i = (mu_i + nu_i) / beta_i`` with

    mu_i = b_i u_l + sum_j a_ij v_j - K_t(t) e_i(0) + K_fr xi_i[1:]

and a robustness term ``nu_i`` that is zero for the linear law,
``k1 sign(s_i)`` for the sliding-mode law, and ``u_eq + u_n`` with
``du_n/dt = K sign(s_i)`` for the continuous fixed-time law.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .topology import Network

__all__ = [
    "PROTOCOLS",
    "ContinuousParams",
    "ProtocolConfig",
    "ConfigWarning",
    "consensus_error",
    "consensus_errors",
    "tracking_error",
    "sliding_surface",
    "signed_power",
    "mu_term",
    "linear_v",
    "robust_v",
    "continuous_v",
    "ContinuousStep",
    "equivalent_control",
    "continuous_surface",
    "reduced_error_poles",
    "is_hurwitz",
    "gain_condition_margin",
]

PROTOCOLS = ("linear", "robust_smc", "continuous_fixed_time")
_HURWITZ_TOL = 1e-9


class ConfigWarning(UserWarning):
    pass


@dataclass(frozen=True)
class ContinuousParams:
    """Surface/equivalent-control coefficients, listed for ``xi_1..xi_n``."""

    c: tuple[float, ...]
    b: tuple[float, ...]
    exp_alpha: tuple[float, ...]
    exp_beta: tuple[float, ...]
    K: float

    def __post_init__(self):
        lengths = {len(self.c), len(self.b), len(self.exp_alpha), len(self.exp_beta)}
        if len(lengths) != 1:
            raise ValueError("continuous parameters c, b, exp_alpha, exp_beta must have equal lengths")
        if any(p <= 0 for p in self.exp_alpha + self.exp_beta):
            raise ValueError("continuous-controller exponents must be positive")

    def validate(self, n: int) -> list[str]:
        """Problems that make the parameters unusable for order ``n`` (errors), plus advisory notes."""
        notes = []
        if len(self.c) != n:
            raise ValueError(f"continuous parameters have length {len(self.c)}, expected order {n}")
        if not all(0 < a < 1 for a in self.exp_alpha):
            notes.append("exp_alpha entries should lie in (0, 1)")
        if not all(bt > 1 for bt in self.exp_beta):
            notes.append("exp_beta entries should exceed 1")
        if not self.K > 0:
            notes.append("integrator gain K should be positive")
        return notes

    @classmethod
    def zeros(cls, n: int) -> "ContinuousParams":
        return cls(c=(0.0,) * n, b=(0.0,) * n, exp_alpha=(0.5,) * n, exp_beta=(1.5,) * n, K=0.0)


@dataclass(frozen=True)
class ProtocolConfig:
    protocol: str = "linear"
    K_fr: tuple[float, ...] = ()
    k1: float = 0.0
    continuous: ContinuousParams | None = None

    def __post_init__(self):
        if self.protocol not in PROTOCOLS:
            raise ValueError(f"unknown protocol {self.protocol!r}; choose from {PROTOCOLS}")
        object.__setattr__(self, "K_fr", tuple(float(k) for k in self.K_fr))
        if self.k1 < 0:
            raise ValueError(f"switching gain k1 must be nonnegative, got {self.k1}")
        if self.protocol == "continuous_fixed_time" and self.continuous is None:
            raise ValueError("continuous_fixed_time protocol needs continuous parameters")

    @property
    def K_fr_array(self) -> np.ndarray:
        return np.asarray(self.K_fr, dtype=float)

    def check(self, n: int) -> list[str]:
        """Raise on hard errors, return warnings (non-Hurwitz gains, exponent conditions)."""
        if len(self.K_fr) != n - 1:
            raise ValueError(f"K_fr must have length n-1 = {n - 1}, got {len(self.K_fr)}")
        notes = []
        if n > 1 and not is_hurwitz(self.K_fr):
            poles = reduced_error_poles(self.K_fr)
            notes.append(f"reduced tracking-error dynamics are not Hurwitz for K_fr={list(self.K_fr)} (poles {poles})")
        if self.protocol == "continuous_fixed_time":
            notes.extend(self.continuous.validate(n))
        return notes


def consensus_error(i: int, x: np.ndarray, x_l: np.ndarray, net: Network) -> np.ndarray:
    """``e_i = sum_j a_ij (x_j - x_i) - b_i (x_i - x_l)`` for one follower."""
    x = np.asarray(x, dtype=float)
    x_l = np.asarray(x_l, dtype=float)
    e = np.zeros(x.shape[1])
    for j in net.neighbors(i):
        e += net.a[i, j] * (x[j] - x[i])
    return e - net.b[i] * (x[i] - x_l)


def consensus_errors(x: np.ndarray, x_l: np.ndarray, net: Network) -> np.ndarray:
    """All consensus errors at once, ``-(L + M) x + m x_l^T`` row by row."""
    a, b = net.a, net.b
    return a @ x - (a.sum(axis=1) + b)[:, None] * x + b[:, None] * np.asarray(x_l)[None, :]


def tracking_error(e, e0, H) -> np.ndarray:
    """``xi = e - H e0``; broadcasts over a leading agent axis."""
    return np.asarray(e, dtype=float) - np.asarray(e0, dtype=float) @ np.asarray(H).T


def sliding_surface(xi, K_fr) -> np.ndarray:
    """``s = K_fr . xi[:n-1] + xi[n-1]``."""
    xi = np.asarray(xi, dtype=float)
    K_fr = np.asarray(K_fr, dtype=float)
    if K_fr.shape[0] != xi.shape[-1] - 1:
        raise ValueError(f"K_fr has length {K_fr.shape[0]}, expected {xi.shape[-1] - 1}")
    return xi[..., :-1] @ K_fr + xi[..., -1]


def signed_power(x, p):
    """``|x|**p * sign(x)`` with ``sign(0) = 0``."""
    if np.any(np.asarray(p) <= 0):
        raise ValueError("signed_power needs a positive exponent")
    return np.sign(x) * np.abs(x) ** p


def mu_term(neighbor_sum, b, u_l, e0, xi, Kt, K_fr):
    """Nominal part of the protocol numerator; broadcasts over agents."""
    xi = np.asarray(xi, dtype=float)
    return b * u_l + neighbor_sum - np.asarray(e0) @ np.asarray(Kt) + xi[..., 1:] @ np.asarray(K_fr, dtype=float)


def _local_mu(i, v_buffer, e0_i, xi_i, Kt, u_l, net, cfg):
    beta = net.beta_degree[i]
    if beta <= 0:
        raise ValueError(f"agent {i} has no incoming edges (beta_i = 0)")
    nbr = float(net.a[i] @ np.asarray(v_buffer, dtype=float))
    return mu_term(nbr, net.b[i], u_l, e0_i, xi_i, Kt, cfg.K_fr_array), beta


def linear_v(i, v_buffer, e0_i, xi_i, Kt, u_l, net: Network, cfg: ProtocolConfig) -> float:
    """Linear TBG-tracking law for follower ``i`` (``nu_i = 0``)."""
    mu, beta = _local_mu(i, v_buffer, e0_i, xi_i, Kt, u_l, net, cfg)
    return float(mu / beta)


def robust_v(i, v_buffer, e0_i, xi_i, s_i, Kt, u_l, net: Network, cfg: ProtocolConfig) -> float:
    """Sliding-mode law, ``nu_i = k1 sign(s_i)``."""
    mu, beta = _local_mu(i, v_buffer, e0_i, xi_i, Kt, u_l, net, cfg)
    return float((mu + cfg.k1 * np.sign(s_i)) / beta)


def equivalent_control(xi, params: ContinuousParams):
    """Signed-power sum ``sum_j c_j |xi_j|^alpha_j sgn + b_j |xi_j|^beta_j sgn``."""
    xi = np.asarray(xi, dtype=float)
    c = np.asarray(params.c, dtype=float)
    b = np.asarray(params.b, dtype=float)
    out = signed_power(xi, np.asarray(params.exp_alpha)) @ c + signed_power(xi, np.asarray(params.exp_beta)) @ b
    if not np.all(np.isfinite(out)):
        raise FloatingPointError("non-finite signed power in the equivalent control")
    return out


def continuous_surface(xi, xidot_n, params: ContinuousParams):
    return xidot_n + equivalent_control(xi, params)


class ContinuousStep(NamedTuple):
    v: float
    u_n: float
    s: float


def continuous_v(i, v_buffer, e0_i, xi_i, xidot_n, u_n, Kt, u_l, net: Network, cfg: ProtocolConfig, dt: float) -> ContinuousStep:
    """Continuous fixed-time law for follower ``i``.

    Returns the input computed with the current integrator state ``u_n`` and
    the integrator state advanced by one forward-Euler step of
    ``du_n/dt = K sign(s_i)``.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    params = cfg.continuous
    mu, beta = _local_mu(i, v_buffer, e0_i, xi_i, Kt, u_l, net, cfg)
    u_eq = equivalent_control(xi_i, params)
    s = xidot_n + u_eq
    v = (mu + (u_eq + u_n)) / beta
    return ContinuousStep(float(v), float(u_n + dt * params.K * np.sign(s)), float(s))


def reduced_error_poles(K_fr: Sequence[float]) -> np.ndarray:
    """Poles of ``z^(m) = -(K_fr . [z, z', ..., z^(m-1)])``, ``m = len(K_fr)``.

    This is the characteristic polynomial of both the linear law's
    ``xi_2..xi_n`` dynamics and the sliding-mode law's on-surface dynamics.
    """
    K_fr = np.asarray(K_fr, dtype=float)
    m = K_fr.size
    if m == 0:
        return np.zeros(0)
    companion = np.eye(m, k=1)
    companion[-1, :] = -K_fr
    return np.linalg.eigvals(companion)


def is_hurwitz(K_fr: Sequence[float]) -> bool:
    poles = reduced_error_poles(K_fr)
    return bool(np.all(poles.real < -_HURWITZ_TOL))


def gain_condition_margin(net: Network, gain: float, rho: np.ndarray) -> np.ndarray:
    """Per-agent ``gain - max_t (beta_i |rho_i| - sum_j a_ij |rho_j|)``.

    ``rho`` holds sampled disturbance values (or their derivatives), shape
    ``(T, N)``. A negative entry means the Lyapunov gain condition fails for
    that agent somewhere on the sampled horizon.
    """
    r = np.abs(np.atleast_2d(rho))
    need = net.beta_degree[None, :] * r - r @ net.a.T
    return gain - need.max(axis=0)


def warn_all(notes):
    for note in notes:
        warnings.warn(note, ConfigWarning, stacklevel=3)
