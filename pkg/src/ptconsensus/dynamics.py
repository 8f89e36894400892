"""Follower agents in normal form, the integrator-chain leader, and disturbances.

Follower ``i`` (no zero dynamics):

    dx_k/dt = x_{k+1},   k < n
    dx_n/dt = f(x) + g(x) u + rho(t)

and the input ``u = (-f(x) + v) / g(x)`` turns it into an integrator chain
driven by the auxiliary input ``v`` plus the matched disturbance.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np

from .expressions import Expression

__all__ = [
    "AgentModel",
    "LeaderModel",
    "DisturbanceSpec",
    "SingularInputGain",
    "CATALOGUE",
    "catalogue_model",
    "expression_model",
    "feedback_linearize",
    "chain_derivative",
    "disturbance_value",
    "draw_amplitudes",
]

SINGULAR_GAIN_TOL = 1e-12


class SingularInputGain(RuntimeError):
    """Raised when ``|g(x)|`` drops below the singularity tolerance."""

    def __init__(self, agent, t, state, gain):
        self.agent, self.t, self.state, self.gain = agent, t, np.asarray(state), gain
        where = "" if agent is None else f"agent {agent} "
        at = "" if t is None else f"at t={t:.6g} "
        super().__init__(f"singular input gain g={gain:.3e} for {where}{at}state={self.state.tolist()}")


StateFn = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class AgentModel:
    """Normal-form drift ``f`` and input gain ``g``.

    Both callables take states of shape ``(..., n)`` and return arrays of
    shape ``(...)``.
    """

    n: int
    drift: StateFn
    input_gain: StateFn
    name: str = "custom"

    def f(self, x):
        return np.asarray(self.drift(np.asarray(x, dtype=float)), dtype=float)

    def g(self, x):
        return np.asarray(self.input_gain(np.asarray(x, dtype=float)), dtype=float)


def _chain_model(n: int) -> AgentModel:
    return AgentModel(
        n=n,
        drift=lambda x: np.zeros(np.shape(x)[:-1]),
        input_gain=lambda x: np.ones(np.shape(x)[:-1]),
        name="chain",
    )


def _nonlinear3(n: int) -> AgentModel:
    if n != 3:
        raise ValueError(f"model 'nonlinear3' is third order, scenario order is {n}")
    return AgentModel(
        n=3,
        drift=lambda x: x[..., 0] * x[..., 1] * np.sin(x[..., 2]) + 0.1 * x[..., 0] * x[..., 2],
        input_gain=lambda x: np.full(np.shape(x)[:-1], -2.0),
        name="nonlinear3",
    )


CATALOGUE: dict[str, Callable[[int], AgentModel]] = {
    "chain": _chain_model,
    "nonlinear3": _nonlinear3,
}


@lru_cache(maxsize=None)
def catalogue_model(name: str, n: int) -> AgentModel:
    """Shared (immutable) instance of a catalogue model."""
    try:
        factory = CATALOGUE[name]
    except KeyError:
        raise ValueError(f"unknown agent model {name!r}; choose from {sorted(CATALOGUE)}") from None
    return factory(n)


def expression_model(f: str, g: str, n: int) -> AgentModel:
    fe, ge = Expression(f, n), Expression(g, n)
    for label, expr in (("f", fe), ("g", ge)):
        if expr.uses_time:
            raise ValueError(f"agent model {label}={expr.source!r} must not depend on t")
    model = AgentModel(n=n, drift=lambda x: fe(x), input_gain=lambda x: ge(x), name=f"expr(f={f}, g={g})")
    return model


@dataclass(frozen=True)
class LeaderModel:
    n: int
    initial_state: np.ndarray
    input: Callable[[float], float] = field(default=lambda t: 0.0)

    def u(self, t: float) -> float:
        return float(self.input(t))


@dataclass(frozen=True)
class DisturbanceSpec:
    """Matched disturbance ``rho(t)`` of one follower.

    kind ``"none"``: zero. ``"sinusoidal_offset"``: ``alpha * (1 + sin(omega t))``.
    ``"table"``: piecewise-linear interpolation of ``values`` over ``times``,
    held constant outside the table.
    """

    kind: str = "none"
    alpha: float = 0.0
    omega: float = 5.0
    times: tuple[float, ...] = ()
    values: tuple[float, ...] = ()

    def __post_init__(self):
        if self.kind not in ("none", "sinusoidal_offset", "table"):
            raise ValueError(f"unknown disturbance kind {self.kind!r}")
        if self.kind == "table":
            if len(self.times) == 0 or len(self.times) != len(self.values):
                raise ValueError("disturbance table needs equally long, nonempty times and values")
            if np.any(np.diff(self.times) <= 0):
                raise ValueError("disturbance table times must be strictly increasing")

    def __call__(self, t):
        return disturbance_value(self, t)

    def bound(self) -> float:
        if self.kind == "none":
            return 0.0
        if self.kind == "sinusoidal_offset":
            return 2.0 * abs(self.alpha)
        return float(np.max(np.abs(self.values)))


def disturbance_value(spec: DisturbanceSpec, t):
    if spec.kind == "none":
        return np.zeros_like(np.asarray(t, dtype=float)) if np.ndim(t) else 0.0
    if spec.kind == "sinusoidal_offset":
        return spec.alpha * (1.0 + np.sin(spec.omega * np.asarray(t, dtype=float)))
    return np.interp(t, spec.times, spec.values)


def draw_amplitudes(seed: int, count: int) -> np.ndarray:
    """Disturbance amplitudes drawn uniformly in ``(0, 1)`` from a seeded generator."""
    rng = np.random.default_rng(seed)
    alpha = rng.uniform(0.0, 1.0, size=count)
    # uniform() is half-open at 0; keep the open interval
    return np.where(alpha == 0.0, np.nextafter(0.0, 1.0), alpha)


def feedback_linearize(model: AgentModel, x, v, *, agent=None, t=None):
    """Physical input ``u = (-f(x) + v) / g(x)``."""
    x = np.asarray(x, dtype=float)
    g = model.g(x)
    bad = np.abs(g) < SINGULAR_GAIN_TOL
    if np.any(bad):
        idx = np.flatnonzero(np.atleast_1d(bad))[0]
        state = x if x.ndim == 1 else x.reshape(-1, x.shape[-1])[idx]
        gain = float(np.atleast_1d(g)[idx])
        raise SingularInputGain(agent if x.ndim == 1 else idx, t, state, gain)
    u = (-model.f(x) + v) / g
    return float(u) if np.ndim(u) == 0 else u


def chain_derivative(x: Sequence[float], v: float, rho: float) -> np.ndarray:
    """``(x_2, ..., x_n, v + rho)``."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.size == 0:
        raise ValueError(f"state must be a nonempty vector, got shape {x.shape}")
    out = np.empty_like(x)
    out[:-1] = x[1:]
    out[-1] = v + rho
    return out
