"""Fixed-step forward-Euler simulation of the leader-follower network.

One step:

1. snapshot follower states, leader state and the communication buffer;
2. compute every e_i, xi_i, s_i and v_i from the snapshot;
3. integrate followers (physical model with ``u = (-f + v) / g``) and leader;
4. commit the new buffer.

In ``buffered`` mode the neighbour inputs ``v_j`` come from the previous
step (zero at ``t = 0``). In ``topological`` mode they are the current-step
values, evaluated in topological order; this needs an acyclic follower graph.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import TYPE_CHECKING, Sequence

import numpy as np

from .dynamics import SINGULAR_GAIN_TOL, DisturbanceSpec, SingularInputGain
from .protocols import consensus_errors, equivalent_control
from .tbg import build_basis, evaluate_grid
from .topology import topological_order

if TYPE_CHECKING:  # pragma: no cover
    from .scenario import Scenario

__all__ = [
    "SimConfig",
    "SimResult",
    "Metrics",
    "DivergenceError",
    "run",
    "sweep_initial_norm",
    "sweep_tf",
    "sweep_agent_count",
    "MODES",
]

MODES = ("buffered", "topological")
MAX_RECORDS = 50_000
DIVERGENCE_LIMIT = 1e9


class DivergenceError(RuntimeError):
    def __init__(self, t: float, agent: int, state):
        self.t, self.agent, self.state = t, agent, np.asarray(state)
        super().__init__(f"state diverged at t={t:.6g} for agent {agent}: {self.state.tolist()}")


@dataclass(frozen=True)
class SimConfig:
    dt: float = 1e-4
    horizon: float | None = None  # None: 1.4 * t_f
    mode: str = "buffered"
    stride: int | None = None  # None: smallest stride giving <= MAX_RECORDS records
    record: bool = True
    threshold: float = 1e-4  # consensus-error level used by the settling diagnostics

    def resolved(self, t_f: float) -> "SimConfig":
        horizon = 1.4 * t_f if self.horizon is None else float(self.horizon)
        if self.mode not in MODES:
            raise ValueError(f"unknown evaluation mode {self.mode!r}; choose from {MODES}")
        if not 0 < self.dt <= t_f / 100 * (1 + 1e-12):
            raise ValueError(f"dt={self.dt} must satisfy 0 < dt <= t_f/100 = {t_f / 100}")
        if horizon < t_f:
            raise ValueError(f"horizon {horizon} is shorter than the settling time {t_f}")
        steps = int(round(horizon / self.dt))
        stride = self.stride
        if stride is None:
            stride = max(1, math.ceil((steps + 1) / MAX_RECORDS))
        if stride < 1:
            raise ValueError("record stride must be >= 1")
        return replace(self, horizon=horizon, stride=int(stride))


@dataclass
class Metrics:
    final_error_norm: float
    max_abs_v: float
    threshold: float
    first_below_time: float | None  # first time ||e|| < threshold
    settling_times: np.ndarray  # per agent: time after which ||e_i|| stays < threshold


@dataclass
class SimResult:
    """Recorded trajectories on a shared time grid plus run-wide metrics.

    Array shapes: ``t (T,)``, ``x, e, ref, xi (T, N, n)``, ``x_leader (T, n)``
    and ``s, v, u, rho (T, N)``. Metrics are collected at every integration
    step; the record always contains the samples at ``t_f``, at the horizon
    and at the step where ``max|v|`` occurs, so they can be recomputed from
    the record.
    """

    t: np.ndarray
    x: np.ndarray
    x_leader: np.ndarray
    e: np.ndarray
    ref: np.ndarray
    xi: np.ndarray
    s: np.ndarray
    v: np.ndarray
    u: np.ndarray
    rho: np.ndarray
    metrics: Metrics
    meta: dict = field(default_factory=dict)

    @property
    def n_agents(self) -> int:
        return int(self.meta.get("n_agents", self.x.shape[1] if self.x.ndim == 3 else 0))

    @property
    def order(self) -> int:
        return int(self.meta.get("order", self.x.shape[2] if self.x.ndim == 3 else 0))

    def index_at(self, time: float) -> int:
        return int(np.argmin(np.abs(self.t - time)))

    def recompute_metrics(self) -> tuple[float, float]:
        """``(final_error_norm, max_abs_v)`` from the recorded series."""
        k = self.index_at(self.meta["t_f"])
        return float(np.linalg.norm(self.e[k])), float(np.max(np.abs(self.v))) if self.v.size else 0.0


class _Recorder:
    def __init__(self, steps: int, stride: int, k_f: int, N: int, n: int):
        keep = set(range(0, steps + 1, stride)) | {k_f, steps}
        self.keep = keep
        self.rows: dict[int, tuple] = {}
        self.pending_peak: tuple[int, tuple] | None = None

    def want(self, k: int) -> bool:
        return k in self.keep

    def add(self, k: int, row: tuple):
        self.rows[k] = row

    def peak(self, k: int, row_fn):
        if k in self.keep:
            self.pending_peak = None
        else:
            self.pending_peak = (k, row_fn())

    def finish(self):
        if self.pending_peak is not None:
            k, row = self.pending_peak
            self.rows.setdefault(k, row)
        ks = sorted(self.rows)
        cols = list(zip(*(self.rows[k] for k in ks))) if ks else []
        return ks, cols


def _model_groups(models):
    """Agents sharing a model object are evaluated in one vectorized call; ``None`` means all agents."""
    groups: dict[int, tuple] = {}
    for i, m in enumerate(models):
        groups.setdefault(id(m), (m, []))[1].append(i)
    if len(groups) == 1:
        (m, _), = groups.values()
        return [(m, None)]
    return [(m, np.asarray(idx)) for m, idx in groups.values()]


class _Disturbances:
    def __init__(self, specs: Sequence[DisturbanceSpec]):
        N = len(specs)
        self.alpha = np.zeros(N)
        self.omega = np.zeros(N)
        self.other = []
        for i, spec in enumerate(specs):
            if spec.kind == "sinusoidal_offset":
                self.alpha[i] = spec.alpha
                self.omega[i] = spec.omega
            elif spec.kind != "none":
                self.other.append((i, spec))
        self.any = bool(np.any(self.alpha != 0) or self.other)

    def __call__(self, t: float) -> np.ndarray:
        rho = self.alpha * (1.0 + np.sin(self.omega * t))
        for i, spec in self.other:
            rho[i] = spec(t)
        return rho


def run(scenario: "Scenario", sim: SimConfig | None = None) -> SimResult:
    """Simulate a validated scenario. ``sim`` overrides ``scenario.sim``."""
    cfg = (sim or scenario.sim).resolved(scenario.settling_time)
    n = scenario.order
    t_f = scenario.settling_time
    net = scenario.network
    N = net.N
    proto = scenario.protocol
    dt = cfg.dt
    steps = int(round(cfg.horizon / dt))
    k_f = int(round(t_f / dt))

    basis = build_basis(n, t_f)
    a, b, beta = net.a, net.b, net.beta_degree
    if np.any(beta <= 0):
        raise ValueError(f"agents {np.flatnonzero(beta <= 0).tolist()} have no incoming edges")
    K_fr = proto.K_fr_array
    kind = proto.protocol
    k1 = proto.k1
    cont = proto.continuous
    order = topological_order(net) if cfg.mode == "topological" else None

    models = [ag.model for ag in scenario.agents]
    groups = _model_groups(models)
    disturb = _Disturbances([ag.disturbance for ag in scenario.agents])
    leader = scenario.leader

    X = np.array([ag.initial_state for ag in scenario.agents], dtype=float).reshape(N, n)
    xl = np.array(leader.initial_state, dtype=float).reshape(n)
    E0 = consensus_errors(X, xl, net)
    v_buf = np.zeros(N)
    u_n = np.zeros(N)
    xi_n_prev = None

    rec = _Recorder(steps, cfg.stride, k_f, N, n) if cfg.record else None
    final_error = math.nan
    max_v = 0.0
    first_below = None
    last_above = np.full(N, -1, dtype=np.int64)
    thr = cfg.threshold

    f_val = np.zeros(N)
    g_val = np.ones(N)
    u = np.zeros(N)
    zeros_N = np.zeros(N)

    times = np.arange(steps + 1) * dt
    times[k_f] = t_f
    H_all, Kt_all = evaluate_grid(basis, times)
    ref_all = np.einsum("tjk,ik->tij", H_all, E0)
    Kt_e0_all = Kt_all @ E0.T
    a_rowsum = a.sum(axis=1)
    bxl_w = b[:, None]

    for k in range(steps + 1):
        t = times[k]
        # e_i = sum_j a_ij x_j - beta_i x_i + b_i x_l
        E = a @ X - (a_rowsum + b)[:, None] * X + bxl_w * xl[None, :]
        xi = E - ref_all[k]
        ul = leader.u(t)

        if kind == "continuous_fixed_time":
            xidot = np.zeros(N) if xi_n_prev is None else (xi[:, -1] - xi_n_prev) / dt
            u_eq = equivalent_control(xi, cont)
            s = xidot + u_eq
            nu = u_eq + u_n
        else:
            s = xi[:, :-1] @ K_fr + xi[:, -1]
            nu = k1 * np.sign(s) if kind == "robust_smc" else 0.0

        # mu = b u_l + sum_j a_ij v_j - K_t e_i(0) + K_fr xi_i[1:]
        if order is None:
            mu = b * ul + a @ v_buf - Kt_e0_all[k] + xi[:, 1:] @ K_fr
            v = (mu + nu) / beta
        else:
            mu0 = b * ul - Kt_e0_all[k] + xi[:, 1:] @ K_fr
            nu_arr = np.broadcast_to(nu, (N,))
            v = np.zeros(N)
            for i in order:
                v[i] = (mu0[i] + a[i] @ v + nu_arr[i]) / beta[i]

        for model, idx in groups:
            xs = X if idx is None else X[idx]
            fx = model.f(xs)
            gx = model.g(xs)
            small = np.abs(gx) < SINGULAR_GAIN_TOL
            if small.any():
                j = int(np.flatnonzero(small)[0])
                agent = j if idx is None else int(idx[j])
                raise SingularInputGain(agent, t, X[agent], float(gx[j]))
            if idx is None:
                f_val, g_val = fx, gx
                u = (-fx + v) / gx
            else:
                f_val[idx] = fx
                g_val[idx] = gx
                u[idx] = (-fx + v[idx]) / gx
        rho = disturb(t) if disturb.any else zeros_N

        err_sq = np.einsum("ij,ij->i", E, E)
        err_norm = math.sqrt(err_sq.sum())
        if k == k_f:
            # same reduction as recompute_metrics, so the record reproduces it bit for bit
            final_error = float(np.linalg.norm(E))
        if first_below is None and err_norm < thr:
            first_below = t
        last_above[err_sq >= thr * thr] = k

        vmax = float(np.max(np.abs(v)))
        if rec is not None:
            row = lambda: (t, X.copy(), xl.copy(), E, ref_all[k], xi, np.array(s, dtype=float), v.copy(), np.array(u), rho.copy())
            if rec.want(k):
                rec.add(k, row())
            if vmax > max_v:
                rec.peak(k, row)
        if vmax > max_v:
            max_v = vmax

        if k == steps:
            break

        deriv = np.empty_like(X)
        deriv[:, :-1] = X[:, 1:]
        deriv[:, -1] = f_val + g_val * u + rho
        X = X + dt * deriv
        lderiv = np.empty(n)
        lderiv[:-1] = xl[1:]
        lderiv[-1] = ul
        xl = xl + dt * lderiv

        if not np.all(np.abs(X) <= DIVERGENCE_LIMIT):
            bad = ~(np.abs(X) <= DIVERGENCE_LIMIT)
            agent = int(np.flatnonzero(bad.any(axis=1))[0])
            raise DivergenceError(times[k + 1], agent, X[agent])

        v_buf = v
        if kind == "continuous_fixed_time":
            u_n = u_n + dt * cont.K * np.sign(s)
            xi_n_prev = xi[:, -1].copy()

    settling = np.where(last_above < 0, 0.0, times[np.minimum(last_above + 1, steps)])
    settling = np.where(last_above == steps, math.inf, settling)
    metrics = Metrics(
        final_error_norm=final_error,
        max_abs_v=max_v,
        threshold=thr,
        first_below_time=first_below,
        settling_times=settling,
    )
    meta = {
        "scenario": scenario.name,
        "seed": scenario.seed,
        "alpha": [float(ag.disturbance.alpha) for ag in scenario.agents],
        "dt": dt,
        "t_f": t_f,
        "horizon": cfg.horizon,
        "protocol": kind,
        "mode": cfg.mode,
        "stride": cfg.stride,
        "order": n,
        "n_agents": N,
    }
    if kind == "continuous_fixed_time":
        meta["xidot_estimator"] = "backward difference of xi_n over dt, zero at t=0"

    if rec is None:
        empty = np.zeros((0,))
        return SimResult(empty, np.zeros((0, N, n)), np.zeros((0, n)), np.zeros((0, N, n)), np.zeros((0, N, n)),
                         np.zeros((0, N, n)), np.zeros((0, N)), np.zeros((0, N)), np.zeros((0, N)), np.zeros((0, N)),
                         metrics, meta)
    _, cols = rec.finish()
    tt, xs, xls, es, refs, xis, ss, vs, us, rhos = (np.array(c) for c in cols)
    return SimResult(tt, xs, xls, es, refs, xis, ss, vs, us, rhos, metrics, meta)


def _unrecorded(scenario: "Scenario") -> "Scenario":
    return replace(scenario, sim=replace(scenario.sim, record=False))


def sweep_initial_norm(base: "Scenario", norms: Sequence[float], seed: int, shared_direction: bool = True):
    """Rows ``(norm, final_error_norm, max_abs_v)``.

    Initial states are ``x_i(0) = x_l(0) + norm * d_i`` with ``d`` a seeded
    random direction of unit norm over all stacked follower states. With
    ``shared_direction`` every norm uses the same ``d``; otherwise a fresh
    direction is drawn per norm, in input order.
    """
    base = _unrecorded(base)
    N, n = base.network.N, base.order
    rng = np.random.default_rng(seed)
    xl0 = np.asarray(base.leader.initial_state, dtype=float)
    direction = None
    rows = []
    for r in norms:
        if direction is None or not shared_direction:
            d = rng.standard_normal((N, n))
            direction = d / np.linalg.norm(d)
        x0 = xl0[None, :] + float(r) * direction
        agents = [replace(ag, initial_state=tuple(map(float, x0[i]))) for i, ag in enumerate(base.agents)]
        res = run(replace(base, agents=agents))
        rows.append((float(r), res.metrics.final_error_norm, res.metrics.max_abs_v))
    return rows


def sweep_tf(base: "Scenario", tf_list: Sequence[float]):
    """Rows ``(t_f, final_error_norm, max_abs_v)``; the horizon keeps its ratio to ``t_f``."""
    base = _unrecorded(base)
    ratio = (base.sim.horizon or 1.4 * base.settling_time) / base.settling_time
    rows = []
    for tf in tf_list:
        scn = replace(base, settling_time=float(tf), sim=replace(base.sim, horizon=ratio * float(tf)))
        res = run(scn)
        rows.append((float(tf), res.metrics.final_error_norm, res.metrics.max_abs_v))
    return rows


def sweep_agent_count(
    counts: Sequence[int],
    seed: int,
    order: int = 2,
    t_f: float = 5.0,
    dt: float = 1e-4,
    K_fr: Sequence[float] = (2.0,),
    spread: float = 5.0,
    horizon: float | None = None,
):
    """Rows ``(N, final_error_norm, max_abs_v)`` for undirected rings of chain followers.

    The leader sits at ``(-1, 0, ...)`` and talks to follower 1 only; initial
    states are uniform in ``(-spread, spread)`` from a generator seeded by
    ``(seed, N)``.
    """
    from .scenario import make_scenario

    rows = []
    for N in counts:
        rng = np.random.default_rng([seed, int(N)])
        x0 = rng.uniform(-spread, spread, size=(int(N), order))
        leader = np.zeros(order)
        leader[0] = -1.0
        scn = make_scenario(
            name=f"ring_{N}",
            order=order,
            settling_time=t_f,
            network=_ring(int(N)),
            initial_states=x0,
            leader_state=leader,
            protocol="linear",
            K_fr=K_fr,
            sim=SimConfig(dt=dt, horizon=t_f if horizon is None else horizon, record=False),
            seed=seed,
        )
        res = run(scn)
        rows.append((int(N), res.metrics.final_error_norm, res.metrics.max_abs_v))
    return rows


def _ring(N: int):
    from .topology import ring

    return ring(N)
