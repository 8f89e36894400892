"""Scenario documents, validation and result serialization.

A scenario is a YAML mapping (``.scn`` files); see README for the schema.
Follower ids are 1-based in documents and in CSV output, where the leader is
agent 0. Internally followers are 0-based.
"""

from __future__ import annotations

import json
import os
import tempfile
import warnings
from dataclasses import dataclass, replace
from fractions import Fraction
from importlib import resources
from pathlib import Path
from typing import Any, Sequence

import numpy as np
import yaml

from . import presets
from .dynamics import AgentModel, DisturbanceSpec, LeaderModel, catalogue_model, draw_amplitudes, expression_model
from .engine import MODES, Metrics, SimConfig, SimResult
from .expressions import Expression, ExpressionError
from .protocols import ConfigWarning, ContinuousParams, ProtocolConfig, gain_condition_margin
from .topology import Network, leader_rooted, topological_order

__all__ = [
    "AgentSpec",
    "Scenario",
    "ScenarioError",
    "DEFAULT_SEED",
    "parse_and_validate",
    "load",
    "load_bundled",
    "bundled_names",
    "to_document",
    "dump",
    "make_scenario",
    "write_csv",
    "read_csv",
    "csv_header",
]

DEFAULT_SEED = 2020


class ScenarioError(ValueError):
    """Validation failure; ``issues`` is a list of ``(field path, reason)``."""

    def __init__(self, issues: list[tuple[str, str]]):
        self.issues = issues
        super().__init__("; ".join(f"{p}: {r}" for p, r in issues))


@dataclass(frozen=True, eq=False)
class AgentSpec:
    initial_state: tuple[float, ...]
    model_ref: Any  # catalogue id or {"f": ..., "g": ...}
    model: AgentModel
    disturbance: DisturbanceSpec = DisturbanceSpec()


@dataclass(frozen=True, eq=False)
class Scenario:
    name: str
    order: int
    settling_time: float
    network: Network
    leader: LeaderModel
    agents: tuple[AgentSpec, ...]
    protocol: ProtocolConfig
    sim: SimConfig = SimConfig()
    seed: int = DEFAULT_SEED
    leader_input: Any = 0.0
    warnings: tuple[str, ...] = ()


def _num(value, path, issues, positive=False):
    try:
        if isinstance(value, bool):
            raise TypeError
        if isinstance(value, str):
            out = float(Fraction(value.strip()))
        else:
            out = float(value)
    except (TypeError, ValueError, ZeroDivisionError):
        issues.append((path, f"expected a number, got {value!r}"))
        return None
    if not np.isfinite(out):
        issues.append((path, "must be finite"))
        return None
    if positive and out <= 0:
        issues.append((path, f"must be positive, got {out}"))
        return None
    return out


def _vector(value, n, path, issues):
    if not isinstance(value, (list, tuple)):
        issues.append((path, f"expected a list of {n} numbers"))
        return None
    if len(value) != n:
        issues.append((path, f"has length {len(value)}, expected the system order {n}"))
        return None
    out = [_num(v, f"{path}[{i}]", issues) for i, v in enumerate(value)]
    return None if any(v is None for v in out) else tuple(out)


def _numbers(value, path, issues):
    if value is None:
        return ()
    if not isinstance(value, (list, tuple)):
        issues.append((path, "expected a list of numbers"))
        return None
    out = [_num(v, f"{path}[{i}]", issues) for i, v in enumerate(value)]
    return None if any(v is None for v in out) else tuple(out)


def _require(doc, key, path, issues):
    if not isinstance(doc, dict) or key not in doc:
        issues.append((f"{path}{key}", "missing required field"))
        return None
    return doc[key]


def _leader_input(src, path, issues):
    if src is None:
        return 0.0, (lambda t: 0.0)
    if isinstance(src, (int, float)) and not isinstance(src, bool):
        c = float(src)
        return c, (lambda t: c)
    try:
        expr = Expression(str(src), 1)
    except ExpressionError as exc:
        issues.append((path, str(exc)))
        return None, None
    if expr.uses_state:
        issues.append((path, "leader input may depend on t only"))
        return None, None
    return str(src), (lambda t: expr(None, t))


def _model(ref, n, path, issues):
    try:
        if isinstance(ref, str):
            return catalogue_model(ref, n)
        if isinstance(ref, dict) and set(ref) == {"f", "g"}:
            return expression_model(str(ref["f"]), str(ref["g"]), n)
        issues.append((path, "expected a catalogue id or a mapping with keys f and g"))
    except (ValueError, ExpressionError) as exc:
        issues.append((path, str(exc)))
    return None


def _disturbance(doc, path, issues, alpha_draw):
    if doc is None:
        return DisturbanceSpec()
    if not isinstance(doc, dict):
        issues.append((path, "expected a mapping"))
        return None
    kind = doc.get("kind", "none")
    try:
        if kind == "none":
            return DisturbanceSpec()
        if kind == "sinusoidal_offset":
            raw = doc.get("alpha", "random")
            alpha = alpha_draw() if raw == "random" else _num(raw, f"{path}.alpha", issues)
            omega = _num(doc.get("omega", presets.DISTURBANCE_OMEGA), f"{path}.omega", issues)
            if alpha is None or omega is None:
                return None
            return DisturbanceSpec("sinusoidal_offset", alpha=alpha, omega=omega)
        if kind == "table":
            times = _numbers(doc.get("times"), f"{path}.times", issues)
            values = _numbers(doc.get("values"), f"{path}.values", issues)
            if times is None or values is None:
                return None
            return DisturbanceSpec("table", times=times, values=values)
        issues.append((f"{path}.kind", f"unknown disturbance kind {kind!r}"))
    except ValueError as exc:
        issues.append((path, str(exc)))
    return None


def _network(doc, issues):
    if not isinstance(doc, dict):
        issues.append(("network", "expected a mapping"))
        return None
    directed = bool(doc.get("directed", True))
    edges_doc = doc.get("edges", []) or []
    leader_doc = doc.get("leader_edges", []) or []
    ids = [e.get("from") for e in edges_doc if isinstance(e, dict)] + [e.get("to") for e in edges_doc if isinstance(e, dict)]
    ids += [e.get("to") for e in leader_doc if isinstance(e, dict)]
    ids = [i for i in ids if isinstance(i, int) and not isinstance(i, bool)]
    N = doc.get("followers", max(ids) if ids else 0)
    if not isinstance(N, int) or N < 1:
        issues.append(("network.followers", f"expected a positive follower count, got {N!r}"))
        return None
    edges, leaders = [], []
    for k, e in enumerate(edges_doc):
        p = f"network.edges[{k}]"
        if not isinstance(e, dict) or "from" not in e or "to" not in e:
            issues.append((p, "edge needs 'from' and 'to'"))
            continue
        src, dst = e["from"], e["to"]
        w = _num(e.get("weight", 1.0), f"{p}.weight", issues, positive=True)
        bad = [x for x in (src, dst) if not isinstance(x, int) or not 1 <= x <= N]
        if bad:
            issues.append((p, f"follower ids must be integers in 1..{N}, got {bad}"))
            continue
        if src == dst:
            issues.append((p, "self-loops are not allowed"))
            continue
        if w is not None:
            edges.append((src - 1, dst - 1, w))
    for k, e in enumerate(leader_doc):
        p = f"network.leader_edges[{k}]"
        if not isinstance(e, dict) or "to" not in e:
            issues.append((p, "leader edge needs 'to'"))
            continue
        dst = e["to"]
        w = _num(e.get("weight", 1.0), f"{p}.weight", issues, positive=True)
        if not isinstance(dst, int) or not 1 <= dst <= N:
            issues.append((p, f"follower id must be an integer in 1..{N}, got {dst!r}"))
            continue
        if w is not None:
            leaders.append((dst - 1, w))
    try:
        return Network.from_edges(N, edges, leaders, directed=directed)
    except ValueError as exc:
        issues.append(("network", str(exc)))
        return None


def _protocol(doc, n, issues):
    if not isinstance(doc, dict):
        issues.append(("protocol", "expected a mapping"))
        return None
    kind = doc.get("kind", "linear")
    K_fr = _numbers(doc.get("K_fr", []), "protocol.K_fr", issues)
    k1 = _num(doc.get("k1", 0.0), "protocol.k1", issues)
    cont = None
    cdoc = doc.get("continuous")
    if cdoc is not None:
        if not isinstance(cdoc, dict):
            issues.append(("protocol.continuous", "expected a mapping"))
        else:
            vals = {key: _numbers(cdoc.get(key), f"protocol.continuous.{key}", issues)
                    for key in ("c", "b", "exp_alpha", "exp_beta")}
            K = _num(cdoc.get("K", 0.0), "protocol.continuous.K", issues)
            if all(v is not None for v in vals.values()) and K is not None:
                try:
                    cont = ContinuousParams(K=K, **vals)
                except ValueError as exc:
                    issues.append(("protocol.continuous", str(exc)))
    if K_fr is None or k1 is None:
        return None
    if K_fr and len(K_fr) != n - 1:
        issues.append(("protocol.K_fr", f"has length {len(K_fr)}, expected n-1 = {n - 1}"))
        return None
    try:
        return ProtocolConfig(protocol=kind, K_fr=K_fr, k1=k1, continuous=cont)
    except ValueError as exc:
        issues.append(("protocol", str(exc)))
        return None


def _sim(doc, issues):
    doc = doc or {}
    if not isinstance(doc, dict):
        issues.append(("sim", "expected a mapping"))
        return None
    dt = _num(doc.get("dt", 1e-4), "sim.dt", issues, positive=True)
    horizon = doc.get("horizon")
    if horizon is not None:
        horizon = _num(horizon, "sim.horizon", issues, positive=True)
    mode = doc.get("mode", "buffered")
    if mode == "topo":
        mode = "topological"
    if mode not in MODES:
        issues.append(("sim.mode", f"unknown mode {mode!r}; choose from {MODES}"))
    stride = doc.get("stride")
    if stride is not None and (not isinstance(stride, int) or stride < 1):
        issues.append(("sim.stride", "must be a positive integer"))
    thr = _num(doc.get("threshold", 1e-4), "sim.threshold", issues, positive=True)
    if dt is None or thr is None:
        return None
    return SimConfig(dt=dt, horizon=horizon, mode=mode, stride=stride, threshold=thr)


def parse_and_validate(document, seed: int | None = None) -> Scenario:
    """Build a validated ``Scenario`` from YAML text or an already-loaded mapping.

    ``seed`` overrides the document's seed. Raises ``ScenarioError`` listing
    every problem found; soft problems (non-Hurwitz gains, violated gain
    conditions) are attached to ``Scenario.warnings`` and emitted as
    ``ConfigWarning``.
    """
    if isinstance(document, str):
        try:
            document = yaml.safe_load(document)
        except yaml.YAMLError as exc:
            raise ScenarioError([("<document>", f"invalid YAML: {exc}")]) from None
    if not isinstance(document, dict):
        raise ScenarioError([("<document>", "expected a mapping at top level")])
    issues: list[tuple[str, str]] = []

    name = str(document.get("name", "unnamed"))
    order = _require(document, "order", "", issues)
    if order is not None and (not isinstance(order, int) or isinstance(order, bool) or order < 1):
        issues.append(("order", f"expected a positive integer, got {order!r}"))
        order = None
    tf = _require(document, "settling_time", "", issues)
    tf = None if tf is None else _num(tf, "settling_time", issues, positive=True)
    if seed is None:
        seed = document.get("seed", DEFAULT_SEED)
        if not isinstance(seed, int) or isinstance(seed, bool):
            issues.append(("seed", f"expected an integer, got {seed!r}"))
            seed = DEFAULT_SEED
    sim = _sim(document.get("sim"), issues)
    net_doc = _require(document, "network", "", issues)
    net = _network(net_doc, issues) if net_doc is not None else None
    if order is None:
        raise ScenarioError(issues)

    leader_doc = _require(document, "leader", "", issues)
    leader = None
    leader_src = 0.0
    if isinstance(leader_doc, dict):
        x_l = _vector(_require(leader_doc, "initial_state", "leader.", issues), order, "leader.initial_state", issues)
        leader_src, ufn = _leader_input(leader_doc.get("input", 0.0), "leader.input", issues)
        if x_l is not None and ufn is not None:
            leader = LeaderModel(order, np.asarray(x_l), ufn)
    elif leader_doc is not None:
        issues.append(("leader", "expected a mapping"))

    agents_doc = _require(document, "agents", "", issues)
    agents: list[AgentSpec] = []
    if agents_doc is not None and not isinstance(agents_doc, list):
        issues.append(("agents", "expected a list"))
        agents_doc = None
    if agents_doc is not None:
        if net is not None and len(agents_doc) != net.N:
            issues.append(("agents", f"{len(agents_doc)} agents listed but the network has {net.N} followers"))
        draws = iter(draw_amplitudes(seed, len(agents_doc)))
        for k, ag in enumerate(agents_doc):
            p = f"agents[{k}]"
            if not isinstance(ag, dict):
                issues.append((p, "expected a mapping"))
                continue
            x0 = _vector(_require(ag, "initial_state", p + ".", issues), order, f"{p}.initial_state", issues)
            ref = ag.get("model", "chain")
            model = _model(ref, order, f"{p}.model", issues)
            alpha_k = float(next(draws))
            dist = _disturbance(ag.get("disturbance"), f"{p}.disturbance", issues, lambda a=alpha_k: a)
            if x0 is not None and model is not None and dist is not None:
                agents.append(AgentSpec(x0, ref, model, dist))

    proto_doc = _require(document, "protocol", "", issues)
    proto = _protocol(proto_doc, order, issues) if proto_doc is not None else None

    notes: list[str] = []
    if net is not None:
        if not leader_rooted(net):
            issues.append(("network", "leader is not the root of a spanning tree: some followers cannot be reached from the leader"))
        if sim is not None and sim.mode == "topological":
            try:
                topological_order(net)
            except ValueError as exc:
                issues.append(("sim.mode", str(exc)))
    if tf is not None and sim is not None:
        try:
            sim.resolved(tf)
        except ValueError as exc:
            issues.append(("sim", str(exc)))
    if proto is not None:
        if not proto.K_fr and order > 1:
            issues.append(("protocol.K_fr", f"required with length n-1 = {order - 1}"))
        else:
            try:
                notes.extend(proto.check(order))
            except ValueError as exc:
                issues.append(("protocol", str(exc)))

    if issues:
        raise ScenarioError(issues)

    scn = Scenario(
        name=name, order=order, settling_time=tf, network=net, leader=leader, agents=tuple(agents),
        protocol=proto, sim=sim, seed=seed, leader_input=leader_src,
    )
    notes.extend(_gain_condition_notes(scn))
    for note in notes:
        warnings.warn(note, ConfigWarning, stacklevel=2)
    return replace(scn, warnings=tuple(notes))


def _gain_condition_notes(scn: Scenario) -> list[str]:
    specs = [ag.disturbance for ag in scn.agents]
    if all(s.kind == "none" for s in specs):
        return []
    cfg = scn.sim.resolved(scn.settling_time)
    times = np.linspace(0.0, cfg.horizon, 20001)
    rho = np.stack([np.broadcast_to(s(times), times.shape) for s in specs], axis=1)
    notes = []
    proto = scn.protocol
    if proto.protocol == "robust_smc":
        margin = gain_condition_margin(scn.network, proto.k1, rho)
        bad = np.flatnonzero(margin < 0)
        if bad.size:
            notes.append(f"k1={proto.k1} violates the sliding gain condition for agents {(bad + 1).tolist()} "
                         f"(worst margin {margin.min():.3g})")
    elif proto.protocol == "continuous_fixed_time":
        rho_dot = np.gradient(rho, times, axis=0)
        margin = gain_condition_margin(scn.network, proto.continuous.K, rho_dot)
        bad = np.flatnonzero(margin <= 0)
        if bad.size:
            notes.append(f"K={proto.continuous.K} violates the integrator gain condition for agents {(bad + 1).tolist()} "
                         f"(worst margin {margin.min():.3g})")
    elif proto.protocol == "linear" and np.any(rho != 0):
        notes.append("linear protocol has no disturbance rejection; prescribed-time convergence is not guaranteed")
    return notes


def make_scenario(
    *,
    name: str,
    order: int,
    settling_time: float,
    network: Network,
    initial_states,
    leader_state,
    protocol: str = "linear",
    K_fr: Sequence[float] = (),
    k1: float = 0.0,
    continuous: ContinuousParams | None = None,
    models: Sequence[str] | None = None,
    disturbances: Sequence[DisturbanceSpec] | None = None,
    sim: SimConfig = SimConfig(),
    seed: int = DEFAULT_SEED,
    leader_input: float = 0.0,
) -> Scenario:
    """Programmatic constructor with the same checks as document parsing (minus the warnings)."""
    x0 = np.asarray(initial_states, dtype=float).reshape(network.N, order)
    models = models or ["chain"] * network.N
    disturbances = disturbances or [DisturbanceSpec()] * network.N
    if not leader_rooted(network):
        raise ScenarioError([("network", "leader is not the root of a spanning tree")])
    agents = tuple(
        AgentSpec(tuple(map(float, x0[i])), models[i], catalogue_model(models[i], order), disturbances[i])
        for i in range(network.N)
    )
    c = float(leader_input)
    proto = ProtocolConfig(protocol=protocol, K_fr=tuple(K_fr), k1=k1, continuous=continuous)
    proto.check(order)
    return Scenario(
        name=name, order=order, settling_time=float(settling_time), network=network,
        leader=LeaderModel(order, np.asarray(leader_state, dtype=float), lambda t: c),
        agents=agents, protocol=proto, sim=sim, seed=seed, leader_input=c,
    )


def _plain(x):
    if isinstance(x, (np.floating, float)):
        return float(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    return x


def to_document(scn: Scenario) -> dict:
    """Inverse of ``parse_and_validate`` (drawn amplitudes are written out as numbers)."""
    net = scn.network
    doc: dict[str, Any] = {
        "name": scn.name,
        "order": scn.order,
        "settling_time": scn.settling_time,
        "seed": scn.seed,
        "sim": {"dt": scn.sim.dt, "horizon": scn.sim.horizon, "mode": scn.sim.mode,
                "stride": scn.sim.stride, "threshold": scn.sim.threshold},
        "network": {
            "followers": net.N,
            "directed": net.directed,
            "edges": [{"from": s + 1, "to": d + 1, "weight": w} for s, d, w in net.edge_list()],
            "leader_edges": [{"to": int(i) + 1, "weight": float(net.b[i])} for i in np.flatnonzero(net.b)],
        },
        "leader": {"initial_state": [float(v) for v in scn.leader.initial_state], "input": _plain(scn.leader_input)},
        "agents": [],
        "protocol": {"kind": scn.protocol.protocol, "K_fr": list(scn.protocol.K_fr), "k1": scn.protocol.k1},
    }
    for ag in scn.agents:
        d = ag.disturbance
        if d.kind == "none":
            dist = {"kind": "none"}
        elif d.kind == "sinusoidal_offset":
            dist = {"kind": d.kind, "alpha": d.alpha, "omega": d.omega}
        else:
            dist = {"kind": d.kind, "times": list(d.times), "values": list(d.values)}
        ref = ag.model_ref if isinstance(ag.model_ref, str) else {"f": ag.model_ref["f"], "g": ag.model_ref["g"]}
        doc["agents"].append({"initial_state": list(ag.initial_state), "model": ref, "disturbance": dist})
    if scn.protocol.continuous is not None:
        c = scn.protocol.continuous
        doc["protocol"]["continuous"] = {"c": list(c.c), "b": list(c.b), "exp_alpha": list(c.exp_alpha),
                                         "exp_beta": list(c.exp_beta), "K": c.K}
    return doc


def dump(scn: Scenario) -> str:
    return yaml.safe_dump(to_document(scn), sort_keys=False, default_flow_style=None)


def load(path, seed: int | None = None) -> Scenario:
    """Parse a scenario file; a bare bundled name (with or without ``.scn``) also works."""
    p = Path(path)
    if not p.exists():
        stem = p.name[:-4] if p.name.endswith(".scn") else p.name
        if p.parent == Path(".") and stem in bundled_names():
            return load_bundled(stem, seed=seed)
        raise FileNotFoundError(f"scenario file not found: {path}")
    return parse_and_validate(p.read_text(), seed=seed)


def bundled_names() -> list[str]:
    folder = resources.files("ptconsensus") / "scenarios"
    return sorted(f.name[:-4] for f in folder.iterdir() if f.name.endswith(".scn"))


def load_bundled(name: str, seed: int | None = None) -> Scenario:
    path = resources.files("ptconsensus") / "scenarios" / f"{name}.scn"
    if not path.is_file():
        raise FileNotFoundError(f"no bundled scenario named {name!r}; available: {bundled_names()}")
    return parse_and_validate(path.read_text(), seed=seed)


# --- results -----------------------------------------------------------------

def csv_header(n: int) -> list[str]:
    cols = ["t", "agent"]
    cols += [f"x{k}" for k in range(1, n + 1)]
    cols += [f"e{k}" for k in range(1, n + 1)]
    cols += [f"xi{k}" for k in range(1, n + 1)]
    return cols + ["s", "v", "u", "rho"]


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def atomic_write_text(path, text: str):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        umask = os.umask(0)
        os.umask(umask)
        os.chmod(tmp, 0o666 & ~umask)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


_META_KEYS = ("scenario", "seed", "alpha", "dt", "t_f", "protocol", "mode", "order", "n_agents", "horizon", "threshold")


def write_csv(result: SimResult, path, compact_header: bool = False):
    """Write the record as CSV, time-major and agent-minor, leader first as agent 0."""
    meta = {k: result.meta.get(k) for k in _META_KEYS if k in result.meta}
    meta.setdefault("threshold", result.metrics.threshold)
    n, N = result.order, result.n_agents
    lines = []
    if compact_header:
        lines.append("# " + json.dumps(meta))
    else:
        lines.extend(f"# {k}: {json.dumps(v)}" for k, v in meta.items())
    lines.append(",".join(csv_header(n)))
    empty = [""] * (2 * n + 1)
    for k in range(result.t.shape[0]):
        t = _fmt(result.t[k])
        lines.append(",".join([t, "0", *map(_fmt, result.x_leader[k]), *empty, "", "", ""]))
        for i in range(N):
            row = [t, str(i + 1)]
            row += [_fmt(v) for v in result.x[k, i]]
            row += [_fmt(v) for v in result.e[k, i]]
            row += [_fmt(v) for v in result.xi[k, i]]
            row += [_fmt(result.s[k, i]), _fmt(result.v[k, i]), _fmt(result.u[k, i]), _fmt(result.rho[k, i])]
            lines.append(",".join(row))
    try:
        atomic_write_text(path, "\n".join(lines) + "\n")
    except OSError as exc:
        raise OSError(f"cannot write CSV to {path}: {exc}") from exc


def read_csv(path) -> SimResult:
    """Load a CSV written by ``write_csv``; metrics are recomputed from the rows."""
    meta: dict[str, Any] = {}
    header = None
    rows = []
    with open(path) as fh:
        for line in fh:
            line = line.rstrip("\n")
            if line.startswith("#"):
                body = line[1:].strip()
                if body.startswith("{"):
                    meta.update(json.loads(body))
                elif ": " in body:
                    key, val = body.split(": ", 1)
                    meta[key] = json.loads(val)
            elif header is None:
                header = line.split(",")
            elif line:
                rows.append(line.split(","))
    if header is None:
        raise ValueError(f"{path}: missing CSV header row")
    n = sum(1 for c in header if c.startswith("x") and not c.startswith("xi"))
    if header != csv_header(n):
        raise ValueError(f"{path}: unexpected header {header}")
    N = int(meta.get("n_agents", max((int(r[1]) for r in rows), default=0)))
    T = len(rows) // (N + 1) if rows else 0
    t = np.zeros(T)
    xl = np.zeros((T, n))
    x, e, xi = (np.zeros((T, N, n)) for _ in range(3))
    s, v, u, rho = (np.zeros((T, N)) for _ in range(4))
    for r_idx, r in enumerate(rows):
        k, slot = divmod(r_idx, N + 1)
        agent = int(r[1])
        if agent != slot:
            raise ValueError(f"{path}: row {r_idx} has agent {agent}, expected {slot}")
        t[k] = float(r[0])
        vals = r[2:]
        if agent == 0:
            xl[k] = [float(z) for z in vals[:n]]
            continue
        i = agent - 1
        x[k, i] = [float(z) for z in vals[:n]]
        e[k, i] = [float(z) for z in vals[n:2 * n]]
        xi[k, i] = [float(z) for z in vals[2 * n:3 * n]]
        s[k, i], v[k, i], u[k, i], rho[k, i] = (float(z) for z in vals[3 * n:3 * n + 4])
    meta.setdefault("n_agents", N)
    meta.setdefault("order", n)
    thr = float(meta.get("threshold", 1e-4))
    res = SimResult(t, x, xl, e, e - xi, xi, s, v, u, rho,
                    Metrics(float("nan"), 0.0, thr, None, np.full(N, np.nan)), meta)
    if T and "t_f" in meta:
        final, vmax = res.recompute_metrics()
        # settling diagnostics need every step, which the record does not keep
        res.metrics = Metrics(final, vmax, thr, None, np.full(N, np.nan))
    return res
