from dataclasses import replace

import numpy as np
import pytest

from ptconsensus import presets
from ptconsensus.dynamics import DisturbanceSpec, SingularInputGain, expression_model
from ptconsensus.engine import DivergenceError, SimConfig, run, sweep_agent_count, sweep_initial_norm, sweep_tf
from ptconsensus.scenario import make_scenario
from ptconsensus.topology import Network, chain

from conftest import fast_sim


def g2():
    return Network.from_edges(8, [(s - 1, d - 1, 1.0) for s, d in presets.G2_EDGES], [(0, 1.0)])


def g2_scenario(protocol="linear", sim=None, **kw):
    models = ["nonlinear3", "chain"] * 4
    return make_scenario(
        name="g2", order=3, settling_time=5.0, network=g2(), initial_states=presets.INITIAL_STATES,
        leader_state=presets.LEADER_STATE, protocol=protocol, K_fr=(1.0, 2.0), models=models,
        sim=sim or fast_sim(), **kw,
    )


def single(x0, t_f=1.0, dt=1e-4, **kw):
    n = len(x0)
    K_fr = {1: (), 2: (2.0,), 3: (1.0, 2.0)}[n]
    return make_scenario(
        name="one", order=n, settling_time=t_f, network=chain(1), initial_states=[x0], leader_state=np.zeros(n),
        K_fr=K_fr, sim=SimConfig(dt=dt, **kw),
    )


def test_all_agents_at_leader_stay_there():
    xl = (0.5, 0.25, 0.0)
    scn = make_scenario(
        name="trivial", order=3, settling_time=1.0, network=g2(), initial_states=np.tile(xl, (8, 1)),
        leader_state=xl, K_fr=(1.0, 2.0), sim=SimConfig(dt=1e-3, stride=1),
    )
    res = run(scn)
    assert np.max(np.abs(res.x - res.x_leader[:, None, :])) <= 1e-12
    assert not res.v.any()
    assert res.metrics.max_abs_v == 0.0 and res.metrics.final_error_norm == 0.0


def test_deterministic():
    scn = g2_scenario("robust_smc", k1=2.5, disturbances=[DisturbanceSpec("sinusoidal_offset", alpha=0.3)] * 8)
    a, b = run(scn), run(scn)
    for name in ("t", "x", "x_leader", "e", "ref", "xi", "s", "v", "u", "rho"):
        assert np.array_equal(getattr(a, name), getattr(b, name)), name
    assert a.metrics.final_error_norm == b.metrics.final_error_norm


def test_v_zero_at_start_and_anchor_reused():
    res = run(g2_scenario(sim=fast_sim(stride=1)))
    assert not res.v[0].any()
    assert np.array_equal(res.e[0], res.ref[0])
    assert not res.xi[0].any()
    k_f = res.index_at(5.0)
    assert not res.ref[k_f:].any()


def test_recorded_u_is_feedback_linearizing_input():
    scn = g2_scenario("robust_smc", k1=2.5, disturbances=[DisturbanceSpec("sinusoidal_offset", alpha=0.5)] * 8)
    res = run(scn)
    for i, ag in enumerate(scn.agents):
        f, g = ag.model.f(res.x[:, i]), ag.model.g(res.x[:, i])
        assert np.allclose(res.u[:, i], (-f + res.v[:, i]) / g, rtol=1e-13, atol=1e-13)
        assert np.allclose(res.rho[:, i], 0.5 * (1 + np.sin(5 * res.t)), atol=1e-15)


def test_metrics_recomputable_from_record():
    res = run(g2_scenario("robust_smc", k1=2.5, sim=fast_sim(stride=37)))
    final, vmax = res.recompute_metrics()
    assert final == res.metrics.final_error_norm
    assert vmax == res.metrics.max_abs_v
    assert res.t[res.index_at(5.0)] == 5.0
    assert np.all(np.diff(res.t) > 0)


def test_divergence_reports_time_and_agent():
    scn = make_scenario(
        name="blowup", order=2, settling_time=1.0, network=chain(2), initial_states=[[1.0, 0.0], [0.0, 1.0]],
        leader_state=(0.0, 0.0), K_fr=(-40.0,), sim=SimConfig(dt=1e-3),
    )
    with pytest.raises(DivergenceError) as info:
        run(scn)
    assert 0 < info.value.t <= 1.4
    assert info.value.agent in (0, 1)
    assert "diverged" in str(info.value)


def test_singular_input_gain_aborts():
    scn = single((0.0, 1.0))
    bad = expression_model("0", "x1", 2)
    scn = replace(scn, agents=tuple(replace(ag, model=bad) for ag in scn.agents))
    with pytest.raises(SingularInputGain) as info:
        run(scn)
    assert info.value.agent == 0 and info.value.t == 0.0


@pytest.mark.parametrize(
    "kw, match",
    [
        ({"dt": 0.02}, "dt="),
        ({"dt": 0.0}, "dt="),
        ({"horizon": 0.5}, "horizon"),
        ({"mode": "async"}, "mode"),
        ({"stride": 0}, "stride"),
    ],
)
def test_sim_config_validation(kw, match):
    with pytest.raises(ValueError, match=match):
        SimConfig(**kw).resolved(1.0)


def test_sim_config_defaults():
    cfg = SimConfig().resolved(5.0)
    assert cfg.horizon == pytest.approx(7.0)
    assert cfg.stride == 2  # 70001 steps at <= 50k records


def test_topological_mode_rejects_cycles():
    scn = make_scenario(
        name="cyc", order=2, settling_time=1.0,
        network=Network(np.array([[0.0, 1.0], [1.0, 0.0]]), [1.0, 0.0]),
        initial_states=[[1.0, 0.0], [0.0, 0.0]], leader_state=(0.0, 0.0), K_fr=(2.0,),
        sim=SimConfig(dt=1e-3, mode="topological"),
    )
    with pytest.raises(ValueError, match="cycle"):
        run(scn)


@pytest.mark.parametrize("x0", [(1.0, 0.0), (1.0, 0.5), (-2.0, 0.3, 0.4)])
def test_prescribed_time_first_crossing(x0):
    dt = 1e-4 if len(x0) == 2 else 2e-5
    res = run(single(x0, dt=dt, record=False))
    assert res.metrics.final_error_norm < 1e-4
    assert 0.95 <= res.metrics.first_below_time <= 1.0


def test_settling_diagnostics_per_agent():
    res = run(single((1.0, 0.0), record=False))
    (ts,) = res.metrics.settling_times
    assert 0.95 <= ts <= 1.0


def test_post_tf_regulation_robust_perturbed(bundled_run):
    scn, res = bundled_run("paper_g2_robust")
    after = res.t >= scn.settling_time
    norms = np.linalg.norm(res.e[after], axis=(1, 2))
    assert norms.max() < 10 * scn.sim.threshold


def test_sweep_norm_zero_and_determinism():
    base = g2_scenario()
    (row,) = sweep_initial_norm(base, [0.0], seed=3)
    assert row == (0.0, 0.0, 0.0)
    a = sweep_initial_norm(base, [1.0, 2.0], seed=3)
    b = sweep_initial_norm(base, [1.0, 2.0], seed=3)
    assert a == b
    c = sweep_initial_norm(base, [1.0, 2.0], seed=4)
    assert c != a


def test_doubling_initial_error_doubles_max_v():
    base = g2_scenario()
    (_, e1, v1), (_, e2, v2) = sweep_initial_norm(base, [1.5, 3.0], seed=9)
    assert v2 / v1 == pytest.approx(2.0, rel=1e-6)
    assert e2 / e1 == pytest.approx(2.0, rel=1e-6)


def test_sweep_tf():
    assert sweep_tf(g2_scenario(), []) == []
    rows = sweep_tf(g2_scenario(), [2.5, 5.0, 10.0])
    assert [r[0] for r in rows] == [2.5, 5.0, 10.0]
    vmax = [r[2] for r in rows]
    assert vmax[0] > vmax[1] > vmax[2]


def test_sweep_agents_small_ring():
    rows = sweep_agent_count([2, 3], seed=1, dt=1e-3)
    assert [r[0] for r in rows] == [2, 3]
    assert all(r[1] < 1e-1 for r in rows)
    assert rows == sweep_agent_count([2, 3], seed=1, dt=1e-3)


def test_unrecorded_run_has_metrics_only():
    res = run(single((1.0, 0.0), record=False))
    assert res.t.shape == (0,) and res.x.shape == (0, 1, 2)
    assert np.isfinite(res.metrics.final_error_norm)
