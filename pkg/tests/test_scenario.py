import copy
import os
import warnings

import numpy as np
import pytest
import yaml

from ptconsensus import presets
from ptconsensus.engine import SimConfig, run
from ptconsensus.plotting import plot_svg
from ptconsensus.protocols import ConfigWarning
from ptconsensus.scenario import (
    ScenarioError,
    bundled_names,
    csv_header,
    dump,
    load,
    load_bundled,
    make_scenario,
    parse_and_validate,
    read_csv,
    to_document,
    write_csv,
)
from ptconsensus.topology import chain


@pytest.fixture(scope="module")
def robust_doc():
    return yaml.safe_load(open(os.path.join(os.path.dirname(__file__), "..", "src", "ptconsensus", "scenarios",
                                            "paper_g2_robust.scn")))


def parse(doc, **kw):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ConfigWarning)
        return parse_and_validate(doc, **kw)


def issue_paths(doc):
    with pytest.raises(ScenarioError) as info:
        parse(doc)
    return [p for p, _ in info.value.issues]


def test_bundled_scenarios_parse():
    assert set(bundled_names()) >= {"paper_g1_linear", "paper_g1_robust", "paper_g2_linear", "paper_g2_robust",
                                    "paper_g2_continuous"}
    for name in bundled_names():
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", ConfigWarning)
            scn = load_bundled(name)
        assert scn.network.N == 8 and scn.order == 3 and scn.settling_time == 5.0


def test_paper_g2_robust_contents():
    scn = load_bundled("paper_g2_robust")
    assert scn.protocol.protocol == "robust_smc"
    assert scn.protocol.k1 == 2.5 and scn.protocol.K_fr == (1.0, 2.0)
    x0 = np.array([ag.initial_state for ag in scn.agents])
    assert np.array_equal(x0, presets.INITIAL_STATES)
    alpha = [ag.disturbance.alpha for ag in scn.agents]
    assert all(0 < a < 1 for a in alpha)
    assert scn.warnings == ()


def test_agent_count_mismatch_names_field(robust_doc):
    doc = copy.deepcopy(robust_doc)
    doc["agents"] = doc["agents"][:7]
    with pytest.raises(ScenarioError) as info:
        parse(doc)
    assert ("agents", "7 agents listed but the network has 8 followers") in info.value.issues


def test_state_length_mismatch(robust_doc):
    doc = copy.deepcopy(robust_doc)
    doc["agents"][2]["initial_state"] = [1.0, 2.0]
    assert "agents[2].initial_state" in issue_paths(doc)


def test_leader_not_root(robust_doc):
    doc = copy.deepcopy(robust_doc)
    doc["network"]["leader_edges"] = []
    with pytest.raises(ScenarioError, match="leader is not the root"):
        parse(doc)


def test_missing_fields_collected(robust_doc):
    doc = copy.deepcopy(robust_doc)
    del doc["settling_time"]
    del doc["protocol"]
    paths = issue_paths(doc)
    assert "settling_time" in paths and "protocol" in paths


def test_bad_values(robust_doc):
    doc = copy.deepcopy(robust_doc)
    doc["network"]["edges"][0]["weight"] = -1
    doc["protocol"]["K_fr"] = [1.0]
    doc["sim"]["dt"] = 1.0
    paths = issue_paths(doc)
    assert "network.edges[0].weight" in paths
    assert "protocol.K_fr" in paths
    assert "sim" in paths


def test_invalid_yaml():
    with pytest.raises(ScenarioError, match="invalid YAML"):
        parse("order: [1, 2")


def test_topological_mode_on_cycle_rejected(robust_doc):
    doc = copy.deepcopy(robust_doc)
    doc["network"]["edges"].append({"from": 8, "to": 1, "weight": 1.0})
    assert "sim.mode" in issue_paths(doc)


def test_non_hurwitz_is_a_warning(robust_doc):
    doc = copy.deepcopy(robust_doc)
    doc["protocol"]["K_fr"] = [1.0, -2.0]
    with pytest.warns(ConfigWarning):
        scn = parse_and_validate(doc)
    assert any("Hurwitz" in w for w in scn.warnings)


def test_gain_condition_warning(robust_doc):
    doc = copy.deepcopy(robust_doc)
    doc["protocol"]["k1"] = 0.1
    scn = parse(doc)
    assert any("sliding gain condition" in w for w in scn.warnings)


def test_fractions_and_expressions(robust_doc):
    doc = copy.deepcopy(robust_doc)
    doc["settling_time"] = "10/2"
    doc["agents"][0]["model"] = {"f": "x1*x2*sin(x3) + 0.1*x1*x3", "g": "-2"}
    doc["leader"]["input"] = "0.1*sin(t)"
    scn = parse(doc)
    assert scn.settling_time == 5.0
    x = np.array([0.3, -1.2, 0.7])
    ref = load_bundled("paper_g2_robust").agents[0].model
    assert scn.agents[0].model.f(x) == pytest.approx(float(ref.f(x)), abs=1e-15)
    assert scn.leader.u(1.0) == pytest.approx(0.1 * np.sin(1.0))
    doc["leader"]["input"] = "x1 + t"
    assert "leader.input" in issue_paths(doc)


def test_random_alpha_follows_seed(robust_doc):
    a = [ag.disturbance.alpha for ag in parse(robust_doc).agents]
    b = [ag.disturbance.alpha for ag in parse(robust_doc).agents]
    c = [ag.disturbance.alpha for ag in parse(robust_doc, seed=7).agents]
    assert a == b and a != c
    assert parse(robust_doc, seed=7).seed == 7


def test_dump_parse_round_trip():
    for name in bundled_names():
        scn = parse(dump(load_bundled(name)))
        again = parse(dump(scn))
        assert to_document(again) == to_document(scn)
        assert np.array_equal(again.network.a, load_bundled(name).network.a)
        assert [ag.disturbance for ag in again.agents] == [ag.disturbance for ag in scn.agents]


def test_load_by_bundled_name_and_missing_file(tmp_path):
    assert load("paper_g2_linear.scn").name == "paper_g2_linear"
    with pytest.raises(FileNotFoundError, match="not found"):
        load(tmp_path / "missing.scn")
    path = tmp_path / "x.scn"
    path.write_text(dump(load_bundled("paper_g2_linear")))
    assert load(path).name == "paper_g2_linear"


def _one_agent_run():
    # agent at the leader: v stays 0, so no extra max|v| row is forced into the record
    scn = make_scenario(
        name="tiny", order=1, settling_time=1.0, network=chain(1), initial_states=[[0.0]], leader_state=[0.0],
        sim=SimConfig(dt=0.01, horizon=1.0, stride=100),
    )
    return run(scn)


def test_csv_line_arithmetic(tmp_path):
    res = _one_agent_run()
    assert res.t.tolist() == [0.0, 1.0]
    path = tmp_path / "r.csv"
    write_csv(res, path, compact_header=True)
    lines = path.read_text().splitlines()
    assert len(lines) == 1 + 1 + 4
    assert lines[0].startswith("# {")
    assert lines[1] == "t,agent,x1,e1,xi1,s,v,u,rho"
    assert lines[2].startswith("0,0,0,,,,,,")
    assert lines[3].split(",")[:2] == ["0", "1"]


def test_csv_header_row():
    assert ",".join(csv_header(3)) == "t,agent,x1,x2,x3,e1,e2,e3,xi1,xi2,xi3,s,v,u,rho"


def test_csv_comment_block(tmp_path):
    res = _one_agent_run()
    path = tmp_path / "r.csv"
    write_csv(res, path)
    comments = [ln for ln in path.read_text().splitlines() if ln.startswith("#")]
    keys = [ln[2:].split(":")[0] for ln in comments]
    for key in ("scenario", "seed", "alpha", "dt", "t_f", "protocol"):
        assert key in keys


def test_empty_result_writes_header_only(tmp_path):
    scn = make_scenario(
        name="empty", order=2, settling_time=1.0, network=chain(1), initial_states=[[1.0, 0.0]],
        leader_state=[0.0, 0.0], K_fr=(2.0,), sim=SimConfig(dt=0.01, record=False),
    )
    res = run(scn)
    path = tmp_path / "e.csv"
    write_csv(res, path, compact_header=True)
    lines = path.read_text().splitlines()
    assert lines[1:] == ["t,agent,x1,x2,e1,e2,xi1,xi2,s,v,u,rho"]
    assert read_csv(path).t.shape == (0,)


def test_csv_round_trip_metrics_exact(bundled_run, tmp_path):
    _, res = bundled_run("paper_g2_robust")
    path = tmp_path / "g2.csv"
    write_csv(res, path)
    back = read_csv(path)
    assert back.metrics.final_error_norm == res.metrics.final_error_norm
    assert back.metrics.max_abs_v == res.metrics.max_abs_v
    for name in ("t", "x", "x_leader", "e", "xi", "s", "v", "u", "rho"):
        assert np.array_equal(getattr(back, name), getattr(res, name)), name


def test_csv_write_error_names_path(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("")
    with pytest.raises(OSError, match="file"):
        write_csv(_one_agent_run(), blocker / "sub" / "r.csv")


def test_plots(tmp_path):
    xl = (0.5, 0.0)
    scn = make_scenario(
        name="flat", order=2, settling_time=1.0, network=chain(3), initial_states=np.tile(xl, (3, 1)),
        leader_state=xl, K_fr=(2.0,), sim=SimConfig(dt=0.01),
    )
    res = run(scn)
    assert np.all(res.x[..., 0] == 0.5)
    for what in ("states", "errors", "surfaces", "inputs"):
        out = plot_svg(res, what, tmp_path / f"{what}.svg")
        text = out.read_text()
        assert text.lstrip().startswith("<?xml") and "</svg>" in text
    csv = tmp_path / "flat.csv"
    write_csv(res, csv)
    assert plot_svg(csv, "errors", tmp_path / "from_csv.svg").exists()
    with pytest.raises(ValueError, match="states, errors, surfaces, inputs"):
        plot_svg(res, "phase", tmp_path / "bad.svg")
    assert not (tmp_path / "bad.svg").exists()


def test_errors_plot_anchor_below_threshold(bundled_run):
    scn, res = bundled_run("paper_g2_robust")
    k = res.index_at(scn.settling_time)
    assert np.max(np.abs(res.e[k])) < 1e-3
