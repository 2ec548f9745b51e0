import csv
import io
import json
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import THRESHOLD_APPROX_VALUE, random_homogeneous, random_instance
from dppersuade.cli import cmd_gap, parse_grid, run
from dppersuade.cli_io import instance_to_json, parse_instance, parse_scheme, read_json
from dppersuade.lp_single import solve_single
from dppersuade.model import Approx, Pure, ValidationError

INSTANCES = Path(__file__).resolve().parents[1] / "instances"
THRESHOLD_FILE = INSTANCES / "threshold_receiver.json"
MULTI_FILE = INSTANCES / "homogeneous_n3_t2.json"


def _run_json(argv, tmp_path, name="out.json"):
    out = tmp_path / name
    code = run(argv + ["--out", str(out)])
    return code, (json.loads(out.read_text()) if out.exists() else None)


def _write(tmp_path, doc, name="inst.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc))
    return str(path)


def test_solve_threshold_privacy_overrides(tmp_path):
    code, doc = _run_json(["solve", str(THRESHOLD_FILE), "--privacy", "pure", "--epsilon", "0.1"], tmp_path)
    assert code == 0 and doc["value"] == pytest.approx(0.0, abs=1e-12)
    code, doc = _run_json(["solve", str(THRESHOLD_FILE), "--privacy", "none"], tmp_path)
    assert code == 0 and doc["value"] == pytest.approx(0.95, abs=1e-12)
    code, doc = _run_json(["solve", str(THRESHOLD_FILE)], tmp_path)
    assert doc["value"] == pytest.approx(THRESHOLD_APPROX_VALUE, abs=1e-9)
    assert doc["privacy_report"]["satisfied"]
    assert set(doc) >= {"value", "scheme", "posteriors", "support_size", "privacy_report", "solver", "tolerances"}


def test_solve_binary_and_renyi_paths(tmp_path):
    code, lp = _run_json(["solve", str(THRESHOLD_FILE), "--solver", "lp"], tmp_path, "a.json")
    code2, bi = _run_json(["solve", str(THRESHOLD_FILE), "--solver", "binary"], tmp_path, "b.json")
    assert code == code2 == 0
    assert lp["value"] == pytest.approx(bi["value"], abs=1e-9)
    code, doc = _run_json(
        ["solve", str(THRESHOLD_FILE), "--privacy", "renyi", "--alpha", "2", "--epsilon", "0.1"], tmp_path
    )
    assert code == 0 and doc["solver"].startswith("binary") and doc["privacy_report"]["satisfied"]
    assert run(["solve", str(THRESHOLD_FILE), "--privacy", "renyi", "--alpha", "2",
                "--epsilon", "0.1", "--solver", "lp"]) == 2


def test_malformed_prior_exit_code(tmp_path, capsys):
    doc = read_json(THRESHOLD_FILE)
    doc["prior"] = [0.5, 0.4]
    assert run(["solve", _write(tmp_path, doc)]) == 2
    assert "prior" in capsys.readouterr().err


def test_invalid_json_reports_position(tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text('{"n": 1,\n "states": [}')
    assert run(["solve", str(path)]) == 2
    assert "bad.json:2:" in capsys.readouterr().err


def test_missing_table_entry_named(tmp_path, capsys):
    doc = read_json(THRESHOLD_FILE)
    del doc["receiver_u"]["act"]["1"]
    assert run(["solve", _write(tmp_path, doc)]) == 2
    assert "receiver_u.act.1" in capsys.readouterr().err


def test_verify_round_trip(tmp_path):
    result = tmp_path / "res.json"
    assert run(["solve", str(THRESHOLD_FILE), "--out", str(result)]) == 0
    code, doc = _run_json(["verify", str(THRESHOLD_FILE), str(result)], tmp_path, "rep.json")
    assert code == 0 and doc["satisfied"] and doc["bayes_plausible"]


def test_verify_full_revelation_violates(tmp_path):
    doc = read_json(THRESHOLD_FILE)
    doc["privacy"] = {"type": "pure", "epsilon": 1.0}
    inst = _write(tmp_path, doc)
    scheme = _write(tmp_path, {"signals": ["ignore", "act"], "probs": [[1, 0], [0, 1]]}, "s.json")
    code, rep = _run_json(["verify", inst, scheme], tmp_path, "rep.json")
    assert code == 1 and not rep["privacy_report"]["satisfied"]


def test_verify_perturbed_scheme_names_pair(tmp_path):
    result = tmp_path / "res.json"
    run(["solve", str(THRESHOLD_FILE), "--out", str(result)])
    doc = json.loads(result.read_text())
    probs = doc["scheme"]["probs"]
    # move 0.05 of state-1 mass onto the recommend-act signal, keeping the column normalised
    probs[1][1] += 0.05
    probs[0][1] -= 0.05
    bumped = _write(tmp_path, doc, "bumped.json")
    code, rep = _run_json(["verify", str(THRESHOLD_FILE), bumped], tmp_path, "rep.json")
    assert code == 1
    assert rep["privacy_report"]["worst_pair"] == {"theta": "0", "theta_prime": "1", "bit": 1}


def test_verify_unnormalised_scheme_is_input_error(tmp_path):
    scheme = _write(tmp_path, {"signals": ["a", "b"], "probs": [[0.5, 0.5], [0.6, 0.5]]}, "s.json")
    assert run(["verify", str(THRESHOLD_FILE), scheme]) == 2


def test_frontier_monotone_and_deterministic(tmp_path, monkeypatch):
    argv = ["frontier", str(THRESHOLD_FILE), "--epsilons", "0.05:1.0:0.05", "--deltas", "0,0.01"]
    first, second = tmp_path / "a.csv", tmp_path / "b.csv"
    assert run(argv + ["--out", str(first)]) == 0
    monkeypatch.setenv("DPPERSUADE_THREADS", "1")
    assert run(argv + ["--out", str(second)]) == 0
    assert first.read_bytes() == second.read_bytes()
    rows = list(csv.DictReader(io.StringIO(first.read_text())))
    assert len(rows) == 40
    assert list(rows[0]) == ["epsilon", "delta", "value", "support_size"]
    for delta in ("0", "0.01"):
        vals = [float(r["value"]) for r in rows if r["delta"] == delta]
        assert all(b >= a - 1e-9 for a, b in zip(vals, vals[1:]))
    pure_01 = [r for r in rows if r["delta"] == "0" and float(r["epsilon"]) == 0.1]
    assert float(pure_01[0]["value"]) == 0.0


def test_frontier_single_point(tmp_path):
    out = tmp_path / "one.csv"
    assert run(["frontier", str(THRESHOLD_FILE), "--epsilons", "0.095", "--deltas", "0.01",
                "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert len(lines) == 2
    assert float(lines[1].split(",")[2]) == pytest.approx(THRESHOLD_APPROX_VALUE, abs=1e-9)


def test_frontier_rejects_bad_grid():
    assert run(["frontier", str(THRESHOLD_FILE), "--epsilons", "0,0.1"]) == 2
    assert run(["frontier", str(THRESHOLD_FILE), "--epsilons", "a:b"]) == 2


def test_parse_grid():
    assert parse_grid("0.05:0.2:0.05") == [0.05, 0.1, 0.15, 0.2]
    assert parse_grid("1, 2") == [1.0, 2.0]
    with pytest.raises(ValidationError):
        parse_grid("")


def test_gap_commands(tmp_path):
    code, doc = _run_json(["gap", "pure-approx", "--eps1", "0.1", "--eps2", "0.1", "--delta", "0.01"], tmp_path)
    assert code == 0 and doc["certified"] and doc["bound"] == pytest.approx(0.4502, abs=1e-4)
    doc = cmd_gap("pure-none", epsilon=1.0)
    assert doc["certified"] and doc["gap"] >= 0.37
    doc = cmd_gap("approx-none", epsilon=0.5, delta=0.01)
    assert doc["certified"] and doc["gap"] >= 0.47
    doc = cmd_gap("ratio", eps1=0.5, eps2=0.5, delta=0.01)
    assert doc["certified"] and doc["pure_value"] == 0.0 and doc["approx_value"] > 0
    assert run(["gap", "pure-approx", "--eps1", "0.5", "--eps2", "0.1", "--delta", "0.01"]) == 2
    assert run(["gap", "pure-none"]) == 2


def test_compare_homogeneous(tmp_path):
    code, doc = _run_json(["compare", str(MULTI_FILE)], tmp_path)
    assert code == 0 and doc["max_abs_diff"] <= 1e-6


def test_compare_single_receiver_collapse(tmp_path):
    doc = {
        "n": 1, "t": 1, "prior": [0.6, 0.4],
        "receiver_u_i": [{"0": {"0": 0, "1": 0}, "1": {"0": -1, "1": 1}}],
        "sender_v_by_count": {"0": {"0": 0, "1": 0}, "1": {"0": 1, "1": 1}},
        "privacy": {"type": "approx", "epsilon": 0.3, "delta": 0.05},
    }
    code, out = _run_json(["compare", _write(tmp_path, doc)], tmp_path)
    single = parse_instance({
        "n": 1, "prior": [0.6, 0.4], "actions": ["0", "1"],
        "receiver_u": {"0": {"0": 0, "1": 0}, "1": {"0": -1, "1": 1}},
        "sender_v": {"0": {"0": 0, "1": 0}, "1": {"0": 1, "1": 1}},
        "privacy": {"type": "approx", "epsilon": 0.3, "delta": 0.05},
    })
    assert code == 0
    assert out["full_value"] == pytest.approx(solve_single(single).value, abs=1e-8)
    assert out["oblivious_value"] == pytest.approx(solve_single(single).value, abs=1e-8)


def test_compare_rejects_heterogeneous(tmp_path, capsys):
    doc = read_json(MULTI_FILE)
    doc["prior"] = [0.1, 0.1, 0.15, 0.1, 0.15, 0.1, 0.2, 0.1]
    assert run(["compare", _write(tmp_path, doc)]) == 2
    assert "prior" in capsys.readouterr().err


def test_solve_multi_paths(tmp_path):
    code, direct = _run_json(["solve", str(MULTI_FILE)], tmp_path, "a.json")
    code2, full = _run_json(["solve", str(MULTI_FILE), "--solver", "full"], tmp_path, "b.json")
    assert code == code2 == 0
    assert direct["value"] == pytest.approx(full["value"], abs=1e-6)
    assert direct["privacy_report"]["satisfied"]
    assert run(["solve", str(THRESHOLD_FILE), "--solver", "oblivious"]) == 2


def test_usage_errors():
    assert run([]) == 2
    assert run(["solve"]) == 2


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_instance_round_trip(seed):
    rng = np.random.default_rng(seed)
    inst = random_instance(rng, privacy=Approx(0.3, 0.01))
    back = parse_instance(json.loads(json.dumps(instance_to_json(inst))))
    assert back.states == inst.states and back.actions == inst.actions
    assert back.privacy == inst.privacy and back.privacy_set == inst.privacy_set
    np.testing.assert_array_equal(back.prior, inst.prior)
    np.testing.assert_array_equal(back.receiver_u, inst.receiver_u)
    np.testing.assert_array_equal(back.sender_v, inst.sender_v)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_multi_instance_round_trip(seed):
    rng = np.random.default_rng(seed)
    inst = random_homogeneous(rng, int(rng.integers(1, 4)), int(rng.integers(1, 3)), Pure(0.4))
    back = parse_instance(json.loads(json.dumps(instance_to_json(inst))))
    assert back.t == inst.t and back.states == inst.states
    np.testing.assert_array_equal(back.prior, inst.prior)
    np.testing.assert_array_equal(back.receiver_u, inst.receiver_u)
    np.testing.assert_array_equal(back.sender_v, inst.sender_v)


def test_result_scheme_round_trip(tmp_path):
    result = tmp_path / "res.json"
    run(["solve", str(THRESHOLD_FILE), "--out", str(result)])
    doc = json.loads(result.read_text())
    inst = parse_instance(read_json(THRESHOLD_FILE))
    scheme = parse_scheme(doc, inst)
    assert scheme.probs.tolist() == doc["scheme"]["probs"]
