"""End-to-end tests of the command-line surface via in-process dispatch."""

from __future__ import annotations

import io
import json
import math

import numpy as np
import pytest

from bellmeter import (
    Behaviour,
    SettingsDistribution,
    behaviour_to_jsonable,
    born_behaviour,
    chained_analysis,
    chsh_report,
    dilate,
    maximally_entangled,
    mix,
    model_from_jsonable,
    model_to_jsonable,
    pr_box,
    reconstruct_behaviour,
    sample_nonsignalling,
    trivial_free_model,
    tsirelson_settings,
)
from bellmeter.cli import dispatch


def tsirelson_behaviour() -> Behaviour:
    alice, bob = tsirelson_settings()
    return born_behaviour(maximally_entangled(), alice, bob)


def run_cli(capsys, argv):
    code = dispatch(argv)
    captured = capsys.readouterr()
    out = json.loads(captured.out) if captured.out.strip() else None
    err = json.loads(captured.err) if captured.err.strip() else None
    return code, out, err


def write_behaviour(tmp_path, b, settings=None, name="behaviour.json"):
    path = tmp_path / name
    path.write_text(json.dumps(behaviour_to_jsonable(b, settings)))
    return str(path)


def write_model(tmp_path, model, name="model.json"):
    path = tmp_path / name
    path.write_text(json.dumps(model_to_jsonable(model)))
    return str(path)


def signalling_table():
    t = np.full((2, 2, 2, 2), 0.25)
    # P(a=0 | x=0) is 0.8 when y=0 but 0.5 when y=1.
    t[0, 0] = [[0.75, 0.05], [0.15, 0.05]]
    return t


# ---------------------------------------------------------------------------
# check
# ---------------------------------------------------------------------------


def test_check_valid_non_signalling(tmp_path, capsys):
    path = write_behaviour(tmp_path, tsirelson_behaviour())
    code, out, _ = run_cli(capsys, ["check", path])
    assert code == 0
    assert out["valid"] is True
    assert out["non_signalling"] is True
    assert out["violations"] == []
    assert out["signalling_witness"] is None


def test_check_reports_signalling_witness(tmp_path, capsys):
    path = write_behaviour(tmp_path, Behaviour.from_table(signalling_table()))
    code, out, _ = run_cli(capsys, ["check", path])
    assert code == 0
    assert out["valid"] is True
    assert out["non_signalling"] is False
    w = out["signalling_witness"]
    assert w["party"] in ("alice", "bob")
    assert w["discrepancy"] > 0.2


def test_check_invalid_behaviour_lists_violations(tmp_path, capsys):
    t = np.full((2, 2, 2, 2), 0.25)
    t[1, 1, 0, 0] = 0.4  # breaks normalization of one cell
    path = write_behaviour(tmp_path, Behaviour.from_table(t))
    code, out, _ = run_cli(capsys, ["check", path])
    assert code == 0
    assert out["valid"] is False
    assert any(v["kind"] == "normalization" for v in out["violations"])


# ---------------------------------------------------------------------------
# chsh / measure
# ---------------------------------------------------------------------------


def test_chsh_tsirelson_values(tmp_path, capsys):
    b = tsirelson_behaviour()
    path = write_behaviour(tmp_path, b)
    code, out, _ = run_cli(capsys, ["chsh", path])
    assert code == 0
    assert out["s_max"] == pytest.approx(2.0 * math.sqrt(2.0), abs=1e-12)
    assert out["measure"] == pytest.approx(2.0 - math.sqrt(2.0), abs=1e-12)
    assert out["non_signalling"] is True
    assert out["s_values"] == list(chsh_report(b).s_values)


def test_measure_both_methods_agree(tmp_path, capsys):
    path = write_behaviour(tmp_path, tsirelson_behaviour())
    code, out, _ = run_cli(capsys, ["measure", path])
    assert code == 0
    assert out["measure_formula"] == pytest.approx(out["measure_lp"], abs=1e-7)


def test_measure_single_method_keys(tmp_path, capsys):
    path = write_behaviour(tmp_path, tsirelson_behaviour())
    _, formula_only, _ = run_cli(capsys, ["measure", path, "--method", "formula"])
    assert "measure_lp" not in formula_only and "measure_formula" in formula_only
    _, lp_only, _ = run_cli(capsys, ["measure", path, "--method", "lp"])
    assert set(lp_only) == {"measure_lp"}


def test_measure_refuses_signalling(tmp_path, capsys):
    path = write_behaviour(tmp_path, Behaviour.from_table(signalling_table()))
    code, out, err = run_cli(capsys, ["measure", path])
    assert code == 1
    assert out is None
    assert err["error"]["type"] == "DomainError"
    assert "signalling" in err["error"]["message"]


# ---------------------------------------------------------------------------
# decompose
# ---------------------------------------------------------------------------


def test_decompose_pr_box_reconstructs(tmp_path, capsys):
    b = mix([sample_nonsignalling(seed=5), pr_box(3).behaviour], [0.15, 0.85])
    path = write_behaviour(tmp_path, b)
    code, out, _ = run_cli(capsys, ["decompose", path])
    assert code == 0
    assert out["method"] == "pr-box"
    assert 1 <= out["pr_box_index"] <= 8
    p = out["p"]
    local = np.asarray(out["local_part"]["probabilities"])
    box = np.asarray(out["pr_box"]["probabilities"])
    recon = p * local + (1.0 - p) * box
    assert np.max(np.abs(recon - b.table)) <= 1e-12


def test_decompose_lp_on_vertex(tmp_path, capsys):
    from bellmeter import enumerate_local_vertices

    vertex = enumerate_local_vertices(2)[6].behaviour
    path = write_behaviour(tmp_path, vertex)
    code, out, _ = run_cli(capsys, ["decompose", path, "--method", "lp"])
    assert code == 0
    assert out["mu"] == 1.0
    assert out["remainder"] is None
    assert sum(out["weights"]) == pytest.approx(1.0, abs=1e-9)


# ---------------------------------------------------------------------------
# dilate / classify
# ---------------------------------------------------------------------------


def test_dilate_roundtrip_and_classify(tmp_path, capsys):
    b = tsirelson_behaviour()
    settings = SettingsDistribution.from_table([[0.4, 0.1], [0.2, 0.3]])
    path = write_behaviour(tmp_path, b, settings)
    code, out, _ = run_cli(capsys, ["dilate", path])
    assert code == 0
    model = model_from_jsonable(out)
    assert np.max(np.abs(reconstruct_behaviour(model).table - b.table)) <= 1e-12

    model_path = tmp_path / "dilated.json"
    model_path.write_text(json.dumps(out))
    code, cls, _ = run_cli(capsys, ["classify", str(model_path)])
    assert code == 0
    assert cls["num_lambda"] == 16
    assert cls["local"] == 16 and cls["nonlocal"] == 0
    assert cls["locality_mass"] == pytest.approx(1.0, abs=1e-12)
    assert cls["freedom_mass"] == 0.0
    assert cls["free"] == 0 and cls["nonfree"] == 16


def test_dilate_defaults_to_uniform_settings(tmp_path, capsys):
    b = sample_nonsignalling(seed=11)
    path = write_behaviour(tmp_path, b)  # no settings_distribution key
    code, out, _ = run_cli(capsys, ["dilate", path])
    assert code == 0
    s = np.asarray(out["settings_distribution"])
    assert np.allclose(s, 0.25)


def test_classify_rejects_invalid_model(tmp_path, capsys):
    m = dilate(sample_nonsignalling(seed=2), SettingsDistribution.uniform(2))
    doc = model_to_jsonable(m)
    doc["p_lambda"][0] += 0.5  # prior no longer sums to 1
    path = tmp_path / "broken.json"
    path.write_text(json.dumps(doc))
    code, _, err = run_cli(capsys, ["classify", str(path)])
    assert code == 1
    assert err["error"]["type"] == "DomainError"


# ---------------------------------------------------------------------------
# quantum / chained
# ---------------------------------------------------------------------------


def test_quantum_matches_library(capsys):
    code, out, _ = run_cli(
        capsys,
        [
            "quantum",
            "--theta",
            str(math.pi / 2),
            "--alice",
            "0,0.7853981633974483",
            "--bob",
            "0.39269908169872414,1.1780972450961724",
        ],
    )
    assert code == 0
    got = np.asarray(out["probabilities"])
    assert np.max(np.abs(got - tsirelson_behaviour().table)) <= 1e-15


def test_quantum_rejects_bad_theta(capsys):
    code, _, err = run_cli(
        capsys, ["quantum", "--theta", "3.0", "--alice", "0", "--bob", "0"]
    )
    assert code == 1
    assert err["error"]["type"] == "DomainError"


def test_quantum_rejects_unparseable_angles(capsys):
    code, _, err = run_cli(
        capsys, ["quantum", "--theta", "0.5", "--alice", "0,zebra", "--bob", "0"]
    )
    assert code == 1
    assert err["error"]["type"] == "StructureError"


def test_chained_matches_library(capsys):
    code, out, _ = run_cli(capsys, ["chained", "--m", "4"])
    assert code == 0
    a = chained_analysis(4)
    assert out["m"] == 4
    assert out["s_value"] == a.s_value
    assert out["s_sharp"] == a.s_sharp == 8.0
    assert out["s_loc"] == a.s_loc == 6.0
    assert out["bound_exact"] == a.bound
    assert out["bound_envelope"] == a.envelope
    assert np.asarray(out["behaviour"]["probabilities"]).shape == (4, 4, 2, 2)


def test_chained_rejects_m_below_two(capsys):
    code, _, err = run_cli(capsys, ["chained", "--m", "1"])
    assert code == 1
    assert err["error"]["type"] == "DomainError"


# ---------------------------------------------------------------------------
# simulate
# ---------------------------------------------------------------------------


def test_simulate_model_mode(tmp_path, capsys):
    m = dilate(tsirelson_behaviour(), SettingsDistribution.uniform(2))
    path = write_model(tmp_path, m)
    argv = ["simulate", "--model", path, "--trials", "2000", "--seed", "99"]
    code, out, _ = run_cli(capsys, argv)
    assert code == 0
    assert out["trials"] == 2000
    assert out["seed"] == 99
    assert out["first_trial"] == 0
    assert int(np.sum(out["counts"])) == 2000
    assert int(np.sum(out["setting_counts"])) == 2000
    assert out["local_trials"] == 2000
    assert out["free_trials"] == 0

    code2, out2, _ = run_cli(capsys, argv)
    assert code2 == 0
    assert out2 == out  # same seed, bit-identical JSON-level output


def test_simulate_unsampled_settings_are_null(tmp_path, capsys):
    settings = SettingsDistribution.from_table([[1.0, 0.0], [0.0, 0.0]])
    m = dilate(sample_nonsignalling(seed=3), settings)
    path = write_model(tmp_path, m)
    code, out, _ = run_cli(
        capsys, ["simulate", "--model", path, "--trials", "50", "--seed", "1"]
    )
    assert code == 0
    assert out["setting_counts"][0][0] == 50
    assert all(p is None for p in np.ravel(out["empirical"][0][1]).tolist())
    assert all(p is not None for p in np.ravel(out["empirical"][0][0]).tolist())


def test_simulate_external_uniform_requires_free_model(tmp_path, capsys):
    m = dilate(tsirelson_behaviour(), SettingsDistribution.uniform(2))
    path = write_model(tmp_path, m)
    code, _, err = run_cli(
        capsys,
        [
            "simulate",
            "--model",
            path,
            "--trials",
            "10",
            "--seed",
            "4",
            "--settings",
            "uniform",
        ],
    )
    assert code == 1
    assert err["error"]["type"] == "DomainError"


def test_simulate_external_settings_file(tmp_path, capsys):
    m = trivial_free_model(sample_nonsignalling(seed=8))
    path = write_model(tmp_path, m)
    settings_path = tmp_path / "settings.json"
    settings_path.write_text(json.dumps([[0.7, 0.1], [0.1, 0.1]]))
    code, out, _ = run_cli(
        capsys,
        [
            "simulate",
            "--model",
            path,
            "--trials",
            "40000",
            "--seed",
            "13",
            "--settings",
            str(settings_path),
        ],
    )
    assert code == 0
    assert out["free_trials"] == 40000
    freq00 = out["setting_counts"][0][0] / 40000.0
    assert freq00 == pytest.approx(0.7, abs=0.02)


# ---------------------------------------------------------------------------
# shared infrastructure: stdin, tolerance resolution, error surfaces
# ---------------------------------------------------------------------------


def test_stdin_input(monkeypatch, capsys):
    doc = json.dumps(behaviour_to_jsonable(tsirelson_behaviour()))
    monkeypatch.setattr("sys.stdin", io.StringIO(doc))
    code, out, _ = run_cli(capsys, ["chsh", "-"])
    assert code == 0
    assert out["s_max"] == pytest.approx(2.0 * math.sqrt(2.0), abs=1e-12)


def _behaviour_with_small_negative(tmp_path):
    t = np.full((2, 2, 2, 2), 0.25)
    t[0, 0, 0, 0] = -5e-7
    t[0, 0, 0, 1] = 0.5 + 5e-7
    path = tmp_path / "noisy.json"
    path.write_text(
        json.dumps(
            {
                "num_settings_a": 2,
                "num_settings_b": 2,
                "probabilities": t.tolist(),
            }
        )
    )
    return str(path)


def test_tol_flag_loosens_validation(tmp_path, capsys):
    path = _behaviour_with_small_negative(tmp_path)
    code, strict, _ = run_cli(capsys, ["check", path])
    assert code == 0
    assert strict["valid"] is False
    assert any(v["kind"] == "negative" for v in strict["violations"])

    with pytest.warns(UserWarning):
        code, loose, _ = run_cli(capsys, ["check", path, "--tol", "1e-5"])
    assert code == 0
    assert loose["valid"] is True


def test_tol_env_variable_and_flag_precedence(tmp_path, capsys, monkeypatch):
    path = _behaviour_with_small_negative(tmp_path)
    monkeypatch.setenv("BELLMETER_TOL", "1e-5")
    with pytest.warns(UserWarning):
        code, via_env, _ = run_cli(capsys, ["check", path])
    assert code == 0
    assert via_env["valid"] is True

    # explicit flag wins over the environment
    code, via_flag, _ = run_cli(capsys, ["check", path, "--tol", "1e-12"])
    assert code == 0
    assert via_flag["valid"] is False


def test_tol_env_variable_must_parse(tmp_path, capsys, monkeypatch):
    path = write_behaviour(tmp_path, tsirelson_behaviour())
    monkeypatch.setenv("BELLMETER_TOL", "not-a-number")
    code, _, err = run_cli(capsys, ["check", path])
    assert code == 1
    assert err["error"]["type"] == "StructureError"
    assert "BELLMETER_TOL" in err["error"]["message"]


def test_malformed_json_exits_one(tmp_path, capsys):
    path = tmp_path / "garbage.json"
    path.write_text("this is { not json")
    code, _, err = run_cli(capsys, ["check", str(path)])
    assert code == 1
    assert err["error"]["type"] == "StructureError"


def test_missing_file_exits_one(capsys):
    code, _, err = run_cli(capsys, ["check", "/nonexistent/nope.json"])
    assert code == 1
    assert err["error"]["type"] == "StructureError"


def test_usage_errors_exit_two(capsys):
    with pytest.raises(SystemExit) as excinfo:
        dispatch(["chained"])  # --m is required
    assert excinfo.value.code == 2
    with pytest.raises(SystemExit) as excinfo:
        dispatch(["no-such-command"])
    assert excinfo.value.code == 2
    with pytest.raises(SystemExit) as excinfo:
        dispatch([])
    assert excinfo.value.code == 2
    capsys.readouterr()


def test_floats_printed_at_17_significant_digits(tmp_path, capsys):
    path = write_behaviour(tmp_path, tsirelson_behaviour())
    code = dispatch(["chsh", path])
    raw = capsys.readouterr().out
    assert code == 0
    s_max = chsh_report(tsirelson_behaviour()).s_max
    assert format(s_max, ".17g") in raw
    # parsing the printed text recovers the double exactly
    assert json.loads(raw)["s_max"] == s_max
