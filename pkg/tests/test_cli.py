import json
import math

import pytest
from click.testing import CliRunner

from kaonlhv.cli import cli


@pytest.fixture
def runner():
    return CliRunner()


def run_ok(runner, args):
    result = runner.invoke(cli, args, catch_exceptions=False)
    assert result.exit_code == 0, result.output
    return result


def csv_body(text):
    """Split a CSV output into (manifest dict, header, data rows)."""
    lines = text.strip().splitlines()
    assert lines[0].startswith("# manifest ")
    manifest = json.loads(lines[0][len("# manifest "):])
    return manifest, lines[1], [line.split(",") for line in lines[2:]]


# -- constants ----------------------------------------------------------------


def test_constants_default_lists_overlap(runner):
    result = run_ok(runner, ["constants"])
    assert "ks_kl_overlap" in result.output
    assert "0.0033" in result.output
    assert "PDG" in result.output


def test_constants_json_parses(runner):
    result = run_ok(runner, ["constants", "--format", "json"])
    payload = json.loads(result.output)
    assert payload["constants"]["ks_kl_overlap"] == pytest.approx(3.3e-3)
    assert payload["manifest"]["subcommand"] == "constants"
    assert any(row["channel"] == "pi+pi-" for row in payload["branching_table"])


def test_constants_csv(runner):
    result = run_ok(runner, ["constants", "--format", "csv"])
    manifest, header, rows = csv_body(result.output)
    assert header == "kind,name,value,provenance"
    assert any(r[1] == "ks_kl_overlap" for r in rows)


def test_constants_bad_file_fails_cleanly(runner, tmp_path):
    bad = tmp_path / "bad.toml"
    bad.write_text("tau_S = 1.0\n")
    result = runner.invoke(cli, ["constants", "--constants", str(bad)])
    assert result.exit_code != 0
    assert result.stderr.startswith("error: ")
    assert "\n" not in result.stderr.strip()  # one-line machine-parseable error


def test_constants_override_used(runner, tmp_path, constants):
    from kaonlhv import serialize_constants

    text = serialize_constants(constants).replace("3.3e-05", "3.3e-05")
    text = text.replace("ks_kl_overlap = 0.0033", "ks_kl_overlap = 0.0041")
    custom = tmp_path / "custom.toml"
    custom.write_text(text)
    result = run_ok(runner, ["constants", "--constants", str(custom), "--format", "json"])
    assert json.loads(result.output)["constants"]["ks_kl_overlap"] == pytest.approx(4.1e-3)


# -- entropy surface ------------------------------------------------------------


def test_entropy_surface_defaults(runner):
    result = run_ok(runner, ["entropy-surface"])
    manifest, header, rows = csv_body(result.output)
    assert header == "re_R,im_R,entropy"
    assert len(rows) == 81 * 81
    at_origin = [r for r in rows if float(r[0]) == 0.0 and float(r[1]) == 0.0]
    assert len(at_origin) == 1
    assert float(at_origin[0][2]) == pytest.approx(1.0, abs=1e-10)


def test_entropy_surface_small_grid(runner):
    result = run_ok(runner, ["entropy-surface", "--grid", "2"])
    _, _, rows = csv_body(result.output)
    assert len(rows) == 4


def test_entropy_surface_rejects_bad_grid(runner):
    result = runner.invoke(cli, ["entropy-surface", "--grid", "1"])
    assert result.exit_code != 0
    assert "error:" in result.stderr


# -- fig2 -------------------------------------------------------------------------


def test_fig2_defaults(runner):
    result = run_ok(runner, ["fig2"])
    _, header, rows = csv_body(result.output)
    assert header == "bin_start,bin_end,ratio"
    assert len(rows) == 5
    ratios = {float(r[0]): float(r[2]) for r in rows}
    assert abs(ratios[21.0] - 0.50) / 0.50 < 0.15
    assert abs(ratios[22.0] - 1.35) / 1.35 < 0.15
    ordered = [float(r[2]) for r in rows]
    assert ordered == sorted(ordered)


def test_fig2_custom_bins(runner):
    result = run_ok(runner, ["fig2", "--bins", "18:23:0.5"])
    _, _, rows = csv_body(result.output)
    assert len(rows) == 10


def test_fig2_rejects_malformed_bins(runner):
    assert runner.invoke(cli, ["fig2", "--bins", "18:23"]).exit_code != 0
    assert runner.invoke(cli, ["fig2", "--bins", "8:23:1"]).exit_code != 0


# -- budget -----------------------------------------------------------------------


def test_budget_defaults(runner, constants):
    result = run_ok(runner, ["budget"])
    payload = json.loads(result.output)
    assert payload["undecayed_fraction"] == pytest.approx(math.exp(-11), rel=1e-9)
    assert abs(payload["kl_misid"] - 5.7e-5) / 5.7e-5 < 0.15
    assert payload["constants_fingerprint"] == constants.fingerprint()
    assert payload["window"] == {"t0": 10.0, "t1": 21.0}


def test_budget_custom_window(runner):
    result = run_ok(runner, ["budget", "--window", "10:19"])
    payload = json.loads(result.output)
    assert payload["undecayed_fraction"] == pytest.approx(math.exp(-9), rel=1e-9)


# -- thresholds ---------------------------------------------------------------------


def test_thresholds_defaults(runner):
    result = run_ok(runner, ["thresholds"])
    payload = json.loads(result.output)
    assert payload["min_efficiency_direct"] == pytest.approx(0.0936, rel=1e-3)
    assert payload["min_efficiency_ch"] == pytest.approx(0.023, rel=0.01)


def test_thresholds_zero_budget(runner):
    result = run_ok(runner, ["thresholds", "--m-s", "0", "--m-l", "0"])
    payload = json.loads(result.output)
    assert payload["min_efficiency_direct"] == 0.0
    assert payload["min_efficiency_ch"] == 0.0


def test_thresholds_window_pipeline(runner, constants):
    from kaonlhv import TaggingWindow, misid_budget, min_efficiency_ch, min_efficiency_direct

    result = run_ok(runner, ["thresholds", "--window", "10:19"])
    payload = json.loads(result.output)
    budget = misid_budget(TaggingWindow(10, 19), constants)
    assert payload["min_efficiency_direct"] == pytest.approx(
        min_efficiency_direct(budget.ks_misid), rel=1e-9)
    assert payload["min_efficiency_ch"] == pytest.approx(
        min_efficiency_ch(budget.ks_misid, budget.kl_misid), rel=1e-9)
    assert payload["inputs"]["ks_misid"] == pytest.approx(budget.ks_misid, rel=1e-9)


# -- probabilities -------------------------------------------------------------------


def test_probabilities_report_shape(runner):
    result = run_ok(runner, ["probabilities", "--eta", "0.023", "--eta-prime", "0.023"])
    payload = json.loads(result.output)
    assert set(payload["probabilities"]) == {"p_k0_k0bar", "p_k0_kl", "p_kl_k0bar", "p_ks_ks"}
    assert payload["probabilities"]["p_k0_k0bar"] == pytest.approx(0.023**2 / 12, rel=1e-9)
    assert "ch_margin" in payload
    assert payload["inputs"]["eta"] == 0.023
    assert payload["min_efficiency_ch"] == pytest.approx(0.0229, rel=2e-2)


def test_probabilities_margin_sign_flips_across_threshold(runner):
    below = json.loads(run_ok(runner, ["probabilities", "--eta", "0.01", "--eta-prime", "0.01"]).output)
    above = json.loads(run_ok(runner, ["probabilities", "--eta", "0.10", "--eta-prime", "0.10"]).output)
    assert below["ch_margin"] < 0 < above["ch_margin"]


# -- manifests ----------------------------------------------------------------------


def test_manifest_identical_up_to_timestamp(runner):
    a = json.loads(run_ok(runner, ["thresholds"]).output)["manifest"]
    b = json.loads(run_ok(runner, ["thresholds"]).output)["manifest"]
    a.pop("timestamp"), b.pop("timestamp")
    assert a == b


def test_manifest_echoes_parameters(runner):
    payload = json.loads(run_ok(runner, ["thresholds", "--m-s", "1e-3"]).output)
    assert payload["manifest"]["parameters"]["m_s"] == pytest.approx(1e-3)
    assert payload["manifest"]["version"]
    assert payload["manifest"]["constants_fingerprint"]


# -- simulate / verdict ---------------------------------------------------------------


def test_simulate_writes_events_and_verdict(runner, tmp_path):
    out = tmp_path / "events.csv"
    result = run_ok(runner, [
        "simulate", "--source", "qm", "--eta", "1", "--events", "2e4",
        "--seed", "7", "--out", str(out),
    ])
    verdict = json.loads(result.output)["verdict"]
    assert verdict["falsification_pass"] is True
    lines = out.read_text().splitlines()
    assert lines[0] == "event_id,left_tag,right_tag,left_t,right_t,truth"
    assert len(lines) == 20001


def test_simulate_repeat_same_seed_byte_identical(runner, tmp_path):
    args = ["simulate", "--source", "evading", "--eta", "0.001", "--events", "1e4",
            "--seed", "7"]
    out1, out2 = tmp_path / "a.csv", tmp_path / "b.csv"
    run_ok(runner, args + ["--out", str(out1)])
    run_ok(runner, args + ["--out", str(out2)])
    assert out1.read_bytes() == out2.read_bytes()


def test_simulate_worker_invariance(runner, tmp_path):
    base = ["simulate", "--source", "qm", "--eta", "0.4", "--events", "1e4", "--seed", "11"]
    out1, out2 = tmp_path / "w1.csv", tmp_path / "w3.csv"
    run_ok(runner, base + ["--workers", "1", "--out", str(out1)])
    run_ok(runner, base + ["--workers", "3", "--out", str(out2)])
    assert out1.read_bytes() == out2.read_bytes()


def test_simulate_evading_fails_verdicts(runner, tmp_path):
    out = tmp_path / "events.csv"
    result = run_ok(runner, [
        "simulate", "--source", "evading", "--eta", "0.001", "--events", "5e4",
        "--seed", "7", "--out", str(out),
    ])
    verdict = json.loads(result.output)["verdict"]
    assert verdict["falsification_pass"] is False
    assert verdict["ch_pass"] is False


def test_simulate_above_threshold_evading_errors(runner):
    result = runner.invoke(cli, ["simulate", "--source", "evading", "--eta", "0.2",
                                 "--events", "100", "--seed", "1"])
    assert result.exit_code != 0
    assert "EvasionInfeasibleError" in result.stderr


def test_verdict_rescores_event_file(runner, tmp_path):
    out = tmp_path / "events.csv"
    sim = run_ok(runner, [
        "simulate", "--source", "qm", "--eta", "1", "--events", "1e4",
        "--seed", "3", "--out", str(out),
    ])
    sim_verdict = json.loads(sim.output)["verdict"]
    res = run_ok(runner, ["verdict", "--events", str(out), "--eta", "1"])
    re_verdict = json.loads(res.output)["verdict"]
    assert re_verdict["counts"]["k0_k0bar"] == sim_verdict["counts"]["k0_k0bar"]
    assert re_verdict["falsification_pass"] == sim_verdict["falsification_pass"]


def test_verdict_rejects_foreign_file(runner, tmp_path):
    bogus = tmp_path / "x.csv"
    bogus.write_text("a,b,c\n1,2,3\n")
    result = runner.invoke(cli, ["verdict", "--events", str(bogus), "--eta", "1"])
    assert result.exit_code != 0
    assert "error:" in result.stderr


def test_twelve_significant_digits(runner):
    result = run_ok(runner, ["thresholds"])
    payload = json.loads(result.output)
    text = f"{payload['min_efficiency_direct']:.17g}"
    # no more precision than 12 significant digits survives
    assert float(text) == float(f"{float(text):.12g}")
