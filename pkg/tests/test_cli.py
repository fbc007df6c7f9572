"""Command-line interface: examples, exit codes, determinism."""
import csv
import io
import json

import pytest

from latspec.cli import COMMANDS, RunConfig, build_parser, main, parse_grid, run


def _run(capsys, argv):
    code = main(argv)
    out, err = capsys.readouterr()
    return code, out, err


def test_single_site_sweep_csv(capsys):
    code, out, _ = _run(capsys, ["oscillate", "--family", "single-site", "--n0", "3",
                                 "--lambda-grid", "0.2:0.5:0.01"])
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert len(rows) == 31
    lam = {round(float(r["lambda"]), 2): int(r["above"]) for r in rows}
    assert lam[0.33] == 0 and lam[0.34] == 1
    first = next(float(r["lambda"]) for r in rows if r["above"] == "1")
    assert first == pytest.approx(0.34)


def test_zero_custom_spectrum(capsys):
    code, out, _ = _run(capsys, ["spectrum", "--family", "custom", "--values-file", "none",
                                 "--domain", "half_line:100"])
    data = json.loads(out)
    assert code == 0 and data["eigenvalues_above"] == [] and data["eigenvalues_below"] == []


def test_quick_scoreboard_all_pass(capsys):
    code, out, _ = _run(capsys, ["scoreboard", "--quick"])
    data = json.loads(out)
    assert code == 0 and data["all_pass"]
    assert all(c["status"] == "pass" for c in data["checks"])


def test_usage_errors_exit_64(capsys):
    assert _run(capsys, ["frobnicate"])[0] == 64
    assert _run(capsys, ["spectrum", "--bogus"])[0] == 64
    assert _run(capsys, [])[0] == 64


def test_malformed_spec_exit_65(capsys):
    code, _, err = _run(capsys, ["spectrum", "--spec", '{"family": "single-site", "params": {"n0": 2},'
                                                       ' "domain": {"kind": "half_line", "N": 9}}'])
    assert code == 65 and "/params/lambda" in err
    code, _, err = _run(capsys, ["spectrum", "--spec", "{not json"])
    assert code == 65
    code, _, err = _run(capsys, ["spectrum", "--family", "zero", "--domain", "nowhere:3"])
    assert code == 65 and "/domain" in err


def test_spec_file(tmp_path, capsys):
    p = tmp_path / "v.json"
    p.write_text(json.dumps({"family": "single-site", "params": {"n0": 1, "lambda": 3.0},
                             "domain": {"kind": "half_line", "N": 50}}))
    code, out, _ = _run(capsys, ["spectrum", "--spec", str(p)])
    assert code == 0 and json.loads(out)["count_above"] == 1


def test_hypothesis_failure_exit_2(capsys):
    code, _, _ = _run(capsys, ["bargmann", "--family", "single-site", "--n0", "4", "--lambda", "0.5"])
    assert code == 2
    code, _, _ = _run(capsys, ["infinitude", "--family", "power-law", "--C", "0.25", "--alpha", "2",
                               "--domain", "half_line:10000", "--truncations", "1000,10000"])
    assert code == 2
    code, _, err = _run(capsys, ["bs", "--lambda", "3"])
    assert code == 2 and "hypotheses" in err


def test_success_paths(capsys, tmp_path):
    assert _run(capsys, ["compare-v2", "--family", "single-site", "--n0", "1", "--lambda", "3"])[0] == 0
    assert _run(capsys, ["certify", "--family", "periodic-sites", "--a", "1", "--period", "1",
                         "--domain", "whole_line:400", "--essential-a", "1", "--m", "3"])[0] == 0
    assert _run(capsys, ["greens", "--nu", "3", "--radius", "1", "--format", "csv"])[0] == 0
    code, out, _ = _run(capsys, ["examples", "--example", "dipole", "--quick"])
    assert code == 0 and json.loads(out)["checks"][0]["status"] == "pass"
    out_file = tmp_path / "m.csv"
    assert _run(capsys, ["moments", "--truncations", "1000,10000,100000", "--growth-factor", "1.5",
                         "-o", str(out_file), "--format", "csv"])[0] == 0
    assert out_file.read_text().splitlines()[0] == "N,lower,upper,count"


def test_every_subcommand_help_names_a_result():
    parser = build_parser()
    sub = next(a for a in parser._actions if a.dest == "command")
    for name in COMMANDS:
        text = sub.choices[name].format_help()
        assert COMMANDS[name].split()[0] in text


def test_help_exits_zero(capsys):
    assert _run(capsys, ["bs", "--help"])[0] == 0


def test_run_config_validation(tmp_path):
    assert run(RunConfig(command="spectrum", potential_spec={"family": "zero"}, tolerance=-1.0)) == 65
    assert run(RunConfig(command="spectrum", truncations=[10, 5],
                         potential_spec={"family": "zero", "domain": {"kind": "half_line", "N": 20}})) == 65
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"command": "spectrum", "potential_spec": {
        "family": "zero", "domain": {"kind": "half_line", "N": 20}}, "output": str(tmp_path / "o.json")}))
    assert main(["spectrum", "--config", str(cfg)]) == 0
    assert json.loads((tmp_path / "o.json").read_text())["truncation_size"] == 20


def test_identical_bytes_across_runs_and_workers(tmp_path):
    outs = []
    for w in (1, 2, 1):
        p = tmp_path / f"o{len(outs)}.csv"
        assert main(["oscillate", "--family", "dipole", "--n0", "2", "--lambda-grid", "0.45:0.55:0.01",
                     "--workers", str(w), "-o", str(p)]) == 0
        outs.append(p.read_bytes())
    assert outs[0] == outs[1] == outs[2]


def test_parse_grid():
    g = parse_grid("0.2:0.5:0.01")
    assert len(g) == 31 and g[13] == 0.33 and g[-1] == 0.5
