import json
import math
import subprocess
import sys

import pytest

from brownexp import cli
from brownexp.cli import (
    ExperimentConfig,
    ResultRecord,
    load_record,
    load_schema,
    main,
    parse_scales,
    read_csv,
    report,
    report_csv,
    report_markdown,
    run,
)
from brownexp.errors import ConfigurationError, NonTermination, NumericError, SchemaError
from brownexp.extremal import annulus_quadrilateral

SMALL = {
    "formulas eval": ["--name", "xi_plane", "--args", "1,1"],
    "formulas table": [],
    "formulas identities": [],
    "exp nonintersect": ["--radii", "2:16", "--trials", "200", "--dt", "0.04"],
    "exp disconnect": ["--radii", "2,3,4", "--trials", "200", "--dt", "0.04"],
    "exp halfplane": ["--radii", "2:16", "--trials", "200", "--dt", "0.04"],
    "exp zr-moment": ["--radii", "2:8", "--trials", "100", "--inner", "100", "--dt", "0.04"],
    "dims frontier": ["--sizes", "256:1024", "--trials", "3"],
    "dims cut": ["--sizes", "256:1024", "--trials", "3"],
    "dims pioneer": ["--sizes", "256:1024", "--trials", "3"],
    "sle trace": ["--steps", "256", "--stride", "4"],
    "sle swallow": ["--trials", "100", "--dt", "0.01"],
    "sle xi-hat": ["--trials", "100", "--dt", "0.01", "--x-grid", "0.5,0.9,0.99,0.999"],
    "sle radial-xi": ["--radii", "0.5,0.35,0.25", "--trials", "4", "--dt", "0.01"],
    "perc crossing": ["--mesh", "32", "--trials", "1000"],
    "perc explore": ["--mesh", "16"],
    "modulus rect": ["--n", "8"],
    "modulus annulus": ["--r", "0.3", "--n", "32"],
}


def run_cli(args, out):
    return main(args + ["--quiet", "-o", str(out)])


def test_parse_scales():
    assert parse_scales("2:16") == [2.0, 4.0, 8.0, 16.0]
    assert parse_scales("0.5,0.25") == [0.5, 0.25]
    assert parse_scales([1, 2]) == [1.0, 2.0]
    with pytest.raises(ValueError):
        parse_scales("a:b")


@pytest.mark.parametrize("command", sorted(SMALL))
def test_every_command_roundtrips(command, tmp_path):
    schema = load_schema()["commands"][command]
    assert run_cli(command.split() + SMALL[command], tmp_path) == 0
    rec = load_record(tmp_path)
    assert rec.command == command
    assert set(schema["summary_keys"]) <= set(rec.summary)
    assert rec.columns == schema["csv_columns"]
    assert (rec.fit is not None) == schema["fit"]
    rows = read_csv(tmp_path / "result.csv")
    assert len(rows) == len(rec.rows)
    assert list(rows[0]) == rec.columns if rows else True
    # the record reserializes to the same bytes
    again = ResultRecord.from_dict(json.loads((tmp_path / "result.json").read_text()))
    assert again.to_json() == (tmp_path / "result.json").read_text()
    assert again.to_csv() == (tmp_path / "result.csv").read_text()
    meta = json.loads((tmp_path / "meta.json").read_text())
    assert meta["status"] == "complete" and meta["wall_time_s"] >= 0


def test_modulus_numeric_from_files(tmp_path):
    annulus_quadrilateral(0.4, 32, "logpolar").to_files(tmp_path / "q")
    assert run_cli(["modulus", "numeric", "--prefix", str(tmp_path / "q")], tmp_path / "o") == 0
    rec = load_record(tmp_path / "o")
    assert rec.summary["numeric"] == pytest.approx(0.5 * math.log(1 / 0.4), rel=1e-6)


def test_formulas_eval_value(tmp_path):
    run_cli(["formulas", "eval", "--name", "xi_plane", "--args", "1,1"], tmp_path)
    assert load_record(tmp_path).summary["value"] == pytest.approx(1.25)


def test_figures_written(tmp_path):
    run_cli(["sle", "trace", "--steps", "64"], tmp_path / "a")
    run_cli(["perc", "explore", "--mesh", "8"], tmp_path / "b")
    for d in ("a", "b"):
        assert (tmp_path / d / "figure.svg").read_text().startswith("<svg")


def test_rerun_byte_identical(tmp_path):
    args = ["exp", "nonintersect", "--radii", "2:16", "--trials", "300", "--dt", "0.04",
            "--seed", "7"]
    run_cli(args, tmp_path / "a")
    run_cli(args, tmp_path / "b")
    run_cli(args + ["--threads", "2"], tmp_path / "c")
    for name in ("result.json", "result.csv"):
        a = (tmp_path / "a" / name).read_bytes()
        assert a == (tmp_path / "b" / name).read_bytes() == (tmp_path / "c" / name).read_bytes()
    run_cli(args[:-1] + ["8"], tmp_path / "d")
    assert (tmp_path / "d" / "result.json").read_bytes() != (tmp_path / "a" / "result.json").read_bytes()


def test_config_file_and_override(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"parameters": {"trials": 300, "radii": "2:16", "dt": 0.04},
                               "seed": {"root": 5, "stream": 2}}))
    run_cli(["exp", "halfplane", "--config", str(cfg), "--trials", "200"], tmp_path / "o")
    c = load_record(tmp_path / "o").config
    assert c["parameters"]["trials"] == 200 and c["parameters"]["radii"] == [2, 4, 8, 16]
    assert c["seed"]["root"] == 5 and c["seed"]["stream"] == 2
    # the echoed config reproduces the run
    cfg2 = tmp_path / "c2.json"
    cfg2.write_text(json.dumps(c))
    run_cli(["exp", "halfplane", "--config", str(cfg2)], tmp_path / "p")
    assert (tmp_path / "o" / "result.json").read_bytes() == (tmp_path / "p" / "result.json").read_bytes()


def test_env_output_dir(tmp_path, monkeypatch):
    monkeypatch.setenv("BROWNEXP_OUTPUT", str(tmp_path))
    assert main(["formulas", "table", "--quiet"]) == 0
    assert (tmp_path / "formulas-table" / "result.json").exists()


@pytest.mark.parametrize("args,field", [
    (["exp", "nonintersect", "--trials", "10"], "trials"),
    (["exp", "nonintersect", "--radii", "2,4"], "radii"),
    (["exp", "nonintersect", "--j", "0"], "j"),
    (["exp", "nonintersect", "--j", "one"], "j"),
    (["sle", "swallow", "--x", "1.5"], None),
    (["formulas", "eval", "--name", "nope"], "name"),
    (["exp", "nonintersect", "--threads", "0"], "threads"),
])
def test_configuration_errors(args, field, tmp_path, capsys):
    assert run_cli(args, tmp_path) == 2
    err = capsys.readouterr().err
    assert "configuration error" in err
    if field:
        assert f"[{field}]" in err
    assert not (tmp_path / "result.json").exists()


def test_unknown_config_key(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"trails": 5}))
    assert run_cli(["exp", "nonintersect", "--config", str(cfg)], tmp_path) == 2
    assert "[trails]" in capsys.readouterr().err
    assert run_cli(["exp", "nonintersect", "--config", str(tmp_path / "missing.json")], tmp_path) == 2


def test_usage_error_for_unknown_experiment(capsys):
    with pytest.raises(SystemExit) as e:
        main(["exp", "teleport"])
    assert e.value.code == 2
    with pytest.raises(ConfigurationError):
        ExperimentConfig.build("exp teleport")


@pytest.mark.parametrize("exc,code", [(NumericError("x"), 3), (NonTermination("x", 5), 4),
                                      (KeyboardInterrupt(), 130)])
def test_exit_codes(exc, code, tmp_path, monkeypatch):
    def boom(p, seed, threads):
        raise exc

    monkeypatch.setitem(cli._RUNNERS, "formulas table", boom)
    assert run_cli(["formulas", "table"], tmp_path) == code
    if code == 130:
        meta = json.loads((tmp_path / "meta.json").read_text())
        assert meta["status"] == "interrupted"
        assert meta["config"]["command"] == "formulas table"


def fake(command, name, slope, stderr, expected):
    return ResultRecord(command, {}, [], [], {"exponent_name": name, "slope": slope,
                                              "stderr": stderr, "expected": expected})


def test_report_pooling():
    rows = report([fake("exp disconnect", "xi(1,0)", 0.2, 0.05, 0.25),
                   fake("exp disconnect", "xi(1,0)", 0.3, 0.1, 0.25),
                   fake("exp nonintersect", "xi(1,1)", 1.2, 0.04, 1.25)])
    assert len(rows) == 2
    w1, w2 = 1 / 0.05**2, 1 / 0.1**2
    assert rows[0].estimate == pytest.approx((0.2 * w1 + 0.3 * w2) / (w1 + w2))
    assert rows[0].stderr == pytest.approx((w1 + w2) ** -0.5)
    assert rows[0].records == 2
    assert rows[1].z == pytest.approx((1.2 - 1.25) / 0.04)
    md = report_markdown(rows)
    assert md.count("\n") == 4 and "xi(1,0)" in md
    assert report_csv(rows).splitlines()[0].startswith("experiment,quantity")


def test_report_single_disconnection(tmp_path, capsys):
    run_cli(["exp", "disconnect"] + SMALL["exp disconnect"], tmp_path / "r")
    assert main(["report", str(tmp_path / "r"), "-o", str(tmp_path / "rep")]) == 0
    rows = read_csv(tmp_path / "rep" / "report.csv")
    assert len(rows) == 1 and float(rows[0]["expected"]) == pytest.approx(0.25)
    assert "xi(1,0)" in capsys.readouterr().out


def test_report_errors(tmp_path):
    with pytest.raises(ConfigurationError):
        report([])
    old = fake("exp disconnect", "xi(1,0)", 0.2, 0.05, 0.25)
    old.schema_version = 0
    with pytest.raises(SchemaError):
        report([old, fake("exp disconnect", "xi(1,0)", 0.2, 0.05, 0.25)])
    d = old.to_dict()
    (tmp_path / "result.json").write_text(json.dumps(d))
    with pytest.raises(SchemaError):
        load_record(tmp_path)
    assert main(["report", str(tmp_path)]) == 2
    assert main(["report"]) == 2


def test_run_without_writing(tmp_path):
    rec = run(ExperimentConfig.build("modulus rect", {"n": 4}, output_dir=tmp_path), write=False)
    assert rec.summary and not any(tmp_path.iterdir())


def test_module_entry_point(tmp_path):
    out = subprocess.run([sys.executable, "-m", "brownexp.cli", "formulas", "table", "-o",
                          str(tmp_path)], capture_output=True, text=True)
    assert out.returncode == 0 and "formulas table" in out.stdout


def test_formulas_table_values(tmp_path):
    run_cli(["formulas", "table"], tmp_path)
    vals = {r["quantity"]: float(r["value"]) for r in read_csv(tmp_path / "result.csv")}
    assert vals["xi(2,0)"] == pytest.approx(2 / 3)
    assert vals["xi(1,1)"] == pytest.approx(5 / 4)
    assert vals["xi(1,0)"] == pytest.approx(1 / 4)
    assert [vals[f"dim {k}"] for k in ("frontier", "cut_points", "pioneer_points")] == \
        pytest.approx([4 / 3, 3 / 4, 7 / 4])
