import json
import subprocess
import sys

import pytest

from moments import cli

SCHEMA_KEYS = [
    "command", "params", "value", "reference", "rel_error", "std_error",
    "samples", "seed", "precision_bits", "elapsed_ms", "pass",
]


def run_main(capsys, argv):
    status = cli.main(argv)
    captured = capsys.readouterr()
    return status, captured.out, captured.err


def without_timing(payload):
    records = payload if isinstance(payload, list) else [payload]
    return [{k: v for k, v in r.items() if k != "elapsed_ms"} for r in records]


def test_lemma1_k3(capsys):
    status, out, _ = run_main(capsys, ["lemma1", "--k", "3"])
    report = json.loads(out)
    assert status == 0
    assert list(report) == SCHEMA_KEYS
    assert report["value"] == -512 and report["reference"] == -512
    assert report["pass"] is True


def test_theorem2_spec_example(capsys):
    status, out, _ = run_main(capsys, ["theorem2", "--k", "2", "--a", "0.01", "--n", "1000000"])
    report = json.loads(out)
    assert status == 0
    assert report["rel_error"] < 0.02
    assert report["reference"] == pytest.approx(1e24 / (4 * 0.01**3), rel=1e-12)


def test_identical_config_gives_identical_report(capsys):
    argv = ["mc", "--observable", "z2", "--n", "8", "--samples", "3000", "--seed", "5"]
    _, first, _ = run_main(capsys, argv)
    _, second, _ = run_main(capsys, argv)
    a, b = json.loads(first), json.loads(second)
    assert without_timing(a) == without_timing(b)
    strip = lambda text: "\n".join(l for l in text.splitlines() if "elapsed_ms" not in l)
    assert strip(first) == strip(second)


def test_csv_json_round_trip(capsys):
    argv = ["exact", "--k", "1,2", "--a", "0.1", "--n", "100"]
    _, js, _ = run_main(capsys, argv)
    _, cs, _ = run_main(capsys, argv + ["--format", "csv"])
    from_json = without_timing(json.loads(js))
    from_csv = without_timing(cli.from_csv(cs))
    assert from_json == from_csv
    assert cs.splitlines()[0].startswith("command,param.k,param.a,param.n")


def test_mc_csv_round_trip(capsys):
    argv = ["mc", "--observable", "zprime2", "--n", "6", "--samples", "2000", "--seed", "1"]
    _, js, _ = run_main(capsys, argv)
    _, cs, _ = run_main(capsys, argv + ["--format", "csv"])
    assert without_timing(json.loads(js)) == without_timing(cli.from_csv(cs))


def test_sweep_produces_list(capsys):
    status, out, _ = run_main(capsys, ["cmatrix", "--k", "1,2,3"])
    reports = json.loads(out)
    assert status == 0
    assert [r["params"]["k"] for r in reports] == [1, 2, 3]


def test_output_file(tmp_path, capsys):
    path = tmp_path / "report.json"
    status, out, _ = run_main(capsys, ["lemma2", "--k", "1", "--output", str(path)])
    assert status == 0 and out == ""
    assert json.loads(path.read_text())["pass"] is True


@pytest.mark.parametrize(
    "argv",
    [
        ["lemma1", "--bogus", "1"],
        ["lemma1", "--k", "x"],
        ["nosuchverb"],
        ["painleve", "--k", "1", "--s", "3.5"],
        ["mc", "--observable", "nonsense"],
        ["lemma1", "--precision-bits", "10"],
    ],
)
def test_usage_errors_exit_2(argv, capsys):
    status, _, _ = run_main(capsys, argv)
    assert status == 2


def test_tolerance_failure_exits_1(capsys):
    status, out, _ = run_main(
        capsys, ["theorem2", "--k", "2", "--a", "0.3", "--n", "1000", "--rel-tol", "1e-6"]
    )
    assert status == 1
    assert json.loads(out)["pass"] is False


def test_computation_error_exits_1(capsys):
    status, _, err = run_main(
        capsys, ["hankel", "--check", "mop", "--k", "1", "--n1", "2", "--n2", "1",
                 "--a", "0", "--t1", "0", "--t2", "0"],
    )
    assert status == 1
    assert "DegenerateParametersError" in err


def test_precision_env_var(monkeypatch, capsys):
    monkeypatch.setenv("MOMENTS_PRECISION_BITS", "300")
    _, out, _ = run_main(capsys, ["cmatrix", "--k", "2"])
    assert json.loads(out)["precision_bits"] == 300


def test_run_config_rejects_unknown_keys():
    with pytest.raises(cli.UsageError):
        cli.RunConfig("lemma1", {"q": 1})
    config = cli.RunConfig("lemma1", {})
    assert (config.seed, config.output_format) == (0, "json")


@pytest.mark.parametrize(
    "argv",
    [
        ["painleve", "--k", "2", "--s", "1.0"],
        ["theorem1", "--k", "2", "--m", "1"],
        ["crosscheck", "--k", "1"],
        ["hankel", "--check", "delta", "--k", "2"],
        ["hankel", "--check", "tau", "--k", "1"],
    ],
)
def test_verbs_pass(argv, capsys):
    status, out, _ = run_main(capsys, argv)
    assert status == 0, out


def test_console_script():
    result = subprocess.run(
        [sys.executable, "-m", "moments.cli", "cmatrix", "--k", "3"],
        capture_output=True, text=True, check=False,
    )
    assert result.returncode == 0
    assert json.loads(result.stdout)["value"] == pytest.approx(1 / 720)
