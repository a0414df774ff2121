import json
import subprocess
import sys

import pytest

from branchfreq.process_model import LifespanLaw, dump_spec, example2_spec


def run(*args, cwd=None):
    proc = subprocess.run(
        [sys.executable, "-m", "branchfreq", *map(str, args)], capture_output=True, text=True, cwd=cwd
    )
    return proc.returncode, proc.stdout, proc.stderr


def body(text):
    # everything except the wall-clock line
    return [ln for ln in text.splitlines() if not ln.startswith("# duration_s=")]


def table(text):
    rows = [ln for ln in text.splitlines() if ln and not ln.startswith("#")]
    head = rows[0].split(",")
    return [dict(zip(head, r.split(","))) for r in rows[1:]]


@pytest.fixture
def clock_spec_file(tmp_path):
    path = tmp_path / "ex2_clock.json"
    dump_spec(example2_spec(0.25, 0.40, 0.35, lifespans=[LifespanLaw.deterministic(1.0)] * 2), path)
    return path


@pytest.fixture
def spec_file(tmp_path):
    path = tmp_path / "ex2.json"
    dump_spec(example2_spec(0.25, 0.40, 0.35), path)
    return path


def test_manifest_and_validate(spec_file):
    code, out, _ = run("validate", "--spec", spec_file)
    assert code == 0
    lines = out.splitlines()
    assert lines[0].startswith("# branchfreq version=")
    assert "# subcommand=validate" in lines
    assert any(ln.startswith("# seed=0, generator=numpy.PCG64") for ln in lines)
    assert any(ln.startswith("# duration_s=") for ln in lines)


def test_moments_constant_fraction(spec_file):
    code, out, _ = run("moments", "--spec", spec_file, "--time", "1..5")
    assert code == 0
    rows = table(out)
    assert [int(r["t"]) for r in rows] == [1, 2, 3, 4, 5]
    for r in rows:
        assert float(r["p_1"]) == pytest.approx(0.8 / 1.15, abs=1e-11)


def test_asymptotics_variance(spec_file):
    code, out, _ = run("asymptotics", "--spec", spec_file, "--time", 2, "--ancestors", 1000)
    assert code == 0
    var = float(out.strip().splitlines()[-1].split(",")[1])
    assert var == pytest.approx(84 / 279841, rel=1e-11)


def test_selftest():
    code, out, _ = run("selftest")
    assert code == 0
    assert out.count("PASS") == 6 and "FAIL" not in out


def test_usage_error_exit_2(spec_file):
    assert run("moments", "--spec", spec_file)[0] == 2
    assert run("nonsense")[0] == 2


def test_domain_error_exit_1(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"d": 1, "offspring": [[{"p": 0.7, "n": [1]}, {"p": 0.7, "n": [0]}]]}))
    code, _, err = run("validate", "--spec", bad)
    assert code == 1 and err.strip()
    assert run("validate", "--spec", tmp_path / "missing.json")[0] == 1


@pytest.mark.parametrize(
    "args",
    [
        ("simulate", "--ancestors", 50, "--time", 3, "--replicates", 4, "--seed", 9),
        ("mc", "--ancestors", 100, "--time", 2, "--replicates", 40, "--seed", 3),
        ("synth", "--time", "1..4", "--ancestors", 500, "--seed", 3),
    ],
)
def test_reproducible_bytes(spec_file, args):
    first = run(args[0], "--spec", spec_file, *args[1:])
    second = run(args[0], "--spec", spec_file, *args[1:])
    assert first[0] == 0
    assert body(first[1]) == body(second[1])


def test_continuous_reproducible(clock_spec_file):
    args = ("simulate", "--spec", clock_spec_file, "--ancestors", 20, "--time", "1.5,2.5", "--continuous", "--seed", 9)
    first, second = run(*args), run(*args)
    assert first[0] == 0
    assert body(first[1]) == body(second[1])
    assert len(table(first[1])) == 2


def test_continuous_requires_lifespans(spec_file):
    # example 2 without clocks cannot be run in continuous time
    code, _, _ = run("simulate", "--spec", spec_file, "--ancestors", 5, "--time", "1.0", "--continuous")
    assert code == 1


def test_synth_then_fit(spec_file, tmp_path):
    obs = tmp_path / "obs.csv"
    code, _, _ = run("synth", "--spec", spec_file, "--time", "1..10", "--ancestors", 5000, "--seed", 42, "--out", obs)
    assert code == 0 and obs.exists()
    a = run("fit", "--obs", obs, "--init", "0.3,0.3")
    b = run("fit", "--obs", obs, "--init", "0.3,0.3")
    assert a[0] == 0 and body(a[1]) == body(b[1])
    fields = dict(ln.split("=", 1) for ln in a[1].splitlines() if "=" in ln and not ln.startswith("#"))
    assert abs(float(fields["p1"]) - 0.40) <= 0.03 and abs(float(fields["p2"]) - 0.35) <= 0.03
    assert fields["converged"] == "1"


def test_fit_counts_and_trace(spec_file, tmp_path):
    obs = tmp_path / "counts.csv"
    run("synth", "--spec", spec_file, "--time", "1..5", "--ancestors", 2000, "--seed", 1, "--counts", "--out", obs)
    trace = tmp_path / "trace.csv"
    code, out, _ = run("fit", "--obs", obs, "--counts", "--init", "0.3,0.3", "--trace", "--trace-out", trace)
    assert code == 0 and "p1=" in out
    assert len(trace.read_text().splitlines()) > 2


def test_fit_infeasible_init(spec_file, tmp_path):
    obs = tmp_path / "obs.csv"
    run("synth", "--spec", spec_file, "--time", "1..3", "--ancestors", 500, "--out", obs)
    assert run("fit", "--obs", obs, "--init", "0.8,0.4")[0] == 1
