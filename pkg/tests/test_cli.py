import json
import subprocess
import sys

import numpy as np
import pytest

from stripegs import cli
from stripegs.config import SpinConfig
from stripegs.results import Certificate, exact
from stripegs.suites import SuiteReport


def run(capsys, *argv):
    code = cli.main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


# -- parsers -----------------------------------------------------------------------


def test_parsers():
    assert cli.parse_dims("4x6") == (4, 6)
    assert cli.parse_dims("24") == (24, 1)
    assert cli.parse_ints("3, 2,5") == [3, 2, 5]
    g = cli.parse_grid("1e-4:1e-3:3")
    assert len(g) == 3 and all(t < 0 for t in g)
    assert g[0] == pytest.approx(-1e-4) and g[-1] == pytest.approx(-1e-3)
    assert cli.parse_pair("2,-3") == (2, -3)
    for bad in ("4x", "x", "0"):
        with pytest.raises(cli.UsageError):
            cli.parse_dims(bad)
    with pytest.raises(cli.UsageError):
        cli.parse_grid("1:2")


# -- commands ----------------------------------------------------------------------


def test_jc(capsys):
    code, out, _ = run(capsys, "jc", "--p", "5")
    assert code == 0
    d = json.loads(out)
    assert d["J_c"] == pytest.approx(1.5, abs=0.2) and d["tail_bound"] <= 1e-10


def test_es_prints_csv_and_argmin(capsys, tmp_path):
    code, out, _ = run(capsys, "es", "--p", "5", "--tau", "-0.6", "--hmax", "8", "--out", str(tmp_path))
    assert code == 0
    lines = out.splitlines()
    assert lines[0] == "h,e_s,tail_bound" and "# h_star: 2" in lines and "# tie: false" in lines
    assert {"es.csv", "es.json", "es.png", "manifest.json"} <= {p.name for p in tmp_path.iterdir()}
    m = json.loads((tmp_path / "manifest.json").read_text())
    assert m["command"] == "es" and m["params"]["p"] == 5.0 and "total" in m["timings"]
    assert m["argv"][0] == "es" and m["version"]


def test_es_uniform_regime_has_no_width(capsys):
    code, out, _ = run(capsys, "es", "--tau", "0.2", "--hmax", "4")
    assert code == 0 and "# h_star: none" in out and len(out.splitlines()) == 7


def test_einf(capsys):
    code, out, _ = run(capsys, "einf", "--J", "1.5", "--seq", "2,3,2")
    assert code == 0 and json.loads(out)["sequence"] == [2, 3, 2]


def test_decompose(capsys, tmp_path):
    s = np.ones((20, 20), dtype=np.int8)
    s[3:9, 4:6] = -1
    f = tmp_path / "c.txt"
    SpinConfig(s).save(f)
    code, out, _ = run(capsys, "decompose", "--config", str(f), "--ell", "10", "--tau", "-0.6",
                       "--out", str(tmp_path / "o"))
    assert code == 0
    d = json.loads(out)
    assert d["N_c"] == 4 and d["sum_nc2"] == 8 and "localized" in d
    assert (tmp_path / "o" / "decompose.png").exists()
    svg = tmp_path / "d.svg"
    assert run(capsys, "decompose", "--config", str(f), "--ell", "10", "--svg", str(svg))[0] == 0
    assert svg.read_text().lstrip().startswith("<?xml")


def test_verify_prints_jsonl_and_summary(capsys, tmp_path):
    code, out, _ = run(capsys, "verify", "--suite", "identity", "--tau", "-0.6", "--count", "3",
                       "--seed", "4", "--out", str(tmp_path))
    assert code == 0
    recs = [json.loads(x) for x in out.splitlines()]
    assert len(recs) == 4 and all(r["suite"] == "identity" for r in recs[:3])
    summary = recs[-1]["summary"]
    assert summary["violations"] == 0 and "elapsed" not in summary
    m = json.loads((tmp_path / "manifest.json").read_text())
    assert m["seeds"] == [4] and "verdict" in m["tolerances"] and "elapsed" in m["timings"]


def test_verify_violation_exit_code(capsys, monkeypatch):
    from stripegs import suites

    def broken(params, seed=0, count=1):
        rep = SuiteReport("identity", params.to_dict(), seed, count)
        rep.add(Certificate(exact(0.0), exact(1.0), context="forced"))
        return rep

    monkeypatch.setitem(suites.SUITES, "identity", broken)
    code, out, _ = run(capsys, "verify", "--suite", "identity", "--J", "1.2")
    assert code == 1
    assert json.loads(out.splitlines()[-1])["summary"]["violations"] == 1


def test_bruteforce(capsys):
    code, out, _ = run(capsys, "bruteforce", "--dims", "4x4", "--J", "3.0")
    assert code == 0
    d = json.loads(out)
    assert d["minimizers"][0]["kind"] == "uniform" and "wall_time" not in d
    code, out, _ = run(capsys, "bruteforce", "--dims", "4x4", "--J", "1.5", "--anneal", "--sweeps", "200")
    assert code == 0 and len(json.loads(out)["trace"]) == 200


def test_scan(capsys, tmp_path):
    code, out, _ = run(capsys, "scan", "--tau-grid", "1e-3:1e-1:5", "--out", str(tmp_path))
    assert code == 0
    assert out.startswith("tau,h_star,tie") and "# slope:" in out
    d = json.loads((tmp_path / "scan.json").read_text())
    assert d["predicted_slope"] == -0.5 and len(d["h_star"]) == 5


def test_usage_errors(capsys):
    assert run(capsys, "es", "--p", "5")[0] == 2
    assert run(capsys, "es", "--J", "1.4", "--tau", "-0.1")[0] == 2
    assert run(capsys, "nosuch")[0] == 2
    assert run(capsys, "bruteforce", "--dims", "6x6", "--J", "1.5")[0] == 2
    assert run(capsys, "decompose", "--config", "/nonexistent", "--ell", "5")[0] == 2
    code, _, err = run(capsys, "jc", "--p", "2.5")
    assert code == 2 and "error" in err
    assert run(capsys, "--version")[0] == 0


# -- reproducibility ---------------------------------------------------------------


def test_rerun_reproduces_outputs(capsys, tmp_path):
    argv = ["es", "--tau", "-0.05", "--hmax", "12", "--out", str(tmp_path), "--figure", str(tmp_path / "es.svg")]
    assert run(capsys, *argv)[0] == 0
    names = ("es.csv", "es.json", "es.svg")
    before = {n: (tmp_path / n).read_bytes() for n in names}
    assert run(capsys, "rerun", str(tmp_path / "manifest.json"))[0] == 0
    assert {n: (tmp_path / n).read_bytes() for n in names} == before


def test_rerun_bad_manifest(capsys, tmp_path):
    f = tmp_path / "m.json"
    f.write_text("{}")
    assert run(capsys, "rerun", str(f))[0] == 2
    f.write_text(json.dumps({"argv": ["rerun", "x"]}))
    assert run(capsys, "rerun", str(f))[0] == 2


def test_threads_from_environment(monkeypatch):
    monkeypatch.setenv(cli.THREADS_ENV, "1")
    assert cli.build_parser().parse_args(["jc"]).threads == 1
    monkeypatch.delenv(cli.THREADS_ENV)
    assert cli.build_parser().parse_args(["jc"]).threads is None


def test_console_script_entry():
    r = subprocess.run([sys.executable, "-m", "stripegs.cli", "jc", "--p", "6"], capture_output=True, text=True)
    assert r.returncode == 0 and "J_c" in r.stdout
