from __future__ import annotations

import json
import pathlib
import shutil
import subprocess
import sys

import pytest

from tinic import schemes
from tinic.cli import main
from tinic.dic import DicParams

MIXED5_FILE = pathlib.Path(__file__).parent / "fixtures" / "mixed5_scheme.json"
REF_DB = ["--snr", "48.16", "42.14", "--inr", "36.12", "30.10"]  # about 2^16, 2^14, 2^12, 2^10


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_classify_and_json(capsys):
    code, out, _ = run(capsys, "classify", "--n", "8", "6", "5", "7")
    assert code == 0 and out.startswith("Weak1")
    code, out, _ = run(capsys, "classify", "--n", "8", "10", "2", "4", "--json")
    assert json.loads(out)["class"] == "Mixed5"


def test_exit_codes(capsys, tmp_path):
    assert run(capsys, "classify", "--n", "3", "3", "3", "3")[0] == 2
    assert run(capsys, "scheme", "--n", "8", "10", "2", "4")[0] == 3
    assert run(capsys, "scheme", "--n", "8", "6", "5", "7", "--builder", "weak1-2a", "--t", "99", "0")[0] == 2
    assert run(capsys, "verify", "--scheme", str(tmp_path / "missing.json"))[0] == 2
    with pytest.raises(SystemExit) as e:
        main(["classify", "--n", "1", "2"])
    assert e.value.code == 2


def test_capacity_csv(capsys, tmp_path):
    out = tmp_path / "cap.csv"
    assert run(capsys, "capacity", "--n", "8", "6", "5", "7", "--out", str(out))[0] == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "kind,a1,a2,b,r1,r2"
    assert "vertex,,,,7,2" in lines


def test_scheme_then_verify(capsys, tmp_path):
    path = tmp_path / "s.json"
    code, out, _ = run(capsys, "scheme", "--n", "8", "6", "5", "7", "--segment", "a", "--out", str(path))
    assert code == 0 and "weak1-2a" in out
    code, out, _ = run(capsys, "verify", "--scheme", str(path), "--target", "7", "2")
    assert code == 0 and json.loads(out)["passed"]
    code, out, _ = run(capsys, "verify", "--scheme", str(path), "--target", "8", "2")
    assert code == 1 and not json.loads(out)["passed"]


def test_hand_authored_scheme_file(capsys, tmp_path):
    code, out, _ = run(capsys, "verify", "--scheme", str(MIXED5_FILE), "--target", "6", "4")
    assert code == 0, out
    bad = json.loads(MIXED5_FILE.read_text())
    path = tmp_path / "mixed5.json"
    bad["users"][0]["blocks"][1]["rows"] = 5
    path.write_text(json.dumps(bad))
    code, _, err = run(capsys, "verify", "--scheme", str(path))
    assert code == 2 and "users[0]" in err


def test_gap_csv_and_manifest(capsys, tmp_path):
    out = tmp_path / "gap.csv"
    code, _, _ = run(capsys, "gic", "gap", "--snr", "48.5", "42.5", "--inr", "36.4", "30.2",
                     "--out", str(out))
    assert code == 0
    lines = out.read_text().splitlines()
    assert lines[0].startswith("user,target_rate_bits_per_real_dim")
    assert all(l.endswith(",1") for l in lines[1:])
    man = json.loads((tmp_path / "gap.csv.manifest.json").read_text())
    assert man["seed"] == 0 and str(out) in man["outputs"]
    assert "numpy" in man["versions"]


def test_outage_csv_is_deterministic(capsys, tmp_path):
    args = ["gic", "outage", *REF_DB, "--samples", "300", "--targets", "0.1", "0.5", "--seed", "3"]
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert run(capsys, *args, "--out", str(a))[0] == 0
    assert run(capsys, *args, "--out", str(b))[0] == 0
    assert a.read_text() == b.read_text()
    assert a.read_text().splitlines()[0] == "d_delta,eta"


def test_dmin_reports_brute_force(capsys):
    code, out, _ = run(capsys, "gic", "dmin", "--snr", "24.1", "21.1", "--inr", "18.1", "15.1",
                       "--theta", "0.7")
    assert code == 0
    for line in out.splitlines()[1:]:
        _, _, d, brute = line.split(",")
        assert float(d) == pytest.approx(float(brute), rel=1e-9)


def test_rates_csv(capsys, tmp_path):
    out = tmp_path / "rates.csv"
    code, _, _ = run(capsys, "gic", "rates", "--snr", "24.1", "21.1", "--inr", "18.1", "15.1",
                     "--phases", "2", "--mc-samples", "50", "--out", str(out))
    assert code == 0
    lines = out.read_text().splitlines()
    assert lines[0].startswith("config_id,R1_bits_per_complex_use")
    assert lines[1].startswith("weak1-2a,") and lines[2].startswith("gaussian_tin,")
    man = json.loads((tmp_path / "rates.csv.manifest.json").read_text())
    assert man["parameters"]["mc_depth_per_phase"] == 50


def test_config_file_and_flag_precedence(capsys, tmp_path):
    conf = tmp_path / "c.json"
    conf.write_text(json.dumps({"snr": [48.16, 42.14], "inr": [36.12, 30.10], "samples": 200,
                                "targets": [0.3], "seed": 1}))
    a, b, c = tmp_path / "a.csv", tmp_path / "b.csv", tmp_path / "c.csv"
    assert run(capsys, "--config", str(conf), "gic", "outage", "--out", str(a))[0] == 0
    assert run(capsys, "gic", "outage", *REF_DB, "--samples", "200", "--targets", "0.3",
               "--seed", "1", "--out", str(b))[0] == 0
    assert a.read_text() == b.read_text()
    # an explicit flag beats the config value
    assert run(capsys, "--config", str(conf), "gic", "outage", "--seed", "2", "--out", str(c))[0] == 0
    man = json.loads((tmp_path / "c.csv.manifest.json").read_text())
    assert man["seed"] == 2
    conf.write_text("[1, 2]")
    assert run(capsys, "--config", str(conf), "classify", "--n", "8", "6", "5", "7")[0] == 2


def test_selftest_fixture_failure_dumps_counterexample(capsys, tmp_path):
    p = DicParams(8, 6, 5, 7)
    d = schemes.scheme_to_dict(schemes.build(p, "weak1-2a", (0, 0)))
    good = tmp_path / "good.json"
    good.write_text(json.dumps(d))
    d["users"][0]["target_rate"] = 8  # claims more than it achieves
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps(d))
    dump = tmp_path / "dumps"
    code, out, _ = run(capsys, "selftest", "--fixture", str(good), str(bad), "--dump-dir", str(dump))
    assert code == 1
    assert "PASS fixture:good.json" in out and "FAIL fixture:bad.json" in out
    assert "counterexample:" in out
    assert (dump / "fixture-bad.json.json").exists()


@pytest.mark.skipif(shutil.which("tinic") is None, reason="console script not installed")
def test_console_script():
    r = subprocess.run(["tinic", "classify", "--n", "16", "12", "10", "14"], capture_output=True, text=True)
    assert r.returncode == 0 and "Weak1" in r.stdout
    r = subprocess.run([sys.executable, "-m", "tinic.cli", "classify", "--n", "0", "0", "0", "0"],
                       capture_output=True, text=True)
    assert r.returncode == 2
