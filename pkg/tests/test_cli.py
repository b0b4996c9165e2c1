import json
import subprocess
import sys

import pytest

from datamarket.cli import execute
from datamarket.licensing import Lifespan
from conftest import SCENARIOS, make_license

SMALL = {
    "seed": 5,
    "ticks": 60,
    "agents": [
        {"archetype": "HonestSeller", "count": 3},
        {"archetype": "JunkSeller", "count": 1},
        {"archetype": "HonestBuyer", "count": 3},
        {"archetype": "AdversaryBuyer", "count": 1},
    ],
}


@pytest.fixture
def small_config(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(SMALL))
    return path


def test_assess_risk_text(capsys):
    assert execute(["assess-risk", "--distortion", "4", "--revelation", "5",
                    "--intrusion", "2"]) == 0
    out = capsys.readouterr().out
    assert "20/30" in out and "0.6667" in out and "High" in out


def test_assess_risk_json(capsys):
    execute(["assess-risk", "--distortion", "4", "--revelation", "5", "--intrusion", "2",
             "--format", "json"])
    rec = json.loads(capsys.readouterr().out)
    assert rec["raw_score"] == 20 and rec["normalized"] == pytest.approx(2 / 3)


def test_assess_risk_domain_error(capsys):
    assert execute(["assess-risk", "--distortion", "6", "--revelation", "0",
                    "--intrusion", "0"]) == 1
    assert "InvalidImpact" in capsys.readouterr().err


@pytest.mark.parametrize("argv", [[], ["bogus"], ["assess-risk", "--distortion", "x"],
                                  ["price", "--quantity", "3"]])
def test_usage_errors(argv, capsys):
    assert execute(argv) == 2


def test_price_worked_example(capsys):
    execute(["price", "--unit-value", "1", "--quantity", "1000", "--distortion", "4",
             "--revelation", "5", "--intrusion", "2", "--noise", "0.25", "--exclusive",
             "--lifespan", "90", "--format", "json"])
    rec = json.loads(capsys.readouterr().out)
    assert abs(rec["recommended"] - 2247.0) < 0.5


def test_price_listing_and_buyer(capsys):
    execute(["price", "--unit-value", "1", "--quantity", "1", "--noise", "0.5",
             "--ask", "100", "--buyer-reputation", "0.2", "--format", "json"])
    rec = json.loads(capsys.readouterr().out)
    assert rec["listing_price"] == pytest.approx(60.0)
    assert rec["buyer_effective_price"] == pytest.approx(96.0)


def test_price_perpetual(capsys):
    execute(["price", "--unit-value", "1", "--quantity", "1", "--risk", "1", "--exclusive",
             "--resale", "--lifespan", "perpetual", "--demand", "2", "--format", "json"])
    assert json.loads(capsys.readouterr().out)["recommended"] == pytest.approx(15.0)


def test_license_check(tmp_path, capsys):
    lic = make_license(exclusive=True, lifespan=Lifespan.of(90)).grant("acme", 0, "LIC-1")
    path = tmp_path / "lic.json"
    path.write_text(json.dumps(lic.to_record()))
    base = ["license-check", "--license", str(path)]
    assert execute(base + ["--purpose", "ProductOptimization", "--tick", "10"]) == 0
    assert capsys.readouterr().out.strip() == "Compliant"
    execute(base + ["--purpose", "Resale", "--tick", "10"])
    assert "ProhibitedResale" in capsys.readouterr().out
    execute(base + ["--purpose", "ProductOptimization", "--tick", "91"])
    assert "Expired" in capsys.readouterr().out
    assert execute(base + ["--purpose", "ProductOptimization", "--tick", "1",
                           "--actor", "other"]) == 1
    assert execute(["license-check", "--license", str(tmp_path / "missing.json"),
                    "--purpose", "Resale", "--tick", "0"]) == 1


def test_simulate_bad_config(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({**SMALL, "ticks": 0}))
    assert execute(["simulate", "--config", str(bad), "--out", str(tmp_path / "o")]) == 1
    assert "ticks" in capsys.readouterr().err


def test_simulate_is_reproducible(small_config, tmp_path, capsys):
    for name in ("a", "b"):
        assert execute(["simulate", "--config", str(small_config),
                        "--out", str(tmp_path / name)]) == 0
    for f in ("ledger.jsonl", "metrics.json", "trajectories.csv"):
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()
    header = (tmp_path / "a" / "trajectories.csv").read_text().splitlines()[0]
    assert header == "member,label,tick,reputation"


def test_seed_override(small_config, tmp_path, capsys):
    execute(["simulate", "--config", str(small_config), "--out", str(tmp_path / "a")])
    execute(["simulate", "--config", str(small_config), "--out", str(tmp_path / "b"),
             "--seed", "99"])
    a = json.loads((tmp_path / "a" / "metrics.json").read_text())
    b = json.loads((tmp_path / "b" / "metrics.json").read_text())
    assert a["event_log_hash"] != b["event_log_hash"]


def test_report_reproduces_metrics(small_config, tmp_path, capsys):
    out = tmp_path / "run"
    execute(["simulate", "--config", str(small_config), "--out", str(out)])
    capsys.readouterr()
    assert execute(["report", "--ledger", str(out / "ledger.jsonl"), "--format", "json",
                    "--out", str(tmp_path / "rep")]) == 0
    printed = capsys.readouterr().out
    assert printed.encode() == (out / "metrics.json").read_bytes()
    assert (tmp_path / "rep" / "metrics.json").read_bytes() == (out / "metrics.json").read_bytes()


def test_report_rejects_corrupt_ledger(tmp_path, capsys):
    bad = tmp_path / "ledger.jsonl"
    bad.write_text('{"seq": 5, "tick": 0, "kind": "Listed", "payload": {}}\n')
    assert execute(["report", "--ledger", str(bad)]) == 1


def test_console_entry_point():
    proc = subprocess.run([sys.executable, "-m", "datamarket.cli", "assess-risk",
                           "--distortion", "0", "--revelation", "0", "--intrusion", "0"],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and "Low" in proc.stdout


def test_bundled_scenarios_exist():
    assert (SCENARIOS / "golden.json").exists()
