import json

import pytest

from radialqd.cli import main

CONFIG = """
name: cli
domain: {kind: rectangle, bounds: [0, 10, 0, 10]}
sensors: {policy: per-slot-resample, L: 10}
rho: 0.05
rho1: 0.5
procedures:
  - {name: RP, rule: rp, M_detector: 4}
  - {name: Instant, rule: instant}
alpha: 0.05
trials: 3
"""


@pytest.fixture
def config(tmp_path):
    p = tmp_path / "cfg.yaml"
    p.write_text(CONFIG)
    return p


def test_simulate_twice_is_byte_identical(config, tmp_path, capsys):
    for out in ("a", "b"):
        assert main(["simulate", "--config", str(config), "--seed", "7", "--trials", "3",
                     "--out", str(tmp_path / out), "--dump-records"]) == 0
    assert (tmp_path / "a" / "results.csv").read_bytes() == (tmp_path / "b" / "results.csv").read_bytes()
    assert json.loads(capsys.readouterr().out.splitlines()[-1])["status"] == "ok"


def _error(capsys):
    lines = capsys.readouterr().err.strip().splitlines()
    assert len(lines) == 1
    return json.loads(lines[0])


def test_zero_trials_rejected(config, tmp_path, capsys):
    assert main(["simulate", "--config", str(config), "--trials", "0", "--out", str(tmp_path)]) != 0
    err = _error(capsys)
    assert err["error"] == "config" and "trials" in err["message"]


def test_missing_config_and_bad_usage(tmp_path, capsys):
    assert main(["simulate", "--config", str(tmp_path / "none.yaml"), "--out", str(tmp_path)]) != 0
    assert _error(capsys)["error"] == "io"
    assert main(["frobnicate"]) != 0
    assert _error(capsys)["error"] == "usage"


def test_unwritable_out(config, tmp_path, capsys):
    blocker = tmp_path / "f"
    blocker.write_text("")
    assert main(["simulate", "--config", str(config), "--out", str(blocker / "x")]) != 0
    assert _error(capsys)["error"] == "io"


def test_asymptotics_command(capsys):
    assert main(["asymptotics", "qphi", "--phi", "10", "--R", "10"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["q_phi"] == pytest.approx(out["q_phi_closed"], abs=1e-12)


def test_dp_command(capsys):
    assert main(["dp", "--rho", "0.1", "0.01", "--horizon", "5", "--resolution", "200"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert len(out["diagnostic"]) == 2 and 0 <= out["value_at_prior"] <= 1


def test_reproduce_small(tmp_path, capsys):
    assert main(["reproduce", "table1", "--trials", "1", "--out", str(tmp_path), "--quiet"]) == 0
    assert (tmp_path / "table1.csv").exists()
