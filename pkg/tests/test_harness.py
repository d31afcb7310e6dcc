import csv
import json
import math
from dataclasses import replace
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, strategies as st

from tfbec import cli, harness
from tfbec.harness import (ConfigError, ParamsBlock, RunConfig, SweepBlock, UnknownCriterion,
                           check_eps_sequence, config_from_dict, fit_slope, load_config)

ROOT = Path(__file__).resolve().parents[1]
EPS = (0.1, 0.05, 0.025)


def test_default_toml_matches_dataclass_defaults():
    assert load_config(ROOT / "configs" / "default.toml") == RunConfig()


@pytest.mark.parametrize("eps", [(), (0.1, -0.05), (0.1, 0.2), (0.1, 0.09), (0.1, 0.01),
                                 (0.1, math.nan)])
def test_eps_sequence_rejected(eps):
    with pytest.raises(ConfigError):
        check_eps_sequence(eps)


def test_config_validation():
    with pytest.raises(ConfigError):
        config_from_dict({"bogus": {}})
    with pytest.raises(ConfigError):
        config_from_dict({"grid": {"nodes": 3}})
    with pytest.raises(ConfigError):
        RunConfig(sweep=SweepBlock(eps=(0.1, 0.1)))
    with pytest.raises(ValueError):
        RunConfig(params=ParamsBlock(1, 2, 3))  # g^2 >= g1 g2
    cfg = config_from_dict({"sweep": {"eps": [0.2, 0.1]}, "seed": 4})
    assert cfg.sweep.eps == (0.2, 0.1) and cfg.seed == 4


@given(st.floats(-3, 3), st.floats(-5, 5))
def test_fit_slope_exact_power_law(k, logc):
    eps = np.array([0.1, 0.05, 0.025, 0.0125])
    fit = fit_slope(eps, np.exp(logc) * eps ** k)
    assert fit.slope == pytest.approx(k, abs=1e-9)
    assert fit.residual < 1e-9
    assert fit.half_width < 1e-6


def test_fit_slope_degenerate():
    assert math.isnan(fit_slope([0.1], [1.0]).slope)
    two = fit_slope([0.1, 0.05], [1.0, 0.25])
    assert two.slope == pytest.approx(2.0) and math.isnan(two.half_width)


@pytest.fixture(scope="module")
def sweep(tmp_path_factory):
    out = tmp_path_factory.mktemp("sweep")
    cfg = replace(RunConfig(), output=replace(RunConfig().output, dir=str(out)))
    return harness.run_sweep(cfg, eps_list=EPS), out


def test_sweep_outputs(sweep):
    rep, out = sweep
    assert [r["ok"] for r in rep.records] == [True] * len(EPS)
    assert len(rep.slopes) >= 6
    data = json.loads((out / "sweep.json").read_text())
    assert data["schema_version"] == 1
    assert data["eps_list"] == list(EPS)
    with open(out / "sweep.csv") as fh:
        rows = list(csv.reader(fh))
    assert tuple(rows[0]) == harness.RECORD_COLUMNS
    assert len(rows) == len(EPS) + 1


def test_sweep_deterministic_across_workers(sweep, tmp_path):
    rep, _ = sweep
    cfg = replace(RunConfig(), output=replace(RunConfig().output, dir=str(tmp_path)))
    harness._state.cache_clear()
    harness._approx.cache_clear()
    again = harness.run_sweep(cfg, eps_list=EPS, threads=2, write=False)
    assert again.to_json() == rep.to_json()


def test_sweep_isolates_failures(monkeypatch, tmp_path):
    real = harness.eps_record

    def flaky(blk, eps, grid, spectrum=True):
        if eps == 0.05:
            raise FloatingPointError("boom")
        return real(blk, eps, grid, spectrum)

    monkeypatch.setattr(harness, "eps_record", flaky)
    cfg = replace(RunConfig(), output=replace(RunConfig().output, dir=str(tmp_path)))
    rep = harness.run_sweep(cfg, eps_list=EPS, write=False)
    bad = [r for r in rep.records if not r["ok"]]
    assert [r["eps"] for r in bad] == [0.05]
    assert "boom" in bad[0]["error"]
    assert not rep.passed
    assert rep.slopes  # fits still run on the surviving points


def test_symmetric_sweep_flags_itself(tmp_path):
    cfg = replace(RunConfig(), output=replace(RunConfig().output, dir=str(tmp_path)))
    rep = harness.run_sweep(cfg, blk=ParamsBlock(1.5, 1.5, 1.0), eps_list=(0.1, 0.05), write=False)
    assert rep.symmetric_checks
    check = [c for c in rep.checks if c.name == "eta1 == eta2"][0]
    assert check.passed


def test_unknown_criterion():
    with pytest.raises(UnknownCriterion):
        harness.reproduce("nope")


def test_registry_complete():
    assert len(harness.CRITERIA) == 13


def test_cli_exit_codes(tmp_path, capsys):
    assert cli.main(["--out", str(tmp_path), "tf"]) == 0
    assert (tmp_path / "tf.csv").exists()
    assert cli.main(["--out", str(tmp_path), "reproduce", "nope"]) == 2
    assert cli.main(["--out", str(tmp_path), "sweep", "--eps", "0.1", "0.3"]) == 2
    bad = tmp_path / "bad.toml"
    bad.write_text("[sweep]\neps = [0.1, 0.1]\n")
    assert cli.main(["--config", str(bad), "tf"]) == 2
    assert cli.main(["--config", str(tmp_path / "missing.toml"), "tf"]) == 2


def test_cli_solve_and_aux(tmp_path):
    assert cli.main(["--out", str(tmp_path), "solve", "--eps", "0.1"]) == 0
    info = json.loads((tmp_path / "solve.json").read_text())
    assert info["eps"] == 0.1 and abs(info["masses"][0] - 1) < 1e-10
    assert cli.main(["--out", str(tmp_path), "aux", "--eps", "0.1"]) == 0
    with open(tmp_path / "aux.csv") as fh:
        assert next(csv.reader(fh)) == ["r", "xi1", "xi2", "F1", "F2", "F10", "F20"]
