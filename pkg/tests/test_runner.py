import json
from pathlib import Path

import numpy as np
import pytest

from rotlimit import runner
from rotlimit.config import ConfigError, RunConfig
from rotlimit.euler import PositivityError
from rotlimit.initdata import WellPreparedSpec, make_well_prepared, well_prepared_q0
from rotlimit.runner import (build_initial_data, eps_tag, fit_rate, read_csv, run_single,
                             run_sweep, sweep_checks)

BASELINES = json.loads((Path(__file__).parent / "baselines.json").read_text())
SMALL = RunConfig(nx=16, ny=16, epsilons=(0.4, 0.2, 0.1), t_end=0.1, sample_interval=0.05)


def test_zero_data_gives_zero_relative_energy():
    cfg = RunConfig(nx=16, ny=16, epsilons=(1.0,), data="zero", t_end=0.2)
    r = run_single(cfg)
    assert r.ok
    np.testing.assert_array_equal(r.series["E"], 0.0)


def test_single_mode_regression_baseline():
    b = BASELINES["single_mode_eps0.2"]
    cfg = RunConfig(epsilons=(0.2,), data="mode", amplitude=0.05, t_end=0.5)
    r = run_single(cfg)
    assert np.max(r.series["E"]) <= b["bound"]


def test_two_mode_regression_baseline():
    b = BASELINES["two_mode_eps0.2"]
    r = run_single(RunConfig(epsilons=(0.2,), amplitude=0.05, t_end=0.5))
    assert r.final_E == pytest.approx(b["final_E"], rel=b["rel_tol"])
    assert np.max(r.series["E"]) == pytest.approx(b["max_E"], rel=b["rel_tol"])
    d = r.diagnostics
    assert d["mass_drift"] < 1e-10 and d["target_energy_drift"] < 1e-6


def test_ill_with_balanced_data_matches_well_run():
    cfg = RunConfig(nx=32, ny=32, epsilons=(0.2,), t_end=0.2)
    grid = cfg.grid
    q0 = well_prepared_q0(grid, "two_mode", 0.05)
    st = make_well_prepared(WellPreparedSpec(q0, cfg.params(0.2)), grid)
    well = run_single(cfg, data={"q0": q0})
    ill = run_single(cfg.with_(family="ill"),
                     data={"rho1_0": grid.lift(q0), "u0": st.mom / st.rho})
    np.testing.assert_allclose(ill.series["E"], well.series["E"], rtol=0, atol=1e-10)
    np.testing.assert_allclose(ill.series["acoustic_energy"], 0, atol=1e-20)


def test_run_single_writes_artifacts(tmp_path):
    r = run_single(SMALL, 0.2, tmp_path)
    for name in ("monitors.csv", "relative_energy.csv", "target.csv", "run.json",
                 "euler_final.bin", "euler_final.json", "target_final.bin"):
        assert (tmp_path / name).exists(), name
    back = read_csv(tmp_path / "relative_energy.csv")
    np.testing.assert_array_equal(back["E"], r.series["E"])
    assert json.loads((tmp_path / "run.json").read_text())["final_E"] == r.final_E


def test_positivity_abort_is_reported(tmp_path, monkeypatch):
    def boom(state0, *a, **k):
        raise PositivityError("forced", snapshot=state0)
    monkeypatch.setattr(runner, "integrate", boom)
    r = run_single(SMALL, 0.2, tmp_path)
    assert not r.ok and "forced" in r.error
    assert (tmp_path / "abort_snapshot.bin").exists()
    summ = run_sweep(SMALL)
    assert summ.failed and sweep_checks(summ) == {"completed": False}


def test_sweep_needs_three_epsilons():
    with pytest.raises(ConfigError):
        run_sweep(SMALL.with_(epsilons=(0.2, 0.1)))
    with pytest.raises(ValueError):
        fit_rate([0.2, 0.1], [1.0, 0.5])


def test_fit_rate_recovers_power_law():
    eps = np.array([0.4, 0.2, 0.1, 0.05])
    p, c = fit_rate(eps, 3.0 * eps ** 2.0)
    assert p == pytest.approx(2.0) and c == pytest.approx(3.0)


def test_zero_sweep_is_exact_zero():
    summ = run_sweep(SMALL.with_(data="zero"))
    assert summ.exact_zero and summ.rate is None
    assert sweep_checks(summ) == {"completed": True, "exact_zero": True}


def test_sweep_outputs_and_determinism(tmp_path):
    a = run_sweep(SMALL, jobs=1, out=tmp_path / "serial")
    b = run_sweep(SMALL, jobs=2, out=tmp_path / "parallel")
    c = run_sweep(SMALL, jobs=1, out=tmp_path / "again")
    assert a.final_E == b.final_E == c.final_E
    for name in ["sweep.csv"] + [f"{eps_tag(e)}/relative_energy.csv" for e in SMALL.epsilons]:
        ref = (tmp_path / "serial" / name).read_bytes()
        assert (tmp_path / "parallel" / name).read_bytes() == ref
        assert (tmp_path / "again" / name).read_bytes() == ref
    sweep = read_csv(tmp_path / "serial" / "sweep.csv")
    assert list(sweep) == ["epsilon", "final_E", "fitted_line"]
    np.testing.assert_allclose(sweep["fitted_line"], a.constant * sweep["epsilon"] ** a.rate,
                               rtol=1e-14)
    summary = json.loads((tmp_path / "serial" / "summary.json").read_text())
    assert summary["epsilons"] == list(SMALL.epsilons)
    assert (tmp_path / "serial" / "config.txt").exists()


def test_ill_sweep_reports_ratio():
    summ = run_sweep(SMALL.with_(family="ill"))
    assert len(summ.ratios) == 3
    assert sweep_checks(summ)["corrected_smaller"]


def test_initial_data_override_and_family():
    cfg = SMALL.with_(family="ill", data="pulse", delta=0.5)
    init = build_initial_data(cfg, 0.1)
    assert init.acoustic is not None and init.decomposition is not None
    np.testing.assert_array_equal(init.state.mom, 0)


def test_decay_run_writes_outputs(tmp_path):
    cfg = RunConfig(nx=32, ny=32, lx=8 * np.pi, ly=8 * np.pi, family="ill", data="pulse",
                    epsilons=(0.1,), delta=0.5)
    res = runner.run_decay(cfg, out_dir=tmp_path, nsamples=11)
    assert res["window"] == pytest.approx(8 * np.pi / (4 * np.sqrt(2) / 0.1))
    assert res["factor"] > 1
    prof = read_csv(tmp_path / "acoustic_decay.csv")
    assert prof["t"].size == 11
    np.testing.assert_allclose(prof["global_energy"], prof["global_energy"][0], rtol=1e-12)
