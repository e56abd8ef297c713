import dataclasses
from pathlib import Path

import numpy as np
import pytest

from risvi import cli, harness
from risvi.config import ConfigError, ScenarioConfig, dump_config, from_mapping, load_config
from risvi.estimators import NumericalError
from risvi.harness import (TRIAL_COLUMNS, aggregate, draw_trial_data, nmse, noise_variance,
                           run_sweep, run_trial, sweep)

ROOT = Path(__file__).resolve().parents[1]
PAPER_CFG = ROOT / "configs" / "paper.cfg"


def small_cfg(**kw):
    base = dict(n_bs=4, ris_h=3, ris_v=3, n_users=2, m_rb=1, m_ur=2, trials=3, t_list=(2, 4),
                angle_t_list=(2,), delta2_list=(0.0, 1e-2), max_iters=60)
    base.update(kw)
    return ScenarioConfig(**base)


def outcomes(result):
    """Records without wall-clock timing."""
    return [dataclasses.replace(r, wall_ms=0.0) for r in result.records]


def to_dbm(watts):
    return 10 * np.log10(watts) + 30


class TestNoiseVariance:
    def test_reference(self):
        assert to_dbm(noise_variance(ScenarioConfig())) == pytest.approx(-87.97, abs=0.01)

    def test_no_noise_figure(self):
        assert to_dbm(noise_variance(ScenarioConfig(noise_figure_db=0.0))) == pytest.approx(-94.97, abs=0.01)

    def test_bandwidth_scaling(self):
        a = noise_variance(ScenarioConfig(bandwidth_hz=8e7))
        b = noise_variance(ScenarioConfig(bandwidth_hz=8e8))
        assert to_dbm(b) - to_dbm(a) == pytest.approx(10.0, abs=1e-9)

    def test_override(self):
        assert noise_variance(ScenarioConfig(noise_var_override=0.0)) == 0.0


class TestNmse:
    def test_single_ue(self):
        assert nmse([np.array([1, 0])], [np.array([0, 0])]) == 1.0

    def test_average_over_ues(self):
        truth = [np.array([2.0 + 0j]), np.array([1.0j])]
        est = [np.array([1.0 + 0j]), np.array([1.0j])]
        assert nmse(truth, est) == pytest.approx(0.125)

    def test_perfect(self):
        c = [np.array([1 + 1j, 2 - 1j])]
        assert nmse(c, c) == 0.0

    def test_zero_truth(self):
        with pytest.raises(ValueError):
            nmse([np.zeros(2)], [np.ones(2)])


class TestRunTrial:
    def test_deterministic(self):
        cfg = small_cfg()
        a, b = run_trial(cfg, 4, 0.0, 1), run_trial(cfg, 4, 0.0, 1)
        assert outcomes(a) == outcomes(b) and a.input_digest == b.input_digest

    def test_angle_mode_at_zero_matches_blocks(self):
        cfg = small_cfg()
        blocks = run_trial(cfg, 2, 0.0, 0, mode="blocks")
        angle = run_trial(dataclasses.replace(cfg, mode="angle"), 2, 0.0, 0)
        assert outcomes(blocks) == outcomes(angle)
        assert blocks.input_digest == angle.input_digest

    def test_perturbation_changes_only_dictionary(self):
        cfg = small_cfg()
        clean = run_trial(cfg, 4, 0.0, 2)
        noisy = run_trial(cfg, 4, 1e-2, 2)
        assert [r.truth_sq_norm for r in clean.records] == [r.truth_sq_norm for r in noisy.records]
        assert clean.input_digest != noisy.input_digest

    def test_digest_independent_of_estimator_order(self):
        cfg = small_cfg()
        a = run_trial(cfg, 2, 0.0, 0)
        b = run_trial(dataclasses.replace(cfg, estimators=tuple(reversed(cfg.estimators))), 2, 0.0, 0)
        assert a.input_digest == b.input_digest
        for name in cfg.estimators:
            assert a.nmse(name) == b.nmse(name)

    def test_noiseless_full_rank(self):
        cfg = ScenarioConfig(noise_var_override=0.0, trials=1)
        res = run_trial(cfg, 12, 0.0, 0)
        assert res.nmse("vi-laplace") < 1e-4
        assert res.nmse("ls") < 1e-10

    def test_fast_and_slow_measurements_agree(self):
        cfg = small_cfg()
        _, slow = draw_trial_data(cfg, 4, 5, fast_path=False)
        _, fast = draw_trial_data(cfg, 4, 5, fast_path=True)
        for k in range(cfg.n_users):
            assert np.linalg.norm(slow.y[k] - fast.y[k]) <= 1e-10 * np.linalg.norm(slow.y[k])

    def test_failure_is_wrapped(self, monkeypatch):
        def boom(*args, **kwargs):
            raise NumericalError("forced")

        monkeypatch.setattr(harness, "estimate_vi_laplace", boom)
        with pytest.raises(harness.TrialFailure) as info:
            run_trial(small_cfg(), 2, 0.0, 7)
        assert info.value.trial == 7


class TestSweep:
    def test_aggregate_rows(self):
        cfg = small_cfg(t_list=(3,))
        rows = aggregate(run_sweep(cfg), cfg.estimators)
        assert len(rows) == 4
        assert {r["estimator"] for r in rows} == set(cfg.estimators)
        assert all(r["trials"] == 3 for r in rows)

    def test_mean_between_extremes(self):
        cfg = small_cfg(t_list=(2,), trials=5)
        results = run_sweep(cfg)
        for row in aggregate(results, cfg.estimators):
            values = [r.nmse(row["estimator"]) for r in results]
            assert min(values) <= float(row["mean_nmse"]) <= max(values)

    def test_trial_prefix_stable(self):
        few = run_sweep(small_cfg(trials=2))
        many = run_sweep(small_cfg(trials=4))
        prefix = [r for r in many if r.trial < 2]
        assert [outcomes(r) for r in few] == [outcomes(r) for r in prefix]

    def test_parallel_matches_serial(self, tmp_path):
        cfg = small_cfg(t_list=(2,), trials=4)
        serial = sweep(cfg, tmp_path / "a", workers=1)
        parallel = sweep(cfg, tmp_path / "b", workers=2)
        for key in ("trials", "aggregate", "manifest"):
            assert serial[key].read_bytes() == parallel[key].read_bytes()

    def test_csv_schema(self, tmp_path):
        cfg = small_cfg(t_list=(2,), trials=2, estimators=("ls",))
        paths = sweep(cfg, tmp_path)
        lines = paths["trials"].read_text().splitlines()
        assert lines[0] == ",".join(TRIAL_COLUMNS)
        assert len(lines) == 1 + 2 * cfg.n_users
        assert all(line.endswith(",") for line in lines[1:])


class TestConfig:
    def test_round_trip(self, tmp_path):
        cfg = small_cfg(noise_var_override=1e-9, fast_path=False, delta2_list=(0.0, 0.123))
        path = tmp_path / "c.cfg"
        path.write_text(dump_config(cfg))
        assert load_config(path) == cfg

    def test_paper_config(self):
        cfg = load_config(PAPER_CFG)
        assert (cfg.n_bs, cfg.n_ris, cfg.n_users, cfg.pilot_length) == (16, 100, 3, 3)
        assert (cfg.m_rb, cfg.m_ur, cfg.trials) == (2, 3, 100)
        assert cfg.power_dbm == 23 and cfg.bandwidth_hz == 8e7

    def test_unknown_key(self):
        with pytest.raises(ConfigError):
            from_mapping({"n_antennas": "4"})

    def test_unknown_key_in_file(self, tmp_path):
        path = tmp_path / "bad.cfg"
        path.write_text("[array]\nn_bs = 4\nbogus = 1\n")
        with pytest.raises(ConfigError):
            load_config(path)

    @pytest.mark.parametrize("key,value", [("trials", "0"), ("tau", "1"), ("mode", "sideways"),
                                           ("estimators", "ls,mystery"), ("delta2_list", "-1")])
    def test_invalid_values(self, key, value):
        with pytest.raises(ConfigError):
            from_mapping({key: value})

    def test_sweep_points(self):
        cfg = small_cfg()
        assert cfg.sweep_points() == [(2, 0.0), (4, 0.0)]
        assert dataclasses.replace(cfg, mode="angle").sweep_points() == [(2, 0.0), (2, 1e-2)]


class TestCli:
    ARGS = ["--trials", "1", "--t-list", "2", "--estimators", "ls,lmmse"]

    def test_success(self, tmp_path, capsys):
        assert cli.main(["--config", str(PAPER_CFG), "--out", str(tmp_path), *self.ARGS]) == 0
        assert (tmp_path / "trials_blocks.csv").exists()
        assert (tmp_path / "aggregate_blocks.csv").exists()
        assert "lmmse" in capsys.readouterr().out

    def test_angle_mode(self, tmp_path):
        args = ["--mode", "angle", "--delta2-list", "0,0.01", "--out", str(tmp_path), *self.ARGS]
        assert cli.main(args) == 0
        rows = (tmp_path / "aggregate_angle.csv").read_text().splitlines()
        assert len(rows) == 1 + 2 * 2

    def test_bad_config(self, tmp_path, capsys):
        assert cli.main(["--trials", "0", "--out", str(tmp_path)]) == 1
        assert cli.main(["--config", str(tmp_path / "missing.cfg"), "--out", str(tmp_path)]) == 1
        assert "config error" in capsys.readouterr().err

    def test_numerical_failure(self, tmp_path, monkeypatch, capsys):
        def boom(*args, **kwargs):
            raise NumericalError("forced")

        monkeypatch.setattr(harness, "estimate_ls", boom)
        assert cli.main(["--out", str(tmp_path), *self.ARGS]) == 2
        assert "trial 0" in capsys.readouterr().err
