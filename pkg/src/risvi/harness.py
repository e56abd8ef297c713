"""Seeded Monte Carlo trials, sweeps over T / delta2, and CSV emission.

Every random draw of a trial comes from its own counter-based stream keyed
by ``(master seed, trial, purpose)``.  Channels, UE placement, RIS phases,
noise and angle errors are therefore shared across sweep points of the
same trial (common random numbers): the RIS profile and noise for ``T``
blocks are prefixes of those for ``T' > T``, and angle errors for
different ``delta2`` are one standard-normal draw scaled by ``sqrt(delta2)``.
"""

from __future__ import annotations

import csv
import hashlib
import io
import statistics
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .channel import (AnglePriors, ArrayGeometry, PathLossModel, build_dictionary,
                      draw_realization, path_loss, perturb_angles, place_users)
from .config import ScenarioConfig, dump_config
from .estimators import (Hyperpriors, NumericalError, VIOptions, estimate_lmmse,
                         estimate_ls, estimate_vi_laplace, estimate_vi_student)
from .measurement import assemble, assemble_direct, gen_pilots, gen_ris_profile
from .numeric import RngStream

TRIAL_COLUMNS = ("mode", "T", "delta2", "trial", "ue", "estimator", "sq_err",
                 "truth_sq_norm", "iters", "wall_ms")
AGGREGATE_COLUMNS = ("mode", "T", "delta2", "estimator", "mean_nmse", "median_nmse", "trials")

CHANNEL, USERS, RIS, NOISE, PERTURB = range(5)


class TrialFailure(RuntimeError):
    def __init__(self, trial: int, T: int, delta2: float, cause: Exception):
        super().__init__(f"trial {trial} (T={T}, delta2={delta2}) failed: {cause}")
        self.trial, self.T, self.delta2 = trial, T, delta2


@dataclass
class UeRecord:
    ue: int
    estimator: str
    sq_err: float
    truth_sq_norm: float
    iters: int
    wall_ms: float
    noise_precision: float | None = None


@dataclass
class TrialResult:
    mode: str
    trial: int
    T: int
    delta2: float
    records: list[UeRecord] = field(default_factory=list)
    input_digest: str = ""
    true_noise_precision: float = float("inf")

    def nmse(self, estimator: str) -> float:
        ratios = [r.sq_err / r.truth_sq_norm for r in self.records if r.estimator == estimator]
        return float(np.mean(ratios))


def db_to_linear(db: float) -> float:
    return 10.0 ** (db / 10.0)


def transmit_power(cfg: ScenarioConfig) -> float:
    return db_to_linear(cfg.power_dbm - 30.0)


def noise_variance(cfg: ScenarioConfig) -> float:
    """BS noise power ``W N0 NF`` in watts."""
    if cfg.noise_var_override is not None:
        return float(cfg.noise_var_override)
    dbm = cfg.noise_density_dbm_hz + 10.0 * np.log10(cfg.bandwidth_hz) + cfg.noise_figure_db
    return db_to_linear(dbm - 30.0)


def nmse(truth, estimates) -> float:
    """Average over UEs of ``|c_k - c_hat_k|^2 / |c_k|^2``."""
    if len(truth) != len(estimates):
        raise ValueError("truth and estimates must have the same number of UEs")
    ratios = []
    for c, c_hat in zip(truth, estimates):
        norm = float(np.vdot(c, c).real)
        if norm == 0:
            raise ValueError("true channel has zero norm")
        diff = np.asarray(c) - np.asarray(c_hat)
        ratios.append(float(np.vdot(diff, diff).real) / norm)
    return float(np.mean(ratios))


def geometry(cfg: ScenarioConfig) -> ArrayGeometry:
    return ArrayGeometry(cfg.n_bs, cfg.ris_h, cfg.ris_v, cfg.spacing)


def _priors(cfg: ScenarioConfig) -> AnglePriors:
    return AnglePriors(tuple(cfg.azimuth_range), tuple(cfg.elevation_range), tuple(cfg.aoa_range))


def draw_trial_channel(cfg: ScenarioConfig, trial: int):
    base = RngStream(cfg.seed, (trial,))
    users = place_users(base.child(USERS), cfg.n_users, cfg.ue_center, cfg.ue_radius)
    ris = np.asarray(cfg.ris_pos)
    d_rb = float(np.linalg.norm(ris - np.asarray(cfg.bs_pos)))
    d_ur = np.linalg.norm(users - ris[None, :], axis=1)
    sigma2_rb = float(path_loss(PathLossModel(cfg.mu0_db, cfg.d0, cfg.eta_rb), d_rb))
    sigma2_ur = [float(s) for s in path_loss(PathLossModel(cfg.mu0_db, cfg.d0, cfg.eta_ur), d_ur)]
    return draw_realization(base.child(CHANNEL), geometry(cfg), cfg.m_rb,
                            [cfg.m_ur] * cfg.n_users, sigma2_rb, sigma2_ur,
                            _priors(cfg), users)


def draw_trial_data(cfg: ScenarioConfig, T: int, trial: int, fast_path: bool | None = None):
    """Channel realization and measurements for one trial at ``T`` blocks."""
    base = RngStream(cfg.seed, (trial,))
    chan = draw_trial_channel(cfg, trial)
    profile = gen_ris_profile(base.child(RIS), cfg.n_ris, T)
    pilots = gen_pilots(cfg.pilot_length, cfg.n_users)
    fast = cfg.fast_path if fast_path is None else fast_path
    build = assemble_direct if fast else assemble
    meas = build(chan, profile, pilots, transmit_power(cfg), base.child(NOISE), noise_variance(cfg))
    return chan, meas


def _digest(*arrays) -> str:
    h = hashlib.sha256()
    for arr in arrays:
        h.update(np.ascontiguousarray(arr).tobytes())
    return h.hexdigest()


def run_trial(cfg: ScenarioConfig, T: int, delta2: float, trial: int,
              mode: str | None = None) -> TrialResult:
    """Run every configured estimator on one shared realization.

    With ``delta2 > 0`` the estimators see dictionaries built from
    perturbed angles, while the truth keeps the exact ones.
    """
    mode = mode or cfg.mode
    try:
        return _run_trial(cfg, T, delta2, trial, mode)
    except (NumericalError, FloatingPointError, np.linalg.LinAlgError) as exc:
        raise TrialFailure(trial, T, delta2, exc) from exc


def _run_trial(cfg, T, delta2, trial, mode):
    chan, meas = draw_trial_data(cfg, T, trial)
    geom = geometry(cfg)
    dictionaries = chan.W
    sensing = meas.S_c
    if delta2 > 0:
        stream = RngStream(cfg.seed, (trial, PERTURB)).generator()
        rb = perturb_angles(chan.paths_rb, stream, delta2)
        dictionaries = [build_dictionary(rb, perturb_angles(p, stream, delta2), geom)
                        for p in chan.paths_ur]
        sensing = [meas.S_bar @ W for W in dictionaries]

    hp = Hyperpriors(cfg.hp_a, cfg.hp_b)
    opts = VIOptions(cfg.tol, cfg.max_iters, cfg.floor, cfg.beta_cap, cfg.normalize)
    noise_var = meas.effective_noise_var if cfg.lmmse_noise == "scaled" else meas.sigma2_b
    result = TrialResult(mode=mode, trial=trial, T=T, delta2=float(delta2),
                         true_noise_precision=1.0 / meas.effective_noise_var
                         if meas.sigma2_b > 0 else float("inf"))
    digests = []
    for k in range(cfg.n_users):
        y, S, W = meas.y[k], sensing[k], dictionaries[k]
        for arr in (y, S, W):
            arr.flags.writeable = False
        digests.append(_digest(y, S, W))
        prior_var = (geom.n_bs * geom.n_ris / cfg.m_rb) * (geom.n_ris / cfg.m_ur) \
            * chan.sigma2_rb * chan.sigma2_ur[k]
        runners = {
            "ls": lambda: estimate_ls(y, S, W),
            "lmmse": lambda: estimate_lmmse(y, S, W, prior_var, noise_var),
            "vi-s": lambda: estimate_vi_student(y, S, W, hp, opts),
            "vi-laplace": lambda: estimate_vi_laplace(y, S, W, hp, opts),
        }
        truth = chan.c[k]
        truth_sq = float(np.vdot(truth, truth).real)
        for name in cfg.estimators:
            start = time.perf_counter()
            out = runners[name]()
            wall = (time.perf_counter() - start) * 1e3
            if not np.all(np.isfinite(out.c_hat)):
                raise NumericalError(f"{name} returned non-finite estimate for UE {k}")
            diff = truth - out.c_hat
            result.records.append(UeRecord(
                ue=k, estimator=name, sq_err=float(np.vdot(diff, diff).real),
                truth_sq_norm=truth_sq, iters=out.iterations, wall_ms=wall,
                noise_precision=out.noise_precision,
            ))
        if _digest(y, S, W) != digests[-1]:
            raise RuntimeError(f"estimator inputs changed during trial {trial}")
    result.input_digest = _digest(*[d.encode() for d in digests])
    return result


def _task(args):
    cfg, T, delta2, trial = args
    return run_trial(cfg, T, delta2, trial)


def run_sweep(cfg: ScenarioConfig, workers: int | None = None) -> list[TrialResult]:
    """All trials of the configured sweep, in (T, delta2, trial) order."""
    tasks = [(cfg, T, d, i) for T, d in cfg.sweep_points() for i in range(cfg.trials)]
    workers = workers or cfg.workers
    if workers <= 1:
        return [_task(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_task, tasks, chunksize=max(1, len(tasks) // (4 * workers))))


def trial_rows(results: list[TrialResult], record_timing: bool = False) -> list[dict]:
    rows = []
    for res in results:
        for rec in res.records:
            rows.append({
                "mode": res.mode, "T": res.T, "delta2": repr(res.delta2), "trial": res.trial,
                "ue": rec.ue, "estimator": rec.estimator, "sq_err": repr(rec.sq_err),
                "truth_sq_norm": repr(rec.truth_sq_norm), "iters": rec.iters,
                "wall_ms": f"{rec.wall_ms:.3f}" if record_timing else "",
            })
    return rows


def aggregate(results: list[TrialResult], estimators) -> list[dict]:
    groups: dict[tuple, list[float]] = {}
    for res in results:
        for name in estimators:
            groups.setdefault((res.mode, res.T, res.delta2, name), []).append(res.nmse(name))
    rows = []
    for (mode, T, delta2, name), values in groups.items():
        rows.append({
            "mode": mode, "T": T, "delta2": repr(delta2), "estimator": name,
            "mean_nmse": repr(float(np.mean(values))),
            "median_nmse": repr(float(statistics.median(values))),
            "trials": len(values),
        })
    return rows


def _csv_text(columns, rows) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=columns, lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    return buf.getvalue()


def write_outputs(cfg: ScenarioConfig, results: list[TrialResult], out_dir) -> dict[str, Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {
        "trials": out / f"trials_{cfg.mode}.csv",
        "aggregate": out / f"aggregate_{cfg.mode}.csv",
        "manifest": out / f"manifest_{cfg.mode}.txt",
    }
    paths["trials"].write_text(
        _csv_text(TRIAL_COLUMNS, trial_rows(results, cfg.record_timing)), encoding="utf-8")
    paths["aggregate"].write_text(
        _csv_text(AGGREGATE_COLUMNS, aggregate(results, cfg.estimators)), encoding="utf-8")
    paths["manifest"].write_text(dump_config(cfg), encoding="utf-8")
    return paths


def sweep(cfg: ScenarioConfig, out_dir, workers: int | None = None) -> dict[str, Path]:
    return write_outputs(cfg, run_sweep(cfg, workers), out_dir)
