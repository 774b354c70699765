"""End-to-end pipeline: simulate, estimate, predict, compare, report.

All file output is byte-deterministic for a fixed configuration: floats
are written with 17 significant digits (exact double round-trip), JSON
keys are sorted, and no timestamps are embedded.  Timing measurements
live under the single ``timings`` key of ``report.json`` so consumers can
drop it when comparing runs.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import frechet as frechet_mod
from . import so3
from .config import RunConfig
from .drift import make_conjugation_drift
from .moments import PredictionState, integrate
from .sde import NoiseModel, PathConfig, simulate_ensemble

_ENSEMBLE_HEADER = "path_id,step,t,m00,m01,m02,m10,m11,m12,m20,m21,m22,stopped"
_PREDICTION_HEADER = "step,t,m00,m01,m02,m10,m11,m12,m20,m21,m22,s00,s01,s02,s11,s12,s22"


@dataclass
class ComparisonReport:
    """Scalar summary of one predictor-versus-oracle run."""

    mean_distance: float
    cov_rel_error: float
    stopped_paths: int
    residual_centering: float
    timings: dict


def _fmt(x) -> str:
    return format(float(x), ".17g")


def _write_text(path: Path, text: str):
    path.write_text(text, encoding="utf-8", newline="\n")


def _write_json(path: Path, obj):
    _write_text(path, json.dumps(obj, indent=2, sort_keys=True) + "\n")


def prediction_steps(N: int) -> int:
    """Integration steps: at least 100, rounded up to a multiple of ``N``.

    Keeping the count a multiple of ``N`` aligns the prediction grid with
    the simulation grid for slice-by-slice comparison.
    """
    return N * max(1, math.ceil(100 / N))


def write_manifest(cfg: RunConfig, outdir: Path):
    from . import __version__

    _write_json(
        outdir / "manifest.json",
        {
            "config": cfg.to_dict(),
            "config_hash": cfg.hash,
            "tool": {"name": "so3mean", "version": __version__},
        },
    )


def write_ensemble_csv(path: Path, ensemble, step_index: int, t: float):
    lines = [_ENSEMBLE_HEADER]
    for j in range(ensemble.size):
        fields = [str(j), str(step_index), _fmt(t)]
        fields += [_fmt(v) for v in ensemble.members[j].ravel()]
        fields.append(str(int(ensemble.stopped[j])))
        lines.append(",".join(fields))
    _write_text(path, "\n".join(lines) + "\n")


def write_prediction_csv(path: Path, states):
    lines = [_PREDICTION_HEADER]
    for k, st in enumerate(states):
        S = st.cov
        fields = [str(k), _fmt(st.t)]
        fields += [_fmt(v) for v in st.mean.ravel()]
        fields += [_fmt(S[0, 0]), _fmt(S[0, 1]), _fmt(S[0, 2]),
                   _fmt(S[1, 1]), _fmt(S[1, 2]), _fmt(S[2, 2])]
        lines.append(",".join(fields))
    _write_text(path, "\n".join(lines) + "\n")


def read_ensemble_csv(path: Path):
    """Members and stopped flags from an ensemble CSV."""
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    members = data[:, 3:12].reshape(-1, 3, 3)
    stopped = data[:, 12].astype(bool)
    return members, stopped


def _simulate(cfg: RunConfig, workers: int):
    drift = make_conjugation_drift(cfg.A)
    noise = NoiseModel.isotropic(cfg.sigma)
    path_cfg = PathConfig(T=cfg.T, N=cfg.N, seed=cfg.seed, ball_radius=cfg.R)
    return simulate_ensemble(path_cfg, drift, noise, n_paths=cfg.n_mc, workers=workers)


def _predict(cfg: RunConfig):
    drift = make_conjugation_drift(cfg.A)
    noise = NoiseModel.isotropic(cfg.sigma)
    state0 = PredictionState(np.eye(3), np.zeros((3, 3)), 0.0)
    return integrate(state0, drift, noise, cfg.T, prediction_steps(cfg.N), cfg.variant)


def run_simulate(cfg: RunConfig, outdir: Path, workers: int = 1):
    """Simulate the ensemble and write one CSV per grid time plus the manifest."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    write_manifest(cfg, outdir)
    slices = _simulate(cfg, workers)
    dt = cfg.T / cfg.N
    for k, ens in enumerate(slices):
        write_ensemble_csv(outdir / f"ensemble_{k}.csv", ens, k, k * dt)
    return slices


def run_predict(cfg: RunConfig, outdir: Path):
    """Integrate the moment system and write the trajectory CSV plus the manifest."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    write_manifest(cfg, outdir)
    states = _predict(cfg)
    write_prediction_csv(outdir / "prediction.csv", states)
    return states


def _cov_rel_error(S_pred, S_emp) -> float:
    num = float(np.linalg.norm(S_pred - S_emp))
    den = float(np.linalg.norm(S_emp))
    if den < 1e-18:
        # Empirical covariance numerically zero; report the absolute error.
        return num
    return num / den


def _mean_tuple(m):
    return [float(x) for x in np.asarray(m, dtype=float).ravel()]


def run_compare(cfg: RunConfig, outdir: Path, all_slices: bool = False,
                workers: int = 1) -> ComparisonReport:
    """Run the oracle and the predictor, write outputs, return the summary.

    Writes ``manifest.json``, the terminal ensemble CSV (all slices with
    ``all_slices=True``), ``prediction.csv``, and ``report.json``.
    """
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    write_manifest(cfg, outdir)
    dt = cfg.T / cfg.N

    t0 = time.perf_counter()
    slices = _simulate(cfg, workers)
    t_sim = time.perf_counter() - t0
    terminal = slices[-1]
    if all_slices:
        for k, ens in enumerate(slices):
            write_ensemble_csv(outdir / f"ensemble_{k}.csv", ens, k, k * dt)
    else:
        write_ensemble_csv(outdir / f"ensemble_{cfg.N}.csv", terminal, cfg.N,
                           cfg.N * dt)

    t0 = time.perf_counter()
    fit = frechet_mod.frechet_mean(terminal)
    emp_cov = frechet_mod.empirical_covariance(fit.residuals)
    t_frechet = time.perf_counter() - t0

    t0 = time.perf_counter()
    states = _predict(cfg)
    t_predict = time.perf_counter() - t0
    write_prediction_csv(outdir / "prediction.csv", states)

    stride = (len(states) - 1) // cfg.N
    mean_distance = so3.distance(states[-1].mean, fit.mean)
    cov_rel_error = _cov_rel_error(states[-1].cov, emp_cov)
    residual_centering = fit.final_step_norm
    timings = {
        "simulate": t_sim,
        "frechet": t_frechet,
        "predict": t_predict,
        "total": t_sim + t_frechet + t_predict,
    }
    report = ComparisonReport(
        mean_distance=mean_distance,
        cov_rel_error=cov_rel_error,
        stopped_paths=terminal.stopped_count,
        residual_centering=residual_centering,
        timings=timings,
    )

    payload = {
        "config": cfg.to_dict(),
        "config_hash": cfg.hash,
        "mean_distance": mean_distance,
        "cov_rel_error": cov_rel_error,
        "stopped_paths": report.stopped_paths,
        "residual_centering": residual_centering,
        "frechet": {
            "mean": _mean_tuple(fit.mean),
            "residual_norm_mean": float(
                np.mean(np.linalg.norm(fit.residuals, axis=1))
            ),
            "iterations": fit.iterations,
            "covariance": _mean_tuple(emp_cov),
        },
        "prediction": {
            "mean": _mean_tuple(states[-1].mean),
            "covariance": _mean_tuple(states[-1].cov),
        },
        "timings": timings,
    }
    if all_slices:
        rows = []
        for k, ens in enumerate(slices):
            fit_k = frechet_mod.frechet_mean(ens)
            cov_k = frechet_mod.empirical_covariance(fit_k.residuals)
            pred_k = states[k * stride]
            rows.append(
                {
                    "step": k,
                    "t": k * dt,
                    "mean_distance": so3.distance(pred_k.mean, fit_k.mean),
                    "cov_rel_error": _cov_rel_error(pred_k.cov, cov_k),
                }
            )
        payload["slices"] = rows
    _write_json(outdir / "report.json", payload)
    return report
