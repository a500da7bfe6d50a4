"""Parameter sweeps that regenerate the timing figures as CSV rows.

Device sweeps (camera, AWG) report simulated time and are exact.  CPU
sweeps (image processing, solver) report wall-clock time from
``time.perf_counter``; the first 10% of trials of each point are
discarded as warmup and the median of the rest is the headline value.
"""

from __future__ import annotations

import csv
import enum
import gc
import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import awg as awg_mod
from . import camera, imaging
from .core import TrapArray, make_rng, sample_instance, target_center_compact
from .solver import batch_ops, solve


class Target(str, enum.Enum):
    FIG4A = "fig4a"  # acquisition time vs ROI height
    FIG4B = "fig4b"  # acquisition time vs ROI width
    FIG4D = "fig4d"  # readout time vs binning
    FIG5A = "fig5a"  # image processing vs number of traps
    FIG5B = "fig5b"  # image processing vs PSF box side
    FIG6A = "fig6a"  # solver runtime vs N_tx
    FIG7A = "fig7a"  # upload vs stream time per segment size
    FIG7B = "fig7b"  # underrun probability per segment size
    TABLE1 = "table1"  # per-phase latency of full cycles


DEFAULT_GRIDS = {
    Target.FIG4A: {"height": [1, 2, 4, 8, 16, 32, 64, 128, 256, 384, 512, 640, 768, 896, 1024]},
    Target.FIG4B: {"width": [1, 16, 32, 48, 64, 96, 128, 192, 256, 384, 512, 768, 1024]},
    Target.FIG4D: {"v_bin": [1, 2, 4, 8]},
    Target.FIG5A: {"n_traps": [256, 1024, 4096, 16384], "box_side": [5]},
    Target.FIG5B: {"box_side": [1, 3, 5, 7, 9, 15], "n_traps": [16384]},
    Target.FIG6A: {"n_tx": [8, 16, 24, 32, 48, 64]},
    Target.FIG7A: {"waveforms_per_segment": [8, 16, 32, 64]},
    Target.FIG7B: {"waveforms_per_segment": [8, 16, 32, 64]},
    Target.TABLE1: {"config": ["chain", "grid"]},
}

# Table 1 problems: chains solved with the exact 1D algorithm, grids with red-rec.
TABLE1_CONFIGS = {
    "chain": {"n_tx": 64, "n_ty": 1, "n_target": 32},
    "grid": {"n_tx": 32, "n_ty": 64, "n_target": 1024},
}


class SweepError(ValueError):
    pass


@dataclass
class SweepSpec:
    target: Target | str
    grid: dict | None = None
    trials: int = 1000
    seed: int = 0
    epsilon: float = 0.6
    options: dict = field(default_factory=dict)

    def __post_init__(self):
        try:
            self.target = Target(str(self.target).lower())
        except ValueError:
            raise SweepError(f"unknown sweep target {self.target!r}") from None
        if self.grid is None:
            self.grid = {k: list(v) for k, v in DEFAULT_GRIDS[self.target].items()}
        if not self.grid or any(len(v) == 0 for v in self.grid.values()):
            raise SweepError("parameter grid is empty")
        if self.trials < 1:
            raise SweepError("trials must be at least 1")


def summarize(samples, warmup: float = 0.1) -> dict:
    """Median, mean and std in microseconds after dropping the warmup share."""
    x = np.asarray(samples, dtype=float)
    x = x[int(len(x) * warmup):] if len(x) > 1 else x
    return {"median_us": float(np.median(x)), "mean_us": float(x.mean()),
            "std_us": float(x.std()), "trials": len(x)}


def _points(grid: dict):
    keys = list(grid)
    for combo in np.ndindex(*(len(grid[k]) for k in keys)):
        yield {k: grid[k][i] for k, i in zip(keys, combo)}


def _square_grid(n_traps: int, margin: int = 16, image: int = 1024) -> TrapArray:
    side = int(round(math.sqrt(n_traps)))
    if side * side != n_traps:
        raise SweepError(f"n_traps={n_traps} is not a perfect square")
    pitch = min(8.0, (image - 2 * margin) / max(side - 1, 1))
    return TrapArray.grid(side, side, pitch=math.floor(pitch))


# -- device sweeps ------------------------------------------------------------

def _acq_row(spec: SweepSpec, roi: camera.RoiSpec) -> dict:
    o = spec.options
    acq = camera.acquisition_time(camera.SensorSpec(), roi, o.get("exposure_ms", camera.DEFAULT_EXPOSURE_MS),
                                  o.get("path", "cpu"))
    row = {"roi_height": roi.height, "roi_width": roi.width, "v_bin": roi.v_bin, "h_bin": roi.h_bin}
    row.update(acq.as_row())
    row["total_minus_exposure_us"] = acq.total - acq.exposure
    return row


def _sweep_camera(spec: SweepSpec):
    for p in _points(spec.grid):
        yield _acq_row(spec, camera.RoiSpec(**p))


def _sweep_fig7a(spec: SweepSpec):
    n = spec.options.get("n_waveforms", 256)
    for p in _points(spec.grid):
        cfg = awg_mod.AwgConfig(**p)
        res = awg_mod.run_streaming_script(awg_mod.AwgState(cfg, spec.seed), n)
        k = cfg.waveforms_per_segment
        yield {
            "waveforms_per_segment": k,
            "upload_us": cfg.upload_ns(k) / awg_mod.NS_PER_US,
            "stream_us": k * cfg.waveform_us,
            "underrun": int(res.underrun),
            "makespan_us": res.makespan / awg_mod.NS_PER_US,
            "n_waveforms": n,
        }


def _sweep_fig7b(spec: SweepSpec):
    n = spec.options.get("n_waveforms", 256)
    jitter = spec.options.get("jitter", awg_mod.JitterModel())
    for p in _points(spec.grid):
        cfg = awg_mod.AwgConfig(jitter=jitter, **p)
        prob = awg_mod.underrun_probability(cfg, spec.trials, n, spec.seed)
        yield {"waveforms_per_segment": cfg.waveforms_per_segment, "p_underrun": prob,
               "trials": spec.trials, "n_waveforms": n}


# -- wall-clock sweeps ----------------------------------------------------------

def _sweep_fig5(spec: SweepSpec):
    rng = make_rng(spec.seed)
    noise = camera.NoiseSpec()
    for p in _points(spec.grid):
        traps = _square_grid(int(p["n_traps"]))
        side = int(p["box_side"])
        psf = imaging.PsfSpec(camera.gaussian_kernel(side, max(side / 5, 0.5)))
        state = rng.random(traps.n_traps) < 0.5
        img = camera.render_image(traps, state, psf.weights, noise, int(rng.integers(2**32)))
        offsets = imaging.box_offsets(traps, side, img.counts.shape)
        ts = []
        for _ in range(spec.trials):
            t = time.perf_counter()
            imaging.extract_intensities(img, traps, psf, offsets)
            ts.append((time.perf_counter() - t) * 1e6)
        yield {"n_traps": traps.n_traps, "box_side": side, **summarize(ts)}


def _n_ty(n_tx: int, rule: str) -> int:
    if rule == "double":
        return 2 * n_tx
    if rule == "fill":
        return math.ceil(n_tx / 0.6)
    raise SweepError(f"unknown row rule {rule!r}")


def _sweep_fig6a(spec: SweepSpec):
    rule = spec.options.get("rows", "fill")
    for p in _points(spec.grid):
        n = int(p["n_tx"])
        traps = TrapArray.grid(n, _n_ty(n, rule))
        rng = make_rng(spec.seed + n)
        insts = [sample_instance(traps, spec.epsilon, n * n, int(rng.integers(2**32))) for _ in range(spec.trials)]
        t_solve, t_batch, n_moves, n_batches = [], [], [], []
        gc.disable()
        try:
            for inst in insts:
                t = time.perf_counter()
                sol = solve(inst, batched=False)
                t1 = time.perf_counter()
                bsol = batch_ops(sol, traps.n_tx)
                t_solve.append((t1 - t) * 1e6)
                t_batch.append((time.perf_counter() - t1) * 1e6)
                n_moves.append(len(sol.moves))
                n_batches.append(len(bsol.batches))
        finally:
            gc.enable()
        s = summarize(t_solve)
        b = summarize(t_batch)
        yield {"n_tx": n, "n_ty": traps.n_ty, "epsilon": spec.epsilon, "algorithm": "redrec", "batched": 0,
               **s, "batch_median_us": b["median_us"], "mean_moves": float(np.mean(n_moves)),
               "mean_batches": float(np.mean(n_batches)),
               "solvable_frac": float(np.mean([i.solvable for i in insts]))}


def _sweep_table1(spec: SweepSpec):
    from .pipeline import Devices, latency_report, run_cycle

    for p in _points(spec.grid):
        name = p["config"]
        c = TABLE1_CONFIGS[name]
        traps = TrapArray.chain(c["n_tx"]) if c["n_ty"] == 1 else TrapArray.grid(c["n_tx"], c["n_ty"])
        dev = Devices.build(traps, seed=spec.seed)
        target = target_center_compact(traps, c["n_target"])
        rng = make_rng(spec.seed)
        ledgers = []
        for _ in range(spec.trials):
            state = rng.random(traps.n_traps) < spec.epsilon
            ledgers.append(run_cycle(state, target, dev, seed=int(rng.integers(2**32))).ledger)
        for row in latency_report(ledgers):
            yield {"config": name, **row}


_RUNNERS = {
    Target.FIG4A: _sweep_camera,
    Target.FIG4B: _sweep_camera,
    Target.FIG4D: _sweep_camera,
    Target.FIG5A: _sweep_fig5,
    Target.FIG5B: _sweep_fig5,
    Target.FIG6A: _sweep_fig6a,
    Target.FIG7A: _sweep_fig7a,
    Target.FIG7B: _sweep_fig7b,
    Target.TABLE1: _sweep_table1,
}


def run_sweep(spec: SweepSpec) -> list[dict]:
    return list(_RUNNERS[spec.target](spec))


def write_csv(rows: list[dict], path) -> None:
    if not rows:
        raise SweepError("no rows to write")
    with open(path, "w", newline="") as f:
        w = csv.DictWriter(f, fieldnames=list(rows[0]), lineterminator="\n")
        w.writeheader()
        w.writerows(rows)


# -- fits -------------------------------------------------------------------------

class FitModel(str, enum.Enum):
    AFFINE = "affine"  # y = a + b x
    POWER_LAW = "power_law"  # y = a x^b


@dataclass(frozen=True)
class FitResult:
    model: FitModel
    coefficients: tuple[float, float]  # (a, b)
    r_squared: float
    slope: float | None = None  # log-log slope for power laws


def fit_scaling(x, y, model: FitModel | str = FitModel.POWER_LAW) -> FitResult:
    """Least squares in log-log space (power law) or linear space (affine)."""
    model = FitModel(model)
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if len(x) < 3 or len(x) != len(y):
        raise ValueError("need at least three (x, y) points")
    if np.ptp(x) == 0:
        raise ValueError("degenerate x range")
    if model is FitModel.POWER_LAW:
        if np.any(x <= 0) or np.any(y <= 0):
            raise ValueError("power-law fit needs positive data")
        u, v = np.log(x), np.log(y)
    else:
        u, v = x, y
    b, a = np.polyfit(u, v, 1)
    resid = v - (a + b * u)
    ss_tot = float(((v - v.mean()) ** 2).sum())
    r2 = 1.0 if ss_tot == 0 else float(np.clip(1 - (resid**2).sum() / ss_tot, 0.0, 1.0))
    if model is FitModel.POWER_LAW:
        return FitResult(model, (float(np.exp(a)), float(b)), r2, float(b))
    return FitResult(model, (float(a), float(b)), r2)


def fit_rows(rows: list[dict], x: str, y: str = "median_us", model: FitModel | str = FitModel.POWER_LAW) -> FitResult:
    return fit_scaling([r[x] for r in rows], [r[y] for r in rows], model)
