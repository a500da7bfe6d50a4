"""Closed-loop reconfiguration cycles on the simulated devices.

One cycle: acquire an image, extract the occupation, solve, batch, look
up the waveforms and stream them through the AWG, then move the real
atoms with the per-move loss model.  Compute phases (image processing,
solving, batching) are timed on the host clock unless fixed costs are
supplied; device phases come from the camera and AWG models.
"""

from __future__ import annotations

import csv
import time
from dataclasses import dataclass, field

import numpy as np

from . import awg as awg_mod
from . import camera, imaging
from .core import (Kind, ProblemInstance, TrapArray, _apply_inplace, _as_bool, _as_bytes,
                   make_rng, reached_target)
from .solver import batch_ops, solve, unbatched
from .waveform import LookupTable, TransitionSpec


@dataclass(frozen=True)
class LossModel:
    p_nu: float = 1.0  # survival per displacement move
    p_alpha: float = 1.0  # survival per extract/implant move
    lose_extracted_on_underrun: bool = True

    def __post_init__(self):
        if not (0 <= self.p_nu <= 1 and 0 <= self.p_alpha <= 1):
            raise ValueError("survival probabilities must lie in [0, 1]")


LEDGER_FIELDS = (
    "exposure", "frame_transfer", "readout", "transfer", "image_proc", "solve", "batch",
    "lookup", "first_uploads", "seq_updates", "release_wait", "streaming",
)


@dataclass
class TimingLedger:
    """Serial durations of one cycle in microseconds.

    Uploads after the first two segments overlap the stream and add
    nothing here.  ``release_wait`` is the time between the idle pointer
    update landing and idle finishing its current playback.
    """

    exposure: float = 0.0
    frame_transfer: float = 0.0
    readout: float = 0.0
    transfer: float = 0.0
    image_proc: float = 0.0
    solve: float = 0.0
    batch: float = 0.0
    lookup: float = 0.0
    first_uploads: float = 0.0
    seq_updates: float = 0.0
    release_wait: float = 0.0
    streaming: float = 0.0

    @property
    def total(self) -> float:
        return sum(getattr(self, f) for f in LEDGER_FIELDS)

    @property
    def pre_stream(self) -> float:
        """Minimum latency from lookup start to the first streamed sample."""
        return self.lookup + self.first_uploads + self.seq_updates


@dataclass
class CycleOutcome:
    reached_target: bool
    solvable: bool
    atoms_lost: int
    ledger: TimingLedger
    underrun: bool
    n_batches: int = 0
    n_moves: int = 0
    state: np.ndarray | None = field(default=None, repr=False)
    misread: int = 0  # traps whose measured occupation differs from the truth


@dataclass
class Devices:
    traps: TrapArray
    table: LookupTable
    awg: awg_mod.AwgState
    psf: imaging.PsfSpec
    threshold: imaging.Threshold
    sensor: camera.SensorSpec = camera.SensorSpec()
    roi: camera.RoiSpec = camera.RoiSpec()
    noise: camera.NoiseSpec = camera.NoiseSpec()
    exposure_ms: float = camera.DEFAULT_EXPOSURE_MS
    path: str = "cpu"
    batched: bool = True
    fixed_costs: dict | None = None  # {"image_proc", "solve", "batch"} in us
    _offsets: np.ndarray | None = field(default=None, repr=False)

    @classmethod
    def build(cls, traps: TrapArray, awg_config: awg_mod.AwgConfig | None = None,
              box_side: int = 5, psf_sigma: float = 1.0, noise: camera.NoiseSpec | None = None,
              transition: TransitionSpec = TransitionSpec(), seed: int = 0, **kw) -> "Devices":
        noise = noise or camera.NoiseSpec()
        kernel = camera.gaussian_kernel(box_side, psf_sigma)
        psf = imaging.PsfSpec(kernel)
        cfg = awg_config or awg_mod.AwgConfig(channels=1 if traps.n_ty == 1 else 2)
        table = LookupTable(traps, transition, T=cfg.waveform_us * 1e-6, f_s=cfg.f_sample)
        threshold = calibrate_for(traps, psf, noise, seed)
        return cls(traps, table, awg_mod.AwgState(cfg, seed), psf, threshold, noise=noise, **kw)

    def offsets(self) -> np.ndarray:
        if self._offsets is None:
            self._offsets = imaging.box_offsets(self.traps, self.psf.box_side, self.traps.image_shape)
        return self._offsets


def calibrate_for(traps: TrapArray, psf: imaging.PsfSpec, noise: camera.NoiseSpec, seed: int = 0,
                  n_frames: int = 2) -> imaging.Threshold:
    """Labeled calibration on rendered half-filled frames."""
    rng = make_rng(seed)
    xs, ys = [], []
    for _ in range(n_frames):
        truth = rng.random(traps.n_traps) < 0.5
        img = camera.render_image(traps, truth, psf.weights, noise, int(rng.integers(2**32)))
        xs.append(imaging.extract_intensities(img, traps, psf))
        ys.append(truth)
    return imaging.calibrate_threshold(np.concatenate(xs), np.concatenate(ys))


def _timed(fn, *args):
    t = time.perf_counter()
    out = fn(*args)
    return out, (time.perf_counter() - t) * 1e6


def _apply_lossy(occ: bytearray, held: bytearray, move, n_tx: int, loss: LossModel, rng) -> None:
    _apply_inplace(occ, held, move, n_tx, strict=False)
    kind, axis, line, lo, hi = move
    if kind <= Kind.DISPLACE_BACKWARD:
        p = loss.p_nu
        d = 1 if kind == Kind.DISPLACE_FORWARD else -1
        lo, hi = lo + d, hi + d
    else:
        p = loss.p_alpha
    if p >= 1.0:
        return
    if axis == 0:
        idx = range(line * n_tx + lo, line * n_tx + hi + 1)
    else:
        idx = range(lo * n_tx + line, hi * n_tx + line + 1, n_tx)
    for i in idx:
        if occ[i] and rng.random() >= p:
            occ[i] = held[i] = 0


def run_cycle(state, target, devices: Devices, loss: LossModel = LossModel(), seed: int | None = None) -> CycleOutcome:
    """One reconfiguration cycle starting from the true occupation ``state``."""
    rng = make_rng(seed)
    traps = devices.traps
    state = np.asarray(state, dtype=bool).ravel()
    target = np.asarray(target, dtype=bool).ravel()
    fixed = devices.fixed_costs or {}
    acq = camera.acquisition_time(devices.sensor, devices.roi, devices.exposure_ms, devices.path)
    ledger = TimingLedger(acq.exposure, acq.frame_transfer, acq.readout, acq.transfer)

    img = camera.render_image(traps, state, devices.psf.weights, devices.noise, int(rng.integers(2**32)))
    offsets = devices.offsets()
    measured, dt = _timed(lambda: imaging.classify(
        imaging.extract_intensities(img, traps, devices.psf, offsets), devices.threshold))
    ledger.image_proc = fixed.get("image_proc", dt)
    misread = int(np.count_nonzero(measured != state))

    instance = ProblemInstance(traps, measured, target)
    sol, dt = _timed(solve, instance, False)
    ledger.solve = fixed.get("solve", dt)
    if devices.batched:
        sol, dt = _timed(batch_ops, sol, traps.n_tx)
        ledger.batch = fixed.get("batch", dt)
        batches = sol.batches
    else:
        batches = unbatched(sol)
    n_batches = len(batches)

    dev = devices.awg
    cfg = dev.config
    underrun = False
    if n_batches:
        for b in batches:
            devices.table.lookup(b)  # raises on a table miss
        ledger.lookup = devices.table.lookup_cost(min(n_batches, 2 * cfg.waveforms_per_segment))
        t0 = dev.time + awg_mod.ns(ledger.total)
        res = awg_mod.run_streaming_script(dev, n_batches, t0)
        underrun = res.underrun
        ledger.first_uploads = res.first_uploads / awg_mod.NS_PER_US
        ledger.seq_updates = res.seq_updates / awg_mod.NS_PER_US
        ledger.release_wait = res.release_wait / awg_mod.NS_PER_US
        if res.t_first_sample is not None:
            end = next((e.time for e in res.events if e.kind is awg_mod.EventKind.IDLE_RESTORED),
                       res.t_first_sample + res.played_waveforms * cfg.waveform_ns)
            ledger.streaming = (end - res.t_first_sample) / awg_mod.NS_PER_US
        n_exec = res.played_waveforms
        awg_mod.reset(dev, dev.time)
    else:
        n_exec = 0

    occ = _as_bytes(state)
    held = bytearray(len(occ))
    for b in batches[:n_exec]:
        for m in b:
            _apply_lossy(occ, held, m, traps.n_tx, loss, rng)
    if underrun and loss.lose_extracted_on_underrun:
        for i, h in enumerate(held):
            if h:
                occ[i] = held[i] = 0
    final = _as_bool(occ)
    lost = int(state.sum() - final.sum())
    ok = reached_target(final, target)
    return CycleOutcome(ok and instance.solvable, instance.solvable, lost, ledger, underrun,
                        n_batches, len(sol.moves), final, misread)


def run_until_solved(instance: ProblemInstance, devices: Devices, loss: LossModel = LossModel(),
                     max_cycles: int = 10, seed: int | None = None):
    """Repeat cycles until the target is reached, it becomes unreachable,
    or ``max_cycles`` is exhausted.  Returns ``(final_state, outcomes)``."""
    if max_cycles < 1:
        raise ValueError("max_cycles must be at least 1")
    ss = np.random.SeedSequence(seed)
    state = np.asarray(instance.initial, dtype=bool)
    outcomes: list[CycleOutcome] = []
    for child in ss.spawn(max_cycles):
        out = run_cycle(state, instance.target, devices, loss, int(child.generate_state(1)[0]))
        outcomes.append(out)
        state = out.state
        if out.reached_target or not out.solvable or state.sum() < instance.n_target:
            break
    return state, outcomes


def latency_report(ledgers) -> list[dict]:
    """Mean and standard deviation per ledger phase, plus the total."""
    ledgers = list(ledgers)
    if not ledgers:
        raise ValueError("need at least one ledger")
    rows = []
    for name in LEDGER_FIELDS + ("total",):
        v = np.array([getattr(l, name) for l in ledgers], dtype=float)
        rows.append({"phase": name, "mean_us": float(v.mean()), "std_us": float(v.std()), "runs": len(v)})
    return rows


def write_report(rows, path) -> None:
    with open(path, "w", newline="") as f:
        w = csv.DictWriter(f, fieldnames=list(rows[0]))
        w.writeheader()
        w.writerows(rows)


# -- config-driven runs ---------------------------------------------------------

DEFAULT_RUN_CONFIG = {
    "traps": {"geometry": "grid", "n_tx": 16, "n_ty": 32},
    "epsilon": 0.6,
    "n_target": 256,
    "camera": {"exposure_ms": camera.DEFAULT_EXPOSURE_MS, "path": "cpu", "roi": {}},
    "noise": {},
    "psf": {"box_side": 5, "sigma": 1.0},
    "threshold": None,
    "algorithm": {"batched": True},
    "waveform": {"shape": "erf", "param": None},
    "awg": {"jitter": None},
    "loss": {"p_nu": 1.0, "p_alpha": 1.0},
    "seeds": {"instance": 0, "jitter": 0, "loss": 0},
    "trials": 1,
    "max_cycles": 10,
}


def _merged(cfg: dict) -> dict:
    out = {k: (dict(v) if isinstance(v, dict) else v) for k, v in DEFAULT_RUN_CONFIG.items()}
    for k, v in cfg.items():
        if k not in out:
            raise ValueError(f"unknown run config key {k!r}")
        out[k] = {**out[k], **v} if isinstance(out[k], dict) and isinstance(v, dict) else v
    return out


def traps_from_config(t: dict) -> TrapArray:
    kw = {k: v for k, v in t.items() if k not in ("geometry", "n_tx", "n_ty", "n")}
    if t.get("geometry", "grid") == "chain":
        return TrapArray.chain(int(t.get("n", t.get("n_tx"))), **kw)
    return TrapArray.grid(int(t["n_tx"]), int(t["n_ty"]), **kw)


def devices_from_config(cfg: dict) -> Devices:
    cfg = _merged(cfg)
    traps = traps_from_config(cfg["traps"])
    a = dict(cfg["awg"])
    jit = a.pop("jitter", None)
    if jit is not None:
        a["jitter"] = awg_mod.JitterModel(**jit)
    a.setdefault("channels", 1 if traps.n_ty == 1 else 2)
    cam = cfg["camera"]
    dev = Devices.build(
        traps, awg_mod.AwgConfig(**a), box_side=cfg["psf"]["box_side"], psf_sigma=cfg["psf"]["sigma"],
        noise=camera.NoiseSpec(**cfg["noise"]), transition=TransitionSpec(**cfg["waveform"]),
        seed=cfg["seeds"]["jitter"], roi=camera.RoiSpec(**cam.get("roi", {})),
        exposure_ms=cam.get("exposure_ms", camera.DEFAULT_EXPOSURE_MS), path=cam.get("path", "cpu"),
        batched=cfg["algorithm"].get("batched", True), fixed_costs=cfg["algorithm"].get("fixed_costs"),
    )
    if cfg["threshold"] is not None:
        dev.threshold = imaging.Threshold(float(cfg["threshold"]))
    return dev


def run_from_config(cfg: dict):
    """Run ``trials`` independent instances.  Returns (outcome rows, ledgers)."""
    from .core import sample_instance

    cfg = _merged(cfg)
    dev = devices_from_config(cfg)
    loss = LossModel(**cfg["loss"])
    seeds = cfg["seeds"]
    inst_seeds = np.random.SeedSequence(seeds["instance"]).generate_state(cfg["trials"])
    loss_seeds = np.random.SeedSequence(seeds["loss"]).generate_state(cfg["trials"])
    rows, ledgers = [], []
    for i in range(cfg["trials"]):
        inst = sample_instance(dev.traps, cfg["epsilon"], cfg["n_target"], int(inst_seeds[i]))
        final, outs = run_until_solved(inst, dev, loss, cfg["max_cycles"], int(loss_seeds[i]))
        ledgers.extend(o.ledger for o in outs)
        rows.append({
            "trial": i, "cycles": len(outs), "reached_target": int(outs[-1].reached_target),
            "solvable": int(outs[-1].solvable), "atoms_initial": int(np.count_nonzero(inst.initial)),
            "atoms_final": int(np.count_nonzero(final)), "underruns": sum(o.underrun for o in outs),
            "latency_us": sum(o.ledger.total for o in outs),
        })
    return rows, ledgers
