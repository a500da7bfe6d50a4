"""RF waveform synthesis for the AOD tones and the precomputed lookup table.

A dynamic tone sweeps ``nu_from -> nu_to`` over ``[0, T]`` with the
instantaneous frequency ``nu_from + dnu * s(t/T)`` where ``s`` is a smooth
step (0 -> 1) whose first two derivatives vanish at both ends.  The phase
is integrated in closed form, so no numerical drift accumulates.  To make
the waveform end on the phase the next one starts with, a small
zero-endpoint frequency bump ``30 u^2 (1-u)^2`` is added; it carries the
fractional number of cycles the plain sweep would leave over.

Samples are normalized to a peak of 1 and quantized to signed 16 bit.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.special import erf

from .core import Axis, Geometry, Kind, LLRSError, Move, TrapArray

DEFAULT_T = 10e-6
DEFAULT_FS = 624e6
LOOKUP_US = 0.21
INT16_PEAK = 32767
DEFAULT_MEMORY_BUDGET = 2**32
CLOSURE_TOL = 1e-2  # rad


class WaveformError(LLRSError):
    pass


class NormalizationError(WaveformError):
    """All tones cancel; the waveform cannot be scaled to unit peak."""


class PhaseClosureError(WaveformError):
    def __init__(self, residual: float):
        super().__init__(f"phase closure residual {residual:.3g} rad")
        self.residual = residual


class TableMissError(WaveformError):
    pass


class TableSizeError(WaveformError):
    def __init__(self, required: int, budget: int):
        super().__init__(f"lookup table needs {required} bytes, budget is {budget}")
        self.required = required
        self.budget = budget


class WaveKind(str, enum.Enum):
    STATIC = "static"
    DISPLACE = "displace"
    EXTRACT = "extract"
    IMPLANT = "implant"


class Shape(str, enum.Enum):
    TANH = "tanh"
    CUBIC_SPLINE = "cubic_spline"
    ERF = "erf"


@dataclass(frozen=True)
class Tone:
    alpha: float = 1.0
    nu: float = 100e6
    phi: float = 0.0

    def __post_init__(self):
        if not 0 <= self.alpha <= 1:
            raise ValueError("tone amplitude must lie in [0, 1]")


@dataclass(frozen=True)
class TransitionSpec:
    shape: Shape = Shape.ERF
    # Erf/Tanh: steepness k of s(u) ~ f(k (2u - 1)); CubicSpline: knot a.
    param: float | None = None

    @property
    def k(self) -> float:
        if self.param is not None:
            return float(self.param)
        return {Shape.ERF: 6.5, Shape.TANH: 12.0, Shape.CUBIC_SPLINE: 0.25}[Shape(self.shape)]


def _spline_coeff(a: float) -> float:
    d = 0.5 - a
    return 1.0 / (2.0 * (a**3 + 3 * a**2 * d + 2 * a * d**2))


def step(u, spec: TransitionSpec = TransitionSpec()) -> np.ndarray:
    """Smooth step s(u) with s(0)=0, s(1)=1, s(1-u) = 1-s(u)."""
    u = np.asarray(u, dtype=float)
    k = spec.k
    shape = Shape(spec.shape)
    if shape is Shape.ERF:
        return 0.5 + 0.5 * erf(k * (2 * u - 1)) / erf(k)
    if shape is Shape.TANH:
        return 0.5 + 0.5 * np.tanh(k * (2 * u - 1)) / np.tanh(k)
    # C2 piecewise cubic: c u^3 on [0, a], odd cubic about 1/2 in the middle
    a, c = k, _spline_coeff(k)
    v = u - 0.5
    d = 0.5 - a
    slope = 3 * c * a**2  # s'(a)
    curv = 6 * c * a  # s''(a); the middle piece is 1/2 + m v - q v^3
    q = curv / (6 * d)
    m = slope + 3 * q * d**2
    mid = 0.5 + m * v - q * v**3
    lo = c * u**3
    hi = 1 - c * (1 - u) ** 3
    return np.where(u < a, lo, np.where(u > 1 - a, hi, mid))


def step_integral(u, spec: TransitionSpec = TransitionSpec()) -> np.ndarray:
    """S(u) = integral of s from 0 to u (closed form)."""
    u = np.asarray(u, dtype=float)
    k = spec.k
    shape = Shape(spec.shape)
    x = 2 * u - 1
    if shape is Shape.ERF:
        prim = lambda x: x * erf(k * x) + np.exp(-((k * x) ** 2)) / (k * np.sqrt(np.pi))
        return 0.5 * u + (prim(x) - prim(-1.0)) / (4 * erf(k))
    if shape is Shape.TANH:
        # log cosh written to stay finite for large arguments
        lc = lambda z: np.abs(z) + np.log1p(np.exp(-2 * np.abs(z))) - np.log(2)
        return 0.5 * u + (lc(k * x) - lc(k)) / (4 * k * np.tanh(k))
    a, c = k, _spline_coeff(k)
    d = 0.5 - a
    q = (6 * c * a) / (6 * d)
    m = 3 * c * a**2 + 3 * q * d**2
    first = lambda w: c * w**4 / 4
    mid_prim = lambda v: 0.5 * v + m * v**2 / 2 - q * v**4 / 4

    def left(w):  # S on [0, 1/2]
        w = np.minimum(w, 0.5)
        inner = first(np.minimum(w, a))
        return inner + np.where(w > a, mid_prim(w - 0.5) - mid_prim(a - 0.5), 0.0)

    # symmetry s(1-u) = 1 - s(u) gives S(u) = u - 1/2 + S(1-u) past the middle
    return np.where(u <= 0.5, left(u), u - 0.5 + left(1 - u))


def _bump_integral(u):
    return u**3 * (10 - 15 * u + 6 * u**2)


def _bump(u):
    return 30 * u**2 * (1 - u) ** 2


def _wrap(x):
    return (np.asarray(x) + np.pi) % (2 * np.pi) - np.pi


@dataclass
class Track:
    """Amplitude and phase of one tone on the closed grid ``t = k/f_s``,
    ``k = 0..N``; the streamed waveform uses the first ``N`` samples."""

    alpha: np.ndarray
    phase: np.ndarray
    phase_end: float  # analytic phase at t = T
    residual: float  # closure error against the next waveform's start phase


def tone_track(tone_from: Tone, tone_to: Tone, spec: TransitionSpec, T: float, f_s: float,
               alpha_profile: str = "sweep") -> Track:
    n = _n_samples(T, f_s)
    u = np.arange(n + 1) / n
    s = step(u, spec)
    if alpha_profile == "up":
        alpha = tone_to.alpha * s
    elif alpha_profile == "down":
        alpha = tone_from.alpha * (1 - s)
    else:
        alpha = tone_from.alpha + (tone_to.alpha - tone_from.alpha) * s

    dnu_T = (tone_to.nu - tone_from.nu) * T
    base_end = tone_from.nu * T + 0.5 * dnu_T  # cycles elapsed by t = T
    want = (tone_to.phi - tone_from.phi) / (2 * np.pi)
    c = 0.0
    if dnu_T != 0:
        frac = base_end - want
        c = (np.round(frac) - frac) / dnu_T
    cycles = tone_from.nu * T * u + dnu_T * step_integral(u, spec) + c * dnu_T * _bump_integral(u)
    phase = tone_from.phi + 2 * np.pi * cycles
    phase_end = tone_from.phi + 2 * np.pi * (base_end + c * dnu_T)
    residual = float(abs(_wrap(phase_end - tone_to.phi)))
    return Track(alpha, phase, phase_end, residual)


def _n_samples(T: float, f_s: float) -> int:
    n = T * f_s
    if abs(n - round(n)) > 1e-6 or round(n) < 1:
        raise WaveformError(f"T*f_s = {n} is not a positive integer")
    return int(round(n))


def quantize(y: np.ndarray) -> np.ndarray:
    """Normalize to unit peak and round half away from zero to int16."""
    peak = np.max(np.abs(y)) if y.size else 0.0
    if not peak > 1e-12:
        raise NormalizationError("waveform is identically zero")
    z = y / peak * INT16_PEAK
    return (np.sign(z) * np.floor(np.abs(z) + 0.5)).astype(np.int16)


def interleave(channels: Sequence[np.ndarray]) -> np.ndarray:
    """``out[n*C + c] = channels[c][n]``."""
    if len(channels) == 0:
        raise ValueError("need at least one channel")
    n = len(channels[0])
    if any(len(ch) != n for ch in channels):
        raise ValueError("channels must have equal length")
    return np.stack(channels, axis=1).reshape(-1)


def deinterleave(buf: np.ndarray, n_channels: int) -> list[np.ndarray]:
    return [buf[c::n_channels] for c in range(n_channels)]


@dataclass
class Waveform:
    samples: np.ndarray  # int16, interleaved across channels
    t_duration: float
    f_sample: float
    channels: int = 1
    kind: WaveKind = WaveKind.STATIC
    tracks: list[Track] = field(default_factory=list, repr=False)

    @property
    def n_samples(self) -> int:
        return len(self.samples) // self.channels

    @property
    def nbytes(self) -> int:
        return self.samples.nbytes

    def channel(self, c: int) -> np.ndarray:
        return self.samples[c::self.channels]


def endpoint_derivatives(x: np.ndarray, dt: float) -> tuple[float, float, float, float]:
    """One-sided first and second derivatives at both ends of ``x``.

    Four-point stencils, exact for cubics.  Returns
    ``(d1_start, d2_start, d1_end, d2_end)``.
    """
    a, b = x[:4], x[-4:][::-1]
    d1 = lambda f: (-11 * f[0] + 18 * f[1] - 9 * f[2] + 2 * f[3]) / (6 * dt)
    d2 = lambda f: (2 * f[0] - 5 * f[1] + 4 * f[2] - f[3]) / dt**2
    return d1(a), d2(a), -d1(b), d2(b)


def _check_closure(tracks: Sequence[Track], tol: float = CLOSURE_TOL) -> None:
    worst = max((t.residual for t in tracks), default=0.0)
    if worst > tol:
        raise PhaseClosureError(worst)


def _render(tracks: Sequence[Track]) -> np.ndarray:
    n = len(tracks[0].phase) - 1
    y = np.zeros(n)
    for tr in tracks:
        y += tr.alpha[:n] * np.sin(tr.phase[:n])
    return y


def synth_static(tones: Sequence[Tone], T: float = DEFAULT_T, f_s: float = DEFAULT_FS) -> Waveform:
    if len(tones) == 0:
        raise WaveformError("static waveform needs at least one tone")
    tracks = [tone_track(t, t, TransitionSpec(), T, f_s) for t in tones]
    return Waveform(quantize(_render(tracks)), T, f_s, 1, WaveKind.STATIC, tracks)


def synth_displace(tone_from: Tone, tone_to: Tone, spec: TransitionSpec = TransitionSpec(),
                   T: float = DEFAULT_T, f_s: float = DEFAULT_FS, check: bool = True) -> Waveform:
    return synth_sweeps([(tone_from, tone_to)], spec, T, f_s, check)


def synth_sweeps(pairs: Sequence[tuple[Tone, Tone]], spec: TransitionSpec = TransitionSpec(),
                 T: float = DEFAULT_T, f_s: float = DEFAULT_FS, check: bool = True) -> Waveform:
    """Normalized sum of several simultaneous sweeps (one channel)."""
    if len(pairs) == 0:
        raise WaveformError("need at least one tone")
    tracks = [tone_track(a, b, spec, T, f_s) for a, b in pairs]
    if check:
        _check_closure(tracks)
    kind = WaveKind.STATIC if all(a.nu == b.nu for a, b in pairs) else WaveKind.DISPLACE
    return Waveform(quantize(_render(tracks)), T, f_s, 1, kind, tracks)


def synth_transfer(tone: Tone | Sequence[Tone], direction: WaveKind | str, spec: TransitionSpec = TransitionSpec(),
                   T: float = DEFAULT_T, f_s: float = DEFAULT_FS) -> Waveform:
    """Amplitude ramp 0 -> alpha (extract) or alpha -> 0 (implant) at fixed frequency."""
    direction = WaveKind(direction)
    if direction not in (WaveKind.EXTRACT, WaveKind.IMPLANT):
        raise ValueError("direction must be extract or implant")
    tones = [tone] if isinstance(tone, Tone) else list(tone)
    profile = "up" if direction is WaveKind.EXTRACT else "down"
    tracks = [tone_track(t, t, spec, T, f_s, alpha_profile=profile) for t in tones]
    return Waveform(quantize(_render(tracks)), T, f_s, 1, direction, tracks)


def _stack(waves: Sequence[Waveform], kind: WaveKind) -> Waveform:
    w0 = waves[0]
    return Waveform(interleave([w.samples for w in waves]), w0.t_duration, w0.f_sample,
                    len(waves), kind, [t for w in waves for t in w.tracks])


# -- lookup table -----------------------------------------------------------

def block_index(lo: int, hi: int, m: int) -> int:
    """Rank of block ``[lo, hi]`` among all blocks of ``m`` sites (by lo, then hi)."""
    return lo * m - lo * (lo - 1) // 2 + (hi - lo)


def _n_blocks(m: int) -> int:
    return m * (m + 1) // 2


@dataclass(frozen=True)
class TableKey:
    kind: Kind
    axis: Axis
    line: int
    lo: int
    hi: int

    @classmethod
    def of(cls, move: Move) -> "TableKey":
        return cls(Kind(move.kind), Axis(move.axis), move.line, move.lo, move.hi)


class LookupTable:
    """Index-addressed store of elementary waveforms.

    Entries are synthesized on first access and cached; :attr:`nbytes`
    reports the size the fully materialized buffer would occupy.

    Chains hold one block-displacement entry per forward block ending
    before the last trap and per backward block starting after the first,
    ``N(N-1)`` in total.  Grids hold ``N_tx N_ty (N_ty-1)`` column
    displacements, ``2 N_ty (N_tx-1)`` single-site row displacements and
    ``N_ty (N_ty-1)`` column-independent transfer entries (extract and
    implant blocks within rows ``0..N_ty-2``).  The static waveform of
    the full trap array is kept separately.
    """

    def __init__(self, traps: TrapArray, spec: TransitionSpec = TransitionSpec(), T: float = DEFAULT_T,
                 f_s: float = DEFAULT_FS, memory_budget: int = DEFAULT_MEMORY_BUDGET,
                 lookup_us: float = LOOKUP_US):
        self.traps = traps
        self.spec = spec
        self.T = T
        self.f_s = f_s
        self.lookup_us = lookup_us
        self.samples_per_entry = _n_samples(T, f_s)
        self.is_chain = traps.geometry is Geometry.CHAIN
        self.channels = 1 if self.is_chain else 2
        nx, ny = traps.n_tx, traps.n_ty
        if self.is_chain:
            self.counts = {"displace": nx * (nx - 1)}
        else:
            self.counts = {
                "column": nx * ny * (ny - 1),
                "row": 2 * ny * (nx - 1),
                "transfer": ny * (ny - 1),
            }
        self.n_entries = sum(self.counts.values())
        self.nbytes = self.n_entries * self.samples_per_entry * self.channels * 2
        if self.nbytes > memory_budget:
            raise TableSizeError(self.nbytes, memory_budget)
        self._cache: dict[int, Waveform] = {}
        self._static: Waveform | None = None

    def __len__(self):
        return self.n_entries

    # index arithmetic -----------------------------------------------------

    def _line_index(self, kind: Kind, lo: int, hi: int, n: int) -> int | None:
        m = n - 1
        if kind == Kind.DISPLACE_FORWARD and 0 <= lo <= hi <= n - 2:
            return block_index(lo, hi, m)
        if kind == Kind.DISPLACE_BACKWARD and 1 <= lo <= hi <= n - 1:
            return _n_blocks(m) + block_index(lo - 1, hi - 1, m)
        return None

    def index(self, move: Move) -> int:
        kind, axis, line, lo, hi = move
        nx, ny = self.traps.n_tx, self.traps.n_ty
        idx = None
        if self.is_chain:
            if axis == Axis.ROW and line == 0:
                idx = self._line_index(kind, lo, hi, nx)
        elif kind <= Kind.DISPLACE_BACKWARD:
            if axis == Axis.COLUMN and 0 <= line < nx:
                k = self._line_index(kind, lo, hi, ny)
                if k is not None:
                    idx = line * ny * (ny - 1) + k
            elif axis == Axis.ROW and 0 <= line < ny and lo == hi:
                base = self.counts["column"] + line * 2 * (nx - 1)
                if kind == Kind.DISPLACE_FORWARD and 0 <= lo <= nx - 2:
                    idx = base + lo
                elif kind == Kind.DISPLACE_BACKWARD and 1 <= lo <= nx - 1:
                    idx = base + (nx - 1) + lo - 1
        elif axis == Axis.COLUMN and 0 <= line < nx and 0 <= lo <= hi <= ny - 2:
            per_kind = ny * (ny - 1) // 2
            idx = (self.counts["column"] + self.counts["row"]
                   + (kind - Kind.EXTRACT) * per_kind + block_index(lo, hi, ny - 1))
        if idx is None:
            raise TableMissError(f"no waveform for {move}")
        return idx

    def lookup(self, batch: Sequence[Move]) -> tuple[list[int], float]:
        """Entry indices for a batch and the simulated lookup cost in us."""
        return [self.index(m) for m in batch], self.lookup_us

    def lookup_cost(self, n_batches: int) -> float:
        return n_batches * self.lookup_us

    def manifest(self) -> dict:
        stride = self.samples_per_entry * self.channels * 2
        return {
            "n_entries": self.n_entries,
            "entry_bytes": stride,
            "channels": self.channels,
            "counts": self.counts,
        }

    def dump_manifest(self, path) -> None:
        with open(path, "w") as f:
            json.dump(self.manifest(), f, indent=2)

    # synthesis ------------------------------------------------------------

    def _tones(self, axis: Axis) -> np.ndarray:
        return self.traps.tone_x if axis == Axis.ROW else self.traps.tone_y

    def _sweep_channel(self, freqs: np.ndarray, kind: Kind, lo: int, hi: int) -> Waveform:
        d = 1 if kind == Kind.DISPLACE_FORWARD else -1
        pairs = [(Tone(1.0, float(freqs[p])), Tone(1.0, float(freqs[p + d]))) for p in range(lo, hi + 1)]
        return synth_sweeps(pairs, self.spec, self.T, self.f_s)

    def _static_channel(self, nu: float, hold: WaveKind = WaveKind.STATIC) -> Waveform:
        if hold is WaveKind.STATIC:
            return synth_static([Tone(1.0, nu)], self.T, self.f_s)
        return synth_transfer(Tone(1.0, nu), hold, self.spec, self.T, self.f_s)

    def synthesize(self, move: Move) -> Waveform:
        kind, axis, line, lo, hi = move
        if self.is_chain:
            return self._sweep_channel(self.traps.tone_x, kind, lo, hi)
        tx, ty = self.traps.tone_x, self.traps.tone_y
        if kind <= Kind.DISPLACE_BACKWARD:
            if axis == Axis.COLUMN:
                chans = [self._static_channel(float(tx[line])), self._sweep_channel(ty, kind, lo, hi)]
            else:
                chans = [self._sweep_channel(tx, kind, lo, hi), self._static_channel(float(ty[line]))]
            return _stack(chans, WaveKind.DISPLACE)
        wk = WaveKind.EXTRACT if kind == Kind.EXTRACT else WaveKind.IMPLANT
        # entries are column independent: the column tone ramp is produced
        # with the same shape when a transfer batch is composed
        rows = synth_transfer([Tone(1.0, float(ty[r])) for r in range(lo, hi + 1)], wk, self.spec, self.T, self.f_s)
        ref = self._static_channel(float(tx[len(tx) // 2]), wk)
        return _stack([ref, rows], wk)

    def entry(self, move: Move) -> Waveform:
        idx = self.index(move)
        w = self._cache.get(idx)
        if w is None:
            canonical = move if self.is_chain or move.kind <= Kind.DISPLACE_BACKWARD else \
                Move(move.kind, Axis.COLUMN, len(self.traps.tone_x) // 2, move.lo, move.hi)
            w = self._cache[idx] = self.synthesize(canonical)
        return w

    def static(self) -> Waveform:
        """Idle waveform holding every trap of the array."""
        if self._static is None:
            if self.is_chain:
                self._static = synth_static([Tone(1.0, float(f)) for f in self.traps.tone_x], self.T, self.f_s)
            else:
                chans = [synth_static([Tone(1.0, float(f)) for f in tones], self.T, self.f_s)
                         for tones in (self.traps.tone_x, self.traps.tone_y)]
                self._static = _stack(chans, WaveKind.STATIC)
        return self._static

    def batch_waveform(self, batch: Sequence[Move]) -> Waveform:
        """Waveform streamed for one batch: the renormalized sum of its entries.

        Transfer entries are stored for a reference column; the composed
        waveform swaps in the column tone ramp of each move.
        """
        if len(batch) == 0:
            raise WaveformError("empty batch")
        ch = self.channels
        acc = [np.zeros(self.samples_per_entry) for _ in range(ch)]
        for m in batch:
            w = self.entry(m)
            for c in range(ch):
                acc[c] += w.channel(c).astype(float)
            if not self.is_chain and m.kind > Kind.DISPLACE_BACKWARD:
                wk = WaveKind.EXTRACT if m.kind == Kind.EXTRACT else WaveKind.IMPLANT
                acc[0] += self._static_channel(float(self.traps.tone_x[m.line]), wk).samples - w.channel(0)
        parts = [quantize(a) for a in acc]
        kind = {Kind.EXTRACT: WaveKind.EXTRACT, Kind.IMPLANT: WaveKind.IMPLANT}.get(batch[0].kind, WaveKind.DISPLACE)
        return Waveform(interleave(parts), self.T, self.f_s, ch, kind)


def build_lookup_table(traps: TrapArray, spec: TransitionSpec = TransitionSpec(), T: float = DEFAULT_T,
                       f_s: float = DEFAULT_FS, memory_budget: int = DEFAULT_MEMORY_BUDGET) -> LookupTable:
    return LookupTable(traps, spec, T, f_s, memory_budget)


def dump_raw(wave: Waveform, path) -> None:
    with open(path, "wb") as f:
        f.write(wave.samples.astype("<i2").tobytes())


def waveform_report(wave: Waveform, pairs: Sequence[tuple[Tone, Tone]]) -> dict:
    """Boundary and spectral diagnostics of a synthesized single channel.

    ``pairs`` lists the (start, end) tone of each track.  Amplitude
    derivative ratios are endpoint values over the track's peak value;
    frequency errors are in Hz.  ``peak_hz`` is the strongest FFT bin of
    the quantized samples and ``bands_hz`` the frequency range of each
    track widened by one bin; the peak must fall in one of them.
    """
    dt = 1.0 / wave.f_sample
    a1 = a2 = 0.0
    f_err = f_tol = 0.0
    resid = 0.0
    for tr, (t0, t1) in zip(wave.tracks, pairs):
        d1 = np.gradient(tr.alpha, dt)
        d2 = np.gradient(d1, dt)
        e = endpoint_derivatives(tr.alpha, dt)
        m1, m2 = np.abs(d1).max(), np.abs(d2).max()
        if m1 > 0:
            a1 = max(a1, abs(e[0]) / m1, abs(e[2]) / m1)
        if m2 > 0:
            a2 = max(a2, abs(e[1]) / m2, abs(e[3]) / m2)
        p = endpoint_derivatives(tr.phase, dt)
        err = max(abs(p[0] / (2 * np.pi) - t0.nu), abs(p[2] / (2 * np.pi) - t1.nu))
        f_err = max(f_err, err)
        f_tol = max(f_tol, 1e-3 * max(abs(t1.nu - t0.nu), 1e3))
        resid = max(resid, tr.residual)
    x = wave.channel(0).astype(float)
    spec = np.abs(np.fft.rfft(x))
    freqs = np.fft.rfftfreq(len(x), dt)
    bin_hz = freqs[1]
    return {
        "alpha_d1_ratio": float(a1),
        "alpha_d2_ratio": float(a2),
        "freq_err_hz": float(f_err),
        "freq_tol_hz": float(f_tol),
        "phase_residual": float(resid),
        "peak_hz": float(freqs[np.argmax(spec[1:]) + 1]),
        "bands_hz": [(min(a.nu, b.nu) - bin_hz, max(a.nu, b.nu) + bin_hz) for a, b in pairs],
    }


def report_passes(rep: dict, ratio_tol: float = 1e-3, closure_tol: float = CLOSURE_TOL) -> bool:
    in_band = any(lo <= rep["peak_hz"] <= hi for lo, hi in rep["bands_hz"])
    return (rep["alpha_d1_ratio"] < ratio_tol and rep["alpha_d2_ratio"] < ratio_tol
            and rep["freq_err_hz"] < rep["freq_tol_hz"] and rep["phase_residual"] < closure_tol
            and in_band)
