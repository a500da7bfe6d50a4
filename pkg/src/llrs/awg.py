"""Discrete-event model of an AWG running in sequence mode.

Data memory is split into an idle segment, a failsafe segment, a ring of
equally sized control segments and one double-sized control segment.
Sequence memory holds an idle step, one control step per control segment
and a failsafe step paired with every control step.  Control steps point
to their failsafe step until the host has filled the following segment
and redirected the pointer.  Reaching a failsafe step is an underrun: the
failsafe segment (a static hold waveform) then loops until :func:`reset`.

Time is an integer count of nanoseconds.
"""

from __future__ import annotations

import enum
import heapq
import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .core import LLRSError, make_rng

NS_PER_US = 1000


def ns(us: float) -> int:
    return int(round(us * NS_PER_US))


class AwgError(LLRSError):
    pass


@dataclass
class JitterModel:
    """Per-upload multiplicative lognormal jitter plus rare Pareto spikes.

    Defaults are calibrated so that streaming 256 waveforms at 32 per
    segment underruns in about 1 run out of 320 (a spike hitting any of
    the six uploads that race the stream is always long enough to lose).
    """

    sigma: float = 0.01
    spike_prob: float = 5.2e-4
    spike_scale_us: float = 500.0
    spike_shape: float = 2.5

    def sample(self, rng: np.random.Generator, base_ns: int) -> int:
        d = base_ns * math.exp(self.sigma * rng.standard_normal()) if self.sigma > 0 else base_ns
        if self.spike_prob > 0 and rng.random() < self.spike_prob:
            d += self.spike_scale_us * NS_PER_US * (1.0 + rng.pareto(self.spike_shape))
        return int(round(d))


@dataclass
class AwgConfig:
    data_memory_bytes: int = 2**32
    bytes_per_sample: int = 2
    max_segments: int = 4096
    max_steps: int = 4096
    f_sample: float = 624e6
    waveform_us: float = 10.0  # T
    channels: int = 2
    waveforms_per_segment: int = 32
    n_control_segments: int = 64
    upload_overhead_us: float = 124.0
    upload_per_waveform_us: float = 4.0
    upload_setup_us: float = 2.0  # once per streaming cycle
    # Segments are written whole: unused slots carry the static waveform and
    # cost upload time, but a step only plays the filled prefix.
    full_segment_writes: bool = True
    sequence_update_us: float = 4.0
    update_effect_playbacks: int = 1
    max_update_playbacks: int | None = None  # draw uniformly from [1, max] when set
    jitter: JitterModel | None = None

    def __post_init__(self):
        if self.waveforms_per_segment < 1:
            raise AwgError("waveforms_per_segment must be at least 1")
        if self.update_effect_playbacks < 1:
            raise AwgError("update_effect_playbacks must be at least 1")

    @property
    def samples_per_waveform(self) -> int:
        return int(round(self.waveform_us * 1e-6 * self.f_sample))

    @property
    def waveform_ns(self) -> int:
        return ns(self.waveform_us)

    def upload_ns(self, n_waveforms: int) -> int:
        """Jitter-free upload duration of one segment (chunk)."""
        return ns(self.upload_overhead_us + n_waveforms * self.upload_per_waveform_us)


class EventKind(str, enum.Enum):
    SEGMENT_START = "SegmentStart"
    SEGMENT_END = "SegmentEnd"
    UPLOAD_DONE = "UploadDone"
    STEP_UPDATED = "StepUpdated"
    UNDERRUN_ENTERED = "UnderrunEntered"
    IDLE_RESTORED = "IdleRestored"


class AwgEvent(NamedTuple):
    time: int  # ns
    kind: EventKind
    step: int = -1
    segment: int = -1


class StepKind(str, enum.Enum):
    IDLE = "idle"
    CONTROL = "control"
    FAILSAFE = "failsafe"


@dataclass
class Step:
    plays: int
    next: int
    kind: StepKind
    failsafe: int = -1  # paired failsafe step of a control step


@dataclass
class Segment:
    offset: int  # bytes
    capacity: int  # waveforms
    tag: object = None  # identifies the uploaded content
    n_waveforms: int = 0
    uploading: bool = False


IDLE_SEG, FAILSAFE_SEG = 0, 1
IDLE_STEP = 0


class AwgState:
    def __init__(self, config: AwgConfig, seed: int | None = None):
        self.config = config
        self.rng = make_rng(seed)
        self._wf_ns = config.waveform_ns
        cfg = config
        wf_bytes = cfg.samples_per_waveform * cfg.channels * cfg.bytes_per_sample
        cap = cfg.waveforms_per_segment
        sizes = [1, 1] + [cap] * cfg.n_control_segments + [2 * cap]
        if len(sizes) > cfg.max_segments:
            raise AwgError(f"{len(sizes)} segments exceed the limit of {cfg.max_segments}")
        self.segments: list[Segment] = []
        offset = 0
        for s in sizes:
            self.segments.append(Segment(offset, s))
            offset += s * wf_bytes
        if offset > cfg.data_memory_bytes:
            raise AwgError(f"segments need {offset} bytes, memory holds {cfg.data_memory_bytes}")
        self.segments[IDLE_SEG].tag = "idle"
        self.segments[FAILSAFE_SEG].tag = "failsafe"
        self.segments[IDLE_SEG].n_waveforms = self.segments[FAILSAFE_SEG].n_waveforms = 1
        self.double_segment = len(sizes) - 1

        # steps: idle, then (control, failsafe) pairs; the last pair is the double segment's
        self.steps: list[Step] = [Step(IDLE_SEG, IDLE_STEP, StepKind.IDLE)]
        self.control_steps: list[int] = []
        for seg in range(2, len(sizes)):
            c, f = len(self.steps), len(self.steps) + 1
            self.steps.append(Step(seg, f, StepKind.CONTROL, failsafe=f))
            self.steps.append(Step(FAILSAFE_SEG, f, StepKind.FAILSAFE))
            self.control_steps.append(c)
        if len(self.steps) > cfg.max_steps:
            raise AwgError(f"{len(self.steps)} steps exceed the limit of {cfg.max_steps}")
        self.double_step = self.control_steps.pop()

        self.time = 0
        self.events: list[AwgEvent] = []
        self.underrun = False
        self._queue: list = []  # (time, order, seq, action, payload)
        self._seq = 0
        self._deferred: dict[int, list] = {}  # step -> [[remaining, value], ...]
        self._expected = None  # tag the next control segment must hold
        self._dirty: set[int] = set()  # steps whose pointer differs from the initial topology
        self._start(IDLE_STEP, 0)

    # -- queries ------------------------------------------------------------

    @property
    def memory_used(self) -> int:
        last = self.segments[-1]
        cfg = self.config
        return last.offset + last.capacity * cfg.samples_per_waveform * cfg.channels * cfg.bytes_per_sample

    @property
    def playing_segment(self) -> int:
        return self.steps[self.playing].plays

    def _push(self, t: int, order: int, action: str, payload) -> None:
        self._seq += 1
        heapq.heappush(self._queue, (t, order, self._seq, action, payload))

    def _log(self, t: int, kind: EventKind, step: int = -1, segment: int = -1) -> None:
        self.events.append(AwgEvent(t, kind, step, segment))

    def _duration(self, step: int) -> int:
        seg = self.segments[self.steps[step].plays]
        return max(seg.n_waveforms, 1) * self._wf_ns

    def _start(self, step: int, t: int) -> None:
        self.playing = step
        self.play_start = t
        self.play_end = t + self._duration(step)
        self._log(t, EventKind.SEGMENT_START, step, self.steps[step].plays)

    # -- engine -------------------------------------------------------------

    def _apply(self, t: int, step: int, value: int) -> None:
        if self.steps[step].next != value:
            self.steps[step].next = value
            self._dirty.add(step)
            self._log(t, EventKind.STEP_UPDATED, step)

    def _boundary(self) -> None:
        t = self.play_end
        s = self.playing
        step = self.steps[s]
        for item in self._deferred.get(s, []):
            item[0] -= 1
        due = [v for r, v in self._deferred.get(s, []) if r <= 0]
        self._deferred[s] = [it for it in self._deferred.get(s, []) if it[0] > 0]
        for v in due:
            self._apply(t, s, v)

        if step.kind is StepKind.FAILSAFE or (step.kind is StepKind.IDLE and step.next == s):
            # loop in place without logging every repetition
            self.play_start, self.play_end = t, t + self._duration(s)
            return
        self._log(t, EventKind.SEGMENT_END, s, step.plays)
        nxt = self.steps[step.next]
        if nxt.kind is StepKind.IDLE:
            self._log(t, EventKind.IDLE_RESTORED, step.next)
            self._start(step.next, t)
            return
        if nxt.kind is StepKind.FAILSAFE:
            self._enter_failsafe(t, step.next)
            return
        seg = self.segments[nxt.plays]
        if seg.uploading or seg.tag is None or seg.tag != self._expected:
            self._enter_failsafe(t, nxt.failsafe if step.kind is StepKind.IDLE else step.failsafe)
            return
        self._expected = _next_tag(seg.tag)
        self._start(step.next, t)

    def _enter_failsafe(self, t: int, fstep: int) -> None:
        self.underrun = True
        self._log(t, EventKind.UNDERRUN_ENTERED, fstep, FAILSAFE_SEG)
        self._start(fstep, t)

    def advance(self, t_until: int) -> list[AwgEvent]:
        """Run playback up to ``t_until``; returns the events logged meanwhile."""
        if t_until < self.time:
            raise AwgError("cannot advance backwards in time")
        n0 = len(self.events)
        while True:
            t_q = self._queue[0][0] if self._queue else None
            if t_q is not None and t_q <= t_until and t_q <= self.play_end:
                t, _, _, action, payload = heapq.heappop(self._queue)
                self.time = t
                if action == "upload":
                    seg_id, tag, n = payload
                    seg = self.segments[seg_id]
                    seg.uploading = False
                    seg.tag, seg.n_waveforms = tag, n
                    self._log(t, EventKind.UPLOAD_DONE, -1, seg_id)
                else:
                    step, value = payload
                    if step == self.playing:
                        k = self._effect_playbacks()
                        self._deferred.setdefault(step, []).append([k, value])
                    else:
                        self._apply(t, step, value)
                continue
            if self.play_end <= t_until:
                self._skip_loops(min(t_until, t_q) if t_q is not None else t_until)
                if self.play_end > t_until:
                    break
                self.time = self.play_end
                self._boundary()
                continue
            break
        self.time = t_until
        return self.events[n0:]

    def _looping(self) -> bool:
        st = self.steps[self.playing]
        if self._deferred.get(self.playing):
            return False
        return st.kind is StepKind.FAILSAFE or (st.kind is StepKind.IDLE and st.next == self.playing)

    def _skip_loops(self, target: int) -> None:
        """Jump over in-place repetitions that end before ``target``."""
        if self.play_end < target and self._looping():
            d = self._wf_ns
            k = (target - self.play_end) // d
            if k > 0:
                self.play_end += k * d
                self.play_start = self.play_end - d

    def _effect_playbacks(self) -> int:
        cfg = self.config
        if cfg.max_update_playbacks:
            return int(self.rng.integers(1, cfg.max_update_playbacks + 1))
        return cfg.update_effect_playbacks

    def run_until_idle(self, horizon: int) -> None:
        """Advance until idle is restored, an underrun occurs, or ``horizon``."""
        n0 = len(self.events)
        while self.time < horizon and not self.underrun:
            target = min(horizon, self.play_end, self._queue[0][0] if self._queue else horizon)
            self.advance(max(target, self.time))
            if any(e.kind is EventKind.IDLE_RESTORED for e in self.events[n0:]):
                return


def _next_tag(tag):
    cycle, k = tag
    return (cycle, k + 1)


def init_awg(config: AwgConfig | None = None, seed: int | None = None) -> AwgState:
    return AwgState(config or AwgConfig(), seed)


def upload_segment(state: AwgState, segment_id: int, n_waveforms: int, t_start: int,
                   tag=None, duration: int | None = None) -> AwgEvent:
    """Start an upload at ``t_start``; content switches at completion."""
    state.advance(t_start)
    seg = state.segments[segment_id]
    if segment_id in (IDLE_SEG, FAILSAFE_SEG):
        raise AwgError("idle and failsafe segments are fixed")
    if state.playing_segment == segment_id:
        raise AwgError(f"segment {segment_id} is playing")
    if n_waveforms > seg.capacity:
        raise AwgError(f"{n_waveforms} waveforms exceed segment capacity {seg.capacity}")
    if duration is None:
        duration = state.config.upload_ns(n_waveforms)
    seg.uploading = True
    seg.tag = None
    done = t_start + duration
    state._push(done, 0, "upload", (segment_id, tag, n_waveforms))
    return AwgEvent(done, EventKind.UPLOAD_DONE, -1, segment_id)


def update_step(state: AwgState, step_id: int, new_next: int, t: int) -> AwgEvent:
    """Issue a pointer update at ``t``; it lands ``sequence_update_us`` later,
    or after further playbacks when the step is playing at that moment."""
    state.advance(t)
    t_eff = t + ns(state.config.sequence_update_us)
    state._push(t_eff, 1, "update", (step_id, new_next))
    return AwgEvent(t_eff, EventKind.STEP_UPDATED, step_id)


def reset(state: AwgState, t: int) -> None:
    """Restore the initial sequence topology with idle playing from ``t``."""
    state.advance(t)
    for i in state._dirty:
        st = state.steps[i]
        st.next = st.failsafe if st.kind is StepKind.CONTROL else i
    state._dirty.clear()
    state._deferred.clear()
    state._queue = [q for q in state._queue if q[3] == "upload"]
    heapq.heapify(state._queue)
    state.underrun = False
    state._start(IDLE_STEP, t)


@dataclass
class StreamResult:
    events: list[AwgEvent]
    makespan: int  # ns from t0 until idle is restored (or the horizon)
    underrun: bool
    t_first_sample: int | None  # ns, start of the first control segment
    first_uploads: int  # ns spent on the pre-release uploads (incl. setup)
    seq_updates: int  # ns of pre-release pointer updates
    release_wait: int  # ns from the release update landing to idle's boundary
    n_updates: int  # pre-release pointer updates
    played_waveforms: int  # waveforms of fully played control segments
    double_path: bool = False
    upload_durations: list[int] = field(default_factory=list)


_cycle_counter = 0


def run_streaming_script(state: AwgState, n_waveforms: int, t0: int | None = None) -> StreamResult:
    """Stream ``n_waveforms`` through the control segments (one cycle).

    The host is serial: it uploads one segment, issues the pointer updates
    that depend on it, then starts the next upload.
    """
    global _cycle_counter
    _cycle_counter += 1
    cycle = _cycle_counter
    cfg = state.config
    t = state.time if t0 is None else t0
    state.advance(t)
    start = t
    n0 = len(state.events)
    K = cfg.waveforms_per_segment
    upd = ns(cfg.sequence_update_us)
    durations: list[int] = []

    def upload_cost(n):
        base = cfg.upload_ns(K if cfg.full_segment_writes else n)
        d = cfg.jitter.sample(state.rng, base) if cfg.jitter else base
        durations.append(d)
        return d

    if n_waveforms <= 0:
        return StreamResult([], 0, False, None, 0, 0, 0, 0, 0)

    t += ns(cfg.upload_setup_us)
    state._expected = (cycle, 0)
    if n_waveforms <= 2 * K:
        # double-sized segment, uploaded in segment-sized pieces
        pieces = [min(K, n_waveforms - i) for i in range(0, n_waveforms, K)]
        if cfg.full_segment_writes:
            pieces = [K, K]
        d = sum(upload_cost(p) for p in pieces)
        upload_segment(state, state.double_segment, n_waveforms, t, (cycle, 0), duration=d)
        t += d
        first_uploads = t - start
        dstep = state.double_step
        update_step(state, dstep, IDLE_STEP, t)
        t += upd
        update_step(state, IDLE_STEP, dstep, t)
        t += upd
        release_at = t
        played_chunks = [n_waveforms]
        n_pre = 2
        double = True
    else:
        ring = state.control_steps
        R = len(ring)
        chunks = [min(K, n_waveforms - i) for i in range(0, n_waveforms, K)]
        if R < 3:
            raise AwgError("multi-segment streaming needs at least three control segments")
        step_of = lambda i: ring[i % R]
        seg_of = lambda i: state.steps[step_of(i)].plays
        for i in (0, 1):
            d = upload_cost(chunks[i])
            upload_segment(state, seg_of(i), chunks[i], t, (cycle, i), duration=d)
            t += d
        first_uploads = t - start
        update_step(state, step_of(0), step_of(1), t)
        t += upd
        update_step(state, state.steps[step_of(0)].failsafe, step_of(1), t)
        t += upd
        update_step(state, IDLE_STEP, step_of(0), t)
        t += upd
        release_at = t
        n_pre = 3
        double = False
        k = 2
        while k < len(chunks) and not state.underrun:
            if k >= R:
                # wait until the chunk previously held by this segment has played
                t = _wait_played(state, (cycle, k - R), t)
                if state.underrun:
                    break
            state.advance(t)
            if state.underrun:
                break
            d = upload_cost(chunks[k])
            upload_segment(state, seg_of(k), chunks[k], t, (cycle, k), duration=d)
            t += d
            state.advance(t)
            if state.underrun:
                break
            prev = step_of(k - 1)
            update_step(state, prev, step_of(k), t)
            t += upd
            update_step(state, state.steps[prev].failsafe, step_of(k), t)
            t += upd
            k += 1
        if not state.underrun:
            update_step(state, step_of(len(chunks) - 1), IDLE_STEP, t)
            t += upd
        played_chunks = chunks

    horizon = t + (n_waveforms + 4 * K + 10) * cfg.waveform_ns
    state.run_until_idle(horizon)
    events = state.events[n0:]
    first = next((e.time for e in events if e.kind is EventKind.SEGMENT_START and e.step != IDLE_STEP
                  and state.steps[e.step].kind is StepKind.CONTROL), None)
    end = next((e.time for e in events if e.kind is EventKind.IDLE_RESTORED), state.time)
    played = _played_waveforms(state, events)
    wait = (first - release_at) if first is not None else 0
    return StreamResult(
        events=events,
        makespan=end - start,
        underrun=state.underrun,
        t_first_sample=first,
        first_uploads=first_uploads,
        seq_updates=n_pre * upd,
        release_wait=max(wait, 0),
        n_updates=n_pre,
        played_waveforms=played,
        double_path=double,
        upload_durations=durations,
    )


def _played_waveforms(state: AwgState, events: list[AwgEvent]) -> int:
    """Waveforms of control segments that played to completion."""
    total = 0
    current = {}
    for e in events:
        if e.kind is EventKind.SEGMENT_START and state.steps[e.step].kind is StepKind.CONTROL:
            current[e.step] = e.time
        elif e.kind is EventKind.SEGMENT_END and e.step in current:
            dur = e.time - current.pop(e.step)
            total += dur // state.config.waveform_ns
    return total


def _wait_played(state: AwgState, tag, t: int) -> int:
    """Advance until the chunk ``tag`` has played out; returns the time."""
    state.advance(max(t, state.time))
    while not state.underrun:
        st = state.steps[state.playing]
        playing_it = st.kind is StepKind.CONTROL and state.segments[st.plays].tag == tag
        if not playing_it and state._expected is not None and state._expected[1] > tag[1]:
            break
        state.advance(state.play_end)
    return state.time


def underrun_probability(config: AwgConfig, n_trials: int = 1000, n_waveforms: int = 256,
                         seed: int | None = 0) -> float:
    """Fraction of streaming cycles that hit at least one underrun.

    One simulated device runs ``n_trials`` cycles back to back and is reset
    to its initial sequence topology between cycles.
    """
    state = AwgState(config, seed)
    hits = 0
    for _ in range(n_trials):
        res = run_streaming_script(state, n_waveforms)
        hits += res.underrun
        reset(state, state.time)
        state.events.clear()  # each cycle's log is already in ``res``
    return hits / n_trials
