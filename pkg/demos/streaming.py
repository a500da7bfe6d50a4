"""Sequence-mode streaming on the simulated AWG.

Shows the event trace of one cycle, the upload/stream crossover as the
segment size changes, and the failsafe latch after an underrun.
"""

from llrs import awg

cfg = awg.AwgConfig()
state = awg.AwgState(cfg, seed=0)
res = awg.run_streaming_script(state, 100)
print(f"100 waveforms: underrun={res.underrun}, first uploads {res.first_uploads / 1e3:.0f} us, "
      f"{res.n_updates} pointer updates, makespan {res.makespan / 1e3:.0f} us")
for e in res.events[:12]:
    print(f"  {e.time / 1e3:9.2f} us  {e.kind.value:16s} step={e.step:3d} segment={e.segment}")

# an upload must beat the playback of the segment ahead of it
print("\nper-segment  upload_us  stream_us  P(underrun)")
for k in (8, 16, 32, 64):
    c = awg.AwgConfig(waveforms_per_segment=k)
    p = awg.underrun_probability(c, 200, 256)
    print(f"{k:11d}  {c.upload_ns(k) / 1e3:9.0f}  {k * cfg.waveform_us:9.0f}  {p:11.3f}")

# with jitter, rare upload spikes still cause underruns at 32 per segment
p = awg.underrun_probability(awg.AwgConfig(jitter=awg.JitterModel()), 5000, 256, seed=1)
print(f"\ndefault jitter, 32 per segment: P(underrun) = {p:.4f} (1/257 = {1 / 257:.4f})")

# once in failsafe the device stays there until it is reset
st = awg.AwgState(awg.AwgConfig(waveforms_per_segment=8))
awg.run_streaming_script(st, 256)
st.advance(st.time + 10_000_000)
print(f"after an underrun the playing segment is {st.playing_segment} (failsafe = {awg.FAILSAFE_SEG})")
