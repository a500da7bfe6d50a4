"""Runtime scaling of image processing and the grid solver.

Absolute times depend on the machine; the fitted log-log slopes are the
quantities of interest.  Trial counts are kept small so this finishes in
well under a minute.
"""

from llrs.bench import SweepSpec, fit_rows, run_sweep

rows = run_sweep(SweepSpec("fig5a", trials=50))
print("image processing vs trap count (box 5)")
for r in rows:
    print(f"  N_t={r['n_traps']:6d}  median {r['median_us']:9.1f} us")
print(f"  slope {fit_rows(rows, 'n_traps').slope:.2f}")

rows = run_sweep(SweepSpec("fig5b", trials=20))
print("image processing vs box side (16384 traps)")
for r in rows:
    print(f"  box={r['box_side']:2d}  median {r['median_us']:9.1f} us")
print(f"  slope {fit_rows(rows, 'box_side').slope:.2f}")

rows = run_sweep(SweepSpec("fig6a", {"n_tx": [8, 16, 24, 32, 48]}, trials=15))
print("red-rec (unbatched) vs columns")
for r in rows:
    print(f"  N_tx={r['n_tx']:2d} N_ty={r['n_ty']:3d}  median {r['median_us'] / 1e3:8.2f} ms  "
          f"moves {r['mean_moves']:7.0f}  batches {r['mean_batches']:5.0f}")
print(f"  slope {fit_rows(rows, 'n_tx').slope:.2f}")
