"""Closed-loop rearrangement of a 16 x 32 array into a 16 x 16 block.

Run with ``python3 demos/closed_loop.py``.
"""

import numpy as np

from llrs.core import TrapArray, sample_instance
from llrs.pipeline import LEDGER_FIELDS, Devices, LossModel, run_until_solved

traps = TrapArray.grid(16, 32)
dev = Devices.build(traps, seed=0)

# a stochastically loaded array; keep drawing until there are enough atoms
seed = 0
inst = sample_instance(traps, 0.6, 256, seed=seed)
while not inst.solvable:
    seed += 1
    inst = sample_instance(traps, 0.6, 256, seed=seed)
print(f"instance seed {seed}: {inst.initial.sum()} atoms loaded, {inst.n_target} wanted")


def show(state):
    rows = np.asarray(state).reshape(traps.n_ty, traps.n_tx)
    for r in rows:
        print("".join("#" if v else "." for v in r))


show(inst.initial)

# lossless first: one cycle reaches the target
final, outs = run_until_solved(inst, dev, seed=1)
print(f"\nlossless: {len(outs)} cycle(s), reached={outs[-1].reached_target}, "
      f"{outs[-1].n_moves} moves in {outs[-1].n_batches} batches")
show(final)

led = outs[-1].ledger
print("\nlatency ledger (us)")
for name in LEDGER_FIELDS:
    print(f"  {name:15s} {getattr(led, name):10.2f}")
print(f"  {'total':15s} {led.total:10.2f}")

# with 2% loss per displacement several cycles are usually needed
final, outs = run_until_solved(inst, dev, LossModel(p_nu=0.98, p_alpha=0.99), max_cycles=8, seed=2)
print(f"\nlossy: {len(outs)} cycle(s), reached={outs[-1].reached_target}, "
      f"atoms lost per cycle {[o.atoms_lost for o in outs]}")
