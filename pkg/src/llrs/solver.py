"""Reconfiguration solvers: exact 1D for chains, red-rec for grids, batching.

Both solvers emit block moves that shift a contiguous block by one site.
The 1D solver first picks the order-preserving assignment of atoms to
target traps with minimum total displacement (atoms never cross in 1D),
then sweeps every atom toward its target, grouping adjacent atoms moving
the same way into a single block move.

red-rec works in two phases.  Redistribution moves surplus atoms between
columns along rows (extract, single-site row steps, implant); each column
is then solved independently with the 1D solver.
"""

from __future__ import annotations

import bisect
import json
from dataclasses import dataclass, field

import numpy as np

from .core import Axis, Geometry, Kind, Move, ProblemInstance

_FWD, _BWD, _EXT, _IMP = Kind.DISPLACE_FORWARD, Kind.DISPLACE_BACKWARD, Kind.EXTRACT, Kind.IMPLANT


@dataclass
class Solution:
    moves: list[Move] = field(default_factory=list)
    batches: list[list[Move]] | None = None
    solvable: bool = True
    atom_steps: int = 0  # summed distance travelled by all atoms

    def __len__(self):
        return len(self.moves)

    def to_json(self) -> str:
        """List of batches, each a list of move dicts (one move per batch if unbatched)."""
        batches = self.batches if self.batches is not None else [[m] for m in self.moves]
        return json.dumps([[m.to_dict() for m in b] for b in batches])

    @classmethod
    def from_json(cls, text: str) -> "Solution":
        batches = [[Move.from_dict(d) for d in b] for b in json.loads(text)]
        return cls([m for b in batches for m in b], batches)


def count_displacement(solution: Solution) -> int:
    """Number of displacement moves; each block move counts once."""
    return sum(1 for m in solution.moves if m.kind <= _BWD)


def count_transfers(solution: Solution) -> int:
    return sum(1 for m in solution.moves if m.kind > _BWD)


def total_displacement(solution: Solution) -> int:
    """Summed distance travelled by all atoms (atom-steps)."""
    return solution.atom_steps


# -- 1D ---------------------------------------------------------------------

def assign_1d(sources: list[int], targets: list[int]) -> list[tuple[int, int]]:
    """Order-preserving min-cost matching between two sorted position lists.

    The shorter list is matched entirely.  Among optimal matchings the one
    using the lowest indices of the longer list is returned.  Fills the
    full ``(m+1) x (k+1)`` cost table.
    """
    swap = len(sources) < len(targets)
    a, b = (targets, sources) if swap else (sources, targets)
    m, k = len(a), len(b)
    if k == 0:
        return []
    inf = float("inf")
    # f[i][j]: min cost of matching b[j:] using a[i:]
    f = [[inf] * k + [0] for _ in range(m + 1)]
    for i in range(m - 1, -1, -1):
        row, nxt = f[i], f[i + 1]
        ai = a[i]
        for j in range(k - 1, -1, -1):
            d = ai - b[j]
            take = (d if d >= 0 else -d) + nxt[j + 1]
            skip = nxt[j]
            row[j] = take if take <= skip else skip
    pairs = []
    i = 0
    for j in range(k):
        # take a[i] whenever it stays optimal (lowest index)
        while True:
            d = a[i] - b[j]
            if (d if d >= 0 else -d) + f[i + 1][j + 1] == f[i][j]:
                break
            i += 1
        pairs.append((a[i], b[j]))
        i += 1
    if swap:
        pairs = [(q, p) for p, q in pairs]
    return pairs


def _sweep_moves(line: list[bool], goal: dict[int, int], axis: Axis, index: int) -> tuple[list[Move], int]:
    """Block moves carrying each atom at ``p`` to ``goal[p]`` one site at a time.

    Each sweep groups atoms heading the same way into blocks.  A block is a
    contiguous range of traps that may contain empty traps but never an
    atom that must stay put or move the other way.  Returns the moves and
    the number of atom-steps they perform.
    """
    n = len(line)
    tgt = [-1] * n  # goal of the atom currently at each site, -1 if none/idle
    for p, q in goal.items():
        tgt[p] = q
    occ = list(line)
    moves: list[Move] = []
    steps = 0
    while True:
        emitted = False
        p = 0
        while p < n:
            q = tgt[p]
            if q < 0 or q == p:
                p += 1
                continue
            fwd = q > p
            lo = hi = p
            r = p + 1
            while r < n:
                if occ[r]:
                    qr = tgt[r]
                    if qr < 0 or qr == r or (qr > r) != fwd:
                        break
                    hi = r
                r += 1
            if fwd:
                moves.append(Move(_FWD, axis, index, lo, hi))
                occ[lo + 1:hi + 2] = occ[lo:hi + 1]
                tgt[lo + 1:hi + 2] = tgt[lo:hi + 1]
                occ[lo], tgt[lo] = False, -1
                p = hi + 2
            else:
                moves.append(Move(_BWD, axis, index, lo, hi))
                occ[lo - 1:hi] = occ[lo:hi + 1]
                tgt[lo - 1:hi] = tgt[lo:hi + 1]
                occ[hi], tgt[hi] = False, -1
                p = hi + 1
            steps += sum(occ[lo:hi + 2] if fwd else occ[lo - 1:hi + 1])
            emitted = True
        if not emitted:
            return moves, steps


def _solve_line(line: list[bool], target: list[bool], axis: Axis, index: int) -> tuple[list[Move], int, bool]:
    atoms = [p for p, v in enumerate(line) if v]
    goals = [p for p, v in enumerate(target) if v]
    pairs = assign_1d(atoms, goals)
    goal = {p: q for p, q in pairs}
    moves, steps = _sweep_moves(line, goal, axis, index)
    return moves, steps, len(atoms) >= len(goals)


def solve_chain_exact(initial, target) -> Solution:
    """Minimum total displacement solution on a chain.

    Surplus atoms are left in place.  With too few atoms the available
    atoms fill the most favourable target traps and ``solvable`` is False.
    """
    initial = [bool(v) for v in np.asarray(initial).ravel()]
    target = [bool(v) for v in np.asarray(target).ravel()]
    moves, steps, ok = _solve_line(initial, target, Axis.ROW, 0)
    return Solution(moves, solvable=ok, atom_steps=steps)


# -- red-rec ----------------------------------------------------------------

class _Grid:
    """Mutable occupancy used while building the redistribution moves."""

    def __init__(self, occ: np.ndarray):
        self.n_ty, self.n_tx = occ.shape
        self.cols = occ.T.tolist()
        self.count = [sum(c) for c in self.cols]
        self.moves: list[Move] = []
        self.steps = 0

    def shift(self, col: int, lo: int, hi: int, fwd: bool) -> None:
        c = self.cols[col]
        if fwd:
            c[lo + 1:hi + 2] = c[lo:hi + 1]
            c[lo] = False
            self.moves.append(Move(_FWD, Axis.COLUMN, col, lo, hi))
            self.steps += sum(c[lo + 1:hi + 2])
        else:
            c[lo - 1:hi] = c[lo:hi + 1]
            c[hi] = False
            self.moves.append(Move(_BWD, Axis.COLUMN, col, lo, hi))
            self.steps += sum(c[lo - 1:hi])

    def bring_atom(self, col: int, r: int) -> None:
        """Slide the atom nearest to row ``r`` in ``col`` onto ``r``."""
        c = self.cols[col]
        for d in range(1, self.n_ty):
            for u in (r - d, r + d):
                if 0 <= u < self.n_ty and c[u]:
                    step = 1 if u < r else -1
                    while u != r:
                        self.shift(col, u, u, step > 0)
                        u += step
                    return

    def vacate(self, col: int, r: int) -> None:
        """Free site ``r`` of ``col`` by pushing the occupied run one step."""
        c = self.cols[col]
        hi = r
        while hi + 1 < self.n_ty and c[hi + 1]:
            hi += 1
        lo = r
        while lo - 1 >= 0 and c[lo - 1]:
            lo -= 1
        can_up = hi + 1 < self.n_ty
        can_down = lo - 1 >= 0
        if can_up and (not can_down or hi - r <= r - lo):
            self.shift(col, r, hi, True)
        else:
            self.shift(col, lo, r, False)


def transfer_rows(n_ty: int) -> range:
    """Rows on which atoms may be extracted/implanted (see waveform table)."""
    return range(0, max(n_ty - 1, 1))


def _transfer(g: _Grid, a: int, b: int, center: float) -> None:
    step = 1 if b > a else -1
    between = list(range(a + step, b, step))
    full = [k for k in between if g.count[k] == g.n_ty]
    if full:
        k = min(full, key=lambda k: abs(b - k))
        _transfer(g, k, b, center)
        _transfer(g, a, k, center)
        return
    ca, cb = g.cols[a], g.cols[b]
    best = None
    for r in transfer_rows(g.n_ty):
        cost = 0
        if not ca[r]:
            d = 1
            while not ((r - d >= 0 and ca[r - d]) or (r + d < g.n_ty and ca[r + d])):
                d += 1
            cost += d
        for k in between:
            if g.cols[k][r]:
                cost += 1
        if cb[r]:
            cost += 1
        key = (cost, abs(r - center), r)
        if best is None or key < best:
            best = key
            if cost == 0 and abs(r - center) < 1:
                break
    r = best[2]
    if not ca[r]:
        g.bring_atom(a, r)
    for k in between:
        if g.cols[k][r]:
            g.vacate(k, r)
    if cb[r]:
        g.vacate(b, r)
    g.moves.append(Move(_EXT, Axis.COLUMN, a, r, r))
    kind = _FWD if step > 0 else _BWD
    for c in range(a, b, step):
        g.moves.append(Move(kind, Axis.ROW, r, c, c))
    g.steps += abs(b - a)
    g.moves.append(Move(_IMP, Axis.COLUMN, b, r, r))
    ca[r] = False
    cb[r] = True
    g.count[a] -= 1
    g.count[b] += 1


def solve_grid_redrec(initial, target, shape: tuple[int, int]) -> Solution:
    """Redistribution-reconfiguration heuristic on an ``(n_ty, n_tx)`` grid.

    Deficit columns are served center-outward, each from the nearest column
    holding surplus atoms (ties toward lower index).  Intermediate columns
    that are completely full are relayed through so that row paths only
    ever cross empty traps.
    """
    occ = np.asarray(initial, dtype=bool).reshape(shape)
    tcols = np.asarray(target, dtype=bool).reshape(shape).T.tolist()
    g = _Grid(occ)
    n_tx = g.n_tx
    need = [sum(c) for c in tcols]
    solvable = sum(g.count) >= sum(need)
    if n_tx > 1:
        mid = (n_tx - 1) / 2
        tgt_rows = [r for r in range(g.n_ty) if any(c[r] for c in tcols)]
        row_center = sum(tgt_rows) / len(tgt_rows) if tgt_rows else (g.n_ty - 1) / 2
        for b in sorted(range(n_tx), key=lambda i: (abs(i - mid), i)):
            while g.count[b] < need[b]:
                donors = [i for i in range(n_tx) if g.count[i] > need[i]]
                if not donors:
                    break
                a = min(donors, key=lambda i: (abs(i - b), i))
                _transfer(g, a, b, row_center)
    moves = g.moves
    for i, tcol in enumerate(tcols):
        col_moves, steps, _ = _solve_line(g.cols[i], tcol, Axis.COLUMN, i)
        moves.extend(col_moves)
        g.steps += steps
    return Solution(moves, solvable=solvable, atom_steps=g.steps)


def solve(instance: ProblemInstance, batched: bool = True) -> Solution:
    traps = instance.traps
    if traps.geometry is Geometry.CHAIN:
        sol = solve_chain_exact(instance.initial, instance.target)
    else:
        sol = solve_grid_redrec(instance.initial, instance.target, traps.shape)
    if batched:
        sol = batch_ops(sol, traps.n_tx)
    return sol


# -- batching ---------------------------------------------------------------

def batch_ops(solution: Solution, n_tx: int) -> Solution:
    """Greedy earliest-batch grouping of a legal move list.

    Each move lands in the earliest batch that (a) shares its kind and axis
    and (b) comes after every batch holding an earlier move that touches
    one of its traps (block or destination).  Moves in one batch therefore
    touch disjoint traps and commute.
    """
    batches: list[list[Move]] = []
    by_type: dict[tuple, list[int]] = {}
    last: dict[int, int] = {}
    for m in solution.moves:
        sites = m.sites(n_tx)
        lowest = 0
        for s in sites:
            b = last.get(s)
            if b is not None and b + 1 > lowest:
                lowest = b + 1
        idx_list = by_type.setdefault((m.kind, m.axis), [])
        pos = bisect.bisect_left(idx_list, lowest)
        if pos < len(idx_list):
            bi = idx_list[pos]
        else:
            bi = len(batches)
            batches.append([])
            idx_list.append(bi)
        batches[bi].append(m)
        for s in sites:
            if last.get(s, -1) < bi:
                last[s] = bi
    return Solution(list(solution.moves), batches, solution.solvable, solution.atom_steps)


def unbatched(solution: Solution) -> list[list[Move]]:
    return [[m] for m in solution.moves]
