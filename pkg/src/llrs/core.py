"""Trap geometry, occupation states, moves and the reference move executor.

Traps are indexed row-major, ``index = j * n_tx + i`` where ``i`` is the
column and ``j`` the row.  A chain is a grid with a single row.

Occupation states are plain ``numpy`` boolean vectors of length ``N_t``.
"""

from __future__ import annotations

import base64
import enum
import json
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple, Sequence

import numpy as np


class LLRSError(Exception):
    """Base class for errors raised by this package."""


class InvalidInstanceError(LLRSError):
    pass


class IllegalMoveError(LLRSError):
    """A move cannot be executed on the given state (signals a solver bug)."""


class Geometry(str, enum.Enum):
    CHAIN = "chain"
    GRID = "grid"


class Kind(enum.IntEnum):
    DISPLACE_FORWARD = 0
    DISPLACE_BACKWARD = 1
    EXTRACT = 2
    IMPLANT = 3

    @property
    def is_displacement(self) -> bool:
        return self <= Kind.DISPLACE_BACKWARD


class Axis(enum.IntEnum):
    ROW = 0
    COLUMN = 1


_FWD, _BWD, _EXT, _IMP = Kind.DISPLACE_FORWARD, Kind.DISPLACE_BACKWARD, Kind.EXTRACT, Kind.IMPLANT


def make_rng(seed: int | None) -> np.random.Generator:
    """Seeded counter-based generator (Philox-4x64) used across the package."""
    return np.random.Generator(np.random.Philox(seed))


def snap_to_grid(freqs, resolution: float):
    """Round frequencies to integer multiples of ``resolution``."""
    return np.round(np.asarray(freqs, dtype=float) / resolution) * resolution


@dataclass(frozen=True)
class TrapArray:
    """Static trap grid: column/row RF tones and pixel centers."""

    geometry: Geometry
    n_tx: int
    n_ty: int
    tone_x: np.ndarray
    tone_y: np.ndarray
    pixel_center: np.ndarray  # (N_t, 2) as (x, y)
    image_shape: tuple[int, int] = (1024, 1024)  # (height, width)

    def __post_init__(self):
        if self.n_tx < 1 or self.n_ty < 1:
            raise InvalidInstanceError("trap array needs at least one row and column")
        if self.geometry is Geometry.CHAIN and self.n_ty != 1:
            raise InvalidInstanceError("a chain has exactly one row")
        if len(self.tone_x) != self.n_tx or len(self.tone_y) != self.n_ty:
            raise InvalidInstanceError("tone arrays must match the grid shape")
        for tones in (self.tone_x, self.tone_y):
            if np.any(np.diff(tones) <= 0):
                raise InvalidInstanceError("tones must be strictly increasing")
        pc = np.asarray(self.pixel_center)
        if pc.shape != (self.n_traps, 2):
            raise InvalidInstanceError("one pixel center per trap is required")
        h, w = self.image_shape
        if np.any(pc < 0) or np.any(pc[:, 0] >= w) or np.any(pc[:, 1] >= h):
            raise InvalidInstanceError("trap pixel center outside the image")

    @property
    def n_traps(self) -> int:
        return self.n_tx * self.n_ty

    @property
    def shape(self) -> tuple[int, int]:
        """(rows, columns), the shape of a state reshaped as a 2D array."""
        return (self.n_ty, self.n_tx)

    def index(self, i: int, j: int) -> int:
        return j * self.n_tx + i

    @classmethod
    def chain(cls, n: int, **kw) -> "TrapArray":
        return cls.grid(n, 1, geometry=Geometry.CHAIN, **kw)

    @classmethod
    def grid(
        cls,
        n_tx: int,
        n_ty: int,
        *,
        geometry: Geometry = Geometry.GRID,
        pitch: float = 8.0,
        origin: tuple[float, float] | None = None,
        image_shape: tuple[int, int] | None = None,
        center_freq: float = 100e6,
        band: float = 100e6,
        freq_resolution: float = 100e3,
    ) -> "TrapArray":
        """Regular grid with evenly spaced pixel centers and AOD tones.

        Tones are centered on ``center_freq`` and spread over at most
        ``band`` with spacing snapped to multiples of ``freq_resolution``
        (each static tone is then periodic over one waveform duration).
        """
        if image_shape is None:
            image_shape = (1024, 1024)
        h, w = image_shape
        if origin is None:
            origin = ((w - (n_tx - 1) * pitch) / 2, (h - (n_ty - 1) * pitch) / 2)
        xs = origin[0] + pitch * np.arange(n_tx)
        ys = origin[1] + pitch * np.arange(n_ty)
        px, py = np.meshgrid(xs, ys)
        centers = np.stack([px.ravel(), py.ravel()], axis=1)

        def tones(n):
            spacing = max(freq_resolution, snap_to_grid(min(1e6, band / max(n, 1)), freq_resolution))
            f = center_freq + spacing * (np.arange(n) - (n - 1) / 2)
            return snap_to_grid(f, freq_resolution)

        return cls(geometry, n_tx, n_ty, tones(n_tx), tones(n_ty), centers, tuple(image_shape))


class Move(NamedTuple):
    """Elementary operation on a contiguous block ``[lo, hi]`` of one line.

    ``axis=ROW`` acts along row ``line`` (positions are column indices);
    ``axis=COLUMN`` acts along column ``line`` (positions are row indices).
    Displacements shift the block by exactly one site.
    """

    kind: Kind
    axis: Axis
    line: int
    lo: int
    hi: int

    def sites(self, n_tx: int) -> range:
        """Flat indices of the block plus, for displacements, the destination."""
        kind, axis, line, lo, hi = self
        if kind == 0:
            hi += 1
        elif kind == 1:
            lo -= 1
        if axis == 0:
            base = line * n_tx
            return range(base + lo, base + hi + 1)
        return range(lo * n_tx + line, hi * n_tx + line + 1, n_tx)

    def to_dict(self) -> dict:
        return {"kind": self.kind.name.lower(), "axis": self.axis.name.lower(),
                "line": self.line, "lo": self.lo, "hi": self.hi}

    @classmethod
    def from_dict(cls, d: dict) -> "Move":
        return cls(Kind[d["kind"].upper()], Axis[d["axis"].upper()], int(d["line"]), int(d["lo"]), int(d["hi"]))


# A batch is a list of moves sharing kind and axis, touching disjoint traps.
Batch = list


def check_batch(batch: Sequence[Move], n_tx: int) -> None:
    if not batch:
        return
    kinds = {(m.kind, m.axis) for m in batch}
    if len(kinds) != 1:
        raise IllegalMoveError("batch mixes move kinds or axes")
    seen: set[int] = set()
    for m in batch:
        s = m.sites(n_tx)
        if seen.intersection(s):
            raise IllegalMoveError(f"trap shared by two moves of a batch: {m}")
        seen.update(s)


@dataclass
class ProblemInstance:
    traps: TrapArray
    initial: np.ndarray
    target: np.ndarray
    seed: int | None = None
    epsilon: float | None = None

    @property
    def n_target(self) -> int:
        return int(self.target.sum())

    @property
    def solvable(self) -> bool:
        return int(self.initial.sum()) >= self.n_target

    def to_json(self) -> str:
        return json.dumps({
            "geometry": self.traps.geometry.value,
            "n_tx": self.traps.n_tx,
            "n_ty": self.traps.n_ty,
            "epsilon": self.epsilon,
            "n_target": self.n_target,
            "seed": self.seed,
            "bits": pack_bits(self.initial),
        })

    @classmethod
    def from_json(cls, text: str, **trap_kw) -> "ProblemInstance":
        d = json.loads(text)
        n_tx, n_ty = int(d["n_tx"]), int(d["n_ty"])
        if Geometry(d["geometry"]) is Geometry.CHAIN:
            traps = TrapArray.chain(n_tx, **trap_kw)
        else:
            traps = TrapArray.grid(n_tx, n_ty, **trap_kw)
        initial = unpack_bits(d["bits"], n_tx * n_ty)
        target = target_center_compact(traps, int(d["n_target"]))
        return cls(traps, initial, target, d.get("seed"), d.get("epsilon"))


def pack_bits(bits: np.ndarray) -> str:
    """Base64 of the row-major bit vector, LSB-first within each byte."""
    return base64.b64encode(np.packbits(np.asarray(bits, dtype=bool), bitorder="little").tobytes()).decode()


def unpack_bits(text: str, n: int) -> np.ndarray:
    raw = np.frombuffer(base64.b64decode(text), dtype=np.uint8)
    return np.unpackbits(raw, count=n, bitorder="little").astype(bool)


def target_center_compact(traps: TrapArray, n_target: int) -> np.ndarray:
    """Center-compact target occupation.

    Chain: the ``n_target`` contiguous traps closest to the center, ties
    toward lower index.  Grid: a centered band of full rows; a remainder
    fills a centered partial row directly after the band.
    """
    n_t = traps.n_traps
    if n_target < 0 or n_target > n_t:
        raise InvalidInstanceError(f"n_target={n_target} outside [0, {n_t}]")
    out = np.zeros(traps.shape, dtype=bool)
    n_full, rem = divmod(n_target, traps.n_tx)
    rows_used = n_full + (rem > 0)
    r0 = (traps.n_ty - rows_used) // 2
    out[r0:r0 + n_full, :] = True
    if rem:
        c0 = (traps.n_tx - rem) // 2
        out[r0 + n_full, c0:c0 + rem] = True
    return out.ravel()


def sample_instance(traps: TrapArray, epsilon: float, n_target: int, seed: int | None = None) -> ProblemInstance:
    if not 0.0 <= epsilon <= 1.0:
        raise InvalidInstanceError(f"epsilon={epsilon} is not a probability")
    if n_target > traps.n_traps:
        raise InvalidInstanceError(f"n_target={n_target} exceeds {traps.n_traps} traps")
    initial = make_rng(seed).random(traps.n_traps) < epsilon
    return ProblemInstance(traps, initial, target_center_compact(traps, n_target), seed, epsilon)


# -- executor ---------------------------------------------------------------

def _line_geometry(move: Move, n_tx: int, n_traps: int) -> tuple[int, int, int]:
    """(base, stride, length) of the line a move acts on."""
    if move.axis == Axis.ROW:
        return move.line * n_tx, 1, n_tx
    return move.line, n_tx, n_traps // n_tx


def _apply_inplace(occ: bytearray, held: bytearray, move: Move, n_tx: int, strict: bool = True) -> None:
    kind, axis, line, lo, hi = move
    if axis == Axis.ROW:
        base, st, n, n_lines = line * n_tx, 1, n_tx, len(occ) // n_tx
    else:
        base, st, n, n_lines = line, n_tx, len(occ) // n_tx, n_tx
    if lo < 0 or hi >= n or lo > hi or not 0 <= line < n_lines:
        raise IllegalMoveError(f"move out of bounds: {move}")
    first, last = base + lo * st, base + hi * st
    block = slice(first, last + 1, st)
    if kind == _EXT:
        if strict and not any(o and not h for o, h in zip(occ[block], held[block])):
            raise IllegalMoveError(f"nothing to extract: {move}")
        held[block] = bytes(a | b for a, b in zip(occ[block], held[block]))
        return
    if kind == _IMP:
        if strict and not any(held[block]):
            raise IllegalMoveError(f"nothing to implant: {move}")
        held[block] = bytes(hi - lo + 1)
        return
    if kind == _FWD:
        if hi + 1 >= n:
            raise IllegalMoveError(f"displacement leaves the line: {move}")
        dest, vac, d = last + st, first, st
    else:
        if lo == 0:
            raise IllegalMoveError(f"displacement leaves the line: {move}")
        dest, vac, d = first - st, last, -st
    if strict:
        if not any(occ[block]):
            raise IllegalMoveError(f"displacing an empty block: {move}")
        if occ[dest]:
            raise IllegalMoveError(f"destination occupied: {move}")
    elif occ[dest] and occ[dest - d]:
        # collision in the physical executor: both atoms are lost
        occ[dest] = held[dest] = 0
        occ[dest - d] = held[dest - d] = 0
    moved = slice(first + d, last + d + 1, st)
    o, h = occ[block], held[block]
    occ[moved] = o
    held[moved] = h
    occ[vac] = held[vac] = 0


def _as_bytes(a) -> bytearray:
    return bytearray(np.asarray(a, dtype=bool).ravel().astype(np.uint8).tobytes())


def _as_bool(b: bytearray) -> np.ndarray:
    return np.frombuffer(bytes(b), dtype=np.uint8).astype(bool)


def apply_move(state: np.ndarray, move: Move, n_tx: int, held: np.ndarray | None = None):
    """Apply one move and return ``(new_state, held_flags)``.

    ``held`` flags atoms currently held by the dynamic (moving) traps;
    extraction sets them and implantation clears them, while displacement
    carries them along with the atoms.
    """
    occ = _as_bytes(state)
    flags = bytearray(len(occ)) if held is None else _as_bytes(held)
    _apply_inplace(occ, flags, move, n_tx)
    return _as_bool(occ), _as_bool(flags)


def execute_moves(state: np.ndarray, moves: Iterable[Move], n_tx: int, held: np.ndarray | None = None,
                  strict: bool = True):
    occ = _as_bytes(state)
    flags = bytearray(len(occ)) if held is None else _as_bytes(held)
    for m in moves:
        _apply_inplace(occ, flags, m, n_tx, strict)
    return _as_bool(occ), _as_bool(flags)


def execute_solution(instance: ProblemInstance, batches: Iterable[Sequence[Move]]) -> np.ndarray:
    """Fold every move of every batch over the initial state, in order."""
    occ = _as_bytes(instance.initial)
    held = bytearray(len(occ))
    n_tx = instance.traps.n_tx
    for batch in batches:
        if len(batch) > 1:
            check_batch(batch, n_tx)
        for m in batch:
            _apply_inplace(occ, held, m, n_tx)
    return _as_bool(occ)


def reached_target(state: np.ndarray, target: np.ndarray) -> bool:
    """True when every target trap is occupied; atoms elsewhere are ignored."""
    return bool(np.all(np.asarray(state)[np.asarray(target, dtype=bool)]))
