import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from llrs.core import (Axis, IllegalMoveError, InvalidInstanceError, Kind, Move, ProblemInstance,
                       TrapArray, apply_move, execute_moves, execute_solution, make_rng, pack_bits,
                       sample_instance, target_center_compact, unpack_bits)

F, B, X, I = Kind.DISPLACE_FORWARD, Kind.DISPLACE_BACKWARD, Kind.EXTRACT, Kind.IMPLANT


def bits(s):
    return np.array([c == "1" for c in s])


def to_str(a):
    return "".join("1" if v else "0" for v in a)


class TestTrapArray:
    def test_grid_shape_and_index(self):
        t = TrapArray.grid(4, 3)
        assert t.n_traps == 12
        assert t.index(1, 2) == 2 * 4 + 1

    def test_tones_increasing(self):
        t = TrapArray.grid(8, 5)
        assert np.all(np.diff(t.tone_x) > 0) and np.all(np.diff(t.tone_y) > 0)

    def test_pixel_centers_inside_image(self):
        t = TrapArray.grid(32, 64)
        h, w = t.image_shape
        c = t.pixel_center
        assert c[:, 0].min() >= 0 and c[:, 0].max() < w
        assert c[:, 1].min() >= 0 and c[:, 1].max() < h

    def test_outside_image_rejected(self):
        with pytest.raises(InvalidInstanceError):
            TrapArray.chain(256)  # 255 * 8 px does not fit in 1024

    def test_chain_is_one_row(self):
        t = TrapArray.chain(7)
        assert t.n_ty == 1 and t.n_tx == 7


class TestTargets:
    def test_chain_single_center(self):
        assert to_str(target_center_compact(TrapArray.chain(5), 1)) == "00100"

    def test_chain_even_pair(self):
        assert to_str(target_center_compact(TrapArray.chain(6), 2)) == "001100"

    def test_chain_tie_breaks_low(self):
        # 6 traps, 1 target: positions 2 and 3 are equally central
        assert to_str(target_center_compact(TrapArray.chain(6), 1)) == "001000"

    def test_grid_4x8_centered_block(self):
        t = TrapArray.grid(4, 8)
        tgt = target_center_compact(t, 16).reshape(8, 4)
        assert tgt[2:6].all() and not tgt[:2].any() and not tgt[6:].any()

    def test_grid_block_minimizes_distance(self):
        # oracle: among all 4-row bands, the chosen one is closest to the centre row
        t = TrapArray.grid(4, 8)
        rows = np.flatnonzero(target_center_compact(t, 16).reshape(8, 4).any(axis=1))
        cost = lambda r0: sum(abs(r + 0.5 - 4) for r in range(r0, r0 + 4))
        assert cost(rows[0]) == min(cost(r0) for r0 in range(5))

    def test_partial_row(self):
        t = TrapArray.grid(4, 8)
        tgt = target_center_compact(t, 18).reshape(8, 4)
        assert tgt.sum() == 18
        assert tgt.sum(axis=1).tolist().count(4) == 4

    def test_too_many(self):
        with pytest.raises(InvalidInstanceError):
            target_center_compact(TrapArray.chain(4), 5)


class TestSampling:
    def test_extremes(self):
        t = TrapArray.grid(8, 16)
        assert not sample_instance(t, 0.0, 10, seed=1).initial.any()
        assert sample_instance(t, 1.0, 10, seed=1).initial.all()

    def test_reproducible(self):
        t = TrapArray.grid(8, 16)
        a = sample_instance(t, 0.6, 64, seed=42)
        b = sample_instance(t, 0.6, 64, seed=42)
        assert np.array_equal(a.initial, b.initial)

    def test_rng_is_philox(self):
        assert isinstance(make_rng(0).bit_generator, np.random.Philox)

    def test_invalid(self):
        t = TrapArray.chain(4)
        with pytest.raises(InvalidInstanceError):
            sample_instance(t, 0.5, 5)
        with pytest.raises(InvalidInstanceError):
            sample_instance(t, 1.5, 2)

    def test_json_round_trip(self):
        inst = sample_instance(TrapArray.grid(8, 16), 0.6, 64, seed=3)
        back = ProblemInstance.from_json(inst.to_json())
        assert np.array_equal(back.initial, inst.initial)
        assert np.array_equal(back.target, inst.target)
        assert back.traps.shape == inst.traps.shape

    @given(st.lists(st.booleans(), min_size=0, max_size=200))
    def test_pack_bits_round_trip(self, xs):
        a = np.array(xs, dtype=bool)
        assert np.array_equal(unpack_bits(pack_bits(a), len(a)), a)


class TestExecutor:
    def test_single_forward(self):
        out = apply_move(bits("10000"), Move(F, Axis.ROW, 0, 0, 0), 5)[0]
        assert to_str(out) == "01000"

    def test_block_forward(self):
        out = apply_move(bits("11000"), Move(F, Axis.ROW, 0, 0, 1), 5)[0]
        assert to_str(out) == "01100"

    def test_collision(self):
        with pytest.raises(IllegalMoveError):
            apply_move(bits("11100"), Move(F, Axis.ROW, 0, 1, 1), 5)

    def test_empty_block_rejected(self):
        with pytest.raises(IllegalMoveError):
            apply_move(bits("00100"), Move(F, Axis.ROW, 0, 0, 1), 5)

    def test_out_of_bounds(self):
        with pytest.raises(IllegalMoveError):
            apply_move(bits("00001"), Move(F, Axis.ROW, 0, 4, 4), 5)

    def test_backward_column(self):
        # 2 x 3 grid, atom at (col 1, row 2) moves up one row
        s = np.zeros(6, bool)
        s[2 * 2 + 1] = True
        out = apply_move(s, Move(B, Axis.COLUMN, 1, 2, 2), 2)[0]
        assert out[1 * 2 + 1] and out.sum() == 1

    def test_transfer_flags_only(self):
        s = bits("01100")
        out, held = apply_move(s, Move(X, Axis.ROW, 0, 1, 2), 5)
        assert np.array_equal(out, s) and held[1] and held[2]
        out2, held2 = apply_move(out, Move(I, Axis.ROW, 0, 1, 2), 5, held)
        assert np.array_equal(out2, s) and not held2.any()

    def test_empty_batch_list(self):
        inst = sample_instance(TrapArray.chain(8), 0.5, 2, seed=0)
        assert np.array_equal(execute_solution(inst, []), inst.initial)

    def test_disjoint_moves_commute(self):
        t = TrapArray.grid(4, 2)
        s = bits("1000" "0100")
        m1, m2 = Move(F, Axis.ROW, 0, 0, 0), Move(F, Axis.ROW, 1, 1, 1)
        a = execute_moves(s, [m1, m2], 4)[0]
        b = execute_moves(s, [m2, m1], 4)[0]
        assert np.array_equal(a, b)
        inst = ProblemInstance(t, s, np.zeros(8, bool))
        assert np.array_equal(execute_solution(inst, [[m1, m2]]), a)

    def test_nonstrict_collision_loses_both(self):
        out = execute_moves(bits("11"), [Move(F, Axis.ROW, 0, 0, 0)], 2, strict=False)[0]
        assert out.sum() == 0

    @settings(max_examples=200, deadline=None)
    @given(st.integers(0, 2**12 - 1), st.integers(0, 11), st.integers(0, 11), st.booleans())
    def test_displacement_conserves_atoms(self, word, a, b, fwd):
        s = np.array([(word >> i) & 1 for i in range(12)], dtype=bool)
        lo, hi = min(a, b), max(a, b)
        m = Move(F if fwd else B, Axis.ROW, 0, lo, hi)
        try:
            out = apply_move(s, m, 12)[0]
        except IllegalMoveError:
            return
        assert out.sum() == s.sum()

    def test_batch_permutations_agree(self):
        rng = make_rng(5)
        for _ in range(50):
            s = rng.random(16) < 0.5
            rows = rng.permutation(4)[:3]
            moves = []
            for r in rows:
                line = s[r * 4:(r + 1) * 4]
                occ = np.flatnonzero(line)
                if len(occ) and occ[-1] < 3 and not line[occ[-1] + 1]:
                    moves.append(Move(F, Axis.ROW, int(r), int(occ[-1]), int(occ[-1])))
            outs = {to_str(execute_moves(s, p, 4)[0]) for p in itertools.permutations(moves)}
            assert len(outs) <= 1
