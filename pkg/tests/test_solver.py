import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from llrs.acceptance import brute_force_min_displacement, executed_atom_steps
from llrs.bench import fit_scaling
from llrs.core import (Axis, Kind, Move, ProblemInstance, TrapArray, execute_solution, reached_target,
                       sample_instance)
from llrs.solver import (Solution, assign_1d, batch_ops, count_displacement, count_transfers, solve,
                         solve_chain_exact, solve_grid_redrec, total_displacement, unbatched)

F, B = Kind.DISPLACE_FORWARD, Kind.DISPLACE_BACKWARD


def chain(n, occ):
    a = np.zeros(n, bool)
    a[list(occ)] = True
    return a


def run(initial, sol, n_tx=None):
    n_tx = n_tx or len(initial)
    inst = ProblemInstance(TrapArray.chain(len(initial)) if n_tx == len(initial) else None, initial, initial)
    return execute_solution(inst, unbatched(sol))


class TestChain:
    def test_identity(self):
        s = chain(6, [1, 2])
        sol = solve_chain_exact(s, s)
        assert sol.moves == [] and count_displacement(sol) == 0

    def test_tie_prefers_lower_source(self):
        sol = solve_chain_exact(chain(5, [0, 4]), chain(5, [2]))
        assert count_displacement(sol) == 2
        assert sol.moves == [Move(F, Axis.ROW, 0, 0, 0), Move(F, Axis.ROW, 0, 1, 1)]
        assert np.flatnonzero(run(chain(5, [0, 4]), sol)).tolist() == [2, 4]

    def test_three_atoms(self):
        ini, tgt = chain(7, [0, 1, 6]), chain(7, [2, 3, 4])
        sol = solve_chain_exact(ini, tgt)
        assert total_displacement(sol) == 6 == brute_force_min_displacement(ini, tgt)
        assert np.array_equal(run(ini, sol), tgt)

    def test_block_moves_count_once(self):
        # two adjacent atoms travelling together form one block per step
        sol = solve_chain_exact(chain(6, [0, 1]), chain(6, [2, 3]))
        assert count_displacement(sol) == 2 and total_displacement(sol) == 4

    def test_unsolvable_flag(self):
        sol = solve_chain_exact(chain(5, [0]), chain(5, [1, 2]))
        assert not sol.solvable

    def test_assign_1d_matches_lsa(self):
        from scipy.optimize import linear_sum_assignment

        rng = np.random.default_rng(1)
        for _ in range(200):
            n = int(rng.integers(2, 20))
            src = sorted(rng.choice(40, n, replace=False).tolist())
            k = int(rng.integers(1, n + 1))
            tgt = sorted(rng.choice(40, k, replace=False).tolist())
            pairs = assign_1d(src, tgt)
            cost = np.abs(np.subtract.outer(np.array(src), np.array(tgt)))
            r, c = linear_sum_assignment(cost)
            assert sum(abs(a - b) for a, b in pairs) == cost[r, c].sum()

    @settings(max_examples=300, deadline=None)
    @given(st.integers(1, 12).flatmap(lambda n: st.tuples(
        st.lists(st.booleans(), min_size=n, max_size=n), st.lists(st.booleans(), min_size=n, max_size=n))))
    def test_optimal_against_brute_force(self, data):
        ini, tgt = np.array(data[0]), np.array(data[1])
        if tgt.sum() > ini.sum():
            return
        sol = solve_chain_exact(ini, tgt)
        assert executed_atom_steps(ini, sol.moves, len(ini)) == brute_force_min_displacement(ini, tgt)
        assert reached_target(run(ini, sol), tgt)

    @pytest.mark.parametrize("n", [16, 64])
    def test_oracle_random_chains(self, n):
        t = TrapArray.chain(n)
        for s in range(1000):
            inst = sample_instance(t, 0.6, n // 2, seed=s)
            sol = solve(inst)
            if inst.solvable:
                assert reached_target(execute_solution(inst, sol.batches), inst.target)


class TestRedRec:
    def test_identity(self):
        t = TrapArray.grid(4, 8)
        inst = sample_instance(t, 0.0, 16)
        sol = solve_grid_redrec(inst.target, inst.target, t.shape)
        assert sol.moves == []

    def test_two_by_four_redistribution(self):
        t = TrapArray.grid(2, 4)
        ini = np.zeros(8, bool)
        ini[[0 * 2 + 0, 1 * 2 + 0, 2 * 2 + 0, 3 * 2 + 1]] = True  # column 0 holds 3, column 1 holds 1
        tgt = np.zeros(8, bool)
        tgt[[2, 3, 4, 5]] = True  # rows 1..2, two per column
        sol = solve_grid_redrec(ini, tgt, t.shape)
        row_moves = [m for m in sol.moves if m.axis == Axis.ROW and m.kind <= B]
        assert len(row_moves) == 1 and row_moves[0].lo == 0
        assert count_transfers(sol) == 2  # one extract, one implant
        final = execute_solution(ProblemInstance(t, ini, tgt), unbatched(sol))
        assert reached_target(final, tgt)

    @pytest.mark.parametrize("shape", [(8, 16), (16, 32)])
    def test_oracle_random_grids(self, shape):
        t = TrapArray.grid(*shape)
        n_target = shape[0] * shape[0]
        for s in range(1000 if shape == (8, 16) else 300):
            inst = sample_instance(t, 0.6, n_target, seed=s)
            sol = solve(inst, batched=False)
            if inst.solvable:
                assert reached_target(execute_solution(inst, unbatched(sol)), inst.target)
                assert reached_target(execute_solution(inst, batch_ops(sol, t.n_tx).batches), inst.target)

    def test_unsolvable_flag(self):
        t = TrapArray.grid(4, 8)
        inst = sample_instance(t, 0.2, 16, seed=0)
        assert not inst.solvable and not solve(inst).solvable

    def test_solution_length_linear(self):
        sizes, lengths = [], []
        for n in (8, 16, 32):
            t = TrapArray.grid(n, 2 * n)
            ls = [len(solve(sample_instance(t, 0.6, n * n, seed=s), batched=False).moves) for s in range(10)]
            sizes.append(t.n_traps)
            lengths.append(np.mean(ls))
        slope = fit_scaling(sizes, lengths).slope
        assert 0.7 <= slope <= 1.3


class TestBatching:
    def test_single_move(self):
        sol = batch_ops(Solution([Move(F, Axis.ROW, 0, 0, 0)]), 4)
        assert sol.batches == [[Move(F, Axis.ROW, 0, 0, 0)]]

    def test_disjoint_rows_share_batch(self):
        m1, m2 = Move(F, Axis.ROW, 0, 0, 0), Move(F, Axis.ROW, 1, 0, 0)
        assert batch_ops(Solution([m1, m2]), 4).batches == [[m1, m2]]

    def test_dependency_splits(self):
        a = Move(F, Axis.ROW, 0, 0, 0)  # 0 -> 1
        b = Move(F, Axis.ROW, 0, 1, 1)  # 1 -> 2, sources a's destination
        assert batch_ops(Solution([a, b]), 4).batches == [[a], [b]]

    def test_kinds_never_mix(self):
        a = Move(F, Axis.ROW, 0, 0, 0)
        b = Move(B, Axis.ROW, 1, 2, 2)
        assert len(batch_ops(Solution([a, b]), 4).batches) == 2

    def test_json_round_trip(self):
        t = TrapArray.grid(8, 16)
        sol = solve(sample_instance(t, 0.6, 64, seed=2))
        back = Solution.from_json(sol.to_json())
        assert back.batches == sol.batches
