import itertools

import numpy as np
import pytest

from epruning import bench
from epruning.bde import BdeParams


def test_onemax_values():
    assert bench.onemax(np.ones(12)) == 0
    assert bench.onemax(np.zeros(12)) == 12
    assert bench.onemax(np.array([1, 0] * 6)) == 6


def test_state_index_round_trip():
    for i in range(64):
        assert bench.state_index(bench.index_state(i, 6)) == i
    assert bench.state_index([1, 0, 1]) == 5


class TestTable:
    def test_deterministic(self):
        a = bench.random_table_objective(8, 3)
        b = bench.random_table_objective(8, 3)
        np.testing.assert_array_equal(a.table, b.table)

    def test_index_zero_state(self):
        obj = bench.random_table_objective(5, 0)
        assert obj(np.zeros(5)) == obj.table[0]
        assert obj(np.array([0, 0, 0, 1, 1])) == obj.table[3]

    def test_dimension_cap(self):
        with pytest.raises(ValueError):
            bench.random_table_objective(13, 0)


class TestBruteForce:
    def test_onemax(self):
        state, energy = bench.brute_force_optimum(bench.onemax, 4)
        np.testing.assert_array_equal(state, [1, 1, 1, 1])
        assert energy == 0

    def test_constant_ties_to_zero_state(self):
        state, energy = bench.brute_force_optimum(lambda s: 2.5, 4)
        np.testing.assert_array_equal(state, [0, 0, 0, 0])
        assert energy == 2.5

    def test_table_matches_independent_scan(self):
        obj = bench.random_table_objective(8, 11)
        # oracle: itertools product in lexicographic order == binary order
        values = [obj(np.array(bits)) for bits in itertools.product((0, 1), repeat=8)]
        state, energy = bench.brute_force_optimum(obj, 8)
        assert energy == min(values) == obj.table.min()
        assert bench.state_index(state) == int(np.argmin(values))

    def test_cap(self):
        with pytest.raises(ValueError):
            bench.brute_force_optimum(bench.onemax, 21)


class TestRunner:
    def test_zero_steps(self):
        res = bench.run_bde_benchmark(bench.onemax_objective(6), BdeParams(), 0, range(20))
        for seed, hist in res.histories.items():
            assert len(hist) == 1
            assert res.successes[seed] == (hist[0] == 0)

    def test_minimal_population_runs(self):
        res = bench.run_bde_benchmark(bench.onemax_objective(6), BdeParams(), 20, range(3), S=4)
        assert 0 <= res.success_rate <= 1

    def test_histories_non_increasing(self):
        res = bench.run_bde_benchmark(bench.random_table_objective(9, 2), BdeParams(), 60, range(10))
        for hist in res.histories.values():
            assert np.all(np.diff(hist) <= 0)

    def test_csv(self, tmp_path):
        res = bench.run_bde_benchmark(bench.onemax_objective(4), BdeParams(), 3, [7, 8])
        res.to_csv(tmp_path / "b.csv")
        lines = (tmp_path / "b.csv").read_text().splitlines()
        assert lines[0] == "seed,step,best_energy"
        assert len(lines) == 1 + 2 * 4
