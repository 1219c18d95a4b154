import cmath
import itertools
import json
import math

import numpy as np
import pytest

from shallowfp.coeffgen import ParamVector, random_set
from shallowfp.optimizer import (Objective, SearchResult, SearchSpaceTooLarge, acceptance_curve, brute_force,
                                 coordinate_descent, coords_to_set, epsilon_objective, hybrid_search,
                                 objective_separation, random_restarts, separation_objective)
from shallowfp.simulator import NoiseModel
from shallowfp.spectral import epsilon


def oracle_epsilon(coords, p):
    """epsilon of the subset-sum set spanned by (t0, t1, .., tm), by direct enumeration."""
    t0, *T = coords
    ks = [(t0 + sum(s)) % p for r in range(len(T) + 1) for s in itertools.combinations(T, r)]
    return max(abs(sum(cmath.exp(2j * math.pi * k * x / p) for k in ks)) ** 2 / len(ks) ** 2 for x in range(1, p))


def global_min(p, n):
    return min(oracle_epsilon(c, p) for c in itertools.product(range(p), repeat=n))


class TestObjective:
    def test_memoised(self):
        calls = []
        obj = Objective(lambda c: calls.append(c) or sum(c), 7, "shallow", "sum")
        assert obj([1, 2]) == obj([8, 9]) == 3
        assert len(calls) == 1 and obj.evaluations == 1

    def test_epsilon_matches_oracle(self, rng):
        obj = epsilon_objective(31)
        for _ in range(10):
            c = rng.integers(0, 31, size=3).tolist()
            assert obj(c) == pytest.approx(oracle_epsilon(c, 31), abs=1e-12)

    def test_kinds(self):
        assert coords_to_set([1, 2], 17, "deep").coeffs == (1, 2)
        assert sorted(coords_to_set([1, 2], 17, "shallow").coeffs) == [1, 3]
        with pytest.raises(ValueError):
            coords_to_set([1], 17, "wide")


class TestDescent:
    def test_monotone_trace(self, rng):
        for seed in range(10):
            res = coordinate_descent(rng.integers(0, 17, size=4).tolist(), epsilon_objective(17))
            values = [v for _, v in res.trace]
            assert all(b <= a for a, b in zip(values, values[1:]))
            assert values[-1] == res.best_value

    def test_coordinatewise_minimum(self):
        obj = epsilon_objective(17)
        res = coordinate_descent([3, 1, 4, 1], obj)
        for i in range(4):
            for v in range(17):
                trial = list(res.best_coords)
                trial[i] = v
                assert obj(trial) >= res.best_value

    def test_stops_at_minimum(self):
        obj = epsilon_objective(17)
        first = coordinate_descent([3, 1, 4, 1], obj)
        again = coordinate_descent(first.best_coords, obj)
        assert again.sweeps == 1
        assert again.best_coords == first.best_coords and again.trace == [(0, first.best_value)]

    @pytest.mark.parametrize("p", [5, 7, 11, 13])
    def test_restarts_reach_global(self, p):
        best, runs = random_restarts(epsilon_objective(p), 3, restarts=20, seed=1)
        assert len(runs) == 20
        assert best.best_value == pytest.approx(global_min(p, 3), abs=1e-12)

    def test_deterministic(self):
        a, _ = random_restarts(epsilon_objective(17), 4, restarts=5, seed=3)
        b, _ = random_restarts(epsilon_objective(17), 4, restarts=5, seed=3)
        assert a.to_json() == b.to_json()

    def test_beats_random_sets(self):
        best, _ = random_restarts(epsilon_objective(17), 4, restarts=20, seed=0)
        rand = [epsilon(random_set(17, 8, s)) for s in range(100)]
        assert best.best_value < np.median(rand)


class TestBruteForce:
    def test_p5_m1(self):
        res = brute_force(epsilon_objective(5), [range(5)] * 2)
        want = global_min(5, 2)
        assert res.best_value == pytest.approx(want, abs=1e-12)
        assert oracle_epsilon(res.best_coords, 5) == pytest.approx(want, abs=1e-12)

    def test_first_minimum(self):
        obj = Objective(lambda c: (c[0] - 3) ** 2 % 2, 5, "deep", "toy")  # ties at 1 and 3
        assert brute_force(obj, [range(5)]).best_coords == [1]

    def test_fixed(self):
        obj = Objective(lambda c: abs(c[0] - 3) + abs(c[1] - 1), 5, "deep", "toy")
        res = brute_force(obj, [range(5)], fixed={0: 0})
        assert res.best_coords == [0, 1] and res.best_value == 3

    def test_cap(self):
        with pytest.raises(SearchSpaceTooLarge):
            brute_force(epsilon_objective(101), [range(101)] * 5, cap=10**6)
        with pytest.raises(SearchSpaceTooLarge):
            hybrid_search([0] * 5, epsilon_objective(101), 1, 4, cap=10**6)


class TestHybrid:
    def test_p5_exact(self):
        res = hybrid_search([0, 0], epsilon_objective(5), 1, 1)
        assert res.best_value == pytest.approx(global_min(5, 2), abs=1e-12)

    def test_empty_suffix_is_descent(self):
        obj = epsilon_objective(17)
        a = hybrid_search([3, 1, 4], obj, 3, 0)
        b = coordinate_descent([3, 1, 4], obj)
        assert a.best_coords == b.best_coords and a.trace == b.trace

    def test_sandwich(self, rng):
        p = 11
        gmin = global_min(p, 3)
        for _ in range(5):
            init = rng.integers(0, p, size=3).tolist()
            obj = epsilon_objective(p)
            h = hybrid_search(init, obj, 1, 2)
            d = coordinate_descent(init, obj)
            assert gmin - 1e-12 <= h.best_value <= obj(init)
            assert gmin - 1e-12 <= d.best_value <= obj(init)
            values = [v for _, v in h.trace]
            assert all(b <= a for a, b in zip(values, values[1:]))

    def test_split_must_cover(self):
        with pytest.raises(ValueError):
            hybrid_search([0, 0, 0], epsilon_objective(5), 1, 1)


class TestSeparation:
    def test_window_boundaries(self):
        pv = ParamVector(6, (4, 8, 12), 17)
        with pytest.raises(ValueError):
            objective_separation(pv, 16, 17)
        curve = acceptance_curve(pv, 34, None)
        v = objective_separation(pv, 34, 34)
        assert v == pytest.approx(max(curve[r] for r in range(1, 35) if r % 17) - curve[34])
        # member lengths never count as non-members
        assert objective_separation(pv, 17, 17) == pytest.approx(max(curve[1:17]) - 1.0)

    def test_sign(self):
        pv = ParamVector(6, (4, 8, 12), 17)
        assert objective_separation(pv, 40, 34, sign="literal") == -objective_separation(pv, 40, 34)
        with pytest.raises(ValueError):
            objective_separation(pv, 40, 34, sign="other")

    def test_noiseless_equals_closed_form(self):
        pv = ParamVector(6, (4, 8, 12), 17)
        a = objective_separation(pv, 60, 51, NoiseModel.noiseless())
        b = objective_separation(pv, 60, 51, None)
        assert a == pytest.approx(b, abs=1e-12)

    def test_good_params_beat_degenerate(self):
        nm = NoiseModel()
        obj = separation_objective(17, "shallow", 6 * 17 + 9, 6 * 17, nm)
        assert obj.name == "diff_noisy"
        assert obj([6, 4, 8, 12]) < obj([1, 1, 1, 1])
        assert separation_objective(17, "shallow", 44, 17, nm).name == "diff_prime_noisy"

    def test_noise_lowers_member_probe(self):
        pv = ParamVector(6, (4, 8, 12), 17)
        clean = acceptance_curve(pv, 34, None)
        noisy = acceptance_curve(pv, 34, NoiseModel())
        assert noisy[34] < clean[34]


class TestResultIO:
    def test_json(self):
        res = coordinate_descent([1, 2, 3], epsilon_objective(17))
        back = SearchResult.from_json(res.to_json())
        assert back.to_dict() == res.to_dict()
        assert json.loads(res.to_json())["best_coords"] == res.best_coords
        assert isinstance(back.best_params, ParamVector)

    def test_trace_csv(self):
        res = coordinate_descent([1, 2, 3], epsilon_objective(17))
        lines = res.trace_csv().splitlines()
        assert lines[0] == "iteration,value"
        assert len(lines) == len(res.trace) + 1
