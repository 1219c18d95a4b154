"""End-to-end acceptance checks, one test per criterion.

Run with ``pytest tests/test_acceptance.py -s`` to see the PASS/FAIL lines.
"""
import itertools
import math
import time
from contextlib import contextmanager

import numpy as np
import pytest

from hardware_counts import P as TABLE_P, SHALLOW_COUNTS, SHOTS, STANDARD_COUNTS
from shallowfp.circuit import best_nn_cx_count, build_aikps, build_deep, build_shallow, metrics, transpile_ry_to_rz
from shallowfp.coeffgen import ParamVector, explicit_set, find_gap_params, random_set, subset_sum_set
from shallowfp.optimizer import coordinate_descent, epsilon_objective, hybrid_search, random_restarts
from shallowfp.simulator import (NoiseModel, ShotRecord, accept_probability_pure, build_word_circuit, classify,
                                 noisy_acceptance_curve, run_pure, sample_shots)
from shallowfp.spectral import (acceptance_probability, additive_energy, bias_energy_terms, epsilon, epsilon_of,
                                solution_count_profile, verify_bias_energy_bound)

REF_PARAMS = ParamVector(6, (4, 8, 12), 17)


# collected by the terminal summary hook in conftest.py
RESULTS: dict[int, str] = {}


@contextmanager
def criterion(n, budget=None):
    start = time.perf_counter()
    try:
        yield
        elapsed = time.perf_counter() - start
        if budget is not None:
            assert elapsed < budget, f"took {elapsed:.1f}s, budget {budget}s"
    except BaseException as exc:
        RESULTS[n] = f"FAIL criterion {n}: {str(exc).splitlines()[0] if str(exc) else type(exc).__name__}"
        print("\n" + RESULTS[n])
        raise
    RESULTS[n] = f"PASS criterion {n} ({time.perf_counter() - start:.2f}s)"
    print("\n" + RESULTS[n])


def gap_cases():
    for p in (31, 127, 257, 1013):
        for m in range(2, 6):
            if 3**m <= p:
                yield p, m, find_gap_params(p, m)


def test_criterion_01_gap_error_bound():
    with criterion(1, budget=10):
        cases = list(gap_cases())
        assert len(cases) == 13
        for p, m, pv in cases:
            assert epsilon(subset_sum_set(pv)) <= math.sqrt(p / 2**m) + 1e-9, (p, m)


def test_criterion_02_counts_and_energy():
    with criterion(2, budget=30):
        for p, m, pv in gap_cases():
            A = list(subset_sum_set(pv).coeffs)
            R = solution_count_profile(pv)
            for n in itertools.product(range(3), repeat=m):
                target = (2 * pv.t0 + sum(ni * t for ni, t in zip(n, pv.T))) % p
                assert R[target] == 2 ** sum(1 for ni in n if ni == 1)
            energy = additive_energy(subset_sum_set(pv))
            assert energy == int((R.astype(np.int64) ** 2).sum())
            assert energy <= 2 ** (3 * m)
            brute = sum(1 for a, b, c, d in itertools.product(A, repeat=4) if (a + b - c - d) % p == 0)
            assert brute == energy, (p, m)


def test_criterion_03_fourier_energy_sandwich():
    with criterion(3):
        for seed in range(100):
            rng = np.random.default_rng(seed)
            A = explicit_set(rng.choice(101, size=int(rng.integers(1, 102)), replace=False), 101)
            assert verify_bias_energy_bound(A, tol=1e-12), seed
        for p, m, pv in gap_cases():
            assert verify_bias_energy_bound(subset_sum_set(pv), tol=1e-12), (p, m)
            lower, middle, upper = bias_energy_terms(subset_sum_set(pv))
            assert lower <= middle + 1e-12 and middle <= upper + 1e-12


def test_criterion_04_circuit_equivalence():
    with criterion(4):
        p = 17
        K = subset_sum_set(REF_PARAMS)
        d = K.d
        for x in range(p):
            s = run_pure(build_shallow(REF_PARAMS, x)).vector
            dp = run_pure(build_deep(K, x)).vector
            closed = np.zeros(2 * d)
            for j, k in enumerate(K.coeffs):
                half = 2 * math.pi * k * x / p
                closed[j] = math.cos(half) / math.sqrt(d)
                closed[j + d] = math.sin(half) / math.sqrt(d)
            np.testing.assert_allclose(s, dp, atol=1e-9)
            np.testing.assert_allclose(s, closed, atol=1e-9)
            formula = sum(math.cos(2 * math.pi * k * x / p) for k in K.coeffs) ** 2 / d**2
            assert accept_probability_pure(build_shallow(REF_PARAMS, x)) == pytest.approx(formula, abs=1e-9)


def test_criterion_05_depth_width_cx():
    with criterion(5):
        for m in range(1, 11):
            c = build_shallow(ParamVector(1, tuple(range(1, m + 1)), 1013), 1)
            assert (c.depth, c.width) == (m + 2, m + 1)
        for m in range(1, 9):
            count, _ = best_nn_cx_count(build_shallow(ParamVector(1, tuple(range(1, m + 1)), 1013), 1))
            assert count <= 3 * m + 3, (m, count)
        eps, lp = 0.5, math.log2(1013)
        depth = metrics(build_aikps(1013, eps, 1))["depth"]
        assert depth < (1 + 2 * eps) * lp ** (1 + eps) * math.log2(lp)


def test_criterion_06_rz_transpilation():
    with criterion(6):
        for x in range(17):
            c = build_shallow(REF_PARAMS, x)
            a = run_pure(c).vector
            b = run_pure(transpile_ry_to_rz(c)).vector
            assert abs(np.vdot(a, b)) ** 2 >= 1 - 1e-9, x


def test_criterion_07_optimizer():
    with criterion(7):
        for seed in range(10):
            init = np.random.default_rng(seed).integers(0, 17, size=4).tolist()
            values = [v for _, v in coordinate_descent(init, epsilon_objective(17)).trace]
            assert all(b <= a for a, b in zip(values, values[1:]))
        obj = epsilon_objective(5)
        exact = min(obj(c) for c in itertools.product(range(5), repeat=2))
        for init in itertools.product(range(5), repeat=2):
            assert hybrid_search(list(init), obj, 1, 1).best_value == pytest.approx(exact, abs=1e-12)
        best, _ = random_restarts(epsilon_objective(17), 4, restarts=20, seed=0)
        median = float(np.median([epsilon(random_set(17, 8, s)) for s in range(100)]))
        assert best.best_value < median, (best.best_value, median)


def test_criterion_08_noiseless_statistics():
    with criterion(8):
        nm = NoiseModel.noiseless()
        for seed in range(100):
            length = seed + 1
            c = build_word_circuit(REF_PARAMS, length, "collapsed")
            q = accept_probability_pure(c)
            rec = sample_shots(c, nm, SHOTS, seed)
            sigma = math.sqrt(SHOTS * q * (1 - q))
            assert abs(rec.accept_count - SHOTS * q) <= 4 * sigma, (length, rec.accept_count, q)


def test_criterion_09_noisy_separation_and_tables():
    with criterion(9, budget=300):
        curve = noisy_acceptance_curve(REF_PARAMS, 128, NoiseModel())
        members = [curve[i] for i in range(17, 120, 17)]
        non_members = [curve[i] for i in range(1, 129) if i % 17]
        assert min(members) > max(non_members), (min(members), max(non_members))

        shallow = classify([ShotRecord(i + 1, SHOTS, c) for i, c in enumerate(SHALLOW_COUNTS)], 1000, TABLE_P)
        assert {i for i, c in shallow["per_length"].items() if c.predicted} == set(range(17, 129, 17))

        standard = classify([ShotRecord(i + 1, SHOTS, c) for i, c in enumerate(STANDARD_COUNTS)], 1000, TABLE_P)
        hits = {i for i, c in standard["per_length"].items() if c.predicted and c.actual}
        # the table holds 828 at length 119, below the threshold
        assert hits == {17, 34, 68}


def test_criterion_10_error_below_epsilon():
    with criterion(10):
        rng = np.random.default_rng(2024)
        primes = [p for p in range(3, 258) if all(p % q for q in range(2, int(p**0.5) + 1))]
        for _ in range(500):
            p = int(rng.choice(primes))
            K = explicit_set(rng.integers(0, p, size=int(rng.integers(1, 3 * p))), p)
            eps = epsilon_of(K).epsilon
            probs = np.array([acceptance_probability(K, x) for x in range(1, p)])
            assert (probs <= eps + 1e-12).all()
