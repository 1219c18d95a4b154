"""Discrete search over coefficient parameters.

All searches work on integer coordinate vectors over Z_p. For the shallow
construction the coordinates are (t0, t1, .., tm); for the deep
construction they are the coefficients k_1..k_d themselves.
"""
from __future__ import annotations

import csv
import io
import itertools
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .coeffgen import CoefficientSet, ParamVector, explicit_set, subset_sum_set
from .simulator import NoiseModel, noisy_acceptance_curve
from .spectral import acceptance_profile, epsilon

DEFAULT_CAP = 10**8


class SearchSpaceTooLarge(ValueError):
    pass


def coords_to_spec(coords, p: int, kind: str):
    if kind == "shallow":
        return ParamVector.from_list(coords, p)
    if kind == "deep":
        return explicit_set(coords, p)
    raise ValueError(f"unknown construction {kind!r}")


def coords_to_set(coords, p: int, kind: str) -> CoefficientSet:
    spec = coords_to_spec(coords, p, kind)
    return subset_sum_set(spec) if kind == "shallow" else spec


class Objective:
    """Callable objective over coordinate tuples with memoised evaluations."""

    def __init__(self, fn, p: int, kind: str, name: str, context: dict | None = None):
        self.fn = fn
        self.p = p
        self.kind = kind
        self.name = name
        self.context = context or {}
        self._cache: dict[tuple, float] = {}

    def __call__(self, coords) -> float:
        key = tuple(int(c) % self.p for c in coords)
        if key not in self._cache:
            self._cache[key] = float(self.fn(key))
        return self._cache[key]

    @property
    def evaluations(self) -> int:
        return len(self._cache)


def objective_epsilon(K: CoefficientSet) -> float:
    return epsilon(K)


def epsilon_objective(p: int, kind: str = "shallow") -> Objective:
    return Objective(lambda c: objective_epsilon(coords_to_set(c, p, kind)), p, kind, "epsilon_max")


def acceptance_curve(spec, window_max: int, nm: NoiseModel | None) -> np.ndarray:
    """Accept probability for word lengths 0..window_max.

    Exact per-letter density-matrix values when a noise model is given,
    otherwise the noiseless closed form.
    """
    if nm is None or nm.is_noiseless:
        K = subset_sum_set(spec) if isinstance(spec, ParamVector) else spec
        return acceptance_profile(K, np.arange(window_max + 1))
    return noisy_acceptance_curve(spec, window_max, nm)


def objective_separation(spec, window_max: int, member_probe: int, nm: NoiseModel | None = None,
                         sign: str = "separation") -> float:
    """max{Prob(r) : r in 1..window_max, p does not divide r} - Prob(member_probe).

    Lower is better. ``sign="literal"`` returns the literal negation,
    Prob(member_probe) - max{...}, for callers that maximise.
    """
    if window_max < member_probe:
        raise ValueError("window_max must be >= member_probe")
    p = spec.p
    curve = acceptance_curve(spec, window_max, nm)
    non_members = [curve[r] for r in range(1, window_max + 1) if r % p]
    worst = max(non_members) if non_members else 0.0
    value = worst - curve[member_probe]
    if sign == "literal":
        return -value
    if sign != "separation":
        raise ValueError(f"unknown sign convention {sign!r}")
    return value


def separation_objective(p: int, kind: str, window_max: int, member_probe: int,
                         nm: NoiseModel | None = None, sign: str = "separation") -> Objective:
    def fn(c):
        return objective_separation(coords_to_spec(c, p, kind), window_max, member_probe, nm, sign)

    ctx = {"window_max": window_max, "member_probe": member_probe, "sign": sign,
           "noise": None if nm is None else [nm.p1, nm.p2, nm.p_meas]}
    name = "diff_noisy" if member_probe > p else "diff_prime_noisy"
    return Objective(fn, p, kind, name, ctx)


@dataclass
class SearchResult:
    best_coords: list[int]
    best_value: float
    trace: list[tuple[int, float]] = field(default_factory=list)
    evaluations: int = 0
    p: int | None = None
    kind: str = "shallow"
    sweeps: int = 0

    @property
    def best_params(self):
        return coords_to_spec(self.best_coords, self.p, self.kind)

    def to_dict(self) -> dict:
        return {"p": self.p, "kind": self.kind, "best_coords": self.best_coords,
                "best_value": self.best_value, "evaluations": self.evaluations,
                "sweeps": self.sweeps, "trace": [list(t) for t in self.trace]}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_json(cls, text: str) -> "SearchResult":
        raw = json.loads(text)
        return cls(raw["best_coords"], raw["best_value"], [tuple(t) for t in raw["trace"]],
                   raw["evaluations"], raw["p"], raw["kind"], raw.get("sweeps", 0))

    def trace_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["iteration", "value"])
        w.writerows(self.trace)
        return buf.getvalue()


def _line_search(coords, i, objective, p):
    best_v, best_val = None, math.inf
    trial = list(coords)
    for v in range(p):
        trial[i] = v
        val = objective(trial)
        if val < best_val:
            best_v, best_val = v, val
    return best_v, best_val


def coordinate_descent(init, objective: Objective, max_sweeps: int = 50, coords=None) -> SearchResult:
    """Exact discrete line search over Z_p, one coordinate at a time.

    A coordinate moves only on strict improvement, to the smallest value
    attaining the line minimum. Stops after a sweep without moves.
    """
    p = objective.p
    x = [int(v) % p for v in init]
    if not x:
        raise ValueError("need at least one coordinate")
    order = list(range(len(x))) if coords is None else list(coords)
    value = objective(x)
    trace = [(0, value)]
    it = 0
    sweeps = 0
    for _ in range(max_sweeps):
        sweeps += 1
        moved = False
        for i in order:
            v, val = _line_search(x, i, objective, p)
            it += 1
            if val < value:
                x[i] = v
                value = val
                moved = True
                trace.append((it, value))
        if not moved:
            break
    return SearchResult(x, value, trace, objective.evaluations, p, objective.kind, sweeps)


def brute_force(objective: Objective, domains, cap: int = DEFAULT_CAP, fixed=None) -> SearchResult:
    """Exhaustive minimum over the product of ``domains`` (first minimum wins).

    ``fixed`` maps coordinate index to value for coordinates held constant;
    ``domains`` then covers the remaining coordinates in index order.
    """
    fixed = dict(fixed or {})
    domains = [list(d) for d in domains]
    size = math.prod(len(d) for d in domains)
    if size > cap:
        raise SearchSpaceTooLarge(f"search space has {size:.3e} points, cap is {cap:.3e}")
    n = len(domains) + len(fixed)
    free = [i for i in range(n) if i not in fixed]
    best, best_val = None, math.inf
    x = [fixed.get(i, 0) for i in range(n)]
    for combo in itertools.product(*domains):
        for i, v in zip(free, combo):
            x[i] = v
        val = objective(x)
        if val < best_val:
            best, best_val = list(x), val
    return SearchResult(best, best_val, [(0, best_val)], objective.evaluations, objective.p, objective.kind, 1)


def hybrid_search(init, objective: Objective, n_descent: int, n_brute: int,
                  max_sweeps: int = 50, cap: int = DEFAULT_CAP) -> SearchResult:
    """Coordinate descent on the first ``n_descent`` coordinates alternating
    with an exhaustive search over the last ``n_brute`` coordinates jointly.
    """
    p = objective.p
    x = [int(v) % p for v in init]
    if n_descent + n_brute != len(x):
        raise ValueError(f"split {n_descent}:{n_brute} does not cover {len(x)} coordinates")
    if n_brute == 0:
        return coordinate_descent(x, objective, max_sweeps)
    suffix = list(range(n_descent, len(x)))
    if p**n_brute > cap:
        raise SearchSpaceTooLarge(f"brute-force block has {p ** n_brute:.3e} points, cap is {cap:.3e}")
    value = objective(x)
    trace = [(0, value)]
    it = 0
    sweeps = 0
    for _ in range(max_sweeps):
        sweeps += 1
        moved = False
        for i in range(n_descent):
            v, val = _line_search(x, i, objective, p)
            it += 1
            if val < value:
                x[i], value, moved = v, val, True
                trace.append((it, value))
        fixed = {i: x[i] for i in range(n_descent)}
        res = brute_force(objective, [range(p)] * n_brute, cap, fixed)
        it += 1
        if res.best_value < value:
            x = [*x[:n_descent], *(res.best_coords[i] for i in suffix)]
            value, moved = res.best_value, True
            trace.append((it, value))
        if not moved:
            break
    return SearchResult(x, value, trace, objective.evaluations, p, objective.kind, sweeps)


def random_restarts(objective: Objective, n_coords: int, restarts: int = 20, seed: int = 0,
                    max_sweeps: int = 50, hybrid: tuple[int, int] | None = None) -> tuple[SearchResult, list[SearchResult]]:
    """Best of several searches from seeded uniform random starting points."""
    p = objective.p
    runs = []
    for ss in np.random.SeedSequence(seed).spawn(restarts):
        init = np.random.default_rng(ss).integers(0, p, size=n_coords).tolist()
        if hybrid is None:
            runs.append(coordinate_descent(init, objective, max_sweeps))
        else:
            runs.append(hybrid_search(init, objective, hybrid[0], hybrid[1], max_sweeps))
    best = min(runs, key=lambda r: r.best_value)
    best = SearchResult(best.best_coords, best.best_value, best.trace, objective.evaluations,
                        best.p, best.kind, best.sweeps)
    return best, runs
