"""Coefficient-set constructions: cyclic, AIKPS, subset-sum over a GAP, random."""
from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .zp_math import check_prime, mod_inverse, primes_in_range, primitive_root

METHODS = ("cyclic", "aikps", "gap_subset_sum", "random", "optimized", "explicit")
DEFAULT_ATTEMPT_CAP = 10**6


class SearchExhausted(RuntimeError):
    pass


@dataclass(frozen=True)
class ParamVector:
    """Offset ``t0`` and generators ``T = (t_1..t_m)`` of a subset-sum set."""

    t0: int
    T: tuple[int, ...]
    p: int

    def __post_init__(self):
        if len(self.T) < 1:
            raise ValueError("need at least one generator")
        object.__setattr__(self, "t0", int(self.t0) % self.p)
        object.__setattr__(self, "T", tuple(int(t) % self.p for t in self.T))

    @property
    def m(self) -> int:
        return len(self.T)

    def as_list(self) -> list[int]:
        return [self.t0, *self.T]

    @classmethod
    def from_list(cls, values, p: int) -> "ParamVector":
        values = list(values)
        return cls(values[0], tuple(values[1:]), p)

    @classmethod
    def from_result_set(cls, values, p: int, offset_index: int = -1) -> "ParamVector":
        """Build from an unordered listing where one entry is the offset.

        Result sets such as ``{4, 8, 12, 6}`` do not say which entry
        is ``t0``; ``offset_index`` picks it (default: last).
        """
        values = list(values)
        t0 = values.pop(offset_index)
        return cls(t0, tuple(values), p)


@dataclass(frozen=True)
class CoefficientSet:
    coeffs: tuple[int, ...]
    p: int
    method: str = "explicit"
    params: ParamVector | None = None
    info: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if len(self.coeffs) < 1:
            raise ValueError("coefficient set must be non-empty")
        if self.method not in METHODS:
            raise ValueError(f"unknown provenance {self.method!r}")
        object.__setattr__(self, "coeffs", tuple(int(k) % self.p for k in self.coeffs))

    def __len__(self) -> int:
        return len(self.coeffs)

    def __iter__(self):
        return iter(self.coeffs)

    @property
    def d(self) -> int:
        return len(self.coeffs)

    def array(self) -> np.ndarray:
        return np.asarray(self.coeffs, dtype=np.int64)

    def to_json(self) -> str:
        out = {"p": self.p, "method": self.method, "coeffs": list(self.coeffs)}
        if self.params is not None:
            out["params"] = {"t0": self.params.t0, "T": list(self.params.T)}
        if self.info:
            out["info"] = self.info
        return json.dumps(out)

    @classmethod
    def from_json(cls, text: str) -> "CoefficientSet":
        raw = json.loads(text)
        p = check_prime(raw["p"])
        params = None
        if raw.get("params") is not None:
            params = ParamVector(raw["params"]["t0"], tuple(raw["params"]["T"]), p)
        return cls(tuple(raw["coeffs"]), p, raw.get("method", "explicit"), params, raw.get("info", {}))


def explicit_set(coeffs, p: int) -> CoefficientSet:
    return CoefficientSet(tuple(coeffs), check_prime(p), "explicit")


def cyclic_set(p: int, d: int) -> CoefficientSet:
    """k_i = g**i mod p for i = 1..d, g the smallest primitive root."""
    p = check_prime(p)
    if d < 1:
        raise ValueError("d must be positive")
    if d >= p:
        raise ValueError(f"cyclic set needs d <= p-1, got d={d}, p={p}")
    g = primitive_root(p)
    return CoefficientSet(tuple(pow(g, i, p) for i in range(1, d + 1)), p, "cyclic")


def aikps_window(p: int, eps: float) -> tuple[list[int], int]:
    """Return the prime set R and the size of S = {1..|S|} for the AIKPS construction."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    logp = math.log2(p)
    top = logp ** (1 + eps)
    if top <= 2:
        raise ValueError(f"AIKPS window empty: (log2 p)^(1+eps) = {top:.3f} <= 2")
    R = primes_in_range(top / 2, top)
    if not R:
        raise ValueError(f"no primes in AIKPS window ({top / 2:.3f}, {top:.3f})")
    s_max = math.floor(logp ** (1 + 2 * eps))
    return R, s_max


def aikps_set(p: int, eps: float) -> CoefficientSet:
    """All s * r^-1 mod p, ordered by (r, s)."""
    p = check_prime(p)
    R, s_max = aikps_window(p, eps)
    coeffs = []
    pairs = []
    for r in R:
        r_inv = mod_inverse(r, p)
        for s in range(1, s_max + 1):
            coeffs.append(s * r_inv % p)
            pairs.append((r, s))
    return CoefficientSet(tuple(coeffs), p, "aikps", info={"R": R, "S_max": s_max, "eps": eps})


def aikps_generators(cs: CoefficientSet) -> list[tuple[int, int]]:
    """(r, s) generating pair for each entry of an AIKPS set, in order."""
    R, s_max = cs.info["R"], cs.info["S_max"]
    return [(r, s) for r in R for s in range(1, s_max + 1)]


def subset_sums(t0: int, T, p: int) -> np.ndarray:
    """Entry j is t0 + sum of T[i] over the set bits i of j, mod p."""
    out = np.array([t0 % p], dtype=np.int64)
    for t in T:
        out = np.concatenate([out, (out + int(t)) % p])
    return out


def subset_sum_set(params: ParamVector) -> CoefficientSet:
    if params.m > 30:
        raise ValueError("m > 30: subset-sum set too large to enumerate")
    sums = subset_sums(params.t0, params.T, params.p)
    return CoefficientSet(tuple(sums.tolist()), params.p, "gap_subset_sum", params)


def gap_values(params: ParamVector) -> np.ndarray:
    """All 3**m values 2*t0 + sum n_i t_i with n_i in {0, 1, 2}, mod p."""
    p = params.p
    vals = np.array([2 * params.t0 % p], dtype=np.int64)
    for t in params.T:
        vals = np.concatenate([vals, (vals + t) % p, (vals + 2 * t) % p])
    return vals


def is_proper_gap(params: ParamVector) -> bool:
    if params.m > 18:
        raise ValueError("m > 18: 3**m values too many to enumerate")
    if 3**params.m > params.p:
        return False
    vals = gap_values(params)
    return np.unique(vals).size == vals.size


def find_gap_params(p: int, m: int, strategy: str = "sequential", seed: int | None = None,
                    attempt_cap: int = DEFAULT_ATTEMPT_CAP) -> ParamVector:
    """Search for (t0, T) whose 3-ary GAP is proper.

    ``sequential`` tries the base-3 generators (1, 3, 9, ...) scaled by
    c = 1, 2, ... and then walks all generator tuples lexicographically with
    t0 = 0 (properness is translation invariant); ``random`` samples uniformly.
    """
    p = check_prime(p)
    if m < 1:
        raise ValueError("m must be >= 1")
    if 3**m > p:
        raise ValueError(f"properness impossible: 3**{m} = {3**m} > p = {p}")
    if strategy == "sequential":
        candidates = _sequential_candidates(p, m)
    elif strategy == "random":
        candidates = _random_candidates(p, m, seed)
    else:
        raise ValueError(f"unknown strategy {strategy!r}")
    for params in itertools.islice(candidates, attempt_cap):
        if is_proper_gap(params):
            return params
    raise SearchExhausted(f"search exhausted after {attempt_cap} candidates (p={p}, m={m})")


def _sequential_candidates(p, m):
    base = [3**i for i in range(m)]
    for c in range(1, p):
        yield ParamVector(0, tuple(c * b % p for b in base), p)
    for T in itertools.product(range(1, p), repeat=m):
        yield ParamVector(0, T, p)


def _random_candidates(p, m, seed):
    rng = np.random.default_rng(seed)
    while True:
        v = rng.integers(0, p, size=m + 1)
        yield ParamVector(int(v[0]), tuple(int(t) for t in v[1:]), p)


def random_set(p: int, d: int, seed: int) -> CoefficientSet:
    """d coefficients drawn uniformly from {1..p-1}."""
    p = check_prime(p)
    if d < 1:
        raise ValueError("d must be positive")
    rng = np.random.default_rng(seed)
    coeffs = rng.integers(1, p, size=d)
    return CoefficientSet(tuple(coeffs.tolist()), p, "random", info={"seed": seed})


def probabilistic_size(p: int, eps: float) -> int:
    """d = ceil(2 log2(2p) / eps) coefficients suffice with positive probability."""
    return math.ceil(2 * math.log2(2 * p) / eps)


def gap_dimension(p: int, eps: float) -> int:
    """m = ceil(log2 p - 2 log2 eps) control qubits for target error eps."""
    return math.ceil(math.log2(p) - 2 * math.log2(eps))
