"""Exact error analysis of coefficient sets.

Exponential sums S(x) = sum_j exp(2 pi i k_j x / p) drive everything here:
the non-member acceptance probability is (Re S / d)**2 and the worst-case
error bound is max_{x != 0} |S / d|**2.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np

from .coeffgen import CoefficientSet, ParamVector, gap_values, is_proper_gap, subset_sum_set

TIE_TOL = 1e-12
_CHUNK = 1 << 22


@dataclass
class ErrorProfile:
    epsilon: float
    argmax_x: int
    per_x: np.ndarray | None = None  # per_x[x - 1] for x in 1..p-1
    p: int | None = None
    d: int | None = None
    method: str = ""

    def to_csv(self) -> str:
        if self.per_x is None:
            raise ValueError("profile was computed without per-x values")
        buf = io.StringIO()
        buf.write(f"# p={self.p} d={self.d} method={self.method}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["x", "value"])
        for x, v in enumerate(self.per_x, start=1):
            w.writerow([x, repr(float(v))])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "ErrorProfile":
        lines = text.splitlines()
        meta = {}
        if lines and lines[0].startswith("#"):
            for tok in lines[0][1:].split():
                key, _, val = tok.partition("=")
                meta[key] = val
            lines = lines[1:]
        rows = list(csv.DictReader(lines))
        per_x = np.array([float(r["value"]) for r in rows])
        i = _argmax_smallest(per_x)
        return cls(float(per_x[i]), i + 1, per_x,
                   int(meta["p"]) if "p" in meta else None,
                   int(meta["d"]) if "d" in meta else None,
                   meta.get("method", ""))


@dataclass
class AdditiveStats:
    energy: int
    fourier_bias: float
    density: float


def _argmax_smallest(values: np.ndarray) -> int:
    top = values.max()
    return int(np.flatnonzero(values >= top - TIE_TOL)[0])


def _coeff_array(K) -> tuple[np.ndarray, int]:
    return np.asarray(K.coeffs, dtype=np.int64), K.p


def exponential_sums_direct(K: CoefficientSet, xs: np.ndarray) -> np.ndarray:
    """S(x) for each x by direct summation, phases reduced exactly mod p."""
    k, p = _coeff_array(K)
    xs = np.asarray(xs, dtype=np.int64) % p
    out = np.empty(xs.size, dtype=complex)
    step = max(1, _CHUNK // max(k.size, 1))
    for lo in range(0, xs.size, step):
        block = xs[lo:lo + step]
        residues = np.outer(block, k) % p
        out[lo:lo + step] = np.exp(2j * np.pi * residues / p).sum(axis=1)
    return out


def exponential_sums_dense(K: CoefficientSet) -> np.ndarray:
    """S(x) for every x in 0..p-1 from the coefficient histogram via FFT."""
    k, p = _coeff_array(K)
    counts = np.bincount(k, minlength=p).astype(float)
    return np.fft.ifft(counts) * p


def acceptance_probability(K: CoefficientSet, x: int) -> float:
    """(1/d^2) (sum_i cos(2 pi k_i x / p))^2; equals 1 for x = 0 mod p."""
    if x < 0:
        raise ValueError("word length must be non-negative")
    k, p = _coeff_array(K)
    residues = k * (x % p) % p
    c = np.cos(2 * np.pi * residues / p).sum()
    return float(c * c / (k.size**2))


def acceptance_profile(K: CoefficientSet, xs) -> np.ndarray:
    s = exponential_sums_direct(K, np.asarray(xs))
    return s.real**2 / len(K) ** 2


def epsilon_of(K: CoefficientSet, method: str = "auto", keep: bool = True) -> ErrorProfile:
    """max over x in 1..p-1 of |S(x)|^2 / d^2, smallest maximizer on ties."""
    d, p = len(K), K.p
    if method == "auto":
        method = "dense" if d > math.log2(max(p, 2)) else "direct"
    if method == "dense":
        s = exponential_sums_dense(K)[1:]
    elif method == "direct":
        s = exponential_sums_direct(K, np.arange(1, p))
    else:
        raise ValueError(f"unknown method {method!r}")
    vals = np.minimum((s.real**2 + s.imag**2) / d**2, 1.0)
    if vals.size == 0:
        return ErrorProfile(0.0, 0, vals if keep else None, p, d, method)
    i = _argmax_smallest(vals)
    return ErrorProfile(float(vals[i]), i + 1, vals if keep else None, p, d, method)


def epsilon(K: CoefficientSet) -> float:
    return epsilon_of(K, keep=False).epsilon


def pair_sum_counts(values, p: int) -> np.ndarray:
    """R_n = #{(a, b) : a + b = n mod p}, accumulated over all ordered pairs."""
    a = np.asarray(values, dtype=np.int64) % p
    R = np.zeros(p, dtype=np.int64)
    step = max(1, _CHUNK // max(a.size, 1))
    for lo in range(0, a.size, step):
        sums = (a[lo:lo + step, None] + a[None, :]) % p
        R += np.bincount(sums.ravel(), minlength=p)
    return R


def additive_energy(A: CoefficientSet) -> int:
    """Number of quadruples (a, b, a', b') in A^4 with a + b = a' + b' mod p."""
    if len(A) > 2**16:
        raise ValueError("set too large for the quadratic energy pass")
    R = pair_sum_counts(A.coeffs, A.p)
    return int((R * R).sum())


def solution_count_profile(params: ParamVector) -> np.ndarray:
    """R_n(A) for the subset-sum set A, read off the GAP representation of n.

    Entry n is 2**(number of unit digits) when n = 2 t0 + sum g_i t_i with
    g in {0,1,2}^m, and 0 when n has no such representation.
    """
    if params.m > 16:
        raise ValueError("m > 16 not supported")
    if not is_proper_gap(params):
        raise ValueError("not a proper GAP: representations are not unique")
    ones = np.zeros(1, dtype=np.int64)
    for _ in params.T:
        ones = np.concatenate([ones, ones + 1, ones])
    R = np.zeros(params.p, dtype=np.int64)
    R[gap_values(params)] = 2**ones
    return R


def _dedupe(A: CoefficientSet) -> np.ndarray:
    return np.unique(np.asarray(A.coeffs, dtype=np.int64) % A.p)


def fourier_bias(A: CoefficientSet) -> AdditiveStats:
    """Largest nontrivial normalized Fourier coefficient of A's indicator."""
    p = A.p
    elems = _dedupe(A)
    ind = np.zeros(p)
    ind[elems] = 1.0
    coeffs = np.abs(np.fft.fft(ind)[1:]) / p
    bias = float(coeffs.max()) if coeffs.size else 0.0
    energy = int((pair_sum_counts(elems, p) ** 2).sum())
    return AdditiveStats(energy, bias, elems.size / p)


def bias_energy_terms(A: CoefficientSet) -> tuple[float, float, float]:
    """(bias^4, E/|Z|^3 - P^4, bias^2 * P) for the set underlying A."""
    st = fourier_bias(A)
    p = A.p
    middle = st.energy / p**3 - st.density**4
    return st.fourier_bias**4, middle, st.fourier_bias**2 * st.density


def verify_bias_energy_bound(A: CoefficientSet, tol: float = 1e-12) -> bool:
    if len(set(A.coeffs)) > 2**12:
        raise ValueError("set too large")
    lower, middle, upper = bias_energy_terms(A)
    return lower <= middle + tol and middle <= upper + tol


@dataclass
class GapTheoremReport:
    epsilon_exact: float
    bound_sqrt_p_over_d: float
    holds: bool
    energy: int
    energy_bound: int


def verify_gap_theorem(params: ParamVector, tol: float = 1e-9) -> GapTheoremReport:
    """Check eps(A) <= sqrt(p / 2**m) for the subset-sum set of a proper GAP."""
    if 3**params.m > params.p:
        raise ValueError(f"properness impossible: 3**{params.m} > p = {params.p}")
    if not is_proper_gap(params):
        raise ValueError("parameters do not form a proper GAP")
    A = subset_sum_set(params)
    eps = epsilon(A)
    bound = math.sqrt(params.p / 2**params.m)
    energy = int((solution_count_profile(params) ** 2).sum())
    return GapTheoremReport(eps, bound, eps <= bound + tol, energy, 2 ** (3 * params.m))


def closed_form_gap_energy(m: int) -> int:
    return sum(math.comb(m, j) * 2 ** (m + j) for j in range(m + 1))
