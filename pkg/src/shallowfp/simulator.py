"""Statevector and density-matrix simulation of fingerprint circuits.

States are numpy tensors with one axis per qubit; qubit q lives on axis
n - 1 - q so that a flattened state is indexed little endian. A density
matrix carries row axes 0..n-1 followed by column axes n..2n-1.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np

from .circuit import H, Circuit, Gate, build_deep, build_shallow, decompose
from .coeffgen import CoefficientSet, ParamVector

MAX_PURE_QUBITS = 24
MAX_NOISY_QUBITS = 12

_H = np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2)
_X = np.array([[0, 1], [1, 0]], dtype=complex)


def gate_matrix(g: Gate) -> np.ndarray:
    """2x2 matrix applied to the target (on the selected control branch)."""
    t = g.angle
    if g.kind == "H":
        return _H
    if g.kind == "CX":
        return _X
    if g.kind in ("RY", "CRY", "MCRY"):
        c, s = math.cos(t / 2), math.sin(t / 2)
        return np.array([[c, -s], [s, c]], dtype=complex)
    if g.kind == "RZ":
        return np.array([[np.exp(-0.5j * t), 0], [0, np.exp(0.5j * t)]])
    if g.kind == "PHASE":
        return np.array([[1, 0], [0, np.exp(1j * t)]])
    raise ValueError(f"no matrix for {g.kind}")


@dataclass
class NoiseModel:
    """Symmetric depolarizing noise after every gate plus readout bit flips.

    Defaults are calibration knobs for the noisy word-length experiments.
    """

    p1: float = 0.001
    p2: float = 0.01
    p_meas: float = 0.02

    def __post_init__(self):
        for name in ("p1", "p2", "p_meas"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name}={v} outside [0, 1]")

    @classmethod
    def noiseless(cls) -> "NoiseModel":
        return cls(0.0, 0.0, 0.0)

    @classmethod
    def parse(cls, text: str) -> "NoiseModel":
        p1, p2, pm = (float(v) for v in text.split(","))
        return cls(p1, p2, pm)

    @property
    def is_noiseless(self) -> bool:
        return self.p1 == self.p2 == self.p_meas == 0.0


@dataclass
class QuantumState:
    data: np.ndarray
    num_qubits: int
    mode: str = "pure"

    @property
    def vector(self) -> np.ndarray:
        if self.mode != "pure":
            raise ValueError("mixed state has no statevector")
        return self.data.reshape(-1)

    @property
    def matrix(self) -> np.ndarray:
        d = 2**self.num_qubits
        if self.mode == "pure":
            v = self.vector
            return np.outer(v, v.conj())
        return self.data.reshape(d, d)

    def probabilities(self) -> np.ndarray:
        if self.mode == "pure":
            return np.abs(self.vector) ** 2
        return np.real(np.diagonal(self.matrix)).copy()

    def check(self, tol: float = 1e-9) -> None:
        if self.mode == "pure":
            norm = np.vdot(self.vector, self.vector).real
            if abs(norm - 1) > tol:
                raise AssertionError(f"norm drifted to {norm}")
            return
        rho = self.matrix
        if abs(np.trace(rho).real - 1) > tol:
            raise AssertionError("trace drifted")
        if not np.allclose(rho, rho.conj().T, atol=tol):
            raise AssertionError("density matrix not Hermitian")
        if np.linalg.eigvalsh(rho).min() < -tol:
            raise AssertionError("density matrix not positive semidefinite")


def _axis(q: int, n: int) -> int:
    return n - 1 - q


def _apply(tensor: np.ndarray, g: Gate, n: int, offset: int = 0, conj: bool = False) -> np.ndarray:
    """Apply gate g to the n qubit axes starting at ``offset`` of ``tensor``."""
    u = gate_matrix(g)
    if conj:
        u = u.conj()
    index = [slice(None)] * tensor.ndim
    for c, v in zip(g.controls, g.pattern):
        index[offset + _axis(c, n)] = v
    index = tuple(index)
    sub = tensor[index]
    t_axis = offset + _axis(g.target, n)
    # axes removed by integer indexing shift the target axis left
    t_sub = t_axis - sum(1 for c in g.controls if offset + _axis(c, n) < t_axis)
    moved = np.moveaxis(sub, t_sub, 0)
    new = np.tensordot(u, moved, axes=([1], [0]))
    out = tensor.copy() if g.controls else None
    if out is None:
        return np.moveaxis(new, 0, t_sub)
    out[index] = np.moveaxis(new, 0, t_sub)
    return out


def initial_pure(n: int) -> np.ndarray:
    psi = np.zeros((2,) * n, dtype=complex)
    psi[(0,) * n] = 1.0
    return psi


def apply_pure(psi: np.ndarray, c: Circuit) -> np.ndarray:
    n = c.num_qubits
    for g in c.gates():
        psi = _apply(psi, g, n)
    return psi


def run_pure(c: Circuit) -> QuantumState:
    if c.num_qubits > MAX_PURE_QUBITS:
        raise ValueError(f"qubit budget exceeded: {c.num_qubits} > {MAX_PURE_QUBITS}")
    return QuantumState(apply_pure(initial_pure(c.num_qubits), c), c.num_qubits, "pure")


def _unprep_gates(c: Circuit) -> list[Gate]:
    if c.metadata.get("includes_unprep"):
        return []
    return [H(q) for q in c.metadata.get("prep_qubits", [])]


def accept_probability_pure(c: Circuit) -> float:
    """Probability of the all-zero outcome after undoing the uniform preparation."""
    psi = run_pure(c).data
    for g in _unprep_gates(c):
        psi = _apply(psi, g, c.num_qubits)
    return float(abs(psi.reshape(-1)[0]) ** 2)


# -- noisy ---------------------------------------------------------------------

def _depolarize(rho: np.ndarray, qubits, prob: float, n: int) -> np.ndarray:
    """rho -> (1 - prob) rho + prob * (I / 2**k) (x) Tr_qubits(rho)."""
    if prob == 0.0:
        return rho
    k = len(qubits)
    rows = [_axis(q, n) for q in qubits]
    cols = [n + r for r in rows]
    moved = np.moveaxis(rho, rows + cols, list(range(2 * k)))
    shape = moved.shape
    dk = 2**k
    flat = moved.reshape(dk, dk, -1)
    reduced = np.trace(flat, axis1=0, axis2=1)
    mixed = np.einsum("ij,r->ijr", np.eye(dk) / dk, reduced).reshape(shape)
    out = (1 - prob) * moved + prob * mixed
    return np.moveaxis(out, list(range(2 * k)), rows + cols)


def _apply_rho(rho: np.ndarray, g: Gate, n: int) -> np.ndarray:
    rho = _apply(rho, g, n, offset=0)
    return _apply(rho, g, n, offset=n, conj=True)


def initial_mixed(n: int) -> np.ndarray:
    rho = np.zeros((2,) * (2 * n), dtype=complex)
    rho[(0,) * (2 * n)] = 1.0
    return rho


def evolve_noisy(rho: np.ndarray, gates, nm: NoiseModel, n: int) -> np.ndarray:
    for g in gates:
        if g.kind == "MCRY":
            raise ValueError("decompose first: MCRY gates are not simulated under noise")
        rho = _apply_rho(rho, g, n)
        prob = nm.p1 if len(g.qubits) == 1 else nm.p2
        rho = _depolarize(rho, g.qubits, prob, n)
    d = 2**n
    mat = rho.reshape(d, d)
    mat = 0.5 * (mat + mat.conj().T)
    return mat.reshape((2,) * (2 * n))


def run_noisy(c: Circuit, nm: NoiseModel) -> QuantumState:
    if c.num_qubits > MAX_NOISY_QUBITS:
        raise ValueError(f"noisy simulation limited to {MAX_NOISY_QUBITS} qubits")
    n = c.num_qubits
    rho = evolve_noisy(initial_mixed(n), c.gates(), nm, n)
    return QuantumState(rho, n, "mixed")


def readout_zero_probability(probs: np.ndarray, n: int, p_meas: float) -> float:
    """Probability that every qubit reads 0 when each bit flips with prob p_meas."""
    if p_meas == 0.0:
        return float(probs[0])
    idx = np.arange(probs.size)
    ones = np.zeros(probs.size, dtype=np.int64)
    for q in range(n):
        ones += (idx >> q) & 1
    weights = (p_meas**ones) * ((1 - p_meas) ** (n - ones))
    return float(np.dot(probs, weights))


def accept_probability_noisy(c: Circuit, nm: NoiseModel) -> float:
    """Noisy all-zero probability, readout flips included; circuit must end with unpreparation."""
    n = c.num_qubits
    rho = run_noisy(c, nm).data
    rho = evolve_noisy(rho, _unprep_gates(c), nm, n)
    probs = np.real(np.diagonal(rho.reshape(2**n, 2**n)))
    return readout_zero_probability(probs, n, nm.p_meas)


# -- word circuits ---------------------------------------------------------------

def _block(spec, x: int) -> Circuit:
    if isinstance(spec, ParamVector):
        return build_shallow(spec, x)
    if isinstance(spec, CoefficientSet):
        return build_deep(spec, x)
    raise TypeError("expected ParamVector or CoefficientSet")


def word_block(spec, decomposed: bool = False, x: int = 1) -> tuple[list[Gate], list[Gate], Circuit]:
    """(preparation gates, rotation-block gates, source circuit) for the word a^x.

    Builders put the preparation Hadamards in layer 0; the rest is the block.
    """
    one = _block(spec, x)
    has_prep = bool(one.metadata["prep_qubits"])
    prep = list(one.layers[0]) if has_prep else []
    body = [g for layer in one.layers[1 if has_prep else 0:] for g in layer]
    if decomposed:
        body = list(decompose(Circuit.from_gates(one.num_qubits, body), keep_cry=True).gates())
    return prep, body, one


def build_word_circuit(spec, i: int, style: str = "collapsed", decomposed: bool = False) -> Circuit:
    """Circuit for the word a^i, including preparation and unpreparation.

    ``collapsed`` folds the word length into the rotation angles;
    ``per_letter`` repeats the one-letter rotation block i times so gate
    noise accumulates with the word. ``decomposed`` rewrites multi-controlled
    rotations into {RY, CX} (needed for noisy runs of deep circuits); CRY
    stays a native two-qubit gate.
    """
    if i < 0:
        raise ValueError("word length must be non-negative")
    if style not in ("collapsed", "per_letter"):
        raise ValueError(f"unknown style {style!r}")
    prep, body, one = word_block(spec, decomposed, i if style == "collapsed" else 1)
    n = one.num_qubits
    block = Circuit.from_gates(n, body).layers if decomposed else [
        layer for layer in one.layers[1 if prep else 0:]]
    reps = 1 if style == "collapsed" else i
    layers = ([prep] if prep else []) + block * reps + ([prep] if prep else [])
    meta = dict(one.metadata)
    meta.update({"x": i, "style": style, "includes_unprep": True, "word_length": i,
                 "decomposed": decomposed})
    return Circuit(n, layers, meta)


def noisy_acceptance_curve(spec, max_length: int, nm: NoiseModel, decomposed: bool = True) -> np.ndarray:
    """Exact per-letter noisy accept probability for word lengths 0..max_length.

    Reuses the state after each letter, so the whole curve costs one pass.
    """
    prep, body, one = word_block(spec, decomposed)
    n = one.num_qubits
    if n > MAX_NOISY_QUBITS:
        raise ValueError(f"noisy simulation limited to {MAX_NOISY_QUBITS} qubits")
    rho = evolve_noisy(initial_mixed(n), prep, nm, n)
    out = np.empty(max_length + 1)
    for i in range(max_length + 1):
        if i:
            rho = evolve_noisy(rho, body, nm, n)
        fin = evolve_noisy(rho, prep, nm, n)
        probs = np.real(np.diagonal(fin.reshape(2**n, 2**n)))
        out[i] = readout_zero_probability(probs, n, nm.p_meas)
    return out


def pure_acceptance_curve(spec, max_length: int) -> np.ndarray:
    """Noiseless per-letter accept probability for lengths 0..max_length."""
    prep, body, one = word_block(spec)
    n = one.num_qubits
    psi = initial_pure(n)
    for g in prep:
        psi = _apply(psi, g, n)
    out = np.empty(max_length + 1)
    for i in range(max_length + 1):
        for g in body if i else ():
            psi = _apply(psi, g, n)
        fin = psi
        for g in prep:
            fin = _apply(fin, g, n)
        out[i] = abs(fin.reshape(-1)[0]) ** 2
    return out


# -- shots and classification -----------------------------------------------------

@dataclass
class ShotRecord:
    length: int
    shots: int
    accept_count: int

    def __post_init__(self):
        if not 0 <= self.accept_count <= self.shots:
            raise ValueError("accept_count outside [0, shots]")


def sample_accepts(prob: float, shots: int, rng: np.random.Generator) -> int:
    if shots < 1:
        raise ValueError("shots must be >= 1")
    return int(rng.binomial(shots, min(max(prob, 0.0), 1.0)))


def sample_shots(c: Circuit, nm: NoiseModel, shots: int, seed) -> ShotRecord:
    """Binomial draw around the exact (noisy) accept probability of ``c``."""
    if nm.is_noiseless:
        prob = accept_probability_pure(c)
    else:
        prob = accept_probability_noisy(c, nm)
    rng = np.random.default_rng(seed)
    return ShotRecord(int(c.metadata.get("word_length", c.metadata.get("x", 0))), shots,
                      sample_accepts(prob, shots, rng))


def sample_curve(probs, shots: int, seed: int, lengths=None) -> list[ShotRecord]:
    """One record per length; each length draws from its own seeded substream."""
    if lengths is None:
        lengths = range(len(probs))
    children = np.random.SeedSequence(seed).spawn(len(probs))
    out = []
    for length, prob, ss in zip(lengths, probs, children):
        out.append(ShotRecord(int(length), shots, sample_accepts(float(prob), shots, np.random.default_rng(ss))))
    return out


@dataclass
class Classification:
    length: int
    accept_count: int
    predicted: bool
    actual: bool | None = None


def classify(records, threshold: int, p: int | None = None) -> dict:
    """Member iff accept_count > threshold; also the matching cut-point lambda."""
    records = list(records)
    per_length = {}
    for r in records:
        actual = (r.length % p == 0) if p else None
        per_length[r.length] = Classification(r.length, r.accept_count, r.accept_count > threshold, actual)
    shots = records[0].shots if records else None
    return {"per_length": per_length, "threshold": threshold,
            "cut_point": threshold / shots if shots else None}


def records_to_csv(records) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["length", "shots", "accept_count"])
    for r in records:
        w.writerow([r.length, r.shots, r.accept_count])
    return buf.getvalue()


def records_from_csv(text: str) -> list[ShotRecord]:
    rows = csv.DictReader(io.StringIO(text))
    return [ShotRecord(int(r["length"]), int(r["shots"]), int(r["accept_count"])) for r in rows]
