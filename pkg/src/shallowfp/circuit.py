"""Gate-level circuits for the fingerprinting automaton.

Qubit convention: qubit q is bit q of a basis-state index (little endian).
Control qubits come first, the rotated target qubit is last. Control basis
state j selects coefficient j, so control qubit i carries bit i of j, which
matches the bit-to-generator alignment of ``coeffgen.subset_sums``.

A rotation RY(theta) maps |0> to cos(theta/2)|0> + sin(theta/2)|1>, so the
automaton's cos(2 pi k x / p) amplitude needs theta = 4 pi k x / p.
"""
from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .coeffgen import CoefficientSet, ParamVector, aikps_window, subset_sums
from .zp_math import check_prime, mod_inverse

GATE_KINDS = ("H", "RY", "RZ", "PHASE", "CX", "CRY", "MCRY")
ROTATIONS = ("RY", "RZ", "PHASE", "CRY", "MCRY")
FOUR_PI = 4 * math.pi


@dataclass(frozen=True)
class Gate:
    kind: str
    target: int
    controls: tuple[int, ...] = ()
    angle: float = 0.0
    pattern: tuple[int, ...] = ()  # required control values, 1 = closed control

    def __post_init__(self):
        if self.kind not in GATE_KINDS:
            raise ValueError(f"unknown gate kind {self.kind!r}")
        controls = tuple(int(c) for c in self.controls)
        object.__setattr__(self, "controls", controls)
        if not self.pattern:
            object.__setattr__(self, "pattern", (1,) * len(controls))
        if len(self.pattern) != len(controls):
            raise ValueError("control pattern length must match controls")
        if self.target in controls or len(set(controls)) != len(controls):
            raise ValueError("controls must be distinct and differ from the target")
        arity = {"H": 0, "RY": 0, "RZ": 0, "PHASE": 0, "CX": 1, "CRY": 1}
        if self.kind in arity and len(controls) != arity[self.kind]:
            raise ValueError(f"{self.kind} takes {arity[self.kind]} control(s)")

    @property
    def qubits(self) -> tuple[int, ...]:
        return (*self.controls, self.target)


def H(q):
    return Gate("H", q)


def RY(q, theta):
    return Gate("RY", q, angle=float(theta))


def RZ(q, theta):
    return Gate("RZ", q, angle=float(theta))


def PHASE(q, phi):
    return Gate("PHASE", q, angle=float(phi))


def CX(c, t):
    return Gate("CX", t, (c,))


def CRY(c, t, theta, polarity=1):
    return Gate("CRY", t, (c,), float(theta), (polarity,))


def MCRY(controls, t, theta, pattern):
    return Gate("MCRY", t, tuple(controls), float(theta), tuple(pattern))


@dataclass
class Circuit:
    num_qubits: int
    layers: list[list[Gate]] = field(default_factory=list)
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.layers = [list(layer) for layer in self.layers]
        for layer in self.layers:
            seen: set[int] = set()
            for g in layer:
                qs = set(g.qubits)
                if qs & seen:
                    raise ValueError("gates within a layer must act on disjoint qubits")
                if max(qs) >= self.num_qubits or min(qs) < 0:
                    raise ValueError(f"gate {g} outside {self.num_qubits}-qubit register")
                seen |= qs

    @property
    def depth(self) -> int:
        return len(self.layers)

    @property
    def width(self) -> int:
        return self.num_qubits

    def gates(self):
        for layer in self.layers:
            yield from layer

    @classmethod
    def from_gates(cls, num_qubits: int, gates, metadata=None) -> "Circuit":
        """ASAP layering: each gate lands one layer after the last gate on its qubits."""
        layers: list[list[Gate]] = []
        front = [0] * num_qubits
        for g in gates:
            at = max(front[q] for q in g.qubits)
            if at == len(layers):
                layers.append([])
            layers[at].append(g)
            for q in g.qubits:
                front[q] = at + 1
        return cls(num_qubits, layers, dict(metadata or {}))

    def extended(self, other: "Circuit") -> "Circuit":
        """Concatenate layer lists (no re-packing across the seam)."""
        if other.num_qubits != self.num_qubits:
            raise ValueError("qubit count mismatch")
        return Circuit(self.num_qubits, self.layers + other.layers, dict(self.metadata))

    # Line format: one gate per line, "KIND target controls... angle", layers
    # separated by "---". Open controls are written with a leading "!".
    def dumps(self) -> str:
        lines = [f"#qubits {self.num_qubits}", "#meta " + json.dumps(self.metadata, sort_keys=True)]
        for i, layer in enumerate(self.layers):
            if i:
                lines.append("---")
            for g in layer:
                ctrls = [str(c) if v else f"!{c}" for c, v in zip(g.controls, g.pattern)]
                lines.append(" ".join([g.kind, str(g.target), *ctrls, repr(g.angle)]))
        return "\n".join(lines) + "\n"

    @classmethod
    def loads(cls, text: str) -> "Circuit":
        n = None
        meta: dict = {}
        layers: list[list[Gate]] = [[]]
        for raw in text.splitlines():
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#qubits"):
                n = int(line.split()[1])
            elif line.startswith("#meta"):
                meta = json.loads(line[len("#meta"):])
            elif line == "---":
                layers.append([])
            else:
                kind, target, *rest = line.split()
                if not rest:
                    raise ValueError(f"malformed gate line {line!r}")
                angle = float(rest.pop())
                controls = tuple(int(c.lstrip("!")) for c in rest)
                pattern = tuple(0 if c.startswith("!") else 1 for c in rest)
                layers[-1].append(Gate(kind, int(target), controls, angle, pattern))
        if n is None:
            raise ValueError("missing #qubits header")
        if layers == [[]]:
            layers = []
        return cls(n, layers, meta)


def rotation_angle(k: int, x: int, p: int) -> float:
    """4 pi k x / p with k x reduced mod p first (exact: RY(4 pi n) = I)."""
    return FOUR_PI * ((int(k) * int(x)) % p) / p


def _bits(j: int, width: int) -> tuple[int, ...]:
    return tuple((j >> i) & 1 for i in range(width))


def _prep_layer(qubits) -> list[Gate]:
    return [H(q) for q in qubits]


def build_deep(K: CoefficientSet, x: int) -> Circuit:
    """Full fingerprint: one multi-controlled rotation per coefficient."""
    p = K.p
    coeffs = list(K.coeffs)
    m = max(0, math.ceil(math.log2(len(coeffs))))
    pad = 2**m - len(coeffs)
    coeffs += [coeffs[-1]] * pad
    controls = tuple(range(m))
    target = m
    layers = [_prep_layer(controls)] if m else []
    for j in reversed(range(2**m)):
        angle = rotation_angle(coeffs[j], x, p)
        if m:
            layers.append([MCRY(controls, target, angle, _bits(j, m))])
        else:
            layers.append([RY(target, angle)])
    meta = {"construction": "deep", "p": p, "x": int(x), "m": m, "padding": pad,
            "prep_qubits": list(controls), "target": target, "effective_coeffs": coeffs}
    return Circuit(m + 1, layers, meta)


def build_shallow(params: ParamVector, x: int) -> Circuit:
    """Subset-sum fingerprint: one controlled rotation per generator plus the offset."""
    p, m = params.p, params.m
    controls = tuple(range(m))
    target = m
    layers = [_prep_layer(controls)]
    for i, t in enumerate(params.T):
        layers.append([CRY(controls[i], target, rotation_angle(t, x, p))])
    layers.append([RY(target, rotation_angle(params.t0, x, p))])
    meta = {"construction": "shallow", "p": p, "x": int(x), "m": m,
            "params": {"t0": params.t0, "T": list(params.T)},
            "prep_qubits": list(controls), "target": target,
            "effective_coeffs": subset_sums(params.t0, params.T, p).tolist()}
    return Circuit(m + 1, layers, meta)


def aikps_digits(p: int, eps: float) -> int:
    """Number of binary-weighted controlled rotations per block, ceil((1+2eps) log2 log2 p)."""
    return math.ceil((1 + 2 * eps) * math.log2(math.log2(p)))


def build_aikps(p: int, eps: float, x: int) -> Circuit:
    """AIKPS fingerprint as consecutive blocks, one per prime r in R.

    Each block applies RY(2**(k-1) * 4 pi r^-1 x / p) controlled by digit
    qubit k, then an unconditional RY(4 pi r^-1 x / p), so digit register
    value b realises multiplier s = b + 1. Blocks live in distinct subspaces
    of a selector register holding the block index; with a single prime the
    selector is empty. All preparation Hadamards share the first layer.
    """
    p = check_prime(p)
    R, s_max = aikps_window(p, eps)
    nd = aikps_digits(p, eps)
    nsel = math.ceil(math.log2(len(R))) if len(R) > 1 else 0
    digits = tuple(range(nd))
    selector = tuple(range(nd, nd + nsel))
    target = nd + nsel
    layers = [_prep_layer(digits + selector)]
    for j, r in enumerate(R):
        r_inv = mod_inverse(r, p)
        sel_pattern = _bits(j, nsel)
        for k in range(1, nd + 1):
            angle = rotation_angle(2 ** (k - 1) * r_inv, x, p)
            if nsel:
                layers.append([MCRY((digits[k - 1], *selector), target, angle, (1, *sel_pattern))])
            else:
                layers.append([CRY(digits[k - 1], target, angle)])
        angle = rotation_angle(r_inv, x, p)
        layers.append([MCRY(selector, target, angle, sel_pattern) if nsel else RY(target, angle)])
    effective = []
    for j in range(2**nsel):
        for b in range(2**nd):
            effective.append((b + 1) * mod_inverse(R[j], p) % p if j < len(R) else 0)
    meta = {"construction": "aikps", "p": p, "x": int(x), "eps": eps, "R": R, "S_max": s_max,
            "s_realised": [1, 2**nd], "unused_selector_states": 2**nsel - len(R),
            "block_depth": nd + 1, "prep_qubits": list(digits + selector), "target": target,
            "effective_coeffs": effective}
    return Circuit(target + 1, layers, meta)


def metrics(c: Circuit) -> dict:
    counts: dict[str, int] = {}
    for g in c.gates():
        counts[g.kind] = counts.get(g.kind, 0) + 1
    rot_depth = sum(1 for layer in c.layers if any(g.kind in ROTATIONS for g in layer))
    return {"depth": c.depth, "width": c.width, "rotation_depth": rot_depth, "gate_counts": counts}


# -- decomposition -----------------------------------------------------------

def ucry_angles(alphas) -> np.ndarray:
    """Gray-code angles for a uniformly controlled RY.

    Branch j of the controls sees sum_i (-1)**popcount(j & gray(i)) * theta_i,
    so theta is the scaled Walsh transform of the requested branch angles.
    """
    alphas = np.asarray(alphas, dtype=float)
    n = alphas.size
    j = np.arange(n)
    gray = j ^ (j >> 1)
    signs = np.array([[(-1) ** bin(j_ & g).count("1") for j_ in j] for g in gray])
    return signs @ alphas / n


def ucry_gates(controls, target, alphas) -> list[Gate]:
    """RY/CX sequence with 2**k CX realising branch angle alphas[j] for control state j."""
    k = len(controls)
    if k == 0:
        return [RY(target, alphas[0])]
    thetas = ucry_angles(alphas)
    out = []
    n = 2**k
    for i in range(n):
        out.append(RY(target, thetas[i]))
        g_now, g_next = i ^ (i >> 1), ((i + 1) % n) ^ (((i + 1) % n) >> 1)
        bit = (g_now ^ g_next).bit_length() - 1
        out.append(CX(controls[bit], target))
    return out


def decompose(c: Circuit, keep_cry: bool = False) -> Circuit:
    """Rewrite CRY and MCRY into {RY, CX}; other gates pass through.

    With ``keep_cry`` only MCRY is rewritten and CRY stays a native
    two-qubit gate.

    Consecutive MCRY gates on one target with one control set are merged
    into a single uniformly controlled rotation before decomposition.
    """
    out: list[Gate] = []
    run: list[Gate] = []

    def flush():
        if not run:
            return
        controls = run[0].controls
        alphas = np.zeros(2 ** len(controls))
        for g in run:
            j = sum(v << i for i, v in enumerate(g.pattern))
            alphas[j] += g.angle
        out.extend(ucry_gates(controls, run[0].target, alphas))
        run.clear()

    for g in c.gates():
        if g.kind == "MCRY":
            if run and (run[0].controls != g.controls or run[0].target != g.target):
                flush()
            run.append(g)
            continue
        flush()
        if g.kind == "CRY" and not keep_cry:
            alphas = [g.angle, 0.0] if g.pattern == (0,) else [0.0, g.angle]
            out.extend(ucry_gates(g.controls, g.target, alphas))
        else:
            out.append(g)
    flush()
    meta = dict(c.metadata)
    meta["decomposed"] = True
    return Circuit.from_gates(c.num_qubits, out, meta)


def _is_identity_ry(theta: float) -> bool:
    r = math.remainder(theta, FOUR_PI)
    return abs(r) < 1e-15


def _ry_to_rz(q: int, theta: float) -> list[Gate]:
    # RY(t) = S . H . RZ(t) . H . S^dagger
    if _is_identity_ry(theta):
        return []
    return [PHASE(q, -math.pi / 2), H(q), RZ(q, theta), H(q), PHASE(q, math.pi / 2)]


def transpile_ry_to_rz(c: Circuit) -> Circuit:
    """Rewrite every RY and CRY into {H, RZ, PHASE, CX}; CRY costs two CX."""
    out: list[Gate] = []
    for g in c.gates():
        if g.kind in ("H", "CX"):
            out.append(g)
        elif g.kind == "RY":
            out.extend(_ry_to_rz(g.target, g.angle))
        elif g.kind == "CRY":
            for h in ucry_gates(g.controls, g.target, [g.angle, 0.0] if g.pattern == (0,) else [0.0, g.angle]):
                out.extend(_ry_to_rz(h.target, h.angle) if h.kind == "RY" else [h])
        else:
            raise ValueError(f"unsupported gate kind for Rz transpilation: {g.kind}")
    meta = dict(c.metadata)
    meta["basis"] = "rz"
    return Circuit.from_gates(c.num_qubits, out, meta)


# -- nearest-neighbour CX accounting -------------------------------------------

def _check_layout(layout, n):
    layout = list(layout)
    if len(layout) != n or sorted(layout) != list(range(n)):
        raise ValueError(f"layout must assign {n} distinct chain positions 0..{n - 1}")
    return layout


def route_linear(c: Circuit, layout) -> list[tuple]:
    """Map to a linear chain; returns ops ("1q", q) / ("cx", a, b) on logical qubits.

    Non-adjacent CX pairs are fixed by walking the CX target toward its
    control with SWAPs (3 CX each). Each SWAP is oriented so that its first
    CX matches the preceding CX on the same pair when there is one, letting
    the cancellation pass remove it.
    """
    n = c.num_qubits
    pos = _check_layout(layout, n)
    at = [0] * n
    for q, s in enumerate(pos):
        at[s] = q
    flat = decompose(c) if any(g.kind in ("CRY", "MCRY") for g in c.gates()) else c
    ops: list[tuple] = []
    last: dict[int, tuple] = {}

    def emit(op):
        ops.append(op)
        for q in op[1:]:
            last[q] = op

    pending: dict[int, list[tuple]] = {q: [] for q in range(n)}

    def flush(q):
        for op in pending[q]:
            emit(op)
        pending[q] = []

    for g in flat.gates():
        if g.kind != "CX":
            # single-qubit gates follow their logical qubit through SWAPs
            pending[g.target].append(("1q", g.target))
            continue
        a, b = g.controls[0], g.target
        while abs(pos[a] - pos[b]) > 1:
            step = 1 if pos[a] > pos[b] else -1
            nb = at[pos[b] + step]
            first = (b, nb) if last.get(b) == ("cx", b, nb) else (nb, b)
            for u, v in (first, first[::-1], first):
                emit(("cx", u, v))
            pos[b], pos[nb] = pos[nb], pos[b]
            at[pos[b]], at[pos[nb]] = b, nb
        flush(a)
        flush(b)
        emit(("cx", a, b))
    for q in range(n):
        flush(q)
    return ops


def cancel_cx_pairs(ops: list[tuple]) -> list[tuple]:
    """Remove back-to-back identical CX pairs with nothing between them on either qubit."""
    out: list[tuple | None] = []
    last: dict[int, int] = {}
    for op in ops:
        if op[0] == "cx":
            a, b = op[1], op[2]
            i, j = last.get(a), last.get(b)
            if i is not None and i == j and out[i] == op:
                out[i] = None
                for q in (a, b):
                    k = i - 1
                    while k >= 0 and (out[k] is None or q not in out[k][1:]):
                        k -= 1
                    if k >= 0:
                        last[q] = k
                    else:
                        last.pop(q, None)
                continue
        out.append(op)
        for q in op[1:]:
            last[q] = len(out) - 1
    return [op for op in out if op is not None]


def nn_cx_count(c: Circuit, layout=None) -> int:
    """CX count on a linear chain after decomposition, routing and pair cancellation."""
    if layout is None:
        layout = list(range(c.num_qubits))
    ops = cancel_cx_pairs(route_linear(c, layout))
    return sum(1 for op in ops if op[0] == "cx")


def best_nn_cx_count(c: Circuit, exhaustive_limit: int = 6) -> tuple[int, list[int]]:
    """Smallest nn_cx_count over layouts (all of them for small circuits)."""
    n = c.num_qubits
    if n <= exhaustive_limit:
        candidates = itertools.permutations(range(n))
    else:
        ident = list(range(n))
        tgt_first = [i + 1 for i in range(n - 1)] + [0]
        tgt_second = [0, *range(2, n), 1]
        candidates = [ident, tgt_first, tgt_second]
        candidates += [[n - 1 - s for s in lay] for lay in candidates]
    best = None
    for lay in candidates:
        count = nn_cx_count(c, lay)
        if best is None or count < best[0]:
            best = (count, list(lay))
    return best
