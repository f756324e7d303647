"""Stabilizer simulation: a reference tableau run and a packed Pauli-frame sampler.

The tableau keeps signs symbolically.  Each row's sign is a constant bit XOR
a linear combination of the random measurement outcomes seen so far, so one
pass decides which detectors are deterministic and what they equal.

The frame sampler stores 64 shots per ``uint64`` word.  Noise is drawn per
batch of :data:`BATCH_SHOTS` shots from ``SeedSequence([seed, batch])``, so a
result depends only on ``(circuit, shots, seed)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .circuits import Circuit, Instruction
from .errors import ContractError, ValidationError

BATCH_SHOTS = 1 << 14
_ONE = np.uint64(1)

# Pauli index order I, X, Y, Z as (x, z) bits.
_PX = np.array([0, 1, 1, 0], dtype=bool)
_PZ = np.array([0, 0, 1, 1], dtype=bool)
PAULI_CHARS = "IXYZ"


# -- tableau ------------------------------------------------------------------


@dataclass
class TableauResult:
    measurement_const: np.ndarray
    measurement_random: np.ndarray  # bool, True where the outcome depends on a fresh coin
    detector_values: np.ndarray
    detectors_deterministic: np.ndarray
    observable_values: np.ndarray
    observables_deterministic: np.ndarray

    @property
    def all_deterministic(self) -> bool:
        return bool(self.detectors_deterministic.all() and self.observables_deterministic.all())


class _Tableau:
    """CHP tableau with affine symbolic signs over outcome variables."""

    def __init__(self, n: int, nvars: int):
        self.n = n
        self.x = np.zeros((2 * n, n), dtype=bool)
        self.z = np.zeros((2 * n, n), dtype=bool)
        self.x[np.arange(n), np.arange(n)] = True
        self.z[n + np.arange(n), np.arange(n)] = True
        self.r = np.zeros(2 * n, dtype=bool)
        self.rs = np.zeros((2 * n, max(nvars, 1)), dtype=bool)
        self.nvars = 0

    def h(self, q):
        self.r ^= self.x[:, q] & self.z[:, q]
        self.x[:, q], self.z[:, q] = self.z[:, q].copy(), self.x[:, q].copy()

    def cx(self, a, b):
        xa, zb = self.x[:, a], self.z[:, b]
        self.r ^= xa & zb & ~(self.x[:, b] ^ self.z[:, a])
        self.x[:, b] ^= xa
        self.z[:, a] ^= zb

    def cz(self, a, b):
        self.h(b)
        self.cx(a, b)
        self.h(b)

    def pauli(self, q, k):
        if _PX[k]:
            self.r ^= self.z[:, q]
        if _PZ[k]:
            self.r ^= self.x[:, q]

    @staticmethod
    def _phase4(x, z, r):
        return (2 * r.astype(np.int64) + np.count_nonzero(x & z, axis=-1)) % 4

    def measure(self, q) -> tuple[bool, np.ndarray | None, bool]:
        """Z measurement. Returns (constant, symbolic part or None, random?)."""
        n = self.n
        stab_hits = np.flatnonzero(self.x[n:, q])
        if len(stab_hits):
            p = n + int(stab_hits[0])
            rows = np.flatnonzero(self.x[:, q])
            rows = rows[rows != p]
            if len(rows):
                xi, zi = self.x[rows], self.z[rows]
                ph = (
                    self._phase4(xi, zi, self.r[rows])
                    + self._phase4(self.x[p], self.z[p], self.r[p])
                    + 2 * np.count_nonzero(zi & self.x[p], axis=1)
                ) % 4
                nx, nz = xi ^ self.x[p], zi ^ self.z[p]
                self.r[rows] = ((ph - np.count_nonzero(nx & nz, axis=1)) % 4) // 2 == 1
                self.rs[rows] ^= self.rs[p]
                self.x[rows], self.z[rows] = nx, nz
            d = p - n
            self.x[d], self.z[d], self.r[d], self.rs[d] = self.x[p], self.z[p], self.r[p], self.rs[p]
            self.x[p] = False
            self.z[p] = False
            self.z[p, q] = True
            v = self.nvars
            self.nvars += 1
            if v >= self.rs.shape[1]:
                self.rs = np.concatenate([self.rs, np.zeros_like(self.rs)], axis=1)
            self.r[p] = False
            self.rs[p] = False
            self.rs[p, v] = True
            sym = np.zeros(self.rs.shape[1], dtype=bool)
            sym[v] = True
            return False, sym, True
        sel = n + np.flatnonzero(self.x[:n, q])
        xs, zs = self.x[sel], self.z[sel]
        ph = int(self._phase4(xs, zs, self.r[sel]).sum())
        cross = zs.astype(np.int64) @ xs.T.astype(np.int64)
        ph += 2 * int(np.tril(cross, -1).sum())
        fx, fz = np.bitwise_xor.reduce(xs, axis=0), np.bitwise_xor.reduce(zs, axis=0)
        ph -= int(np.count_nonzero(fx & fz))
        const = (ph % 4) // 2 == 1
        sym = np.bitwise_xor.reduce(self.rs[sel], axis=0) if len(sel) else np.zeros(self.rs.shape[1], dtype=bool)
        return const, sym, False

    def flip_if(self, q, const: bool, sym: np.ndarray):
        """Apply X on q conditioned on an affine outcome (used to reset)."""
        rows = self.z[:, q]
        if const:
            self.r ^= rows
        width = min(len(sym), self.rs.shape[1])
        self.rs[np.ix_(rows, np.arange(width))] ^= sym[:width]


def simulate_tableau(c: Circuit) -> TableauResult:
    """Noiseless reference run; noise channels are ignored."""
    n = c.used_qubits()
    t = _Tableau(n, c.num_measurements + c.num_qubits)
    consts: list[bool] = []
    syms: list[np.ndarray] = []
    rand: list[bool] = []
    dets, det_sym, obs, obs_sym = [], [], {}, {}

    def record_value(targets):
        total_c = False
        total_s = np.zeros(t.rs.shape[1], dtype=bool)
        for off in targets:
            i = len(consts) + off
            total_c ^= consts[i]
            s = syms[i]
            total_s[: len(s)] ^= s
        return total_c, total_s

    for ins in c.instructions:
        name, tg = ins.name, ins.targets
        if name == "H":
            for q in tg:
                t.h(q)
        elif name in ("X", "Y", "Z"):
            for q in tg:
                t.pauli(q, PAULI_CHARS.index(name))
        elif name == "CX":
            for a, b in zip(tg[::2], tg[1::2]):
                t.cx(a, b)
        elif name == "CZ":
            for a, b in zip(tg[::2], tg[1::2]):
                t.cz(a, b)
        elif name in ("M", "MX", "R", "RX"):
            for q in tg:
                if name in ("MX", "RX"):
                    t.h(q)
                cst, sym, rnd = t.measure(q)
                if name in ("M", "MX"):
                    consts.append(cst)
                    syms.append(sym.copy())
                    rand.append(rnd)
                else:
                    t.flip_if(q, cst, sym)
                if name in ("MX", "RX"):
                    t.h(q)
        elif name == "DETECTOR":
            cst, sym = record_value(tg)
            dets.append(cst)
            det_sym.append(sym.any())
        elif name == "OBSERVABLE_INCLUDE":
            j = int(ins.args[0])
            cst, sym = record_value(tg)
            prev_c, prev_s = obs.get(j, (False, np.zeros(0, dtype=bool)))
            width = max(len(sym), len(prev_s))
            s = np.zeros(width, dtype=bool)
            s[: len(sym)] ^= sym
            s[: len(prev_s)] ^= prev_s
            obs[j] = (prev_c ^ cst, s)
    nobs = c.num_observables
    return TableauResult(
        measurement_const=np.array(consts, dtype=bool),
        measurement_random=np.array(rand, dtype=bool),
        detector_values=np.array(dets, dtype=bool),
        detectors_deterministic=~np.array(det_sym, dtype=bool),
        observable_values=np.array([obs.get(j, (False, None))[0] for j in range(nobs)], dtype=bool),
        observables_deterministic=np.array(
            [not (j in obs and obs[j][1].any()) for j in range(nobs)], dtype=bool
        ),
    )


# -- compiled frame program ---------------------------------------------------


@dataclass
class _Op:
    kind: str
    a: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    b: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    p: float = 0.0
    index: int = -1  # instruction index
    disjoint: bool = True


@dataclass
class _Program:
    ops: list[_Op]
    num_qubits: int
    num_measurements: int
    detectors: list[np.ndarray]  # absolute measurement indices
    observables: list[np.ndarray]
    reference_detectors: np.ndarray
    reference_observables: np.ndarray


def _compile(c: Circuit, check_reference: bool = True) -> _Program:
    ops: list[_Op] = []
    m = 0
    dets: list[np.ndarray] = []
    obs: dict[int, list[int]] = {}
    for idx, ins in enumerate(c.instructions):
        tg = np.array(ins.targets, dtype=np.int64)
        name = ins.name
        if name == "DETECTOR":
            dets.append(m + tg)
            continue
        if name == "OBSERVABLE_INCLUDE":
            obs.setdefault(int(ins.args[0]), []).extend((m + tg).tolist())
            continue
        if name in ("TICK", "X", "Y", "Z"):
            continue
        if name in ("CX", "CZ", "DEPOLARIZE2"):
            a, b = tg[::2], tg[1::2]
            op = _Op(name, a, b, ins.args[0] if ins.args else 0.0, idx)
            op.disjoint = len(np.unique(tg)) == len(tg)
        else:
            op = _Op(name, tg, np.zeros(0, dtype=np.int64), ins.args[0] if ins.args else 0.0, idx)
            op.disjoint = len(np.unique(tg)) == len(tg)
        if name in ("M", "MX"):
            op.b = np.arange(m, m + len(tg))
            m += len(tg)
        ops.append(op)
    nobs = c.num_observables
    observables = [np.array(sorted(obs.get(j, [])), dtype=np.int64) for j in range(nobs)]
    if check_reference:
        ref = simulate_tableau(c)
        if not ref.all_deterministic:
            bad = np.flatnonzero(~ref.detectors_deterministic)
            raise ContractError(
                f"reference run is not deterministic (detectors {bad[:8].tolist()}); check the schedule"
            )
        rd, ro = ref.detector_values, ref.observable_values
    else:
        rd, ro = np.zeros(len(dets), dtype=bool), np.zeros(nobs, dtype=bool)
    return _Program(ops, c.used_qubits(), m, dets, observables, rd, ro)


_PROGRAM_CACHE: dict[int, tuple[Circuit, int, _Program]] = {}


def _program(c: Circuit) -> _Program:
    key = id(c)
    hit = _PROGRAM_CACHE.get(key)
    if hit is not None and hit[0] is c and hit[1] == len(c.instructions):
        return hit[2]
    prog = _compile(c)
    if len(_PROGRAM_CACHE) > 32:
        _PROGRAM_CACHE.clear()
    _PROGRAM_CACHE[key] = (c, len(c.instructions), prog)
    return prog


def _xor_bits(frame: np.ndarray, qubits: np.ndarray, shots: np.ndarray) -> None:
    if len(qubits):
        np.bitwise_xor.at(frame, (qubits, shots >> 6), _ONE << (shots & 63).astype(np.uint64))


def _run_frames(
    prog: _Program,
    words: int,
    rng: np.random.Generator | None,
    injections: dict[int, tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]] | None = None,
) -> np.ndarray:
    """Propagate frames; return measurement flip record of shape (measurements, words)."""
    shots = words * 64
    fx = np.zeros((prog.num_qubits, words), dtype=np.uint64)
    fz = np.zeros_like(fx)
    rec = np.zeros((prog.num_measurements, words), dtype=np.uint64)
    for op in prog.ops:
        k = op.kind
        if k == "CX":
            if op.disjoint:
                fx[op.b] ^= fx[op.a]
                fz[op.a] ^= fz[op.b]
            else:
                for a, b in zip(op.a, op.b):
                    fx[b] ^= fx[a]
                    fz[a] ^= fz[b]
        elif k == "CZ":
            if op.disjoint:
                fz[op.a] ^= fx[op.b]
                fz[op.b] ^= fx[op.a]
            else:
                for a, b in zip(op.a, op.b):
                    fz[a] ^= fx[b]
                    fz[b] ^= fx[a]
        elif k == "H":
            if op.disjoint:
                fx[op.a], fz[op.a] = fz[op.a], fx[op.a].copy()
            else:
                for q in op.a:
                    fx[q], fz[q] = fz[q].copy(), fx[q].copy()
        elif k in ("R", "RX"):
            fx[op.a] = 0
            fz[op.a] = 0
        elif k == "M":
            rec[op.b] = fx[op.a]
        elif k == "MX":
            rec[op.b] = fz[op.a]
        else:  # noise
            if rng is not None and op.p > 0:
                _apply_noise(op, fx, fz, shots, rng)
            if injections and op.index in injections:
                q, s, bx, bz = injections[op.index]
                _xor_bits(fx, q[bx], s[bx])
                _xor_bits(fz, q[bz], s[bz])
    return rec


def _apply_noise(op: _Op, fx, fz, shots: int, rng: np.random.Generator) -> None:
    locations = len(op.a)
    total = locations * shots
    count = int(rng.binomial(total, op.p))
    if count == 0:
        return
    pos = rng.choice(total, size=count, replace=False) if count < total else np.arange(total)
    loc, s = pos // shots, pos % shots
    if op.kind == "X_ERROR":
        _xor_bits(fx, op.a[loc], s)
    elif op.kind == "Z_ERROR":
        _xor_bits(fz, op.a[loc], s)
    elif op.kind == "DEPOLARIZE1":
        comp = rng.integers(1, 4, size=count)
        q = op.a[loc]
        _xor_bits(fx, q[_PX[comp]], s[_PX[comp]])
        _xor_bits(fz, q[_PZ[comp]], s[_PZ[comp]])
    elif op.kind == "DEPOLARIZE2":
        comp = rng.integers(1, 16, size=count)
        c1, c2 = comp >> 2, comp & 3
        for qs, cc in ((op.a[loc], c1), (op.b[loc], c2)):
            _xor_bits(fx, qs[_PX[cc]], s[_PX[cc]])
            _xor_bits(fz, qs[_PZ[cc]], s[_PZ[cc]])


def _parities(rec: np.ndarray, groups: list[np.ndarray]) -> np.ndarray:
    out = np.zeros((len(groups), rec.shape[1]), dtype=np.uint64)
    for i, g in enumerate(groups):
        if len(g):
            out[i] = np.bitwise_xor.reduce(rec[g], axis=0)
    return out


def _unpack_shots(words: np.ndarray, shots: int) -> np.ndarray:
    """(rows, words) packed bits -> (shots, rows) uint8."""
    if words.shape[0] == 0:
        return np.zeros((shots, 0), dtype=np.uint8)
    raw = np.ascontiguousarray(words.astype("<u8")).view(np.uint8)
    bits = np.unpackbits(raw, axis=1, bitorder="little", count=shots)
    return bits.T.copy()


def sample(c: Circuit, shots: int, seed: int = 0) -> np.ndarray:
    """Shot matrix ``(shots, detectors + observables)`` of 0/1 values."""
    det, obs = sample_split(c, shots, seed)
    return np.concatenate([det, obs], axis=1)


def sample_split(c: Circuit, shots: int, seed: int = 0) -> tuple[np.ndarray, np.ndarray]:
    if shots < 0:
        raise ValidationError("shots must be non-negative")
    prog = _program(c)
    nd, no = len(prog.detectors), len(prog.observables)
    det = np.zeros((shots, nd), dtype=np.uint8)
    obs = np.zeros((shots, no), dtype=np.uint8)
    for batch, start in enumerate(range(0, shots, BATCH_SHOTS)):
        size = min(BATCH_SHOTS, shots - start)
        rng = np.random.default_rng(np.random.SeedSequence([int(seed), batch]))
        words = (BATCH_SHOTS + 63) // 64
        rec = _run_frames(prog, words, rng)
        det[start : start + size] = _unpack_shots(_parities(rec, prog.detectors), size)
        obs[start : start + size] = _unpack_shots(_parities(rec, prog.observables), size)
    det ^= prog.reference_detectors.astype(np.uint8)
    obs ^= prog.reference_observables.astype(np.uint8)
    return det, obs


@dataclass(frozen=True)
class Fault:
    """A Pauli placed on the noise instruction at ``instruction`` (index into ``c.instructions``).

    ``paulis`` maps qubit -> one of ``"X"``, ``"Y"``, ``"Z"``.
    """

    instruction: int
    paulis: tuple[tuple[int, str], ...]


def propagate_faults(c: Circuit, faults: list[Fault]) -> tuple[np.ndarray, np.ndarray]:
    """Detector and observable flips caused by each fault alone, noise otherwise off.

    Returns two uint8 arrays of shape ``(len(faults), ...)``.
    """
    prog = _compile(c, check_reference=False)
    noise_idx = {op.index for op in prog.ops if op.kind in ("DEPOLARIZE1", "DEPOLARIZE2", "X_ERROR", "Z_ERROR")}
    per: dict[int, list[tuple[int, int, str]]] = {}
    for s, f in enumerate(faults):
        if f.instruction not in noise_idx:
            raise ValidationError(f"instruction {f.instruction} is not a noise channel")
        for q, ch in f.paulis:
            per.setdefault(f.instruction, []).append((q, s, ch))
    inj = {}
    for idx, items in per.items():
        q = np.array([it[0] for it in items], dtype=np.int64)
        s = np.array([it[1] for it in items], dtype=np.int64)
        k = np.array([PAULI_CHARS.index(it[2]) for it in items], dtype=np.int64)
        inj[idx] = (q, s, _PX[k], _PZ[k])
    shots = len(faults)
    words = max(1, (shots + 63) // 64)
    rec = _run_frames(prog, words, None, inj)
    return (
        _unpack_shots(_parities(rec, prog.detectors), shots),
        _unpack_shots(_parities(rec, prog.observables), shots),
    )


# -- detector error model -------------------------------------------------------


@dataclass(frozen=True)
class FaultMechanism:
    probability: float
    detectors: tuple[int, ...]
    observables: tuple[int, ...]


@dataclass
class DetectorErrorModel:
    num_detectors: int
    num_observables: int
    mechanisms: list[FaultMechanism]
    detector_coords: list[tuple[float, ...]] = field(default_factory=list)

    def to_text(self) -> str:
        lines = []
        for mech in self.mechanisms:
            parts = [f"D{d}" for d in mech.detectors] + [f"L{o}" for o in mech.observables]
            lines.append(f"error({mech.probability:.12g}) " + " ".join(parts))
        for i, co in enumerate(self.detector_coords):
            lines.append(f"detector({', '.join(f'{v:g}' for v in co)}) D{i}")
        return "\n".join(lines) + ("\n" if lines else "")

    def detector_marginals(self) -> np.ndarray:
        """Fire probability of every detector assuming independent mechanisms."""
        q = np.zeros(self.num_detectors)
        for mech in self.mechanisms:
            for d in mech.detectors:
                q[d] = q[d] * (1 - mech.probability) + mech.probability * (1 - q[d])
        return q


def merge_probability(p1: float, p2: float) -> float:
    return p1 * (1 - p2) + p2 * (1 - p1)


def _components(c: Circuit) -> tuple[list[Fault], list[float]]:
    faults, probs = [], []
    for idx, ins in enumerate(c.instructions):
        if not ins.is_noise:
            continue
        p = ins.args[0]
        if p == 0:
            continue
        if ins.name == "X_ERROR":
            for q in ins.targets:
                faults.append(Fault(idx, ((q, "X"),)))
                probs.append(p)
        elif ins.name == "Z_ERROR":
            for q in ins.targets:
                faults.append(Fault(idx, ((q, "Z"),)))
                probs.append(p)
        elif ins.name == "DEPOLARIZE1":
            for q in ins.targets:
                for ch in "XYZ":
                    faults.append(Fault(idx, ((q, ch),)))
                    probs.append(p / 3)
        else:
            for a, b in zip(ins.targets[::2], ins.targets[1::2]):
                for comp in range(1, 16):
                    paulis = tuple(
                        (q, PAULI_CHARS[k]) for q, k in ((a, comp >> 2), (b, comp & 3)) if k
                    )
                    faults.append(Fault(idx, paulis))
                    probs.append(p / 15)
    return faults, probs


def extract_dem(c: Circuit) -> DetectorErrorModel:
    """Independent fault mechanisms, one per Pauli component of each noise channel."""
    _program(c)  # enforces a deterministic reference
    faults, probs = _components(c)
    merged: dict[tuple[tuple[int, ...], tuple[int, ...]], float] = {}
    nd, no = c.num_detectors, c.num_observables
    for start in range(0, len(faults), BATCH_SHOTS):
        chunk = faults[start : start + BATCH_SHOTS]
        det, obs = propagate_faults(c, chunk)
        packed = np.packbits(np.concatenate([det, obs], axis=1), axis=1)
        _, first, inverse = np.unique(packed, axis=0, return_index=True, return_inverse=True)
        inverse = inverse.reshape(-1)
        keys = []
        for f in first:
            keys.append((tuple(np.flatnonzero(det[f]).tolist()), tuple(np.flatnonzero(obs[f]).tolist())))
        for i, u in enumerate(inverse):
            key = keys[u]
            if not key[0] and not key[1]:
                continue
            p = probs[start + i]
            merged[key] = merge_probability(merged[key], p) if key in merged else p
    mechs = [FaultMechanism(p, d, o) for (d, o), p in sorted(merged.items())]
    return DetectorErrorModel(nd, no, mechs, [tuple(x) for x in c.detector_coords()])
