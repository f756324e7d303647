"""Pauli operators, logical bases, and verification of logical Clifford circuits.

Paulis use the symplectic convention P <-> (x | z) with product
``sp(P, Q) = x_P·z_Q + z_P·x_Q (mod 2)``.
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from pathlib import Path

import numpy as np

from . import f2la
from .codes import StabilizerCode
from .errors import ShapeError, ValidationError
from .f2la import BitMatrix


@dataclass
class PauliOp:
    """Hermitian Pauli ``sign * ⊗_q P_q`` stored as x/z bit vectors."""

    n: int
    x: np.ndarray
    z: np.ndarray
    sign: int = 1

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=np.uint8) & 1
        self.z = np.asarray(self.z, dtype=np.uint8) & 1
        if self.x.shape != (self.n,) or self.z.shape != (self.n,):
            raise ShapeError(f"Pauli parts must have length {self.n}")

    @classmethod
    def identity(cls, n: int) -> PauliOp:
        return cls(n, np.zeros(n), np.zeros(n))

    @classmethod
    def from_support(cls, n: int, kind: str, qubits, one_based: bool = False) -> PauliOp:
        p = cls.identity(n)
        for q in qubits:
            q = q - 1 if one_based else q
            if not 0 <= q < n:
                raise ShapeError(f"qubit {q} out of range for n={n}")
            if kind in "XY":
                p.x[q] ^= 1
            if kind in "ZY":
                p.z[q] ^= 1
        return p

    @classmethod
    def parse(cls, text: str, n: int) -> PauliOp:
        """Parse ``"X1 X2 X3"`` or ``"-Z1 Z4"`` (1-based)."""
        text = text.strip()
        sign = 1
        if text.startswith("-"):
            sign, text = -1, text[1:]
        p = cls.identity(n)
        for tok in text.replace("*", " ").split():
            match = re.fullmatch(r"([IXYZ])_?(\d+)", tok)
            if not match:
                raise ValidationError(f"bad Pauli token {tok!r}")
            kind, q = match.group(1), int(match.group(2)) - 1
            if not 0 <= q < n:
                raise ShapeError(f"qubit {q + 1} out of range for n={n}")
            p = p * cls.from_support(n, kind, [q])
        p.sign *= sign
        return p

    @classmethod
    def from_symplectic(cls, vec, n: int) -> PauliOp:
        vec = np.asarray(vec, dtype=np.uint8)
        return cls(n, vec[:n], vec[n:])

    def symplectic(self) -> np.ndarray:
        return np.concatenate([self.x, self.z])

    def sp(self, other: PauliOp) -> int:
        if other.n != self.n:
            raise ShapeError("Pauli size mismatch")
        return int((self.x @ other.z.astype(np.int64) + self.z @ other.x.astype(np.int64)) & 1)

    def commutes(self, other: PauliOp) -> bool:
        return self.sp(other) == 0

    @property
    def weight(self) -> int:
        return int(np.count_nonzero(self.x | self.z))

    @property
    def kind(self) -> str:
        """``"X"``, ``"Z"`` for pure operators, ``"mixed"`` otherwise."""
        if not self.z.any():
            return "X"
        if not self.x.any():
            return "Z"
        return "mixed"

    def __mul__(self, other: PauliOp) -> PauliOp:
        """Product, keeping a real sign; raises if the operators anticommute."""
        if self.sp(other):
            raise ValidationError("product of anticommuting Paulis is not Hermitian")
        # With P = i^{x·z} X^x Z^z, moving Z^{z1} past X^{x2} gives (-1)^{z1·x2}.
        ph = (
            int(self.x @ self.z.astype(np.int64))
            + int(other.x @ other.z.astype(np.int64))
            + 2 * int(self.z @ other.x.astype(np.int64))
        )
        x = self.x ^ other.x
        z = self.z ^ other.z
        ph -= int(x @ z.astype(np.int64))
        sign = self.sign * other.sign * (1 if ph % 4 == 0 else -1)
        return PauliOp(self.n, x, z, sign)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, PauliOp)
            and self.n == other.n
            and self.sign == other.sign
            and np.array_equal(self.x, other.x)
            and np.array_equal(self.z, other.z)
        )

    def __str__(self) -> str:
        letters = {(1, 0): "X", (0, 1): "Z", (1, 1): "Y"}
        toks = [f"{letters[(int(a), int(b))]}{q + 1}" for q, (a, b) in enumerate(zip(self.x, self.z)) if a or b]
        body = " ".join(toks) if toks else "I"
        return ("-" if self.sign < 0 else "") + body


@dataclass
class LogicalBasis:
    pairs: list[tuple[PauliOp, PauliOp]] = field(default_factory=list)

    @property
    def k(self) -> int:
        return len(self.pairs)

    def x_ops(self) -> list[PauliOp]:
        return [p[0] for p in self.pairs]

    def z_ops(self) -> list[PauliOp]:
        return [p[1] for p in self.pairs]

    @classmethod
    def from_strings(cls, n: int, xs: list[str], zs: list[str]) -> LogicalBasis:
        if len(xs) != len(zs):
            raise ShapeError("need as many X logicals as Z logicals")
        return cls([(PauliOp.parse(a, n), PauliOp.parse(b, n)) for a, b in zip(xs, zs)])


def stabilizer_matrix(code: StabilizerCode) -> BitMatrix:
    """Stabilizer generators as symplectic rows (x | z)."""
    n = code.n
    zx = np.zeros((code.h_x.rows, n), dtype=np.uint8)
    zz = np.zeros((code.h_z.rows, n), dtype=np.uint8)
    top = np.concatenate([code.h_x.to_dense(), zx], axis=1)
    bottom = np.concatenate([zz, code.h_z.to_dense()], axis=1)
    return BitMatrix.from_dense(np.concatenate([top, bottom], axis=0).reshape(-1, 2 * n))


def _swap_halves(m: BitMatrix, n: int) -> BitMatrix:
    dense = m.to_dense()
    return BitMatrix.from_dense(np.concatenate([dense[:, n:], dense[:, :n]], axis=1).reshape(-1, 2 * n))


def centralizer_basis(code: StabilizerCode) -> list[PauliOp]:
    """Generators of C(S): kernel of the check map composed with the symplectic form."""
    stab = stabilizer_matrix(code)
    kernel = f2la.nullspace(_swap_halves(stab, code.n))
    return [PauliOp.from_symplectic(r, code.n) for r in kernel.to_dense()]


def _sp_vec(a: np.ndarray, b: np.ndarray, n: int) -> int:
    return int((a[:n].astype(np.int64) @ b[n:] + a[n:].astype(np.int64) @ b[:n]) & 1)


def _min_weight_in_coset(vec: np.ndarray, stabs: np.ndarray, n: int, cap_bits: int) -> np.ndarray:
    """Lowest-weight element of ``vec + span(stabs)``; ``vec`` unchanged if the span is too big."""
    basis = f2la.rref(BitMatrix.from_dense(stabs.reshape(-1, 2 * n)))[0].to_dense()
    if basis.shape[0] > cap_bits:
        return vec
    coset = vec[None, :].copy()
    for row in basis:
        coset = np.concatenate([coset, coset ^ row], axis=0)
    weights = np.count_nonzero(coset[:, :n] | coset[:, n:], axis=1)
    return coset[int(np.argmin(weights))]


def logical_basis(code: StabilizerCode, reduce_weight: bool = True, cap_bits: int = 16) -> LogicalBasis:
    """Symplectic pairs spanning C(S) mod S.

    Centralizer generators are scanned in ascending lexicographic bit order,
    kept when independent of the stabilizers and earlier picks, then paired by
    symplectic Gram-Schmidt.  For CSS codes every representative stays pure X
    or pure Z.  With ``reduce_weight`` each representative is replaced by the
    lightest element of its stabilizer coset when that coset has at most
    ``2**cap_bits`` elements.
    """
    n = code.n
    stab = stabilizer_matrix(code)
    cands = sorted((tuple(int(b) for b in p.symplectic()) for p in centralizer_basis(code)))
    chosen: list[np.ndarray] = []
    span = stab
    r = f2la.rank(span)
    for c in cands:
        vec = np.array(c, dtype=np.uint8)
        trial = BitMatrix.vstack([span, BitMatrix.from_dense(vec)])
        r2 = f2la.rank(trial)
        if r2 > r:
            chosen.append(vec)
            span, r = trial, r2
    pairs: list[tuple[np.ndarray, np.ndarray]] = []
    rest = chosen
    while rest:
        v, rest = rest[0], rest[1:]
        j = next((i for i, w in enumerate(rest) if _sp_vec(v, w, n)), None)
        if j is None:
            raise ValidationError("logical candidates are not symplectically paired")
        w = rest[j]
        rest = rest[:j] + rest[j + 1 :]
        rest = [u ^ (_sp_vec(u, w, n) * v) ^ (_sp_vec(u, v, n) * w) for u in rest]
        if not v[:n].any():  # v is Z-type, so it is the Z representative
            v, w = w, v
        pairs.append((v, w))
    if reduce_weight:
        dense_x = np.concatenate([code.h_x.to_dense(), np.zeros((code.h_x.rows, n), np.uint8)], axis=1)
        dense_z = np.concatenate([np.zeros((code.h_z.rows, n), np.uint8), code.h_z.to_dense()], axis=1)
        allstab = stab.to_dense()
        reduced = []
        for xv, zv in pairs:
            sx = dense_x if not xv[n:].any() else allstab
            sz = dense_z if not zv[:n].any() else allstab
            reduced.append((_min_weight_in_coset(xv, sx, n, cap_bits), _min_weight_in_coset(zv, sz, n, cap_bits)))
        pairs = reduced
    return LogicalBasis([(PauliOp.from_symplectic(a, n), PauliOp.from_symplectic(b, n)) for a, b in pairs])


def _in_stabilizer_span(space: f2la.RowSpace, vec: np.ndarray) -> bool:
    return space.contains(BitMatrix.from_dense(vec).data[0])


def verify_logical_basis(code: StabilizerCode, basis: LogicalBasis) -> bool:
    for xl, zl in basis.pairs:
        if xl.n != code.n or zl.n != code.n:
            raise ShapeError(f"logical acts on {xl.n} qubits, code has {code.n}")
    if basis.k != code.k:
        return False
    stab = stabilizer_matrix(code)
    space = f2la.RowSpace(stab)
    stab_rows = stab.to_dense()
    xs, zs = basis.x_ops(), basis.z_ops()
    for i in range(basis.k):
        for j in range(basis.k):
            if xs[i].sp(zs[j]) != int(i == j):
                return False
            if i < j and (xs[i].sp(xs[j]) or zs[i].sp(zs[j])):
                return False
    for op in xs + zs:
        vec = op.symplectic()
        if any(_sp_vec(vec, s, code.n) for s in stab_rows):
            return False
        if _in_stabilizer_span(space, vec):
            return False
    return True


# -- Clifford conjugation -----------------------------------------------------

_PAULI_MATS = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}
_LETTER_BITS = {"I": (0, 0), "X": (1, 0), "Z": (0, 1), "Y": (1, 1)}
_BITS_LETTER = {v: k for k, v in _LETTER_BITS.items()}


def _rot(axis: str, angle: float) -> np.ndarray:
    return np.cos(angle / 2) * np.eye(2) - 1j * np.sin(angle / 2) * _PAULI_MATS[axis]


_Q = np.pi / 2
_SQRT_X = _rot("X", _Q)
_S = np.diag([1, 1j])

# C applies +π/2 about Z, then +π/2 about Y.  C' applies +π/2 about X, then
# +π/2 about Y, i.e. the matrix product R_y R_x; this is the ordering under
# which the bundled H_L2 and CNOT sequences preserve the [[12,2,3]]
# stabilizer group.  Verification is up to Pauli factors, so rotation signs
# do not matter; only the order does.
ONE_QUBIT_GATES: dict[str, np.ndarray] = {
    "I": np.eye(2, dtype=complex),
    "X": _PAULI_MATS["X"],
    "Y": _PAULI_MATS["Y"],
    "Z": _PAULI_MATS["Z"],
    "H": np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2),
    "S": _S,
    "S_DAG": _S.conj().T,
    "SQRT_X": _SQRT_X,
    "SQRT_X_DAG": _SQRT_X.conj().T,
    "C": _rot("Y", _Q) @ _rot("Z", _Q),
    "C_PRIME": _rot("Y", _Q) @ _rot("X", _Q),
}
_CZ = np.diag([1, 1, 1, -1]).astype(complex)
_CNOT = np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex)
TWO_QUBIT_GATES: dict[str, np.ndarray] = {"CZ": _CZ, "CNOT": _CNOT}
GATE_ALIASES = {
    "CX": "CNOT",
    "SDG": "S_DAG",
    "S_DAGGER": "S_DAG",
    "SQRTX": "SQRT_X",
    "SQRT_X_DAGGER": "SQRT_X_DAG",
    "SQRTX_DAG": "SQRT_X_DAG",
    "C'": "C_PRIME",
    "CPRIME": "C_PRIME",
}


@lru_cache(maxsize=None)
def _conjugation_table(name: str) -> dict[str, tuple[int, str]]:
    """Map each Pauli string P to (sign, Q) with U P U^† = sign·Q."""
    if name in ONE_QUBIT_GATES:
        u, labels = ONE_QUBIT_GATES[name], ["".join(p) for p in itertools.product("IXYZ", repeat=1)]
    else:
        u, labels = TWO_QUBIT_GATES[name], ["".join(p) for p in itertools.product("IXYZ", repeat=2)]

    def mat(label):
        out = np.eye(1, dtype=complex)
        for ch in label:
            out = np.kron(out, _PAULI_MATS[ch])
        return out

    table = {}
    for p in labels:
        img = u @ mat(p) @ u.conj().T
        for q in labels:
            overlap = np.trace(mat(q).conj().T @ img) / (2 ** len(p))
            if abs(abs(overlap) - 1) < 1e-9:
                table[p] = (int(round(overlap.real)), q)
                break
        else:  # pragma: no cover - every listed gate is Clifford
            raise ValidationError(f"gate {name} is not Clifford")
    return table


@dataclass(frozen=True)
class Gate:
    name: str
    qubits: tuple[int, ...]  # 0-based


def canonical_gate_name(name: str) -> str:
    key = name.strip().upper()
    key = GATE_ALIASES.get(key, key)
    if key not in ONE_QUBIT_GATES and key not in TWO_QUBIT_GATES:
        raise ValidationError(f"unsupported gate {name!r}")
    return key


def parse_gate_sequence(text: str) -> list[Gate]:
    """One gate per line, 1-based qubits: ``H 2``, ``CZ 1 2``, ``C 4 5``, ``SQRT_X_DAG 3``.

    Single-qubit gate lines may list several qubits; two-qubit lines list pairs.
    ``#`` starts a comment.
    """
    gates = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        head, *args = line.split()
        name = canonical_gate_name(head)
        try:
            qs = [int(a) - 1 for a in args]
        except ValueError:
            raise ValidationError(f"line {lineno}: bad qubit index in {raw!r}") from None
        if not qs:
            raise ValidationError(f"line {lineno}: gate without targets")
        if any(q < 0 for q in qs):
            raise ShapeError(f"line {lineno}: qubit indices are 1-based")
        if name in TWO_QUBIT_GATES:
            if len(qs) % 2:
                raise ValidationError(f"line {lineno}: {name} needs qubit pairs")
            gates.extend(Gate(name, (qs[i], qs[i + 1])) for i in range(0, len(qs), 2))
        else:
            gates.extend(Gate(name, (q,)) for q in qs)
    return gates


def load_gate_sequence(path: str | Path) -> list[Gate]:
    return parse_gate_sequence(Path(path).read_text())


BUNDLED_GATES = ("h_l1", "h_l1_completed", "h_l2", "s_l1", "s_l2", "cnot_l1_l2")


def bundled_gate_sequence(name: str) -> list[Gate]:
    """Gate sequences for the [[12,2,3]] code shipped with the package."""
    if name not in BUNDLED_GATES:
        raise ValidationError(f"unknown bundled sequence {name!r}; choose from {', '.join(BUNDLED_GATES)}")
    return parse_gate_sequence((resources.files("tbcodes") / "data" / "gates" / f"{name}.txt").read_text())


def conjugate(p: PauliOp, gates: list[Gate]) -> PauliOp:
    """Heisenberg image ``U P U^†`` for the circuit U that applies ``gates`` in order."""
    x, z, sign = p.x.copy(), p.z.copy(), p.sign
    for g in gates:
        if any(q >= p.n for q in g.qubits):
            raise ShapeError(f"gate {g.name} on qubit {max(g.qubits) + 1} exceeds n={p.n}")
        label = "".join(_BITS_LETTER[(int(x[q]), int(z[q]))] for q in g.qubits)
        s, img = _conjugation_table(g.name)[label]
        sign *= s
        for q, ch in zip(g.qubits, img):
            x[q], z[q] = _LETTER_BITS[ch]
    return PauliOp(p.n, x, z, sign)


# -- logical gate verification -----------------------------------------------


def claimed_symplectic(claim: str, k: int) -> np.ndarray:
    """2k×2k matrix (columns = images of X_L1..X_Lk, Z_L1..Z_Lk) for ``H:1``, ``S:2``, ``CNOT:1,2``, ``I``."""
    m = np.eye(2 * k, dtype=np.uint8)
    name, _, args = claim.strip().partition(":")
    name = name.upper()
    try:
        idx = [int(a) - 1 for a in args.split(",")] if args else []
    except ValueError:
        raise ValidationError(f"bad claim {claim!r}") from None
    if any(not 0 <= i < k for i in idx):
        raise ShapeError(f"claim {claim!r} names a logical qubit outside 1..{k}")
    if name == "I" and not idx:
        return m
    if name == "H" and len(idx) == 1:
        (i,) = idx
        m[:, i], m[:, k + i] = 0, 0
        m[k + i, i] = 1
        m[i, k + i] = 1
        return m
    if name in ("S", "S_DAG") and len(idx) == 1:
        (i,) = idx
        m[k + i, i] = 1
        return m
    if name in ("CNOT", "CX") and len(idx) == 2:
        c, t = idx
        m[t, c] = 1  # X_c -> X_c X_t
        m[k + c, k + t] = 1  # Z_t -> Z_c Z_t
        return m
    if name == "CZ" and len(idx) == 2:
        a, b = idx
        m[k + b, a] = 1
        m[k + a, b] = 1
        return m
    raise ValidationError(f"unsupported claim {claim!r}")


@dataclass
class GateReport:
    stabilizers_preserved: bool
    logical_map: np.ndarray | None
    claimed_map: np.ndarray
    matches_claim: bool
    signs: dict[str, int]
    notes: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.stabilizers_preserved and self.matches_claim


def induced_logical_map(
    code: StabilizerCode, basis: LogicalBasis, gates: list[Gate]
) -> tuple[bool, np.ndarray | None, dict[str, int], list[str]]:
    n, k = code.n, basis.k
    stab = stabilizer_matrix(code)
    space = f2la.RowSpace(stab)
    notes: list[str] = []
    preserved = True
    for i, row in enumerate(stab.to_dense()):
        img = conjugate(PauliOp.from_symplectic(row, n), gates)
        if not _in_stabilizer_span(space, img.symplectic()):
            preserved = False
            notes.append(f"stabilizer generator {i + 1} leaves the stabilizer group")
            break
    xs, zs = basis.x_ops(), basis.z_ops()
    gens = xs + zs
    cols = []
    signs = {}
    for idx, g in enumerate(gens):
        label = f"{'X' if idx < k else 'Z'}_L{idx % k + 1}"
        img = conjugate(g, gates)
        signs[label] = img.sign
        coords = np.array([img.sp(zs[j]) for j in range(k)] + [img.sp(xs[j]) for j in range(k)], dtype=np.uint8)
        vec = img.symplectic()
        for j in range(2 * k):
            if coords[j]:
                vec = vec ^ gens[j].symplectic()
        if not _in_stabilizer_span(space, vec):
            notes.append(f"image of {label} is not a logical Pauli times a stabilizer")
            return preserved, None, signs, notes
        cols.append(coords)
    return preserved, np.array(cols, dtype=np.uint8).T.reshape(2 * k, 2 * k), signs, notes


def verify_logical_gate(
    code: StabilizerCode, basis: LogicalBasis, gates: list[Gate], claimed: str
) -> GateReport:
    for g in gates:
        if any(q >= code.n for q in g.qubits):
            raise ShapeError(f"gate {g.name} on qubit {max(g.qubits) + 1} exceeds n={code.n}")
    target = claimed_symplectic(claimed, basis.k)
    preserved, mapping, signs, notes = induced_logical_map(code, basis, gates)
    matches = mapping is not None and np.array_equal(mapping, target)
    return GateReport(preserved, mapping, target, matches, signs, notes)


# Reference logical operators of the [[12,2,3]] code (1-based qubits).
TB12_LOGICALS = {
    "x": ["X1 X2 X3", "X1 X2 X4 X5 X7 X10"],
    "z": ["Z1 Z2 Z3 Z4 Z5 Z6", "Z1 Z3 Z5 Z6 Z7"],
}


def tb12_reference_basis() -> LogicalBasis:
    return LogicalBasis.from_strings(12, TB12_LOGICALS["x"], TB12_LOGICALS["z"])
