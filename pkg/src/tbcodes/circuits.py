"""Circuit IR, syndrome-extraction schedules, and memory-experiment builders.

The text form is a subset of the stim circuit language.  Detector coordinates
are ``(check, round, basis)`` with basis 0 for Z checks and 1 for X checks;
the decoder uses them to split the two matching graphs.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np

from . import f2la
from .codes import StabilizerCode
from .errors import SchedulingError, ShapeError, ValidationError
from .f2la import BitMatrix
from .logicals import LogicalBasis

GATES_1Q = {"H", "X", "Y", "Z"}
GATES_2Q = {"CX", "CZ"}
RESETS = {"R", "RX"}
MEASUREMENTS = {"M", "MX"}
NOISE_1Q = {"DEPOLARIZE1", "X_ERROR", "Z_ERROR"}
NOISE_2Q = {"DEPOLARIZE2"}
ANNOTATIONS = {"DETECTOR", "OBSERVABLE_INCLUDE", "TICK"}
ALL_NAMES = GATES_1Q | GATES_2Q | RESETS | MEASUREMENTS | NOISE_1Q | NOISE_2Q | ANNOTATIONS
ALIASES = {"CNOT": "CX", "MZ": "M", "RZ": "R", "FLIP_ERROR": "X_ERROR"}

Z_BASIS, X_BASIS = 0, 1


@dataclass(frozen=True)
class Instruction:
    """One circuit line.

    For DETECTOR and OBSERVABLE_INCLUDE the targets are negative measurement
    record lookbacks (``rec[-i]`` is ``-i``); otherwise they are qubit indices.
    """

    name: str
    targets: tuple[int, ...] = ()
    args: tuple[float, ...] = ()

    @property
    def is_noise(self) -> bool:
        return self.name in NOISE_1Q or self.name in NOISE_2Q


class Circuit:
    def __init__(self, num_qubits: int = 0):
        self.num_qubits = num_qubits
        self.instructions: list[Instruction] = []
        self.num_measurements = 0
        self.num_detectors = 0
        self._observables: set[int] = set()

    @property
    def num_observables(self) -> int:
        return max(self._observables) + 1 if self._observables else 0

    def append(self, name: str, targets=(), args=()) -> None:
        name = ALIASES.get(name.upper(), name.upper())
        targets = tuple(int(t) for t in targets)
        args = tuple(float(a) for a in args)
        if name not in ALL_NAMES:
            raise ValidationError(f"unsupported instruction {name}")
        if name in ("DETECTOR", "OBSERVABLE_INCLUDE"):
            for t in targets:
                if t >= 0 or -t > self.num_measurements:
                    raise ValidationError(f"{name} refers to rec[{t}] with {self.num_measurements} measurements")
            if name == "OBSERVABLE_INCLUDE":
                if len(args) != 1 or args[0] < 0 or args[0] != int(args[0]):
                    raise ValidationError("OBSERVABLE_INCLUDE needs one non-negative integer index")
                self._observables.add(int(args[0]))
            else:
                self.num_detectors += 1
        elif name == "TICK":
            if targets:
                raise ValidationError("TICK takes no targets")
        else:
            if any(t < 0 for t in targets):
                raise ShapeError(f"negative qubit index in {name}")
            if self.num_qubits and any(t >= self.num_qubits for t in targets):
                raise ShapeError(f"{name} targets qubit {max(targets)} >= num_qubits={self.num_qubits}")
            if name in GATES_2Q or name in NOISE_2Q:
                if len(targets) % 2:
                    raise ValidationError(f"{name} needs an even number of targets")
                if any(targets[i] == targets[i + 1] for i in range(0, len(targets), 2)):
                    raise ValidationError(f"{name} pairs a qubit with itself")
            if name in NOISE_1Q or name in NOISE_2Q:
                if len(args) != 1 or not 0.0 <= args[0] <= 1.0:
                    raise ValidationError(f"{name} needs one probability in [0, 1]")
            elif args:
                raise ValidationError(f"{name} takes no arguments")
            if name in MEASUREMENTS:
                self.num_measurements += len(targets)
        if not targets and name not in ("TICK", "DETECTOR", "OBSERVABLE_INCLUDE"):
            return
        self.instructions.append(Instruction(name, targets, args))

    def detector_coords(self) -> list[tuple[float, ...]]:
        return [ins.args for ins in self.instructions if ins.name == "DETECTOR"]

    def detector_bases(self) -> np.ndarray | None:
        """Basis flag of each detector from its third coordinate, or None if absent."""
        coords = self.detector_coords()
        if not coords or any(len(c) < 3 for c in coords):
            return None
        return np.array([int(c[2]) for c in coords], dtype=np.int64)

    def used_qubits(self) -> int:
        top = -1
        for ins in self.instructions:
            if ins.name not in ANNOTATIONS and ins.targets:
                top = max(top, max(ins.targets))
        return max(self.num_qubits, top + 1)

    def without_noise(self) -> Circuit:
        out = Circuit(self.num_qubits)
        for ins in self.instructions:
            if not ins.is_noise:
                out.append(ins.name, ins.targets, ins.args)
        return out

    def __len__(self) -> int:
        return len(self.instructions)

    def __str__(self) -> str:
        return serialize(self)

    def __eq__(self, other) -> bool:
        return isinstance(other, Circuit) and self.instructions == other.instructions


def _fmt_arg(a: float) -> str:
    return str(int(a)) if a == int(a) and abs(a) < 1e15 else repr(a)


def serialize(c: Circuit) -> str:
    lines = []
    for ins in c.instructions:
        head = ins.name
        if ins.args:
            head += "(" + ", ".join(_fmt_arg(a) for a in ins.args) + ")"
        if ins.name in ("DETECTOR", "OBSERVABLE_INCLUDE"):
            body = " ".join(f"rec[{t}]" for t in ins.targets)
        else:
            body = " ".join(str(t) for t in ins.targets)
        lines.append(f"{head} {body}".rstrip())
    return "\n".join(lines) + ("\n" if lines else "")


_LINE = re.compile(r"^([A-Za-z_0-9]+)(?:\(([^)]*)\))?\s*(.*)$")


def parse(text: str) -> Circuit:
    """Parse the text subset produced by :func:`serialize` (comments with ``#`` allowed)."""
    c = Circuit()
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        m = _LINE.match(line)
        if not m:
            raise ValidationError(f"line {lineno}: cannot parse {raw!r}")
        name, argtext, body = m.group(1), m.group(2), m.group(3)
        try:
            args = [float(a) for a in argtext.split(",")] if argtext and argtext.strip() else []
            targets = []
            for tok in body.split():
                rec = re.fullmatch(r"rec\[(-\d+)\]", tok)
                targets.append(int(rec.group(1)) if rec else int(tok))
        except ValueError:
            raise ValidationError(f"line {lineno}: bad number in {raw!r}") from None
        c.append(name, targets, args)
    c.num_qubits = c.used_qubits()
    return c


# -- schedules ------------------------------------------------------------------


@dataclass
class Schedule:
    """Per-check ordered ``(layer, data qubit)`` lists, layers 1..4."""

    x_orders: list[list[tuple[int, int]]]
    z_orders: list[list[tuple[int, int]]]
    layers: int = 4

    def check_shape(self, code: StabilizerCode) -> None:
        if len(self.x_orders) != code.h_x.rows or len(self.z_orders) != code.h_z.rows:
            raise ShapeError("schedule does not have one entry per check")
        used: dict[tuple[int, int], tuple[str, int]] = {}
        for kind, orders, h in (("X", self.x_orders, code.h_x), ("Z", self.z_orders, code.h_z)):
            for ci, order in enumerate(orders):
                if sorted(q for _, q in order) != h.support(ci):
                    raise ShapeError(f"{kind}-check {ci} schedule does not cover its support")
                layers = [layer for layer, _ in order]
                if len(set(layers)) != len(layers) or any(not 1 <= x <= self.layers for x in layers):
                    raise ShapeError(f"{kind}-check {ci} uses a layer twice or out of range")
                for layer, q in order:
                    if (layer, q) in used:
                        raise ShapeError(f"data qubit {q} used twice in layer {layer}")
                    used[(layer, q)] = (kind, ci)

    def layer_gates(self, layer: int) -> tuple[list[tuple[int, int]], list[tuple[int, int]]]:
        """``(x_pairs, z_pairs)`` of (check, data qubit) acting in ``layer``."""
        xs = [(ci, q) for ci, order in enumerate(self.x_orders) for lay, q in order if lay == layer]
        zs = [(ci, q) for ci, order in enumerate(self.z_orders) for lay, q in order if lay == layer]
        return xs, zs


def _surface_schedule(code: StabilizerCode) -> Schedule:
    x_layer = {"nw": 1, "ne": 2, "sw": 3, "se": 4}
    z_layer = {"nw": 1, "sw": 2, "ne": 3, "se": 4}
    xs = [sorted((x_layer[k], q) for k, q in corners.items()) for _, corners in code.layout["x_checks"]]
    zs = [sorted((z_layer[k], q) for k, q in corners.items()) for _, corners in code.layout["z_checks"]]
    return Schedule(xs, zs)


def _cycle_coloring(h: np.ndarray) -> tuple[dict[tuple[int, int], int], dict[tuple[int, int], int], int]:
    """Proper 2-edge-colouring of a 2-regular bipartite graph given as a check×qubit block.

    Returns (base colour per edge, cycle id per edge, number of cycles).  Flipping
    every colour on one cycle gives the other valid colouring.
    """
    edges = {(int(r), int(c)) for r, c in zip(*np.nonzero(h))}
    by_check: dict[int, list[int]] = {}
    by_qubit: dict[int, list[int]] = {}
    for r, c in sorted(edges):
        by_check.setdefault(r, []).append(c)
        by_qubit.setdefault(c, []).append(r)
    if any(len(v) != 2 for v in by_check.values()) or any(len(v) != 2 for v in by_qubit.values()):
        raise SchedulingError("block is not 2-regular; every check needs two qubits per side")
    color: dict[tuple[int, int], int] = {}
    cycle: dict[tuple[int, int], int] = {}
    ncycles = 0
    for start in sorted(edges):
        if start in color:
            continue
        e, col = start, 0
        on_check_side = True  # walk: from edge (r, c), move to the other edge at qubit c or check r
        while e not in color:
            color[e], cycle[e] = col, ncycles
            r, c = e
            if on_check_side:
                nr = [x for x in by_qubit[c] if x != r][0]
                e = (nr, c)
            else:
                nc = [x for x in by_check[r] if x != c][0]
                e = (r, nc)
            on_check_side = not on_check_side
            col ^= 1
        ncycles += 1
    return color, cycle, ncycles


def bracket_schedule(
    code: StabilizerCode,
    z_pattern: str = "LRRL",
    x_pattern: str = "RLLR",
    flips: dict[str, np.ndarray] | None = None,
) -> Schedule:
    """Schedule where each check visits sides in the given L/R order.

    Each pattern has two L's and two R's.  On each side, a check's two
    qubits are split between its two layers by a proper edge colouring of
    the check/qubit graph (colour 0 takes the earlier layer).  ``flips``
    maps ``"ZL"``, ``"ZR"``, ``"XL"``, ``"XR"`` to one bit per cycle that
    swaps the colouring on that cycle.
    """
    if code.left_count is None:
        raise SchedulingError("bracket schedules need a TB code (left/right halves)")
    for p in (z_pattern, x_pattern):
        if sorted(p) != ["L", "L", "R", "R"]:
            raise ValidationError(f"pattern {p!r} must contain two L and two R")
    half = code.left_count
    blocks = {
        "ZL": code.h_z.to_dense()[:, :half],
        "ZR": code.h_z.to_dense()[:, half:],
        "XL": code.h_x.to_dense()[:, :half],
        "XR": code.h_x.to_dense()[:, half:],
    }
    flips = flips or {}
    orders = {"Z": [[] for _ in range(code.h_z.rows)], "X": [[] for _ in range(code.h_x.rows)]}
    for key, block in blocks.items():
        kind, side = key[0], key[1]
        pattern = z_pattern if kind == "Z" else x_pattern
        layers = [i + 1 for i, s in enumerate(pattern) if s == side]
        color, cycle, ncyc = _cycle_coloring(block)
        f = np.zeros(ncyc, dtype=np.uint8) if key not in flips else np.asarray(flips[key], dtype=np.uint8)
        offset = 0 if side == "L" else half
        for (r, c), col in color.items():
            orders[kind][r].append((layers[col ^ int(f[cycle[(r, c)]])], c + offset))
    return Schedule(
        x_orders=[sorted(o) for o in orders["X"]], z_orders=[sorted(o) for o in orders["Z"]]
    )


def overlap_parities(code: StabilizerCode, s: Schedule) -> list[tuple[int, int, int]]:
    """For each overlapping (X-check, Z-check) pair: count of shared qubits the X check touches first."""
    x_layer = [{q: lay for lay, q in o} for o in s.x_orders]
    z_layer = [{q: lay for lay, q in o} for o in s.z_orders]
    out = []
    for xi, xl in enumerate(x_layer):
        for zi, zl in enumerate(z_layer):
            shared = set(xl) & set(zl)
            if shared:
                out.append((xi, zi, sum(1 for q in shared if xl[q] < zl[q])))
    return out


def _first_inconsistent(rows, rhs, pairs):
    """Pair whose constraint first makes the prefix system unsolvable."""
    nvars = len(rows[0])
    aug = np.concatenate([np.array(rows), np.array(rhs)[:, None]], axis=1)
    for i in range(1, len(rows) + 1):
        if nvars in f2la.rref(BitMatrix.from_dense(aug[:i]))[1]:
            return pairs[i - 1]
    return None


def make_schedule(code: StabilizerCode) -> Schedule:
    """Valid 4-layer schedule.

    Rotated surface codes get the standard N/Z orders.  TB codes use the
    bracket orders Z: (L, R, R, L) and X: (R, L, L, R).  Which qubit of a side
    goes first is fixed per cycle of the check/qubit graph; the choice is
    found by solving the GF(2) system "every overlapping X/Z check pair has
    an even number of shared qubits where the X check acts first".
    """
    if code.layout.get("family") == "rotated_surface":
        s = _surface_schedule(code)
        s.check_shape(code)
        return s
    if code.left_count is None:
        raise SchedulingError("no schedule builder for this code family")
    for h in (code.h_x, code.h_z):
        dense = h.to_dense()
        half = code.left_count
        if not (np.all(dense[:, :half].sum(1) == 2) and np.all(dense[:, half:].sum(1) == 2)):
            raise SchedulingError("every check must touch exactly two left and two right data qubits")
    # Variables: one flip bit per cycle of the ZL and XR graphs (the L/R-bracketing sides).
    half = code.left_count
    zl_col, zl_cyc, zl_n = _cycle_coloring(code.h_z.to_dense()[:, :half])
    xr_col, xr_cyc, xr_n = _cycle_coloring(code.h_x.to_dense()[:, half:])
    nvars = zl_n + xr_n
    x_sup = code.h_x.supports()
    z_sup = code.h_z.supports()
    rows, rhs, pairs = [], [], []
    for xi, xs in enumerate(x_sup):
        for zi, zs in enumerate(z_sup):
            shared = set(xs) & set(zs)
            if not shared:
                continue
            row = np.zeros(nvars, dtype=np.uint8)
            const = 0
            for q in shared:
                if q < half:
                    # Z acts on left qubits in layers 1/4, X in 2/3: X first iff Z's colour is 1.
                    e = (zi, q)
                    const ^= zl_col[e]
                    row[zl_cyc[e]] ^= 1
                else:
                    # X acts on right qubits in layers 1/4, Z in 2/3: X first iff X's colour is 0.
                    e = (xi, q - half)
                    const ^= 1 ^ xr_col[e]
                    row[zl_n + xr_cyc[e]] ^= 1
            rows.append(row)
            rhs.append(const)
            pairs.append((xi, zi))
    if rows:
        aug = BitMatrix.from_dense(np.concatenate([np.array(rows), np.array(rhs)[:, None]], axis=1))
        red, pivots = f2la.rref(aug)
        if nvars in pivots:
            raise SchedulingError(
                "no bracket schedule satisfies the overlap parity constraints",
                witness=_first_inconsistent(rows, rhs, pairs),
            )
        sol = np.zeros(nvars, dtype=np.uint8)
        dense = red.to_dense()
        for i, p in enumerate(pivots):
            sol[p] = dense[i, nvars]
    else:
        sol = np.zeros(nvars, dtype=np.uint8)
    s = bracket_schedule(code, flips={"ZL": sol[:zl_n], "XR": sol[zl_n:]})
    s.check_shape(code)
    if any(c % 2 for _, _, c in overlap_parities(code, s)):  # pragma: no cover - guarded by the solve
        raise SchedulingError("internal: solved schedule violates overlap parity", witness=None)
    return s


def bad_schedule(code: StabilizerCode) -> Schedule:
    """Z checks visit (L, L, R, R) and X checks (R, R, L, L): every overlap is odd."""
    return bracket_schedule(code, z_pattern="LLRR", x_pattern="RRLL")


# -- memory experiments ---------------------------------------------------------


@dataclass
class NoiseModel:
    p_physical: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.p_physical < 0.5:
            raise ValidationError(f"physical error rate must lie in [0, 0.5), got {self.p_physical}")

    @property
    def p(self) -> float:
        return self.p_physical


def build_memory_circuit(
    code: StabilizerCode,
    basis: LogicalBasis | None,
    rounds: int,
    noise: NoiseModel | float = 0.0,
    mem_basis: str = "Z",
    schedule: Schedule | None = None,
) -> Circuit:
    """Memory experiment: reset, ``rounds`` syndrome cycles, transversal readout.

    Qubits: data ``0..n-1``, X auxiliaries next, then Z auxiliaries.  Z checks
    use CX(data -> aux); X checks use H, CX(aux -> data), H.  With ``basis``
    given, one observable per logical of the memory type.
    """
    if not isinstance(rounds, (int, np.integer)) or rounds < 1:
        raise ValidationError(f"rounds must be a positive integer, got {rounds}")
    mem_basis = mem_basis.upper()
    if mem_basis not in ("Z", "X"):
        raise ValidationError(f"memory basis must be Z or X, got {mem_basis}")
    noise = noise if isinstance(noise, NoiseModel) else NoiseModel(float(noise))
    p = noise.p
    schedule = schedule or make_schedule(code)
    schedule.check_shape(code)
    n, mx, mz = code.n, code.h_x.rows, code.h_z.rows
    x_aux = list(range(n, n + mx))
    z_aux = list(range(n + mx, n + mx + mz))
    aux = x_aux + z_aux
    data = list(range(n))
    c = Circuit(n + mx + mz)

    def noisy1(name, qs):
        c.append(name, qs)
        if p > 0:
            c.append("DEPOLARIZE1", qs, [p])

    mem_flag = Z_BASIS if mem_basis == "Z" else X_BASIS
    noisy1("R" if mem_basis == "Z" else "RX", data)
    meas_index: dict[tuple[str, int, int], int] = {}
    for r in range(rounds):
        noisy1("R", aux)
        noisy1("H", x_aux)
        c.append("TICK")
        for layer in range(1, schedule.layers + 1):
            xs, zs = schedule.layer_gates(layer)
            pairs: list[int] = []
            for ci, q in zs:
                pairs += [q, z_aux[ci]]
            for ci, q in xs:
                pairs += [x_aux[ci], q]
            c.append("CX", pairs)
            if p > 0 and pairs:
                c.append("DEPOLARIZE2", pairs, [p])
            c.append("TICK")
        noisy1("H", x_aux)
        if p > 0:
            c.append("X_ERROR", aux, [p])
        start = c.num_measurements
        c.append("M", aux)
        for i in range(mx):
            meas_index[("X", i, r)] = start + i
        for i in range(mz):
            meas_index[("Z", i, r)] = start + mx + i
        now = c.num_measurements
        for kind, count, flag in (("Z", mz, Z_BASIS), ("X", mx, X_BASIS)):
            for i in range(count):
                if r == 0 and flag != mem_flag:
                    continue
                recs = [meas_index[(kind, i, r)]]
                if r > 0:
                    recs.append(meas_index[(kind, i, r - 1)])
                c.append("DETECTOR", [m - now for m in recs], [i, r, flag])
    if p > 0:
        c.append("X_ERROR" if mem_basis == "Z" else "Z_ERROR", data, [p])
    start = c.num_measurements
    c.append("M" if mem_basis == "Z" else "MX", data)
    now = c.num_measurements
    h = code.h_z if mem_basis == "Z" else code.h_x
    kind = mem_basis
    for i, sup in enumerate(h.supports()):
        recs = [start + q for q in sup] + [meas_index[(kind, i, rounds - 1)]]
        c.append("DETECTOR", [m - now for m in recs], [i, rounds, mem_flag])
    if basis is not None:
        ops = basis.z_ops() if mem_basis == "Z" else basis.x_ops()
        for j, op in enumerate(ops):
            part = op.z if mem_basis == "Z" else op.x
            other = op.x if mem_basis == "Z" else op.z
            if other.any():
                raise ValidationError(f"logical {j + 1} is not a pure {mem_basis} operator")
            recs = [start + int(q) for q in np.flatnonzero(part)]
            c.append("OBSERVABLE_INCLUDE", [m - now for m in recs], [j])
    return c


def validate_schedule(code: StabilizerCode, s: Schedule, basis: LogicalBasis | None = None) -> bool:
    """Noiseless 2-round memory circuits in both bases have only deterministic-zero detectors."""
    from .sim import simulate_tableau

    try:
        s.check_shape(code)
    except ShapeError:
        return False
    for mem in ("Z", "X"):
        circ = build_memory_circuit(code, basis, rounds=2, noise=0.0, mem_basis=mem, schedule=s)
        res = simulate_tableau(circ)
        if not (res.detectors_deterministic.all() and res.observables_deterministic.all()):
            return False
        if res.detector_values.any() or res.observable_values.any():
            return False
    return True


def entangling_layers_per_round(c: Circuit) -> list[int]:
    """Number of TICK-delimited blocks with two-qubit gates between consecutive measurement blocks."""
    counts, current, in_block = [], 0, False
    for ins in c.instructions:
        if ins.name == "TICK":
            if in_block:
                current += 1
            in_block = False
        elif ins.name in GATES_2Q:
            in_block = True
        elif ins.name in MEASUREMENTS:
            if in_block:
                current += 1
                in_block = False
            counts.append(current)
            current = 0
    return counts[:-1] if counts else counts
