"""Monte Carlo memory experiments, error-rate statistics, rate fits, and code search."""

from __future__ import annotations

import csv
import io
import math
from collections.abc import Callable
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .circuits import NoiseModel, build_memory_circuit, make_schedule
from .codes import (
    Axis,
    Monomial,
    StabilizerCode,
    TBCodeSpec,
    build_code,
    compute_k,
    estimate_distance,
    named_code,
    nominal_distance,
)
from .decode import MemoryDecoder
from .errors import ValidationError
from .logicals import logical_basis
from .sim import sample_split

CSV_FIELDS = ["code", "n", "k", "d", "rounds", "p_phys", "shots", "failures", "p_k", "p_l", "ci_lo", "ci_hi", "seed"]


def wilson_interval(failures: int, shots: int, z: float = 1.959963984540054) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion."""
    if shots <= 0:
        return 0.0, 1.0
    phat = failures / shots
    denom = 1 + z * z / shots
    centre = (phat + z * z / (2 * shots)) / denom
    half = z * math.sqrt(phat * (1 - phat) / shots + z * z / (4 * shots * shots)) / denom
    lo = 0.0 if failures == 0 else max(0.0, centre - half)
    hi = 1.0 if failures == shots else min(1.0, centre + half)
    return lo, hi


def per_round(p_shot: float, rounds: int) -> float:
    return 1.0 - (1.0 - p_shot) ** (1.0 / rounds)


def per_qubit(p_round: float, k: int) -> float:
    return 1.0 - (1.0 - p_round) ** (1.0 / k)


def logical_rate(failures: int, shots: int, rounds: int, k: int) -> tuple[float, float]:
    """(p_k, p_l) from a shot failure count."""
    if shots <= 0:
        raise ValidationError("shots must be positive")
    if not 0 <= failures <= shots:
        raise ValidationError("failures must lie in [0, shots]")
    pk = per_round(failures / shots, rounds)
    return pk, per_qubit(pk, k)


@dataclass
class ExperimentResult:
    code: str
    n: int
    k: int
    d: int
    rounds: int
    p_phys: float
    shots: int
    failures: int
    seed: int

    @property
    def p_k(self) -> float:
        return logical_rate(self.failures, self.shots, self.rounds, self.k)[0]

    @property
    def p_l(self) -> float:
        return logical_rate(self.failures, self.shots, self.rounds, self.k)[1]

    @property
    def wilson(self) -> tuple[float, float]:
        """95% interval on failures/shots."""
        return wilson_interval(self.failures, self.shots)

    @property
    def p_l_interval(self) -> tuple[float, float]:
        lo, hi = self.wilson
        return per_qubit(per_round(lo, self.rounds), self.k), per_qubit(per_round(hi, self.rounds), self.k)

    def row(self) -> dict:
        lo, hi = self.p_l_interval
        out = {f: getattr(self, f) for f in ("code", "n", "k", "d", "rounds", "p_phys", "shots", "failures")}
        out.update(p_k=self.p_k, p_l=self.p_l, ci_lo=lo, ci_hi=hi, seed=self.seed)
        return out


def _resolve(code_or_spec) -> StabilizerCode:
    if isinstance(code_or_spec, StabilizerCode):
        return code_or_spec
    if isinstance(code_or_spec, TBCodeSpec):
        return build_code(code_or_spec)
    if isinstance(code_or_spec, str):
        return named_code(code_or_spec)
    raise ValidationError(f"cannot interpret {code_or_spec!r} as a code")


def run_memory_experiment(
    code_or_spec,
    p: float,
    rounds: int | None = None,
    shots: int = 10_000,
    seed: int = 0,
    mem_basis: str = "Z",
) -> ExperimentResult:
    """Sample a noisy memory circuit and count shots where any logical is decoded wrongly.

    ``rounds`` defaults to the code distance.
    """
    code = _resolve(code_or_spec)
    d = nominal_distance(code)
    rounds = d if rounds is None else rounds
    if shots < 1:
        raise ValidationError("shots must be at least 1")
    noise = NoiseModel(p)
    basis = logical_basis(code)
    circuit = build_memory_circuit(code, basis, rounds, noise, mem_basis, make_schedule(code))
    det, obs = sample_split(circuit, shots, seed)
    if p > 0:
        predicted = MemoryDecoder.from_circuit(circuit).predict(det)
    else:
        predicted = np.zeros_like(obs)
    failures = int(np.any(predicted != obs, axis=1).sum())
    return ExperimentResult(
        code=code.name or f"[[{code.n},{basis.k},{d}]]", n=code.n, k=basis.k, d=d, rounds=rounds,
        p_phys=p, shots=shots, failures=failures, seed=seed,
    )


# -- rate scaling -------------------------------------------------------------------


@dataclass
class RateFit:
    alpha: float
    beta: float
    residual: float

    def predict(self, d: float) -> float:
        return self.alpha * d ** (-self.beta)


def fit_rate_scaling(points) -> RateFit:
    """Least-squares fit of ``log R = log alpha - beta log d``."""
    pts = [(float(d), float(r)) for d, r in points]
    if len({d for d, _ in pts}) < 2:
        raise ValidationError("need at least two distinct distances to fit")
    if any(d <= 0 or r <= 0 for d, r in pts):
        raise ValidationError("distances and rates must be positive")
    x = np.log([d for d, _ in pts])
    y = np.log([r for _, r in pts])
    design = np.stack([np.ones_like(x), -x], axis=1)
    coef, *_ = np.linalg.lstsq(design, y, rcond=None)
    resid = float(np.sum((design @ coef - y) ** 2))
    return RateFit(alpha=float(np.exp(coef[0])), beta=float(coef[1]), residual=resid)


def code_rate(code: StabilizerCode) -> float:
    k = code.k if code.k is not None else compute_k(code)
    return k / code.n


def qubit_overhead(code: StabilizerCode) -> tuple[int, int]:
    """(data qubits, data plus one auxiliary per check)."""
    if code.layout.get("family") == "rotated_surface":
        d = code.layout["d"]
        return d * d, 2 * d * d - 1
    return code.n, code.n + code.h_x.rows + code.h_z.rows


# -- code search ---------------------------------------------------------------------


def random_code_search(
    l: int,
    m: int,
    w_a: int,
    w_b: int,
    max_power: int,
    trials: int,
    seed: int = 0,
    target: Callable[[int, int], bool] | None = None,
    distance_trials: int = 200,
) -> list[tuple[TBCodeSpec, int, int]]:
    """Random TB specs meeting ``target(k, d)``, sorted by (k desc, d desc, n asc).

    Monomials are drawn uniformly over axis and power ``0..max_power``.
    Returns ``(spec, k, d)`` triples, one per canonical form.
    """
    if trials < 1:
        raise ValidationError("trials must be at least 1")
    target = target or (lambda k, d: k > 0)
    rng = np.random.default_rng(seed)
    axes = list(Axis)
    seen: set = set()
    found = []
    for _ in range(trials):
        terms = []
        for w in (w_a, w_b):
            mons = []
            for _ in range(w):
                mons.append(Monomial(axes[int(rng.integers(len(axes)))], int(rng.integers(max_power + 1))))
            terms.append(tuple(mons))
        try:
            spec = TBCodeSpec(l, m, terms[0], terms[1])
        except ValidationError:
            continue  # repeated monomial
        key = spec.canonical_key()
        if key in seen:
            continue
        seen.add(key)
        code = build_code(spec)
        k = code.k
        d = estimate_distance(code, trials=distance_trials, seed=seed)[0] if k else 0
        if target(k, d):
            found.append((spec, k, d))
    found.sort(key=lambda t: (-t[1], -t[2], t[0].l * t[0].m * 2))
    return found


# -- CSV ---------------------------------------------------------------------------


def results_to_csv(results, path: str | Path | None = None) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=CSV_FIELDS, lineterminator="\n")
    w.writeheader()
    for r in results:
        row = r.row() if isinstance(r, ExperimentResult) else r
        w.writerow({k: (f"{v:.10g}" if isinstance(v, float) else v) for k, v in row.items()})
    text = buf.getvalue()
    if path is not None:
        Path(path).write_text(text)
    return text


def read_results_csv(path: str | Path) -> list[dict]:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    missing = [f for f in CSV_FIELDS if rows and f not in rows[0]]
    if missing:
        raise ValidationError(f"results CSV is missing columns {missing}")
    ints = {"n", "k", "d", "rounds", "shots", "failures", "seed"}
    return [{k: (int(v) if k in ints else v if k == "code" else float(v)) for k, v in r.items()} for r in rows]


__all__ = [
    "CSV_FIELDS", "ExperimentResult", "RateFit", "code_rate", "fit_rate_scaling", "logical_rate",
    "qubit_overhead", "random_code_search", "read_results_csv", "results_to_csv", "run_memory_experiment",
    "wilson_interval",
]
