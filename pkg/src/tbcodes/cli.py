"""``tbcodes`` command-line entry point.

Exit codes: 0 success, 1 invalid input, 2 capacity or contract failure.
Errors go to stderr as one line, ``error: <kind>: <detail>``.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .circuits import NoiseModel, build_memory_circuit, make_schedule, parse, serialize
from .codes import TBCodeSpec, build_code, estimate_distance, named_code, nominal_distance
from .decode import MemoryDecoder
from .errors import CapacityError, ContractError, TBCodesError, ValidationError
from .harness import (
    fit_rate_scaling,
    read_results_csv,
    random_code_search,
    results_to_csv,
    run_memory_experiment,
)
from .logicals import (
    BUNDLED_GATES,
    LogicalBasis,
    bundled_gate_sequence,
    load_gate_sequence,
    logical_basis,
    tb12_reference_basis,
    verify_logical_basis,
    verify_logical_gate,
)
from .sim import extract_dem, sample_split


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"error: usage: {message}\n")
        sys.exit(1)


def _emit(args, payload: dict, text: str) -> None:
    out = json.dumps(payload, sort_keys=True) if args.json else text
    if getattr(args, "out", None) and args.command not in ("circuit", "sample", "decode"):
        Path(args.out).write_text(out + "\n")
    else:
        print(out)


def _code(args):
    if args.code and args.spec:
        raise ValidationError("give either --code or --spec, not both")
    if args.code:
        return named_code(args.code)
    if args.spec:
        try:
            spec = TBCodeSpec.load(args.spec)
        except OSError as exc:
            raise ValidationError(f"cannot read spec: {exc}") from exc
        return build_code(spec, name=Path(args.spec).stem)
    raise ValidationError("a code is required: --code NAME or --spec FILE")


def _basis_for(code, choice: str | None) -> LogicalBasis:
    if choice in (None, "computed"):
        return logical_basis(code)
    if choice == "reference":
        if code.n != 12:
            raise ValidationError("the reference basis exists only for the [[12,2,3]] code")
        return tb12_reference_basis()
    try:
        obj = json.loads(Path(choice).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ValidationError(f"cannot read logicals file: {exc}") from exc
    return LogicalBasis.from_strings(code.n, obj["x"], obj["z"])


def _read_circuit(path: str):
    try:
        return parse(Path(path).read_text())
    except OSError as exc:
        raise ValidationError(f"cannot read circuit: {exc}") from exc


# -- subcommands ---------------------------------------------------------------------


def cmd_construct(args) -> None:
    code = _code(args)
    zs, xs = code.stabilizer_strings()
    payload = {
        "n": code.n, "k": code.k,
        "h_x": code.h_x.to_dense().tolist(), "h_z": code.h_z.to_dense().tolist(),
        "stabilizers": {"z": zs, "x": xs},
    }
    lines = [f"n={code.n} k={code.k}"]
    if args.print_stabilizers:
        lines += [f"S_Z{i + 1} = {s}" for i, s in enumerate(zs)]
        lines += [f"S_X{i + 1} = {s}" for i, s in enumerate(xs)]
    else:
        lines.append("H_X =")
        lines += ["".join(map(str, r)) for r in payload["h_x"]]
        lines.append("H_Z =")
        lines += ["".join(map(str, r)) for r in payload["h_z"]]
    _emit(args, payload, "\n".join(lines))


def cmd_distance(args) -> None:
    code = _code(args)
    d, exact = estimate_distance(code, trials=args.trials, seed=args.seed)
    _emit(args, {"n": code.n, "k": code.k, "d": d, "exact": exact}, f"d={d} exact={str(exact).lower()}")


def cmd_logicals(args) -> None:
    code = _code(args)
    basis = _basis_for(code, args.logicals)
    ok = verify_logical_basis(code, basis)
    xs = [str(p) for p in basis.x_ops()]
    zs = [str(p) for p in basis.z_ops()]
    lines = [f"k={basis.k} valid={str(ok).lower()}"]
    lines += [f"X_L{i + 1} = {s}" for i, s in enumerate(xs)]
    lines += [f"Z_L{i + 1} = {s}" for i, s in enumerate(zs)]
    _emit(args, {"k": basis.k, "valid": ok, "x": xs, "z": zs}, "\n".join(lines))


def cmd_circuit(args) -> None:
    code = _code(args)
    rounds = args.rounds if args.rounds is not None else nominal_distance(code)
    c = build_memory_circuit(code, logical_basis(code), rounds, NoiseModel(args.p), args.basis.upper(), make_schedule(code))
    text = serialize(c)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)


def cmd_sample(args) -> None:
    c = _read_circuit(args.circuit)
    det, obs = sample_split(c, args.shots, args.seed)
    bits = np.concatenate([det, obs], axis=1)
    packed = np.packbits(bits, axis=1, bitorder="little")
    if args.out:
        Path(args.out).write_bytes(packed.tobytes())
    else:
        sys.stdout.buffer.write(packed.tobytes())
    if args.dem:
        Path(args.dem).write_text(extract_dem(c).to_text())


def read_b8(path: str, bits_per_shot: int) -> np.ndarray:
    raw = np.frombuffer(Path(path).read_bytes(), dtype=np.uint8)
    width = (bits_per_shot + 7) // 8
    if width == 0 or raw.size % width:
        raise ValidationError(f"shot file size {raw.size} is not a multiple of {width} bytes per shot")
    rows = raw.reshape(-1, width)
    return np.unpackbits(rows, axis=1, bitorder="little", count=bits_per_shot)


def cmd_decode(args) -> None:
    c = _read_circuit(args.circuit)
    nd, no = c.num_detectors, c.num_observables
    try:
        shots = read_b8(args.shots, nd + no)
    except OSError as exc:
        raise ValidationError(f"cannot read shots: {exc}") from exc
    det, obs = shots[:, :nd], shots[:, nd:]
    pred = MemoryDecoder.from_circuit(c).predict(det)
    failed = np.any(pred != obs, axis=1).astype(int)
    lines = ["shot,failed"] + [f"{i},{f}" for i, f in enumerate(failed)]
    if args.out:
        Path(args.out).write_text("\n".join(lines) + "\n")
    summary = {"shots": int(len(failed)), "failures": int(failed.sum())}
    print(json.dumps(summary, sort_keys=True) if args.json else f"shots={summary['shots']} failures={summary['failures']}")


def cmd_memory(args) -> None:
    code = _code(args)
    res = run_memory_experiment(code, args.p, args.rounds, args.shots, args.seed, args.basis.upper())
    text = results_to_csv([res]).rstrip("\n")
    _emit(args, res.row(), text)


def cmd_search(args) -> None:
    found = random_code_search(
        args.l, args.m, args.wa, args.wb, args.max_power, args.trials, args.seed,
        target=lambda k, d: k >= args.min_k and d >= args.min_d,
        distance_trials=args.distance_trials,
    )
    rows = [{"n": 2 * s.l * s.m, "k": k, "d": d, "spec": s.to_dict()} for s, k, d in found]
    lines = [f"[[{r['n']},{r['k']},{r['d']}]] {json.dumps(r['spec'], sort_keys=True)}" for r in rows]
    _emit(args, {"codes": rows}, "\n".join(lines) if lines else "no codes found")


def cmd_fit(args) -> None:
    if args.csv:
        try:
            rows = read_results_csv(args.csv)
        except OSError as exc:
            raise ValidationError(f"cannot read csv: {exc}") from exc
        points = sorted({(r["d"], r["k"] / r["n"]) for r in rows})
    elif args.points:
        try:
            points = [(float(a), float(b)) for a, b in (p.split(":") for p in args.points.split(","))]
        except ValueError:
            raise ValidationError("--points expects d:R pairs separated by commas") from None
    else:
        raise ValidationError("give --csv FILE or --points d:R,...")
    fit = fit_rate_scaling(points)
    payload = {"alpha": fit.alpha, "beta": fit.beta, "residual": fit.residual, "points": [list(p) for p in points]}
    _emit(args, payload, f"alpha={fit.alpha:.6g} beta={fit.beta:.6g} residual={fit.residual:.3g}")


def _gate_sequence(name: str):
    if name in BUNDLED_GATES:
        return bundled_gate_sequence(name)
    try:
        return load_gate_sequence(name)
    except OSError as exc:
        raise ValidationError(f"cannot read gate file: {exc}") from exc


def cmd_verify_gate(args) -> None:
    code = _code(args)
    basis = _basis_for(code, args.logicals or ("reference" if code.n == 12 else "computed"))
    gates = _gate_sequence(args.gates)
    rep = verify_logical_gate(code, basis, gates, args.claim)
    payload = {
        "ok": rep.ok,
        "stabilizers_preserved": rep.stabilizers_preserved,
        "matches_claim": rep.matches_claim,
        "logical_map": None if rep.logical_map is None else rep.logical_map.tolist(),
        "claimed_map": rep.claimed_map.tolist(),
        "notes": rep.notes,
    }
    lines = [
        f"ok={str(rep.ok).lower()} stabilizers_preserved={str(rep.stabilizers_preserved).lower()} "
        f"matches_claim={str(rep.matches_claim).lower()}"
    ]
    if rep.logical_map is not None:
        lines.append("logical map (columns: images of X_L1..X_Lk, Z_L1..Z_Lk):")
        lines += [" ".join(map(str, r)) for r in rep.logical_map]
    lines += rep.notes
    _emit(args, payload, "\n".join(lines))
    if not rep.ok:
        raise ContractError(f"gate sequence does not implement {args.claim}")


# -- parser --------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--json", action="store_true", help="emit JSON")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--threads", type=int, default=1, help="accepted for interface stability; results do not depend on it")
    common.add_argument("--out", help="output path")
    code_args = _Parser(add_help=False)
    code_args.add_argument("--spec", help="TB code JSON file {l, m, a, b}")
    code_args.add_argument("--code", help="named code: tb12 tb24 tb56 tb88 surface<d>")

    p = _Parser(prog="tbcodes", description="Trivariate bicycle code toolkit")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("construct", parents=[common, code_args], help="build check matrices")
    s.add_argument("--print-stabilizers", action="store_true")
    s.set_defaults(func=cmd_construct)

    s = sub.add_parser("distance", parents=[common, code_args], help="exact or estimated distance")
    s.add_argument("--trials", type=int, default=1000)
    s.set_defaults(func=cmd_distance)

    s = sub.add_parser("logicals", parents=[common, code_args], help="logical operator basis")
    s.add_argument("--logicals", help="computed (default), reference, or a JSON file {x: [...], z: [...]}")
    s.set_defaults(func=cmd_logicals)

    s = sub.add_parser("circuit", parents=[common, code_args], help="memory experiment circuit")
    s.add_argument("--rounds", type=int)
    s.add_argument("--p", type=float, default=0.0)
    s.add_argument("--basis", choices=["z", "x", "Z", "X"], default="z")
    s.set_defaults(func=cmd_circuit)

    s = sub.add_parser("sample", parents=[common], help="sample detectors and observables (b8)")
    s.add_argument("--circuit", required=True)
    s.add_argument("--shots", type=int, required=True)
    s.add_argument("--dem", help="also write the detector error model text here")
    s.set_defaults(func=cmd_sample)

    s = sub.add_parser("decode", parents=[common], help="decode sampled shots")
    s.add_argument("--circuit", required=True)
    s.add_argument("--shots", required=True, help="b8 file from `tbcodes sample`")
    s.set_defaults(func=cmd_decode)

    s = sub.add_parser("memory", parents=[common, code_args], help="sample and decode a memory experiment")
    s.add_argument("--p", type=float, required=True)
    s.add_argument("--shots", type=int, default=10_000)
    s.add_argument("--rounds", type=int)
    s.add_argument("--basis", choices=["z", "x", "Z", "X"], default="z")
    s.set_defaults(func=cmd_memory)

    s = sub.add_parser("search", parents=[common], help="random TB code search")
    s.add_argument("--l", type=int, required=True)
    s.add_argument("--m", type=int, required=True)
    s.add_argument("--wa", type=int, default=2)
    s.add_argument("--wb", type=int, default=2)
    s.add_argument("--max-power", type=int, default=None)
    s.add_argument("--trials", type=int, default=1000)
    s.add_argument("--min-k", type=int, default=1)
    s.add_argument("--min-d", type=int, default=1)
    s.add_argument("--distance-trials", type=int, default=200)
    s.set_defaults(func=cmd_search)

    s = sub.add_parser("fit", parents=[common], help="fit R(d) = alpha d^-beta")
    s.add_argument("--csv", help="results CSV; uses one (d, k/n) point per row")
    s.add_argument("--points", help="explicit d:R pairs, e.g. 3:0.111,5:0.04")
    s.set_defaults(func=cmd_fit)

    s = sub.add_parser("verify-gate", parents=[common, code_args], help="check a physical gate sequence")
    s.add_argument("--gates", required=True, help=f"gate file or bundled name: {', '.join(BUNDLED_GATES)}")
    s.add_argument("--claim", required=True, help="I, H:i, S:i, CNOT:c,t or CZ:a,b (1-based)")
    s.add_argument("--logicals", help="computed, reference (default for n=12), or a JSON file")
    s.set_defaults(func=cmd_verify_gate)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "max_power", 0) is None:
        args.max_power = max(args.l, args.m) * 2
    try:
        args.func(args)
    except ValidationError as exc:
        sys.stderr.write(f"error: {exc.kind}: {exc}\n")
        return 1
    except (CapacityError, ContractError) as exc:
        sys.stderr.write(f"error: {exc.kind}: {exc}\n")
        return 2
    except TBCodesError as exc:  # pragma: no cover - every subclass is handled above
        sys.stderr.write(f"error: {exc.kind}: {exc}\n")
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
