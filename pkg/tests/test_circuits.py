import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tbcodes.circuits import (
    Circuit,
    NoiseModel,
    Schedule,
    bad_schedule,
    bracket_schedule,
    build_memory_circuit,
    entangling_layers_per_round,
    make_schedule,
    overlap_parities,
    parse,
    serialize,
    validate_schedule,
)
from tbcodes.codes import Axis, Monomial, TBCodeSpec, build_code, named_code, nominal_distance
from tbcodes.errors import SchedulingError, ShapeError, ValidationError
from tbcodes.logicals import logical_basis
from tbcodes.sim import Fault, propagate_faults, simulate_tableau

ALL = ["tb12", "tb24", "tb56", "tb88", "surface3", "surface5", "surface7"]


def fired(c: Circuit, values) -> set[tuple[int, int, int]]:
    coords = c.detector_coords()
    return {tuple(int(v) for v in coords[i]) for i in np.flatnonzero(values)}


class TestText:
    def test_roundtrip_memory_circuit(self, tb12, tb12_basis):
        c = build_memory_circuit(tb12, tb12_basis, 3, 0.001)
        text = serialize(c)
        again = parse(text)
        assert again == c and serialize(again) == text
        assert again.num_detectors == c.num_detectors and again.num_observables == 2

    def test_empty(self):
        assert serialize(Circuit()) == ""
        assert parse("") == Circuit()
        assert parse("# only a comment\n\n").num_measurements == 0

    def test_aliases_and_comments(self):
        c = parse("RZ 0\nCNOT 0 1  # entangle\nMZ 0 1\nDETECTOR(1, 2) rec[-1] rec[-2]\n")
        assert [i.name for i in c.instructions] == ["R", "CX", "M", "DETECTOR"]
        assert c.num_qubits == 2 and c.detector_coords() == [(1.0, 2.0)]

    @pytest.mark.parametrize(
        "text,err",
        [
            ("FOO 1", ValidationError),
            ("M 0\nDETECTOR rec[-2]", ValidationError),
            ("CX 0 0", ValidationError),
            ("CX 0 1 2", ValidationError),
            ("DEPOLARIZE1(1.5) 0", ValidationError),
            ("H(0.1) 0", ValidationError),
            ("M 0\nOBSERVABLE_INCLUDE(-1) rec[-1]", ValidationError),
            ("H x", ValidationError),
            ("H -1", ShapeError),
        ],
    )
    def test_parse_errors(self, text, err):
        with pytest.raises(err):
            parse(text)

    def test_qubit_bound(self):
        c = Circuit(2)
        with pytest.raises(ShapeError):
            c.append("H", [2])


class TestMemoryCircuit:
    def test_tb12_structure(self, tb12, tb12_basis):
        c = build_memory_circuit(tb12, tb12_basis, 1, 0.0)
        resets = [i for i in c.instructions if i.name == "R"]
        assert [len(i.targets) for i in resets] == [12, 12]
        cx = [i for i in c.instructions if i.name == "CX"]
        assert len(cx) == 4 and sum(len(i.targets) // 2 for i in cx) == 48
        assert c.num_qubits == 24

    def test_surface3_detector_count(self, surface3):
        c = build_memory_circuit(surface3, logical_basis(surface3), 3, 0.001)
        # 4 Z checks in the first round, 8 checks per later round, 4 final data comparisons
        assert c.num_detectors == 4 + 8 + 8 + 4 == 24
        assert c.num_observables == 1

    def test_noise_placement(self, tb12):
        c = build_memory_circuit(tb12, None, 1, 0.01)
        names = [i.name for i in c.instructions]
        for i, ins in enumerate(c.instructions):
            if ins.name == "CX":
                assert names[i + 1] == "DEPOLARIZE2" and c.instructions[i + 1].targets == ins.targets
            if ins.name in ("R", "RX", "H"):
                assert names[i + 1] == "DEPOLARIZE1"
            if ins.name in ("M", "MX"):
                assert names[i - 1] in ("X_ERROR", "Z_ERROR")
        assert build_memory_circuit(tb12, None, 1, 0.0) == c.without_noise()

    def test_x_error_on_data_fires_two_z_checks(self, tb12):
        c = build_memory_circuit(tb12, None, 2, 0.001)
        reset_noise = 1  # DEPOLARIZE1 right after the data reset
        assert c.instructions[reset_noise].name == "DEPOLARIZE1"
        det, _ = propagate_faults(c, [Fault(reset_noise, ((0, "X"),))])
        assert fired(c, det[0]) == {(0, 0, 0), (1, 0, 0)}

    def test_x_error_between_rounds(self, tb12):
        c = build_memory_circuit(tb12, None, 3, 0.0)
        lines = serialize(c).splitlines()
        second_round = [i for i, l in enumerate(lines) if l.startswith("R 12")][1]
        lines.insert(second_round, "X 0")
        res = simulate_tableau(parse("\n".join(lines)))
        assert res.all_deterministic
        assert fired(c, res.detector_values) == {(0, 1, 0), (1, 1, 0)}

    @pytest.mark.parametrize("name", ALL)
    def test_four_entangling_layers(self, name):
        code = named_code(name)
        c = build_memory_circuit(code, None, 2, 0.001)
        assert entangling_layers_per_round(c) == [4, 4]

    @pytest.mark.parametrize("name", ["tb12", "tb24", "tb56", "surface3", "surface5"])
    @pytest.mark.parametrize("mem", ["Z", "X"])
    def test_noiseless_determinism(self, name, mem):
        code = named_code(name)
        basis = logical_basis(code)
        for rounds in sorted({1, 2, nominal_distance(code)}):
            res = simulate_tableau(build_memory_circuit(code, basis, rounds, 0.0, mem))
            assert res.all_deterministic
            assert not res.detector_values.any() and not res.observable_values.any()

    def test_first_round_detectors_only_in_memory_basis(self, tb12, tb12_basis):
        for mem, flag in (("Z", 0), ("X", 1)):
            c = build_memory_circuit(tb12, tb12_basis, 2, 0.0, mem)
            first = [co for co in c.detector_coords() if co[1] == 0]
            assert first and all(co[2] == flag for co in first)

    @pytest.mark.parametrize(
        "kwargs",
        [dict(rounds=0), dict(rounds=1.5), dict(rounds=1, mem_basis="Y"), dict(rounds=1, noise=0.6)],
    )
    def test_invalid_arguments(self, tb12, kwargs):
        with pytest.raises(ValidationError):
            build_memory_circuit(tb12, None, **kwargs)

    def test_impure_observable_rejected(self, tb12, tb12_basis):
        (x1, z1), (x2, z2) = tb12_basis.pairs
        mixed = type(tb12_basis)([(x1, z1 * x2), (x2, z2)])
        with pytest.raises(ValidationError):
            build_memory_circuit(tb12, mixed, 1, 0.0, "Z")

    def test_noise_model(self):
        assert NoiseModel(0.01).p == 0.01
        with pytest.raises(ValidationError):
            NoiseModel(-0.1)


class TestSchedules:
    @pytest.mark.parametrize("name", ALL)
    def test_make_schedule_is_valid(self, name):
        code = named_code(name)
        s = make_schedule(code)
        assert validate_schedule(code, s)
        if code.left_count is not None:
            assert all(c % 2 == 0 for _, _, c in overlap_parities(code, s))

    def test_tb_orders_follow_brackets(self, tb12):
        s = make_schedule(tb12)
        half = tb12.left_count
        for order in s.z_orders:
            assert ["L" if q < half else "R" for _, q in order] == list("LRRL")
        for order in s.x_orders:
            assert ["L" if q < half else "R" for _, q in order] == list("RLLR")

    @pytest.mark.parametrize("name", ["tb12", "tb24", "tb56", "tb88"])
    def test_bad_schedule_is_rejected(self, name):
        code = named_code(name)
        s = bad_schedule(code)
        assert any(c % 2 for _, _, c in overlap_parities(code, s))
        assert not validate_schedule(code, s)

    def test_unsolved_bracket_fails_on_tb12(self, tb12):
        assert not validate_schedule(tb12, bracket_schedule(tb12))

    def test_bracket_pattern_checked(self, tb12):
        with pytest.raises(ValidationError):
            bracket_schedule(tb12, z_pattern="LLLR")

    def test_surface_has_no_bracket(self, surface3):
        with pytest.raises(SchedulingError):
            bracket_schedule(surface3)

    def test_shape_mismatch(self, tb12):
        s = make_schedule(tb12)
        broken = Schedule(s.x_orders, s.z_orders[:-1])
        with pytest.raises(ShapeError):
            broken.check_shape(tb12)
        assert not validate_schedule(tb12, broken)
        clash = Schedule([list(o) for o in s.x_orders], [list(o) for o in s.z_orders])
        clash.z_orders[0] = [(1, q) for _, q in clash.z_orders[0]]
        with pytest.raises(ShapeError):
            clash.check_shape(tb12)

    def test_unsupported_family(self):
        from tbcodes.codes import code_from_matrices
        from tbcodes.f2la import BitMatrix

        code = code_from_matrices(BitMatrix.from_dense([[1, 1, 1, 1]]), BitMatrix.from_dense([[1, 1, 1, 1]]))
        with pytest.raises(SchedulingError):
            make_schedule(code)


monomials = st.builds(Monomial, st.sampled_from(list(Axis)), st.integers(0, 9))


@settings(max_examples=25)
@given(st.integers(1, 3), st.integers(2, 5), st.tuples(monomials, monomials), st.tuples(monomials, monomials))
def test_scheduler_on_random_tb_codes(l, m, a, b):
    try:
        spec = TBCodeSpec(l, m, a, b)
    except ValidationError:
        return
    code = build_code(spec)
    s = make_schedule(code)
    assert validate_schedule(code, s)
