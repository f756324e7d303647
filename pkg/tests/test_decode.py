import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tbcodes.circuits import build_memory_circuit
from tbcodes.codes import code_from_matrices, named_code
from tbcodes.decode import (
    MatchingGraph,
    MemoryDecoder,
    brute_force_decode,
    build_graphs,
    code_capacity_graph,
    decode_batch,
    edge_weight,
    exhaustive_matching_weight,
    min_weight_perfect_matching,
    mwpm_decode,
)
from tbcodes.errors import CapacityError, HypergraphError, InfeasibleError, ValidationError
from tbcodes.f2la import BitMatrix
from tbcodes.logicals import logical_basis
from tbcodes.sim import DetectorErrorModel, FaultMechanism, extract_dem, merge_probability, sample_split


def test_edge_weight():
    assert edge_weight(0.5) == pytest.approx(1e-9)
    assert edge_weight(0.01) == pytest.approx(math.log(99))
    with pytest.raises(ValidationError):
        edge_weight(0.0)


def test_parallel_edges_merge():
    g = MatchingGraph.from_edges(2, [(0, 1, 0.01, 0), (1, 0, 0.01, 0)])
    assert g.edges[(0, 1)][0] == pytest.approx(0.0198)
    assert g.weight(0, 1) == pytest.approx(math.log((1 - 0.0198) / 0.0198))


def test_parallel_edges_with_different_masks_keep_likelier():
    g = MatchingGraph.from_edges(2, [(0, 1, 0.01, 0), (0, 1, 0.03, 1)])
    assert g.edges[(0, 1)] == (0.03, 1)


def test_empty_syndrome():
    g = MatchingGraph.from_edges(3, [(0, 1, 0.1, 1), (1, 2, 0.1, 0)], 1)
    assert mwpm_decode(g, [0, 0, 0]) == (0, 0.0)


def test_single_edge_and_paths():
    g = MatchingGraph.from_edges(3, [(0, 1, 0.1, 1), (1, 2, 0.1, 0), (2, None, 0.2, 1)], 1)
    assert mwpm_decode(g, [1, 1, 0]) == (1, pytest.approx(edge_weight(0.1)))
    # 0 reaches the boundary through 1 and 2: masks 1 ^ 0 ^ 1
    mask, w = mwpm_decode(g, [1, 0, 0])
    assert mask == 0 and w == pytest.approx(2 * edge_weight(0.1) + edge_weight(0.2))
    assert g.distance(0, 2) == pytest.approx(2 * edge_weight(0.1))
    assert g.path_mask(0, g.boundary) == 0


def test_infeasible_syndromes():
    g = MatchingGraph.from_edges(3, [(0, 1, 0.1, 1), (1, 2, 0.1, 0)], 1)
    with pytest.raises(InfeasibleError):
        mwpm_decode(g, [1, 0, 0])
    with pytest.raises(InfeasibleError):
        mwpm_decode(g, [1, 1, 1])
    with pytest.raises(InfeasibleError):
        mwpm_decode(g, [1, 0, 0])  # cached failure
    with pytest.raises(ValidationError):
        mwpm_decode(g, [1, 0])
    apart = MatchingGraph.from_edges(4, [(0, 1, 0.1, 0), (2, 3, 0.1, 0)], 1)
    with pytest.raises(InfeasibleError):
        mwpm_decode(apart, [1, 0, 1, 0])


def test_graph_text():
    g = MatchingGraph.from_edges(2, [(0, 1, 0.25, 1), (1, None, 0.5, 0)], 1)
    assert g.to_text().splitlines()[0] == "p edge 3 2"
    assert g.has_boundary_edges()


def _oracle_with_boundary(dist, bdist):
    """Enumerate every assignment of nodes to pairs or the boundary."""
    n = len(dist)

    def rec(rest):
        if not rest:
            return 0.0
        i, tail = rest[0], rest[1:]
        best = bdist[i] + rec(tail)
        for k, j in enumerate(tail):
            best = min(best, dist[i][j] + rec(tail[:k] + tail[k + 1 :]))
        return best

    return rec(list(range(n)))


@st.composite
def complete_graphs(draw, max_nodes=12):
    n = draw(st.integers(1, max_nodes))
    w = draw(st.lists(st.floats(0.1, 20.0), min_size=n * n, max_size=n * n))
    d = np.array(w).reshape(n, n)
    d = np.triu(d, 1) + np.triu(d, 1).T
    b = np.array(draw(st.lists(st.floats(0.1, 20.0), min_size=n, max_size=n)))
    return d, b


@settings(max_examples=60, deadline=None)
@given(complete_graphs(max_nodes=8))
def test_matching_methods_agree_with_enumeration(graph):
    d, b = graph
    expected = _oracle_with_boundary(d, b)
    for method in ("subset", "blossom"):
        w, pairs = min_weight_perfect_matching(d, b, method=method)
        assert w == pytest.approx(expected, rel=1e-9, abs=1e-9)
        seen = [x for p in pairs for x in p if x >= 0]
        assert sorted(seen) == list(range(len(d)))
        recomputed = sum(b[i] if j < 0 else d[i, j] for i, j in pairs)
        assert recomputed == pytest.approx(w)


@settings(max_examples=40, deadline=None)
@given(complete_graphs(max_nodes=12).filter(lambda g: len(g[0]) % 2 == 0))
def test_blossom_without_boundary(graph):
    d, _ = graph
    w, _ = min_weight_perfect_matching(d, None, method="blossom")
    assert w == pytest.approx(exhaustive_matching_weight(d))
    if len(d) <= 10:
        assert min_weight_perfect_matching(d, None, method="subset")[0] == pytest.approx(w)


def test_no_boundary_odd_is_infeasible():
    d = np.ones((3, 3)) - np.eye(3)
    with pytest.raises(InfeasibleError):
        min_weight_perfect_matching(d)
    with pytest.raises(InfeasibleError):
        min_weight_perfect_matching(d, method="blossom")
    with pytest.raises(InfeasibleError):
        exhaustive_matching_weight(d)


@pytest.mark.parametrize("name,basis", [("tb12", "X"), ("tb12", "Z"), ("surface3", "X"), ("surface3", "Z")])
def test_code_capacity_mwpm_matches_brute_force(name, basis):
    code = named_code(name)
    g = code_capacity_graph(code, 0.05, basis)
    w = edge_weight(0.05)
    rows = g.num_nodes
    for bits in itertools.product((0, 1), repeat=rows):
        syn = np.array(bits, dtype=np.uint8)
        try:
            leader = brute_force_decode(code, syn, basis)
        except InfeasibleError:
            with pytest.raises(InfeasibleError):
                mwpm_decode(g, syn)
            continue
        _, weight = mwpm_decode(g, syn)
        assert round(weight / w) == int(leader.sum())
        h = (code.h_z if basis == "X" else code.h_x).to_dense()
        assert np.array_equal(h @ leader % 2, syn)


def test_code_capacity_logical_class(tb12, tb12_basis):
    z_logicals = [z.z for z in tb12_basis.z_ops()]
    g = code_capacity_graph(tb12, 0.05, "X", z_logicals)
    rng = np.random.default_rng(0)
    for _ in range(30):
        err = np.zeros(12, dtype=np.uint8)
        err[rng.integers(12)] = 1
        syn = tb12.h_z.to_dense() @ err % 2
        mask, _ = mwpm_decode(g, syn)
        truth = sum(int(z @ err % 2) << j for j, z in enumerate(z_logicals))
        assert mask == truth  # distance 3 corrects every single error


def test_brute_force_limits(tb12):
    with pytest.raises(CapacityError):
        brute_force_decode(named_code("tb24"), np.zeros(12))
    with pytest.raises(ValidationError):
        brute_force_decode(tb12, np.zeros(5))
    assert not brute_force_decode(tb12, np.zeros(6)).any()


def test_brute_force_tie_break(tb12):
    h = tb12.h_z.to_dense()
    patterns = [np.array([(e >> q) & 1 for q in range(12)]) for e in range(1 << 12)]
    for syn_bits in [(1, 1, 0, 0, 0, 0), (1, 0, 1, 0, 1, 1), (0, 1, 1, 1, 1, 0)]:
        syn = np.array(syn_bits)
        ties = [e for e, v in enumerate(patterns) if np.array_equal(h @ v % 2, syn)]
        best = min(ties, key=lambda e: (bin(e).count("1"), e))
        leader = brute_force_decode(tb12, syn)
        assert int(sum(int(b) << q for q, b in enumerate(leader))) == best


def test_hypergraph_rejected():
    dem = DetectorErrorModel(3, 0, [FaultMechanism(0.1, (0, 1, 2), ())], [(0, 0, 0), (1, 0, 0), (2, 0, 0)])
    with pytest.raises(HypergraphError):
        build_graphs(dem)
    triple = code_from_matrices(BitMatrix.zeros(0, 1), BitMatrix.from_dense([[1], [1], [1]]))
    with pytest.raises(HypergraphError):
        code_capacity_graph(triple, 0.1, "X")


def test_graphs_need_coordinates():
    dem = DetectorErrorModel(1, 0, [FaultMechanism(0.1, (0,), ())], [(0,)])
    with pytest.raises(ValidationError):
        build_graphs(dem)


@pytest.mark.parametrize("name", ["tb12", "tb56", "surface3"])
def test_memory_graphs(name):
    code = named_code(name)
    c = build_memory_circuit(code, logical_basis(code), 3, 0.001)
    zg, xg = build_graphs(extract_dem(c), c)
    assert zg.num_nodes + xg.num_nodes == c.num_detectors
    assert zg.num_observables == code.k and xg.num_observables == 0
    if name.startswith("tb"):
        assert not zg.has_boundary_edges()


def test_memory_decoder_single_faults(tb12, tb12_basis):
    """Every single fault mechanism is decoded to its own observable flip."""
    c = build_memory_circuit(tb12, tb12_basis, 3, 0.001)
    dec = MemoryDecoder.from_circuit(c)
    z_ids = set(dec.z_graph.detector_ids.tolist())
    mechs = [m for m in dec.dem.mechanisms if set(m.detectors) & z_ids]
    det = np.zeros((len(mechs), c.num_detectors), dtype=np.uint8)
    truth = np.zeros((len(mechs), 2), dtype=np.uint8)
    for i, m in enumerate(mechs):
        det[i, list(m.detectors)] = 1
        truth[i, list(m.observables)] = 1
    assert np.array_equal(dec.predict(det), truth)


def test_decode_batch_matches_single(tb12, tb12_basis):
    c = build_memory_circuit(tb12, tb12_basis, 3, 0.005)
    dec = MemoryDecoder.from_circuit(c)
    det, _ = sample_split(c, 500, seed=3)
    sub = det[:, dec.z_graph.detector_ids]
    batch = decode_batch(dec.z_graph, sub)
    for row, pred in zip(sub[:50], batch[:50]):
        mask, _ = mwpm_decode(dec.z_graph, row)
        assert pred.tolist() == [(mask >> j) & 1 for j in range(2)]


def test_decoder_beats_no_decoding(tb12, tb12_basis):
    c = build_memory_circuit(tb12, tb12_basis, 3, 0.003)
    det, obs = sample_split(c, 20_000, seed=9)
    pred = MemoryDecoder.from_circuit(c).predict(det)
    decoded = np.any(pred != obs, axis=1).mean()
    raw = np.any(obs != 0, axis=1).mean()
    assert decoded < raw / 3


def test_merge_probability_symmetry():
    assert merge_probability(0.1, 0.2) == pytest.approx(merge_probability(0.2, 0.1))
