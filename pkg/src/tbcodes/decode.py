"""Matching decoders.

Detectors are split by basis into two graphs.  Each graph gets one virtual
boundary node, all-pairs shortest paths, and the observable mask of every
shortest path.  A syndrome is decoded by an exact minimum-weight perfect
matching of its fired detectors, each of which may also match the boundary.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import networkx as nx
import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import dijkstra

from .circuits import Circuit, X_BASIS, Z_BASIS
from .codes import StabilizerCode
from .errors import CapacityError, HypergraphError, InfeasibleError, ValidationError
from .sim import DetectorErrorModel, merge_probability

# Fired-node counts up to this size use the subset recursion; larger ones go to blossom.
SUBSET_LIMIT = 10
MIN_WEIGHT = 1e-9


def edge_weight(p: float) -> float:
    if not 0.0 < p < 1.0:
        raise ValidationError(f"edge probability must lie in (0, 1), got {p}")
    return max(math.log((1 - p) / p), MIN_WEIGHT)


@dataclass
class MatchingGraph:
    """Graph over one basis' detectors; node ``num_nodes`` is the boundary."""

    detector_ids: np.ndarray  # global detector index of each local node
    edges: dict[tuple[int, int], tuple[float, int]]  # (u, v) u<v -> (probability, observable mask)
    num_observables: int = 0
    _dist: np.ndarray | None = field(default=None, repr=False)
    _mask: np.ndarray | None = field(default=None, repr=False)
    _cache: dict = field(default_factory=dict, repr=False)

    @property
    def num_nodes(self) -> int:
        return len(self.detector_ids)

    @property
    def boundary(self) -> int:
        return self.num_nodes

    def weight(self, u: int, v: int) -> float:
        return edge_weight(self.edges[(min(u, v), max(u, v))][0])

    def has_boundary_edges(self) -> bool:
        return any(v == self.boundary for _, v in self.edges)

    @classmethod
    def from_edges(cls, num_nodes: int, edges, num_observables: int = 0) -> MatchingGraph:
        """``edges``: iterable of ``(u, v, p, mask)`` with ``v=None`` for the boundary.

        Parallel edges with equal masks merge by probability; with different
        masks the more likely one is kept.
        """
        merged: dict[tuple[int, int], dict[int, float]] = {}
        for u, v, p, mask in edges:
            v = num_nodes if v is None else v
            if u == v:
                continue
            key = (min(u, v), max(u, v))
            slot = merged.setdefault(key, {})
            slot[mask] = merge_probability(slot[mask], p) if mask in slot else p
        final = {}
        for key, by_mask in merged.items():
            mask = max(sorted(by_mask), key=lambda m: by_mask[m])
            final[key] = (by_mask[mask], mask)
        return cls(np.arange(num_nodes), final, num_observables)

    # -- shortest paths ---------------------------------------------------------
    def _prepare(self) -> None:
        if self._dist is None:
            _prepare_paths(self)

    def distance(self, u: int, v: int) -> float:
        self._prepare()
        return float(self._dist[u, v])

    def path_mask(self, u: int, v: int) -> int:
        self._prepare()
        return int(self._mask[u, v])

    def to_text(self) -> str:
        """DIMACS-like dump: ``p edge N M`` then ``e u v weight mask`` (boundary is N)."""
        lines = [f"p edge {self.num_nodes + 1} {len(self.edges)}"]
        for (u, v), (p, mask) in sorted(self.edges.items()):
            lines.append(f"e {u} {v} {edge_weight(p):.12g} {mask}")
        return "\n".join(lines) + "\n"


def _path_masks(pred: np.ndarray, emask: np.ndarray, dist: np.ndarray) -> np.ndarray:
    """XOR of edge masks along each shortest-path tree, nodes processed in distance order."""
    size = pred.shape[0]
    out = np.zeros((size, size), dtype=np.int64)
    order = np.argsort(dist, axis=1, kind="stable")
    cols = np.arange(size)
    for step in range(size):
        v = order[:, step]
        pv = pred[cols, v]
        ok = pv >= 0
        out[cols[ok], v[ok]] = out[cols[ok], pv[ok]] ^ emask[pv[ok], v[ok]]
    return out


def _prepare_paths(g: MatchingGraph) -> None:
    size = g.num_nodes + 1
    keys = np.array(list(g.edges.keys()), dtype=np.int64).reshape(-1, 2)
    w = np.array([edge_weight(p) for p, _ in g.edges.values()])
    m = np.array([mk for _, mk in g.edges.values()], dtype=np.int64)
    adj = csr_matrix(
        (np.concatenate([w, w]), (np.concatenate([keys[:, 0], keys[:, 1]]), np.concatenate([keys[:, 1], keys[:, 0]]))),
        shape=(size, size),
    )
    dist, pred = dijkstra(adj, directed=False, return_predecessors=True)
    emask = np.zeros((size, size), dtype=np.int64)
    emask[keys[:, 0], keys[:, 1]] = m
    emask[keys[:, 1], keys[:, 0]] = m
    g._dist, g._mask = dist, _path_masks(pred, emask, dist)


# -- graph construction ----------------------------------------------------------


def build_graphs(dem: DetectorErrorModel, c: Circuit | None = None) -> tuple[MatchingGraph, MatchingGraph]:
    """Split ``dem`` into (Z-basis graph, X-basis graph).

    Observables are attached to the graph of the memory basis, read off the
    basis flag of the final-round detectors.
    """
    coords = dem.detector_coords or (c.detector_coords() if c is not None else [])
    if len(coords) != dem.num_detectors or any(len(co) < 3 for co in coords):
        raise ValidationError("detectors need (check, round, basis) coordinates to split graphs")
    bases = np.array([int(co[2]) for co in coords], dtype=np.int64)
    rounds = np.array([co[1] for co in coords])
    mem = int(bases[np.argmax(rounds)]) if len(rounds) else Z_BASIS
    graphs = []
    for flag in (Z_BASIS, X_BASIS):
        ids = np.flatnonzero(bases == flag)
        local = {int(d): i for i, d in enumerate(ids)}
        edges = []
        for mech in dem.mechanisms:
            dets = [local[d] for d in mech.detectors if d in local]
            if not dets:
                continue
            if len(dets) > 2:
                raise HypergraphError(
                    f"mechanism touches {len(dets)} detectors of basis {'ZX'[flag]}: {mech.detectors}"
                )
            mask = 0
            if flag == mem:
                for o in mech.observables:
                    mask |= 1 << o
            edges.append((dets[0], dets[1] if len(dets) == 2 else None, mech.probability, mask))
        g = MatchingGraph.from_edges(len(ids), edges, dem.num_observables if flag == mem else 0)
        g.detector_ids = ids
        graphs.append(g)
    return graphs[0], graphs[1]


def code_capacity_graph(code: StabilizerCode, p: float = 0.1, basis: str = "X", logicals=None) -> MatchingGraph:
    """Data-qubit errors of one type with perfect syndromes.

    ``basis="X"`` decodes X errors against the Z checks.  Each qubit is an edge
    between the checks it touches (or to the boundary).  ``logicals`` is an
    optional list of 0/1 vectors whose overlap parities form the mask.
    """
    h = (code.h_z if basis.upper() == "X" else code.h_x).to_dense()
    edges = []
    for q in range(code.n):
        checks = np.flatnonzero(h[:, q])
        if len(checks) > 2:
            raise HypergraphError(f"qubit {q} is in {len(checks)} checks")
        if len(checks) == 0:
            continue
        mask = 0
        for j, lg in enumerate(logicals or []):
            if lg[q]:
                mask |= 1 << j
        edges.append((int(checks[0]), int(checks[1]) if len(checks) == 2 else None, p, mask))
    return MatchingGraph.from_edges(h.shape[0], edges, len(logicals or []))


# -- matching --------------------------------------------------------------------


def _subset_matching(dist: np.ndarray, bdist: np.ndarray) -> tuple[float, list[tuple[int, int]]]:
    """Exact min-weight matching where node i may pair with j or go to the boundary (-1)."""
    f = len(bdist)

    @lru_cache(maxsize=None)
    def best(mask: int) -> tuple[float, tuple]:
        if mask == 0:
            return 0.0, ()
        i = (mask & -mask).bit_length() - 1
        rest = mask & ~(1 << i)
        cand_w, cand_pairs = math.inf, ()
        if bdist[i] < math.inf:
            w, pairs = best(rest)
            cand_w, cand_pairs = w + bdist[i], ((i, -1),) + pairs
        m = rest
        while m:
            j = (m & -m).bit_length() - 1
            m &= m - 1
            if dist[i, j] < math.inf:
                w, pairs = best(rest & ~(1 << j))
                w += dist[i, j]
                if w < cand_w - 1e-12:
                    cand_w, cand_pairs = w, ((i, j),) + pairs
        return cand_w, cand_pairs

    w, pairs = best((1 << f) - 1)
    return w, list(pairs)


def _blossom_matching(dist: np.ndarray, bdist: np.ndarray) -> tuple[float, list[tuple[int, int]]]:
    """Same problem through networkx blossom with one boundary copy per node."""
    f = len(bdist)
    finite = np.concatenate([dist[np.isfinite(dist)].ravel(), bdist[np.isfinite(bdist)]])
    big = 1.0 + 2.0 * (finite.max() if len(finite) else 0.0) * max(f, 1)
    g = nx.Graph()
    g.add_nodes_from(range(2 * f))
    for i in range(f):
        for j in range(i + 1, f):
            if np.isfinite(dist[i, j]):
                g.add_edge(i, j, weight=big - dist[i, j])
            g.add_edge(f + i, f + j, weight=big)
        if np.isfinite(bdist[i]):
            g.add_edge(i, f + i, weight=big - bdist[i])
    matching = nx.max_weight_matching(g, maxcardinality=True)
    if len(matching) * 2 != 2 * f:
        raise InfeasibleError("no perfect matching of the fired detectors exists")
    pairs, total = [], 0.0
    for a, b in sorted(tuple(sorted(e)) for e in matching):
        if a < f and b < f:
            pairs.append((a, b))
            total += dist[a, b]
        elif a < f:
            pairs.append((a, -1))
            total += bdist[a]
    return total, pairs


def min_weight_perfect_matching(
    dist: np.ndarray, bdist: np.ndarray | None = None, method: str = "auto"
) -> tuple[float, list[tuple[int, int]]]:
    """Exact matching on a complete graph given by ``dist``; ``bdist[i]`` is node i's boundary cost.

    Without ``bdist`` nodes cannot use the boundary.  Pairs use ``-1`` for the
    boundary.  Raises :class:`InfeasibleError` if no perfect matching exists.
    """
    dist = np.asarray(dist, dtype=float)
    f = dist.shape[0]
    bdist = np.full(f, math.inf) if bdist is None else np.asarray(bdist, dtype=float)
    if f == 0:
        return 0.0, []
    if method == "subset" or (method == "auto" and f <= SUBSET_LIMIT):
        w, pairs = _subset_matching(dist, bdist)
        if not math.isfinite(w):
            raise InfeasibleError("no perfect matching of the fired detectors exists")
        return w, pairs
    return _blossom_matching(dist, bdist)


def mwpm_decode(g: MatchingGraph, syndrome) -> tuple[int, float]:
    """Return (observable mask, matching weight) for a 0/1 syndrome over ``g``'s nodes."""
    syn = np.asarray(syndrome, dtype=np.uint8).reshape(-1)
    if len(syn) != g.num_nodes:
        raise ValidationError(f"syndrome length {len(syn)} != {g.num_nodes} detectors")
    fired = np.flatnonzero(syn)
    key = fired.tobytes()
    hit = g._cache.get(key)
    if hit is not None:
        if isinstance(hit, Exception):
            raise hit
        return hit
    g._prepare()
    try:
        result = _decode_fired(g, fired)
    except InfeasibleError as exc:
        g._cache[key] = exc
        raise
    if len(g._cache) < 1_000_000:
        g._cache[key] = result
    return result


def _decode_fired(g: MatchingGraph, fired: np.ndarray) -> tuple[int, float]:
    if len(fired) == 0:
        return 0, 0.0
    dist, mask, b = g._dist, g._mask, g.boundary
    if len(fired) == 1:
        i = fired[0]
        if not np.isfinite(dist[i, b]):
            raise InfeasibleError("single fired detector cannot reach the boundary")
        return int(mask[i, b]), float(dist[i, b])
    if len(fired) == 2:
        i, j = fired
        pair = dist[i, j]
        if not np.isfinite(pair):
            raise InfeasibleError("fired detectors are disconnected")
        return int(mask[i, j]), float(pair)
    sub = dist[np.ix_(fired, fired)]
    w, pairs = min_weight_perfect_matching(sub, dist[fired, b])
    out = 0
    for a, c in pairs:
        out ^= int(mask[fired[a], b if c < 0 else fired[c]])
    return out, float(w)


def decode_batch(g: MatchingGraph, syndromes: np.ndarray) -> np.ndarray:
    """Observable prediction bits ``(shots, num_observables)``; identical syndromes decoded once."""
    syndromes = np.asarray(syndromes, dtype=np.uint8)
    shots = syndromes.shape[0]
    nobs = g.num_observables
    out = np.zeros((shots, nobs), dtype=np.uint8)
    if shots == 0 or nobs == 0:
        return out
    packed = np.packbits(syndromes, axis=1)
    uniq, first, inverse = np.unique(packed, axis=0, return_index=True, return_inverse=True)
    inverse = inverse.reshape(-1)
    preds = np.zeros((len(uniq), nobs), dtype=np.uint8)
    for u, f in enumerate(first):
        m, _ = mwpm_decode(g, syndromes[f])
        preds[u] = [(m >> j) & 1 for j in range(nobs)]
    return preds[inverse]


# -- oracles ----------------------------------------------------------------------

BRUTE_FORCE_MAX_N = 16


@lru_cache(maxsize=16)
def _all_syndromes(h_bytes: bytes, rows: int, n: int) -> tuple[np.ndarray, np.ndarray]:
    h = np.frombuffer(h_bytes, dtype=np.uint8).reshape(rows, n)
    cols = np.zeros(n, dtype=np.int64)
    for r in range(rows):
        cols |= h[r].astype(np.int64) << r
    syn = np.zeros(1, dtype=np.int64)
    for q in range(n):
        syn = np.concatenate([syn, syn ^ cols[q]])
    weights = np.bitwise_count(np.arange(1 << n, dtype=np.uint64)).astype(np.int64)
    return syn, weights


def brute_force_decode(code: StabilizerCode, syndrome, basis: str = "X") -> np.ndarray:
    """Minimum-weight error pattern of type ``basis`` with the given syndrome.

    Scans all 2^n patterns; ties go to the smallest integer encoding (qubit 0
    is bit 0).  Returns a 0/1 vector of length n.
    """
    n = code.n
    if n > BRUTE_FORCE_MAX_N:
        raise CapacityError(f"brute-force decoding supports n <= {BRUTE_FORCE_MAX_N}, got {n}")
    h = (code.h_z if basis.upper() == "X" else code.h_x).to_dense().astype(np.uint8)
    syn = np.asarray(syndrome, dtype=np.int64).reshape(-1)
    if len(syn) != h.shape[0]:
        raise ValidationError(f"syndrome length {len(syn)} != {h.shape[0]} checks")
    table, weights = _all_syndromes(np.ascontiguousarray(h).tobytes(), h.shape[0], n)
    target = int(sum(int(b) << r for r, b in enumerate(syn)))
    hits = np.flatnonzero(table == target)
    if not len(hits):
        raise InfeasibleError("no error pattern produces this syndrome")
    best = hits[np.argmin(weights[hits])]
    return ((int(best) >> np.arange(n)) & 1).astype(np.uint8)


def exhaustive_matching_weight(dist: np.ndarray) -> float:
    """Minimum perfect matching weight by enumerating every pairing (even node count, no boundary)."""
    dist = np.asarray(dist, dtype=float)
    nodes = list(range(dist.shape[0]))
    if len(nodes) % 2:
        raise InfeasibleError("odd node count has no perfect matching")

    def rec(rest: list[int]) -> float:
        if not rest:
            return 0.0
        i, tail = rest[0], rest[1:]
        best = math.inf
        for k, j in enumerate(tail):
            best = min(best, dist[i, j] + rec(tail[:k] + tail[k + 1 :]))
        return best

    return rec(nodes)


@dataclass
class MemoryDecoder:
    """Decoder for one memory circuit: builds both graphs and predicts observables."""

    circuit: Circuit
    dem: DetectorErrorModel
    z_graph: MatchingGraph
    x_graph: MatchingGraph

    @classmethod
    def from_circuit(cls, c: Circuit, dem: DetectorErrorModel | None = None) -> MemoryDecoder:
        from .sim import extract_dem

        dem = dem or extract_dem(c)
        zg, xg = build_graphs(dem, c)
        return cls(c, dem, zg, xg)

    def predict(self, detectors: np.ndarray) -> np.ndarray:
        detectors = np.asarray(detectors, dtype=np.uint8)
        nobs = self.dem.num_observables
        pred = np.zeros((detectors.shape[0], nobs), dtype=np.uint8)
        for g in (self.z_graph, self.x_graph):
            if g.num_observables and g.num_nodes:
                pred ^= decode_batch(g, detectors[:, g.detector_ids])
        return pred
