"""Failure-mode extraction from a built graph.

Edges get weights from a supervision function (the prediction-error measure):
similar per-node means make a strong edge, different means a weak one.
Hierarchical clustering over the weighted edges proposes partitions, Louvain
refines the best of them under weighted Newman modularity, and the resulting
parts are kept as failure modes when they are large enough and fail often
enough.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .dataset import Dataset, Meta
from .errors import ConfigError, SelectionError
from .filters import FilterValues
from .mapper import MapperGraph

DEFAULT_MIN_SIZE = 15
DEFAULT_BASELINE_ACCURACY = 0.9905
GAIN_TOL = 1e-12


@dataclass(frozen=True)
class WeightedGraph:
    """A mapper graph with supervision means per node and weights per edge."""

    graph: MapperGraph
    node_means: np.ndarray
    weights: np.ndarray  # aligned with graph.edges

    @property
    def n_nodes(self) -> int:
        return len(self.graph.nodes)


@dataclass(frozen=True)
class FailureMode:
    """A group of graph nodes whose pooled members fail consistently."""

    id: int
    node_ids: tuple[int, ...]
    members: np.ndarray
    ground_truth_mode: float
    accuracy: float
    size: int
    provenance: str  # 'automatic' | 'manual'
    prediction_distribution: dict | None = None  # label -> count; classification only


def weight_edges(g: MapperGraph, supervision: FilterValues) -> WeightedGraph:
    """Weight each edge by how similar its endpoints' supervision means are.

    With M the largest mean difference over edges, w = 1 - |mu_u - mu_v| / M,
    so equal means give weight 1 and the most dissimilar pair weight 0.  When
    every edge joins equal means (M = 0) all weights are 1.
    """
    if supervision.values.shape[0] != g.row_count:
        raise ConfigError("supervision values do not cover all rows")
    means = np.array([supervision.values[n.members].mean() for n in g.nodes])
    if not g.edges:
        return WeightedGraph(graph=g, node_means=means, weights=np.empty(0))
    deltas = np.array([abs(means[u] - means[v]) for u, v, _ in g.edges])
    m = deltas.max()
    weights = np.ones_like(deltas) if m == 0 else 1.0 - deltas / m
    return WeightedGraph(graph=g, node_means=means, weights=weights)


def modularity(n_nodes: int, edges, labels) -> float:
    """Weighted Newman modularity of a node partition.

    edges are (u, v, w) with u != v plus optional self-loops (u, u, w); a
    self-loop contributes twice to its node's degree.  Zero total weight
    yields 0 by convention.
    """
    labels = np.asarray(labels)
    m = 0.0
    intra = {}
    degree = np.zeros(n_nodes)
    for u, v, w in edges:
        m += w
        if u == v:
            degree[u] += 2 * w
            intra[labels[u]] = intra.get(labels[u], 0.0) + w
        else:
            degree[u] += w
            degree[v] += w
            if labels[u] == labels[v]:
                intra[labels[u]] = intra.get(labels[u], 0.0) + w
    if m == 0.0:
        return 0.0
    q = 0.0
    for c in set(labels.tolist()):
        deg_c = degree[labels == c].sum()
        q += intra.get(c, 0.0) / m - (deg_c / (2.0 * m)) ** 2
    return q


def _canonical_labels(parents) -> list[int]:
    """Relabel a union-find state as community ids numbered by first member."""
    roots = {}
    labels = []
    for i in range(len(parents)):
        root = i
        while parents[root] != root:
            root = parents[root]
        labels.append(roots.setdefault(root, len(roots)))
    return labels


def ahcl_partition(wg: WeightedGraph) -> list[int]:
    """Partition nodes by the best cut of the agglomerative clustering tree.

    Single-linkage agglomeration over the edge metric d = 1 - w (non-adjacent
    pairs never merge), evaluating the partition after each distinct merge
    level and returning the one with maximal modularity.  Ties prefer fewer
    clusters, then the lowest cut level.
    """
    n = wg.n_nodes
    if n == 0:
        raise ConfigError("cannot partition an empty graph")
    weighted_edges = [
        (u, v, w) for (u, v, _), w in zip(wg.graph.edges, wg.weights.tolist())
    ]
    order = sorted(range(len(weighted_edges)), key=lambda e: 1.0 - weighted_edges[e][2])

    parents = list(range(n))

    def find(x):
        while parents[x] != x:
            parents[x] = parents[parents[x]]
            x = parents[x]
        return x

    candidates = [(_canonical_labels(parents), 0)]  # level 0: all singletons
    level = 0
    i = 0
    while i < len(order):
        height = 1.0 - weighted_edges[order[i]][2]
        while i < len(order) and 1.0 - weighted_edges[order[i]][2] == height:
            u, v, _ = weighted_edges[order[i]]
            ru, rv = find(u), find(v)
            if ru != rv:
                parents[ru] = rv
            i += 1
        level += 1
        candidates.append((_canonical_labels(parents), level))

    def score(candidate):
        labels, lvl = candidate
        q = modularity(n, weighted_edges, labels)
        return (-q, len(set(labels)), lvl)

    best = min(candidates, key=score)
    return best[0]


class _LevelGraph:
    """Mutable community state for one Louvain level."""

    def __init__(self, n, edges, init_labels):
        self.n = n
        self.adj = [dict() for _ in range(n)]
        self.self_loops = np.zeros(n)
        self.degree = np.zeros(n)
        self.total = 0.0
        for u, v, w in edges:
            if u == v:
                self.self_loops[u] += w
                self.degree[u] += 2 * w
            else:
                self.adj[u][v] = self.adj[u].get(v, 0.0) + w
                self.adj[v][u] = self.adj[v].get(u, 0.0) + w
                self.degree[u] += w
                self.degree[v] += w
            self.total += w
        self.labels = list(init_labels)
        self.community_degree = {}
        for i, c in enumerate(self.labels):
            self.community_degree[c] = self.community_degree.get(c, 0.0) + self.degree[i]

    def local_moves(self) -> bool:
        """Greedy passes in ascending node-id order; True if anything moved.

        Candidate targets are the neighbors' communities plus a fresh
        singleton community (so an over-merged initial partition can be
        broken apart).  A node moves only on a strict modularity gain;
        equal-gain candidates resolve to the lowest community id and never
        beat staying put, so the phase terminates and modularity never
        decreases.
        """
        if self.total == 0.0:
            return False
        moved_any = False
        two_m = 2.0 * self.total
        fresh = max(self.labels, default=-1) + 1
        while True:
            moved = False
            for i in range(self.n):
                current = self.labels[i]
                k_i = self.degree[i]
                link = {current: 0.0}
                for j, w in self.adj[i].items():
                    c = self.labels[j]
                    link[c] = link.get(c, 0.0) + w
                self.community_degree[current] -= k_i  # detach i
                best_c = current
                best_gain = link[current] - (self.community_degree[current] * k_i) / two_m
                for c in sorted(link):
                    if c == current:
                        continue
                    gain = link[c] - (self.community_degree[c] * k_i) / two_m
                    if gain > best_gain + GAIN_TOL:
                        best_c, best_gain = c, gain
                if 0.0 > best_gain + GAIN_TOL:  # isolating beats every community
                    best_c, best_gain = fresh, 0.0
                    fresh += 1
                self.community_degree[best_c] = (
                    self.community_degree.get(best_c, 0.0) + k_i
                )
                if best_c != current:
                    self.labels[i] = best_c
                    moved = True
                    moved_any = True
            if not moved:
                return moved_any

    def aggregate(self):
        """Collapse communities to super-nodes; returns (edges, node->super map)."""
        communities = sorted(set(self.labels))
        remap = {c: i for i, c in enumerate(communities)}
        mapping = [remap[c] for c in self.labels]
        agg = {}
        for u in range(self.n):
            cu = mapping[u]
            if self.self_loops[u]:
                agg[(cu, cu)] = agg.get((cu, cu), 0.0) + self.self_loops[u]
            for v, w in self.adj[u].items():
                if u < v:
                    cv = mapping[v]
                    key = (min(cu, cv), max(cu, cv))
                    agg[key] = agg.get(key, 0.0) + w
        edges = [(u, v, w) for (u, v), w in sorted(agg.items())]
        return edges, mapping


def _louvain_passes(n: int, edges, init_labels) -> list[int]:
    """Alternate greedy local moves with graph aggregation until Q stalls."""
    node_map = list(range(n))  # original node -> current-level node
    level_count = n
    level_labels = list(init_labels)
    level_edges = list(edges)
    while True:
        level = _LevelGraph(n=level_count, edges=level_edges, init_labels=level_labels)
        moved = level.local_moves()
        level_edges, mapping = level.aggregate()
        node_map = [mapping[node_map[i]] for i in range(n)]
        if not moved:
            break
        level_count = max(mapping) + 1
        level_labels = list(range(level_count))  # aggregated nodes start apart

    # canonical community numbering by first appearance
    seen = {}
    return [seen.setdefault(c, len(seen)) for c in node_map]


def louvain(wg: WeightedGraph, init_labels: list[int] | None = None) -> list[int]:
    """Louvain community detection on the edge weights.

    By default the greedy passes run twice, once from the clustering-tree
    partition (each part one starting community) and once from singletons,
    and the higher-modularity result wins; a coarse tree cut can be a local
    optimum that single-node moves cannot split, while the singleton start
    cannot see it at all, so the pair dominates either alone.  Passing
    explicit init_labels runs a single start from that partition.
    Deterministic: moves scan nodes in ascending id, ties pick the lowest
    community id, and the tree-initialized result wins exact ties.
    """
    n = wg.n_nodes
    if n == 0:
        raise ConfigError("cannot partition an empty graph")
    edges = [(u, v, w) for (u, v, _), w in zip(wg.graph.edges, wg.weights.tolist())]
    if init_labels is not None:
        return _louvain_passes(n, edges, init_labels)

    from_tree = _louvain_passes(n, edges, ahcl_partition(wg))
    from_singletons = _louvain_passes(n, edges, list(range(n)))
    q_tree = modularity(n, edges, from_tree)
    q_singletons = modularity(n, edges, from_singletons)
    return from_tree if q_tree >= q_singletons else from_singletons


def _members_of_nodes(g: MapperGraph, node_ids) -> np.ndarray:
    pooled = np.unique(
        np.concatenate([g.node_by_id(i).members for i in node_ids])
    )
    return pooled


def _correct_mask(meta: Meta, members: np.ndarray, task: str, tolerance: float) -> np.ndarray:
    gt = meta.ground_truth[members]
    pred = meta.prediction[members]
    if task == "regression":
        return np.abs(pred - gt) <= tolerance
    return pred == gt


def _ground_truth_mode(meta: Meta, members: np.ndarray, task: str) -> float:
    gt = meta.ground_truth[members]
    if task == "regression":
        return float(gt.mean())
    values, counts = np.unique(gt, return_counts=True)
    return float(values[np.argmax(counts)])  # np.unique sorts, so ties go low


def _build_mode(
    mode_id: int,
    node_ids,
    g: MapperGraph,
    meta: Meta,
    provenance: str,
    task: str,
    tolerance: float,
) -> FailureMode:
    node_ids = tuple(sorted(set(int(i) for i in node_ids)))
    members = _members_of_nodes(g, node_ids)
    correct = _correct_mask(meta, members, task, tolerance)
    prediction_distribution = None
    if task != "regression":
        values, counts = np.unique(meta.prediction[members], return_counts=True)
        prediction_distribution = {float(v): int(c) for v, c in zip(values, counts)}
    return FailureMode(
        id=mode_id,
        node_ids=node_ids,
        members=members,
        ground_truth_mode=_ground_truth_mode(meta, members, task),
        accuracy=float(correct.mean()),
        size=int(members.size),
        provenance=provenance,
        prediction_distribution=prediction_distribution,
    )


def select_failure_modes(
    partition,
    g: MapperGraph,
    meta: Meta,
    min_size: int = DEFAULT_MIN_SIZE,
    baseline_accuracy: float = DEFAULT_BASELINE_ACCURACY,
    task: str = "classification",
    tolerance: float = 0.0,
) -> list[FailureMode]:
    """Keep partition parts that are big enough and fail often enough.

    A part survives when its deduplicated member count is at least min_size
    and the fraction of correct predictions among those members is strictly
    below baseline_accuracy.  For regression, "correct" means the absolute
    residual is within `tolerance`.
    """
    if not 0.0 <= baseline_accuracy <= 1.0:
        raise ConfigError(f"baseline_accuracy must be in [0, 1], got {baseline_accuracy}")
    parts: dict[int, list[int]] = {}
    for node_id, label in enumerate(partition):
        parts.setdefault(label, []).append(node_id)
    ordered = sorted(parts.values(), key=min)

    modes = []
    for node_ids in ordered:
        mode = _build_mode(len(modes), node_ids, g, meta, "automatic", task, tolerance)
        if mode.size >= min_size and mode.accuracy < baseline_accuracy:
            modes.append(mode)
    return modes


class ThresholdWarning(UserWarning):
    """A manually selected mode misses the automatic-extraction thresholds."""


def threshold_warnings(
    mode: FailureMode,
    min_size: int = DEFAULT_MIN_SIZE,
    baseline_accuracy: float = DEFAULT_BASELINE_ACCURACY,
) -> list[str]:
    messages = []
    if mode.size < min_size:
        messages.append(f"size {mode.size} < {min_size}")
    if mode.accuracy >= baseline_accuracy:
        messages.append(
            f"accuracy {mode.accuracy:.4f} >= baseline {baseline_accuracy:.4f}"
        )
    return messages


def manual_select(
    g: MapperGraph,
    node_ids,
    meta: Meta,
    mode_id: int = 0,
    task: str = "classification",
    tolerance: float = 0.0,
    min_size: int = DEFAULT_MIN_SIZE,
    baseline_accuracy: float = DEFAULT_BASELINE_ACCURACY,
) -> FailureMode:
    """Turn an analyst's node selection into a failure mode.

    Thresholds are not enforced (the analyst may deliberately pick a small or
    mildly failing group) but a ThresholdWarning is emitted when they fail.
    Duplicate node ids are deduplicated silently; unknown ids are an error.
    """
    requested = list(node_ids)
    if not requested:
        raise SelectionError("empty selection")
    known = len(g.nodes)
    unknown = sorted({int(i) for i in requested if not 0 <= int(i) < known})
    if unknown:
        raise SelectionError(f"unknown node ids: {unknown}")
    mode = _build_mode(mode_id, requested, g, meta, "manual", task, tolerance)
    for message in threshold_warnings(mode, min_size, baseline_accuracy):
        warnings.warn(message, ThresholdWarning, stacklevel=2)
    return mode


def modes_to_dict(modes: list[FailureMode], config_hash: str | None = None) -> dict:
    doc = {
        "schema": "failure-modes/1",
        "modes": [
            {
                "id": m.id,
                "node_ids": list(m.node_ids),
                "members": [int(r) for r in m.members],
                "stats": {
                    "size": m.size,
                    "accuracy": m.accuracy,
                    "ground_truth_mode": m.ground_truth_mode,
                    "prediction_distribution": (
                        {str(k): v for k, v in m.prediction_distribution.items()}
                        if m.prediction_distribution is not None
                        else None
                    ),
                },
                "provenance": m.provenance,
            }
            for m in modes
        ],
    }
    if config_hash is not None:
        doc["config_hash"] = config_hash
    return doc


def modes_from_dict(doc: dict) -> list[FailureMode]:
    def dist_from(stats):
        dist = stats.get("prediction_distribution")
        if dist is None:
            return None
        return {float(k): v for k, v in dist.items()}

    return [
        FailureMode(
            id=md["id"],
            node_ids=tuple(md["node_ids"]),
            members=np.asarray(md["members"], dtype=np.intp),
            ground_truth_mode=md["stats"]["ground_truth_mode"],
            accuracy=md["stats"]["accuracy"],
            size=md["stats"]["size"],
            provenance=md["provenance"],
            prediction_distribution=dist_from(md["stats"]),
        )
        for md in doc["modes"]
    ]
