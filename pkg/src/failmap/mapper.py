"""Overlapping interval covers, pullback cells, per-cell clustering, nerve graph.

The graph construction: each filter's range [a, b] is covered by N closed
intervals of equal length stretched by an overlap proportion p; the product
of interval choices pulls the cover back to (possibly overlapping) cells of
rows; each cell is split by single-linkage clustering with a
histogram-of-merge-distances cutoff; clusters become graph nodes and two
nodes are joined exactly when they share a row.
"""

from __future__ import annotations

import itertools
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.cluster.hierarchy import linkage
from scipy.spatial.distance import pdist

from .dataset import Dataset, MetricSpec, metric_embedding
from .errors import CellTooLargeError, ConfigError
from .filters import FilterSpec, FilterValues, compute_filters

DEFAULT_BINS = 10
DEFAULT_MAX_CELL_SIZE = 20_000


@dataclass(frozen=True)
class CoverSpec:
    """Resolution and overlap for one filter's interval cover."""

    n_intervals: int
    overlap: float

    def __post_init__(self):
        if self.n_intervals < 1:
            raise ConfigError(f"n_intervals must be >= 1, got {self.n_intervals}")
        if not 0.0 < self.overlap < 1.0:
            raise ConfigError(f"overlap must satisfy 0 < p < 1, got {self.overlap}")


@dataclass(frozen=True)
class Interval:
    """One closed cover interval [lo, hi]; index s runs from 1."""

    lo: float
    hi: float
    index: int

    def contains(self, value: float) -> bool:
        return self.lo <= value <= self.hi


def build_cover(value_range: tuple[float, float], spec: CoverSpec) -> list[Interval]:
    """Cover [a, b] with N closed intervals of length (1+p)*(b-a)/N.

    Interval s (1-based) is [a + (s-1-p/2)*step, a + (s+p/2)*step] with
    step = (b-a)/N, so consecutive intervals overlap in a segment of length
    p*step and the union contains [a, b].  A degenerate range (a == b)
    collapses to the single interval [a, a].
    """
    a, b = value_range
    if b < a:
        raise ConfigError(f"invalid range ({a}, {b})")
    if b == a:
        return [Interval(lo=a, hi=a, index=1)]
    n, p = spec.n_intervals, spec.overlap
    step = (b - a) / n
    return [
        Interval(lo=a + (s - 1 - p / 2) * step, hi=a + (s + p / 2) * step, index=s)
        for s in range(1, n + 1)
    ]


@dataclass(frozen=True)
class Cell:
    """A nonempty pullback cell: the rows whose filter values land in the
    chosen interval of every filter."""

    address: tuple[int, ...]
    members: np.ndarray


def pullback_cells(
    filters: list[FilterValues], covers: list[list[Interval]]
) -> list[Cell]:
    """Intersect interval preimages across filters; drop empty cells.

    Membership uses the closed endpoints as stored on each Interval, so a
    boundary value belongs to both overlapping intervals.  Cells come out in
    lexicographic address order.
    """
    if len(filters) != len(covers):
        raise ConfigError(f"{len(filters)} filters but {len(covers)} covers")
    if not filters:
        raise ConfigError("at least one filter is required")
    masks = []
    for fv, intervals in zip(filters, covers):
        vals = fv.values
        masks.append([(iv.lo <= vals) & (vals <= iv.hi) for iv in intervals])

    cells = []
    for combo in itertools.product(*[range(len(c)) for c in covers]):
        mask = masks[0][combo[0]]
        for axis in range(1, len(combo)):
            mask = mask & masks[axis][combo[axis]]
        members = np.flatnonzero(mask)
        if members.size:
            address = tuple(covers[axis][i].index for axis, i in enumerate(combo))
            cells.append(Cell(address=address, members=members))
    return cells


def histogram_cutoff(merge_distances, bins: int):
    """Cutoff heuristic: left edge of the first empty histogram bin.

    The merge distances are binned over [0, max] into `bins` equal bins with
    bin index min(floor((v * bins) / max), bins - 1).  Scanning left to
    right, the first empty bin that follows a nonempty one marks the gap
    between within-cluster and between-cluster merge scales; its left edge
    (b * max / bins) is the cutoff.  Returns None when there is no such gap
    (every bin full, all merges at one scale, or no merges at all).
    """
    if bins < 1:
        raise ConfigError(f"bins must be >= 1, got {bins}")
    dists = np.asarray(merge_distances, dtype=np.float64)
    if dists.size == 0:
        return None
    dmax = float(dists.max())
    if dmax <= 0.0:
        return None
    idx = np.minimum(((dists * bins) / dmax).astype(np.int64), bins - 1)
    counts = np.bincount(idx, minlength=bins)
    seen_mass = False
    for b in range(bins):
        if counts[b] > 0:
            seen_mass = True
        elif seen_mass:
            return (b * dmax) / bins
    return None


def single_linkage(
    members,
    d: Dataset,
    m: MetricSpec,
    bins: int = DEFAULT_BINS,
    max_cell_size: int = DEFAULT_MAX_CELL_SIZE,
    embedding: np.ndarray | None = None,
) -> list[np.ndarray]:
    """Split one cell's rows into clusters.

    Runs single linkage over the cell's pairwise distances, picks a cutoff
    with `histogram_cutoff` on the merge distances, and returns the connected
    components of the graph joining pairs at distance strictly below the
    cutoff.  No cutoff (no gap in the histogram) keeps the whole cell as one
    cluster.  `embedding` may pass a precomputed metric_embedding(d, m) so
    repeated per-cell calls skip the rescaling.
    """
    members = np.asarray(list(members), dtype=np.intp)
    if members.size == 0:
        raise ConfigError("cannot cluster an empty member set")
    if members.size > max_cell_size:
        raise CellTooLargeError(
            f"cell of size {members.size} exceeds the limit {max_cell_size}; "
            "raise max_cell_size or use a finer cover"
        )
    if members.size == 1:
        return [members.copy()]

    if embedding is None:
        embedding = metric_embedding(d, m)
    emb = embedding[members]
    n = members.size
    condensed = pdist(emb, metric="euclidean")
    z = linkage(condensed, method="single")
    heights = z[:, 2]

    cutoff = histogram_cutoff(heights, bins)
    if cutoff is None:
        return [members.copy()]

    clusters = [
        members[np.asarray(g, dtype=np.intp)] for g in cut_components(z, n, cutoff)
    ]
    clusters.sort(key=lambda c: int(c.min()))
    return clusters


def cut_components(z, n: int, cutoff: float) -> list[list[int]]:
    """Leaf groups connected by merges at height strictly below the cutoff.

    For single linkage these equal the connected components of the graph
    joining pairs at distance < cutoff.  Replays the merge sequence through
    the dendrogram labels: leaf i is i, the merge in row r creates node n+r.
    """
    parent = list(range(2 * n - 1))

    def find(x):
        root = x
        while parent[root] != root:
            root = parent[root]
        while parent[x] != root:
            parent[x], x = root, parent[x]
        return root

    for r in range(n - 1):
        if z[r, 2] < cutoff:
            parent[find(int(z[r, 0]))] = find(int(z[r, 1]))
            parent[n + r] = find(int(z[r, 1]))
        else:
            parent[n + r] = n + r

    groups = {}
    for leaf in range(n):
        groups.setdefault(find(leaf), []).append(leaf)
    return list(groups.values())


@dataclass(frozen=True)
class MapperNode:
    """One cluster: cell address plus a 1-based cluster index within the cell."""

    id: int
    address: tuple[int, ...]
    cluster: int
    members: np.ndarray
    stats: dict


@dataclass(frozen=True)
class MapperGraph:
    nodes: list[MapperNode]
    edges: list[tuple[int, int, int]]  # (node id, node id, shared member count)
    row_count: int
    filter_names: list[str] = field(default_factory=list)

    def node_by_id(self, node_id: int) -> MapperNode:
        if not 0 <= node_id < len(self.nodes):
            raise KeyError(node_id)
        return self.nodes[node_id]  # ids are positional by construction

    def covered_rows(self) -> int:
        seen = np.zeros(self.row_count, dtype=bool)
        for node in self.nodes:
            seen[node.members] = True
        return int(seen.sum())


def _node_stats(members: np.ndarray, d: Dataset) -> dict:
    stats = {"size": int(members.size), "mean": {}}
    for name in d.meta.field_names():
        col = d.meta.column(name)
        stats["mean"][name] = float(col[members].mean())
    return stats


def nerve(clusters: list[tuple[tuple[int, ...], int, np.ndarray]], d: Dataset) -> MapperGraph:
    """Assemble nodes from addressed clusters and join those sharing rows.

    `clusters` is a list of (cell address, cluster index, member rows); node
    ids are assigned in the given order.  An edge (u, v, c) exists exactly
    when nodes u and v share c > 0 member rows.
    """
    nodes = [
        MapperNode(
            id=i,
            address=address,
            cluster=j,
            members=members,
            stats=_node_stats(members, d),
        )
        for i, (address, j, members) in enumerate(clusters)
    ]

    incidence: dict[int, list[int]] = {}
    for node in nodes:
        for row in node.members.tolist():
            incidence.setdefault(row, []).append(node.id)
    shared: dict[tuple[int, int], int] = {}
    for node_ids in incidence.values():
        if len(node_ids) > 1:
            for u, v in itertools.combinations(node_ids, 2):
                key = (u, v) if u < v else (v, u)
                shared[key] = shared.get(key, 0) + 1
    edges = [(u, v, c) for (u, v), c in sorted(shared.items())]
    return MapperGraph(
        nodes=nodes,
        edges=edges,
        row_count=d.row_count,
    )


def build_mapper(
    d: Dataset,
    m: MetricSpec,
    specs: list[FilterSpec],
    covers: list[CoverSpec],
    bins: int = DEFAULT_BINS,
    max_cell_size: int = DEFAULT_MAX_CELL_SIZE,
    workers: int = 1,
) -> MapperGraph:
    """Run the full graph construction: filters, cover, cells, clusters, nerve.

    Deterministic for fixed inputs: node ids follow lexicographic (cell
    address, cluster index) order regardless of `workers`, and cluster
    indices within a cell order clusters by their smallest member row.
    """
    if not specs:
        raise ConfigError("at least one filter is required")
    if len(specs) != len(covers):
        raise ConfigError(f"{len(specs)} filters but {len(covers)} cover specs")

    filter_values = compute_filters(d, specs)
    interval_covers = [
        build_cover(fv.range, cover) for fv, cover in zip(filter_values, covers)
    ]
    cells = pullback_cells(filter_values, interval_covers)
    embedding = metric_embedding(d, m)

    def cluster_cell(cell: Cell):
        return single_linkage(
            cell.members, d, m, bins=bins, max_cell_size=max_cell_size, embedding=embedding
        )

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            per_cell = list(pool.map(cluster_cell, cells))
    else:
        per_cell = [cluster_cell(cell) for cell in cells]

    addressed = []
    for cell, clusters in zip(cells, per_cell):
        for j, cluster in enumerate(clusters, start=1):
            addressed.append((cell.address, j, cluster))
    # pullback_cells yields addresses lexicographically; keep that order
    graph = nerve(addressed, d)
    return MapperGraph(
        nodes=graph.nodes,
        edges=graph.edges,
        row_count=graph.row_count,
        filter_names=[fv.name for fv in filter_values],
    )


def graph_to_dict(graph: MapperGraph, config: dict | None = None) -> dict:
    """JSON-ready document for persistence and the serving API."""
    doc = {
        "schema": "mapper-graph/1",
        "row_count": graph.row_count,
        "filter_names": list(graph.filter_names),
        "nodes": [
            {
                "id": n.id,
                "address": {"cell": list(n.address), "cluster": n.cluster},
                "members": [int(r) for r in n.members],
                "stats": n.stats,
            }
            for n in graph.nodes
        ],
        "edges": [
            {"source": u, "target": v, "shared_count": c} for u, v, c in graph.edges
        ],
    }
    if config is not None:
        doc["config"] = config
    return doc


def graph_from_dict(doc: dict) -> MapperGraph:
    nodes = [
        MapperNode(
            id=nd["id"],
            address=tuple(nd["address"]["cell"]),
            cluster=nd["address"]["cluster"],
            members=np.asarray(nd["members"], dtype=np.intp),
            stats=nd["stats"],
        )
        for nd in doc["nodes"]
    ]
    edges = [(e["source"], e["target"], e["shared_count"]) for e in doc["edges"]]
    return MapperGraph(
        nodes=nodes,
        edges=edges,
        row_count=doc["row_count"],
        filter_names=list(doc.get("filter_names", [])),
    )
