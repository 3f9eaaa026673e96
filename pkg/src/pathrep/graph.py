"""Directed road-network graph, paths, node features and their file formats.

Node ids are compacted to 0..N-1 at load time; the original ids are kept
in a remap table so graphs can be re-exported.  Paths are node sequences
that must follow directed edges and may not revisit a node.
"""

from dataclasses import dataclass, field

import numpy as np


class GraphError(Exception):
    pass


class PathError(Exception):
    pass


class TooShort(PathError):
    def __init__(self, length):
        self.length = length
        super().__init__(f"path has {length} node(s), need at least 2")


class MissingEdge(PathError):
    def __init__(self, hop, u, v):
        self.hop = hop
        self.u = u
        self.v = v
        super().__init__(f"no edge {u}->{v} at hop {hop}")


class RepeatedNode(PathError):
    def __init__(self, node):
        self.node = node
        super().__init__(f"node {node} repeated in path")


@dataclass(frozen=True)
class Graph:
    """Immutable directed graph with edge lengths in meters.

    Adjacency is stored in CSR form (``indptr``, ``neighbors``,
    ``lengths``) with each node's neighbor list sorted by node id.
    """

    n: int
    edge_u: np.ndarray
    edge_v: np.ndarray
    edge_len: np.ndarray
    indptr: np.ndarray
    neighbors: np.ndarray
    lengths: np.ndarray
    orig_ids: np.ndarray          # position i holds the original id of node i
    self_loops: frozenset = field(default_factory=frozenset)
    _edge_index: dict = field(default_factory=dict, repr=False)

    @property
    def m(self):
        return len(self.edge_u)

    def has_edge(self, u, v):
        return (u, v) in self._edge_index

    def edge_length(self, u, v):
        return self.edge_len[self._edge_index[(u, v)]]

    def out_neighbors(self, u):
        return self.neighbors[self.indptr[u]:self.indptr[u + 1]]

    def out_lengths(self, u):
        return self.lengths[self.indptr[u]:self.indptr[u + 1]]


@dataclass(frozen=True)
class Path:
    nodes: tuple

    @property
    def z(self):
        return len(self.nodes)

    @property
    def source(self):
        return self.nodes[0]

    @property
    def destination(self):
        return self.nodes[-1]

    def node_set(self):
        return frozenset(self.nodes)


def build_graph(edges, orig_ids=None):
    """Build a Graph from an iterable of (u, v, length) with compact ids."""
    edges = list(edges)
    seen = set()
    for u, v, w in edges:
        if (u, v) in seen:
            raise GraphError(f"duplicate edge ({u},{v})")
        seen.add((u, v))
        if not np.isfinite(w) or w < 0:
            raise GraphError(f"edge ({u},{v}) has invalid length {w}")
    n = 1 + max((max(u, v) for u, v, _ in edges), default=-1)
    edge_u = np.array([e[0] for e in edges], dtype=np.int64)
    edge_v = np.array([e[1] for e in edges], dtype=np.int64)
    edge_len = np.array([e[2] for e in edges], dtype=np.float64)
    order = np.lexsort((edge_v, edge_u))
    edge_u, edge_v, edge_len = edge_u[order], edge_v[order], edge_len[order]
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.add.at(indptr, edge_u + 1, 1)
    indptr = np.cumsum(indptr)
    if orig_ids is None:
        orig_ids = np.arange(n, dtype=np.int64)
    loops = frozenset(int(u) for u, v in zip(edge_u, edge_v) if u == v)
    index = {(int(u), int(v)): i for i, (u, v) in enumerate(zip(edge_u, edge_v))}
    return Graph(n=n, edge_u=edge_u, edge_v=edge_v, edge_len=edge_len,
                 indptr=indptr, neighbors=edge_v, lengths=edge_len,
                 orig_ids=np.asarray(orig_ids, dtype=np.int64),
                 self_loops=loops, _edge_index=index)


def load_graph(source):
    """Load a graph from an edge-list file: one ``u,v,length`` per line.

    Lines starting with ``#`` are comments.  Node ids are remapped to a
    dense 0..N-1 range; the remap table lands in ``Graph.orig_ids``.
    """
    if hasattr(source, "read"):
        lines = source.read().splitlines()
    else:
        with open(source, encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    raw = []
    seen = set()
    for lineno, line in enumerate(lines, start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split(",")
        if len(parts) != 3:
            raise GraphError(f"line {lineno}: expected 'u,v,length', got {line!r}")
        try:
            u, v, w = int(parts[0]), int(parts[1]), float(parts[2])
        except ValueError:
            raise GraphError(f"line {lineno}: malformed record {line!r}") from None
        if u < 0 or v < 0:
            raise GraphError(f"line {lineno}: negative node id")
        if not np.isfinite(w) or w < 0:
            raise GraphError(f"line {lineno}: invalid edge length {parts[2]}")
        if (u, v) in seen:
            raise GraphError(f"line {lineno}: duplicate edge ({u},{v})")
        seen.add((u, v))
        raw.append((u, v, w))
    ids = sorted({u for u, _, _ in raw} | {v for _, v, _ in raw})
    remap = {orig: i for i, orig in enumerate(ids)}
    edges = [(remap[u], remap[v], w) for u, v, w in raw]
    return build_graph(edges, orig_ids=np.array(ids, dtype=np.int64))


def save_graph(g, dest):
    """Export in the edge-list format using the original node ids."""
    lines = [f"{g.orig_ids[u]},{g.orig_ids[v]},{w:.9g}"
             for u, v, w in zip(g.edge_u, g.edge_v, g.edge_len)]
    text = "\n".join(lines) + "\n"
    if hasattr(dest, "write"):
        dest.write(text)
    else:
        with open(dest, "w", encoding="utf-8") as fh:
            fh.write(text)


def validate_path(g, ids):
    """Check a node sequence against the graph and return a Path."""
    ids = tuple(int(i) for i in ids)
    if len(ids) < 2:
        raise TooShort(len(ids))
    for node in ids:
        if not 0 <= node < g.n:
            raise PathError(f"unknown node {node}")
    seen = set()
    for node in ids:
        if node in seen:
            raise RepeatedNode(node)
        seen.add(node)
    for k in range(len(ids) - 1):
        if not g.has_edge(ids[k], ids[k + 1]):
            raise MissingEdge(k, ids[k], ids[k + 1])
    return Path(nodes=ids)


def initial_view(g, features, path):
    """Z x D matrix whose row k is the feature vector of the path's k-th node."""
    features = np.asarray(features, dtype=np.float64)
    if features.shape[0] != g.n:
        raise GraphError(
            f"feature table has {features.shape[0]} rows for {g.n} nodes")
    return features[list(path.nodes)]


def load_paths(source):
    """One path per line, comma-separated node ids."""
    if hasattr(source, "read"):
        lines = source.read().splitlines()
    else:
        with open(source, encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    out = []
    for line in lines:
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        out.append(tuple(int(x) for x in line.split(",")))
    return out


def save_paths(paths, dest):
    lines = [",".join(str(n) for n in p.nodes) if isinstance(p, Path)
             else ",".join(str(n) for n in p) for p in paths]
    text = "\n".join(lines) + "\n"
    if hasattr(dest, "write"):
        dest.write(text)
    else:
        with open(dest, "w", encoding="utf-8") as fh:
            fh.write(text)


def load_features(source):
    """Feature file: header ``N D`` then one row of D decimals per node."""
    if hasattr(source, "read"):
        lines = source.read().splitlines()
    else:
        with open(source, encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    lines = [ln for ln in lines if ln.strip() and not ln.startswith("#")]
    if not lines:
        raise GraphError("empty feature file")
    n, d = (int(x) for x in lines[0].split())
    if n < 1 or d < 1:
        raise GraphError(f"bad feature header N={n} D={d}")
    rows = lines[1:]
    if len(rows) != n:
        raise GraphError(f"feature file declares {n} rows, found {len(rows)}")
    table = np.array([[float(x) for x in row.split()] for row in rows])
    if table.shape != (n, d):
        raise GraphError(f"feature rows do not match header {n} {d}")
    if not np.all(np.isfinite(table)):
        raise GraphError("non-finite feature entries")
    return table


def save_features(table, dest):
    table = np.asarray(table, dtype=np.float64)
    if table.ndim != 2 or table.size == 0:
        raise GraphError("feature table must be a non-empty 2-D array")
    lines = [f"{table.shape[0]} {table.shape[1]}"]
    for row in table:
        lines.append(" ".join(f"{x:.9g}" for x in row))
    text = "\n".join(lines) + "\n"
    if hasattr(dest, "write"):
        dest.write(text)
    else:
        with open(dest, "w", encoding="utf-8") as fh:
            fh.write(text)
