"""Curriculum negative sampling.

Negatives for an input path come from two sources: random corpus paths
(easy) and same-source/destination alternatives from a diversified
k-shortest-path stream (hard).  The final set is ordered by node overlap
with the input path so training can proceed easy-to-hard.
"""

import heapq
from dataclasses import dataclass

import numpy as np

from .graph import Path


class NoPath(Exception):
    def __init__(self, s, d):
        self.s = s
        self.d = d
        super().__init__(f"no path from {s} to {d}")


class EmptyPartition(Exception):
    pass


@dataclass(frozen=True)
class DiversityConfig:
    k: int
    tau_div: float

    def __post_init__(self):
        if not 0 <= self.tau_div < 1:
            raise ValueError(f"tau_div must be in [0,1), got {self.tau_div}")
        if self.k < 1:
            raise ValueError("k must be >= 1")


@dataclass(frozen=True)
class NegativeSet:
    input_path: Path
    negatives: tuple          # Path, ordered easy -> hard
    overlaps: tuple           # Jaccard overlap with the input, same order
    kinds: tuple              # "random" | "diversified" | "backfill"
    backfilled: bool = False

    @property
    def k(self):
        return len(self.negatives)


def shortest_path_stream(g, s, d, max_pops=2_000_000):
    """Yield loopless s->d paths in increasing (length, node-sequence) order.

    Best-first enumeration over partial paths.  Keys popped from the heap
    are monotonically non-decreasing, so yields come out sorted exactly
    like a brute-force enumeration sorted by total length with ties broken
    lexicographically on the node sequence.
    """
    if s == d:
        raise ValueError("source equals destination")
    heap = [(0.0, (s,))]
    pops = 0
    while heap:
        length, nodes = heapq.heappop(heap)
        pops += 1
        if pops > max_pops:
            return
        last = nodes[-1]
        if last == d:
            yield Path(nodes=nodes), length
            continue
        in_path = set(nodes)
        for v, w in zip(g.out_neighbors(last), g.out_lengths(last)):
            if int(v) not in in_path:
                heapq.heappush(heap, (length + float(w), nodes + (int(v),)))


def k_shortest_paths(g, s, d, k):
    """Top-k loopless shortest paths, shortest first."""
    out = []
    for path, _ in shortest_path_stream(g, s, d):
        out.append(path)
        if len(out) == k:
            break
    if not out:
        raise NoPath(s, d)
    return out


def path_similarity(a, b):
    """Jaccard similarity over interior node sets (source/destination excluded).

    Endpoints are dropped because same-OD alternatives share them by
    construction; two internally disjoint alternatives score 0.
    """
    sa = set(a.nodes[1:-1])
    sb = set(b.nodes[1:-1])
    union = sa | sb
    if not union:
        return 1.0 if a.nodes == b.nodes else 0.0
    return len(sa & sb) / len(union)


def diversified_top_k(g, s, d, cfg, max_candidates=5000):
    """Greedy diversity filter over the shortest-path stream.

    Accept a candidate iff its similarity to every already-accepted path
    is <= tau_div; stop at k accepted or when the stream dries up.
    Returns (paths, complete) where complete is False if fewer than k
    paths were accepted.
    """
    accepted = []
    seen_any = False
    for i, (path, _) in enumerate(shortest_path_stream(g, s, d)):
        seen_any = True
        if all(path_similarity(path, p) <= cfg.tau_div for p in accepted):
            accepted.append(path)
            if len(accepted) == cfg.k:
                return accepted, True
        if i + 1 >= max_candidates:
            break
    if not seen_any:
        raise NoPath(s, d)
    return accepted, False


def input_overlap(input_path, other):
    return path_similarity(input_path, other)


def sample_negatives(input_path, corpus, g, seed, k=4, taus=(0.6, 0.9),
                     max_candidates=2000):
    """Build the negative set for one input path.

    With the default k=4: two random corpus paths plus one same-OD path
    per diversity threshold; the result is sorted by overlap with the
    input (non-decreasing).  Missing diversified candidates are backfilled
    with extra random paths and the set is flagged.

    For k != 4 the split keeps the same half/half spirit: ceil(k/2) random
    negatives, the rest diversified using ``taus`` cyclically.
    """
    rng = np.random.default_rng(seed)
    pool = [p for p in corpus if p.nodes != input_path.nodes]
    if len(pool) < 2:
        raise ValueError("corpus must contain at least 2 paths besides the input")

    n_random = (k + 1) // 2 if k > 1 else 1
    n_div = k - n_random

    idx = rng.choice(len(pool), size=min(n_random, len(pool)), replace=False)
    chosen = [(pool[i], "random") for i in sorted(int(j) for j in idx)]

    backfilled = False
    div_paths = []
    for j in range(n_div):
        tau = taus[j % len(taus)]
        try:
            cands, _ = diversified_top_k(
                g, input_path.source, input_path.destination,
                DiversityConfig(k=4, tau_div=tau), max_candidates=max_candidates)
        except NoPath:
            cands = []
        pick = None
        taken = {p.nodes for p, _ in div_paths}
        for c in cands:
            if c.nodes != input_path.nodes and c.nodes not in taken:
                pick = c
                break
        if pick is None:
            backfilled = True
        else:
            div_paths.append((pick, "diversified"))
    chosen.extend(div_paths)

    while len(chosen) < k:
        taken = {p.nodes for p, _ in chosen}
        avail = [p for p in pool if p.nodes not in taken]
        if not avail:
            break
        chosen.append((avail[int(rng.integers(len(avail)))], "backfill"))
        backfilled = True

    annotated = [(input_overlap(input_path, p), p, kind) for p, kind in chosen]
    annotated.sort(key=lambda t: t[0])
    return NegativeSet(
        input_path=input_path,
        negatives=tuple(p for _, p, _ in annotated),
        overlaps=tuple(ov for ov, _, _ in annotated),
        kinds=tuple(kind for _, _, kind in annotated),
        backfilled=backfilled,
    )


def sample_negatives_random(input_path, corpus, seed, k=4):
    """Ablation strategy: all k negatives drawn uniformly from the corpus."""
    rng = np.random.default_rng(seed)
    pool = [p for p in corpus if p.nodes != input_path.nodes]
    idx = rng.choice(len(pool), size=min(k, len(pool)), replace=False)
    negs = [pool[int(i)] for i in idx]
    annotated = sorted(((input_overlap(input_path, p), p) for p in negs),
                       key=lambda t: t[0])
    return NegativeSet(
        input_path=input_path,
        negatives=tuple(p for _, p in annotated),
        overlaps=tuple(ov for ov, _ in annotated),
        kinds=tuple("random" for _ in annotated),
        backfilled=len(annotated) < k,
    )


def sample_negatives_topk(input_path, corpus, g, seed, k=4, tau=0.9,
                          max_candidates=2000):
    """Ablation strategy: all k negatives from the diversified same-OD stream."""
    rng = np.random.default_rng(seed)
    try:
        cands, _ = diversified_top_k(
            g, input_path.source, input_path.destination,
            DiversityConfig(k=k + 1, tau_div=tau), max_candidates=max_candidates)
    except NoPath:
        cands = []
    negs = [(c, "diversified") for c in cands if c.nodes != input_path.nodes][:k]
    backfilled = len(negs) < k
    pool = [p for p in corpus if p.nodes != input_path.nodes]
    while len(negs) < k and pool:
        taken = {p.nodes for p, _ in negs}
        avail = [p for p in pool if p.nodes not in taken]
        if not avail:
            break
        negs.append((avail[int(rng.integers(len(avail)))], "backfill"))
    annotated = sorted(((input_overlap(input_path, p), p, kind)
                        for p, kind in negs), key=lambda t: t[0])
    return NegativeSet(
        input_path=input_path,
        negatives=tuple(p for _, p, _ in annotated),
        overlaps=tuple(ov for ov, _, _ in annotated),
        kinds=tuple(kind for _, _, kind in annotated),
        backfilled=backfilled,
    )


def curriculum_schedule(stage, ns, staged=True):
    """Active negatives at a curriculum stage (easiest first).

    Staged mode exposes the first min(stage, K) negatives; all-at-once
    mode (the ablation switch) always exposes all K.
    """
    if stage < 1:
        raise ValueError("stage must be >= 1")
    if not staged:
        return ns.negatives
    return ns.negatives[:min(stage, ns.k)]


def node_partition(input_path, active):
    """Split nodes into input-only (X) and negatives-only (Y) sets."""
    active = list(active)
    if not active:
        raise ValueError("need at least one active negative")
    neg_nodes = set()
    for p in active:
        neg_nodes.update(p.nodes)
    x = frozenset(input_path.nodes) - neg_nodes
    y = frozenset(neg_nodes) - set(input_path.nodes)
    if not x and not y:
        raise EmptyPartition(
            "input nodes equal the union of negative nodes")
    return x, y
