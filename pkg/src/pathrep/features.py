"""Node feature vectors via biased second-order random walks + skip-gram.

All randomness is pre-drawn with a seeded numpy generator and handed to
the kernels as arrays, so the compiled and fallback paths produce
bit-identical tables.
"""

from dataclasses import dataclass

import numpy as np

from .accel import maybe_jit


@dataclass(frozen=True)
class WalkConfig:
    walks_per_node: int = 10
    walk_length: int = 20
    p: float = 1.0            # return bias
    q: float = 1.0            # in-out bias
    seed: int = 0

    def __post_init__(self):
        if self.walks_per_node < 1 or self.walk_length < 2:
            raise ValueError("need walks_per_node >= 1 and walk_length >= 2")
        if self.p <= 0 or self.q <= 0:
            raise ValueError("biases p, q must be positive")


@dataclass(frozen=True)
class SgnsConfig:
    dim: int = 32
    window: int = 5
    negatives: int = 5
    epochs: int = 3
    lr: float = 0.025
    seed: int = 0

    def __post_init__(self):
        if self.dim < 1 or self.window < 1 or self.negatives < 1:
            raise ValueError("dim, window and negatives must be >= 1")


def _contains(arr, lo, hi, x):
    """Binary search for x in arr[lo:hi] (sorted)."""
    while lo < hi:
        mid = (lo + hi) // 2
        if arr[mid] == x:
            return True
        if arr[mid] < x:
            lo = mid + 1
        else:
            hi = mid
    return False


def _walk_kernel(indptr, neighbors, starts, uniforms, p, q, out):
    n_walks, length = out.shape
    for w in range(n_walks):
        cur = starts[w]
        out[w, 0] = cur
        prev = -1
        for step in range(1, length):
            lo = indptr[cur]
            hi = indptr[cur + 1]
            deg = hi - lo
            if deg == 0:
                break
            u = uniforms[w, step - 1]
            if prev < 0:
                nxt = neighbors[lo + min(int(u * deg), deg - 1)]
            else:
                total = 0.0
                for i in range(lo, hi):
                    x = neighbors[i]
                    if x == prev:
                        total += 1.0 / p
                    elif _contains(neighbors, indptr[prev], indptr[prev + 1], x):
                        total += 1.0
                    else:
                        total += 1.0 / q
                target = u * total
                acc = 0.0
                nxt = neighbors[hi - 1]
                for i in range(lo, hi):
                    x = neighbors[i]
                    if x == prev:
                        acc += 1.0 / p
                    elif _contains(neighbors, indptr[prev], indptr[prev + 1], x):
                        acc += 1.0
                    else:
                        acc += 1.0 / q
                    if acc >= target:
                        nxt = x
                        break
            out[w, step] = nxt
            prev = cur
            cur = nxt
    return out


def _sgns_epoch(win, wout, centers, contexts, negs, lr):
    n_pairs = centers.shape[0]
    dim = win.shape[1]
    n_neg = negs.shape[1]
    for i in range(n_pairs):
        c = centers[i]
        o = contexts[i]
        grad_h = np.zeros(dim)
        # positive target
        s = 0.0
        for k in range(dim):
            s += win[c, k] * wout[o, k]
        e = lr * (1.0 / (1.0 + np.exp(-s)) - 1.0)
        for k in range(dim):
            grad_h[k] += e * wout[o, k]
            wout[o, k] -= e * win[c, k]
        # negative targets
        for j in range(n_neg):
            t = negs[i, j]
            if t == o or t == c:
                continue
            s = 0.0
            for k in range(dim):
                s += win[c, k] * wout[t, k]
            e = lr * (1.0 / (1.0 + np.exp(-s)))
            for k in range(dim):
                grad_h[k] += e * wout[t, k]
                wout[t, k] -= e * win[c, k]
        for k in range(dim):
            win[c, k] -= grad_h[k]


contains_jit = maybe_jit(_contains)
if contains_jit is not _contains:  # compiled path: kernels must call the jitted helper
    _contains = contains_jit
walk_kernel = maybe_jit(_walk_kernel)
sgns_epoch = maybe_jit(_sgns_epoch)


def generate_walks(g, cfg):
    """r biased walks per node with out-degree > 0; deterministic per seed."""
    if g.m == 0:
        raise ValueError("graph has no edges")
    starts_base = np.array([v for v in range(g.n)
                            if g.indptr[v + 1] > g.indptr[v]], dtype=np.int64)
    starts = np.repeat(starts_base, cfg.walks_per_node)
    rng = np.random.default_rng(cfg.seed)
    uniforms = rng.random((len(starts), cfg.walk_length - 1))
    out = np.full((len(starts), cfg.walk_length), -1, dtype=np.int64)
    walk_kernel(g.indptr, g.neighbors, starts, uniforms,
                float(cfg.p), float(cfg.q), out)
    walks = []
    for row in out:
        walk = row[row >= 0]
        if len(walk):
            walks.append(walk.tolist())
    return walks


def _skipgram_pairs(walks, window):
    centers, contexts = [], []
    for walk in walks:
        n = len(walk)
        for i in range(n):
            for j in range(max(0, i - window), min(n, i + window + 1)):
                if i != j:
                    centers.append(walk[i])
                    contexts.append(walk[j])
    return (np.asarray(centers, dtype=np.int64),
            np.asarray(contexts, dtype=np.int64))


def train_sgns(walks, cfg, n_nodes):
    """Skip-gram with negative sampling over the walk corpus."""
    if not walks:
        raise ValueError("walk corpus is empty")
    centers, contexts = _skipgram_pairs(walks, cfg.window)
    rng = np.random.default_rng(cfg.seed)
    win = (rng.random((n_nodes, cfg.dim)) - 0.5) / cfg.dim
    wout = np.zeros((n_nodes, cfg.dim))

    counts = np.bincount(np.concatenate([np.asarray(w) for w in walks]),
                         minlength=n_nodes).astype(np.float64)
    weights = counts ** 0.75
    if weights.sum() == 0:
        weights = np.ones(n_nodes)
    dist = weights / weights.sum()

    for _ in range(cfg.epochs):
        order = rng.permutation(len(centers))
        negs = rng.choice(n_nodes, size=(len(centers), cfg.negatives), p=dist)
        sgns_epoch(win, wout, centers[order], contexts[order],
                   negs.astype(np.int64), float(cfg.lr))
    # summing input and output embeddings puts direct co-occurrence
    # similarity (which lives in win x wout) into the returned table
    table = win + wout
    if not np.all(np.isfinite(table)):
        raise FloatingPointError("non-finite entries after skip-gram training")
    return table
