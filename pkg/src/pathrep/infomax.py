"""Bilinear discriminators and the global/local/joint contrastive objectives.

Both objectives are BCE-style averages of log-scores.  The bilinear
matrices start at zero, which pins every score to sigma(0) = 0.5 and both
objectives to exactly -ln 2 at initialization; that identity anchors the
numeric tests.  SAFE_LOG_FLOOR guards saturated sigmoids.
"""

import numpy as np

SAFE_LOG_FLOOR = 1e-12

LN2 = float(np.log(2.0))


def init_discriminators(d, d_out, seed):
    """Parameter arrays for both discriminators.

    W_pp and W_pn are zero so all initial scores are 0.5; the view
    projection L must be non-zero or no gradient would ever reach W_pp
    through the positive pair.
    """
    rng = np.random.default_rng(seed)
    a = np.sqrt(1.0 / d_out)
    return {
        "W_pp": np.zeros((d_out, d_out)),
        "L": rng.uniform(-a, a, size=(d, d_out)),
        "W_pn": np.zeros((d_out, d)),
    }


def project_view(tensors, iv, tape):
    """Mean-pool a Z x D initial view and project it into D'."""
    pooled = tape.mean_rows(tape.tensor(np.asarray(iv, dtype=np.float64)))
    return tape.matmul(pooled, tensors["L"])


def score_path_path(tensors, p, g, tape):
    """sigma(p W_pp g^T) for two 1 x D' representations."""
    s = tape.matmul(tape.matmul(p, tensors["W_pp"]), tape.transpose(g))
    return tape.sigmoid(s)


def score_path_node(tensors, p, v, tape):
    """sigma(p W_pn v^T) for a 1 x D' representation and a 1 x D feature row."""
    s = tape.matmul(tape.matmul(p, tensors["W_pn"]), tape.transpose(v))
    return tape.sigmoid(s)


def global_mi(tensors, p, iv, neg_reprs, tape):
    """Path-path objective: positive pair (p, projected view) against the
    negatives' representations, weighted 1/(1 + #negatives)."""
    if not neg_reprs:
        raise ValueError("need at least one negative representation")
    g = project_view(tensors, iv, tape)
    total = tape.log(score_path_path(tensors, p, g, tape), floor=SAFE_LOG_FLOOR)
    for pbar in neg_reprs:
        s = score_path_path(tensors, p, pbar, tape)
        one_minus = tape.add_const(tape.scale(s, -1.0), 1.0)
        total = tape.add(total, tape.log(one_minus, floor=SAFE_LOG_FLOOR))
    return tape.scale(total, 1.0 / (1 + len(neg_reprs)))


def local_mi(tensors, p, x_feats, y_feats, tape):
    """Path-node objective over input-only (X) and negatives-only (Y)
    node features, weighted 1/|X u Y|."""
    n = len(x_feats) + len(y_feats)
    if n == 0:
        raise ValueError("need at least one node in X or Y")
    total = None
    for v in x_feats:
        term = tape.log(score_path_node(tensors, p, tape.tensor(v), tape),
                        floor=SAFE_LOG_FLOOR)
        total = term if total is None else tape.add(total, term)
    for v in y_feats:
        s = score_path_node(tensors, p, tape.tensor(v), tape)
        one_minus = tape.add_const(tape.scale(s, -1.0), 1.0)
        term = tape.log(one_minus, floor=SAFE_LOG_FLOOR)
        total = term if total is None else tape.add(total, term)
    return tape.scale(total, 1.0 / n)


def joint_objective(global_term, local_term, tape):
    """Unweighted sum of the two objectives."""
    return tape.add(global_term, local_term)
