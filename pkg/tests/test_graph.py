import io

import numpy as np
import pytest

from pathrep.graph import (
    GraphError, MissingEdge, Path, RepeatedNode, TooShort, build_graph,
    initial_view, load_features, load_graph, load_paths, save_features,
    save_graph, save_paths, validate_path,
)


def test_load_minimal_chain():
    g = load_graph(io.StringIO("0,1,1.0\n1,2,1.0\n"))
    assert g.n == 3
    assert g.m == 2


def test_self_loop_accepted_and_flagged():
    g = load_graph(io.StringIO("0,0,1.0\n0,1,2.0\n"))
    assert g.m == 2
    assert 0 in g.self_loops


def test_id_remap_and_reexport():
    g = load_graph(io.StringIO("5,9,1.5\n9,12,2.5\n"))
    assert g.n == 3
    assert list(g.orig_ids) == [5, 9, 12]
    buf = io.StringIO()
    save_graph(g, buf)
    g2 = load_graph(io.StringIO(buf.getvalue()))
    orig_edges = {(5, 9, 1.5), (9, 12, 2.5)}
    exported = {(int(g2.orig_ids[u]), int(g2.orig_ids[v]), float(w))
                for u, v, w in zip(g2.edge_u, g2.edge_v, g2.edge_len)}
    assert exported == orig_edges


def test_load_rejects_with_line_number():
    with pytest.raises(GraphError, match="line 2"):
        load_graph(io.StringIO("0,1,1.0\n0,1,1.0\n"))
    with pytest.raises(GraphError, match="line 1"):
        load_graph(io.StringIO("0,1,-3\n"))
    with pytest.raises(GraphError, match="line 3"):
        load_graph(io.StringIO("0,1,1.0\n1,2,1.0\nnot,a,record\n"))


def test_comments_and_blank_lines_ignored():
    g = load_graph(io.StringIO("# header\n\n0,1,1.0\n"))
    assert g.m == 1


def test_validate_path_ok(chain_graph):
    p = validate_path(chain_graph, [0, 1, 2])
    assert p.z == 3
    assert p.source == 0 and p.destination == 2


def test_validate_path_missing_edge(chain_graph):
    with pytest.raises(MissingEdge) as exc:
        validate_path(chain_graph, [0, 2])
    assert exc.value.hop == 0


def test_validate_path_repeated_node():
    g = build_graph([(0, 1, 1.0), (1, 0, 1.0)])
    with pytest.raises(RepeatedNode) as exc:
        validate_path(g, [0, 1, 0])
    assert exc.value.node == 0


def test_validate_path_too_short(chain_graph):
    with pytest.raises(TooShort):
        validate_path(chain_graph, [0])


def test_validate_round_trip(chain_graph):
    p = validate_path(chain_graph, [0, 1, 2])
    assert validate_path(chain_graph, p.nodes) == p


def test_initial_view_rows(chain_graph):
    f = np.array([[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]])
    p = validate_path(chain_graph, [0, 1, 2])
    iv = initial_view(chain_graph, f, p)
    assert np.array_equal(iv, f)
    for k, node in enumerate(p.nodes):
        assert np.array_equal(iv[k], f[node])


def test_initial_view_reversed_rows():
    g = build_graph([(0, 1, 1.0), (1, 2, 1.0), (2, 1, 1.0), (1, 0, 1.0)])
    f = np.arange(6, dtype=float).reshape(3, 2)
    fwd = initial_view(g, f, validate_path(g, [0, 1, 2]))
    rev = initial_view(g, f, validate_path(g, [2, 1, 0]))
    assert np.array_equal(rev, fwd[::-1])


def test_initial_view_single_edge(chain_graph):
    f = np.ones((3, 4))
    iv = initial_view(chain_graph, f, validate_path(chain_graph, [0, 1]))
    assert iv.shape == (2, 4)


def test_initial_view_dimension_mismatch(chain_graph):
    p = validate_path(chain_graph, [0, 1])
    with pytest.raises(GraphError):
        initial_view(chain_graph, np.ones((2, 4)), p)


def test_paths_file_round_trip(chain_graph):
    paths = [Path((0, 1, 2)), Path((1, 2))]
    buf = io.StringIO()
    save_paths(paths, buf)
    assert load_paths(io.StringIO(buf.getvalue())) == [(0, 1, 2), (1, 2)]


def test_features_round_trip():
    rng = np.random.default_rng(0)
    table = rng.normal(size=(5, 3))
    buf = io.StringIO()
    save_features(table, buf)
    loaded = load_features(io.StringIO(buf.getvalue()))
    assert np.abs(loaded - table).max() < 1e-8


def test_features_row_count_mismatch():
    with pytest.raises(GraphError):
        load_features(io.StringIO("5 3\n" + "1 2 3\n" * 4))


def test_features_empty_rejected():
    with pytest.raises(GraphError):
        save_features(np.zeros((0, 3)), io.StringIO())
    with pytest.raises(GraphError):
        load_features(io.StringIO(""))
