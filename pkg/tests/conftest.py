import numpy as np
import pytest

from pathrep import synth
from pathrep.graph import build_graph


@pytest.fixture
def chain_graph():
    return build_graph([(0, 1, 1.0), (1, 2, 1.0)])


@pytest.fixture
def triangle_graph():
    return build_graph([(0, 1, 1.0), (1, 2, 1.0), (0, 2, 3.0)])


@pytest.fixture
def small_grid():
    cfg = synth.SynthConfig(grid_w=4, grid_h=4, n_paths=30, seed=1)
    g = synth.gen_graph(cfg)
    return g, synth.gen_paths(g, cfg), cfg


@pytest.fixture
def rand_features():
    rng = np.random.default_rng(42)
    return lambda n, d: rng.normal(size=(n, d))
