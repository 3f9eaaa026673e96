import numpy as np
import pytest

from pathrep.autodiff import Tape, grad_check
from pathrep.encoder import (
    WEIGHT_KEYS, encode, encode_on_tape, encode_primitive, init_encoder,
)


def test_init_deterministic():
    a = init_encoder(4, 3, 2, seed=7)
    b = init_encoder(4, 3, 2, seed=7)
    for k in WEIGHT_KEYS:
        assert np.array_equal(a.weights[k], b.weights[k])


def test_init_biases_zero_and_bound():
    enc = init_encoder(4, 5, 2, seed=0)
    bound = np.sqrt(1 / 5)
    for k in ("bz", "br", "bc"):
        assert np.all(enc.weights[k] == 0)
    for k in ("Wz", "Uz", "Wr", "Ur", "Wc", "Uc", "Wo"):
        assert np.abs(enc.weights[k]).max() < bound


def test_scalar_state_encoder():
    enc = init_encoder(2, 1, 1, seed=0)
    out = encode(enc, np.ones((2, 2)))
    assert out.shape == (1,)
    assert np.isfinite(out).all()


def test_output_dimension_contract():
    enc = init_encoder(3, 4, 6, seed=1)
    for z in (2, 5, 11):
        assert encode(enc, np.random.default_rng(z).normal(size=(z, 3))).shape == (6,)


def test_empty_view_rejected():
    enc = init_encoder(3, 4, 2, seed=1)
    with pytest.raises(ValueError):
        encode(enc, np.zeros((0, 3)))


def test_row_order_matters():
    rng = np.random.default_rng(3)
    enc = init_encoder(4, 4, 4, seed=3)
    iv = rng.normal(size=(2, 4))
    fwd = encode(enc, iv)
    rev = encode(enc, iv[::-1])
    assert np.abs(fwd - rev).max() > 1e-9


def test_zero_view_zero_biases_gives_zero():
    enc = init_encoder(3, 4, 2, seed=5)
    out = encode(enc, np.zeros((4, 3)))
    assert np.array_equal(out, np.zeros(2))


def test_sequence_sensitivity_over_random_draws():
    rng = np.random.default_rng(0)
    changed = 0
    for seed in range(100):
        enc = init_encoder(3, 4, 3, seed=seed)
        iv = rng.normal(size=(3, 3))
        perm = iv[[1, 2, 0]]
        if np.abs(encode(enc, iv) - encode(enc, perm)).max() > 1e-9:
            changed += 1
    assert changed >= 99


def test_fused_matches_primitive_forward_and_backward():
    rng = np.random.default_rng(9)
    enc = init_encoder(4, 3, 2, seed=9)
    iv = rng.normal(size=(5, 4))

    results = []
    for impl in (encode_on_tape, encode_primitive):
        tape = Tape()
        tensors = {k: tape.tensor(v, requires_grad=True)
                   for k, v in enc.weights.items()}
        out = impl(tensors, iv, tape)
        tape.backward(tape.sum(out))
        results.append((out.value.copy(),
                        {k: tensors[k].grad.copy() for k in WEIGHT_KEYS}))
    (va, ga), (vb, gb) = results
    assert np.abs(va - vb).max() < 1e-12
    for k in WEIGHT_KEYS:
        assert np.abs(ga[k] - gb[k]).max() < 1e-12


def test_inference_matches_tape_forward():
    rng = np.random.default_rng(4)
    enc = init_encoder(3, 5, 4, seed=4)
    iv = rng.normal(size=(6, 3))
    tape = Tape()
    tensors = {k: tape.tensor(v) for k, v in enc.weights.items()}
    assert np.array_equal(encode(enc, iv),
                          encode_on_tape(tensors, iv, tape).value[0])


def test_encoder_gradients_match_finite_differences():
    rng = np.random.default_rng(8)
    iv = rng.normal(size=(4, 3))
    enc = init_encoder(3, 3, 2, seed=8)

    def f(tensors, tape):
        p = encode_on_tape(tensors, iv, tape)
        return tape.sum(tape.mul(p, p))

    assert grad_check(f, {k: v.copy() for k, v in enc.weights.items()}) < 1e-5
