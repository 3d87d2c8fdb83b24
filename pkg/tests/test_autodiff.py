import numpy as np
import pytest

from flowgad import autodiff as ad
from flowgad.autodiff import Tape, Tensor, gradcheck
from flowgad.errors import ContractViolation, DeterminismError, NumericFault


def test_square_gradient():
    x = Tensor(3.0, requires_grad=True)
    with Tape() as tape:
        loss = ad.mul(x, x)
        tape.backward(loss)
    assert x.grad == pytest.approx(6.0)


def test_sum_gradient_is_ones():
    for shape in [(3,), (2, 4), (1, 1), (5, 3)]:
        x = Tensor(np.random.default_rng(0).normal(size=shape),
                   requires_grad=True)
        with Tape() as tape:
            tape.backward(ad.reduce_sum(x))
        assert np.array_equal(x.grad, np.ones(shape))


def test_recon_style_loss_matches_finite_differences(rng):
    # f(W) = ||A - sigmoid(H W^T)||^2 on random 3x2 inputs
    a = rng.normal(size=(3, 3))
    h = rng.normal(size=(3, 2))
    w = Tensor(rng.normal(size=(3, 2)), requires_grad=True)

    def fn(w):
        diff = ad.sub(ad.constant(a), ad.sigmoid(ad.matmul(ad.constant(h),
                                                           ad.transpose(w))))
        return ad.reduce_sum(ad.mul(diff, diff))

    assert gradcheck(fn, [w]) < 1e-6


def _unary_cases(rng):
    def pos(shape):
        return np.abs(rng.normal(size=shape)) + 0.5
    return [
        ("exp", ad.exp, lambda s: rng.normal(size=s)),
        ("log", ad.log, pos),
        ("sqrt", ad.sqrt, pos),
        ("tanh", ad.tanh, lambda s: rng.normal(size=s)),
        ("sigmoid", ad.sigmoid, lambda s: rng.normal(size=s)),
        # keep relu/clip inputs away from their kinks
        ("relu", ad.relu, lambda s: rng.normal(size=s) + np.where(
            rng.normal(size=s) > 0, 0.5, -0.5)),
        ("transpose", ad.transpose, lambda s: rng.normal(size=s)),
        ("mean", ad.mean, lambda s: rng.normal(size=s)),
        ("reduce_sum", ad.reduce_sum, lambda s: rng.normal(size=s)),
    ]


def test_primitive_gradchecks_on_random_shapes(rng):
    shapes = [tuple(rng.integers(1, 5, size=2)) for _ in range(10)]
    for name, op, sample in _unary_cases(rng):
        for shape in shapes:
            x = Tensor(sample(shape), requires_grad=True)
            err = gradcheck(lambda x: ad.reduce_sum(op(x)), [x])
            assert err < 1e-6, f"{name} failed on {shape}: {err}"


def test_binary_primitive_gradchecks(rng):
    cases = [
        ("add", ad.add), ("sub", ad.sub), ("mul", ad.mul),
    ]
    for _ in range(10):
        shape = tuple(rng.integers(1, 5, size=2))
        for name, op in cases:
            a = Tensor(rng.normal(size=shape), requires_grad=True)
            b = Tensor(rng.normal(size=shape), requires_grad=True)
            err = gradcheck(lambda a, b: ad.reduce_sum(op(a, b)), [a, b])
            assert err < 1e-6, f"{name} failed: {err}"
        a = Tensor(rng.normal(size=shape), requires_grad=True)
        b = Tensor(rng.normal(size=shape) + np.sign(rng.normal(size=shape)) * 1.0,
                   requires_grad=True)
        err = gradcheck(lambda a, b: ad.reduce_sum(ad.div(a, b)), [a, b])
        assert err < 1e-6, f"div failed: {err}"


def test_matmul_and_structure_ops_gradchecks(rng):
    for _ in range(10):
        n, k, m = rng.integers(1, 5, size=3)
        a = Tensor(rng.normal(size=(n, k)), requires_grad=True)
        b = Tensor(rng.normal(size=(k, m)), requires_grad=True)
        err = gradcheck(lambda a, b: ad.reduce_sum(ad.matmul(a, b)), [a, b])
        assert err < 1e-6
    x = Tensor(rng.normal(size=(3, 6)), requires_grad=True)
    assert gradcheck(
        lambda x: ad.reduce_sum(ad.mul(*ad.split_half(x))), [x]) < 1e-6
    assert gradcheck(
        lambda x: ad.reduce_sum(ad.slice_cols(x, 1, 4)), [x]) < 1e-6
    u = Tensor(rng.normal(size=(3, 2)), requires_grad=True)
    v = Tensor(rng.normal(size=(3, 4)), requires_grad=True)
    assert gradcheck(
        lambda u, v: ad.reduce_sum(ad.exp(ad.concat([u, v], axis=1))),
        [u, v]) < 1e-6


def test_scalar_ops_and_clip_gradchecks(rng):
    x = Tensor(rng.normal(size=(4, 3)) * 0.3, requires_grad=True)
    assert gradcheck(lambda x: ad.reduce_sum(ad.scale(x, -2.5)), [x]) < 1e-6
    assert gradcheck(lambda x: ad.reduce_sum(ad.add_scalar(x, 1.7)), [x]) < 1e-6
    # inputs well inside the clip interval
    assert gradcheck(
        lambda x: ad.reduce_sum(ad.clip(x, -0.99, 0.99)), [x]) < 1e-6


def test_reduce_axes_gradcheck(rng):
    x = Tensor(rng.normal(size=(4, 3)), requires_grad=True)
    for axis, keep in [(0, True), (1, True), (0, False), (1, False)]:
        err = gradcheck(
            lambda x: ad.reduce_sum(ad.exp(
                ad.reduce_sum(x, axis=axis, keepdims=keep))), [x])
        assert err < 1e-6


def test_backward_linearity(rng):
    base = rng.normal(size=(3, 3))

    def run(a_coef, b_coef):
        x = Tensor(base, requires_grad=True)
        with Tape() as tape:
            f = ad.reduce_sum(ad.mul(x, x))
            g = ad.reduce_sum(ad.exp(x))
            tape.backward(ad.add(ad.scale(f, a_coef), ad.scale(g, b_coef)))
        return x.grad

    ga = run(1.0, 0.0)
    gb = run(0.0, 1.0)
    combined = run(2.5, -1.5)
    assert np.abs(combined - (2.5 * ga - 1.5 * gb)).max() < 1e-10


def test_reduce_max_ties_route_to_lowest_index():
    x = Tensor(np.array([[1.0, 3.0, 3.0], [2.0, 2.0, 0.0]]),
               requires_grad=True)
    with Tape() as tape:
        tape.backward(ad.reduce_sum(ad.reduce_max(x, axis=1)))
    assert np.array_equal(x.grad, [[0.0, 1.0, 0.0], [1.0, 0.0, 0.0]])
    y = Tensor(np.array([[5.0, 5.0], [5.0, 1.0]]), requires_grad=True)
    with Tape() as tape:
        tape.backward(ad.reduce_sum(ad.reduce_max(y, axis=0)))
    assert np.array_equal(y.grad, [[1.0, 1.0], [0.0, 0.0]])


def test_reduce_max_gradcheck_away_from_ties(rng):
    vals = rng.permutation(12).astype(np.float64).reshape(3, 4)
    x = Tensor(vals, requires_grad=True)
    assert gradcheck(
        lambda x: ad.reduce_sum(ad.reduce_max(x, axis=0)), [x]) < 1e-6


def test_nonscalar_loss_rejected():
    x = Tensor(np.ones((2, 2)), requires_grad=True)
    with Tape() as tape:
        y = ad.mul(x, x)
        with pytest.raises(ContractViolation):
            tape.backward(y)


def test_empty_tape_rejected():
    with Tape() as tape:
        pass
    with pytest.raises(ContractViolation):
        tape.backward(Tensor(1.0))


def test_tape_single_use():
    x = Tensor(2.0, requires_grad=True)
    with Tape() as tape:
        loss = ad.mul(x, x)
        tape.backward(loss)
    with pytest.raises(ContractViolation):
        tape.backward(loss)


def test_nan_fault_names_offending_op():
    x = Tensor(-1.0, requires_grad=True)
    with np.errstate(invalid="ignore"):
        with Tape() as tape:
            loss = ad.log(x)
            with pytest.raises(NumericFault, match="log"):
                tape.backward(loss)


def test_gradcheck_rejects_bad_step(rng):
    x = Tensor(rng.normal(size=(2,)), requires_grad=True)
    for step in (1e-8, 1e-2, 0.0):
        with pytest.raises(ContractViolation):
            gradcheck(lambda x: ad.reduce_sum(x), [x], step=step)


def test_gradcheck_detects_nondeterminism(rng):
    x = Tensor(np.ones(3), requires_grad=True)
    noise = iter(np.arange(100, dtype=np.float64))

    def fn(x):
        return ad.add_scalar(ad.reduce_sum(x), float(next(noise)))

    with pytest.raises(DeterminismError):
        gradcheck(fn, [x])


def test_broadcast_bias_gradient(rng):
    x = Tensor(rng.normal(size=(5, 3)), requires_grad=True)
    b = Tensor(rng.normal(size=(1, 3)), requires_grad=True)
    err = gradcheck(lambda x, b: ad.reduce_sum(ad.tanh(ad.add(x, b))), [x, b])
    assert err < 1e-6
    with Tape() as tape:
        tape.backward(ad.reduce_sum(ad.add(x, b)))
    assert b.grad.shape == (1, 3)
    assert np.array_equal(b.grad, np.full((1, 3), 5.0))


def test_forward_determinism(rng):
    data = rng.normal(size=(4, 4))

    def run():
        x = Tensor(data, requires_grad=True)
        with Tape() as tape:
            loss = ad.reduce_sum(ad.sigmoid(ad.matmul(x, ad.transpose(x))))
            tape.backward(loss)
        return loss.data.copy(), x.grad.copy()

    l1, g1 = run()
    l2, g2 = run()
    assert np.array_equal(l1, l2)
    assert np.array_equal(g1, g2)


def test_inference_path_records_nothing(rng):
    x = Tensor(rng.normal(size=(3, 3)), requires_grad=True)
    y = ad.sigmoid(ad.matmul(x, x))   # no tape active
    assert y.grad is None
    with Tape() as tape:
        z = ad.reduce_sum(ad.mul(x, x))
        tape.backward(z)
    assert x.grad is not None


def test_matmul_shape_mismatch():
    a = Tensor(np.ones((2, 3)))
    b = Tensor(np.ones((4, 2)))
    with pytest.raises(ContractViolation):
        ad.matmul(a, b)


def test_split_half_odd_width_rejected():
    with pytest.raises(ContractViolation):
        ad.split_half(Tensor(np.ones((2, 3))))
