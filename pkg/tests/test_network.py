import numpy as np
import pytest

from storage_dqn import network as nw

SPEC = nw.LayerSpec()


def small(seed=0, dim=5):
    return nw.init(nw.LayerSpec((6, 5), (4,)), dim, seed)


def test_init_deterministic_and_zero_biases():
    a, b, c = nw.init(SPEC, 26, 7), nw.init(SPEC, 26, 7), nw.init(SPEC, 26, 8)
    np.testing.assert_array_equal(a.vector, b.vector)
    assert not np.array_equal(a.vector, c.vector)
    for block in a.layers.values():
        for w, bias in block:
            assert np.all(bias == 0)
            assert np.abs(w).max() <= 1 / np.sqrt(w.shape[0])
    assert a.size == 10180


def test_aggregate_examples():
    np.testing.assert_array_equal(nw.aggregate(np.array([1.0]), np.array([1.0, 1, 1])), [1, 1, 1])
    np.testing.assert_array_equal(nw.aggregate(np.array([0.0]), np.array([1.0, 2, 3])), [-1, 0, 1])


def test_advantage_shift_invariance():
    v, a = np.array([[0.3]]), np.array([[0.1, -2.0, 5.0]])
    np.testing.assert_allclose(nw.aggregate(v, a + 4.0), nw.aggregate(v, a))
    np.testing.assert_allclose(nw.aggregate(v + 4.0, a), nw.aggregate(v, a) + 4.0)


def test_forward_shapes_and_mismatch():
    p = nw.init(SPEC, 26, 0)
    assert nw.forward(p, np.zeros(26)).shape == (3,)
    assert nw.forward(p, np.zeros((4, 26))).shape == (4, 3)
    with pytest.raises(nw.ShapeError):
        nw.forward(p, np.zeros(25))


def test_loss_examples():
    p = small()
    obs = np.ones((1, 5))
    q = nw.forward(p, obs)[0]
    assert nw.loss(p, obs, [1], [q[1]]) == 0
    assert nw.loss(p, obs, [1], [q[1] + 2]) == pytest.approx(2.0)
    obs4 = np.random.default_rng(0).normal(size=(4, 5))
    targets = np.arange(4.0)
    w = np.array([0.2, 0.5, 1.0, 0.7])
    assert nw.loss(p, obs4, [0, 1, 2, 0], targets, 2 * w) == pytest.approx(
        2 * nw.loss(p, obs4, [0, 1, 2, 0], targets, w))


def test_zero_loss_zero_gradient():
    p = small()
    obs = np.random.default_rng(1).normal(size=(3, 5))
    acts = [0, 2, 1]
    targets = nw.forward(p, obs)[np.arange(3), acts]
    _, grad, _ = nw.loss_and_grad(p, obs, acts, targets)
    assert np.all(grad == 0)


def test_untaken_actions_do_not_move_advantage_rows():
    # a single-layer advantage head: column a of W is touched only through the
    # mean-centering term, which is identical for all columns
    p = nw.init(nw.LayerSpec((4,), ()), 3, 2)
    obs = np.array([[0.5, -1.0, 2.0]])
    g = nw.backward(p, obs, [1], [10.0])
    gw = g.layers["advantage"][0][0]
    np.testing.assert_allclose(gw[:, 0], gw[:, 2])
    assert not np.allclose(gw[:, 1], gw[:, 0])


def test_gradient_matches_finite_differences():
    rng = np.random.default_rng(5)
    p = small(3)
    obs = rng.normal(size=(6, 5))
    acts = rng.integers(0, 3, size=6)
    targets = rng.normal(size=6)
    weights = rng.uniform(0.1, 1, size=6)
    _, grad, _ = nw.loss_and_grad(p, obs, acts, targets, weights)
    h = 1e-5
    for i in range(p.size):
        up, down = p.vector.copy(), p.vector.copy()
        up[i] += h
        down[i] -= h
        fd = (nw.loss(p.like(up), obs, acts, targets, weights) -
              nw.loss(p.like(down), obs, acts, targets, weights)) / (2 * h)
        assert abs(fd - grad[i]) <= 1e-6 + 1e-4 * abs(fd)


def test_apply_update():
    p = small()
    g = np.ones(p.size)
    np.testing.assert_array_equal(nw.apply_update(p, g, 0.0).vector, p.vector)
    np.testing.assert_array_equal(nw.apply_update(p, g, 0.5).vector, p.vector - 0.5)
    with pytest.raises(nw.ShapeError):
        nw.apply_update(p, np.ones(3), 0.1)


def test_descent_step_reduces_loss():
    p = small(4)
    obs = np.random.default_rng(2).normal(size=(8, 5))
    acts, targets = np.zeros(8, int), np.full(8, 3.0)
    before, grad, _ = nw.loss_and_grad(p, obs, acts, targets)
    assert nw.loss(nw.apply_update(p, grad, 1e-3), obs, acts, targets) < before


def test_copy_is_independent():
    p = small()
    c = nw.copy_params(p)
    cc = nw.copy_params(c)
    x = np.ones(5)
    np.testing.assert_array_equal(nw.forward(c, x), nw.forward(p, x))
    p.vector += 1.0
    np.testing.assert_array_equal(nw.forward(c, x), nw.forward(cc, x))
    assert not np.array_equal(nw.forward(c, x), nw.forward(p, x))


def test_checkpoint_round_trip(tmp_path):
    p = nw.init(SPEC, 27, 11)
    path = nw.save(p, tmp_path / "a.ckpt")
    q = nw.load(path)
    np.testing.assert_array_equal(q.vector, p.vector)
    assert q.spec == p.spec and q.input_dim == 27
    nw.save(q, tmp_path / "b.ckpt")
    assert (tmp_path / "a.ckpt").read_bytes() == (tmp_path / "b.ckpt").read_bytes()


def test_checkpoint_rejects_garbage(tmp_path):
    path = tmp_path / "x.ckpt"
    path.write_bytes(b"not a checkpoint")
    with pytest.raises(ValueError):
        nw.load(path)
