import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from roadprop.losses import (KernelParams, LossWeights, binarize, boundary_mse, dense_filter_brute,
                             dense_filter_fast, joint_loss, partial_bce, regularized_loss, regularized_loss_grad,
                             sobel_edges)
from roadprop.raster import NON_ROAD, ROAD, UNKNOWN

P = KernelParams()


def rand_img(rng, h, w):
    return rng.integers(0, 256, (h, w, 3), dtype=np.uint8)


def kernel_matrix(img, params=P):
    h, w = img.shape[:2]
    ys, xs = np.indices((h, w))
    f = np.concatenate([img.reshape(-1, 3) / params.sigma_rgb, np.stack([xs.ravel(), ys.ravel()], 1) / params.sigma_xy], 1)
    d2 = ((f[:, None] - f[None]) ** 2).sum(-1)
    return np.exp(-d2 / 2)


def test_pbce_values():
    Y = np.array([[ROAD, NON_ROAD, UNKNOWN]], np.uint8)
    assert partial_bce(np.array([[1.0, 0.0, 0.3]]), Y) == pytest.approx(2 * -math.log(1 - 1e-7))
    assert partial_bce(np.array([[0.5]]), np.array([[ROAD]], np.uint8)) == pytest.approx(math.log(2), abs=1e-12)
    assert partial_bce(np.random.default_rng(0).random((4, 4)), np.full((4, 4), UNKNOWN, np.uint8)) == 0.0
    S = np.array([[0.2, 0.9]])
    Yb = np.array([[NON_ROAD, ROAD]], np.uint8)
    assert partial_bce(S, Yb, mean=True) == pytest.approx(partial_bce(S, Yb) / 2)


def test_pbce_shape_mismatch():
    with pytest.raises(ValueError):
        partial_bce(np.zeros((2, 2)), np.zeros((2, 3), np.uint8))


@settings(max_examples=50, deadline=None)
@given(st.floats(0.01, 0.98), st.floats(0.001, 0.01))
def test_pbce_decreases_toward_labels(s, step):
    Y = np.array([[ROAD, NON_ROAD]], np.uint8)
    far = partial_bce(np.array([[s, 1 - s]]), Y)
    near = partial_bce(np.array([[s + step, 1 - s - step]]), Y)
    assert 0 <= near < far


def test_brute_filter_matches_kernel_matrix():
    rng = np.random.default_rng(1)
    img = rand_img(rng, 6, 7)
    S = rng.random((6, 7))
    np.testing.assert_allclose(dense_filter_brute(S, img).ravel(), kernel_matrix(img) @ S.ravel(), rtol=1e-12)
    imp = np.zeros((6, 7))
    imp[2, 3] = 1
    np.testing.assert_allclose(dense_filter_brute(imp, img).ravel(), kernel_matrix(img)[2 * 7 + 3], rtol=1e-12)
    assert (dense_filter_brute(np.zeros((6, 7)), img) == 0).all()


def test_brute_filter_constant_image_is_spatial_sum():
    img = np.full((10, 12, 3), 77, np.uint8)
    ys, xs = np.indices((10, 12))
    p = np.stack([ys.ravel(), xs.ravel()], 1)
    spatial = np.exp(-((p[:, None] - p[None]) ** 2).sum(-1) / (2 * 100.0 ** 2)).sum(1)
    np.testing.assert_allclose(dense_filter_brute(np.full((10, 12), 0.3), img).ravel(), 0.3 * spatial, rtol=1e-12)


def test_fast_filter_accuracy_and_determinism():
    rng = np.random.default_rng(2)
    for _ in range(5):
        img = rand_img(rng, 32, 32)
        S = rng.random((32, 32))
        b = dense_filter_brute(S, img)
        f = dense_filter_fast(S, img)
        assert np.linalg.norm(f - b) / np.linalg.norm(b) <= 0.05
        np.testing.assert_array_equal(dense_filter_fast(S, img), f)
    assert (dense_filter_fast(np.zeros((8, 8)), rand_img(rng, 8, 8)) == 0).all()


def test_fast_filter_smooth_image_and_small_sigma():
    rng = np.random.default_rng(3)
    img = np.clip(np.indices((40, 40)).sum(0)[..., None] * 3 + rng.normal(0, 4, (40, 40, 3)), 0, 255).astype(np.uint8)
    S = rng.random((40, 40))
    for params in (P, KernelParams(8.0, 10.0)):
        b = dense_filter_brute(S, img, params)
        assert np.linalg.norm(dense_filter_fast(S, img, params) - b) / np.linalg.norm(b) <= 0.05


def test_regularized_loss_values():
    rng = np.random.default_rng(4)
    img = rand_img(rng, 16, 16)
    assert regularized_loss(np.zeros((16, 16)), img) == 0.0
    assert regularized_loss(np.ones((16, 16)), img) == 0.0
    expected = 0.25 * kernel_matrix(img).sum()
    assert regularized_loss(np.full((16, 16), 0.5), img) == pytest.approx(expected, rel=1e-12)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_regularized_loss_nonneg_and_symmetric(seed):
    rng = np.random.default_rng(seed)
    img = rand_img(rng, 6, 6)
    S = rng.random((6, 6))
    r = regularized_loss(S, img)
    assert r >= 0
    assert regularized_loss(1 - S, img) == pytest.approx(r, rel=1e-10)


def test_gradient_finite_differences():
    rng = np.random.default_rng(5)
    img = rand_img(rng, 8, 8)
    S = rng.random((8, 8))
    g = regularized_loss_grad(S, img)
    fd = np.zeros_like(S)
    for idx in np.ndindex(S.shape):
        e = np.zeros_like(S)
        e[idx] = 1e-3
        fd[idx] = (regularized_loss(S + e, img) - regularized_loss(S - e, img)) / 2e-3
    assert np.abs(g - fd).max() <= 1e-4


def test_gradient_special_points_and_paper_mode():
    rng = np.random.default_rng(6)
    img = rand_img(rng, 8, 8)
    W = kernel_matrix(img)
    assert np.abs(regularized_loss_grad(np.full((8, 8), 0.5), img)).max() < 1e-12
    np.testing.assert_allclose(regularized_loss_grad(np.zeros((8, 8)), img).ravel(), W.sum(1), rtol=1e-12)
    S = rng.random((8, 8))
    np.testing.assert_allclose(regularized_loss_grad(S, img, paper_mode=True).ravel(), -2 * W @ S.ravel(),
                               rtol=1e-12)


def test_unknown_backend():
    with pytest.raises(ValueError):
        regularized_loss(np.zeros((2, 2)), np.zeros((2, 2, 3), np.uint8), backend="gpu")


def test_boundary_mse():
    T = np.random.default_rng(7).random((5, 5))
    assert boundary_mse(T, T) == 0.0
    assert boundary_mse(np.ones((3, 3)), np.zeros((3, 3))) == 1.0
    assert boundary_mse(np.array([[1, 0], [0, 0]]), np.zeros((2, 2))) == 0.25
    with pytest.raises(ValueError):
        boundary_mse(np.zeros((2, 2)), np.zeros((3, 2)))


def test_joint_loss_arithmetic_and_linearity():
    rng = np.random.default_rng(8)
    img = rand_img(rng, 8, 8)
    S, T, B = rng.random((3, 8, 8))
    Y = rng.integers(0, 3, (8, 8)).astype(np.uint8)
    rep = joint_loss(S, Y, img, T, B)
    assert rep.total == rep.pbce + 0.5 * rep.reg + 0.7 * rep.bound
    assert joint_loss(S, Y, img, T, B, LossWeights(0, 0)).total == rep.pbce
    a = joint_loss(S, Y, img, T, B, LossWeights(1.0, 0.7)).total - joint_loss(S, Y, img, T, B, LossWeights(0.0, 0.7)).total
    b = joint_loss(S, Y, img, T, B, LossWeights(0.5, 1.0)).total - joint_loss(S, Y, img, T, B, LossWeights(0.5, 0.0)).total
    assert a == pytest.approx(rep.reg, rel=1e-12) and b == pytest.approx(rep.bound, rel=1e-12)
    assert LossWeights() == LossWeights(0.5, 0.7)
    assert 1.0 + 0.5 * 0.2 + 0.7 * 0.5 == pytest.approx(1.45)


def test_params_validation():
    for bad in [(0, 1), (1, -1)]:
        with pytest.raises(ValueError):
            KernelParams(*bad)
    with pytest.raises(ValueError):
        LossWeights(-0.1, 0.7)


def test_binarize():
    assert binarize(np.full((3, 3), 0.5)).all()
    assert not binarize(np.zeros((3, 3))).any()
    S = np.random.default_rng(9).random((6, 6))
    np.testing.assert_array_equal(binarize(S, 0.3), S >= 0.3)


def test_sobel_edges():
    assert (sobel_edges(np.full((9, 9, 3), 100, np.uint8)) == 0).all()
    img = np.zeros((12, 12, 3), np.uint8)
    img[:, 6:] = 200
    e = sobel_edges(img)
    assert e.max() == 1.0 and (e[:, 5] == 1).all() and (e[:, 6] == 1).all()
    assert (e[:, :4] == 0).all() and (e[:, 8:] == 0).all()
    rng = np.random.default_rng(10)
    r = rand_img(rng, 10, 14)
    np.testing.assert_allclose(sobel_edges(np.rot90(r)), np.rot90(sobel_edges(r)), atol=1e-12)
