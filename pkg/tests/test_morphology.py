import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays
from scipy import ndimage

from roadprop.morphology import cross_kernel, erode, neighbor_count, simulate_scribbles, skeletonize, trace_curves
from roadprop.scribble import rasterize
from synthetic import road_surfaces, thinness_violations


def brute_erode(mask, kernel, anchor):
    ax, ay = anchor
    h, w = mask.shape
    out = np.zeros_like(mask)
    cells = [(ky - ay, kx - ax) for ky, kx in zip(*np.nonzero(kernel))]
    for y in range(h):
        for x in range(w):
            out[y, x] = all(0 <= y + dy < h and 0 <= x + dx < w and mask[y + dy, x + dx] for dy, dx in cells)
    return out


def test_cross_kernel_shape():
    k = cross_kernel(7)
    assert k.sum() == 13 and k[3].all() and k[:, 3].all()


def test_erode_full_mask_border():
    out = erode(np.ones((6, 6), bool), cross_kernel(3), (1, 1))
    assert out[1:-1, 1:-1].all() and not out[0].any() and not out[-1].any()
    assert not out[:, 0].any() and not out[:, -1].any()


def test_erode_empty_and_bad_anchor():
    assert not erode(np.zeros((5, 5), bool), cross_kernel(3)).any()
    with pytest.raises(ValueError):
        erode(np.ones((5, 5), bool), cross_kernel(7), (7, 0))


def test_erode_band_centered_anchor():
    mask = np.zeros((40, 30), bool)
    mask[10:30] = True
    out = erode(mask, cross_kernel(7), (3, 3))
    rows = np.nonzero(out.any(1))[0]
    assert (rows.min(), rows.max()) == (13, 26) and len(rows) == 14
    assert out[13:27, 3:27].all() and not out[13:27, :3].any()


def test_erode_offset_anchor_shifts_band():
    mask = np.zeros((40, 30), bool)
    mask[10:30] = True
    out = erode(mask, cross_kernel(7), (3, 6))
    rows = np.nonzero(out.any(1))[0]
    # the vertical arm reaches 6 px up and none down
    assert (rows.min(), rows.max()) == (16, 29)


def test_erode_matches_brute_force():
    rng = np.random.default_rng(0)
    for anchor in [(3, 3), (3, 6), (0, 0)]:
        mask = ndimage.binary_dilation(rng.random((20, 20)) < 0.2, iterations=2)
        np.testing.assert_array_equal(erode(mask, cross_kernel(7), anchor),
                                      brute_erode(mask, cross_kernel(7), anchor))


def test_skeleton_empty_and_thin_line():
    assert not skeletonize(np.zeros((10, 10), bool)).any()
    m = np.zeros((10, 20), bool)
    m[4, 2:18] = True
    np.testing.assert_array_equal(skeletonize(m), m)
    d = np.eye(12, dtype=bool)
    np.testing.assert_array_equal(skeletonize(d), d)


def test_skeleton_horizontal_band():
    m = np.zeros((21, 64), bool)
    m[8:13] = True
    sk = skeletonize(m)
    rows = np.nonzero(sk.any(1))[0]
    assert rows.min() >= 9 and rows.max() <= 11
    assert ndimage.label(sk, np.ones((3, 3)))[1] == 1
    assert (neighbor_count(sk)[sk] <= 2).all()


def test_skeleton_keeps_small_blob():
    m = np.zeros((6, 6), bool)
    m[2:4, 2:4] = True
    assert skeletonize(m).sum() == 1


def _components(m):
    return ndimage.label(m, np.ones((3, 3)))[1]


@settings(max_examples=40, deadline=None)
@given(arrays(bool, st.tuples(st.integers(3, 24), st.integers(3, 24))))
def test_skeleton_properties(mask):
    mask = ndimage.binary_closing(mask)
    sk = skeletonize(mask)
    assert not (sk & ~mask).any()
    np.testing.assert_array_equal(skeletonize(sk), sk)
    # each input component keeps exactly one skeleton component
    lab, n = ndimage.label(mask, np.ones((3, 3)))
    for i in range(1, n + 1):
        assert _components(sk & (lab == i)) == 1


def test_trace_curves_line():
    m = np.zeros((9, 9), bool)
    m[4, 1:8] = True
    curves = trace_curves(m)
    assert len(curves) == 1 and curves[0][0] == (1, 4) and curves[0][-1] == (7, 4)


def _check_chains(m, curves):
    assert {p for c in curves for p in c} == {(x, y) for y, x in zip(*np.nonzero(m))}
    for c in curves:
        steps = np.abs(np.diff(np.array(c), axis=0))
        assert len(c) == 1 or (steps.max(1) == 1).all()


def test_trace_curves_junction_splits_branches():
    m = np.zeros((11, 11), bool)
    m[5, 0:11] = True
    m[0:5, 5] = True
    m = skeletonize(m)
    curves = trace_curves(m)
    _check_chains(m, curves)
    assert len(curves) >= 3
    ends = {c[0] for c in curves} | {c[-1] for c in curves}
    assert {(0, 5), (10, 5), (5, 0)} <= ends


def test_trace_curves_loop():
    m = np.zeros((9, 9), bool)
    for i in range(4):
        m[4 - i, i] = m[4 + i, i] = m[4 - i, 8 - i] = m[4 + i, 8 - i] = True
    m[0, 4] = m[8, 4] = True
    curves = trace_curves(m)
    assert len(curves) == 1 and curves[0][0] == curves[0][-1]
    _check_chains(m, curves)


def test_thinness_helper_flags_thick_curves():
    m = np.zeros((10, 20), bool)
    m[4:6, 2:18] = True
    assert thinness_violations(m) > 0
    m[5] = False
    assert thinness_violations(m) == 0


def test_simulate_empty_and_small_blob():
    assert len(simulate_scribbles(np.zeros((20, 20), bool))) == 0
    m = np.zeros((20, 20), bool)
    m[5:8, 5:8] = True
    assert len(simulate_scribbles(m)) == 0


def test_simulate_straight_road():
    m = np.zeros((64, 80), bool)
    m[20:40] = True
    s = simulate_scribbles(m)
    assert len(s) == 1
    r = rasterize(s, 80, 64)
    assert r.any() and not (r & ~m).any()


def test_simulate_subset_on_networks():
    for seed in range(4):
        surface = road_surfaces(seed)
        r = rasterize(simulate_scribbles(surface), *surface.shape[::-1])
        assert r.any() and not (r & ~surface).any()
        assert thinness_violations(r) == 0
