import numpy as np
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from roadprop.distance import NO_SEED_DISTANCE, distance_transform, squared_distance_transform


def brute_sq(seeds):
    pts = np.argwhere(seeds)
    ys, xs = np.indices(seeds.shape)
    if len(pts) == 0:
        return np.full(seeds.shape, np.inf)
    d = (ys[..., None] - pts[:, 0]) ** 2 + (xs[..., None] - pts[:, 1]) ** 2
    return d.min(-1).astype(np.float64)


def test_single_seed_pythagorean():
    seeds = np.zeros((6, 6), bool)
    seeds[0, 0] = True
    assert distance_transform(seeds)[4, 3] == 5.0


def test_all_seeds_zero_and_no_seeds_sentinel():
    assert (distance_transform(np.ones((5, 7), bool)) == 0).all()
    d = distance_transform(np.zeros((5, 7), bool))
    assert np.isfinite(d).all() and (d == NO_SEED_DISTANCE).all()


def test_random_masks_match_brute_force_exactly():
    rng = np.random.default_rng(0)
    for density in (0.002, 0.01, 0.05, 0.3):
        for _ in range(5):
            seeds = rng.random((32, 32)) < density
            seeds[rng.integers(32), rng.integers(32)] = True
            np.testing.assert_array_equal(squared_distance_transform(seeds), brute_sq(seeds))


@settings(max_examples=60, deadline=None)
@given(arrays(bool, st.tuples(st.integers(1, 20), st.integers(1, 20))))
def test_property_exact_and_zero_on_seeds(seeds):
    sq = squared_distance_transform(seeds)
    if seeds.any():
        np.testing.assert_array_equal(sq, brute_sq(seeds))
        d = distance_transform(seeds)
        assert (d[seeds] == 0).all() and (d >= 0).all()
