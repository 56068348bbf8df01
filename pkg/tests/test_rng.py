import numpy as np

from mflab.rng import categorical_field, normal_field, uniform_field


def test_fields_are_reproducible():
    a = normal_field(123, 1, 7, 1000)
    b = normal_field(123, 1, 7, 1000)
    assert np.array_equal(a, b)


def test_element_depends_only_on_index():
    # drawing a longer vector must not change earlier entries
    short = normal_field(9, 1, 3, 100)
    long = normal_field(9, 1, 3, 10_000)
    assert np.array_equal(short, long[:100])
    u_short = uniform_field(9, 2, 3, 100)
    u_long = uniform_field(9, 2, 3, 5000)
    assert np.array_equal(u_short, u_long[:100])


def test_streams_and_steps_are_independent():
    base = normal_field(5, 1, 0, 64)
    assert not np.array_equal(base, normal_field(5, 2, 0, 64))
    assert not np.array_equal(base, normal_field(5, 1, 1, 64))
    assert not np.array_equal(base, normal_field(6, 1, 0, 64))


def test_normal_field_moments():
    z = normal_field(2024, 1, 0, 200_000)
    assert abs(z.mean()) < 4 / np.sqrt(len(z))
    assert abs(z.std() - 1.0) < 0.01
    assert np.isfinite(z).all()


def test_uniform_field_range():
    u = uniform_field(7, 1, 0, 100_000)
    assert (u >= 0).all() and (u < 1).all()
    assert abs(u.mean() - 0.5) < 0.005


def test_categorical_field_weights():
    w = np.array([0.2, 0.3, 0.5])
    idx = categorical_field(11, 3, 0, 100_000, w)
    counts = np.bincount(idx, minlength=3) / len(idx)
    assert np.allclose(counts, w, atol=0.01)


def test_seed_range_validation():
    import pytest

    with pytest.raises(ValueError):
        normal_field(-1, 1, 0, 10)
    with pytest.raises(ValueError):
        normal_field(1 << 64, 1, 0, 10)
