import numpy as np
import pytest

from datamarket.core import DataSet, InvalidNoiseLevel
from datamarket.privacy import NoiseSpec, ShapeMismatch, inject_noise, utility_score
from conftest import make_dataset


def unit_data(n, seed=0, fields=1):
    rng = np.random.default_rng(seed)
    v = rng.standard_normal((n, fields))
    v = (v - v.mean(axis=0)) / v.std(axis=0)
    return DataSet(np.arange(n), v, [f"f{i}" for i in range(fields)], "c")


def test_level_zero_is_bit_identical():
    data = make_dataset(500, seed=3)
    out = inject_noise(data, NoiseSpec(0.0, 12345))
    assert out.values.tobytes() == data.values.tobytes()
    assert out == data


def test_deterministic_given_seed():
    data = make_dataset(100)
    a = inject_noise(data, NoiseSpec(0.4, 99))
    b = inject_noise(data, NoiseSpec(0.4, 99))
    c = inject_noise(data, NoiseSpec(0.4, 100))
    assert a.values.tobytes() == b.values.tobytes()
    assert a != c


def test_shape_preserved():
    data = make_dataset(50, fields=3)
    out = inject_noise(data, NoiseSpec(0.7, 1))
    assert out.count == data.count
    assert np.array_equal(out.timestamps, data.timestamps)
    assert out.field_names == data.field_names and out.category == data.category


@pytest.mark.parametrize("bad", [-0.1, 1.1])
def test_invalid_level(bad):
    with pytest.raises(InvalidNoiseLevel):
        NoiseSpec(bad, 0)


def test_monte_carlo_noise_std():
    data = unit_data(100_000)
    out = inject_noise(data, NoiseSpec(0.5, 2024))
    assert np.std(out.values - data.values) == pytest.approx(0.5, abs=0.02)


def test_constant_field_gets_no_noise():
    data = DataSet(range(10), np.ones((10, 1)), ["x"], "c")
    assert inject_noise(data, NoiseSpec(1.0, 5)) == data


def test_utility_identical_is_one():
    data = make_dataset(100)
    assert utility_score(data, data) == 1.0


def test_utility_zero_at_one_std_rmse():
    # alternate +std/-std: per-point error magnitude exactly one std, so RMSE == std
    data = unit_data(1000)
    sign = np.where(np.arange(1000) % 2 == 0, 1.0, -1.0).reshape(-1, 1)
    noisy = data.with_values(data.values + sign * data.values.std())
    assert utility_score(data, noisy) == pytest.approx(0.0, abs=1e-12)


def test_utility_quarter_noise():
    data = unit_data(50_000, seed=1)
    noisy = inject_noise(data, NoiseSpec(0.25, 7))
    assert utility_score(data, noisy) == pytest.approx(0.75, abs=0.03)


def test_utility_constant_field():
    data = DataSet(range(3), [[2.0], [2.0], [2.0]], ["x"], "c")
    assert utility_score(data, data) == 1.0
    assert utility_score(data, data.with_values(np.array([[2.0], [2.0], [2.1]]))) == 0.0


def test_utility_shape_mismatch():
    with pytest.raises(ShapeMismatch):
        utility_score(make_dataset(10), make_dataset(11))


def test_utility_bounded_and_symmetric_in_error_sign():
    data = unit_data(500)
    rng = np.random.default_rng(0)
    err = rng.normal(0, 0.3, (500, 1))
    up = utility_score(data, data.with_values(data.values + err))
    down = utility_score(data, data.with_values(data.values - err))
    assert up == pytest.approx(down, abs=1e-12)
    assert 0.0 <= up <= 1.0
    huge = utility_score(data, data.with_values(data.values + 10 * err))
    assert huge == 0.0


def test_expected_utility_decreasing_in_level():
    data = unit_data(1000, seed=11)
    seeds = range(100)
    means = [np.mean([utility_score(data, inject_noise(data, NoiseSpec(lv, s)))
                      for s in seeds])
             for lv in (0.1, 0.3, 0.6, 0.9)]
    assert all(a > b for a, b in zip(means, means[1:]))
