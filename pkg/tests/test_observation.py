import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import stats

from radialqd.observation import ObservationFrame, ObservationModel, QuantizedModel, sample_frame


def test_flat_llr_matches_scipy():
    m = ObservationModel("flat", 1.5, 2.0)
    x = np.linspace(-3, 3, 7)
    ref = stats.norm.logpdf(x, scale=math.sqrt(3.5)) - stats.norm.logpdf(x, scale=math.sqrt(1.5))
    np.testing.assert_allclose(m.llr(x), ref, atol=1e-12)


@pytest.mark.parametrize("clamp,d,expected", [
    ("unit-floor", 0.3, 1.0), ("unit-floor", 4.0, 4.0),
    ("reference-scaled", 200.0, 1.0), ("reference-scaled", 1500.0, 3.0),
    ("literal", 200.0, 500.0), ("literal", 1e6, 2000.0),
])
def test_effective_distance(clamp, d, expected):
    m = ObservationModel("attenuating", 1.0, 2.0, 2.0, 500.0 if clamp != "unit-floor" else 1.0, clamp)
    assert float(m.effective_distance(d)) == pytest.approx(expected)


def test_attenuating_variance():
    m = ObservationModel("attenuating", 1.0, 2.0, 2.0, 500.0, "reference-scaled")
    assert float(m.alt_variance(1000.0)) == pytest.approx(1 + 2 / 4)
    assert float(m.alt_variance(10.0)) == pytest.approx(3.0)


@given(st.floats(0.0, 50.0), st.floats(-5, 5))
def test_llr_vanishes_without_signal(d, x):
    m = ObservationModel("attenuating", 1.0, 0.0)
    assert float(m.llr(x, d)) == pytest.approx(0.0, abs=1e-12)


def test_sampled_variances(rng):
    m = ObservationModel("attenuating", 1.0, 3.0)
    d = np.full(40000, 0.5)
    ex = np.arange(40000) % 2 == 0
    x = m.sample(d, ex, rng)
    assert abs(x[ex].var() - 4.0) < 0.15
    assert abs(x[~ex].var() - 1.0) < 0.05


def test_invalid_model():
    with pytest.raises(ValueError):
        ObservationModel("wavy")
    with pytest.raises(ValueError):
        ObservationModel("flat", sigma2=0.0)
    with pytest.raises(ValueError):
        ObservationModel("attenuating", clamp="other")


def test_quantized_model(rng):
    q = QuantizedModel((0.7, 0.3), (0.2, 0.8))
    assert q.llr(np.array([0, 1])) == pytest.approx([math.log(0.2 / 0.7), math.log(0.8 / 0.3)])
    x = q.sample(None, np.ones(20000, bool), rng)
    assert abs(x.mean() - 0.8) < 0.02
    with pytest.raises(ValueError):
        QuantizedModel((0.5, 0.6), (0.5, 0.5))


def test_frame_validation():
    with pytest.raises(ValueError):
        ObservationFrame(1, np.zeros((3, 2)), np.zeros(2))


def test_sample_frame_exposes_only_inside(rng):
    m = ObservationModel("flat", 1.0, 1e6)
    locs = np.array([[0.5, 0.0], [5.0, 0.0]])
    fr = sample_frame(2, [0.0, 0.0], np.repeat(locs, 200, axis=0), m, rng)
    assert np.abs(fr.readings[:200]).mean() > 100
    assert np.abs(fr.readings[200:]).mean() < 2
