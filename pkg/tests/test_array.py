import math

import numpy as np
import pytest

from monopulse_lab.array import (
    C0,
    ArrayGeometry,
    PatternCut,
    channel_patterns,
    cut_pattern,
    ideal_channels,
    null_depth_monte_carlo,
    pattern_metrics,
    perturb_block,
    steering_vector,
    wavelength,
)
from monopulse_lab.components import SIGN_MATRIX
from monopulse_lab.errors import NoMainLobe

F = 1.95e9
LAM = C0 / F
HALF = ArrayGeometry(LAM / 2, LAM / 2, F, "isotropic")


def test_boresight_is_in_phase():
    np.testing.assert_allclose(steering_vector(ArrayGeometry(), 0.0, 0.0), np.ones(4))


def test_half_wave_phase_step():
    x = steering_vector(HALF, 30.0, 0.0)
    # k d sin(30 deg) = pi / 2 between A (+x) and B (-x)
    assert np.angle(x[0] / x[1]) == pytest.approx(math.pi / 2)
    assert np.angle(x[0] / x[2]) == pytest.approx(0.0)


def test_mirror_direction_is_conjugate():
    g = ArrayGeometry(element_model="isotropic")
    a = steering_vector(g, 12.0, -7.0)
    b = steering_vector(g, -12.0, 7.0)
    np.testing.assert_allclose(a, b.conj())


def test_cosine_element_factor():
    g = ArrayGeometry(q=2.0)
    assert abs(steering_vector(g, 60.0, 0.0)[0]) == pytest.approx(0.25)


def test_ideal_channels():
    np.testing.assert_allclose(ideal_channels([1, 1, 1, 1]), [4, 0, 0, 0])
    np.testing.assert_allclose(ideal_channels([1, -1, 1, -1]), [0, 4, 0, 0])
    np.testing.assert_allclose(ideal_channels([1, 1, -1, -1]), [0, 0, 4, 0])
    np.testing.assert_allclose(ideal_channels([1, -1, -1, 1]), [0, 0, 0, 4])


def test_two_element_beamwidth():
    # |cos(pi/2 sin t)| is down 3 dB at t = +-30 deg
    m = pattern_metrics(cut_pattern(SIGN_MATRIX, HALF, 0.0, "sum"))
    assert m.hpbw == pytest.approx(60.0, abs=1.0)
    assert m.peak_direction == 0.0


def test_difference_null_on_boresight():
    cut = cut_pattern(SIGN_MATRIX, ArrayGeometry(), 0.0, "delta_az")
    assert pattern_metrics(cut).null_depth > 200


def test_flat_pattern_has_no_main_lobe():
    th = np.linspace(-90, 90, 181)
    with pytest.raises(NoMainLobe):
        pattern_metrics(PatternCut(th, np.zeros_like(th)))


@pytest.mark.parametrize("phi", [0.0, 90.0])
def test_sum_cut_symmetric(phi):
    cut = cut_pattern(SIGN_MATRIX, ArrayGeometry(), phi, "sum")
    np.testing.assert_allclose(cut.gain_db, cut.gain_db[::-1], atol=1e-9)


def test_channel_patterns_normalized():
    p = channel_patterns(SIGN_MATRIX, ArrayGeometry())
    assert np.max(np.abs(p.fields["sum"])) == pytest.approx(1.0)
    assert p.fields["sum"].shape == (2, len(p.theta))


def test_perturb_within_bounds():
    rng = np.random.default_rng(3)
    t = perturb_block(SIGN_MATRIX.astype(complex), 0.5, 5.0, rng)
    ratio = t / SIGN_MATRIX
    assert np.all(np.abs(20 * np.log10(np.abs(ratio))) <= 0.5)
    assert np.all(np.abs(np.degrees(np.angle(ratio))) <= 5.0)


def test_null_depth_degrades_with_error_size():
    g = ArrayGeometry()
    med = [np.median(null_depth_monte_carlo(SIGN_MATRIX, g, a, p, draws=40, seed=7,
                                            theta=np.linspace(-90, 90, 361)))
           for a, p in ((0.05, 0.5), (0.2, 2.0), (0.5, 5.0), (1.0, 10.0))]
    assert all(x > y for x, y in zip(med, med[1:]))


def test_geometry_validation():
    with pytest.raises(ValueError):
        ArrayGeometry(d_az=0.0)
    with pytest.raises(ValueError):
        ArrayGeometry(element_model="dipole")
    assert wavelength(F) == pytest.approx(LAM)
