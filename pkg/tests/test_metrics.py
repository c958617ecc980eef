import numpy as np
import pytest

from monopulse_lab.errors import FrequencyNotInGrid
from monopulse_lab.metrics import (
    COMPARATOR_CRITERIA,
    COUPLER_CRITERIA,
    COUPLER_SPEC,
    Criteria,
    comparator_spec,
    contiguous_band,
    metrics,
    wrap_deg,
)
from monopulse_lab.netkernel import SweepSParams

F0 = 2e9
R = 1 / np.sqrt(2)
# ideal rat-race, ports Pa Pb Pc Pd
IDEAL = np.array([[0, -1j, 0, 1j], [-1j, 0, -1j, 0], [0, -1j, 0, -1j], [1j, 0, -1j, 0]]) * R
NAMES = ("Pa", "Pb", "Pc", "Pd")


def _sweep(mats, freqs):
    return SweepSParams(np.asarray(freqs), np.asarray(mats), 50.0, NAMES)


def test_frequency_independent_ideal_passes_whole_grid():
    freqs = np.linspace(1.8e9, 2.2e9, 5)
    rep = metrics(_sweep([IDEAL] * 5, freqs), COUPLER_CRITERIA, COUPLER_SPEC, F0)
    assert rep.passing.all()
    assert rep.band == (1.8e9, 2.2e9)
    assert rep.bandwidth_pct == pytest.approx(20.0)
    assert rep.amp_imbalance_db.max() == pytest.approx(0.0, abs=1e-12)
    assert rep.phase_imbalance_deg.max() == pytest.approx(0.0, abs=1e-12)
    assert rep.transmission_db[("Pb", "Pa")] == pytest.approx(-3.0103, abs=1e-4)


def test_imbalance_values():
    bad = IDEAL.copy()
    bad[1, 0] *= 10 ** (1 / 20)               # +1 dB on Pa -> Pb
    bad[3, 2] *= np.exp(1j * np.radians(12))  # 12 deg on Pc -> Pd
    freqs = [1.9e9, 2.0e9, 2.1e9]
    rep = metrics(_sweep([IDEAL, bad, IDEAL], freqs), COUPLER_CRITERIA, COUPLER_SPEC, F0)
    assert rep.amp_imbalance_db[1] == pytest.approx(1.0)
    assert rep.phase_imbalance_deg[1] == pytest.approx(12.0)
    assert rep.band is None and rep.bandwidth_pct == 0.0


def test_band_stops_at_first_failure():
    assert contiguous_band(np.arange(7.0), np.array([1, 0, 1, 1, 1, 0, 1], bool), 3.0) == (2.0, 4.0)
    assert contiguous_band(np.arange(3.0), np.array([1, 0, 1], bool), 1.0) is None


def test_wrap():
    np.testing.assert_allclose(wrap_deg([179.0, 181.0, -181.0, 540.0]), [179.0, -179.0, 179.0, -180.0])


def test_phase_spread_across_the_branch_cut():
    a = IDEAL.copy()
    # Pa drives Pb at -179 deg and Pd (sign -1 removed) at +179 deg: spread is 2 deg
    a[1, 0] = R * np.exp(-1j * np.radians(179))
    a[3, 0] = -R * np.exp(1j * np.radians(179))
    rep = metrics(_sweep([a], [F0]), COUPLER_CRITERIA, COUPLER_SPEC, F0)
    assert rep.phase_imbalance_deg[0] == pytest.approx(2.0)


def test_return_loss_criterion():
    a = IDEAL.copy()
    a[0, 0] = 0.5                               # 6 dB return loss
    rep = metrics(_sweep([a], [F0]), Criteria(10.0, None, None), COUPLER_SPEC, F0)
    assert rep.worst_return_db[0] == pytest.approx(6.0206, abs=1e-4)
    assert not rep.passing[0]


def test_f0_must_be_on_grid():
    with pytest.raises(FrequencyNotInGrid):
        metrics(_sweep([IDEAL], [1.9e9]), COUPLER_CRITERIA, COUPLER_SPEC, F0)


def test_ideal_comparator():
    from monopulse_lab.components import SIGN_MATRIX

    s = np.zeros((1, 8, 8), complex)
    s[0, 4:, :4] = SIGN_MATRIX / 2
    s[0, :4, 4:] = SIGN_MATRIX.T / 2
    sw = SweepSParams(np.array([F0]), s, 50.0, tuple(f"P{k}" for k in range(1, 9)))
    rep = metrics(sw, COMPARATOR_CRITERIA, comparator_spec(), F0)
    assert rep.passing.all()
    assert np.isinf(rep.worst_return_db[0])
    assert rep.bandwidth_pct == 0.0
