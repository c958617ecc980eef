import numpy as np
import pytest

from monopulse_lab.array import comparator_block
from monopulse_lab.components import (
    SIGN_MATRIX,
    CouplerParams,
    CrossoverParams,
    check_crossover,
    conventional_half_circuit_abcd,
    evenodd_ratrace_s,
    fourmode_crossover_s,
    gen_comparator,
    gen_conventional_ratrace,
    gen_crossover,
    gen_pt_coupler,
    pt_half_circuit,
    solve_crossover_conditions,
)
from monopulse_lab.netkernel import abcd_to_s, sweep_at

F0 = 2.0e9
R = 1 / np.sqrt(2)
FREQS = np.array([0.9, 1.0, 1.1]) * F0


def test_conventional_ratrace_textbook_values():
    s = sweep_at(gen_conventional_ratrace(), F0, [F0]).s[0]
    np.testing.assert_allclose(np.diag(s), 0, atol=1e-12)
    # Pa feeds Pb and Pd in antiphase, Pb feeds Pa and Pc in phase; Pc is isolated from Pa
    np.testing.assert_allclose(s[:, 0], [0, -1j * R, 0, 1j * R], atol=1e-12)
    np.testing.assert_allclose(s[:, 1], [-1j * R, 0, -1j * R, 0], atol=1e-12)


def test_conventional_ratrace_matches_half_circuits():
    se = abcd_to_s(conventional_half_circuit_abcd(50.0, FREQS, F0, "e"))
    so = abcd_to_s(conventional_half_circuit_abcd(50.0, FREQS, F0, "o"))
    s = sweep_at(gen_conventional_ratrace(), F0, FREQS).s
    # half circuit runs Pb (port 1) to Pa (port 2); the mirror maps Pa<->Pd, Pb<->Pc
    np.testing.assert_allclose(s[:, 1, 1], (se[:, 0, 0] + so[:, 0, 0]) / 2, atol=1e-12)
    np.testing.assert_allclose(s[:, 2, 1], (se[:, 0, 0] - so[:, 0, 0]) / 2, atol=1e-12)
    np.testing.assert_allclose(s[:, 0, 1], (se[:, 1, 0] + so[:, 1, 0]) / 2, atol=1e-12)
    np.testing.assert_allclose(s[:, 3, 1], (se[:, 1, 0] - so[:, 1, 0]) / 2, atol=1e-12)


def test_pt_coupler_ideal_at_center():
    s = sweep_at(gen_pt_coupler(), F0, [F0]).s[0]
    np.testing.assert_allclose(np.diag(s), 0, atol=1e-12)
    np.testing.assert_allclose(np.abs(s[[1, 3], 0]), R, atol=1e-12)
    np.testing.assert_allclose(np.abs(s[[0, 2], 1]), R, atol=1e-12)
    assert abs(s[2, 0]) < 1e-12 and abs(s[3, 1]) < 1e-12
    # sum and difference behaviour
    assert abs(s[1, 0] + s[3, 0]) < 1e-12
    assert abs(s[0, 1] - s[2, 1]) < 1e-12


@pytest.mark.parametrize("z_eta", [30.0, 50.0, 80.0])
def test_pt_coupler_graph_matches_even_odd(z_eta):
    p = CouplerParams(z_eta=z_eta)
    s = sweep_at(gen_pt_coupler(p), F0, FREQS).s
    assert np.max(np.abs(s - evenodd_ratrace_s(p, FREQS))) < 1e-12


def test_z_eta_does_not_matter_at_center():
    ref = sweep_at(gen_pt_coupler(), F0, [F0]).s
    for z in (25.0, 70.0, 120.0):
        s = sweep_at(gen_pt_coupler(CouplerParams(z_eta=z)), F0, [F0]).s
        assert np.max(np.abs(s - ref)) < 1e-12


def test_half_circuit_plane_terminations():
    assert pt_half_circuit(CouplerParams(), FREQS, "e")[3] == "open"
    assert pt_half_circuit(CouplerParams(), FREQS, "o")[3] == "short"
    with pytest.raises(ValueError):
        pt_half_circuit(CouplerParams(), FREQS, "x")


def test_crossover_graph_matches_four_mode_model():
    p = CrossoverParams(z_x=60.0, z_y=45.0, theta_x=85.0, theta_y=95.0)
    s = sweep_at(gen_crossover(p, f0=F0), F0, FREQS).s
    assert np.max(np.abs(s - fourmode_crossover_s(p, FREQS, f0=F0))) < 1e-12


def test_crossover_symmetry_and_thru():
    s = fourmode_crossover_s(CrossoverParams(), FREQS, f0=F0)
    for k in range(3):
        m = s[k]
        np.testing.assert_allclose(m, m.T, atol=1e-15)
        # every port sees the same reflection, thru and couplings
        assert np.allclose(np.diag(m), m[0, 0])
        assert np.allclose([m[1, 3], m[2, 0], m[3, 1]], m[0, 2])
    centre = s[1]
    assert abs(centre[2, 0]) == pytest.approx(1.0, abs=1e-12)
    assert np.degrees(np.angle(centre[2, 0])) == pytest.approx(0.0, abs=1e-9)


def test_default_crossover_passes_check():
    c = check_crossover(CrossoverParams())
    assert c.passed
    assert c.thru_db == pytest.approx(0.0, abs=1e-9)


def test_solver_returns_verified_points():
    cands = solve_crossover_conditions(z_range=(50.0, 60.0), theta_step=2.0)
    assert cands
    for c in cands:
        again = check_crossover(c.params)
        assert again.passed
        assert again.reflection_db <= -40 and again.isolation_db <= -40


def test_comparator_block_is_sign_matrix():
    s = sweep_at(gen_comparator(), F0, [F0])
    t = comparator_block(s, F0)
    np.testing.assert_allclose(np.abs(t), 0.5, atol=1e-12)
    # up to one common phase per output the block reproduces the sign matrix
    phase = t[:, :1] / np.abs(t[:, :1])
    np.testing.assert_allclose(t / phase, SIGN_MATRIX / 2, atol=1e-12)


def test_invalid_parameters_rejected():
    with pytest.raises(ValueError):
        CrossoverParams(z_x=-1.0)
    with pytest.raises(ValueError):
        CrossoverParams(theta_x=180.0)
    with pytest.raises(ValueError):
        CouplerParams(z_eta=0.0)
