import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from monopulse_lab.components import CrossoverParams, gen_comparator, gen_crossover, gen_pt_coupler
from monopulse_lab.errors import (
    DegenerateNetwork,
    GridMismatch,
    PoleAtFrequency,
    PortOutOfRange,
    SingularJunction,
)
from monopulse_lab.netkernel import (
    AbcdMatrix,
    FrequencyGrid,
    SweepSParams,
    TLineSection,
    abcd_to_s,
    cascade,
    connect,
    innerconnect,
    junction_sparams,
    line_sparams,
    s_to_abcd,
    shunt_stub_abcd,
    stub_admittance,
    sweep,
    sweep_at,
    tline_abcd,
)
from monopulse_lab.netlist import GraphBuilder

F0 = 1.0e9


def test_quarter_wave_abcd_closed_form():
    m = tline_abcd(TLineSection(70.0, 90.0), F0, F0)
    assert m.a == pytest.approx(0, abs=1e-15)
    assert m.b == pytest.approx(70j)
    assert m.c == pytest.approx(1j / 70)
    assert m.det() == pytest.approx(1.0)


def test_matched_line_is_pure_delay():
    s = line_sparams(TLineSection(50.0, 30.0), [F0], F0, 50.0)[0]
    assert abs(s[0, 0]) < 1e-15
    assert s[1, 0] == pytest.approx(np.exp(-1j * np.radians(30)))


def test_loss_is_db_per_wavelength():
    s = line_sparams(TLineSection(50.0, 720.0, loss_db=0.5), [F0], F0, 50.0)[0]
    assert 20 * np.log10(abs(s[1, 0])) == pytest.approx(-1.0)


def test_short_stub_pole_is_reported():
    with pytest.raises(PoleAtFrequency):
        stub_admittance(TLineSection(50.0, 180.0), "short", np.array([F0]), F0)
    with pytest.raises(PoleAtFrequency) as info:
        shunt_stub_abcd(TLineSection(50.0, 90.0), "open", np.array([0.5 * F0, F0]), F0)
    assert info.value.index == 1


def test_stub_admittance_closed_form():
    f = np.array([0.7, 1.0, 1.3]) * F0
    th = np.radians(60.0) * f / F0
    y_open = stub_admittance(TLineSection(40.0, 60.0), "open", f, F0)
    y_short = stub_admittance(TLineSection(40.0, 60.0), "short", f, F0)
    assert np.allclose(y_open, 1j * np.tan(th) / 40.0)
    assert np.allclose(y_short, -1j / np.tan(th) / 40.0)
    # a shorted quarter wave is transparent
    assert abs(stub_admittance(TLineSection(50.0, 45.0), "short", 2 * F0, F0)) < 1e-15


def test_degenerate_abcd():
    with pytest.raises(DegenerateNetwork):
        # A + B/Z + C Z + D = 0
        abcd_to_s(AbcdMatrix(1.0, 50.0, 0.0, -2.0), 50.0)


def test_abcd_s_round_trip():
    m = tline_abcd(TLineSection(35.0, 63.0, 0.2), np.linspace(0.5, 1.5, 7) * F0, F0)
    back = s_to_abcd(abcd_to_s(m, 50.0), 50.0)
    assert np.allclose(back.as_array(), m.as_array(), atol=1e-12)


def _chain_via_connect(sections, freqs):
    net = SweepSParams(freqs, line_sparams(sections[0], freqs, F0))
    for sec in sections[1:]:
        net = connect(net, SweepSParams(freqs, line_sparams(sec, freqs, F0)), [(1, 0)])
    return net.s


section = st.builds(
    TLineSection,
    st.floats(10.0, 150.0),
    st.floats(5.0, 175.0),
    st.floats(0.0, 1.0),
)


@settings(max_examples=60, deadline=None)
@given(st.lists(section, min_size=1, max_size=5))
def test_connect_matches_abcd_cascade(sections):
    freqs = np.linspace(0.6, 1.4, 9) * F0
    m = AbcdMatrix.identity()
    for sec in sections:
        m = cascade(m, tline_abcd(sec, freqs, F0))
    ref = abcd_to_s(m, 50.0)
    assert np.max(np.abs(_chain_via_connect(sections, freqs) - ref)) < 1e-10


def test_connect_port_order_and_errors():
    f = np.array([F0])
    a = SweepSParams(f, junction_sparams(3, 1))
    b = SweepSParams(f, line_sparams(TLineSection(50.0, 90.0), f, F0))
    c = connect(a, b, [(1, 0)])
    assert c.ports == 3                       # a0, a2, then b1
    assert abs(c.s[0, 2, 0]) == pytest.approx(2 / 3)
    with pytest.raises(PortOutOfRange):
        connect(a, b, [(3, 0)])
    with pytest.raises(GridMismatch):
        connect(a, SweepSParams(f * 2, b.s), [(0, 0)])
    with pytest.raises(PortOutOfRange):
        innerconnect(b, [(0, 1)])


def test_junction_is_lossless():
    s = junction_sparams(5, 1)[0]
    assert np.allclose(s.conj().T @ s, np.eye(5))


@pytest.mark.parametrize("graph", [gen_pt_coupler(), gen_crossover(), gen_comparator()])
def test_generated_networks_reciprocal_and_lossless(graph):
    s = sweep(graph, FrequencyGrid(2e9, 1.6e9, 2.4e9, 41))
    assert s.reciprocity_error() < 1e-9
    assert s.unitarity_error() < 1e-9


def test_frequency_scaling_invariance():
    g = gen_pt_coupler()
    a = sweep_at(g, 2e9, [1.8e9, 2.1e9]).s
    from monopulse_lab.components import CouplerParams, gen_pt_coupler as gen

    b = sweep_at(gen(CouplerParams(f0=6e9)), 6e9, [5.4e9, 6.3e9]).s
    assert np.max(np.abs(a - b)) < 1e-12


def test_trapped_mode_reports_frequency():
    # Zx = 35 ohm traps a resonance of the inner cross at exactly f0
    g = gen_crossover(CrossoverParams(z_x=35.0), f0=F0)
    with pytest.raises(SingularJunction) as info:
        sweep(g, FrequencyGrid(F0, 0.5 * F0, 1.5 * F0, 5))
    assert info.value.index == 2
    assert info.value.frequency == pytest.approx(F0)
    # off the singular point the network is a perfect crossover neighbour
    s = sweep_at(g, F0, [F0 * (1 + 1e-9)]).s[0]
    assert abs(s[2, 0]) == pytest.approx(1.0, abs=1e-6)


def test_threads_give_identical_results(monkeypatch):
    grid = FrequencyGrid(2e9, 1.5e9, 2.5e9, 101)
    g = gen_comparator()
    monkeypatch.setenv("MONOPULSE_LAB_THREADS", "1")
    one = sweep(g, grid).s
    monkeypatch.setenv("MONOPULSE_LAB_THREADS", "4")
    four = sweep(g, grid).s
    assert np.array_equal(one, four)


def test_open_ended_line_reflects():
    b = GraphBuilder()
    b.node("a", "b")
    b.tline("T1", "a", "b", 50.0, 90.0)
    b.port("P1", "a")
    s = sweep_at(b.build(), F0, [F0]).s[0, 0, 0]
    # open end seen through a quarter wave looks like a short
    assert s == pytest.approx(-1.0)
