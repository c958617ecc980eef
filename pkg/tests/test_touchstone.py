import numpy as np
import pytest

from monopulse_lab.components import gen_comparator
from monopulse_lab.errors import UnsupportedPortCount
from monopulse_lab.netkernel import SweepSParams, sweep_at
from monopulse_lab.touchstone import emit_touchstone, format_touchstone, parse_touchstone, read_touchstone


def test_two_port_golden():
    s = np.array([[[0.1, 0.9j], [0.8, -0.2]]])
    text = format_touchstone(SweepSParams(np.array([1e9]), s))
    # two-port column order is S11 S21 S12 S22
    assert text == "# Hz S RI R 50\n1000000000 0.1 0 0.8 0 0 0.9 -0.2 0\n"


def test_eight_port_round_trip(tmp_path):
    s = sweep_at(gen_comparator(), 2e9, [1.9e9, 2e9, 2.1e9])
    path = emit_touchstone(s, tmp_path / "c.s8p", comments=["comparator"])
    lines = path.read_text().splitlines()
    assert lines[0] == "! comparator"
    assert lines[1] == "! ports: P1 P2 P3 P4 P5 P6 P7 P8"
    # 8 rows of 8 pairs, 4 pairs per line
    assert len(lines) == 3 + 3 * 16
    back = read_touchstone(path)
    assert back.port_names == s.port_names
    np.testing.assert_allclose(back.freqs, s.freqs)
    assert np.max(np.abs(back.s - s.s)) < 1e-9


def test_one_port(tmp_path):
    s = SweepSParams(np.array([1e6, 2e6]), np.array([[[0.5]], [[-0.25j]]]))
    back = read_touchstone(emit_touchstone(s, tmp_path / "x.s1p"))
    np.testing.assert_allclose(back.s, s.s)


def test_unsupported_port_count():
    with pytest.raises(UnsupportedPortCount):
        format_touchstone(SweepSParams(np.array([1.0]), np.zeros((1, 5, 5))))
    with pytest.raises(UnsupportedPortCount):
        parse_touchstone("", 6)


@pytest.mark.parametrize(
    "option, row",
    [
        ("# GHz S MA R 50", "1 0.5 90 1 0 1 0 0.5 -90"),
        ("# MHz S DB R 75", "1000 -6.020599913 90 0 0 0 0 -6.020599913 -90"),
    ],
)
def test_other_formats(option, row):
    s = parse_touchstone(f"{option}\n{row}\n", 2)
    assert s.freqs[0] == pytest.approx(1e9)
    assert s.s[0, 0, 0] == pytest.approx(0.5j)
    assert s.s[0, 1, 1] == pytest.approx(-0.5j)
    assert s.s[0, 1, 0] == pytest.approx(1.0)
