import numpy as np
import pytest

from coagkin.errors import ConfigError
from coagkin.svgplot import emit_plot, render_svg

t = np.linspace(0, 5, 51)


def test_single_log_series(tmp_path):
    p = emit_plot([("decay", t, np.exp(-t))], tmp_path / "a.svg", logy=True)
    text = open(p).read()
    assert text.startswith("<svg") and text.rstrip().endswith("</svg>")
    assert text.count("<polyline") == 1


def test_deterministic(tmp_path):
    s = [("a", t, np.exp(-t)), ("b", t, np.exp(-2 * t))]
    emit_plot(s, tmp_path / "1.svg", logy=True)
    emit_plot(s, tmp_path / "2.svg", logy=True)
    assert (tmp_path / "1.svg").read_bytes() == (tmp_path / "2.svg").read_bytes()


def test_legend_order():
    text = render_svg([("first", t, t + 1), ("second", t, t + 2)])
    assert text.count("<polyline") == 2
    assert text.index(">first<") < text.index(">second<")


def test_errors(tmp_path):
    with pytest.raises(ConfigError):
        render_svg([])
    with pytest.raises(ConfigError):
        render_svg([("x", [1, 2], [1])])
    with pytest.raises(ConfigError):
        render_svg([("x", [1, 2], [0, -1])], logy=True)
    with pytest.raises(OSError):
        emit_plot([("x", t, t)], tmp_path / "missing" / "p.svg")
