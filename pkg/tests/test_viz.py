"""Figure rendering: files appear and bytes are stable run to run."""

from vislab.viz import render_ks_trend_figure, render_survival_figure


def _report(records):
    return {"config": {"model": "bm"}, "lambda": 0.05, "records": records}


def _scene(r, ks_exact, ks_limit):
    return {
        "kind": "scenes", "r": r, "n_scenes": 400,
        "ks_exact": ks_exact, "ks_limit": ks_limit,
        "survival": [
            {"s": 0.5, "estimate": 0.97, "lo": 0.95, "hi": 0.99,
             "limit": 0.9753},
            {"s": 1.0, "estimate": 0.94, "lo": 0.91, "hi": 0.96,
             "limit": 0.9512},
            {"s": 2.0, "estimate": None, "lo": None, "hi": None,
             "limit": 0.9048},
        ],
    }


REPORT = _report([
    _scene(20.0, 0.041, 0.088),
    _scene(80.0, 0.022, 0.047),
    {"kind": "failed", "r": 200.0, "error": "RuntimeError: boom"},
])


def test_survival_figure_bytes_stable(tmp_path):
    a, b = tmp_path / "a.png", tmp_path / "b.png"
    render_survival_figure(REPORT, a)
    render_survival_figure(REPORT, b)
    data = a.read_bytes()
    assert data[:8] == b"\x89PNG\r\n\x1a\n"
    assert len(data) > 1000
    assert data == b.read_bytes()


def test_ks_trend_figure_bytes_stable(tmp_path):
    a, b = tmp_path / "a.png", tmp_path / "b.png"
    render_ks_trend_figure(REPORT, a)
    render_ks_trend_figure(REPORT, b)
    data = a.read_bytes()
    assert len(data) > 1000
    assert data == b.read_bytes()


def test_ks_trend_figure_without_scene_records(tmp_path):
    path = tmp_path / "empty.png"
    render_ks_trend_figure(
        _report([{"kind": "failed", "r": 10.0, "error": "x"}]), path)
    assert path.stat().st_size > 1000