import json

import numpy as np
import pytest

from carclust import FitConfig, fit_multistart, generate_panel, read_report, select_g, separated_spec, write_report
from carclust.errors import ReportWriteError
from carclust.report import REPORT_KEYS, build_report, render_text


@pytest.fixture(scope="module")
def fitted():
    sim = generate_panel(separated_spec(n=12, T=4, G=2, seed=0))
    res = fit_multistart(sim.panel, FitConfig(n_clusters=2, n_restarts=3))
    return sim.panel, res


def test_round_trip(tmp_path, fitted):
    panel, res = fitted
    path = tmp_path / "report.json"
    write_report(res, path, panel=panel)
    tree = read_report(path)
    assert tuple(tree) == REPORT_KEYS
    assert tree["fit"]["objective"] == pytest.approx(res.objective, rel=5e-6)
    for k, t in enumerate(panel.time_labels):
        got = [tree["fit"]["memberships"][str(t)][u] for u in panel.unit_ids]
        assert got == res.partition.labels[k].tolist()


def test_ch_section_omitted_without_sweep(fitted):
    panel, res = fitted
    tree = build_report(res, panel)
    assert tree["ch_table"]["omitted"] is True
    assert "omitted" in render_text(tree)


def test_ch_section_lists_every_candidate():
    sim = generate_panel(separated_spec(n=30, T=4, seed=1))
    ch = select_g(sim.panel, [2, 3, 4], config=FitConfig(n_clusters=2, n_restarts=2))
    tree = build_report(ch.best.fit, sim.panel, ch=ch)
    assert [row["G"] for row in tree["ch_table"]["candidates"]] == [2, 3, 4]
    assert tree["ch_table"]["selected_g"] == ch.selected_g


def test_toy_fit_has_two_by_two_transitions():
    sim = generate_panel(separated_spec(n=6, T=3, G=2, seed=4))
    res = fit_multistart(sim.panel, FitConfig(n_clusters=2, n_restarts=2))
    tr = build_report(res, sim.panel)["transitions"]
    assert np.array(tr["probs"]).shape == (2, 2)
    assert np.array(tr["counts"]).shape == (2, 2)
    assert tr["n_pairs"] == 6 * 2


def test_numbers_have_six_significant_digits(fitted):
    panel, res = fitted
    tree = build_report(res, panel)
    for v in np.ravel(tree["coefficients"]["lag_matrices"]["A1"]):
        assert v == float(f"{v:.6g}")


def test_text_report_sections(fitted):
    panel, res = fitted
    text = render_text(build_report(res, panel))
    for title in ("[config]", "[fit]", "[memberships]", "[model centroids]", "[empirical centroids]",
                  "[coefficients]", "[CH table]", "[transitions]", "[shares]"):
        assert title in text


def test_byte_identical_reports(tmp_path, fitted):
    panel, res = fitted
    for fmt in ("tree", "text"):
        a, b = tmp_path / f"a.{fmt}", tmp_path / f"b.{fmt}"
        write_report(res, a, panel=panel, format=fmt)
        write_report(res, b, panel=panel, format=fmt)
        assert a.read_bytes() == b.read_bytes()
    json.loads((tmp_path / "a.tree").read_text())


def test_unwritable_path(tmp_path, fitted):
    panel, res = fitted
    with pytest.raises(ReportWriteError, match="missing"):
        write_report(res, tmp_path / "missing" / "r.json", panel=panel)
