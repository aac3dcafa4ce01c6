"""Rolling scorer and the per-timestep thresholding pipeline."""
import csv

import numpy as np
import pytest

from predfdr.bfdr import BfdrConfig, ScoreBatch, gbfdr
from predfdr.decision import bfdr_coupled_rule
from predfdr.pipeline import (
    DIFFUSE_PRIOR,
    DetectConfig,
    confusion_metrics,
    detect,
    lagged_scores,
    metric_series,
    write_report,
    write_scores_csv,
)
from predfdr.predictive import NigParams, nig_update, posterior_predictive, score
from predfdr.simgen import SimSpec, gen_data


@pytest.fixture(scope="module")
def panel():
    data = gen_data(SimSpec(m=12, t_len=60, lag=8, outlier_rate=0.1, seed=5))
    return data


# -------------------------------------------------------------- lagged scores


def test_lagged_scores_match_composed_route(panel):
    lag = 8
    scores = lagged_scores(panel.values, DIFFUSE_PRIOR, lag)
    assert scores.shape == (12, 52)
    worst = 0.0
    for j in range(12):
        for ti in range(52):
            t = lag + ti
            post = nig_update(DIFFUSE_PRIOR, panel.values[j, t - lag : t])
            expect = score(posterior_predictive(post), panel.values[j, t])
            worst = max(worst, abs(scores[j, ti] - expect))
    assert worst < 1e-12


def test_lagged_scores_window_excludes_current():
    # a huge spike at t must not contaminate its own window
    vals = np.zeros((1, 20))
    vals[0, :] = np.linspace(-0.5, 0.5, 20)
    vals[0, 15] = 500.0
    scores = lagged_scores(vals, DIFFUSE_PRIOR, lag=10)
    assert scores[0, 5] > 0.999999


def test_lagged_scores_two_sided(panel):
    one = lagged_scores(panel.values, DIFFUSE_PRIOR, 8, two_sided=False)
    two = lagged_scores(panel.values, DIFFUSE_PRIOR, 8, two_sided=True)
    assert np.allclose(two, np.abs(2.0 * one - 1.0), atol=1e-15)


def test_lagged_scores_thread_determinism(panel):
    a = lagged_scores(panel.values, DIFFUSE_PRIOR, 8, threads=1)
    b = lagged_scores(panel.values, DIFFUSE_PRIOR, 8, threads=3)
    c = lagged_scores(panel.values, DIFFUSE_PRIOR, 8, threads=5)
    assert np.array_equal(a, b)
    assert np.array_equal(a, c)


def test_lagged_scores_in_unit_interval(panel):
    s = lagged_scores(panel.values, DIFFUSE_PRIOR, 8)
    assert np.all((s >= 0.0) & (s <= 1.0))


def test_lagged_scores_validation():
    with pytest.raises(ValueError):
        lagged_scores(np.zeros(5), DIFFUSE_PRIOR, 2)
    with pytest.raises(ValueError):
        lagged_scores(np.zeros((2, 5)), DIFFUSE_PRIOR, 5)
    bad = np.zeros((2, 5))
    bad[0, 0] = np.inf
    with pytest.raises(ValueError):
        lagged_scores(bad, DIFFUSE_PRIOR, 2)


def test_custom_prior_changes_scores(panel):
    weak = lagged_scores(panel.values, DIFFUSE_PRIOR, 8)
    strong = lagged_scores(panel.values, NigParams(0.0, 50.0, 20.0, 20.0), 8)
    assert not np.allclose(weak, strong)


# ------------------------------------------------------------------- metrics


def test_confusion_metrics_frozen():
    m = confusion_metrics(tp=2, fp=1, fn=1, tn=6)
    assert m["precision"] == pytest.approx(2.0 / 3.0)
    assert m["recall"] == pytest.approx(2.0 / 3.0)
    assert m["accuracy"] == pytest.approx(0.8)
    assert m["balanced_accuracy"] == pytest.approx((2.0 / 3.0 + 6.0 / 7.0) / 2.0)


def test_confusion_metrics_degenerate_conventions():
    # no flags made: vacuous precision
    assert confusion_metrics(0, 0, 3, 7)["precision"] == 1.0
    # nothing to find: vacuous recall, balanced falls back to specificity
    none = confusion_metrics(0, 2, 0, 8)
    assert none["recall"] == 1.0
    assert none["balanced_accuracy"] == pytest.approx(0.8)
    assert confusion_metrics(0, 0, 0, 0)["accuracy"] == 1.0


# -------------------------------------------------------------------- detect


def test_detect_matches_coupled_rule(panel):
    scores = lagged_scores(panel.values, DIFFUSE_PRIOR, 8)
    truth = panel.truth[:, 8:]
    cfg = DetectConfig(bfdr=BfdrConfig(q=0.5, a=2.0, k=200), c1=0.2)
    qs = (0.3, 0.05)
    rep = detect(scores, truth, cfg, q_values=qs, t_offset=8)
    assert rep.qs == qs
    assert rep.baseline_etas == qs  # default pairs one baseline per q
    for qi, q in enumerate(qs):
        cfg_q = BfdrConfig(q=q, a=2.0, k=200)
        for ti in range(scores.shape[1]):
            expect = bfdr_coupled_rule(ScoreBatch(scores[:, ti]), cfg_q, c1=0.2)
            assert np.array_equal(rep.flags_bfdr[qi, :, ti], expect)
            res = gbfdr(ScoreBatch(1.0 - scores[:, ti]), cfg_q)
            assert rep.feasible[qi, ti] == res.feasible
            if res.feasible:
                assert rep.eta_s[qi, ti] == res.eta
                assert rep.eta_r[qi, ti] == 1.0 - res.eta


def test_detect_fixed_baselines(panel):
    scores = lagged_scores(panel.values, DIFFUSE_PRIOR, 8)
    cfg = DetectConfig(
        bfdr=BfdrConfig(q=0.5, a=1.0, k=50), baseline_etas=(0.9, 0.99)
    )
    rep = detect(scores, None, cfg, q_values=(0.2,))
    assert rep.flags_fixed.shape == (2, 12, 52)
    for bi, eta in enumerate((0.9, 0.99)):
        expect = scores > (1.0 - eta)
        assert np.array_equal(rep.flags_fixed[bi], expect)
    # without truth no metric block is produced
    assert rep.metrics_bfdr is None


def test_detect_t_index_offset(panel):
    scores = lagged_scores(panel.values, DIFFUSE_PRIOR, 8)
    rep = detect(scores, None, DetectConfig(bfdr=BfdrConfig(q=0.2)), t_offset=8)
    assert rep.t_index[0] == 8
    assert rep.t_index[-1] == 59


def test_detect_thread_determinism(panel):
    scores = lagged_scores(panel.values, DIFFUSE_PRIOR, 8)
    truth = panel.truth[:, 8:]
    cfg = DetectConfig(bfdr=BfdrConfig(q=0.5, a=2.0, k=100))
    one = detect(scores, truth, cfg, q_values=(0.3, 0.02), threads=1)
    four = detect(scores, truth, cfg, q_values=(0.3, 0.02), threads=4)
    assert np.array_equal(one.flags_bfdr, four.flags_bfdr)
    np.testing.assert_array_equal(one.eta_s, four.eta_s)
    assert np.array_equal(one.feasible, four.feasible)


def test_detect_shape_errors(panel):
    scores = lagged_scores(panel.values, DIFFUSE_PRIOR, 8)
    cfg = DetectConfig(bfdr=BfdrConfig(q=0.2))
    with pytest.raises(ValueError):
        detect(scores[0], None, cfg)
    with pytest.raises(ValueError):
        detect(scores, panel.truth, cfg)  # unaligned truth


def test_detect_infeasible_column_flags_nothing():
    scores = np.full((5, 3), 0.5)
    cfg = DetectConfig(bfdr=BfdrConfig(q=0.01, a=1.0, k=100))
    rep = detect(scores, None, cfg)
    assert not rep.feasible.any()
    assert not rep.flags_bfdr.any()
    assert np.isnan(rep.eta_s).all()


def test_detect_confusion_counts(panel):
    scores = lagged_scores(panel.values, DIFFUSE_PRIOR, 8)
    truth = panel.truth[:, 8:]
    cfg = DetectConfig(bfdr=BfdrConfig(q=0.5, a=2.0, k=100))
    rep = detect(scores, truth, cfg, q_values=(0.2,))
    conf = rep.confusion_bfdr[0]
    for ti in (0, 17, 51):
        flags = rep.flags_bfdr[0, :, ti]
        t = truth[:, ti]
        assert conf[ti, 0] == np.sum(flags & t)
        assert conf[ti, 1] == np.sum(flags & ~t)
        assert conf[ti, 2] == np.sum(~flags & t)
        assert conf[ti, 3] == np.sum(~flags & ~t)
    assert conf.sum(axis=-1).max() == 12  # counts partition the panel


def test_metric_series_pairing(panel):
    scores = lagged_scores(panel.values, DIFFUSE_PRIOR, 8)
    truth = panel.truth[:, 8:]
    cfg = DetectConfig(bfdr=BfdrConfig(q=0.5, a=2.0, k=100), baseline_etas=(0.3, 0.7))
    rep = detect(scores, truth, cfg, q_values=(0.3, 0.1))
    rows, diffs = metric_series(rep)
    assert len(rows) == (2 + 2) * 52
    # only q=0.3 has a matching baseline level
    assert len(diffs) == 52
    assert all(row["q"] == 0.3 for row in diffs)
    rep_nometrics = detect(scores, None, cfg, q_values=(0.3,))
    with pytest.raises(ValueError):
        metric_series(rep_nometrics)


# ------------------------------------------------------------------ file IO


def test_write_scores_csv_header(tmp_path):
    p = tmp_path / "scores.csv"
    write_scores_csv(np.array([[0.25, 0.5]]), p, t_offset=30)
    lines = p.read_text().splitlines()
    assert lines[0] == "t30,t31"
    assert [float(v) for v in lines[1].split(",")] == [0.25, 0.5]


def test_write_report_files(tmp_path, panel):
    scores = lagged_scores(panel.values, DIFFUSE_PRIOR, 8)
    truth = panel.truth[:, 8:]
    cfg = DetectConfig(bfdr=BfdrConfig(q=0.5, a=2.0, k=100))
    rep = detect(scores, truth, cfg, q_values=(0.3, 0.05), t_offset=8)
    paths = write_report(rep, tmp_path)
    assert set(paths) == {"thresholds", "flags", "metrics", "diff"}

    with open(paths["thresholds"]) as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 2 * 52
    for row in rows:
        if row["feasible"] == "0":
            assert row["eta_s"] == "" and row["eta_r"] == ""
        else:
            eta_s = float(row["eta_s"])
            assert 0.0 <= eta_s <= 1.0
            assert float(row["eta_r"]) == pytest.approx(1.0 - eta_s)

    with open(paths["flags"]) as fh:
        flag_rows = list(csv.DictReader(fh))
    expect = int(rep.flags_bfdr.sum() + rep.flags_fixed.sum())
    assert len(flag_rows) == expect

    with open(paths["metrics"]) as fh:
        metric_rows = list(csv.DictReader(fh))
    assert len(metric_rows) == 4 * 52
    assert {r["method"] for r in metric_rows} == {"bfdr", "fixed"}

    with open(paths["diff"]) as fh:
        diff_rows = list(csv.DictReader(fh))
    assert len(diff_rows) == 2 * 52  # both q levels match their baselines


def test_write_report_without_truth(tmp_path, panel):
    scores = lagged_scores(panel.values, DIFFUSE_PRIOR, 8)
    rep = detect(scores, None, DetectConfig(bfdr=BfdrConfig(q=0.2)))
    paths = write_report(rep, tmp_path)
    assert set(paths) == {"thresholds", "flags"}
