"""Topic summaries, prevalence aggregation and report exports."""

import datetime as dt

import numpy as np
import pytest

from dyntopic.topics import (
    PrevalenceMatrix,
    TopicSummary,
    daily_prevalence,
    export_heatmap,
    export_keywords,
    read_heatmap_csv,
    summarize_model,
    summarize_topic,
)
from dyntopic.vectorizer import Vocabulary


def test_summarize_stay_safe_fixture():
    summary = summarize_topic({"stay": 0.4, "safe": 0.3, "stay safe": 0.25}, 3)
    assert [t for t, _ in summary.entries] == ["stay safe"]
    # reported weight is the share of the full topic mass
    assert summary.entries[0][1] == pytest.approx(0.25 / 0.95)


def test_summarize_keeps_unigram_when_bigram_is_weak():
    summary = summarize_topic({"stay": 0.4, "stay safe": 0.19}, 3)
    assert [t for t, _ in summary.entries] == ["stay", "stay safe"]


def test_summarize_subsumption_needs_whole_token_match():
    # "covers" is not a token of "cover story", so it survives
    summary = summarize_topic({"covers": 0.2, "cover story": 0.4}, 3)
    assert [t for t, _ in summary.entries] == ["cover story", "covers"]


def test_summarize_drops_symbol_terms_and_normalizes_over_all():
    summary = summarize_topic({"19": 0.5, "cases": 0.5}, 3)
    assert [t for t, _ in summary.entries] == ["cases"]
    assert summary.entries[0][1] == pytest.approx(0.5)


def test_summarize_ties_alphabetical_and_k_cuts():
    summary = summarize_topic({"b": 0.3, "a": 0.3, "c": 0.4}, 2)
    assert [t for t, _ in summary.entries] == ["c", "a"]


def test_summarize_rescale_invariance():
    weights = {"masks": 3.0, "wash hands": 2.0, "wash": 1.0}
    base = summarize_topic(weights, 3)
    scaled = summarize_topic({t: 10.0 * w for t, w in weights.items()}, 3)
    assert [t for t, _ in base.entries] == [t for t, _ in scaled.entries]
    for (_, w1), (_, w2) in zip(base.entries, scaled.entries):
        assert w1 == pytest.approx(w2)


def test_summarize_validation_and_empty_topic():
    with pytest.raises(ValueError, match="k"):
        summarize_topic({"a": 1.0}, 0)
    with pytest.raises(ValueError, match="negative"):
        summarize_topic({"a": -1.0}, 1)
    assert summarize_topic({"a": 0.0}, 1).entries == []


def test_label_joins_top_three():
    s = TopicSummary(
        topic_index=0,
        entries=[("a", 0.4), ("b", 0.3), ("c", 0.2), ("d", 0.1)],
    )
    assert s.label == "a, b, c"


def test_summarize_model_uses_term_factor():
    vocab = Vocabulary(
        terms=["cases", "masks", "stay safe"],
        document_frequencies=[2, 2, 1],
        n_docs=3,
    )
    w = np.array([[0.9, 0.0], [0.1, 0.2], [0.0, 0.8]])

    class Model:
        pass

    model = Model()
    model.w = w
    summaries = summarize_model(model, vocab, 2)
    assert summaries[0].label.startswith("cases")
    assert summaries[1].label.startswith("stay safe")
    with pytest.raises(ValueError, match="vocabulary"):
        summarize_model(np.ones((2, 2)), vocab, 2)


def test_daily_prevalence_mean_and_empty_days():
    codes = [
        np.array([[1.0, 3.0], [1.0, 1.0]]),
        np.zeros((2, 0)),
        np.array([[0.0], [2.0]]),
    ]
    prev = daily_prevalence(codes)
    np.testing.assert_allclose(prev.values[:, 0], [2.0 / 3.0, 1.0 / 3.0])
    np.testing.assert_array_equal(prev.values[:, 1], [0.0, 0.0])
    np.testing.assert_allclose(prev.values[:, 2], [0.0, 1.0])
    with pytest.raises(ValueError, match="empty"):
        daily_prevalence([])
    with pytest.raises(ValueError, match="rank"):
        daily_prevalence([np.ones((2, 1)), np.ones((3, 1))])


def test_export_heatmap_csv_format(tmp_path):
    prev = PrevalenceMatrix(values=np.array([[1.0, 0.25], [0.0, 0.75]]))
    csv_path, svg_path = export_heatmap(
        prev,
        ["first topic", "second topic"],
        tmp_path,
        dates=[dt.date(2020, 3, 1), dt.date(2020, 3, 2)],
    )
    text = open(csv_path, encoding="utf-8").read()
    assert text == (
        "label,2020-03-01,2020-03-02\n"
        "first topic,1.0,0.25\n"
        "second topic,0.0,0.75\n"
    )
    svg = open(svg_path, encoding="utf-8").read()
    assert svg.startswith("<?xml")
    assert 'fill="#000000">first topic</text>' in svg
    # the 1.0 cell is black, the zero cell is skipped (white bg)
    assert 'fill="#000000"/>' in svg


def test_export_heatmap_default_day_names_and_label_objects(tmp_path):
    prev = np.array([[0.5]])
    labels = [TopicSummary(topic_index=0, entries=[("stay safe", 1.0)])]
    csv_path, _ = export_heatmap(prev, labels, tmp_path)
    values, names, days = read_heatmap_csv(csv_path)
    assert names == ["stay safe"]
    assert days == ["day_1"]
    np.testing.assert_array_equal(values, [[0.5]])


def test_export_heatmap_validation(tmp_path):
    with pytest.raises(ValueError, match="labels"):
        export_heatmap(np.ones((2, 2)), ["only one"], tmp_path)
    with pytest.raises(ValueError, match="dates"):
        export_heatmap(np.ones((1, 2)), ["a"], tmp_path, dates=[dt.date(2020, 1, 1)])


def test_heatmap_round_trip_exact(tmp_path):
    rng = np.random.default_rng(3)
    values = rng.random((3, 7))
    csv_path, _ = export_heatmap(values, ["a", "b", "c"], tmp_path)
    back, labels, days = read_heatmap_csv(csv_path)
    np.testing.assert_array_equal(back, values)  # repr() round-trips floats
    assert labels == ["a", "b", "c"]
    assert len(days) == 7


def test_read_heatmap_rejects_foreign_csv(tmp_path):
    bad = tmp_path / "other.csv"
    bad.write_text("topic,day\nx,1\n", encoding="utf-8")
    with pytest.raises(ValueError, match="heatmap"):
        read_heatmap_csv(bad)


def test_svg_escapes_markup(tmp_path):
    _, svg_path = export_heatmap(np.array([[1.0]]), ["a<b&c"], tmp_path)
    svg = open(svg_path, encoding="utf-8").read()
    assert "a&lt;b&amp;c" in svg
    assert "a<b" not in svg


def test_export_keywords_format(tmp_path):
    vocab = Vocabulary(
        terms=["cases", "people", "stay safe"],
        document_frequencies=[2, 2, 1],
        n_docs=3,
    )
    w = np.array([[0.22, 0.0], [0.78, 0.0], [0.0, 1.0]])
    out = export_keywords(w, vocab, 2, tmp_path)
    lines = open(out, encoding="utf-8").read().splitlines()
    assert lines[0] == "people (0.78)\tcases (0.22)"
    assert lines[1] == "stay safe (1.00)"
