"""Topic keyword summaries, prevalence matrices and report exports.

A learned topic is a nonnegative weight over vocabulary terms. For
human-readable summaries the term list is cleaned up with a bigram
subsumption rule: when a bigram carries at least half the weight of a
constituent unigram, the unigram is dropped in favor of the more
specific bigram ("social distancing" beats "distancing"). Exports are
plain CSV/TSV plus a dependency-free SVG heatmap so reports render
anywhere.
"""

from __future__ import annotations

import csv
import datetime as dt
import os
from dataclasses import dataclass

import numpy as np


@dataclass
class TopicSummary:
    topic_index: int
    entries: list  # (term, normalized_weight) pairs, heaviest first

    @property
    def label(self):
        return ", ".join(term for term, _ in self.entries[:3])


@dataclass
class PrevalenceMatrix:
    values: np.ndarray  # topics x days
    normalization: str = "day"


def summarize_topic(weights, k, topic_index=0):
    """Pick the top ``k`` representative terms of one topic.

    ``weights`` maps terms to nonnegative weights. Terms without an
    alphabetic character are dropped. A unigram is dropped when some
    bigram containing it (as a whole whitespace token) weighs at least
    half as much, since the bigram tells the same story more
    precisely. Reported weights are the term's share of the topic's
    total weight over all given terms; ties order alphabetically.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    for term, weight in weights.items():
        if weight < 0:
            raise ValueError("negative weight for term %r" % term)
    total = float(sum(weights.values()))
    if total <= 0.0:
        return TopicSummary(topic_index=topic_index, entries=[])
    bigrams = [(t, w) for t, w in weights.items() if " " in t]
    survivors = []
    for term, weight in weights.items():
        if weight <= 0.0:
            continue
        if not any(ch.isalpha() for ch in term):
            continue
        if " " not in term:
            subsumed = any(
                term in bg.split() and bw >= weight / 2.0
                for bg, bw in bigrams
            )
            if subsumed:
                continue
        survivors.append((term, weight))
    survivors.sort(key=lambda tw: (-tw[1], tw[0]))
    entries = [(t, w / total) for t, w in survivors[:k]]
    return TopicSummary(topic_index=topic_index, entries=entries)


def _topic_columns(model):
    # The term-mode factor: W for a matrix model, B for a CP model.
    if hasattr(model, "w"):
        return np.asarray(model.w)
    if hasattr(model, "b"):
        return np.asarray(model.b)
    return np.asarray(model)


def summarize_model(model, vocab, k):
    """One :class:`TopicSummary` per column of the model's term factor."""
    cols = _topic_columns(model)
    if cols.shape[0] != len(vocab):
        raise ValueError(
            "term factor has %d rows but vocabulary has %d terms"
            % (cols.shape[0], len(vocab))
        )
    summaries = []
    for r in range(cols.shape[1]):
        weights = {term: float(cols[i, r]) for i, term in enumerate(vocab.terms)}
        summaries.append(summarize_topic(weights, k, topic_index=r))
    return summaries


def daily_prevalence(codes):
    """Topic prevalence per day from per-day code matrices.

    Each day's column is the mean code over that day's documents,
    scaled to sum 1 (empty or all-zero days stay zero). Returns a
    :class:`PrevalenceMatrix` with one column per day.
    """
    if not codes:
        raise ValueError("codes is empty")
    rank = np.asarray(codes[0]).shape[0]
    out = np.zeros((rank, len(codes)))
    for t, h in enumerate(codes):
        h = np.asarray(h, dtype=np.float64)
        if h.shape[0] != rank:
            raise ValueError("code matrices disagree on rank")
        if h.shape[1] == 0:
            continue
        col = h.mean(axis=1)
        s = col.sum()
        if s > 0.0:
            out[:, t] = col / s
    return PrevalenceMatrix(values=out, normalization="day")


def _iso_dates(dates, n_days):
    if dates is None:
        return ["day_%d" % (t + 1) for t in range(n_days)]
    if len(dates) != n_days:
        raise ValueError(
            "%d dates given for %d days" % (len(dates), n_days)
        )
    out = []
    for d in dates:
        out.append(d.isoformat() if isinstance(d, (dt.date, dt.datetime)) else str(d))
    return out


_CELL = 10  # px per heatmap cell
_LABEL_WIDTH = 260


def export_heatmap(prevalence, labels, path, dates=None):
    """Write ``heatmap.csv`` and ``heatmap.svg`` under directory ``path``.

    The CSV has a header row of day names (ISO dates when given) and
    one labeled row per topic. The SVG is a deterministic grid of
    10px grayscale cells, darker meaning higher prevalence, scaled so
    the largest value in the matrix is black; row labels come from the
    topic summaries.
    """
    values = (
        prevalence.values
        if isinstance(prevalence, PrevalenceMatrix)
        else np.asarray(prevalence, dtype=np.float64)
    )
    n_topics, n_days = values.shape
    names = [_label_of(l) for l in labels]
    if len(names) != n_topics:
        raise ValueError(
            "%d labels given for %d topics" % (len(names), n_topics)
        )
    day_names = _iso_dates(dates, n_days)
    os.makedirs(path, exist_ok=True)
    csv_path = os.path.join(path, "heatmap.csv")
    with open(csv_path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(["label"] + day_names)
        for r in range(n_topics):
            writer.writerow([names[r]] + [repr(float(v)) for v in values[r]])
    svg_path = os.path.join(path, "heatmap.svg")
    with open(svg_path, "w", encoding="utf-8", newline="") as f:
        f.write(_heatmap_svg(values, names))
    return csv_path, svg_path


def _label_of(label):
    return label.label if hasattr(label, "label") else str(label)


def read_heatmap_csv(path):
    """Parse a heatmap.csv back into (values, labels, day_names)."""
    with open(path, "r", encoding="utf-8", newline="") as f:
        rows = list(csv.reader(f))
    if not rows or not rows[0] or rows[0][0] != "label":
        raise ValueError("%s: not a heatmap csv" % path)
    day_names = rows[0][1:]
    labels = [row[0] for row in rows[1:]]
    values = np.array(
        [[float(v) for v in row[1:]] for row in rows[1:]], dtype=np.float64
    )
    return values, labels, day_names


def _heatmap_svg(values, names):
    n_topics, n_days = values.shape
    width = _LABEL_WIDTH + n_days * _CELL
    height = max(n_topics, 1) * _CELL
    vmax = float(values.max(initial=0.0))
    lines = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        '<svg xmlns="http://www.w3.org/2000/svg" width="%d" height="%d" '
        'viewBox="0 0 %d %d">' % (width, height, width, height),
        '<rect width="%d" height="%d" fill="#ffffff"/>' % (width, height),
    ]
    for r in range(n_topics):
        y = r * _CELL
        label = _escape(names[r])
        lines.append(
            '<text x="%d" y="%d" font-family="sans-serif" font-size="8" '
            'fill="#000000">%s</text>' % (2, y + _CELL - 2, label)
        )
        for t in range(n_days):
            v = values[r, t]
            if vmax > 0.0 and v > 0.0:
                shade = 255 - int(round(255.0 * min(v / vmax, 1.0)))
            else:
                shade = 255
            if shade == 255:
                continue  # background already white
            lines.append(
                '<rect x="%d" y="%d" width="%d" height="%d" fill="#%02x%02x%02x"/>'
                % (_LABEL_WIDTH + t * _CELL, y, _CELL, _CELL, shade, shade, shade)
            )
    lines.append("</svg>")
    return "\n".join(lines) + "\n"


def _escape(text):
    return (
        text.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")
    )


def export_keywords(model, vocab, k, path):
    """Write ``keywords.tsv`` under directory ``path``.

    One row per topic: the top-``k`` surviving terms as
    ``term (weight)`` pairs joined by tabs, weights printed with two
    decimals. Rows with fewer survivors than ``k`` are short rather
    than padded.
    """
    summaries = summarize_model(model, vocab, k)
    os.makedirs(path, exist_ok=True)
    out = os.path.join(path, "keywords.tsv")
    with open(out, "w", encoding="utf-8", newline="") as f:
        for s in summaries:
            cells = ["%s (%.2f)" % (term, weight) for term, weight in s.entries]
            f.write("\t".join(cells) + "\n")
    return out
