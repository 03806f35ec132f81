"""From raw JSON lines to a days-by-terms-by-documents tensor.

Walks the whole text side of the package on a two-week toy feed:
parsing with per-line error reporting, day slicing, engagement
subsampling, vocabulary building with the pandemic-term filter, and
the final padded TF-IDF tensor.
"""

import datetime as dt
import json

import numpy as np

from dyntopic import (
    build_tensor,
    build_vocab,
    parse_documents,
    slice_by_day,
    subsample_corpus,
    tfidf_matrix,
)

rng = np.random.default_rng(7)

# ---------------------------------------------------------------- raw feed
# A fortnight of short posts. Bursts move across themes, and two lines
# are deliberately broken to show the parser's error reporting.
themes = {
    "home": ["stay home and stay safe", "working from home again", "home office all week"],
    "hands": ["wash your hands", "wash hands before you eat", "soap and water work"],
    "cases": ["new cases reported today", "cases rising in the city", "case counts keep climbing"],
}
start = dt.date(2020, 3, 1)
lines = []
n = 0
for day in range(14):
    date = (start + dt.timedelta(days=day)).isoformat()
    active = ["home", "hands"] if day < 7 else ["hands", "cases"]
    for _ in range(12):
        n += 1
        theme = themes[active[int(rng.integers(0, 2))]]
        lines.append(json.dumps({
            "id": "post%04d" % n,
            "date": date,
            "text": theme[n % 3],
            "retweets": int(rng.integers(0, 50)),
        }))
lines.insert(30, "this line is not JSON")
lines.insert(77, json.dumps({"id": "x", "date": "soon", "text": "no date", "retweets": 1}))

result = parse_documents(lines)
print("parsed %d documents, rejected %d lines" % (len(result.documents), len(result.errors)))
for issue in result.errors:
    print("  line %d: %s" % (issue.line_number, issue.reason))

# ------------------------------------------------------------- day slicing
# Slices cover every calendar day of the span, and each day keeps only
# its most-engaged posts (the paper-scale corpora keep 1000 per day;
# the toy keeps 8 so the subsampling is visible).
span = (start, start + dt.timedelta(days=13))
corpus = subsample_corpus(slice_by_day(result.documents, span), 8)
print("\n%d days, %d documents after keeping the top 8 per day"
      % (corpus.n_days, sum(len(s) for s in corpus.slices)))
first = corpus.slices[0]
print("day 1 engagement order:", [d.engagement for d in first.documents])

# -------------------------------------------------------------- vocabulary
# Unigrams and bigrams, minus stopwords and minus any term that would
# name the pandemic itself (those dominate every topic otherwise).
vocab = build_vocab(corpus, cap=40)
print("\nvocabulary (%d terms, %d documents):" % (len(vocab), vocab.n_docs))
for term, df in zip(vocab.terms, vocab.document_frequencies):
    print("  %-16s df=%d" % (term, df))

# One day's TF-IDF columns, unit length per document.
day_cols = tfidf_matrix(first, vocab)
print("\nday 1 TF-IDF column norms:", np.round(np.linalg.norm(day_cols, axis=0), 6))

# ------------------------------------------------------------- the tensor
tensor = build_tensor(corpus, vocab)
t, m, l = tensor.dims
print("\ntensor dims: %d days x %d terms x %d document slots" % (t, m, l))
print("padded slots per day:", tensor.padding.sum(axis=1))
print("first date %s, last date %s" % (tensor.dates[0], tensor.dates[-1]))

# The theme shift is already visible in raw term mass per day.
for term in ("stay home", "cases"):
    idx = vocab.index[term]
    mass = tensor.values[:, idx, :].sum(axis=1)
    bars = "".join("#" if v > 0.5 else "." for v in mass)
    print("%-10s %s" % (term, bars))
