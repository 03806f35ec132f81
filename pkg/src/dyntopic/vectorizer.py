"""Text vectorization: tokens, vocabulary, TF-IDF columns and day tensors.

The pipeline mirrors common bag-of-words practice: lowercase word
tokens of length >= 2, English stopwords removed, unigrams plus
bigrams, then a corpus-specific filter that drops pandemic-name
variants (any token where "cov" or "coron" is not immediately followed
by "e") so that the factorizations surface discussion topics rather
than the one term shared by every document. Term weights are raw
counts scaled by smoothed idf and each document column is scaled to
unit Euclidean norm.
"""

from __future__ import annotations

import csv
import importlib.resources
import re
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from .corpus import Corpus, DaySlice, top_k

_TOKEN_RE = re.compile(r"(?u)\b\w\w+\b")
_PANDEMIC_STEMS = ("coron", "cov")

TENSOR_MAGIC = b"DYNTNSR1"


def _read_asset(name):
    ref = importlib.resources.files("dyntopic.assets").joinpath(name)
    return ref.read_text(encoding="utf-8")


def _load_wordlist(name):
    words = set()
    for line in _read_asset(name).splitlines():
        line = line.strip()
        if line and not line.startswith("#"):
            words.add(line)
    return words


def default_stopwords():
    """English stopwords plus platform noise terms (https, amp, ...)."""
    return _load_wordlist("english_stopwords.txt") | _load_wordlist(
        "stopword_extensions.txt"
    )


_STOPWORDS = None


def _stopwords(stopwords=None):
    global _STOPWORDS
    if stopwords is not None:
        return stopwords
    if _STOPWORDS is None:
        _STOPWORDS = frozenset(default_stopwords())
    return _STOPWORDS


def tokenize(text):
    """Lowercased word tokens of at least two word characters."""
    return _TOKEN_RE.findall(text.lower())


def _token_passes_pandemic_filter(token):
    for stem in _PANDEMIC_STEMS:
        start = 0
        while True:
            i = token.find(stem, start)
            if i < 0:
                break
            j = i + len(stem)
            if j >= len(token) or token[j] != "e":
                return False
            start = i + 1
    return True


def ngrams(tokens, orders=(1, 2)):
    """Unigrams and space-joined bigrams over a token sequence."""
    terms = []
    if 1 in orders:
        terms.extend(tokens)
    if 2 in orders:
        terms.extend(
            "%s %s" % (a, b) for a, b in zip(tokens, tokens[1:])
        )
    return terms


def filter_terms(terms, stopwords=None):
    """Drop stopwords, all-symbol terms and pandemic-name variants.

    A term survives when it has at least one alphabetic character, is
    not itself a stopword, and every whitespace-separated token keeps
    the letter "e" right after each occurrence of "cov" or "coron"
    (so "coverage" and "recover" stay while "covid" and "coronavirus"
    leave).
    """
    stop = _stopwords(stopwords)
    kept = []
    for term in terms:
        if term in stop:
            continue
        if not any(ch.isalpha() for ch in term):
            continue
        if all(_token_passes_pandemic_filter(tok) for tok in term.split()):
            kept.append(term)
    return kept


def document_terms(text, stopwords=None):
    """Full per-document pipeline: tokenize, drop stopwords, form
    bigrams over the surviving tokens, then apply the term filter."""
    stop = _stopwords(stopwords)
    tokens = [t for t in tokenize(text) if t not in stop]
    return filter_terms(ngrams(tokens), stopwords=stop)


@dataclass
class Vocabulary:
    """An alphabetical term list frozen together with the corpus-level
    document frequencies and document count that define its idf."""

    terms: list[str]
    document_frequencies: np.ndarray
    n_docs: int
    index: dict = field(init=False, repr=False)

    def __post_init__(self):
        self.terms = list(self.terms)
        self.document_frequencies = np.asarray(
            self.document_frequencies, dtype=np.int64
        )
        if list(self.terms) != sorted(set(self.terms)):
            raise ValueError("vocabulary terms must be unique and sorted")
        if self.document_frequencies.shape != (len(self.terms),):
            raise ValueError("document_frequencies misaligned with terms")
        if self.n_docs < int(self.document_frequencies.max(initial=0)):
            raise ValueError("n_docs smaller than a document frequency")
        self.index = {t: i for i, t in enumerate(self.terms)}

    def __len__(self):
        return len(self.terms)

    def idf(self):
        """Smoothed inverse document frequency: ln((1+N)/(1+df)) + 1."""
        df = self.document_frequencies.astype(np.float64)
        return np.log((1.0 + self.n_docs) / (1.0 + df)) + 1.0


def build_vocab(source, cap=5000, stopwords=None):
    """Collect the vocabulary of a corpus.

    ``source`` is a Corpus or an iterable of documents. When more than
    ``cap`` distinct terms appear, the ``cap`` most document-frequent
    are kept, ties resolved alphabetically, and the final list is
    re-sorted alphabetically.
    """
    if cap < 1:
        raise ValueError("cap must be >= 1")
    stop = _stopwords(stopwords)
    docs = source.documents() if isinstance(source, Corpus) else source
    df = Counter()
    n_docs = 0
    for doc in docs:
        n_docs += 1
        df.update(set(document_terms(doc.text, stopwords=stop)))
    if not df:
        raise ValueError("empty vocabulary")
    if len(df) > cap:
        ranked = sorted(df.items(), key=lambda kv: (-kv[1], kv[0]))[:cap]
    else:
        ranked = df.items()
    terms = sorted(t for t, _ in ranked)
    freqs = np.array([df[t] for t in terms], dtype=np.int64)
    return Vocabulary(terms=terms, document_frequencies=freqs, n_docs=n_docs)


def _documents_of(source):
    if isinstance(source, DaySlice):
        return list(source.documents)
    if isinstance(source, Corpus):
        return list(source.documents())
    return list(source)


def tfidf_matrix(source, vocab, stopwords=None):
    """Terms-by-documents TF-IDF matrix with unit-norm columns.

    Raw in-vocabulary counts are scaled by the vocabulary's frozen idf
    and each column is divided by its Euclidean norm; documents with no
    in-vocabulary terms stay all-zero.
    """
    docs = _documents_of(source)
    n = len(vocab)
    out = np.zeros((n, len(docs)), dtype=np.float64)
    idf = vocab.idf()
    for j, doc in enumerate(docs):
        counts = Counter(document_terms(doc.text, stopwords=stopwords))
        for term, count in counts.items():
            i = vocab.index.get(term)
            if i is not None:
                out[i, j] = count * idf[i]
    norms = np.linalg.norm(out, axis=0)
    norms[norms == 0.0] = 1.0
    return out / norms


@dataclass
class TermTensor:
    """A (days, terms, documents) nonnegative array with padding flags.

    ``padding[t, j]`` is True when document slot ``j`` on day ``t`` is
    a zero-filled filler column rather than a real document; short days
    are padded on the right so every day occupies the same slot count.
    """

    values: np.ndarray
    padding: np.ndarray
    dates: list = None

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        self.padding = np.asarray(self.padding, dtype=bool)
        if self.values.ndim != 3:
            raise ValueError("tensor must have 3 axes (days, terms, documents)")
        t, _, l = self.values.shape
        if self.padding.shape != (t, l):
            raise ValueError("padding flags misaligned with tensor")

    @property
    def dims(self):
        return self.values.shape


def build_tensor(corpus, vocab, docs_per_day=None, stopwords=None):
    """Stack per-day TF-IDF matrices into a days-by-terms-by-docs tensor.

    Days longer than ``docs_per_day`` keep their most-engaged documents;
    shorter days are padded with zero columns and flagged. With
    ``docs_per_day`` omitted, the longest day sets the slot count.
    """
    lengths = [len(s) for s in corpus.slices]
    if docs_per_day is None:
        docs_per_day = max(lengths, default=0)
    if docs_per_day < 1:
        raise ValueError("docs_per_day must be >= 1")
    t_days = corpus.n_days
    values = np.zeros((t_days, len(vocab), docs_per_day), dtype=np.float64)
    padding = np.zeros((t_days, docs_per_day), dtype=bool)
    for t, day in enumerate(corpus.slices):
        if len(day) > docs_per_day:
            day = top_k(day, docs_per_day)
        cols = tfidf_matrix(day, vocab, stopwords=stopwords)
        values[t, :, : cols.shape[1]] = cols
        padding[t, cols.shape[1] :] = True
    dates = [d.isoformat() for d in corpus.dates()]
    return TermTensor(values=values, padding=padding, dates=dates)


def save_vocabulary(vocab, path):
    """Write ``term<TAB>document_frequency`` lines in alphabetical order."""
    with open(path, "w", encoding="utf-8", newline="") as f:
        for term, freq in zip(vocab.terms, vocab.document_frequencies):
            f.write("%s\t%d\n" % (term, freq))
    return path


def load_vocabulary(path, n_docs):
    """Read a vocabulary file written by :func:`save_vocabulary`.

    The document count is not part of the file format, so the caller
    must supply the ``n_docs`` the vocabulary was built with for idf
    values to round-trip.
    """
    terms = []
    freqs = []
    with open(path, "r", encoding="utf-8") as f:
        for line_number, line in enumerate(f, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise ValueError(
                    "%s:%d: expected 'term<TAB>count'" % (path, line_number)
                )
            terms.append(parts[0])
            freqs.append(int(parts[1]))
    return Vocabulary(
        terms=terms,
        document_frequencies=np.array(freqs, dtype=np.int64),
        n_docs=n_docs,
    )


def _tensor_values(tensor):
    return tensor.values if isinstance(tensor, TermTensor) else np.asarray(tensor)


def save_tensor(tensor, path):
    """Write the dense binary tensor format.

    Layout: an 8-byte magic string, three little-endian int64 axis
    sizes (days, terms, documents), then the float64 values in C order.
    """
    values = np.ascontiguousarray(_tensor_values(tensor), dtype="<f8")
    if values.ndim != 3:
        raise ValueError("tensor must have 3 axes")
    with open(path, "wb") as f:
        f.write(TENSOR_MAGIC)
        f.write(np.asarray(values.shape, dtype="<i8").tobytes())
        f.write(values.tobytes())
    return path


def load_tensor(path):
    """Read the binary tensor format back into a :class:`TermTensor`.

    Padding flags are not stored on disk; all-zero document columns
    are flagged as padding on load, which matches how padded tensors
    are written and treats genuinely empty documents the same way the
    factorizations do.
    """
    with open(path, "rb") as f:
        magic = f.read(len(TENSOR_MAGIC))
        if magic != TENSOR_MAGIC:
            raise ValueError("%s: not a tensor file (bad magic)" % path)
        dims = np.frombuffer(f.read(24), dtype="<i8")
        if dims.size != 3 or (dims < 0).any():
            raise ValueError("%s: corrupt header" % path)
        expected = int(dims[0] * dims[1] * dims[2])
        payload = f.read()
    values = np.frombuffer(payload, dtype="<f8")
    if values.size != expected:
        raise ValueError(
            "%s: expected %d values, found %d" % (path, expected, values.size)
        )
    values = values.reshape(tuple(int(d) for d in dims)).copy()
    padding = ~values.any(axis=1)
    return TermTensor(values=values, padding=padding)


def save_tensor_triplets(tensor, path):
    """Write nonzero entries as ``t,i,j,value`` CSV rows (with header)."""
    values = _tensor_values(tensor)
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(["t", "i", "j", "value"])
        for t, i, j in zip(*np.nonzero(values)):
            writer.writerow(
                [int(t), int(i), int(j), "%.17g" % values[t, i, j]]
            )
    return path


def load_tensor_triplets(path, dims=None):
    """Read a triplet CSV back into a :class:`TermTensor`.

    ``dims`` pins the axis sizes; without it they are inferred as one
    past the largest index seen on each axis, which loses trailing
    all-zero days, terms or slots.
    """
    entries = []
    with open(path, "r", encoding="utf-8", newline="") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header != ["t", "i", "j", "value"]:
            raise ValueError("%s: expected header t,i,j,value" % path)
        for row in reader:
            if not row:
                continue
            if len(row) != 4:
                raise ValueError("%s: malformed row %r" % (path, row))
            entries.append(
                (int(row[0]), int(row[1]), int(row[2]), float(row[3]))
            )
    if dims is None:
        if not entries:
            raise ValueError("cannot infer dims from an empty triplet file")
        dims = tuple(max(e[axis] for e in entries) + 1 for axis in range(3))
    values = np.zeros(tuple(int(d) for d in dims), dtype=np.float64)
    for t, i, j, v in entries:
        values[t, i, j] = v
    padding = ~values.any(axis=1)
    return TermTensor(values=values, padding=padding)
