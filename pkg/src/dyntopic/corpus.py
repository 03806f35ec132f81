"""Timestamped document ingestion, per-day slicing and engagement subsampling.

Input records are tweets in JSON-Lines form; each carries an id, an
ISO-8601 date (or full timestamp, truncated to its UTC day), the text
and a retweet count used as the engagement weight. Within a day,
documents are kept in engagement-descending order with ties broken by
id so every downstream ordering is deterministic.
"""

from __future__ import annotations

import datetime as dt
import json
from dataclasses import dataclass, field


@dataclass(frozen=True)
class Document:
    id: str
    date: dt.date
    text: str
    engagement: int

    def __post_init__(self):
        if not self.text.strip():
            raise ValueError("document text is empty")
        if self.engagement < 0:
            raise ValueError("negative engagement")


@dataclass(frozen=True)
class ParseIssue:
    """One rejected input line: its 1-based line number and the reason."""

    line_number: int
    reason: str


@dataclass
class ParseResult:
    documents: list[Document]
    errors: list[ParseIssue]


@dataclass(frozen=True)
class DaySlice:
    date: dt.date
    documents: tuple[Document, ...]

    def __post_init__(self):
        docs = tuple(
            sorted(self.documents, key=lambda d: (-d.engagement, d.id))
        )
        for d in docs:
            if d.date != self.date:
                raise ValueError(
                    "document %s dated %s placed in slice for %s"
                    % (d.id, d.date, self.date)
                )
        object.__setattr__(self, "documents", docs)

    def __len__(self):
        return len(self.documents)


@dataclass
class Corpus:
    slices: list[DaySlice]
    span: tuple[dt.date, dt.date]
    dropped: int = 0

    def __post_init__(self):
        start, end = self.span
        if start > end:
            raise ValueError("inverted span: %s > %s" % (start, end))
        expected = start
        for s in self.slices:
            if s.date != expected:
                raise ValueError(
                    "slices must cover consecutive days; expected %s, got %s"
                    % (expected, s.date)
                )
            expected += dt.timedelta(days=1)
        if expected != end + dt.timedelta(days=1):
            raise ValueError("slices do not cover the span")

    @property
    def n_days(self):
        return len(self.slices)

    def documents(self):
        """All documents in (day, within-day) order."""
        for s in self.slices:
            yield from s.documents

    def dates(self):
        return [s.date for s in self.slices]


def _coerce_date(value):
    s = str(value).strip()
    if s.endswith("Z"):
        s = s[:-1] + "+00:00"
    try:
        return dt.date.fromisoformat(s)
    except ValueError:
        pass
    stamp = dt.datetime.fromisoformat(s)
    if stamp.tzinfo is not None:
        stamp = stamp.astimezone(dt.timezone.utc)
    return stamp.date()


def parse_documents(stream, strict=False):
    """Parse JSON-Lines records into documents.

    Each line must be a JSON object with fields ``id``, ``date``,
    ``text`` and ``retweets``. Malformed lines become :class:`ParseIssue`
    records instead of aborting the run, unless ``strict`` is set, in
    which case the first bad line raises ValueError. Blank lines are
    ignored. Returns a :class:`ParseResult` with documents in input
    order.
    """
    documents = []
    errors = []
    for line_number, raw in enumerate(stream, start=1):
        if isinstance(raw, bytes):
            try:
                raw = raw.decode("utf-8")
            except UnicodeDecodeError:
                _record(errors, line_number, "invalid UTF-8", strict)
                continue
        if not raw.strip():
            continue
        try:
            record = json.loads(raw)
        except json.JSONDecodeError:
            _record(errors, line_number, "invalid JSON", strict)
            continue
        if not isinstance(record, dict):
            _record(errors, line_number, "record is not an object", strict)
            continue
        missing = [k for k in ("id", "date", "text", "retweets") if k not in record]
        if missing:
            _record(
                errors,
                line_number,
                "missing required field(s): %s" % ", ".join(missing),
                strict,
            )
            continue
        try:
            date = _coerce_date(record["date"])
        except (ValueError, TypeError):
            _record(errors, line_number, "unparseable date", strict)
            continue
        retweets = record["retweets"]
        if isinstance(retweets, bool) or not isinstance(retweets, int):
            _record(errors, line_number, "retweets is not an integer", strict)
            continue
        try:
            doc = Document(
                id=str(record["id"]),
                date=date,
                text=str(record["text"]),
                engagement=retweets,
            )
        except ValueError as exc:
            _record(errors, line_number, str(exc), strict)
            continue
        documents.append(doc)
    return ParseResult(documents=documents, errors=errors)


def _record(errors, line_number, reason, strict):
    if strict:
        raise ValueError("line %d: %s" % (line_number, reason))
    errors.append(ParseIssue(line_number=line_number, reason=reason))


def slice_by_day(docs, span):
    """Assign documents to calendar-day slices covering ``span``.

    ``span`` is an inclusive (start, end) date pair. Every day of the
    span gets a slice, possibly empty; documents dated outside the span
    are dropped and counted in ``Corpus.dropped``.
    """
    start, end = span
    if start > end:
        raise ValueError("inverted span: %s > %s" % (start, end))
    by_day = {}
    dropped = 0
    for doc in docs:
        if start <= doc.date <= end:
            by_day.setdefault(doc.date, []).append(doc)
        else:
            dropped += 1
    slices = []
    day = start
    while day <= end:
        slices.append(DaySlice(date=day, documents=tuple(by_day.get(day, ()))))
        day += dt.timedelta(days=1)
    return Corpus(slices=slices, span=(start, end), dropped=dropped)


def top_k(day_slice, k):
    """Keep the ``k`` most-engaged documents of a slice.

    Short slices are returned whole; the slice ordering (engagement
    descending, id ascending) makes the cut deterministic under ties.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    return DaySlice(date=day_slice.date, documents=day_slice.documents[:k])


def subsample_corpus(corpus, k):
    """Apply :func:`top_k` to every slice of a corpus."""
    return Corpus(
        slices=[top_k(s, k) for s in corpus.slices],
        span=corpus.span,
        dropped=corpus.dropped,
    )
