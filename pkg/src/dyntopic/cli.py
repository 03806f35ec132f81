"""Command line front end for the dynamic topic pipeline.

The subcommands chain into a pipeline: ``ingest`` cleans a JSON-Lines
dump into a canonical corpus, ``vectorize`` builds the vocabulary and
the days-by-terms-by-documents tensor, ``fit`` learns one of the four
factorization models, and ``summarize`` / ``render`` turn a fitted
model into keyword sheets and prevalence heatmaps. ``synth`` generates
planted-topic tensors for calibration runs and ``bench`` executes the
built-in verification suite.

Every pipeline command prints a JSON manifest on stdout holding the
resolved configuration, the output paths, and the phase timings under
an isolated ``timings`` key (so two manifests from identical runs
differ only there), and writes the same manifest into the output
directory. Exit codes: 0 success, 1 pipeline failure, 2 bad command
line or config file.
"""

import argparse
import datetime as dt
import json
import math
import os
import sys
import time
import warnings
from dataclasses import dataclass

import numpy as np

from .corpus import parse_documents, slice_by_day, subsample_corpus
from .ncpd import fit_ncpd, load_cp_model, save_cp_model, temporal_prevalence
from .nmf import fit_nmf, load_nmf_model, save_nmf_model
from .online_ncpd import TensorStream, as_cp_model, fit_oncpd
from .online_nmf import MinibatchPlan, fit_onmf, sequential_onmf
from .synth import PlantedSpec, PlantedTopic, gen_planted
from .tensor_core import SolverConfig, load_matrix_csv, save_matrix_csv
from .topics import (
    daily_prevalence,
    export_heatmap,
    export_keywords,
    summarize_model,
)
from .vectorizer import (
    build_tensor,
    build_vocab,
    load_tensor,
    load_vocabulary,
    save_tensor,
    save_vocabulary,
)

MODELS = ("nmf", "onmf", "ncpd", "oncpd")


@dataclass
class RunConfig:
    """Resolved pipeline knobs, echoed verbatim into run manifests."""

    input: str = None
    span: str = None
    top_k: int = 1000
    cap: int = 5000
    model: str = "nmf"
    rank: int = 20
    beta: float = 0.7
    lam: float = 1.0
    batch: int = 50
    inner: int = 100
    count: int = 50
    width: int = 100
    seed: int = 0
    output: str = None

    def __post_init__(self):
        if self.model not in MODELS:
            raise ValueError("model must be one of %s" % (MODELS,))
        for name in ("top_k", "cap", "rank", "batch", "inner", "count", "width"):
            if getattr(self, name) < 1:
                raise ValueError("%s must be >= 1" % name)
        if not 0.0 <= self.beta <= 1.0:
            raise ValueError("beta must lie in [0, 1]")
        if self.lam < 0.0:
            raise ValueError("lambda must be >= 0")

    def echo(self, *fields):
        """Dict of the named fields; ``lam`` is spelled ``lambda``."""
        out = {}
        for name in fields:
            out["lambda" if name == "lam" else name] = getattr(self, name)
        return out


def _parse_span(text):
    start, sep, end = text.partition(":")
    if not sep:
        raise ValueError("span must look like YYYY-MM-DD:YYYY-MM-DD")
    return dt.date.fromisoformat(start), dt.date.fromisoformat(end)


def _emit(manifest, output_dir=None):
    """Print the manifest and mirror it into the output directory."""
    text = json.dumps(manifest, indent=2, sort_keys=True)
    if output_dir is not None:
        os.makedirs(output_dir, exist_ok=True)
        path = os.path.join(output_dir, "manifest.json")
        with open(path, "w", encoding="utf-8", newline="\n") as f:
            f.write(text + "\n")
    print(text)


def _cmd_ingest(args):
    t0 = time.perf_counter()
    if args.input == "-":
        result = parse_documents(sys.stdin, strict=args.strict)
    else:
        with open(args.input, "r", encoding="utf-8") as f:
            result = parse_documents(f, strict=args.strict)
    if args.span:
        span = _parse_span(args.span)
    elif result.documents:
        dates = [d.date for d in result.documents]
        span = (min(dates), max(dates))
    else:
        raise ValueError("no parseable documents and no --span given")
    corpus = subsample_corpus(slice_by_day(result.documents, span), args.top_k)
    read_s = time.perf_counter() - t0

    t1 = time.perf_counter()
    os.makedirs(args.output, exist_ok=True)
    out_path = os.path.join(args.output, "corpus.jsonl")
    kept = 0
    with open(out_path, "w", encoding="utf-8", newline="\n") as f:
        for doc in corpus.documents():
            record = {
                "id": doc.id,
                "date": doc.date.isoformat(),
                "text": doc.text,
                "retweets": doc.engagement,
            }
            f.write(json.dumps(record, sort_keys=True) + "\n")
            kept += 1
    write_s = time.perf_counter() - t1

    cfg = RunConfig(
        input=args.input,
        span="%s:%s" % span,
        top_k=args.top_k,
        output=args.output,
    )
    _emit(
        {
            "command": "ingest",
            "config": dict(
                cfg.echo("input", "span", "top_k", "output"),
                strict=args.strict,
            ),
            "counts": {
                "parsed": len(result.documents),
                "rejected_lines": len(result.errors),
                "dropped_outside_span": corpus.dropped,
                "days": corpus.n_days,
                "kept": kept,
            },
            "issues": [
                {"line": e.line_number, "reason": e.reason}
                for e in result.errors[:20]
            ],
            "outputs": {"corpus": out_path},
            "timings": {"read_s": read_s, "write_s": write_s},
        },
        args.output,
    )
    return 0


def _cmd_vectorize(args):
    t0 = time.perf_counter()
    corpus_path = args.input
    span = _parse_span(args.span) if args.span else None
    if os.path.isdir(corpus_path):
        # An ingest output directory: reuse its recorded span so empty
        # edge days survive the round trip.
        manifest_path = os.path.join(corpus_path, "manifest.json")
        if span is None and os.path.exists(manifest_path):
            with open(manifest_path, "r", encoding="utf-8") as f:
                stored = json.load(f).get("config", {}).get("span")
            if stored:
                span = _parse_span(stored)
        corpus_path = os.path.join(corpus_path, "corpus.jsonl")
    with open(corpus_path, "r", encoding="utf-8") as f:
        result = parse_documents(f, strict=True)
    if not result.documents:
        raise ValueError("%s holds no documents" % corpus_path)
    if span is None:
        dates = [d.date for d in result.documents]
        span = (min(dates), max(dates))
    corpus = slice_by_day(result.documents, span)
    vocab = build_vocab(corpus, cap=args.cap)
    tensor = build_tensor(corpus, vocab, docs_per_day=args.docs_per_day)
    build_s = time.perf_counter() - t0

    t1 = time.perf_counter()
    os.makedirs(args.output, exist_ok=True)
    tensor_path = os.path.join(args.output, "tensor.bin")
    vocab_path = os.path.join(args.output, "vocab.tsv")
    days_path = os.path.join(args.output, "days.txt")
    save_tensor(tensor, tensor_path)
    save_vocabulary(vocab, vocab_path)
    with open(days_path, "w", encoding="utf-8", newline="\n") as f:
        for day in tensor.dates:
            f.write(day + "\n")
    write_s = time.perf_counter() - t1

    cfg = RunConfig(
        input=args.input,
        span="%s:%s" % span,
        cap=args.cap,
        output=args.output,
    )
    _emit(
        {
            "command": "vectorize",
            "config": dict(
                cfg.echo("input", "span", "cap", "output"),
                docs_per_day=args.docs_per_day,
            ),
            "dims": list(tensor.dims),
            "vocabulary": {"terms": len(vocab), "n_docs": vocab.n_docs},
            "outputs": {
                "tensor": tensor_path,
                "vocabulary": vocab_path,
                "days": days_path,
            },
            "timings": {"build_s": build_s, "write_s": write_s},
        },
        args.output,
    )
    return 0


def _load_fit_tensor(path):
    if os.path.isdir(path):
        candidate = os.path.join(path, "tensor.bin")
        if not os.path.exists(candidate):
            raise FileNotFoundError("%s contains no tensor.bin" % path)
        path = candidate
    return load_tensor(path)


def _write_codes(codes, directory):
    os.makedirs(directory, exist_ok=True)
    for t, h in enumerate(codes, start=1):
        save_matrix_csv(np.asarray(h), os.path.join(directory, "day_%03d.csv" % t))


def _parse_checkpoints(text):
    if not text:
        return []
    return [int(tok) for tok in text.split(",") if tok.strip()]


def _fit_nmf(args, tensor):
    config = SolverConfig(
        max_iterations=args.iterations or 500,
        tolerance=args.tolerance or 1e-5,
        seed=args.seed,
    )
    n_days = tensor.dims[0]
    real = [tensor.values[t][:, ~tensor.padding[t]] for t in range(n_days)]
    counts = [r.shape[1] for r in real]
    if sum(counts) == 0:
        raise ValueError("tensor holds no documents to factorize")
    model = fit_nmf(np.hstack(real), args.rank, config)

    def write(out):
        save_nmf_model(model, out)
        codes = []
        offset = 0
        for c in counts:
            codes.append(model.h[:, offset : offset + c])
            offset += c
        _write_codes(codes, os.path.join(out, "codes"))

    return model.final_objective, write


def _fit_onmf(args, tensor):
    if int((~tensor.padding).sum()) == 0:
        raise ValueError("tensor holds no documents to factorize")
    plan = MinibatchPlan(
        batch_size=args.batch, inner_iterations=args.inner, seed=args.seed
    )
    schedule = _parse_checkpoints(args.checkpoints)
    n_days = tensor.dims[0]
    snapshots = []
    if schedule:
        segments = sequential_onmf(
            tensor, args.rank, schedule,
            beta=args.beta, plan=plan, decay_per=args.decay_per,
        )
        w = segments[-1][0]
        codes = [h for _w, seg in segments for h in seg]
        bounds = list(schedule)
        if bounds[-1] != n_days:
            bounds.append(n_days)
        snapshots = list(zip(bounds, (s[0] for s in segments)))
    else:
        w, codes = fit_onmf(
            tensor, args.rank, beta=args.beta, plan=plan, decay_per=args.decay_per
        )

    resid = 0.0
    for t in range(n_days):
        x = tensor.values[t][:, ~tensor.padding[t]]
        if x.shape[1]:
            d = x - w @ codes[t]
            resid += float(np.sum(d * d))
    objective = math.sqrt(resid)

    def write(out):
        os.makedirs(out, exist_ok=True)
        save_matrix_csv(w, os.path.join(out, "W.csv"))
        save_matrix_csv(np.hstack(codes), os.path.join(out, "H.csv"))
        meta = {
            "kind": "onmf",
            "rank": int(args.rank),
            "seed": int(args.seed),
            "beta": float(args.beta),
            "final_objective": float(objective),
        }
        with open(os.path.join(out, "meta.json"), "w", encoding="utf-8") as f:
            json.dump(meta, f, indent=2, sort_keys=True)
            f.write("\n")
        _write_codes(codes, os.path.join(out, "codes"))
        for day, w_snap in snapshots:
            snap_dir = os.path.join(out, "snapshots", "day_%03d" % day)
            os.makedirs(snap_dir, exist_ok=True)
            save_matrix_csv(w_snap, os.path.join(snap_dir, "W.csv"))

    return objective, write


def _fit_ncpd(args, tensor):
    config = SolverConfig(
        max_iterations=args.iterations or 2000,
        tolerance=args.tolerance or 1e-6,
        seed=args.seed,
    )
    model = fit_ncpd(tensor, args.rank, config)
    return model.final_objective, lambda out: save_cp_model(model, out)


def _fit_oncpd(args, tensor):
    slots = tensor.dims[2]
    width = min(args.width, slots)
    stream = TensorStream.from_tensor(
        tensor.values, width, args.count, seed=args.seed
    )
    state = fit_oncpd(
        stream, args.rank, beta=args.beta, lam=args.lam, seed=args.seed
    )
    model = as_cp_model(state)
    return (
        model.final_objective,
        lambda out: save_cp_model(model, out, kind="oncpd"),
    )


_FITTERS = {
    "nmf": _fit_nmf,
    "onmf": _fit_onmf,
    "ncpd": _fit_ncpd,
    "oncpd": _fit_oncpd,
}


def _cmd_fit(args):
    t0 = time.perf_counter()
    # Range-check the knobs before any expensive work starts.
    cfg = RunConfig(
        input=args.input,
        model=args.model,
        rank=args.rank,
        beta=args.beta,
        lam=args.lam,
        batch=args.batch,
        inner=args.inner,
        count=args.count,
        width=args.width,
        seed=args.seed,
        output=args.output,
    )
    tensor = _load_fit_tensor(args.input)
    load_s = time.perf_counter() - t0

    t1 = time.perf_counter()
    objective, write = _FITTERS[args.model](args, tensor)
    fit_s = time.perf_counter() - t1

    t2 = time.perf_counter()
    write(args.output)
    write_s = time.perf_counter() - t2

    config_echo = cfg.echo(
        "input", "model", "rank", "beta", "lam",
        "batch", "inner", "count", "width", "seed", "output",
    )
    config_echo["iterations"] = args.iterations
    config_echo["tolerance"] = args.tolerance
    config_echo["checkpoints"] = args.checkpoints
    config_echo["decay_per"] = args.decay_per
    _emit(
        {
            "command": "fit",
            "config": config_echo,
            "dims": list(tensor.dims),
            "final_objective": float(objective),
            "outputs": {"model_dir": args.output},
            "timings": {"load_s": load_s, "fit_s": fit_s, "write_s": write_s},
        },
        args.output,
    )
    return 0


def _model_kind(directory):
    with open(os.path.join(directory, "meta.json"), "r", encoding="utf-8") as f:
        kind = json.load(f).get("kind")
    if kind not in MODELS:
        raise ValueError("%s is not a model directory" % directory)
    return kind


def _load_model_dir(directory):
    if _model_kind(directory) in ("nmf", "onmf"):
        return load_nmf_model(directory)
    return load_cp_model(directory)


def _load_vectors_vocab(directory):
    manifest_path = os.path.join(directory, "manifest.json")
    if not os.path.exists(manifest_path):
        raise FileNotFoundError(
            "%s has no manifest.json (need it for the document count)"
            % directory
        )
    with open(manifest_path, "r", encoding="utf-8") as f:
        n_docs = json.load(f)["vocabulary"]["n_docs"]
    return load_vocabulary(os.path.join(directory, "vocab.tsv"), n_docs)


def _cmd_summarize(args):
    t0 = time.perf_counter()
    model = _load_model_dir(args.input)
    vocab = _load_vectors_vocab(args.vectors)
    load_s = time.perf_counter() - t0

    t1 = time.perf_counter()
    out_path = export_keywords(model, vocab, args.terms, args.output)
    write_s = time.perf_counter() - t1

    cfg = RunConfig(input=args.input, output=args.output)
    config_echo = cfg.echo("input", "output")
    config_echo["vectors"] = args.vectors
    config_echo["terms"] = args.terms
    _emit(
        {
            "command": "summarize",
            "config": config_echo,
            "topics": int(model.rank),
            "outputs": {"keywords": out_path},
            "timings": {"load_s": load_s, "write_s": write_s},
        },
        args.output,
    )
    return 0


def _read_codes(directory, rank):
    if not os.path.isdir(directory):
        raise FileNotFoundError(
            "%s missing; matrix models are rendered from their per-day codes"
            % directory
        )
    codes = []
    for name in sorted(os.listdir(directory)):
        if not name.endswith(".csv"):
            continue
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")  # empty days load as no data
            arr = load_matrix_csv(os.path.join(directory, name))
        if arr.size == 0:
            arr = np.zeros((rank, 0))
        codes.append(arr)
    if not codes:
        raise ValueError("%s holds no code files" % directory)
    return codes


def _read_days(directory):
    path = os.path.join(directory, "days.txt")
    if not os.path.exists(path):
        return None
    with open(path, "r", encoding="utf-8") as f:
        return [line.strip() for line in f if line.strip()]


def _cmd_render(args):
    t0 = time.perf_counter()
    kind = _model_kind(args.input)
    if kind in ("nmf", "onmf"):
        model = load_nmf_model(args.input)
        codes = _read_codes(os.path.join(args.input, "codes"), model.rank)
        prevalence = daily_prevalence(codes)
    else:
        model = load_cp_model(args.input)
        prevalence = temporal_prevalence(model)
    dates = None
    if args.vectors:
        vocab = _load_vectors_vocab(args.vectors)
        labels = summarize_model(model, vocab, max(args.terms, 1))
        dates = _read_days(args.vectors)
    else:
        labels = ["topic_%d" % (r + 1) for r in range(model.rank)]
    load_s = time.perf_counter() - t0

    t1 = time.perf_counter()
    csv_path, svg_path = export_heatmap(
        prevalence, labels, args.output, dates=dates
    )
    write_s = time.perf_counter() - t1

    cfg = RunConfig(input=args.input, output=args.output)
    config_echo = cfg.echo("input", "output")
    config_echo["vectors"] = args.vectors
    config_echo["terms"] = args.terms
    _emit(
        {
            "command": "render",
            "config": config_echo,
            "model_kind": kind,
            "outputs": {"heatmap_csv": csv_path, "heatmap_svg": svg_path},
            "timings": {"load_s": load_s, "write_s": write_s},
        },
        args.output,
    )
    return 0


_PROFILE_SHAPES = (
    lambda n: np.ones(n),
    lambda n: np.linspace(0.5, 1.5, n),
    lambda n: np.linspace(1.5, 0.5, n),
)


def _cmd_synth(args):
    t0 = time.perf_counter()
    n_topics = args.topics + (1 if args.pulse else 0)
    if n_topics < 1:
        raise ValueError("need at least one topic (use --topics or --pulse)")
    block = args.terms // n_topics
    if block < 1:
        raise ValueError("need at least one term per topic")
    topics = []
    for k in range(args.topics):
        dist = np.zeros(args.terms)
        dist[k * block : (k + 1) * block] = 1.0 / block
        profile = args.amplitude * _PROFILE_SHAPES[k % 3](args.days)
        topics.append(PlantedTopic(term_dist=dist, profile=profile))
    pulse_span = None
    if args.pulse:
        first, sep, last = args.pulse.partition(":")
        if not sep:
            raise ValueError("pulse must look like FIRST:LAST (1-based days)")
        first, last = int(first), int(last)
        if not 1 <= first <= last <= args.days:
            raise ValueError(
                "pulse days must satisfy 1 <= first <= last <= %d" % args.days
            )
        pulse_span = (first, last)
        amp = args.pulse_amplitude
        if amp is None:
            amp = 1.2 * args.amplitude
        dist = np.zeros(args.terms)
        dist[args.topics * block : (args.topics + 1) * block] = 1.0 / block
        profile = np.zeros(args.days)
        profile[first - 1 : last] = amp
        topics.append(PlantedTopic(term_dist=dist, profile=profile))
    spec = PlantedSpec(
        n_days=args.days,
        n_terms=args.terms,
        docs_per_day=args.docs,
        topics=topics,
        noise_level=args.noise,
        seed=args.seed,
    )
    tensor = gen_planted(spec)
    build_s = time.perf_counter() - t0

    t1 = time.perf_counter()
    os.makedirs(args.output, exist_ok=True)
    tensor_path = os.path.join(args.output, "tensor.bin")
    save_tensor(tensor, tensor_path)
    truth_dir = os.path.join(args.output, "truth")
    os.makedirs(truth_dir, exist_ok=True)
    profiles_path = os.path.join(truth_dir, "profiles.csv")
    dists_path = os.path.join(truth_dir, "term_dists.csv")
    save_matrix_csv(
        np.stack([t.profile for t in topics], axis=1), profiles_path
    )
    save_matrix_csv(
        np.stack([t.term_dist for t in topics], axis=1), dists_path
    )
    write_s = time.perf_counter() - t1

    cfg = RunConfig(seed=args.seed, output=args.output)
    config_echo = cfg.echo("seed", "output")
    config_echo.update(
        days=args.days,
        terms=args.terms,
        docs=args.docs,
        topics=args.topics,
        pulse=args.pulse,
        amplitude=args.amplitude,
        pulse_amplitude=args.pulse_amplitude,
        noise=args.noise,
    )
    _emit(
        {
            "command": "synth",
            "config": config_echo,
            "dims": list(tensor.dims),
            "planted_topics": len(topics),
            "pulse_span": list(pulse_span) if pulse_span else None,
            "outputs": {
                "tensor": tensor_path,
                "profiles": profiles_path,
                "term_dists": dists_path,
            },
            "timings": {"build_s": build_s, "write_s": write_s},
        },
        args.output,
    )
    return 0


def _cmd_bench(args):
    from . import acceptance

    if args.list:
        for name, _fn in acceptance.ALL_CHECKS:
            print(name)
        return 0
    names = None
    if args.only:
        names = [tok.strip() for tok in args.only.split(",") if tok.strip()]
        known = {name for name, _fn in acceptance.ALL_CHECKS}
        unknown = sorted(set(names) - known)
        if unknown:
            raise ValueError("unknown checks: %s" % ", ".join(unknown))
    results = acceptance.run_all(names)
    for res in results:
        print(res.line())
    passed = sum(1 for r in results if r.passed)
    print("%d/%d checks passed" % (passed, len(results)))
    return 0 if passed == len(results) else 1


def _read_config_file(path):
    """Parse a flat ``key=value`` file; ``#`` starts a comment line."""
    values = {}
    with open(path, "r", encoding="utf-8") as f:
        for number, raw in enumerate(f, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            key, sep, value = line.partition("=")
            if not sep or not key.strip():
                raise ValueError(
                    "%s:%d: expected key=value, got %r" % (path, number, line)
                )
            values[key.strip().lower().replace("-", "_")] = value.strip()
    return values


_CONFIG_DEST = {"lambda": "lam"}  # the flag is --lambda, the attr is lam

_TRUE_WORDS = ("1", "true", "yes", "on")
_FALSE_WORDS = ("0", "false", "no", "off")


def _convert_config_value(action, raw, sub, key):
    if isinstance(action, argparse._StoreTrueAction):
        low = raw.lower()
        if low in _TRUE_WORDS:
            return True
        if low in _FALSE_WORDS:
            return False
        sub.error("config key %s expects a boolean, got %r" % (key, raw))
    if action.choices and raw not in action.choices:
        sub.error(
            "config key %s must be one of %s" % (key, ", ".join(action.choices))
        )
    if action.type is not None:
        try:
            return action.type(raw)
        except (TypeError, ValueError):
            sub.error("config key %s rejects value %r" % (key, raw))
    return raw


def _apply_config(sub, values):
    """Turn config entries into the subparser's defaults.

    Rewriting the action defaults (not the namespace: subparsers parse
    into a fresh namespace and would clobber preloaded attributes)
    makes config values beat built-in defaults while explicit flags
    still beat both.
    """
    actions = {
        action.dest: action
        for action in sub._actions
        if action.dest not in ("help", "config")
    }
    for key, raw in values.items():
        dest = _CONFIG_DEST.get(key, key)
        action = actions.get(dest)
        if action is None:
            sub.error("unknown config key: %s" % key)
        action.default = _convert_config_value(action, raw, sub, key)


def build_parser():
    """The argument parser plus a name-to-subparser map."""
    parser = argparse.ArgumentParser(
        prog="dyntopic",
        description="Dynamic topic models over timestamped short documents.",
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument(
        "--config",
        metavar="FILE",
        help="flat key=value defaults; explicit flags win",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    subparsers = {}

    p = sub.add_parser(
        "ingest", parents=[common],
        help="clean a JSON-Lines dump into a canonical day-sliced corpus",
    )
    p.add_argument("--input", help="JSON-Lines file, or - for stdin")
    p.add_argument("--span", help="inclusive date span START:END (default: data extent)")
    p.add_argument(
        "--top-k", type=int, default=1000,
        help="most-engaged documents kept per day (default 1000)",
    )
    p.add_argument("--strict", action="store_true", help="abort on the first malformed line")
    p.add_argument("--output", help="output directory")
    p.set_defaults(handler=_cmd_ingest, required_keys=("input", "output"))
    subparsers["ingest"] = p

    p = sub.add_parser(
        "vectorize", parents=[common],
        help="build the vocabulary and the days-by-terms-by-docs tensor",
    )
    p.add_argument("--input", help="ingest output directory or a JSON-Lines file")
    p.add_argument("--span", help="inclusive date span START:END")
    p.add_argument(
        "--cap", type=int, default=5000,
        help="vocabulary size cap (default 5000)",
    )
    p.add_argument(
        "--docs-per-day", type=int, default=None,
        help="document slots per day (default: longest day)",
    )
    p.add_argument("--output", help="output directory")
    p.set_defaults(handler=_cmd_vectorize, required_keys=("input", "output"))
    subparsers["vectorize"] = p

    p = sub.add_parser(
        "fit", parents=[common], help="factorize a tensor with one of the four models",
    )
    p.add_argument("--input", help="vectorize output directory or a tensor file")
    p.add_argument("--model", choices=MODELS, help="factorization method")
    p.add_argument("--rank", type=int, default=20, help="number of topics (default 20)")
    p.add_argument("--seed", type=int, default=0, help="RNG seed (default 0)")
    p.add_argument(
        "--iterations", type=int, default=None,
        help="batch iteration cap (default: method specific)",
    )
    p.add_argument(
        "--tolerance", type=float, default=None,
        help="batch stopping tolerance (default: method specific)",
    )
    p.add_argument("--beta", type=float, default=0.7, help="online decay exponent (default 0.7)")
    p.add_argument(
        "--lambda", dest="lam", type=float, default=1.0,
        help="online CP coding sparsity weight (default 1.0)",
    )
    p.add_argument("--batch", type=int, default=50, help="online NMF minibatch size (default 50)")
    p.add_argument(
        "--inner", type=int, default=100,
        help="online NMF minibatch passes per day (default 100)",
    )
    p.add_argument("--count", type=int, default=50, help="online CP subsample draws (default 50)")
    p.add_argument(
        "--width", type=int, default=100,
        help="online CP documents per draw (default 100, clipped to the tensor)",
    )
    p.add_argument(
        "--checkpoints",
        help="online NMF snapshot days, comma separated, 1-based",
    )
    p.add_argument(
        "--decay-per", choices=("step", "day"), default="step",
        help="clock behind the online NMF weights (default step)",
    )
    p.add_argument("--output", help="model output directory")
    p.set_defaults(handler=_cmd_fit, required_keys=("input", "model", "output"))
    subparsers["fit"] = p

    p = sub.add_parser(
        "summarize", parents=[common], help="write the top keywords of each topic",
    )
    p.add_argument("--input", help="model directory")
    p.add_argument("--vectors", help="vectorize output directory (for the vocabulary)")
    p.add_argument("--terms", type=int, default=10, help="keywords per topic (default 10)")
    p.add_argument("--output", help="output directory")
    p.set_defaults(
        handler=_cmd_summarize, required_keys=("input", "vectors", "output")
    )
    subparsers["summarize"] = p

    p = sub.add_parser(
        "render", parents=[common], help="write the topic prevalence heatmap",
    )
    p.add_argument("--input", help="model directory")
    p.add_argument(
        "--vectors",
        help="vectorize output directory; enables term labels and real dates",
    )
    p.add_argument("--terms", type=int, default=3, help="terms per row label (default 3)")
    p.add_argument("--output", help="output directory")
    p.set_defaults(handler=_cmd_render, required_keys=("input", "output"))
    subparsers["render"] = p

    p = sub.add_parser(
        "synth", parents=[common], help="generate a planted-topic tensor",
    )
    p.add_argument("--days", type=int, default=30, help="days (default 30)")
    p.add_argument("--terms", type=int, default=200, help="vocabulary size (default 200)")
    p.add_argument("--docs", type=int, default=50, help="documents per day (default 50)")
    p.add_argument(
        "--topics", type=int, default=3,
        help="persistent planted topics (default 3)",
    )
    p.add_argument(
        "--pulse", metavar="FIRST:LAST",
        help="add one pulse topic active on the given 1-based day span",
    )
    p.add_argument(
        "--amplitude", type=float, default=10.0,
        help="persistent profile amplitude (default 10)",
    )
    p.add_argument(
        "--pulse-amplitude", type=float, default=None,
        help="pulse profile amplitude (default: 1.2 x amplitude)",
    )
    p.add_argument("--noise", type=float, default=0.05, help="noise level (default 0.05)")
    p.add_argument("--seed", type=int, default=0, help="RNG seed (default 0)")
    p.add_argument("--output", help="output directory")
    p.set_defaults(handler=_cmd_synth, required_keys=("output",))
    subparsers["synth"] = p

    p = sub.add_parser(
        "bench", parents=[common], help="run the built-in verification suite",
    )
    p.add_argument("--only", help="comma separated check names (default: all)")
    p.add_argument("--list", action="store_true", help="list check names and exit")
    p.set_defaults(handler=_cmd_bench, required_keys=())
    subparsers["bench"] = p

    return parser, subparsers


def main(argv=None):
    argv = list(sys.argv[1:]) if argv is None else list(argv)
    parser, subparsers = build_parser()
    try:
        config_path = _scan_config(argv)
        if config_path:
            command = next((a for a in argv if not a.startswith("-")), None)
            sub = subparsers.get(command)
            if sub is None:
                parser.error("--config requires a known subcommand")
            try:
                values = _read_config_file(config_path)
            except OSError as exc:
                parser.error("cannot read config file: %s" % exc)
            except ValueError as exc:
                parser.error(str(exc))
            _apply_config(sub, values)
        args = parser.parse_args(argv)
        for key in args.required_keys:
            if getattr(args, key, None) is None:
                subparsers[args.command].error(
                    "--%s is required" % key.replace("_", "-")
                )
    except SystemExit as exc:
        code = exc.code
        if isinstance(code, int):
            return code
        return 0 if code is None else 2
    try:
        return args.handler(args)
    except BrokenPipeError:
        return 1
    except Exception as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 1


def _scan_config(argv):
    for i, token in enumerate(argv):
        if token == "--config":
            return argv[i + 1] if i + 1 < len(argv) else None
        if token.startswith("--config="):
            return token.split("=", 1)[1]
    return None


if __name__ == "__main__":
    sys.exit(main())
