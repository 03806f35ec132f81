"""The command line pipeline, end to end, on a generated feed.

Every stage is the same `dyntopic` subcommand a shell user would run;
this script just feeds the argument vectors in-process and points at
the artifacts as they appear. Output lands under demos/_out/cli.
"""

import datetime as dt
import io
import json
import os
from contextlib import redirect_stdout

import numpy as np

from dyntopic import cli, read_heatmap_csv

out_root = os.path.join(os.path.dirname(__file__), "_out", "cli")
os.makedirs(out_root, exist_ok=True)


def run(*argv):
    print("$ dyntopic " + " ".join(argv))
    buf = io.StringIO()
    with redirect_stdout(buf):
        rc = cli.main(list(argv))
    manifest = json.loads(buf.getvalue()) if buf.getvalue().startswith("{") else None
    assert rc == 0, buf.getvalue()
    return manifest


# ------------------------------------------------------------ a raw feed
rng = np.random.default_rng(11)
themes = [
    ["masks on the bus", "wearing masks indoors", "masks in every shop"],
    ["vaccine trial news", "vaccine doses arriving", "second vaccine dose"],
    ["schools closed again", "remote school all term", "school gates shut"],
]
raw_path = os.path.join(out_root, "feed.jsonl")
start = dt.date(2020, 4, 1)
with open(raw_path, "w", encoding="utf-8") as f:
    n = 0
    for day in range(21):
        date = (start + dt.timedelta(days=day)).isoformat()
        # theme 2 only speaks during one week in the middle
        weights = [0.5, 0.5, 0.0] if not 7 <= day < 14 else [0.25, 0.25, 0.5]
        for _ in range(15):
            n += 1
            k = int(rng.choice(3, p=weights))
            f.write(json.dumps({
                "id": "p%05d" % n,
                "date": date,
                "text": themes[k][int(rng.integers(0, 3))],
                "retweets": int(rng.integers(0, 30)),
            }) + "\n")
print("wrote %d posts to %s\n" % (n, raw_path))

# ------------------------------------------------------------- the chain
ing = os.path.join(out_root, "ingest")
vec = os.path.join(out_root, "vectors")
model = os.path.join(out_root, "model")
summary = os.path.join(out_root, "summary")
heat = os.path.join(out_root, "heatmap")

m = run("ingest", "--input", raw_path, "--top-k", "10", "--output", ing)
print("  kept %(kept)d of %(parsed)d documents over %(days)d days\n" % m["counts"])

m = run("vectorize", "--input", ing, "--cap", "60", "--output", vec)
print("  tensor dims %s, vocabulary %d terms\n" % (m["dims"], m["vocabulary"]["terms"]))

m = run("fit", "--input", vec, "--model", "ncpd", "--rank", "3",
        "--iterations", "500", "--seed", "2", "--output", model)
print("  final objective %.4f (timings: %s)\n"
      % (m["final_objective"],
         {k: round(v, 3) for k, v in m["timings"].items()}))

run("summarize", "--input", model, "--vectors", vec, "--terms", "3",
    "--output", summary)
print("  keywords per topic:")
with open(os.path.join(summary, "keywords.tsv"), encoding="utf-8") as f:
    for r, row in enumerate(f, start=1):
        print("    topic %d: %s" % (r, row.rstrip().replace("\t", "  ")))
print()

run("render", "--input", model, "--vectors", vec, "--output", heat)
values, labels, day_names = read_heatmap_csv(os.path.join(heat, "heatmap.csv"))
print("  prevalence of each topic (first/mid/last day):")
for label, row in zip(labels, values):
    print("    %-42s %.2f / %.2f / %.2f"
          % (label[:42], row[0], row[len(row) // 2], row[-1]))

print("\nartifacts under %s:" % out_root)
for base, _dirs, files in sorted(os.walk(out_root)):
    for name in sorted(files):
        rel = os.path.relpath(os.path.join(base, name), out_root)
        print("  " + rel)
