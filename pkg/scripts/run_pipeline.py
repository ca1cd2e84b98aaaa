"""End-to-end run on the synthetic corpus, with both ablations.

Drives the ``kfsel`` command line exactly as a user would and prints a
per-question-type table for the full method, ``--no-qccr`` and ``--no-sks``.

    python scripts/run_pipeline.py --work-dir runs/seed7 --epochs 300
"""

import argparse
import json
import sys
from pathlib import Path

from kfsel.cli import main as kfsel


def step(*argv):
    argv = [str(a) for a in argv]
    print("$ kfsel " + " ".join(argv), flush=True)
    code = kfsel(argv)
    if code:
        sys.exit(code)


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--work-dir", type=Path, default=Path("runs/synthetic"))
    ap.add_argument("--num-videos", type=int, default=200)
    ap.add_argument("--corpus-seed", type=int, default=7)
    ap.add_argument("--epochs", type=int, default=300)
    args = ap.parse_args()

    w = args.work_dir
    step("synth", "--out-dir", w, "--num-videos", args.num_videos, "--corpus-seed", args.corpus_seed)
    corpus = ["--qa", w / "qa.jsonl"]
    inputs = [*corpus, "--scores", w / "scores.jsonl", "--meta", w / "meta.jsonl"]

    variants = {"full": [], "no-qccr": ["--no-qccr"], "no-sks": ["--no-sks"]}
    labels = {"full": "fused", "no-qccr": "fused", "no-sks": "clip"}
    for name, flags in (("fused", []), ("clip", ["--no-sks"])):
        step("gen-labels", *inputs, *flags, "--out", w / f"labels_{name}.jsonl")
        step("train", *corpus, *flags, "--labels", w / f"labels_{name}.jsonl",
             "--epochs", args.epochs, "--out", w / f"model_{name}.json")

    reports = {}
    for name, flags in variants.items():
        step("select", *corpus, *flags, "--model", w / f"model_{labels[name]}.json",
             "--out", w / f"sel_{name}.jsonl", "--diagnostics", w / f"diag_{name}.jsonl")
        step("eval", *corpus, "--selections", w / f"sel_{name}.jsonl", "--truth", w / "truth.jsonl",
             "--diagnostics", w / f"diag_{name}.jsonl", "--out", w / f"report_{name}.json")
        reports[name] = json.loads((w / f"report_{name}.json").read_text())["per_qtype"]

    qtypes = ("descriptive", "temporal", "causal", "average")
    print()
    print(f"{'variant':<10}" + "".join(f"{q:>13}" for q in qtypes) + f"{'min_gap':>10}")
    for name, rep in reports.items():
        cells = "".join(f"{rep[q]['recall_at_n']:>13.3f}" for q in qtypes)
        print(f"{name:<10}{cells}{rep['average']['mean_min_gap']:>10.3f}")


if __name__ == "__main__":
    main()
