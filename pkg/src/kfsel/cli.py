"""Command line: synth, gen-labels, train, select, eval, oracle, bench.

Every failure is reported on stderr as one line

    kfsel-error: <kind>: <message>

and the process exits with status 1 (2 for usage errors from argparse).
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from kfsel import data, pipeline
from kfsel.config import RunConfig
from kfsel.errors import ConfigError, KfselError
from kfsel.generator import load_model, save_model
from kfsel.metrics import build_report
from kfsel.qccr import SOLVERS, LambdaTable
from kfsel.synth import SyntheticCorpusConfig, synth_corpus

log = logging.getLogger("kfsel")

ERROR_PREFIX = "kfsel-error"

# config keys exposed as flags on every command, with their argparse types
_FLAG_TYPES = {
    "T": int,
    "N": int,
    "K": int,
    "D": int,
    "tau": float,
    "sigma_min": float,
    "sigma_target": float,
    "alpha": float,
    "dup_threshold": float,
    "lambda_override": float,
    "learning_rate": float,
    "epochs": int,
    "seed": int,
    "workers": int,
    "external_ranker": str,
    "external_timeout": float,
}
_SWITCHES = ("no_train", "no_qccr", "no_sks")


def _flag_names(key):
    dashed = "--" + key.replace("_", "-")
    under = "--" + key
    return [dashed] if dashed == under else [dashed, under]


def _config_parent() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("configuration (flags override --config)")
    g.add_argument("--config", type=Path, help="JSON file with config keys")
    for key, typ in _FLAG_TYPES.items():
        g.add_argument(*_flag_names(key), dest=key, type=typ, default=None)
    g.add_argument("--solver", choices=sorted(SOLVERS), default=None)
    g.add_argument(*_flag_names("lambda_table"), dest="lambda_table", type=Path, default=None,
                   help="JSON file {descriptive, temporal, causal}")
    for key in _SWITCHES:
        g.add_argument(*_flag_names(key), dest=key, action="store_true", default=None)
    g.add_argument("-v", "--verbose", action="store_true")
    return p


def _run_config(args) -> RunConfig:
    overrides = {k: getattr(args, k) for k in (*_FLAG_TYPES, *_SWITCHES, "solver")}
    if args.lambda_table is not None:
        table = data.read_json(args.lambda_table, "lambda table")
        if not isinstance(table, dict):
            raise ConfigError(f"lambda table {args.lambda_table} must hold a JSON object")
        overrides["lambda_table"] = LambdaTable.from_mapping(table)
    return RunConfig.load(args.config, **overrides)


def _check_T(cfg: RunConfig, T: int, what: str):
    if T != cfg.T:
        raise ConfigError(f"{what} has T={T} but config T={cfg.T}")


# commands -------------------------------------------------------------------


def cmd_synth(args, cfg: RunConfig):
    corpus_cfg = SyntheticCorpusConfig(
        num_videos=args.num_videos,
        T=cfg.T,
        N_gt=args.n_gt,
        noise_sigma=args.noise_sigma,
        seed=args.corpus_seed,
    )
    paths = synth_corpus(corpus_cfg, args.out_dir)
    for name, path in paths.items():
        print(f"{name}\t{path}")


def cmd_gen_labels(args, cfg: RunConfig):
    qa = data.load_qa(args.qa)
    scores = data.load_scores(args.scores)
    meta = data.load_meta(args.meta)
    labels = pipeline.gen_labels(qa, scores, meta, cfg)
    data.write_labels(args.out, labels, cfg.T)
    log.info("wrote %d label records to %s", len(labels), args.out)


def cmd_train(args, cfg: RunConfig):
    qa = data.load_qa(args.qa)
    T, labels = data.load_labels(args.labels)
    _check_T(cfg, T, str(args.labels))
    embeddings = data.load_embeddings(args.embeddings) if args.embeddings else None
    history = []
    model = pipeline.train_generator(qa, labels, cfg, embeddings, history)
    save_model(model, args.out)
    print(f"loss {history[0]:.6f} -> {history[-1]:.6f} over {cfg.epochs} epochs")
    if args.history:
        data.write_json(args.history, {"loss": history})


def cmd_select(args, cfg: RunConfig):
    if not cfg.no_train and args.model is None:
        raise ConfigError("select needs --model unless --no-train is given")
    if cfg.no_train and args.scores is None:
        raise ConfigError("select --no-train needs --scores")
    qa = data.load_qa(args.qa)
    scores = data.load_scores(args.scores) if args.scores else {}
    model = None if cfg.no_train else load_model(args.model)
    embeddings = data.load_embeddings(args.embeddings) if args.embeddings else None
    res = pipeline.select_all(qa, scores, model, cfg, embeddings)
    data.write_selections(args.out, res.rows, cfg.T, cfg.N)
    if args.diagnostics:
        data.write_diagnostics(args.diagnostics, res.diagnostics)
    log.info("wrote %d selections to %s", len(res.rows), args.out)


def cmd_eval(args, cfg: RunConfig):
    header, rows = data.load_selections(args.selections)
    T, truth = data.load_truth(args.truth)
    if header["T"] != T:
        raise ConfigError(f"selections have T={header['T']} but truth has T={T}")
    qa = data.load_qa(args.qa) if args.qa else None
    diag = data.load_diagnostics(args.diagnostics) if args.diagnostics else None
    report = build_report(rows, truth, qa, diag, T=T)
    data.write_json(args.out, report)
    avg = report["per_qtype"]["average"]
    print(f"recall@{header['N']} {avg['recall_at_n']:.4f}  mean_min_gap {avg['mean_min_gap']:.4f}")


def cmd_oracle(args, cfg: RunConfig):
    checked, mismatches = pipeline.oracle_sweep(args.seeds)
    for m in mismatches[:10]:
        print(f"mismatch {m}")
    if mismatches:
        raise KfselError(f"dp disagrees with brute force on {len(mismatches)} of {checked} instances")
    print(f"dp == brute on {checked} instances")


def cmd_bench(args, cfg: RunConfig):
    rows = pipeline.bench(tuple(args.Ts), tuple(args.Ns), args.repeats)
    print(pipeline.format_bench(rows))
    if args.out:
        data.write_json(args.out, rows)


# parser ---------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parent = _config_parent()
    ap = argparse.ArgumentParser(prog="kfsel", description="Question-aware keyframe selection.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", parents=[parent], help="write a seeded synthetic corpus")
    p.add_argument("--out-dir", type=Path, required=True)
    p.add_argument("--num-videos", type=int, default=200)
    p.add_argument("--n-gt", type=int, default=4)
    p.add_argument("--noise-sigma", type=float, default=0.05)
    p.add_argument("--corpus-seed", type=int, default=7)
    p.set_defaults(fn=cmd_synth)

    p = sub.add_parser("gen-labels", parents=[parent], help="pseudo keyframe labels")
    p.add_argument("--qa", type=Path, required=True)
    p.add_argument("--scores", type=Path, required=True)
    p.add_argument("--meta", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True)
    p.set_defaults(fn=cmd_gen_labels)

    p = sub.add_parser("train", parents=[parent], help="fit the Gaussian generator")
    p.add_argument("--qa", type=Path, required=True)
    p.add_argument("--labels", type=Path, required=True)
    p.add_argument("--embeddings", type=Path)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--history", type=Path, help="write per-epoch loss as JSON")
    p.set_defaults(fn=cmd_train)

    p = sub.add_parser("select", parents=[parent], help="pick N keyframes per question")
    p.add_argument("--qa", type=Path, required=True)
    p.add_argument("--model", type=Path)
    p.add_argument("--scores", type=Path)
    p.add_argument("--embeddings", type=Path)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--diagnostics", type=Path, help="write greedy vs exact objectives")
    p.set_defaults(fn=cmd_select)

    p = sub.add_parser("eval", parents=[parent], help="score selections against truth")
    p.add_argument("--selections", type=Path, required=True)
    p.add_argument("--truth", type=Path, required=True)
    p.add_argument("--qa", type=Path)
    p.add_argument("--diagnostics", type=Path)
    p.add_argument("--out", type=Path, required=True)
    p.set_defaults(fn=cmd_eval)

    p = sub.add_parser("oracle", parents=[parent], help="check dp against brute force")
    p.add_argument("--seeds", type=int, default=200)
    p.set_defaults(fn=cmd_oracle)

    p = sub.add_parser("bench", parents=[parent], help="time the solvers")
    p.add_argument("--Ts", type=int, nargs="+", default=[32, 256, 1024])
    p.add_argument("--Ns", type=int, nargs="+", default=[4, 8])
    p.add_argument("--repeats", type=int, default=20)
    p.add_argument("--out", type=Path)
    p.set_defaults(fn=cmd_bench)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        cfg = _run_config(args)
        args.fn(args, cfg)
    except KfselError as exc:
        print(f"{ERROR_PREFIX}: {exc.kind}: {_one_line(exc)}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"{ERROR_PREFIX}: io: {_one_line(exc)}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"{ERROR_PREFIX}: value: {_one_line(exc)}", file=sys.stderr)
        return 1
    return 0


def _one_line(exc) -> str:
    return " ".join(str(exc).split())


if __name__ == "__main__":
    sys.exit(main())
