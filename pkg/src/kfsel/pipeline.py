"""Pipeline stages shared by the command line, scripts and tests."""

from __future__ import annotations

import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from kfsel import qccr
from kfsel.config import RunConfig
from kfsel.errors import DataError
from kfsel.external import rank_with_fallback, resolve_endpoint
from kfsel.generator import GeneratorModel, extract_features, frame_distribution, train
from kfsel.qtype import QuestionType, classify
from kfsel.sks import PseudoLabels, clip_labels, fuse_labels, question_meta, target_masks, to_timestamps

log = logging.getLogger(__name__)


def _map(fn, items, workers):
    items = list(items)
    if workers == 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def question_type(rec) -> QuestionType:
    return rec.qtype if rec.qtype is not None else classify(rec.question)


def _scores_for(rec, scores, T):
    try:
        s = scores[rec.key]
    except KeyError:
        raise DataError(f"no frame scores for {rec.key}") from None
    if len(s) != T:
        raise DataError(f"scores for {rec.key} have length {len(s)}, config T={T}")
    return s


def gen_labels(qa, scores, meta, cfg: RunConfig) -> dict[tuple[str, str], PseudoLabels]:
    """Similarity top-N labels, fused with rule-ranked (or externally ranked)
    labels unless ``cfg.no_sks``."""
    endpoint = resolve_endpoint(cfg.external_ranker)

    def one(rec):
        sim = _scores_for(rec, scores, cfg.T)
        clip = clip_labels(sim, cfg.N)
        if cfg.no_sks:
            return clip
        try:
            frames = meta[rec.video_id]
        except KeyError:
            raise DataError(f"no frame metadata for video {rec.video_id!r}") from None
        q = question_meta(rec.question, rec.answer, frames)
        ranked, _ = rank_with_fallback(
            endpoint, frames, q, cfg.N, cfg.dup_threshold, cfg.external_timeout
        )
        vlm = PseudoLabels(to_timestamps(ranked, cfg.T), (1.0,) * cfg.N, ("vlm",) * cfg.N)
        return fuse_labels(clip, vlm, cfg.alpha, cfg.N)

    out = _map(one, qa, cfg.workers)
    return {rec.key: lb for rec, lb in zip(qa, out)}


def features(qa, cfg: RunConfig, embeddings=None) -> dict[tuple[str, str], np.ndarray]:
    out = {}
    for rec in qa:
        if embeddings is not None:
            try:
                out[rec.key] = embeddings[rec.key]
            except KeyError:
                raise DataError(f"no embedding for {rec.key}") from None
        else:
            out[rec.key] = extract_features(rec.question, cfg.D)
    return out


def train_generator(qa, labels, cfg: RunConfig, embeddings=None, history=None) -> GeneratorModel:
    feats = features(qa, cfg, embeddings)
    dataset = []
    for rec in qa:
        if rec.key not in labels:
            raise DataError(f"no pseudo labels for {rec.key}")
        lb = labels[rec.key]
        if len(lb.timestamps) != cfg.K:
            raise DataError(f"labels for {rec.key} hold {len(lb.timestamps)} timestamps, K={cfg.K}")
        dataset.append((feats[rec.key], target_masks(lb, cfg.T, cfg.target_width)))
    return train(dataset, cfg.train_config(), history)


@dataclass
class SelectionResult:
    rows: list[dict]
    diagnostics: list[dict]


def select_all(qa, scores, model: GeneratorModel | None, cfg: RunConfig, embeddings=None) -> SelectionResult:
    use_model = model is not None and not cfg.no_train
    feats = features(qa, cfg, embeddings) if use_model else {}
    kernel = cfg.kernel

    def one(rec):
        if use_model:
            s = frame_distribution(model, feats[rec.key], cfg.T, cfg.sigma_min)
        else:
            s = _scores_for(rec, scores, cfg.T)
        qtype = question_type(rec)
        if cfg.no_qccr:
            lam = 0.0
        elif cfg.lambda_override is not None:
            lam = cfg.lambda_override
        else:
            lam = qccr.lambda_for(qtype, cfg.lambda_table)
        sel = qccr.select(s, cfg.N, lam, kernel, cfg.solver)
        exact = sel if cfg.solver != "greedy" else qccr.select_dp(s, cfg.N, lam, kernel)
        greedy = sel if cfg.solver == "greedy" else qccr.select_greedy(s, cfg.N, lam, kernel)
        row = {
            "video_id": rec.video_id,
            "question_id": rec.question_id,
            "indices": list(sel.indices),
            "objective": sel.objective_value,
            "lambda": lam,
            "qtype": qtype.value,
        }
        diag = {
            "video_id": rec.video_id,
            "question_id": rec.question_id,
            "greedy_objective": greedy.objective_value,
            "exact_objective": exact.objective_value,
        }
        return row, diag

    out = _map(one, qa, cfg.workers)
    return SelectionResult([r for r, _ in out], [d for _, d in out])


def oracle_sweep(seeds: int = 200, max_T: int = 12, max_N: int = 4, lambdas=(0.0, 0.3, 1.0, 5.0), taus=(1.0, 2.0, 4.0)):
    """dp vs brute on seeded random instances; returns the list of mismatches."""
    mismatches = []
    checked = 0
    for seed in range(seeds):
        rng = np.random.default_rng(seed)
        T = int(rng.integers(2, max_T + 1))
        N = int(rng.integers(1, min(max_N, T) + 1))
        s = rng.uniform(0.0, 1.0, size=T)
        for lam in lambdas:
            for tau in taus:
                k = qccr.CoverageKernel(tau)
                a = qccr.select_dp(s, N, lam, k)
                b = qccr.select_brute(s, N, lam, k)
                checked += 1
                if a.indices != b.indices:
                    mismatches.append({"seed": seed, "T": T, "N": N, "lambda": lam, "tau": tau,
                                       "dp": a.indices, "brute": b.indices})
    return checked, mismatches


def bench(Ts=(32, 256, 1024), Ns=(4, 8), repeats: int = 20, lam: float = 0.5, seed: int = 0):
    """Median seconds per selection for each solver; brute only where feasible."""
    rng = np.random.default_rng(seed)
    rows = []
    for T in Ts:
        kernel = qccr.CoverageKernel(T / 8.0)
        for N in Ns:
            instances = [rng.uniform(size=T) for _ in range(repeats)]
            row = {"T": T, "N": N}
            for name, fn in qccr.SOLVERS.items():
                if name == "brute" and math.comb(T, N) > 50_000:
                    row[name] = None
                    continue
                fn(instances[0], N, lam, kernel)  # warm the kernel tables
                times = []
                for s in instances:
                    t0 = time.perf_counter()
                    fn(s, N, lam, kernel)
                    times.append(time.perf_counter() - t0)
                row[name] = float(np.median(times))
            rows.append(row)
    return rows


def format_bench(rows) -> str:
    head = f"{'T':>6} {'N':>3} {'dp_ms':>10} {'greedy_ms':>10} {'brute_ms':>10}"
    lines = [head]
    for r in rows:
        cells = [f"{r[k] * 1e3:10.3f}" if r[k] is not None else f"{'-':>10}" for k in ("dp", "greedy", "brute")]
        lines.append(f"{r['T']:>6} {r['N']:>3} " + " ".join(cells))
    return "\n".join(lines)

