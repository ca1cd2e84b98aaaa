"""Selection quality metrics and the per-question-type report."""

from __future__ import annotations

import numpy as np

from kfsel.qtype import QuestionType

METRICS = ("recall_at_n", "mean_temporal_spread", "mean_min_gap", "objective_ratio_greedy")


def recall_at_n(selected, truth) -> float:
    selected = set(getattr(selected, "indices", selected))
    truth = set(truth)
    if not selected or not truth:
        raise ValueError("recall needs non-empty selected and truth sets")
    return len(selected & truth) / len(truth)


def temporal_spread(I, T: int) -> float:
    """Standard deviation of the indices on the normalized time axis."""
    return float(np.std(np.asarray(sorted(I), dtype=np.float64)) / (T - 1))


def min_gap(I) -> int:
    """Smallest distance between consecutive selected frames (0 for one frame)."""
    idx = sorted(I)
    if len(idx) < 2:
        return 0
    return int(np.diff(idx).min())


def random_recall(T: int, N: int, N_gt: int) -> float:
    """Expected recall of N frames drawn uniformly without replacement.

    The overlap with a fixed truth set of size N_gt is hypergeometric with
    mean N * N_gt / T, hence recall N / T whatever N_gt is."""
    return N * N_gt / T / N_gt


def _summary(rows) -> dict:
    out = {
        "count": len(rows),
        "recall_at_n": float(np.mean([r["recall"] for r in rows])) if rows else 0.0,
        "mean_temporal_spread": float(np.mean([r["spread"] for r in rows])) if rows else 0.0,
        "mean_min_gap": float(np.mean([r["gap"] for r in rows])) if rows else 0.0,
    }
    ratios = [r["ratio"] for r in rows if r.get("ratio") is not None]
    out["objective_ratio_greedy"] = float(np.mean(ratios)) if ratios else None
    return out


def build_report(selections, truth: dict, qa=None, solver_diagnostics=None, *, T: int) -> dict:
    """Aggregate per question type and overall.

    ``selections`` are selection rows as written to selections.jsonl,
    ``truth`` maps (video_id, question_id) to an object with ``indices``.
    Rows without truth are counted but not scored. ``average`` is the
    unweighted mean over the three types that have scored rows.
    """
    qtypes = {}
    for rec in qa or ():
        if rec.qtype is not None:
            qtypes[rec.key] = rec.qtype.value
    diag = solver_diagnostics or {}
    scored = []
    for row in selections:
        key = (row["video_id"], row["question_id"])
        if key not in truth:
            continue
        ratio = None
        if key in diag and diag[key]["exact_objective"] > 0:
            ratio = min(1.0, diag[key]["greedy_objective"] / diag[key]["exact_objective"])
        scored.append({
            "qtype": qtypes.get(key, row["qtype"]),
            "recall": recall_at_n(row["indices"], truth[key]["indices"]),
            "spread": temporal_spread(row["indices"], T),
            "gap": min_gap(row["indices"]),
            "ratio": ratio,
        })

    per_type = {}
    for qt in QuestionType:
        per_type[qt.value] = _summary([r for r in scored if r["qtype"] == qt.value])
    present = [per_type[qt.value] for qt in QuestionType if per_type[qt.value]["count"]]
    average = {"count": sum(p["count"] for p in present)}
    for m in METRICS:
        vals = [p[m] for p in present if p[m] is not None]
        average[m] = float(np.mean(vals)) if vals else (0.0 if m != "objective_ratio_greedy" else None)
    per_type["average"] = average

    return {
        "counts": {"selections": len(selections), "scored": len(scored), "truth": len(truth)},
        "overall": _summary(scored),
        "per_qtype": per_type,
    }
