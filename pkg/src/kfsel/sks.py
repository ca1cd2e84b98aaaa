"""Synthetic keyframe supervision.

Two label sources feed training: the top-N frames by image-text similarity,
and a deterministic rule ranker over frame metadata that stands in for a
prompted multimodal model. ``fuse_labels`` merges them into one set of
pseudo timestamps.

Rule ranker, in priority order:

1. informative first: a frame's score is how many question-referenced
   entities and actions it shows;
2. non-redundancy: of a group of near-duplicate frames only one survives,
   the one with the highest score, earliest on ties;
3. temporal logic: an ``after`` cue keeps only frames past the last frame
   showing the anchor action, a ``before`` cue only frames ahead of the
   first one;
4. fallback to uniform: missing picks are filled from the evenly spaced
   grid ``round(j * (T - 1) / (N - 1))``, skipping grid points already
   chosen.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from kfsel.core import DimensionError, top_n
from kfsel.generator import TargetMasks, make_targets, tokenize

CUES = ("none", "before", "after")


@dataclass(frozen=True)
class FrameMeta:
    index: int
    entities: frozenset = frozenset()
    actions: frozenset = frozenset()
    segment_id: int = 0
    feature: np.ndarray = field(default_factory=lambda: np.zeros(0), compare=False)

    def __post_init__(self):
        object.__setattr__(self, "entities", frozenset(self.entities))
        object.__setattr__(self, "actions", frozenset(self.actions))
        feat = np.asarray(self.feature, dtype=np.float64)
        if not np.all(np.isfinite(feat)):
            raise ValueError(f"frame {self.index}: feature has non-finite entries")
        object.__setattr__(self, "feature", feat)


@dataclass(frozen=True)
class QuestionMeta:
    text: str
    referenced_entities: frozenset = frozenset()
    referenced_actions: frozenset = frozenset()
    temporal_cue: str = "none"
    cue_anchor: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "referenced_entities", frozenset(self.referenced_entities))
        object.__setattr__(self, "referenced_actions", frozenset(self.referenced_actions))
        if self.temporal_cue not in CUES:
            raise ValueError(f"temporal_cue must be one of {CUES}, got {self.temporal_cue!r}")
        if self.temporal_cue != "none" and not self.cue_anchor:
            raise ValueError(f"temporal_cue={self.temporal_cue!r} needs a cue_anchor")


@dataclass(frozen=True)
class PseudoLabels:
    timestamps: tuple[float, ...]
    source_weights: tuple[float, ...]
    sources: tuple[str, ...] = ()

    def __post_init__(self):
        ts = tuple(float(t) for t in self.timestamps)
        if any(not 0.0 <= t <= 1.0 for t in ts):
            raise ValueError(f"timestamps must lie in [0, 1]: {ts}")
        if list(ts) != sorted(ts):
            raise ValueError(f"timestamps must be sorted: {ts}")
        if len(self.source_weights) != len(ts):
            raise ValueError("one source weight per timestamp is required")
        object.__setattr__(self, "timestamps", ts)
        object.__setattr__(self, "source_weights", tuple(float(w) for w in self.source_weights))
        object.__setattr__(self, "sources", tuple(self.sources))

    def indices(self, T: int) -> list[int]:
        return [int(round(t * (T - 1))) for t in self.timestamps]


@dataclass
class RuleRanking:
    indices: list[int]
    overlap: dict[int, int]
    notes: list[str]


def to_timestamps(indices: Sequence[int], T: int) -> tuple[float, ...]:
    return tuple(sorted(i / (T - 1) for i in indices))


def clip_labels(sim, N: int) -> PseudoLabels:
    sim = np.asarray(sim, dtype=np.float64)
    sel = top_n(sim, N)
    return PseudoLabels(to_timestamps(sel.indices, len(sim)), (1.0,) * N, ("clip",) * N)


def uniform_grid(T: int, N: int) -> list[int]:
    """Evenly spaced indices, ``round`` taken half-up."""
    if N == 1:
        return [T // 2]
    return [(2 * j * (T - 1) + (N - 1)) // (2 * (N - 1)) for j in range(N)]


def _duplicate_groups(frames, cands, dup_threshold):
    parent = {i: i for i in cands}

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    feats = [frames[i].feature for i in cands]
    cos = None
    if cands and len({f.shape for f in feats}) == 1 and feats[0].size:
        F = np.array(feats)
        norms = np.linalg.norm(F, axis=1)
        ok = norms > 0
        Fn = np.where(ok[:, None], F / np.where(ok, norms, 1.0)[:, None], 0.0)
        cos = Fn @ Fn.T
        cos[~ok, :] = -np.inf
        cos[:, ~ok] = -np.inf
    for a in range(len(cands)):
        for b in range(a + 1, len(cands)):
            fa, fb = frames[cands[a]], frames[cands[b]]
            same = (fa.entities, fa.actions, fa.segment_id) == (fb.entities, fb.actions, fb.segment_id)
            if same or (cos is not None and cos[a, b] >= dup_threshold):
                parent[find(cands[a])] = find(cands[b])
    groups: dict[int, list[int]] = {}
    for i in cands:
        groups.setdefault(find(i), []).append(i)
    return list(groups.values())


def rule_rank_explained(
    frames: Sequence[FrameMeta], q: QuestionMeta, N: int, dup_threshold: float = 0.95
) -> RuleRanking:
    T = len(frames)
    if N < 1 or N > T:
        raise DimensionError(f"cannot rank N={N} of T={T} frames")
    frames = sorted(frames, key=lambda fr: fr.index)
    if [fr.index for fr in frames] != list(range(T)):
        raise DimensionError("frame indices must be exactly 0..T-1")
    notes = []

    overlap = {
        fr.index: len(fr.entities & q.referenced_entities) + len(fr.actions & q.referenced_actions)
        for fr in frames
    }

    allowed = range(T)
    if q.temporal_cue != "none":
        anchors = [fr.index for fr in frames if q.cue_anchor in fr.actions]
        if not anchors:
            notes.append(f"rule 3 skipped: anchor {q.cue_anchor!r} not shown in any frame")
        elif q.temporal_cue == "after":
            allowed = range(max(anchors) + 1, T)
        else:
            allowed = range(0, min(anchors))

    cands = [i for i in allowed if overlap[i] > 0]
    kept = []
    for group in _duplicate_groups(frames, cands, dup_threshold):
        best = min(group, key=lambda i: (-overlap[i], i))
        kept.append(best)
        if len(group) > 1:
            notes.append(f"rule 2 kept {best} of duplicates {sorted(group)}")
    chosen = sorted(kept, key=lambda i: (-overlap[i], i))[:N]

    if len(chosen) < N:
        notes.append(f"rule 4 filled {N - len(chosen)} of {N} picks from the uniform grid")
        # grid points are distinct and each chosen frame blocks at most one,
        # so the free ones always suffice; a chosen grid point counts as covered
        used = set(chosen)
        chosen += [g for g in uniform_grid(T, N) if g not in used][: N - len(chosen)]
    return RuleRanking(sorted(chosen), overlap, notes)


def rule_rank(
    frames: Sequence[FrameMeta], q: QuestionMeta, N: int, dup_threshold: float = 0.95
) -> list[int]:
    return rule_rank_explained(frames, q, N, dup_threshold).indices


def question_meta(question: str, answer: str, frames: Sequence[FrameMeta]) -> QuestionMeta:
    """Read references and a before/after cue off the QA text.

    References are the question and answer tokens that name an entity or
    action seen anywhere in the video. The anchor of a cue is the first
    known action named after the cue word.
    """
    entities = frozenset().union(*(fr.entities for fr in frames))
    actions = frozenset().union(*(fr.actions for fr in frames))
    q_tokens = tokenize(question)
    tokens = set(q_tokens) | set(tokenize(answer))
    cue, anchor = "none", None
    for pos, tok in enumerate(q_tokens):
        if tok in ("before", "after"):
            anchor = next((t for t in q_tokens[pos + 1:] if t in actions), None)
            if anchor is not None:
                cue = tok
                break
    return QuestionMeta(question, tokens & entities, tokens & actions, cue, anchor)


def fuse_labels(clip: PseudoLabels, vlm: PseudoLabels, alpha: float, N: int) -> PseudoLabels:
    """Union of both label sets, weighted by source, best ``N`` kept."""
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must lie in [0, 1], got {alpha}")
    in_clip, in_vlm = set(clip.timestamps), set(vlm.timestamps)
    cands = sorted(in_clip | in_vlm)
    weight = {t: alpha * (t in in_vlm) + (1.0 - alpha) * (t in in_clip) for t in cands}
    best = sorted(sorted(cands, key=lambda t: (-weight[t], t))[:N])
    sources = tuple(
        "+".join(name for name, s in (("clip", in_clip), ("vlm", in_vlm)) if t in s) for t in best
    )
    return PseudoLabels(tuple(best), tuple(weight[t] for t in best), sources)


def target_masks(labels: PseudoLabels, T: int, sigma_target: float) -> TargetMasks:
    if sigma_target <= 0:
        raise ValueError(f"sigma_target must be positive, got {sigma_target}")
    return make_targets(labels.timestamps, T, sigma_target)
