"""Seeded synthetic corpus with planted ground-truth keyframes.

Each video is a random partition of its frames into background segments,
each showing one entity doing one action. Three questions per video (one per
type) get their evidence frames planted on top:

  descriptive  "What is the <e> doing?"           evidence: e + answer action
  temporal     "What does the <e> do after the <a>?" (or before)
               an anchor shot of e doing a, then evidence frames of e doing
               the answer action on the cued side of it
  causal       "Why did the <e> <effect>?"        evidence: the cause frames
               (another entity, the answer action) followed by effect frames

Concepts live on an orthonormal basis, so image-text similarity counts shared
concepts. With ``noise_sigma = 0`` the descriptive evidence frames are
strictly the most similar frames for their question, while the temporal
question is most similar to its anchor shot rather than its evidence.

Every concept has a fixed place in a video's script: the timeline is split
into thirds and each concept owns a third and an offset inside it. All
concepts named in a question share a third, and the evidence is planted where
the key concept (the descriptive entity, the temporal anchor, the causal
effect) belongs, give or take one frame, so a model that reads only the
question can learn where to look.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from kfsel import data
from kfsel.errors import ConfigError
from kfsel.qtype import QuestionType
from kfsel.sks import FrameMeta

ENTITIES = (
    "child", "man", "woman", "dog", "cat", "ball", "phone", "door", "car", "baby", "bike", "toy",
    "cup", "book", "horse", "bird", "boy", "girl", "chair", "box", "table", "kite", "hat", "bag",
)
ACTIONS = (
    "call", "cry", "run", "jump", "laugh", "fall", "wave", "dance", "eat", "drink", "sleep", "climb",
    "push", "throw", "sing", "swim", "kick", "clap", "read", "ride", "sit", "hug", "point", "bow",
)
STYLE_DIMS = 16
STYLE_SCALE = 0.3
FILES = ("qa", "scores", "meta", "truth")


@dataclass(frozen=True)
class SyntheticCorpusConfig:
    num_videos: int = 200
    T: int = 32
    N_gt: int = 4
    entity_vocab_size: int = 16  # also the action vocabulary size
    segment_count: int = 8
    noise_sigma: float = 0.05
    seed: int = 7

    def __post_init__(self):
        if self.num_videos < 1:
            raise ConfigError("num_videos must be >= 1")
        if not 1 <= self.N_gt <= self.T:
            raise ConfigError(f"N_gt={self.N_gt} must lie in [1, T={self.T}]")
        if self.T // 3 < 2 * self.N_gt:
            raise ConfigError(f"T={self.T} too short to plant three questions of N_gt={self.N_gt}")
        if not 6 <= self.entity_vocab_size <= len(ENTITIES):
            raise ConfigError(f"entity_vocab_size must lie in [6, {len(ENTITIES)}]")
        if not 1 <= self.segment_count <= self.T:
            raise ConfigError(f"segment_count must lie in [1, T={self.T}]")
        if self.noise_sigma < 0:
            raise ConfigError("noise_sigma must be >= 0")


@dataclass
class Corpus:
    config: SyntheticCorpusConfig
    qa: list
    scores: dict
    meta: dict
    truth: list


def _zone_bounds(T):
    return [round(z * T / 3) for z in range(4)]


class _Vocab:
    def __init__(self, cfg: SyntheticCorpusConfig, rng):
        n = cfg.entity_vocab_size
        self.entities = ENTITIES[:n]
        self.actions = ACTIONS[:n]
        names = [("e", e) for e in self.entities] + [("a", a) for a in self.actions]
        self.axis = {name: i for i, name in enumerate(names)}
        self.dim = len(names) + STYLE_DIMS
        self.rotation, _ = np.linalg.qr(rng.normal(size=(self.dim, self.dim)))
        # each concept owns a third of the timeline and a relative offset in it
        self.zone, self.offset = {}, {}
        for pool in (self.entities, self.actions):
            for rank, name in enumerate(rng.permutation(list(pool))):
                self.zone[str(name)] = rank % 3
                self.offset[str(name)] = float(rng.uniform())

    def content(self, entities, actions):
        v = np.zeros(self.dim)
        for e in entities:
            v[self.axis[("e", e)]] = 1.0
        for a in actions:
            v[self.axis[("a", a)]] = 1.0
        n = np.linalg.norm(v)
        return v / n if n else v

    def style(self, rng):
        v = np.zeros(self.dim)
        v[-STYLE_DIMS:] = rng.normal(size=STYLE_DIMS)
        return STYLE_SCALE * v / np.linalg.norm(v)

    def in_zone(self, pool, zone):
        return [c for c in pool if self.zone[c] == zone]


def _block_start(vocab, concept, zone, span, T, rng):
    bounds = _zone_bounds(T)
    lo, width = bounds[zone], bounds[zone + 1] - bounds[zone]
    slack = width - span
    start = round(vocab.offset[concept] * slack) + int(rng.integers(-1, 2))
    return lo + min(max(start, 0), slack)


def _video(cfg: SyntheticCorpusConfig, vocab: _Vocab, v: int):
    rng = np.random.default_rng([cfg.seed, v])
    T, n = cfg.T, cfg.N_gt
    vid = f"v{v:04d}"
    zones = rng.permutation(3)

    def pick(pool, used):
        options = [c for c in pool if c not in used]
        choice = str(options[int(rng.integers(len(options)))])
        used.add(choice)
        return choice

    used_e, used_a = set(), set()
    e_d = pick(vocab.in_zone(vocab.entities, zones[0]), used_e)
    a_anchor = pick(vocab.in_zone(vocab.actions, zones[1]), used_a)
    a_effect = pick(vocab.in_zone(vocab.actions, zones[2]), used_a)
    e_t = pick(vocab.in_zone(vocab.entities, zones[1]), used_e)
    e_c = pick(vocab.in_zone(vocab.entities, zones[2]), used_e)
    # answer-side concepts never reach the question text, so any place will do
    a_d, a_t, a_cause = (pick(vocab.actions, used_a) for _ in range(3))
    e_c2 = pick(vocab.entities, used_e)
    cue = "after" if rng.integers(2) else "before"

    # background segments
    cuts = np.sort(rng.choice(np.arange(1, T), size=cfg.segment_count - 1, replace=False))
    seg_of = np.searchsorted(cuts, np.arange(T), side="right")
    bg_e = [e for e in vocab.entities if e not in used_e]
    bg_a = [a for a in vocab.actions if a not in used_a]
    content = {}
    for s in range(cfg.segment_count):
        content[s] = ({str(rng.choice(bg_e))}, {str(rng.choice(bg_a))})
    frame_content = [content[int(seg_of[t])] for t in range(T)]
    frame_seg = [int(seg_of[t]) for t in range(T)]
    next_seg = cfg.segment_count

    def plant(t, ents, acts, seg=None):
        nonlocal next_seg
        if seg is None:
            seg, next_seg = next_seg, next_seg + 1
        frame_content[t] = (set(ents), set(acts))
        frame_seg[t] = seg
        return seg

    # descriptive: evidence every other frame
    start = _block_start(vocab, e_d, zones[0], 2 * n - 1, T, rng)
    desc_idx = [start + 2 * j for j in range(n)]
    for t in desc_idx:
        plant(t, [e_d], [a_d])

    # temporal: anchor shot of n frames, evidence on the cued side
    start = _block_start(vocab, a_anchor, zones[1], 2 * n, T, rng)
    first, second = list(range(start, start + n)), list(range(start + n, start + 2 * n))
    anchor_idx, temp_idx = (first, second) if cue == "after" else (second, first)
    shot = None
    for t in anchor_idx:
        shot = plant(t, [e_t], [a_anchor], shot)
    for t in temp_idx:
        plant(t, [e_t], [a_t])

    # causal: cause frames then effect frames, every other frame
    start = _block_start(vocab, a_effect, zones[2], 2 * n - 1, T, rng)
    caus_idx = [start + 2 * j for j in range(n)]
    n_cause = n // 2
    for j, t in enumerate(caus_idx):
        if j < n_cause:
            plant(t, [e_c2], [a_cause])
        else:
            plant(t, [e_c], [a_effect])

    styles = {seg: vocab.style(rng) for seg in sorted(set(frame_seg))}
    raw = np.array([
        vocab.content(*frame_content[t]) + styles[frame_seg[t]] + cfg.noise_sigma * rng.normal(size=vocab.dim)
        for t in range(T)
    ])
    feats = raw @ vocab.rotation.T
    frames = [
        FrameMeta(t, frame_content[t][0], frame_content[t][1], frame_seg[t], np.round(feats[t], 6))
        for t in range(T)
    ]

    questions = [
        (QuestionType.DESCRIPTIVE, f"What is the {e_d} doing?", a_d, [e_d], [], desc_idx, "none", []),
        (
            QuestionType.TEMPORAL, f"What does the {e_t} do {cue} the {a_anchor}?", a_t,
            [e_t], [a_anchor], temp_idx, cue, anchor_idx,
        ),
        (
            QuestionType.CAUSAL, f"Why did the {e_c} {a_effect}?", f"because the {e_c2} did {a_cause}",
            [e_c], [a_effect], caus_idx, "none", [],
        ),
    ]
    qa, scores, truth = [], {}, []
    for qtype, text, answer, q_ents, q_acts, gt, q_cue, anchors in questions:
        qid = f"{vid}_{qtype.value}"
        qa.append(data.QARecord(vid, qid, text, answer, None, qtype))
        qvec = vocab.content(q_ents, q_acts) @ vocab.rotation.T
        sim = feats @ qvec + cfg.noise_sigma * rng.normal(size=T)
        scores[(vid, qid)] = np.round(sim, 6)
        truth.append({
            "video_id": vid, "question_id": qid, "indices": sorted(gt),
            "qtype": qtype.value, "cue": q_cue, "anchor_indices": sorted(anchors),
        })
    return qa, scores, frames, truth


def generate(config: SyntheticCorpusConfig) -> Corpus:
    vocab = _Vocab(config, np.random.default_rng([config.seed]))
    corpus = Corpus(config, [], {}, {}, [])
    for v in range(config.num_videos):
        qa, scores, frames, truth = _video(config, vocab, v)
        corpus.qa.extend(qa)
        corpus.scores.update(scores)
        corpus.meta[f"v{v:04d}"] = frames
        corpus.truth.extend(truth)
    return corpus


def write_corpus(corpus: Corpus, out_dir) -> dict[str, Path]:
    out = Path(out_dir)
    paths = {name: out / f"{name}.jsonl" for name in FILES}
    T = corpus.config.T
    data.write_qa(paths["qa"], corpus.qa)
    data.write_scores(paths["scores"], corpus.scores, T)
    data.write_meta(paths["meta"], corpus.meta, T)
    data.write_truth(paths["truth"], corpus.truth, T)
    return paths


def synth_corpus(config: SyntheticCorpusConfig, out_dir) -> dict[str, Path]:
    return write_corpus(generate(config), out_dir)
