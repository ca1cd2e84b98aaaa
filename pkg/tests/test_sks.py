import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from kfsel.core import DimensionError, GaussianParams, gaussian_mask
from kfsel.sks import (
    FrameMeta,
    PseudoLabels,
    QuestionMeta,
    clip_labels,
    fuse_labels,
    question_meta,
    rule_rank,
    rule_rank_explained,
    target_masks,
    to_timestamps,
    uniform_grid,
)


def frames_from(shown, T):
    """``shown`` maps index -> (entities, actions[, segment, feature])."""
    out = []
    for t in range(T):
        ents, acts, *rest = shown.get(t, ((), ()))
        seg = rest[0] if rest else 100 + t
        feat = rest[1] if len(rest) > 1 else np.zeros(0)
        out.append(FrameMeta(t, ents, acts, seg, feat))
    return out


def labels(ts, src="x"):
    return PseudoLabels(tuple(ts), (1.0,) * len(ts), (src,) * len(ts))


# clip labels ------------------------------------------------------------------


def test_clip_labels_examples():
    assert clip_labels([0.1, 0.9, 0.8, 0.2], 2).timestamps == pytest.approx((1 / 3, 2 / 3))
    const = clip_labels([0.5] * 4, 2)
    assert const.timestamps == (0.0, pytest.approx(1 / 3))
    assert const.source_weights == (1.0, 1.0)


def test_clip_labels_sort_oracle():
    rng = np.random.default_rng(0)
    for _ in range(50):
        sim = rng.normal(size=32)
        want = sorted(sorted(range(32), key=lambda i: (-sim[i], i))[:4])
        assert clip_labels(sim, 4).indices(32) == want


def test_pseudo_labels_validation():
    with pytest.raises(ValueError):
        PseudoLabels((0.5, 0.2), (1, 1))
    with pytest.raises(ValueError):
        PseudoLabels((1.2,), (1,))
    with pytest.raises(ValueError):
        PseudoLabels((0.2,), (1, 1))


def test_question_meta_validation():
    with pytest.raises(ValueError):
        QuestionMeta("q", temporal_cue="after")
    with pytest.raises(ValueError):
        QuestionMeta("q", temporal_cue="during", cue_anchor="x")


# uniform grid ---------------------------------------------------------------


def test_uniform_grid_values():
    assert uniform_grid(32, 4) == [0, 10, 21, 31]
    assert uniform_grid(8, 2) == [0, 7]
    assert uniform_grid(5, 5) == [0, 1, 2, 3, 4]
    assert uniform_grid(7, 1) == [3]


@given(st.integers(2, 200), st.data())
def test_uniform_grid_matches_half_up_formula(T, data):
    N = data.draw(st.integers(2, T))
    from fractions import Fraction
    import math

    want = [math.floor(Fraction(j * (T - 1), N - 1) + Fraction(1, 2)) for j in range(N)]
    assert uniform_grid(T, N) == want
    q = QuestionMeta("nothing matches", {"zebra"})
    assert rule_rank(frames_from({}, T), q, N) == want


# rule ranker -------------------------------------------------------------------


def test_duplicate_by_feature_cosine():
    f = np.array([1.0, 0.0, 0.0])
    near = np.array([1.0, 0.05, 0.0])
    shown = {1: ({"dog"}, (), 1, f), 4: ({"dog"}, (), 2, near), 6: ({"dog"}, (), 3, np.array([0.0, 1.0, 0.0]))}
    frames = frames_from(shown, 8)
    # frames without a feature carry a zero vector here, which never counts as a duplicate
    frames = [fr if fr.feature.size else FrameMeta(fr.index, fr.entities, fr.actions, fr.segment_id, np.zeros(3))
              for fr in frames]
    q = QuestionMeta("dog?", {"dog"})
    assert rule_rank(frames, q, 2, dup_threshold=0.95) == [1, 6]
    assert rule_rank(frames, q, 3, dup_threshold=0.999999) == [1, 4, 6]


def test_duplicate_group_keeps_clearer_frame():
    # frames 2 and 5 are identical in content and scene, 5 shows more
    shown = {2: ({"cat"}, (), 7), 5: ({"cat"}, (), 7), 6: ({"cat"}, {"jump"}, 7)}
    q = QuestionMeta("Why did the cat jump?", {"cat"}, {"jump"})
    out = rule_rank_explained(frames_from(shown, 10), q, 2)
    assert out.indices == [2, 6]
    assert out.overlap[6] == 2


def test_after_cue_uses_last_anchor_and_before_the_first():
    shown = {
        1: ({"child"}, ()),
        2: ((), {"call"}),
        4: ((), {"call"}),
        5: ({"child"}, ()),
        7: ({"child"}, ()),
    }
    frames = frames_from(shown, 10)
    after = QuestionMeta("q", {"child"}, (), "after", "call")
    before = QuestionMeta("q", {"child"}, (), "before", "call")
    assert rule_rank(frames, after, 2) == [5, 7]
    assert rule_rank(frames, before, 1) == [1]


def test_missing_anchor_skips_temporal_rule():
    frames = frames_from({1: ({"child"}, ())}, 6)
    q = QuestionMeta("q", {"child"}, (), "after", "call")
    out = rule_rank_explained(frames, q, 1)
    assert out.indices == [1]
    assert any("rule 3 skipped" in n for n in out.notes)


def test_fill_skips_used_grid_points():
    # frame 0 is a match and a grid point, so the fill takes the next free grid points
    frames = frames_from({0: ({"dog"}, ())}, 8)
    assert rule_rank(frames, QuestionMeta("q", {"dog"}), 2) == [0, 7]
    assert rule_rank(frames, QuestionMeta("q", {"dog"}), 3) == [0, 4, 7]
    # a match off the grid leaves the first grid points to fill in order
    frames = frames_from({5: ({"dog"}, ())}, 32)
    assert rule_rank(frames, QuestionMeta("q", {"dog"}), 4) == [0, 5, 10, 21]


def test_rule_rank_checks_frames():
    with pytest.raises(DimensionError):
        rule_rank(frames_from({}, 3), QuestionMeta("q"), 4)
    with pytest.raises(DimensionError):
        rule_rank([FrameMeta(0), FrameMeta(2)], QuestionMeta("q"), 1)


@settings(max_examples=200, deadline=None)
@given(st.integers(1, 30), st.data())
def test_rule_rank_shape_property(T, data):
    N = data.draw(st.integers(1, T))
    ents = st.sets(st.sampled_from("abcd"), max_size=3)
    acts = st.sets(st.sampled_from("xyz"), max_size=2)
    frames = [FrameMeta(t, data.draw(ents), data.draw(acts), data.draw(st.integers(0, 2))) for t in range(T)]
    cue = data.draw(st.sampled_from(["none", "before", "after"]))
    q = QuestionMeta("q", data.draw(ents), data.draw(acts), cue, "x" if cue != "none" else None)
    out = rule_rank(frames, q, N)
    assert out == sorted(set(out)) and len(out) == N and all(0 <= i < T for i in out)


# question metadata ------------------------------------------------------------


def test_question_meta_reads_cue_and_references():
    frames = frames_from({0: ({"child"}, {"call"}), 3: ({"dog"}, {"run"})}, 5)
    q = question_meta("What does the child do after the call?", "run", frames)
    assert q.temporal_cue == "after" and q.cue_anchor == "call"
    assert q.referenced_entities == {"child"}
    assert q.referenced_actions == {"call", "run"}
    plain = question_meta("What happens after the door opens?", "", frames)
    assert plain.temporal_cue == "none"


# fusion -----------------------------------------------------------------------


def test_fuse_degenerate_alphas():
    clip, vlm = labels([0.0, 0.2, 0.4], "clip"), labels([0.4, 0.6, 1.0], "vlm")
    assert fuse_labels(clip, vlm, 1.0, 3).timestamps == vlm.timestamps
    assert fuse_labels(clip, vlm, 0.0, 3).timestamps == clip.timestamps


def test_fuse_half_alpha_example():
    a, b, c = 0.1, 0.5, 0.8
    out = fuse_labels(labels([a, b], "clip"), labels([b, c], "vlm"), 0.5, 2)
    assert out.timestamps == (a, b)
    assert out.source_weights == (0.5, 1.0)
    assert out.sources == ("clip", "clip+vlm")


@given(st.floats(0, 1), st.floats(0, 1))
def test_fuse_weights_monotone_in_alpha(a1, a2):
    lo, hi = sorted((a1, a2))
    clip, vlm = labels([0.0, 0.5], "clip"), labels([0.75, 1.0], "vlm")
    w = lambda alpha: dict(zip(*(lambda r: (r.timestamps, r.source_weights))(fuse_labels(clip, vlm, alpha, 4))))
    assert w(hi)[1.0] >= w(lo)[1.0]


def test_fuse_rejects_bad_alpha():
    with pytest.raises(ValueError):
        fuse_labels(labels([0.0]), labels([1.0]), 1.5, 1)


# target masks -----------------------------------------------------------------


def test_target_masks():
    tm = target_masks(labels([0.5]), 5, 0.1)
    assert int(np.argmax(tm.masks[0])) == 2 and tm.masks[0, 2] == 1.0
    twin = target_masks(labels([0.3, 0.3]), 7, 0.1)
    assert np.array_equal(twin.masks[0], twin.masks[1])
    assert np.array_equal(target_masks(labels([0.25]), 5, 0.1).masks[0], gaussian_mask(GaussianParams(0.25, 0.1), 5))
    with pytest.raises(ValueError):
        target_masks(labels([0.25]), 5, 0.0)


def test_to_timestamps():
    assert to_timestamps([3, 0], 4) == (0.0, 1.0)
