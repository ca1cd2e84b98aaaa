"""JSONL corpora: QA pairs, frame scores, frame metadata, embeddings, labels,
ground truth and selections.

Every file starts with a header object carrying ``"format"`` (and ``"T"`` or
``"D"`` where record sizes depend on it), followed by one JSON object per
line. Loaders validate strictly: a missing field or a wrong length is a
``DataError`` naming the file and line, an unknown field is a warning.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Iterable

import numpy as np

from kfsel.errors import DataError
from kfsel.qtype import QuestionType
from kfsel.sks import FrameMeta, PseudoLabels

QA_FORMAT = "kfsel-qa-v1"
SCORES_FORMAT = "kfsel-scores-v1"
META_FORMAT = "kfsel-meta-v1"
LABELS_FORMAT = "kfsel-labels-v1"
TRUTH_FORMAT = "kfsel-truth-v1"
SELECTIONS_FORMAT = "kfsel-selections-v1"
EMBEDDINGS_FORMAT = "kfsel-embeddings-v1"
DIAGNOSTICS_FORMAT = "kfsel-diagnostics-v1"


class DataWarning(UserWarning):
    pass


@dataclass(frozen=True)
class QARecord:
    video_id: str
    question_id: str
    question: str
    answer: str
    choices: tuple[str, ...] | None = None
    qtype: QuestionType | None = None

    @property
    def key(self) -> tuple[str, str]:
        return (self.video_id, self.question_id)

    def to_json(self) -> dict:
        obj: dict[str, Any] = {
            "video_id": self.video_id,
            "question_id": self.question_id,
            "question": self.question,
            "answer": self.answer,
        }
        if self.choices is not None:
            obj["choices"] = list(self.choices)
        if self.qtype is not None:
            obj["qtype"] = self.qtype.value
        return obj


# field checks ---------------------------------------------------------------


def _nonempty_str(v):
    return isinstance(v, str) and v != ""


def _str(v):
    return isinstance(v, str)


def _int(v):
    return isinstance(v, int) and not isinstance(v, bool)


def _real(v):
    return isinstance(v, (int, float)) and not isinstance(v, bool) and math.isfinite(v)


def _reals(v):
    return isinstance(v, list) and all(_real(x) for x in v)


def _ints(v):
    return isinstance(v, list) and all(_int(x) for x in v)


def _strs(v):
    return isinstance(v, list) and all(_str(x) for x in v)


_DESCRIBE = {
    _nonempty_str: "a non-empty string",
    _str: "a string",
    _int: "an integer",
    _real: "a finite number",
    _reals: "a list of finite numbers",
    _ints: "a list of integers",
    _strs: "a list of strings",
    list: "a list",
}


def _check_fields(obj, required: dict, optional: dict, path, line, what="record"):
    if not isinstance(obj, dict):
        raise DataError(f"{what} must be a JSON object", path, line)
    for key, check in required.items():
        if key not in obj:
            raise DataError(f"missing required field {key!r}", path, line)
    for key, value in obj.items():
        check = required.get(key) or optional.get(key)
        if check is None:
            warnings.warn(f"{path}:{line}: unknown field {key!r} ignored", DataWarning, stacklevel=4)
            continue
        ok = isinstance(value, list) if check is list else check(value)
        if not ok:
            raise DataError(f"field {key!r} must be {_DESCRIBE[check]}", path, line)


# generic JSONL --------------------------------------------------------------


def _read_jsonl(path, fmt: str, header_fields: dict | None = None):
    path = Path(path)
    if not path.exists():
        raise DataError("file not found", path)
    header = None
    records = []
    with path.open() as fh:
        for lineno, text in enumerate(fh, start=1):
            if not text.strip():
                continue
            try:
                obj = json.loads(text)
            except json.JSONDecodeError as exc:
                raise DataError(f"invalid JSON: {exc.msg} (column {exc.colno})", path, lineno) from None
            if header is None:
                _check_fields(obj, {"format": _str, **(header_fields or {})}, {}, path, lineno, "header")
                if obj["format"] != fmt:
                    raise DataError(f"expected format {fmt!r}, got {obj['format']!r}", path, lineno)
                header = obj
                continue
            records.append((lineno, obj))
    if header is None:
        raise DataError("empty file: missing header line", path)
    return header, records


def _write_jsonl(path, header: dict, records: Iterable[dict]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w") as fh:
        fh.write(json.dumps(header) + "\n")
        for rec in records:
            fh.write(json.dumps(rec) + "\n")


def _positive(header, key, path):
    if header[key] < 1:
        raise DataError(f"header field {key!r} must be positive", path, 1)
    return header[key]


# QA -------------------------------------------------------------------------

_QA_REQUIRED = {"video_id": _nonempty_str, "question_id": _nonempty_str, "question": _str, "answer": _str}
_QA_OPTIONAL = {"choices": _strs, "qtype": _str}


def load_qa(path) -> list[QARecord]:
    _, rows = _read_jsonl(path, QA_FORMAT)
    out, seen = [], set()
    for line, obj in rows:
        _check_fields(obj, _QA_REQUIRED, _QA_OPTIONAL, path, line)
        qtype = None
        if "qtype" in obj:
            try:
                qtype = QuestionType.parse(obj["qtype"])
            except ValueError as exc:
                raise DataError(str(exc), path, line) from None
        rec = QARecord(
            obj["video_id"], obj["question_id"], obj["question"], obj["answer"],
            tuple(obj["choices"]) if "choices" in obj else None, qtype,
        )
        if rec.key in seen:
            raise DataError(f"duplicate record {rec.key}", path, line)
        seen.add(rec.key)
        out.append(rec)
    return out


def write_qa(path, records: Iterable[QARecord]) -> None:
    _write_jsonl(path, {"format": QA_FORMAT}, (r.to_json() for r in records))


# scores ---------------------------------------------------------------------


def load_scores(path) -> dict[tuple[str, str], np.ndarray]:
    header, rows = _read_jsonl(path, SCORES_FORMAT, {"T": _int})
    T = _positive(header, "T", path)
    out = {}
    for line, obj in rows:
        _check_fields(obj, {"video_id": _nonempty_str, "question_id": _nonempty_str, "scores": _reals}, {}, path, line)
        if len(obj["scores"]) != T:
            raise DataError(f"field 'scores' has {len(obj['scores'])} values, expected T={T}", path, line)
        key = (obj["video_id"], obj["question_id"])
        if key in out:
            raise DataError(f"duplicate record {key}", path, line)
        out[key] = np.array(obj["scores"], dtype=np.float64)
    return out


def write_scores(path, scores: dict, T: int) -> None:
    _write_jsonl(
        path,
        {"format": SCORES_FORMAT, "T": T},
        ({"video_id": v, "question_id": q, "scores": [float(x) for x in s]} for (v, q), s in scores.items()),
    )


# frame metadata -------------------------------------------------------------

_FRAME_FIELDS = {"index": _int, "entities": _strs, "actions": _strs, "segment_id": _int, "feature": _reals}


def load_meta(path) -> dict[str, list[FrameMeta]]:
    header, rows = _read_jsonl(path, META_FORMAT, {"T": _int})
    T = _positive(header, "T", path)
    out = {}
    for line, obj in rows:
        _check_fields(obj, {"video_id": _nonempty_str, "frames": list}, {}, path, line)
        frames = []
        for fr in obj["frames"]:
            _check_fields(fr, _FRAME_FIELDS, {}, path, line, "frame")
            frames.append(FrameMeta(fr["index"], fr["entities"], fr["actions"], fr["segment_id"], fr["feature"]))
        if sorted(fr.index for fr in frames) != list(range(T)):
            raise DataError(f"frames must carry indices 0..{T - 1} exactly once (T={T})", path, line)
        if obj["video_id"] in out:
            raise DataError(f"duplicate video {obj['video_id']!r}", path, line)
        out[obj["video_id"]] = sorted(frames, key=lambda fr: fr.index)
    return out


def frame_to_json(fr: FrameMeta) -> dict:
    return {
        "index": fr.index,
        "entities": sorted(fr.entities),
        "actions": sorted(fr.actions),
        "segment_id": fr.segment_id,
        "feature": [float(x) for x in fr.feature],
    }


def write_meta(path, meta: dict[str, list[FrameMeta]], T: int) -> None:
    _write_jsonl(
        path,
        {"format": META_FORMAT, "T": T},
        ({"video_id": v, "frames": [frame_to_json(fr) for fr in frames]} for v, frames in meta.items()),
    )


# embeddings -----------------------------------------------------------------


def load_embeddings(path) -> dict[tuple[str, str], np.ndarray]:
    """Question embeddings that replace hashed text features when given."""
    header, rows = _read_jsonl(path, EMBEDDINGS_FORMAT, {"D": _int})
    D = _positive(header, "D", path)
    out = {}
    for line, obj in rows:
        _check_fields(obj, {"video_id": _nonempty_str, "question_id": _nonempty_str, "embedding": _reals}, {}, path, line)
        if len(obj["embedding"]) != D:
            raise DataError(f"field 'embedding' has {len(obj['embedding'])} values, expected D={D}", path, line)
        out[(obj["video_id"], obj["question_id"])] = np.array(obj["embedding"], dtype=np.float64)
    return out


def write_embeddings(path, embeddings: dict, D: int) -> None:
    _write_jsonl(
        path,
        {"format": EMBEDDINGS_FORMAT, "D": D},
        ({"video_id": v, "question_id": q, "embedding": [float(x) for x in e]} for (v, q), e in embeddings.items()),
    )


# labels ---------------------------------------------------------------------


def load_labels(path) -> tuple[int, dict[tuple[str, str], PseudoLabels]]:
    header, rows = _read_jsonl(path, LABELS_FORMAT, {"T": _int})
    T = _positive(header, "T", path)
    out = {}
    for line, obj in rows:
        _check_fields(
            obj,
            {"video_id": _nonempty_str, "question_id": _nonempty_str, "timestamps": _reals, "weights": _reals},
            {"sources": _strs},
            path, line,
        )
        try:
            labels = PseudoLabels(obj["timestamps"], obj["weights"], obj.get("sources", ()))
        except ValueError as exc:
            raise DataError(str(exc), path, line) from None
        out[(obj["video_id"], obj["question_id"])] = labels
    return T, out


def write_labels(path, labels: dict[tuple[str, str], PseudoLabels], T: int) -> None:
    _write_jsonl(
        path,
        {"format": LABELS_FORMAT, "T": T},
        (
            {
                "video_id": v,
                "question_id": q,
                "timestamps": list(lb.timestamps),
                "weights": list(lb.source_weights),
                "sources": list(lb.sources),
            }
            for (v, q), lb in labels.items()
        ),
    )


# ground truth ---------------------------------------------------------------

_TRUTH_REQUIRED = {"video_id": _nonempty_str, "question_id": _nonempty_str, "indices": _ints}
_TRUTH_OPTIONAL = {"qtype": _str, "cue": _str, "anchor_indices": _ints}


def load_truth(path) -> tuple[int, dict[tuple[str, str], dict]]:
    header, rows = _read_jsonl(path, TRUTH_FORMAT, {"T": _int})
    T = _positive(header, "T", path)
    out = {}
    for line, obj in rows:
        _check_fields(obj, _TRUTH_REQUIRED, _TRUTH_OPTIONAL, path, line)
        if any(not 0 <= i < T for i in obj["indices"]):
            raise DataError(f"field 'indices' out of range for T={T}", path, line)
        out[(obj["video_id"], obj["question_id"])] = obj
    return T, out


def write_truth(path, truth: Iterable[dict], T: int) -> None:
    _write_jsonl(path, {"format": TRUTH_FORMAT, "T": T}, truth)


# selections -----------------------------------------------------------------

_SEL_REQUIRED = {
    "video_id": _nonempty_str,
    "question_id": _nonempty_str,
    "indices": _ints,
    "objective": _real,
    "lambda": _real,
    "qtype": _str,
}


def load_selections(path) -> tuple[dict, list[dict]]:
    header, rows = _read_jsonl(path, SELECTIONS_FORMAT, {"T": _int, "N": _int})
    T = _positive(header, "T", path)
    out = []
    for line, obj in rows:
        _check_fields(obj, _SEL_REQUIRED, {}, path, line)
        idx = obj["indices"]
        if len(idx) != header["N"] or idx != sorted(set(idx)) or any(not 0 <= i < T for i in idx):
            raise DataError(f"field 'indices' must be {header['N']} sorted unique frames in [0,{T})", path, line)
        try:
            QuestionType.parse(obj["qtype"])
        except ValueError as exc:
            raise DataError(str(exc), path, line) from None
        out.append(obj)
    return header, out


def write_selections(path, rows: Iterable[dict], T: int, N: int) -> None:
    _write_jsonl(path, {"format": SELECTIONS_FORMAT, "T": T, "N": N}, rows)


def load_diagnostics(path) -> dict[tuple[str, str], dict]:
    _, rows = _read_jsonl(path, DIAGNOSTICS_FORMAT)
    out = {}
    for line, obj in rows:
        _check_fields(
            obj,
            {"video_id": _nonempty_str, "question_id": _nonempty_str, "greedy_objective": _real, "exact_objective": _real},
            {},
            path, line,
        )
        out[(obj["video_id"], obj["question_id"])] = obj
    return out


def write_diagnostics(path, rows: Iterable[dict]) -> None:
    _write_jsonl(path, {"format": DIAGNOSTICS_FORMAT}, rows)


def write_json(path, obj) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, indent=2) + "\n")


def read_json(path, what: str = "file") -> Any:
    path = Path(path)
    if not path.exists():
        raise DataError(f"{what} not found", path)
    try:
        return json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise DataError(f"invalid JSON: {exc.msg} (column {exc.colno})", path, exc.lineno) from None

