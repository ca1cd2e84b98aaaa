"""Client for an external frame ranker (a multimodal model behind HTTP).

Wire contract, ``POST {endpoint}/rank``::

    request   {"question": str, "N": int,
               "frames": [{"index", "entities", "actions", "segment_id"}, ...]}
    response  {"indices": [int, ...], "confidence": float?}
          or  {"refusal": str}

A response is accepted only if it holds at least ``N`` unique in-range
indices. Anything else raises an ``ExternalRankError`` subclass; callers fall
back to the local rule ranker.
"""

from __future__ import annotations

import json
import logging
import os
import socket
import urllib.error
import urllib.request
from dataclasses import dataclass
from typing import Sequence

from kfsel.errors import KfselError
from kfsel.sks import FrameMeta, QuestionMeta, rule_rank

log = logging.getLogger(__name__)

ENV_ENDPOINT = "KFSEL_EXTERNAL_RANKER"


class ExternalRankError(KfselError):
    kind = "external"


class ExternalTimeout(ExternalRankError):
    pass


class ExternalRefusal(ExternalRankError):
    pass


class ExternalValidationError(ExternalRankError):
    pass


@dataclass(frozen=True)
class ExternalRankRequest:
    question: str
    frames: tuple[FrameMeta, ...]
    N: int

    def to_json(self) -> dict:
        return {
            "question": self.question,
            "N": self.N,
            "frames": [
                {
                    "index": fr.index,
                    "entities": sorted(fr.entities),
                    "actions": sorted(fr.actions),
                    "segment_id": fr.segment_id,
                }
                for fr in self.frames
            ],
        }


@dataclass(frozen=True)
class ExternalRankResponse:
    indices: tuple[int, ...]
    confidence: float | None = None

    def top(self, N: int) -> list[int]:
        return sorted(self.indices[:N])


def parse_response(payload, N: int, T: int) -> ExternalRankResponse:
    if not isinstance(payload, dict):
        raise ExternalValidationError("response must be a JSON object")
    if "refusal" in payload:
        raise ExternalRefusal(f"ranker refused: {payload['refusal']}")
    idx = payload.get("indices")
    if not isinstance(idx, list) or not all(isinstance(i, int) and not isinstance(i, bool) for i in idx):
        raise ExternalValidationError("'indices' must be a list of integers")
    if len(set(idx)) != len(idx):
        raise ExternalValidationError(f"duplicate indices in {idx}")
    if any(not 0 <= i < T for i in idx):
        raise ExternalValidationError(f"indices {idx} out of range for T={T}")
    if len(idx) < N:
        raise ExternalValidationError(f"got {len(idx)} indices, need at least N={N}")
    conf = payload.get("confidence")
    if conf is not None and not isinstance(conf, (int, float)):
        raise ExternalValidationError("'confidence' must be a number")
    return ExternalRankResponse(tuple(idx), None if conf is None else float(conf))


def external_rank(endpoint: str, req: ExternalRankRequest, timeout: float = 10.0) -> ExternalRankResponse:
    url = endpoint.rstrip("/") + "/rank"
    body = json.dumps(req.to_json()).encode("utf-8")
    http_req = urllib.request.Request(
        url, data=body, method="POST", headers={"Content-Type": "application/json"}
    )
    try:
        with urllib.request.urlopen(http_req, timeout=timeout) as resp:
            raw = resp.read()
    except urllib.error.HTTPError as exc:
        raise ExternalRankError(f"{url}: HTTP {exc.code}") from None
    except urllib.error.URLError as exc:
        if isinstance(exc.reason, (socket.timeout, TimeoutError)):
            raise ExternalTimeout(f"{url}: timed out after {timeout}s") from None
        raise ExternalRankError(f"{url}: {exc.reason}") from None
    except (socket.timeout, TimeoutError):
        raise ExternalTimeout(f"{url}: timed out after {timeout}s") from None
    except OSError as exc:
        raise ExternalRankError(f"{url}: {exc}") from None
    try:
        payload = json.loads(raw)
    except (json.JSONDecodeError, UnicodeDecodeError):
        raise ExternalValidationError(f"{url}: response is not valid JSON") from None
    return parse_response(payload, req.N, len(req.frames))


def resolve_endpoint(configured: str | None) -> str | None:
    return os.environ.get(ENV_ENDPOINT) or configured


def rank_with_fallback(
    endpoint: str | None,
    frames: Sequence[FrameMeta],
    q: QuestionMeta,
    N: int,
    dup_threshold: float = 0.95,
    timeout: float = 10.0,
) -> tuple[list[int], str]:
    """Ranked indices plus the name of the source that produced them."""
    if endpoint:
        try:
            resp = external_rank(endpoint, ExternalRankRequest(q.text, tuple(frames), N), timeout)
            return resp.top(N), "external"
        except ExternalRankError as exc:
            log.warning("external ranker failed, using rule ranker: %s", exc)
    return rule_rank(frames, q, N, dup_threshold), "rules"
