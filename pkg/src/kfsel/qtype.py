"""Keyword classifier for question types.

Decision table, applied to the lowercased question:

  causal       first word is "why", or it contains "how come",
               "what causes" or a word starting with "reason"
  temporal     otherwise, it contains one of the words before, after, when,
               while, then, during, or the phrases "at the end",
               "at the start"
  descriptive  everything else, including the empty string
"""

from __future__ import annotations

import enum
import re


class QuestionType(str, enum.Enum):
    DESCRIPTIVE = "descriptive"
    TEMPORAL = "temporal"
    CAUSAL = "causal"

    @classmethod
    def parse(cls, value: "str | QuestionType") -> "QuestionType":
        if isinstance(value, QuestionType):
            return value
        try:
            return cls(str(value).strip().lower())
        except ValueError:
            raise ValueError(
                f"unknown question type {value!r}; expected one of "
                + ", ".join(t.value for t in cls)
            ) from None


_CAUSAL = re.compile(r"^\W*why\b|\bhow come\b|\bwhat causes\b|\breason")
_TEMPORAL = re.compile(
    r"\b(before|after|when|while|then|during)\b|\bat the (end|start)\b"
)


def classify(text: str) -> QuestionType:
    q = text.lower()
    if _CAUSAL.search(q):
        return QuestionType.CAUSAL
    if _TEMPORAL.search(q):
        return QuestionType.TEMPORAL
    return QuestionType.DESCRIPTIVE
