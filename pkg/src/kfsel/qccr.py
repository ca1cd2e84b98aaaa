"""Coverage-regularized keyframe selection.

Objective over an index set ``I`` of size ``N``::

    F(I) = sum(s[i] for i in I) + lam * c(I)
    c(I) = (1/T) * sum_t max_{i in I} exp(-(t - i)^2 / (2 tau^2))

``c`` is a facility-location coverage with a Gaussian kernel over frame
indices. It is monotone submodular, which gives the greedy solver its
``1 - 1/e`` guarantee for nonnegative scores. On a line, the kernel only
decreases with distance, so every frame is covered by its nearest selected
index and ``c`` splits into independent pieces between consecutive
selections. ``select_dp`` uses that to maximize ``F`` exactly.

All solvers break ties the same way: among index sets whose objective is
within ``TIE_TOL * max(1, |F*|)`` of the optimum, the lexicographically
smallest sorted index vector wins.
"""

from __future__ import annotations

import heapq
import itertools
import math
from dataclasses import asdict, dataclass
from functools import lru_cache
from typing import Mapping

import numpy as np

from kfsel.core import DimensionError, KeyframeSelection
from kfsel.errors import ConfigError, SolverError
from kfsel.qtype import QuestionType

TIE_TOL = 1e-9
BRUTE_LIMIT = 10**6


@dataclass(frozen=True)
class CoverageKernel:
    tau: float

    def __post_init__(self):
        if not math.isfinite(self.tau) or self.tau <= 0:
            raise ConfigError(f"kernel bandwidth tau must be positive, got {self.tau}")

    @classmethod
    def default(cls, T: int) -> "CoverageKernel":
        return cls(T / 8.0)


@dataclass(frozen=True)
class LambdaTable:
    descriptive: float = 0.2
    temporal: float = 0.8
    causal: float = 0.5

    def __post_init__(self):
        for name, value in asdict(self).items():
            if not math.isfinite(value) or value < 0:
                raise ConfigError(f"lambda for {name} must be finite and >= 0, got {value}")

    @classmethod
    def from_mapping(cls, mapping: Mapping[str, float]) -> "LambdaTable":
        values = {}
        for key, value in mapping.items():
            try:
                qtype = QuestionType.parse(key)
            except ValueError as exc:
                raise ConfigError(str(exc)) from None
            values[qtype.value] = float(value)
        missing = {t.value for t in QuestionType} - set(values)
        if missing:
            raise ConfigError(f"lambda table is missing {sorted(missing)}")
        return cls(**values)

    def to_dict(self) -> dict:
        return {t.value: getattr(self, t.value) for t in QuestionType}

    def scaled(self, factor: float) -> "LambdaTable":
        return LambdaTable(**{k: v * factor for k, v in self.to_dict().items()})


def lambda_for(qtype, table) -> float:
    qtype = QuestionType.parse(qtype)
    if isinstance(table, LambdaTable):
        return float(getattr(table, qtype.value))
    try:
        return float(table[qtype.value])
    except KeyError:
        raise ConfigError(f"lambda table has no entry for {qtype.value!r}") from None


@lru_cache(maxsize=64)
def _tables(T: int, tau: float):
    """Kernel tables shared by every solver for a given (T, tau)."""
    d = np.arange(T, dtype=np.float64)
    k = np.exp(-(d**2) / (2.0 * tau**2))
    # cs[j] = k[1] + ... + k[j]
    cs = np.concatenate([[0.0], np.cumsum(k[1:])])
    gaps = np.arange(T)
    half = np.maximum(gaps - 1, 0) // 2
    between = 2.0 * cs[half] + np.where((gaps % 2 == 0) & (gaps > 0), k[gaps // 2], 0.0)
    prefix = cs[:T]
    suffix = cs[T - 1 - np.arange(T)]
    jj, ll = np.meshgrid(np.arange(T), np.arange(T), indexing="ij")
    gap = ll - jj
    gap_cov = np.where(gap > 0, between[np.clip(gap, 0, T - 1)], 0.0)
    gap_mask = np.where(gap > 0, 0.0, -np.inf)
    kmat = k[np.abs(gap)]
    for arr in (prefix, suffix, gap_cov, gap_mask, kmat):
        arr.setflags(write=False)
    return prefix, suffix, gap_cov, gap_mask, kmat


def _as_scores(scores, N: int) -> np.ndarray:
    s = np.asarray(scores, dtype=np.float64)
    if s.ndim != 1 or not np.all(np.isfinite(s)):
        raise ValueError("scores must be a finite 1-d vector")
    if N < 1 or N > len(s):
        raise DimensionError(f"cannot select N={N} of T={len(s)} frames")
    return s


def _check_indices(I, T: int) -> list[int]:
    idx = sorted(int(i) for i in I)
    if not idx:
        raise ValueError("index set is empty")
    if idx[0] < 0 or idx[-1] >= T:
        raise DimensionError(f"indices {idx} out of range for T={T}")
    if len(set(idx)) != len(idx):
        raise ValueError(f"indices {idx} contain duplicates")
    return idx


def coverage(I, T: int, kernel: CoverageKernel) -> float:
    idx = _check_indices(I, T)
    t = np.arange(T, dtype=np.float64)
    dist = t[None, :] - np.asarray(idx, dtype=np.float64)[:, None]
    return float(np.exp(-(dist**2) / (2.0 * kernel.tau**2)).max(axis=0).sum() / T)


def objective(scores, I, lam: float, kernel: CoverageKernel) -> float:
    s = np.asarray(scores, dtype=np.float64)
    idx = _check_indices(I, len(s))
    return float(s[idx].sum() + lam * coverage(idx, len(s), kernel))


def _finish(s, idx, lam, kernel) -> KeyframeSelection:
    idx = sorted(int(i) for i in idx)
    return KeyframeSelection(tuple(idx), objective(s, idx, lam, kernel))


def _tol(best: float) -> float:
    return TIE_TOL * max(1.0, abs(best))


def select_brute(scores, N: int, lam: float, kernel: CoverageKernel) -> KeyframeSelection:
    s = _as_scores(scores, N)
    T = len(s)
    if math.comb(T, N) > BRUTE_LIMIT:
        raise SolverError(
            f"C({T},{N}) = {math.comb(T, N)} subsets exceeds {BRUTE_LIMIT}; use the dp solver"
        )
    kmat = _tables(T, float(kernel.tau))[4]
    chunks_idx, chunks_val = [], []
    combos = itertools.combinations(range(T), N)
    while True:
        block = np.array(list(itertools.islice(combos, 20000)), dtype=np.intp)
        if block.size == 0:
            break
        cov = kmat[block].max(axis=1).sum(axis=1) / T
        chunks_idx.append(block)
        chunks_val.append(s[block].sum(axis=1) + lam * cov)
    combos_arr = np.concatenate(chunks_idx)
    values = np.concatenate(chunks_val)
    best = values.max()
    # combinations() enumerates in lexicographic order, so the first hit wins
    pick = int(np.argmax(values >= best - _tol(best)))
    return _finish(s, combos_arr[pick], lam, kernel)


def _dp_layers(s: np.ndarray, N: int, a: float, T: int, tau: float):
    """Backward tables: ``h[r][j]`` is the best value of a selection whose
    first index is ``j`` and which holds ``r`` indices from ``j`` on."""
    prefix, suffix, gap_cov, gap_mask, _ = _tables(T, tau)
    h = [None, s + a * (1.0 + suffix)]
    step = a * gap_cov + gap_mask
    for _ in range(2, N + 1):
        h.append(s + a + (step + h[-1][None, :]).max(axis=1))
    return h, prefix, step


def select_dp(scores, N: int, lam: float, kernel: CoverageKernel) -> KeyframeSelection:
    """Exact maximizer, O(N T^2) time."""
    s = _as_scores(scores, N)
    T = len(s)
    a = lam / T
    h, prefix, step = _dp_layers(s, N, a, T, float(kernel.tau))

    first = a * prefix + h[N]
    best = first.max()
    floor = best - _tol(best)
    j = int(np.argmax(first >= floor))
    chosen = [j]
    acc = a * prefix[j] + s[j] + a
    for r in range(N - 1, 0, -1):
        cand = acc + step[j] + h[r]
        nxt = int(np.argmax(cand >= floor))
        acc += step[j, nxt] + s[nxt] + a
        chosen.append(nxt)
        j = nxt
    return _finish(s, chosen, lam, kernel)


def select_greedy(
    scores, N: int, lam: float, kernel: CoverageKernel, lazy: bool = True
) -> KeyframeSelection:
    """Greedy on marginal gain; ``lazy`` re-validates stale heap entries."""
    s = _as_scores(scores, N)
    T = len(s)
    a = lam / T
    kmat = _tables(T, float(kernel.tau))[4]
    cov = np.zeros(T)

    def gains(rows):
        return s[rows] + a * np.maximum(kmat[rows] - cov[None, :], 0.0).sum(axis=1)

    chosen: list[int] = []
    if not lazy:
        taken = np.zeros(T, dtype=bool)
        for _ in range(N):
            g = gains(slice(None))
            g[taken] = -np.inf
            i = int(np.argmax(g))
            chosen.append(i)
            taken[i] = True
            cov = np.maximum(cov, kmat[i])
        return _finish(s, chosen, lam, kernel)

    heap = [(-float(g), i) for i, g in enumerate(gains(slice(None)))]
    heapq.heapify(heap)
    while len(chosen) < N:
        _, i = heapq.heappop(heap)
        fresh = (-float(gains([i])[0]), i)
        # stale gains only overestimate, so beating the next bound settles it
        if not heap or fresh <= heap[0]:
            chosen.append(i)
            cov = np.maximum(cov, kmat[i])
        else:
            heapq.heappush(heap, fresh)
    return _finish(s, chosen, lam, kernel)


SOLVERS = {"dp": select_dp, "greedy": select_greedy, "brute": select_brute}


def select(scores, N: int, lam: float, kernel: CoverageKernel, solver: str = "dp"):
    try:
        fn = SOLVERS[solver]
    except KeyError:
        raise ConfigError(f"unknown solver {solver!r}; choose from {sorted(SOLVERS)}") from None
    return fn(scores, N, lam, kernel)
