"""Linear Gaussian generator: question features -> K temporal Gaussians.

Each Gaussian is read off two raw outputs of the linear layer::

    center = logistic(raw[2k])
    width  = sigma_min + softplus(raw[2k + 1])

Targets are unit-peak Gaussian masks built from pseudo timestamps. Predicted
and target masks are paired by rank (sorted centers against sorted
timestamps) and compared with a plain mean squared error over all K*T cells.
"""

from __future__ import annotations

import hashlib
import json
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from kfsel.core import DimensionError, GaussianParams, gaussian_mask, normalize_sum, time_grid
from kfsel.errors import DataError

MODEL_FORMAT = "kfsel-model-v1"
_TOKEN = re.compile(r"[^a-z0-9]+")
# largest value strictly below 1.0 in float64
_ONE_MINUS = float(np.nextafter(1.0, 0.0))


def tokenize(text: str) -> list[str]:
    return [t for t in _TOKEN.split(text.lower()) if t]


def extract_features(question_text: str, D: int = 256) -> np.ndarray:
    """Signed feature hashing of lowercase alphanumeric tokens, L2-normalized."""
    if D < 8:
        raise DimensionError(f"feature dimension must be >= 8, got {D}")
    v = np.zeros(D)
    for tok in tokenize(question_text):
        digest = hashlib.blake2b(tok.encode("utf-8"), digest_size=16).digest()
        bucket = int.from_bytes(digest[:8], "little") % D
        v[bucket] += 1.0 if digest[8] & 1 else -1.0
    norm = np.linalg.norm(v)
    return v / norm if norm > 0 else v


@dataclass
class GeneratorModel:
    weights: np.ndarray  # (D, 2K)
    biases: np.ndarray  # (2K,)

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=np.float64)
        self.biases = np.asarray(self.biases, dtype=np.float64)
        if self.weights.ndim != 2 or self.weights.shape[1] % 2 or self.weights.shape[1] == 0:
            raise DimensionError(f"weights must be D x 2K, got shape {self.weights.shape}")
        if self.biases.shape != (self.weights.shape[1],):
            raise DimensionError(
                f"biases shape {self.biases.shape} does not match weights {self.weights.shape}"
            )
        if not (np.all(np.isfinite(self.weights)) and np.all(np.isfinite(self.biases))):
            raise ValueError("model parameters must be finite")

    @property
    def D(self) -> int:
        return self.weights.shape[0]

    @property
    def K(self) -> int:
        return self.weights.shape[1] // 2

    @classmethod
    def zeros(cls, D: int, K: int) -> "GeneratorModel":
        return cls(np.zeros((D, 2 * K)), np.zeros(2 * K))

    def copy(self) -> "GeneratorModel":
        return GeneratorModel(self.weights.copy(), self.biases.copy())

    def __eq__(self, other):
        if not isinstance(other, GeneratorModel):
            return NotImplemented
        return np.array_equal(self.weights, other.weights) and np.array_equal(
            self.biases, other.biases
        )


@dataclass
class TargetMasks:
    timestamps: np.ndarray  # (K,), sorted ascending
    masks: np.ndarray  # (K, T)

    @property
    def K(self) -> int:
        return len(self.timestamps)

    @property
    def T(self) -> int:
        return self.masks.shape[1]


def make_targets(timestamps: Sequence[float], T: int, sigma_target: float) -> TargetMasks:
    ts = np.sort(np.asarray(timestamps, dtype=np.float64))
    masks = np.array([gaussian_mask(GaussianParams(float(t), sigma_target), T) for t in ts])
    return TargetMasks(ts, masks.reshape(len(ts), T))


@dataclass
class TrainConfig:
    learning_rate: float = 1e-2
    epochs: int = 300
    seed: int = 0
    sigma_min: float = 0.01
    sigma_target: float | None = None  # None -> 1.5 / T
    betas: tuple[float, float] = (0.9, 0.999)
    eps: float = 1e-8
    init_scale: float = 0.01

    def __post_init__(self):
        if not self.learning_rate >= 0:
            raise ValueError(f"learning_rate must be >= 0, got {self.learning_rate}")
        if self.epochs < 1:
            raise ValueError(f"epochs must be >= 1, got {self.epochs}")
        if self.sigma_min <= 0:
            raise ValueError(f"sigma_min must be positive, got {self.sigma_min}")


def _logistic(x):
    return 0.5 * (1.0 + np.tanh(0.5 * x))


def _softplus(x):
    return np.logaddexp(0.0, x)


def _raw(model: GeneratorModel, f) -> np.ndarray:
    f = np.asarray(f, dtype=np.float64)
    if f.shape != (model.D,):
        raise DimensionError(f"feature length {f.shape} does not match model D={model.D}")
    return f @ model.weights + model.biases


def _decode(raw: np.ndarray, sigma_min: float):
    centers = np.clip(_logistic(raw[0::2]), 5e-324, _ONE_MINUS)
    widths = sigma_min + _softplus(raw[1::2])
    order = np.argsort(centers, kind="stable")
    return centers, widths, order


def forward(model: GeneratorModel, f, sigma_min: float = 0.01) -> list[GaussianParams]:
    centers, widths, order = _decode(_raw(model, f), sigma_min)
    return [GaussianParams(float(centers[k]), float(widths[k])) for k in order]


def frame_distribution(model: GeneratorModel, f, T: int, sigma_min: float = 0.01) -> np.ndarray:
    return normalize_sum([gaussian_mask(p, T) for p in forward(model, f, sigma_min)])


def _masks(centers, widths, T):
    x = time_grid(T)
    diff = x[None, :] - centers[:, None]
    return np.exp(-(diff**2) / (2.0 * widths[:, None] ** 2)), diff


def mse_loss(params: Sequence[GaussianParams], targets: TargetMasks, T: int) -> float:
    if len(params) != targets.K:
        raise DimensionError(f"{len(params)} predicted masks vs {targets.K} targets")
    if targets.T != T:
        raise DimensionError(f"target masks have length {targets.T}, expected {T}")
    ranked = sorted(params, key=lambda p: p.center)
    g = np.array([gaussian_mask(p, T) for p in ranked])
    return float(np.mean((g - targets.masks) ** 2))


def example_loss(model: GeneratorModel, f, targets: TargetMasks, sigma_min: float = 0.01) -> float:
    return mse_loss(forward(model, f, sigma_min), targets, targets.T)


def gradients(
    model: GeneratorModel, f, targets: TargetMasks, T: int | None = None, sigma_min: float = 0.01
) -> GeneratorModel:
    """Exact gradient of the example loss, shaped like the model."""
    return loss_and_gradients(model, f, targets, T, sigma_min)[1]


def loss_and_gradients(
    model: GeneratorModel, f, targets: TargetMasks, T: int | None = None, sigma_min: float = 0.01
) -> tuple[float, GeneratorModel]:
    T = targets.T if T is None else T
    if targets.K != model.K:
        raise DimensionError(f"model has K={model.K}, targets have K={targets.K}")
    f = np.asarray(f, dtype=np.float64)
    raw = _raw(model, f)
    centers, widths, order = _decode(raw, sigma_min)
    c, w = centers[order], widths[order]
    g, diff = _masks(c, w, T)
    resid = g - targets.masks
    loss = float(np.mean(resid**2))

    dg = (2.0 / resid.size) * resid
    dc = np.sum(dg * g * diff, axis=1) / w**2
    dw = np.sum(dg * g * diff**2, axis=1) / w**3

    dcen = np.empty(model.K)
    dwid = np.empty(model.K)
    dcen[order] = dc
    dwid[order] = dw
    saturated = (centers <= 5e-324) | (centers >= _ONE_MINUS)
    d_raw = np.empty(2 * model.K)
    d_raw[0::2] = np.where(saturated, 0.0, dcen * centers * (1.0 - centers))
    d_raw[1::2] = dwid * _logistic(raw[1::2])
    return loss, GeneratorModel(np.outer(f, d_raw), d_raw)


def _dataset_loss(model, dataset, sigma_min):
    return float(np.mean([example_loss(model, f, tg, sigma_min) for f, tg in dataset]))


def train(
    dataset: Sequence[tuple[np.ndarray, TargetMasks]],
    config: TrainConfig,
    history: list | None = None,
) -> GeneratorModel:
    """Per-example Adam over seeded shuffles.

    If ``history`` is given it receives the mean dataset loss of the untrained
    model followed by the running mean loss of every epoch.
    """
    if len(dataset) == 0:
        raise ValueError("cannot train on an empty dataset")
    D = len(dataset[0][0])
    K = dataset[0][1].K
    T = dataset[0][1].T
    for f, tg in dataset:
        if len(f) != D or tg.K != K or tg.T != T:
            raise DimensionError("inconsistent D, K or T across training examples")

    rng = np.random.default_rng(config.seed)
    s = config.init_scale
    model = GeneratorModel(rng.uniform(-s, s, size=(D, 2 * K)), rng.uniform(-s, s, size=2 * K))
    b1, b2 = config.betas
    lr, eps = config.learning_rate, config.eps
    m_w, v_w = np.zeros_like(model.weights), np.zeros_like(model.weights)
    m_b, v_b = np.zeros_like(model.biases), np.zeros_like(model.biases)
    step = 0
    if history is not None:
        history.append(_dataset_loss(model, dataset, config.sigma_min))

    for _ in range(config.epochs):
        total = 0.0
        for i in rng.permutation(len(dataset)):
            f, tg = dataset[i]
            loss, grad = loss_and_gradients(model, f, tg, T, config.sigma_min)
            total += loss
            step += 1
            m_w = b1 * m_w + (1 - b1) * grad.weights
            v_w = b2 * v_w + (1 - b2) * grad.weights**2
            m_b = b1 * m_b + (1 - b1) * grad.biases
            v_b = b2 * v_b + (1 - b2) * grad.biases**2
            corr1, corr2 = 1 - b1**step, 1 - b2**step
            model.weights -= lr * (m_w / corr1) / (np.sqrt(v_w / corr2) + eps)
            model.biases -= lr * (m_b / corr1) / (np.sqrt(v_b / corr2) + eps)
        if history is not None:
            history.append(total / len(dataset))
    return model


def save_model(model: GeneratorModel, path) -> None:
    payload = {
        "format": MODEL_FORMAT,
        "D": model.D,
        "K": model.K,
        # repr of a Python float round-trips exactly
        "weights": model.weights.tolist(),
        "biases": model.biases.tolist(),
    }
    Path(path).write_text(json.dumps(payload) + "\n")


def load_model(path) -> GeneratorModel:
    text = Path(path).read_text()
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DataError(f"invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}",
                        path, exc.lineno) from None
    if not isinstance(obj, dict):
        raise DataError("model file must hold a JSON object", path)
    if obj.get("format") != MODEL_FORMAT:
        raise DataError(f"field 'format': expected {MODEL_FORMAT!r}, got {obj.get('format')!r}", path)
    for key in ("D", "K", "weights", "biases"):
        if key not in obj:
            raise DataError(f"missing field {key!r}", path)
    D, K = obj["D"], obj["K"]
    if not (isinstance(D, int) and isinstance(K, int) and D >= 1 and K >= 1):
        raise DataError(f"fields 'D' and 'K' must be positive integers, got D={D!r} K={K!r}", path)
    try:
        weights = np.array(obj["weights"], dtype=np.float64)
        biases = np.array(obj["biases"], dtype=np.float64)
    except (TypeError, ValueError) as exc:
        raise DataError(f"weights/biases are not numeric arrays: {exc}", path) from None
    if weights.shape != (D, 2 * K):
        raise DataError(f"field 'weights': shape {weights.shape} does not match D={D}, K={K}", path)
    if biases.shape != (2 * K,):
        raise DataError(f"field 'biases': shape {biases.shape} does not match K={K}", path)
    if not (np.all(np.isfinite(weights)) and np.all(np.isfinite(biases))):
        raise DataError("model parameters must be finite", path)
    return GeneratorModel(weights, biases)


def check_gradients(model, f, targets, sigma_min=0.01, h=1e-5, floor=1e-8) -> float:
    """Max relative error between analytic and central-difference gradients."""
    grad = gradients(model, f, targets, sigma_min=sigma_min)
    worst = 0.0
    for name in ("weights", "biases"):
        param = getattr(model, name)
        analytic = getattr(grad, name)
        for idx in np.ndindex(param.shape):
            old = param[idx]
            param[idx] = old + h
            up = example_loss(model, f, targets, sigma_min)
            param[idx] = old - h
            down = example_loss(model, f, targets, sigma_min)
            param[idx] = old
            numeric = (up - down) / (2 * h)
            denom = max(abs(numeric), abs(analytic[idx]), floor)
            worst = max(worst, abs(numeric - analytic[idx]) / denom)
    return worst
