"""Decoder regression loss with per-output clipped errors.

Every pixel of both displacement channels is an independent output. The
reported loss is the plain MSE over the full residuals; the backpropagated
error of each output is its own residual passed through a translated
logistic that saturates at ``A/2``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .core import ValidationError, VectorField

DEFAULT_AMPLITUDE = 4.0

_INT64_MAX = np.iinfo(np.int64).max


@dataclass(frozen=True)
class LossConfig:
    amplitude: float = DEFAULT_AMPLITUDE

    def __post_init__(self):
        if not (np.isfinite(self.amplitude) and self.amplitude > 0):
            raise ValidationError(f"amplitude must be a finite positive number, got {self.amplitude}")


class BatchShape(NamedTuple):
    n_images: int
    rows: int
    cols: int


class LossResult(NamedTuple):
    reported_loss: float
    gradient: np.ndarray


def sample_count(shape: BatchShape) -> int:
    """Number of independent outputs: two channels per pixel per image."""
    n, r, c = (int(v) for v in shape)
    if min(n, r, c) < 1:
        raise ValidationError(f"batch shape entries must be >= 1, got {tuple(shape)}")
    total = 2 * n * r * c
    if total > _INT64_MAX:
        raise ValidationError(f"sample count {total} overflows a 64-bit integer")
    return total


def mse(targets, predictions) -> float:
    """``sum((Y - Yhat)**2) / (2N)``."""
    y = np.asarray(targets, dtype=np.float64).ravel()
    yhat = np.asarray(predictions, dtype=np.float64).ravel()
    if y.size != yhat.size:
        raise ValidationError(f"length mismatch: {y.size} targets vs {yhat.size} predictions")
    if y.size == 0:
        raise ValidationError("mse of an empty sequence")
    r = y - yhat
    return float(np.dot(r, r) / (2 * y.size))


def _cfg(cfg) -> LossConfig:
    if cfg is None:
        return LossConfig()
    if isinstance(cfg, LossConfig):
        return cfg
    return LossConfig(float(cfg))


def clip_error(x, cfg: LossConfig | float | None = None):
    """``A * (1/(1+exp(-x)) - 0.5)``, evaluated as ``(A/2) * tanh(x/2)``.

    The result is kept strictly inside ``(-A/2, A/2)`` even where tanh
    rounds to one in double precision.
    """
    half = _cfg(cfg).amplitude / 2
    ceiling = np.nextafter(half, 0.0)
    out = np.clip(half * np.tanh(np.asarray(x, dtype=np.float64) / 2), -ceiling, ceiling)
    return float(out) if out.ndim == 0 else out


def clip_error_grad(x, cfg: LossConfig | float | None = None):
    """Derivative of :func:`clip_error`: ``A * exp(-x) / (1 + exp(-x))**2``."""
    a = _cfg(cfg).amplitude
    e = np.exp(-np.abs(np.asarray(x, dtype=np.float64)))
    out = a * e / (1.0 + e) ** 2
    return float(out) if out.ndim == 0 else out


def _as_batch(fields) -> np.ndarray:
    if isinstance(fields, VectorField):
        return fields.stack()[None].astype(np.float64)
    if isinstance(fields, np.ndarray):
        arr = fields.astype(np.float64)
    else:
        fields = list(fields)
        if fields and isinstance(fields[0], VectorField):
            arr = np.stack([f.stack() for f in fields]).astype(np.float64)
        else:
            arr = np.asarray(fields, dtype=np.float64)
    if arr.ndim == 3 and arr.shape[0] == 2:
        arr = arr[None]
    if arr.ndim != 4 or arr.shape[1] != 2:
        raise ValidationError(f"expected a (n, 2, rows, cols) batch, got shape {arr.shape}")
    return arr


def decoder_loss(target, prediction, cfg: LossConfig | float | None = None) -> LossResult:
    """Reported MSE and per-output clipped gradient for a batch of fields.

    ``target`` and ``prediction`` are a VectorField, a sequence of them, or
    an array shaped ``(n, 2, rows, cols)``. The gradient has the batch shape
    and holds ``clip_error(prediction - target) / N``.
    """
    cfg = _cfg(cfg)
    y = _as_batch(target)
    yhat = _as_batch(prediction)
    if y.shape != yhat.shape:
        raise ValidationError(f"batch shape mismatch: {y.shape} vs {yhat.shape}")
    n, _, r, c = y.shape
    count = sample_count(BatchShape(n, r, c))
    e = yhat - y
    reported = float(np.sum(e * e) / (2 * count))
    # the division can round a saturated error up onto the bound (A/2)/N
    bound = np.nextafter(cfg.amplitude / 2 / count, 0.0)
    return LossResult(reported, np.clip(clip_error(e, cfg) / count, -bound, bound))


def decoder_loss_unclipped(target, prediction) -> LossResult:
    """Same bookkeeping with the raw residual as gradient, for comparison."""
    y = _as_batch(target)
    yhat = _as_batch(prediction)
    if y.shape != yhat.shape:
        raise ValidationError(f"batch shape mismatch: {y.shape} vs {yhat.shape}")
    n, _, r, c = y.shape
    count = sample_count(BatchShape(n, r, c))
    e = yhat - y
    return LossResult(float(np.sum(e * e) / (2 * count)), e / count)
