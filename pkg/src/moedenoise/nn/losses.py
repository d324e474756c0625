"""Training losses with analytic gradients.

Each function returns ``(loss, grad_wrt_pred)`` where the gradient is the
exact derivative of the returned scalar. Predictions may be a single row or
a (B, L) batch; batch losses average per-row losses. The correlation loss is
computed per row and averaged, never pooled across the batch, so it matches
the per-segment correlation metric.
"""

from __future__ import annotations

import numpy as np

from ..errors import InvalidInputError

__all__ = ["correlation_loss", "mse_loss", "cross_entropy_loss", "LOSSES"]

CORR_EPS = 1e-8


def _rows(pred, target) -> tuple[np.ndarray, np.ndarray, bool]:
    p = np.asarray(pred, dtype=np.float64)
    t = np.asarray(target, dtype=np.float64)
    if p.shape != t.shape:
        raise InvalidInputError(f"shape mismatch: {p.shape} vs {t.shape}")
    single = p.ndim == 1
    if single:
        p, t = p[None], t[None]
    if p.ndim != 2:
        p, t = p.reshape(p.shape[0], -1), t.reshape(t.shape[0], -1)
    if p.shape[1] < 2:
        raise InvalidInputError("loss rows need at least 2 elements")
    return p, t, single


def correlation_loss(pred, target, eps: float = CORR_EPS):
    """1 - c_hat per row, c_hat = cov(p,t) / (sigma_p * sigma_t + eps).

    The eps guard keeps the loss (and its gradient) finite for constant
    predictions, which makes it total; the gradient below is the exact
    derivative of this guarded expression.
    """
    p, t, single = _rows(pred, target)
    n = p.shape[1]
    pc = p - p.mean(axis=1, keepdims=True)
    tc = t - t.mean(axis=1, keepdims=True)
    cov = (pc * tc).mean(axis=1)
    sp = np.sqrt((pc * pc).mean(axis=1))
    st = np.sqrt((tc * tc).mean(axis=1))
    denom = sp * st + eps
    r = cov / denom
    loss = float(np.mean(1.0 - r))
    # dr/dp_j = tc_j/(n*denom) - cov*st*pc_j / (n*sp*denom^2); the sp in the
    # second term's denominator is safe: when sp == 0 the numerator pc is
    # identically zero, so substitute 1 to avoid 0/0.
    sp_safe = np.where(sp > 0, sp, 1.0)
    b = p.shape[0]
    term1 = tc / (n * denom[:, None])
    term2 = (cov * st / (n * sp_safe * denom * denom))[:, None] * pc
    grad = -(term1 - term2) / b
    return loss, (grad[0] if single else grad)


def mse_loss(pred, target):
    """Mean squared error over all elements; gradient 2(p - t)/(B*L)."""
    p, t, single = _rows(pred, target)
    diff = p - t
    loss = float(np.mean(diff * diff))
    grad = 2.0 * diff / diff.size
    return loss, (grad[0] if single else grad)


def cross_entropy_loss(probs, labels, eps: float = 1e-12):
    """Negative log likelihood of integer labels under probability rows."""
    p = np.asarray(probs, dtype=np.float64)
    y = np.asarray(labels)
    single = p.ndim == 1
    if single:
        p, y = p[None], np.atleast_1d(y)
    if p.ndim != 2 or y.shape != (p.shape[0],):
        raise InvalidInputError(f"bad classification shapes: {p.shape}, {y.shape}")
    rows = np.arange(p.shape[0])
    picked = p[rows, y]
    loss = float(-np.mean(np.log(picked + eps)))
    grad = np.zeros_like(p)
    grad[rows, y] = -1.0 / ((picked + eps) * p.shape[0])
    return loss, (grad[0] if single else grad)


LOSSES = {
    "correlation": correlation_loss,
    "mse": mse_loss,
    "cross_entropy": cross_entropy_loss,
}
