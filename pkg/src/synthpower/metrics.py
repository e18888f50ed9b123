"""Forecast error metrics."""
from __future__ import annotations

import numpy as np


def nrmse(y, yhat) -> float:
    """Root-mean-square error of capacity-normalized values, averaged over N samples."""
    y = np.asarray(y, dtype=float)
    yhat = np.asarray(yhat, dtype=float)
    if y.shape != yhat.shape:
        raise ValueError(f"length mismatch: {y.shape} vs {yhat.shape}")
    if y.size == 0:
        raise ValueError("empty vectors")
    return float(np.sqrt(np.mean((y - yhat) ** 2)))


def skill(nrmse_model: float, nrmse_ref: float) -> float:
    """Difference of errors; negative values mean the model beats the reference."""
    if nrmse_model < 0 or nrmse_ref < 0:
        raise ValueError("nRMSE values must be non-negative")
    return nrmse_model - nrmse_ref
