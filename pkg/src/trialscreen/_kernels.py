"""Numeric kernels for the logistic baseline over CSR feature matrices.

Two interchangeable implementations live here: explicit loops compiled with
numba, and a vectorized pure-numpy fallback. The active pair is picked at
import time; set ``TRIALSCREEN_NO_NUMBA=1`` to force the numpy path (it is
also used automatically when numba is not installed). Both paths are
deterministic run-to-run; across paths they agree to float tolerance, not
bit-for-bit, because summation order differs.

CSR inputs are ``indptr`` (int64, n+1), ``indices`` (int64, nnz), ``data``
(float64, nnz). Losses are mean weighted logistic loss plus an L2 ridge
``0.5 * l2 * ||w||^2`` (bias unpenalized). The training history has
``epochs + 1`` entries; entry 0 is the loss at the zero initialization.
"""

from __future__ import annotations

import math
import os

import numpy as np

NO_NUMBA_ENV = "TRIALSCREEN_NO_NUMBA"

try:
    from numba import njit

    _HAS_NUMBA = True
except ImportError:  # pragma: no cover - exercised via env flag instead
    _HAS_NUMBA = False

    def njit(*args, **kwargs):
        def wrap(func):
            return func

        if args and callable(args[0]):
            return args[0]
        return wrap


def _flag_disabled() -> bool:
    return os.environ.get(NO_NUMBA_ENV, "").strip() not in ("", "0")


@njit(cache=True)
def _scores_loop(indptr, indices, data, w, b):
    n = indptr.shape[0] - 1
    z = np.empty(n, dtype=np.float64)
    for i in range(n):
        acc = b
        for k in range(indptr[i], indptr[i + 1]):
            acc += data[k] * w[indices[k]]
        z[i] = acc
    return z


@njit(cache=True)
def _loss_grad_loop(indptr, indices, data, y, sw, w, b, l2):
    n = indptr.shape[0] - 1
    d = w.shape[0]
    grad_w = np.zeros(d, dtype=np.float64)
    grad_b = 0.0
    loss = 0.0
    for i in range(n):
        z = b
        for k in range(indptr[i], indptr[i + 1]):
            z += data[k] * w[indices[k]]
        az = z if z >= 0.0 else -z
        e = math.exp(-az)
        # softplus(z) - y*z, stabilized
        loss += sw[i] * (math.log1p(e) + max(z, 0.0) - y[i] * z)
        if z >= 0.0:
            p = 1.0 / (1.0 + e)
        else:
            p = e / (1.0 + e)
        r = sw[i] * (p - y[i]) / n
        grad_b += r
        for k in range(indptr[i], indptr[i + 1]):
            grad_w[indices[k]] += data[k] * r
    reg = 0.0
    for j in range(d):
        reg += w[j] * w[j]
        grad_w[j] += l2 * w[j]
    loss = loss / n + 0.5 * l2 * reg
    return loss, grad_w, grad_b


@njit(cache=True)
def _train_loop(indptr, indices, data, y, sw, n_features, lr, epochs, l2):
    w = np.zeros(n_features, dtype=np.float64)
    b = 0.0
    losses = np.empty(epochs + 1, dtype=np.float64)
    for epoch in range(epochs + 1):
        loss, grad_w, grad_b = _loss_grad_loop(indptr, indices, data, y, sw, w, b, l2)
        losses[epoch] = loss
        if epoch == epochs:
            break
        for j in range(n_features):
            w[j] -= lr * grad_w[j]
        b -= lr * grad_b
    return w, b, losses


def _row_ids(indptr: np.ndarray) -> np.ndarray:
    n = indptr.shape[0] - 1
    return np.repeat(np.arange(n, dtype=np.int64), np.diff(indptr))


def _weighted_bincount(ids, weights, minlength):
    # np.bincount returns int64 zeros when ids is empty; force float64.
    return np.bincount(ids, weights=weights, minlength=minlength).astype(
        np.float64, copy=False
    )


def scores_numpy(indptr, indices, data, w, b):
    n = indptr.shape[0] - 1
    contrib = data * w[indices]
    return b + _weighted_bincount(_row_ids(indptr), contrib, n)


def loss_grad_numpy(indptr, indices, data, y, sw, w, b, l2):
    n = indptr.shape[0] - 1
    d = w.shape[0]
    rows = _row_ids(indptr)
    z = b + _weighted_bincount(rows, data * w[indices], n)
    e = np.exp(-np.abs(z))
    loss = float(np.dot(sw, np.log1p(e) + np.maximum(z, 0.0) - y * z)) / n
    loss += 0.5 * l2 * float(np.dot(w, w))
    p = np.where(z >= 0.0, 1.0 / (1.0 + e), e / (1.0 + e))
    r = sw * (p - y) / n
    grad_w = _weighted_bincount(indices, data * r[rows], d)
    grad_w += l2 * w
    grad_b = float(np.sum(r))
    return loss, grad_w, grad_b


def train_numpy(indptr, indices, data, y, sw, n_features, lr, epochs, l2):
    w = np.zeros(n_features, dtype=np.float64)
    b = 0.0
    losses = np.empty(epochs + 1, dtype=np.float64)
    for epoch in range(epochs + 1):
        loss, grad_w, grad_b = loss_grad_numpy(indptr, indices, data, y, sw, w, b, l2)
        losses[epoch] = loss
        if epoch == epochs:
            break
        w -= lr * grad_w
        b -= lr * grad_b
    return w, b, losses


if _HAS_NUMBA:
    scores_numba = _scores_loop
    loss_grad_numba = _loss_grad_loop
    train_numba = _train_loop
else:
    scores_numba = None
    loss_grad_numba = None
    train_numba = None

_USE_NUMBA = _HAS_NUMBA and not _flag_disabled()

if _USE_NUMBA:
    scores = _scores_loop
    loss_grad = _loss_grad_loop
    train_logreg = _train_loop
else:
    scores = scores_numpy
    loss_grad = loss_grad_numpy
    train_logreg = train_numpy


def backend_name() -> str:
    """Which kernel path this process is using: "numba" or "numpy"."""
    return "numba" if _USE_NUMBA else "numpy"
