"""LSTM cell: forward step, sequence unrolling and backpropagation through time.

Gate rows are stacked in the order input, forget, output, candidate, so a
cell's weight matrix has shape (4H, I + H) and acts on ``[x, h]``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * z))


@dataclass
class LstmCell:
    W: np.ndarray
    b: np.ndarray

    @property
    def hidden_dim(self) -> int:
        return self.b.shape[0] // 4

    @property
    def input_dim(self) -> int:
        return self.W.shape[1] - self.hidden_dim

    def gate(self, name: str) -> tuple[np.ndarray, np.ndarray]:
        k = ("input", "forget", "output", "candidate").index(name)
        H = self.hidden_dim
        return self.W[k * H:(k + 1) * H], self.b[k * H:(k + 1) * H]


def lstm_step(cell: LstmCell, x, h, c):
    """One update; works on single vectors or on row-batched inputs."""
    H, I = cell.hidden_dim, cell.input_dim
    x, h, c = np.asarray(x), np.asarray(h), np.asarray(c)
    if x.shape[-1] != I or h.shape[-1] != H or c.shape[-1] != H:
        raise ValueError(
            f"dimension mismatch: x {x.shape}, h {h.shape}, c {c.shape} for I={I}, H={H}"
        )
    h_new, c_new, _ = _step(cell.W, cell.b, x, h, c)
    return h_new, c_new


def _step(W, b, x, h, c):
    H = h.shape[-1]
    xh = np.concatenate([x, h], axis=-1)
    z = xh @ W.T + b
    i = sigmoid(z[..., :H])
    f = sigmoid(z[..., H:2 * H])
    o = sigmoid(z[..., 2 * H:3 * H])
    g = np.tanh(z[..., 3 * H:])
    c_new = f * c + i * g
    tc = np.tanh(c_new)
    return o * tc, c_new, (xh, i, f, o, g, c, tc)


def unroll(W, b, X, h, c, mask=None):
    """Run the cell over X of shape (T, B, I).

    Where ``mask[t, k]`` is 0 the state of row k is carried over
    unchanged, so right-padded batches end on each row's true final state.
    Returns final (h, c), the per-step hidden states and the backward cache.
    """
    hs = []
    caches = []
    for t in range(X.shape[0]):
        h_new, c_new, cache = _step(W, b, X[t], h, c)
        if mask is not None:
            m = mask[t][:, None]
            h_new = m * h_new + (1.0 - m) * h
            c_new = m * c_new + (1.0 - m) * c
        caches.append(cache)
        h, c = h_new, c_new
        hs.append(h)
    return h, c, hs, caches


def unroll_backward(W, caches, dh, dc, dW, db, dhs=None, mask=None):
    """Backpropagate through an unrolled sequence.

    ``dh``/``dc`` are gradients on the final state, ``dhs`` optional
    per-step gradients on the emitted hidden states. Accumulates into
    ``dW``/``db`` and returns (dX per step, dh0, dc0).
    """
    H = W.shape[0] // 4
    I = W.shape[1] - H
    dX = [None] * len(caches)
    for t in range(len(caches) - 1, -1, -1):
        xh, i, f, o, g, c_prev, tc = caches[t]
        if dhs is not None:
            dh = dh + dhs[t]
        if mask is not None:
            m = mask[t][:, None]
            dh_carry, dc_carry = (1.0 - m) * dh, (1.0 - m) * dc
            dh, dc = m * dh, m * dc
        do = dh * tc
        dct = dc + dh * o * (1.0 - tc * tc)
        dz = np.concatenate(
            [
                dct * g * i * (1.0 - i),
                dct * c_prev * f * (1.0 - f),
                do * o * (1.0 - o),
                dct * i * (1.0 - g * g),
            ],
            axis=-1,
        )
        dW += dz.T @ xh
        db += dz.sum(axis=0)
        dxh = dz @ W
        dX[t] = dxh[:, :I]
        dh = dxh[:, I:]
        dc = dct * f
        if mask is not None:
            dh = dh + dh_carry
            dc = dc + dc_carry
    return dX, dh, dc
