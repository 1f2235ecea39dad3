"""Distributed autoencoder: m sigmoid encoders feeding one shared decoder.

User j owns an encoder matrix of shape (n, l) producing a code
h_j = sigmoid(W_j^T x_j).  The shared decoder of shape (m*l, n) is
partitioned row-wise into per-user blocks; the reconstruction of
feature i for user j uses only rows j*l .. (j+1)*l - 1 of column i, so
decoding runs sequentially per user with no cross-user mixing.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dp_mech import Dataset
from .rng import substream

__all__ = [
    "DaParams",
    "sigmoid",
    "init_params",
    "encode",
    "decoder_subcolumn",
    "z_value",
    "z_vector",
    "reconstruct",
    "accuracy",
]


def sigmoid(t):
    """Numerically stable logistic function."""
    t = np.asarray(t, dtype=float)
    out = np.empty_like(t)
    pos = t >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-t[pos]))
    e = np.exp(t[~pos])
    out[~pos] = e / (1.0 + e)
    return out if out.ndim else float(out)


@dataclass
class DaParams:
    """Weights of the distributed autoencoder.

    encoders: array (m, n, l), one encoder matrix per user.
    decoder:  array (m*l, n), shared; rows j*l..(j+1)*l-1 belong to user j.
    """

    encoders: np.ndarray = field(repr=False)
    decoder: np.ndarray = field(repr=False)

    def __post_init__(self):
        self.encoders = np.asarray(self.encoders, dtype=float)
        self.decoder = np.asarray(self.decoder, dtype=float)
        if self.encoders.ndim != 3:
            raise ValueError("encoders must have shape (m, n, l)")
        m, n, l = self.encoders.shape
        if l > n:
            raise ValueError(f"code width l={l} must not exceed n={n}")
        if self.decoder.shape != (m * l, n):
            raise ValueError(
                f"decoder must have shape ({m * l}, {n}), got {self.decoder.shape}"
            )

    @property
    def num_users(self) -> int:
        return self.encoders.shape[0]

    @property
    def num_features(self) -> int:
        return self.encoders.shape[1]

    @property
    def code_width(self) -> int:
        return self.encoders.shape[2]

    def copy(self) -> "DaParams":
        return DaParams(self.encoders.copy(), self.decoder.copy())

    def decoder_block(self, user_j: int) -> np.ndarray:
        """View of the (l, n) decoder rows owned by user j."""
        l = self.code_width
        return self.decoder[user_j * l:(user_j + 1) * l, :]


def init_params(n: int, l: int, m: int, seed: int) -> DaParams:
    """Glorot-style uniform init: entries in +-sqrt(6/(n+l))."""
    if l > n:
        raise ValueError(f"code width l={l} must not exceed n={n}")
    rng = substream(seed, 0xDA)
    bound = np.sqrt(6.0 / (n + l))
    encoders = rng.uniform(-bound, bound, size=(m, n, l))
    decoder = rng.uniform(-bound, bound, size=(m * l, n))
    return DaParams(encoders, decoder)


def _check_user(params: DaParams, user_j: int):
    if not 0 <= user_j < params.num_users:
        raise IndexError(f"user index {user_j} out of range for m={params.num_users}")


def encode(params: DaParams, user_j: int, x) -> np.ndarray:
    """h_j = sigmoid(W_j^T x); entries strictly inside (0, 1)."""
    _check_user(params, user_j)
    x = np.asarray(x, dtype=float)
    if x.shape != (params.num_features,):
        raise ValueError(
            f"input must have length {params.num_features}, got shape {x.shape}"
        )
    if not np.all(np.isfinite(x)):
        raise ValueError("input entries must be finite")
    return sigmoid(params.encoders[user_j].T @ x)


def decoder_subcolumn(params: DaParams, user_j: int, feature_i: int) -> np.ndarray:
    """Sub-column of decoder column i owned by user j (length l)."""
    _check_user(params, user_j)
    if not 0 <= feature_i < params.num_features:
        raise IndexError(f"feature index {feature_i} out of range")
    return params.decoder_block(user_j)[:, feature_i]


def z_value(params: DaParams, user_j: int, feature_i: int, h) -> float:
    """Pre-activation z_{j,i}: decoder sub-column dotted with the code."""
    col = decoder_subcolumn(params, user_j, feature_i)
    h = np.asarray(h, dtype=float)
    if h.shape != col.shape:
        raise ValueError(f"code must have length {col.size}, got shape {h.shape}")
    return float(col @ h)


def z_vector(params: DaParams, user_j: int, h) -> np.ndarray:
    """All n pre-activations for user j at once."""
    _check_user(params, user_j)
    h = np.asarray(h, dtype=float)
    return params.decoder_block(user_j).T @ h


def reconstruct(params: DaParams, user_j: int, h) -> np.ndarray:
    """x_hat_i = sigmoid(z_{j,i}) for every feature; outputs in (0, 1)."""
    return sigmoid(z_vector(params, user_j, h))


def accuracy(original, reconstructed) -> float:
    """Reconstruction accuracy: 100 * (1 - mean absolute error).

    Monotone in distortion and bounded in [0, 100] for entries in [0, 1].
    """
    a = original.rows if isinstance(original, Dataset) else np.asarray(original, dtype=float)
    b = reconstructed.rows if isinstance(reconstructed, Dataset) else np.asarray(reconstructed, dtype=float)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    return float(100.0 * (1.0 - np.abs(a - b).mean()))
