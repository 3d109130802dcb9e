"""Sine-kernel density network ``rho = sigmoid(W . sin(K X + 1))`` with a hand-written Adam.

Inputs are rows ``X = (x, y, e)``: normalized coordinates and a conditioning
value. ``K`` is ``(h, 3)``, ``W`` is ``(h,)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
from scipy.special import expit

from .errors import NumericError, ParameterError

KERNEL_RANGE = 25.0


@dataclass(frozen=True)
class NetworkParams:
    K: np.ndarray
    W: np.ndarray

    @property
    def h(self) -> int:
        return self.W.shape[0]


@dataclass
class AdamState:
    lr: float = 0.002
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-7
    t: int = 0
    mK: np.ndarray | None = field(default=None, repr=False)
    mW: np.ndarray | None = field(default=None, repr=False)
    vK: np.ndarray | None = field(default=None, repr=False)
    vW: np.ndarray | None = field(default=None, repr=False)

    @classmethod
    def for_params(cls, params: NetworkParams, **hyper) -> "AdamState":
        z = np.zeros_like
        return cls(mK=z(params.K), mW=z(params.W), vK=z(params.K), vW=z(params.W), **hyper)


def init_params(h: int = 128, seed: int = 0) -> NetworkParams:
    """Kernels uniform in [-25, 25], weights zero, so the initial output is 0.5 everywhere."""
    if h < 1:
        raise ParameterError(f"kernel count must be >= 1, got {h}")
    rng = np.random.default_rng(seed)
    K = rng.uniform(-KERNEL_RANGE, KERNEL_RANGE, size=(h, 3))
    return NetworkParams(K=K, W=np.zeros(h))


def _check_input(params: NetworkParams, X: np.ndarray) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != 3:
        raise ParameterError(f"input must have shape (batch, 3), got {X.shape}")
    if params.K.shape != (params.h, 3):
        raise ParameterError(f"K has shape {params.K.shape}, expected ({params.h}, 3)")
    return X


def _preactivation(params: NetworkParams, X: np.ndarray) -> np.ndarray:
    # Elementwise sum keeps each row's result independent of the batch layout.
    K = params.K
    return X[:, 0:1] * K[:, 0] + X[:, 1:2] * K[:, 1] + X[:, 2:3] * K[:, 2] + 1.0


def activations(params: NetworkParams, X) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Pre-activations ``Z``, sines ``S`` and outputs ``rho`` for a batch."""
    X = _check_input(params, X)
    Z = _preactivation(params, X)
    S = np.sin(Z)
    rho = expit(np.sum(S * params.W, axis=1))
    if not np.all(np.isfinite(rho)):
        raise NumericError("non-finite network output")
    return Z, S, rho


def forward(params: NetworkParams, X) -> np.ndarray:
    return activations(params, X)[2]


def backward(params: NetworkParams, X, dL_drho, cache=None) -> tuple[np.ndarray, np.ndarray]:
    """Gradients ``(dK, dW)`` of a scalar loss given its gradient w.r.t. each output row.

    ``cache`` may carry the result of :func:`activations` for the same inputs.
    """
    X = _check_input(params, X)
    g = np.asarray(dL_drho, dtype=float)
    if g.shape != (X.shape[0],):
        raise ParameterError(f"upstream gradient has shape {g.shape}, expected ({X.shape[0]},)")
    Z, S, rho = cache if cache is not None else activations(params, X)
    ga = g * rho * (1.0 - rho)
    dW = ga @ S
    dK = (np.cos(Z).T @ (ga[:, None] * X)) * params.W[:, None]
    return dK, dW


def adam_step(
    params: NetworkParams, grads: tuple[np.ndarray, np.ndarray], state: AdamState
) -> tuple[NetworkParams, AdamState]:
    """One bias-corrected Adam update over (K, W). Returns new objects; inputs are not mutated."""
    dK, dW = grads
    if state.mK is None:
        state = AdamState.for_params(params, lr=state.lr, beta1=state.beta1,
                                     beta2=state.beta2, eps=state.eps)
    b1, b2, t = state.beta1, state.beta2, state.t + 1
    mK = b1 * state.mK + (1 - b1) * dK
    mW = b1 * state.mW + (1 - b1) * dW
    vK = b2 * state.vK + (1 - b2) * dK**2
    vW = b2 * state.vW + (1 - b2) * dW**2
    c1, c2 = 1 - b1**t, 1 - b2**t
    K = params.K - state.lr * (mK / c1) / (np.sqrt(vK / c2) + state.eps)
    W = params.W - state.lr * (mW / c1) / (np.sqrt(vW / c2) + state.eps)
    return NetworkParams(K=K, W=W), replace(state, t=t, mK=mK, mW=mW, vK=vK, vW=vW)


# Checkpoint format (plain text, comma separated):
#   line 1:        h,<filter>
#   lines 2..h+1:  K row i as three floats
#   line h+2:      W as h floats
def save_params(path, params: NetworkParams, filter: str = "none") -> None:
    lines = [f"{params.h},{filter}"]
    lines += [",".join(repr(float(v)) for v in row) for row in params.K]
    lines.append(",".join(repr(float(v)) for v in params.W))
    Path(path).write_text("\n".join(lines) + "\n")


def load_params(path) -> tuple[NetworkParams, str]:
    """Inverse of :func:`save_params`; raises ParameterError on malformed input."""
    try:
        lines = [ln for ln in Path(path).read_text().splitlines() if ln.strip()]
        head = lines[0].split(",")
        h, filt = int(head[0]), head[1].strip() if len(head) > 1 else "none"
        K = np.array([[float(v) for v in ln.split(",")] for ln in lines[1:h + 1]])
        W = np.array([float(v) for v in lines[h + 1].split(",")])
        if len(lines) != h + 2 or K.shape != (h, 3) or W.shape != (h,):
            raise ValueError("inconsistent shapes")
    except (IndexError, ValueError, UnicodeDecodeError) as exc:
        raise ParameterError(f"corrupt checkpoint {path}: {exc}") from exc
    if not (np.all(np.isfinite(K)) and np.all(np.isfinite(W))):
        raise ParameterError(f"corrupt checkpoint {path}: non-finite values")
    return NetworkParams(K=K, W=W), filt
