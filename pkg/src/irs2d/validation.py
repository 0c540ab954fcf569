"""Input checks shared by the estimator classes and the harness."""

from __future__ import annotations

import numbers

import numpy as np

from .training import PilotObservation, TrainingDesign


def check_positive_int(value, name):
    if isinstance(value, bool) or not isinstance(value, numbers.Integral) or value < 1:
        raise ValueError(f"{name} must be a positive integer, got {value!r}")
    return int(value)


def check_noise_var(value):
    value = float(value)
    if not np.isfinite(value) or value < 0:
        raise ValueError(f"noise variance must be finite and >= 0, got {value}")
    return value


def check_blocks(X, design: TrainingDesign) -> np.ndarray:
    """Return pilot blocks as a complex ``(n_samples, K, Q, T)`` array.

    Accepts one observation ``(K, Q, T)``, a batch ``(n, K, Q, T)``, a
    :class:`PilotObservation` or a list of them.
    """
    if isinstance(X, PilotObservation):
        X = X.blocks
    elif isinstance(X, (list, tuple)) and X and isinstance(X[0], PilotObservation):
        X = np.stack([o.blocks for o in X])
    X = np.asarray(X)
    if not (np.issubdtype(X.dtype, np.number)):
        raise TypeError(f"pilot blocks must be numeric, got dtype {X.dtype}")
    X = X.astype(complex, copy=False)
    if X.ndim == 3:
        X = X[None]
    if X.ndim != 4:
        raise ValueError(f"expected (K, Q, T) or (n, K, Q, T) blocks, got shape {X.shape}")
    expected = (design.K, design.cfg.Q, design.T)
    if X.shape[1:] != expected:
        raise ValueError(f"blocks have shape {X.shape[1:]}, the training design expects {expected}")
    if X.shape[0] == 0:
        raise ValueError("no observations given")
    if not np.all(np.isfinite(X)):
        raise ValueError("pilot blocks contain NaN or inf")
    return X


def check_cascaded(E, shape) -> np.ndarray:
    E = np.asarray(E, dtype=complex)
    if E.shape != tuple(shape):
        raise ValueError(f"cascaded channel has shape {E.shape}, expected {tuple(shape)}")
    return E
