"""Operation-count models of the estimators (big-O constants taken as 1)."""

from __future__ import annotations

import math

from ..channel import ArrayConfig

METHODS = ("HKMR", "TSHDR", "LS", "KRF", "HDR")


def complexity_flops(method: str, cfg: ArrayConfig, T: int = None, K: int = None) -> int:
    """Exact integer evaluation of each method's complexity expression.

    ``T`` defaults to ``M`` and ``K`` to ``N``; the per-axis pilot lengths are
    taken as ``T_y = M_y``, ``T_z = M_z``.
    """
    M_y, M_z, Q_y, Q_z, N_y, N_z = cfg.M_y, cfg.M_z, cfg.Q_y, cfg.Q_z, cfg.N_y, cfg.N_z
    M, Q, N = cfg.M, cfg.Q, cfg.N
    T = M if T is None else T
    K = N if K is None else K
    T_y, T_z = M_y, M_z
    key = method.upper()
    if key == "HKMR":
        return K * (Q**2 * T + Q_y * T_y * M_y + Q_z * T_z * M_z + Q_y**2 * M_y
                    + M_y**2 * Q_y + Q_z**2 * M_z + M_z**2 * Q_z) + N_z**2 * N_y
    if key == "TSHDR":
        return (K * M * Q * T + M**2 * Q**2 * N
                + Q_y**2 * M_y * N_y + M_y**2 * Q_y * N_y + N_y**2 * Q_y * M_y
                + Q_z**2 * M_z * N_z + M_z**2 * Q_z * N_z + N_z**2 * Q_z * M_z)
    if key == "LS":
        return Q**2 * M * N * T * K
    if key == "KRF":
        return Q**2 * M * N * T * K + N**2 * Q**2 * M**2
    if key == "HDR":
        return Q**2 * M * N * T * K + Q * M * N * (Q_z + Q_y + M_z + M_y + N_z + N_y)
    raise ValueError(f"unknown method {method!r}; expected one of {METHODS}")


def near_square_factors(n: int):
    """``(n_y, n_z)`` with ``n_y * n_z = n``, ``n_y <= n_z`` and ``n_y`` as large as possible."""
    if n < 1:
        raise ValueError("number of elements must be positive")
    for n_y in range(math.isqrt(n), 0, -1):
        if n % n_y == 0:
            return n_y, n // n_y
    return 1, n
