"""Accuracy and link-level metrics: wrapped RMSE, NMSE and spectral efficiency."""

from __future__ import annotations

import math

import numpy as np

from ..channel import ArrayConfig, ChannelFactors, steering_vector, wrap_angle
from ..estimators import FrequencyEstimate, KRFResult, gauge_fit
from ..multilin import svd_rank1


def rmse_wrapped(truth, estimates) -> float:
    """Root-mean-square error with differences wrapped into (-pi, pi].

    ``truth`` may be a scalar or an array matching ``estimates``.
    """
    est = np.asarray(estimates, dtype=float).ravel()
    if est.size == 0:
        raise ValueError("rmse of an empty estimate list")
    err = wrap_angle(est - np.broadcast_to(np.asarray(truth, dtype=float).ravel(), est.shape))
    return math.sqrt(math.fsum(err**2) / est.size)


def nmse(E, E_hat, gauge=False) -> float:
    """``||E - E_hat||^2 / ||E||^2`` for one realization.

    With ``gauge=True`` the estimate is first scaled by the least-squares
    complex factor (parametric reconstructions carry an arbitrary gain).
    """
    E = np.asarray(E)
    E_hat = np.asarray(E_hat)
    if E.shape != E_hat.shape:
        raise ValueError(f"shape mismatch: {E.shape} vs {E_hat.shape}")
    ref = float(np.sum(np.abs(E) ** 2))
    if ref == 0:
        raise ValueError("NMSE against an all-zero reference")
    if gauge:
        E_hat = gauge_fit(E_hat, E)
    return float(np.sum(np.abs(E - E_hat) ** 2)) / ref


def beams_from_frequencies(est: FrequencyEstimate, cfg: ArrayConfig):
    """Precoder ``f``, combiner ``w`` and unit-modulus IRS phases from estimated frequencies."""
    a = np.kron(steering_vector(est.mu_bs, cfg.M_y), steering_vector(est.psi_bs, cfg.M_z))
    q = np.kron(steering_vector(est.mu_ue, cfg.Q_y), steering_vector(est.psi_ue, cfg.Q_z))
    n = np.kron(steering_vector(est.mu_y, cfg.N_y), steering_vector(est.psi_z, cfg.N_z))
    return a.conj() / np.sqrt(cfg.M), q / np.sqrt(cfg.Q), n.conj()


def beams_from_channels(H_hat, G_hat):
    """Beams for nonparametric estimates ``H_hat`` (N x M) and ``G_hat`` (Q x N).

    ``f`` and ``w`` are the dominant singular vectors; each IRS phase
    co-phases its element's contribution ``(w^H g_n)(h_n^T f)``.
    """
    f = svd_rank1(H_hat)[2]
    w = svd_rank1(G_hat)[0]
    contrib = (w.conj() @ G_hat) * (H_hat @ f)
    omega = np.exp(-1j * np.angle(contrib))
    return f, w, omega


def beamforming_gain(ch: ChannelFactors, f, w, omega) -> float:
    """``|w^H G diag(omega) H f|^2`` on the true channel."""
    return float(abs(w.conj() @ ch.G @ (omega * (ch.H @ f))) ** 2)


def spectral_efficiency(ch: ChannelFactors, est, noise_var, P_T=1.0, cfg: ArrayConfig = None):
    """Achievable rate ``log2(1 + P_T/noise_var * gain)`` in bits/s/Hz.

    ``est`` is a :class:`FrequencyEstimate` (needs ``cfg``), a
    :class:`KRFResult`, or an explicit ``(f, w, omega)`` triple.
    """
    if isinstance(est, FrequencyEstimate):
        if cfg is None:
            raise ValueError("a FrequencyEstimate needs the ArrayConfig to build beams")
        beams = beams_from_frequencies(est, cfg)
    elif isinstance(est, KRFResult):
        beams = beams_from_channels(est.H, est.G)
    else:
        beams = est
    return math.log2(1.0 + P_T / noise_var * beamforming_gain(ch, *beams))


def ideal_spectral_efficiency(cfg: ArrayConfig, noise_var, P_T=1.0) -> float:
    """Rate with beams matched to the true rank-one channel: gain ``M Q N^2``."""
    return math.log2(1.0 + P_T / noise_var * cfg.M * cfg.Q * cfg.N**2)
