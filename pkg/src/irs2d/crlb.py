"""Fisher information and Cramer-Rao bounds for the per-domain frequency triples.

Per domain the signal is ``S(eta) = (a(eta_bs) kron q(eta_ue)) n(eta_irs)^T``
and ``F[i, j] = (2 / sigma^2) Re tr(dS_i^H dS_j)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import ArrayConfig, SceneParams, steering_vector

DOMAIN_PARAMETERS = {
    "y": ("mu_bs", "mu_ue", "mu_y"),
    "z": ("psi_bs", "psi_ue", "psi_z"),
}

# Condition numbers above this are reported as singular.
MAX_CONDITION = 1e12


class SingularFisherError(np.linalg.LinAlgError):
    def __init__(self, message, condition):
        super().__init__(message)
        self.condition = condition


@dataclass(frozen=True)
class FimDomain:
    domain: str
    parameters: tuple
    F: np.ndarray
    noise_var: float

    @property
    def condition(self) -> float:
        return float(np.linalg.cond(self.F))


def steering_derivative(mu, L):
    """d/dmu of the steering vector: ``[-j l e^{-j l mu}]_{l=0..L-1}``."""
    ell = np.arange(L)
    return -1j * ell * np.exp(-1j * mu * ell)


def _domain_lengths(cfg: ArrayConfig, domain):
    if domain == "y":
        return cfg.M_y, cfg.Q_y, cfg.N_y
    if domain == "z":
        return cfg.M_z, cfg.Q_z, cfg.N_z
    raise ValueError(f"domain must be 'y' or 'z', got {domain!r}")


def signal_matrix(eta, cfg: ArrayConfig, domain="y"):
    """``S(eta) = (a kron q) n^T`` for ``eta = (bs, ue, irs)`` frequencies."""
    M, Q, N = _domain_lengths(cfg, domain)
    a, q, n = steering_vector(eta[0], M), steering_vector(eta[1], Q), steering_vector(eta[2], N)
    return np.outer(np.kron(a, q), n)


def signal_derivatives(eta, cfg: ArrayConfig, domain="y"):
    M, Q, N = _domain_lengths(cfg, domain)
    a, q, n = steering_vector(eta[0], M), steering_vector(eta[1], Q), steering_vector(eta[2], N)
    da, dq, dn = (steering_derivative(eta[0], M), steering_derivative(eta[1], Q),
                  steering_derivative(eta[2], N))
    return [
        np.outer(np.kron(da, q), n),
        np.outer(np.kron(a, dq), n),
        np.outer(np.kron(a, q), dn),
    ]


def fim_from_derivatives(derivs, noise_var):
    k = len(derivs)
    F = np.empty((k, k))
    for i in range(k):
        for j in range(i, k):
            F[i, j] = F[j, i] = 2.0 / noise_var * np.real(np.vdot(derivs[i], derivs[j]))
    return F


def fim_domain(scene: SceneParams, cfg: ArrayConfig, noise_var: float, domain="y",
               processing_gain: float = 1.0) -> FimDomain:
    """Fisher information of one domain's frequency triple.

    ``processing_gain`` multiplies ``F`` (e.g. ``P_T * T * K`` to overlay the
    bound on simulated RMSE); the default 1 is the bound exactly as defined on
    ``S(eta)``.
    """
    if not noise_var > 0:
        raise ValueError("Fisher information needs a positive noise variance")
    if domain not in DOMAIN_PARAMETERS:
        raise ValueError(f"domain must be 'y' or 'z', got {domain!r}")
    params = DOMAIN_PARAMETERS[domain]
    eta = [scene.freqs[p] for p in params]
    F = processing_gain * fim_from_derivatives(signal_derivatives(eta, cfg, domain), noise_var)
    return FimDomain(domain, params, F, noise_var)


def crlb_bounds(fim: FimDomain) -> np.ndarray:
    """Standard-deviation bounds ``sqrt(diag(F^-1))``."""
    cond = fim.condition
    if not np.isfinite(cond) or cond > MAX_CONDITION:
        raise SingularFisherError(
            f"Fisher information for domain {fim.domain} is singular "
            f"(condition number {cond:.3e})", cond
        )
    return np.sqrt(np.diag(np.linalg.inv(fim.F)))


def crlb_all(scene: SceneParams, cfg: ArrayConfig, noise_var: float,
             processing_gain: float = 1.0) -> dict:
    """Bounds for all six parameters keyed by name."""
    out = {}
    for domain in ("y", "z"):
        fim = fim_domain(scene, cfg, noise_var, domain, processing_gain)
        out.update(zip(fim.parameters, crlb_bounds(fim)))
    return out
