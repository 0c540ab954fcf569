"""Kronecker-structured pilot / IRS training design and received-signal synthesis."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .channel import ArrayConfig, ChannelFactors
from .multilin import dft_codebook, hadamard_matrix, khatri_rao, kron


@dataclass(frozen=True)
class TrainingDesign:
    """Pilots ``S = S_y kron S_z`` and IRS schedule ``Omega = Omega_y <> Omega_z``.

    ``S_y``, ``S_z`` are unitary and ``Omega_y``/``Omega_z`` row-orthonormal
    (entries of modulus ``1/sqrt(K_t)``).  Two flags switch to physical
    amplitudes: ``unit_modulus`` makes the IRS apply ``irs_gain * Omega`` with
    ``irs_gain = sqrt(K)``, and ``bpsk_pilots`` sends ``pilot_gain * S`` with
    ``pilot_gain = sqrt(T)`` (entries +-1).  Receivers filter with the
    normalized ``S`` and ``Omega`` and divide the gains out.
    """

    cfg: ArrayConfig
    S_y: np.ndarray
    S_z: np.ndarray
    Omega_y: np.ndarray
    Omega_z: np.ndarray
    K_y: int
    K_z: int
    unit_modulus: bool = False
    bpsk_pilots: bool = False

    @property
    def S(self) -> np.ndarray:
        return kron(self.S_y, self.S_z)

    @property
    def Omega(self) -> np.ndarray:
        return khatri_rao(self.Omega_y, self.Omega_z)

    @property
    def T_y(self) -> int:
        return self.S_y.shape[1]

    @property
    def T_z(self) -> int:
        return self.S_z.shape[1]

    @property
    def T(self) -> int:
        return self.T_y * self.T_z

    @property
    def K(self) -> int:
        return self.K_y * self.K_z

    @property
    def irs_gain(self) -> float:
        return float(np.sqrt(self.K)) if self.unit_modulus else 1.0

    @property
    def pilot_gain(self) -> float:
        return float(np.sqrt(self.T)) if self.bpsk_pilots else 1.0

    @property
    def gain(self) -> float:
        """Total amplitude gain of the transmitted training over the normalized design."""
        return self.irs_gain * self.pilot_gain


@dataclass(frozen=True)
class NoiseModel:
    """Circular white Gaussian noise, covariance ``variance * I``."""

    variance: float

    def __post_init__(self):
        if not np.isfinite(self.variance) or self.variance < 0:
            raise ValueError(f"noise variance must be >= 0, got {self.variance}")

    @classmethod
    def from_snr_db(cls, snr_db: float, P_T: float = 1.0) -> "NoiseModel":
        """SNR is ``P_T / variance``."""
        return cls(P_T * 10.0 ** (-snr_db / 10.0))


@dataclass(frozen=True)
class PilotObservation:
    """Received pilot blocks, stacked as ``blocks[k] = X_k`` of shape (Q, T)."""

    blocks: np.ndarray
    noise_var: float
    P_T: float = 1.0
    seed: object = field(default=None, compare=False)

    @property
    def K(self) -> int:
        return self.blocks.shape[0]


def build_pilots(cfg: ArrayConfig):
    """Unitary Hadamard pilots per axis; returns ``(S_y, S_z, S)``."""
    S_y = hadamard_matrix(cfg.M_y)
    S_z = hadamard_matrix(cfg.M_z)
    return S_y, S_z, kron(S_y, S_z)


def build_irs_schedule(cfg: ArrayConfig, K_y=None, K_z=None):
    """DFT-codebook IRS schedule; returns ``(Omega_y, Omega_z, Omega)``.

    ``Omega_y = W_y Psi`` and ``Omega_z = W_z Phi`` with
    ``Psi = I_{K_y} kron 1_{K_z}^T`` and ``Phi = 1_{K_y}^T kron I_{K_z}``, so
    that ``Omega = W_y kron W_z``.
    """
    K_y = cfg.N_y if K_y is None else K_y
    K_z = cfg.N_z if K_z is None else K_z
    W_y = dft_codebook(cfg.N_y, K_y)
    W_z = dft_codebook(cfg.N_z, K_z)
    Psi, Phi = selection_matrices(K_y, K_z)
    Omega_y = W_y @ Psi
    Omega_z = W_z @ Phi
    return Omega_y, Omega_z, khatri_rao(Omega_y, Omega_z)


def selection_matrices(K_y, K_z):
    Psi = np.kron(np.eye(K_y), np.ones((1, K_z)))
    Phi = np.kron(np.ones((1, K_y)), np.eye(K_z))
    return Psi, Phi


def build_design(cfg: ArrayConfig, K_y=None, K_z=None, unit_modulus=False,
                 bpsk_pilots=False) -> TrainingDesign:
    S_y, S_z, _ = build_pilots(cfg)
    K_y = cfg.N_y if K_y is None else K_y
    K_z = cfg.N_z if K_z is None else K_z
    Omega_y, Omega_z, _ = build_irs_schedule(cfg, K_y, K_z)
    return TrainingDesign(cfg, S_y, S_z, Omega_y, Omega_z, K_y, K_z, unit_modulus, bpsk_pilots)


def noiseless_blocks(ch: ChannelFactors, design: TrainingDesign, P_T: float = 1.0):
    """Signal part of every pilot block, ``sqrt(P_T) G diag(w_k) H S``, shape (K, Q, T)."""
    G, H, S = ch.G, ch.H, design.S
    if G.shape[1] != design.Omega.shape[0] or H.shape[1] != S.shape[0]:
        raise ValueError(
            f"channel (G {G.shape}, H {H.shape}) does not match design "
            f"(Omega {design.Omega.shape}, S {S.shape})"
        )
    W = design.irs_gain * design.Omega
    HS = design.pilot_gain * (H @ S)
    # X_k = G diag(w_k) H S for all k at once
    return np.sqrt(P_T) * np.einsum("qn,nk,nt->kqt", G, W, HS)


def synthesize_received(ch: ChannelFactors, design: TrainingDesign, noise: NoiseModel,
                        P_T: float, rng: np.random.Generator, seed=None) -> PilotObservation:
    X = noiseless_blocks(ch, design, P_T)
    if noise.variance > 0:
        scale = np.sqrt(noise.variance / 2.0)
        X = X + scale * (rng.standard_normal(X.shape) + 1j * rng.standard_normal(X.shape))
    return PilotObservation(blocks=X, noise_var=noise.variance, P_T=P_T, seed=seed)
