"""Geometric BS-IRS-UE line-of-sight channels on uniform rectangular arrays."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .multilin import khatri_rao, kron

PARAMETERS = ("mu_bs", "psi_bs", "mu_ue", "psi_ue", "mu_y", "psi_z")
AZIMUTH_RANGE_DEG = (-60.0, 60.0)
ELEVATION_RANGE_DEG = (90.0, 130.0)


@dataclass(frozen=True)
class ArrayConfig:
    """Per-axis element counts of the BS, UE and IRS rectangular arrays."""

    M_y: int = 4
    M_z: int = 4
    Q_y: int = 4
    Q_z: int = 4
    N_y: int = 4
    N_z: int = 4

    def __post_init__(self):
        for name in ("M_y", "M_z", "Q_y", "Q_z", "N_y", "N_z"):
            value = getattr(self, name)
            if int(value) != value or value < 1:
                raise ValueError(f"{name} must be a positive integer, got {value!r}")

    @property
    def M(self) -> int:
        return self.M_y * self.M_z

    @property
    def Q(self) -> int:
        return self.Q_y * self.Q_z

    @property
    def N(self) -> int:
        return self.N_y * self.N_z

    def with_irs(self, N_y: int, N_z: int) -> "ArrayConfig":
        return ArrayConfig(self.M_y, self.M_z, self.Q_y, self.Q_z, N_y, N_z)


def spatial_freqs_from_angles(azimuth, elevation):
    """Return ``(mu, psi) = (pi sin(theta) sin(phi), pi cos(theta))``; radians in."""
    return (
        np.pi * np.sin(elevation) * np.sin(azimuth),
        np.pi * np.cos(elevation),
    )


def steering_vector(mu, L):
    """Uniform linear array response ``[1, e^{-j mu}, ..., e^{-j (L-1) mu}]``."""
    if L < 1:
        raise ValueError("array length must be >= 1")
    return np.exp(-1j * mu * np.arange(L))


def wrap_angle(x):
    """Map angles into (-pi, pi]."""
    return np.pi - np.mod(np.pi - np.asarray(x, dtype=float), 2 * np.pi)


@dataclass(frozen=True)
class SceneParams:
    """Ground-truth angles (radians) of the BS -> IRS -> UE geometry.

    ``irs_a`` is the arrival side of the IRS (from the BS), ``irs_d`` the
    departure side (towards the UE).
    """

    az_bs: float
    el_bs: float
    az_ue: float
    el_ue: float
    az_irs_a: float
    el_irs_a: float
    az_irs_d: float
    el_irs_d: float
    freqs: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        f = {}
        for side in ("bs", "ue", "irs_a", "irs_d"):
            mu, psi = spatial_freqs_from_angles(
                getattr(self, f"az_{side}"), getattr(self, f"el_{side}")
            )
            f[f"mu_{side}"] = float(mu)
            f[f"psi_{side}"] = float(psi)
        f["mu_y"] = f["mu_irs_a"] + f["mu_irs_d"]
        f["psi_z"] = f["psi_irs_a"] + f["psi_irs_d"]
        object.__setattr__(self, "freqs", f)

    @classmethod
    def from_degrees(cls, **angles_deg) -> "SceneParams":
        return cls(**{k: np.deg2rad(v) for k, v in angles_deg.items()})

    @classmethod
    def from_frequencies(cls, mu_bs, psi_bs, mu_ue, psi_ue, mu_irs_a, psi_irs_a,
                         mu_irs_d, psi_irs_d) -> "SceneParams":
        """Build a scene whose spatial frequencies are exactly the given values.

        Each (mu, psi) pair must satisfy ``(mu/pi)^2 + (psi/pi)^2 <= 1``.
        """
        kw = {}
        for side, mu, psi in (
            ("bs", mu_bs, psi_bs),
            ("ue", mu_ue, psi_ue),
            ("irs_a", mu_irs_a, psi_irs_a),
            ("irs_d", mu_irs_d, psi_irs_d),
        ):
            cos_el = psi / np.pi
            sin_el = np.sqrt(max(0.0, 1.0 - cos_el**2))
            if abs(mu) > np.pi * sin_el + 1e-12:
                raise ValueError(f"({mu}, {psi}) is not a valid frequency pair for {side}")
            kw[f"el_{side}"] = float(np.arccos(np.clip(cos_el, -1.0, 1.0)))
            kw[f"az_{side}"] = 0.0 if sin_el == 0 else float(
                np.arcsin(np.clip(mu / (np.pi * sin_el), -1.0, 1.0))
            )
        return cls(**kw)

    @property
    def truth(self) -> dict:
        """The six estimated parameters."""
        return {k: self.freqs[k] for k in PARAMETERS}


def sample_scene(rng: np.random.Generator) -> SceneParams:
    """Draw one sector geometry: azimuths U(-60, 60) deg, elevations U(90, 130) deg."""
    az = np.deg2rad(rng.uniform(*AZIMUTH_RANGE_DEG, size=4))
    el = np.deg2rad(rng.uniform(*ELEVATION_RANGE_DEG, size=4))
    return SceneParams(
        az_bs=az[0], el_bs=el[0],
        az_ue=az[1], el_ue=el[1],
        az_irs_a=az[2], el_irs_a=el[2],
        az_irs_d=az[3], el_irs_d=el[3],
    )


@dataclass(frozen=True)
class ChannelFactors:
    """Horizontal/vertical factors with ``H = H_y kron H_z`` and ``G = G_y kron G_z``."""

    H_y: np.ndarray
    H_z: np.ndarray
    G_y: np.ndarray
    G_z: np.ndarray

    @property
    def H(self) -> np.ndarray:
        return kron(self.H_y, self.H_z)

    @property
    def G(self) -> np.ndarray:
        return kron(self.G_y, self.G_z)

    def cascaded(self) -> np.ndarray:
        """``H^T <> G``, the QM x N matrix mapping IRS weights to vec(G diag(w) H)."""
        return khatri_rao(self.H.T, self.G)


def build_channel_factors(cfg: ArrayConfig, scene: SceneParams) -> ChannelFactors:
    f = scene.freqs
    a_y = steering_vector(f["mu_bs"], cfg.M_y)
    a_z = steering_vector(f["psi_bs"], cfg.M_z)
    b_y = steering_vector(f["mu_irs_a"], cfg.N_y)
    b_z = steering_vector(f["psi_irs_a"], cfg.N_z)
    p_y = steering_vector(f["mu_irs_d"], cfg.N_y)
    p_z = steering_vector(f["psi_irs_d"], cfg.N_z)
    q_y = steering_vector(f["mu_ue"], cfg.Q_y)
    q_z = steering_vector(f["psi_ue"], cfg.Q_z)
    return ChannelFactors(
        H_y=np.outer(b_y, a_y),
        H_z=np.outer(b_z, a_z),
        G_y=np.outer(q_y, p_y),
        G_z=np.outer(q_z, p_z),
    )


def effective_irs_vectors(scene: SceneParams, cfg: ArrayConfig):
    """Effective IRS responses ``n_y = b_y * p_y`` and ``n_z = b_z * p_z``."""
    f = scene.freqs
    return (
        steering_vector(f["mu_y"], cfg.N_y),
        steering_vector(f["psi_z"], cfg.N_z),
    )
