"""HKMR and TSHDR spatial-frequency estimators, LS/KRF baselines and peak search.

Every estimator consumes a :class:`~irs2d.training.PilotObservation` together
with the :class:`~irs2d.training.TrainingDesign` that produced it.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.optimize import minimize_scalar

from .channel import PARAMETERS, ArrayConfig, steering_vector, wrap_angle
from .multilin import (
    DegenerateInputError,
    block_perm_indices,
    hosvd_rank1_3,
    invert_permutation,
    khatri_rao,
    mode_product,
    nearest_kronecker,
    svd_rank1,
    unvec,
)
from .training import PilotObservation, TrainingDesign

REFINE_MODES = ("none", "parabolic", "local")


@dataclass(frozen=True)
class PeakGrid:
    """Uniform search grid over ``[lo, hi)`` with optional sub-grid refinement.

    ``refine`` is ``"none"``, ``"parabolic"`` (one 3-point fit of the
    log-magnitude) or ``"local"`` (bounded scalar search to ``tol``).
    """

    size: int = 4096
    lo: float = -np.pi
    hi: float = np.pi
    refine: str = "parabolic"
    tol: float = 1e-10

    def __post_init__(self):
        if self.size < 2:
            raise ValueError("grid needs at least two points")
        if not self.hi > self.lo:
            raise ValueError("empty search interval")
        if self.refine not in REFINE_MODES:
            raise ValueError(f"refine must be one of {REFINE_MODES}, got {self.refine!r}")

    @property
    def step(self) -> float:
        return (self.hi - self.lo) / self.size

    @property
    def periodic(self) -> bool:
        return np.isclose(self.hi - self.lo, 2 * np.pi)

    def points(self) -> np.ndarray:
        return self.lo + self.step * np.arange(self.size)

    @property
    def center(self) -> float:
        return 0.5 * (self.lo + self.hi)


DEFAULT_GRID = PeakGrid()


@lru_cache(maxsize=64)
def _grid_dictionary(L, size, lo, hi):
    mu = lo + (hi - lo) / size * np.arange(size)
    return np.exp(-1j * np.outer(np.arange(L), mu))


def peak_search(v, L=None, grid: PeakGrid = DEFAULT_GRID) -> float:
    """Frequency maximizing ``|v^H a(mu)|`` over ``grid`` (lowest index wins ties)."""
    v = np.asarray(v, dtype=complex).ravel()
    L = v.size if L is None else L
    if v.size != L:
        raise ValueError(f"vector of length {v.size} does not match array length {L}")
    if not np.any(v):
        raise DegenerateInputError("peak search on a zero vector")
    D = _grid_dictionary(L, grid.size, grid.lo, grid.hi)
    mag = np.abs(v.conj() @ D)
    i = int(np.argmax(mag))
    mu = grid.lo + grid.step * i
    if grid.refine == "parabolic":
        mu += grid.step * _parabolic_offset(mag, i, grid.periodic)
    elif grid.refine == "local":
        res = minimize_scalar(
            lambda x: -abs(v.conj() @ steering_vector(x, L)),
            bounds=(mu - grid.step, mu + grid.step),
            method="bounded",
            options={"xatol": grid.tol},
        )
        mu = float(res.x)
    if grid.periodic:
        return float(grid.lo + np.mod(mu - grid.lo, grid.hi - grid.lo))
    return float(np.clip(mu, grid.lo, grid.hi))


def _parabolic_offset(mag, i, periodic):
    n = mag.size
    if not periodic and (i == 0 or i == n - 1):
        return 0.0
    left, mid, right = mag[(i - 1) % n], mag[i], mag[(i + 1) % n]
    with np.errstate(divide="ignore"):
        lm, mm, rm = np.log(left), np.log(mid), np.log(right)
    denom = lm - 2.0 * mm + rm
    if not np.isfinite(denom) or denom >= 0:
        return 0.0
    return float(np.clip(0.5 * (lm - rm) / denom, -0.5, 0.5))


@dataclass
class FrequencyEstimate:
    """Six spatial frequencies plus the steering-vector estimates behind them."""

    mu_bs: float
    psi_bs: float
    mu_ue: float
    psi_ue: float
    mu_y: float
    psi_z: float
    vectors: dict = field(default_factory=dict, repr=False)
    diagnostics: dict = field(default_factory=dict, repr=False)
    flagged: bool = False

    def as_dict(self) -> dict:
        return {p: getattr(self, p) for p in PARAMETERS}

    def as_array(self) -> np.ndarray:
        return np.array([getattr(self, p) for p in PARAMETERS])

    def errors(self, truth: dict) -> dict:
        """Wrapped estimation error per parameter."""
        return {p: float(wrap_angle(getattr(self, p) - truth[p])) for p in PARAMETERS}


def _flagged_estimate(grid, reason):
    c = grid.center
    return FrequencyEstimate(c, c, c, c, c, c, diagnostics={"reason": reason}, flagged=True)


# Rank-one fits whose leading singular value carries less than this share of
# the energy are treated as degenerate.
_DEGENERATE_ENERGY = 10 * np.finfo(float).eps


def _matched_blocks(obs: PilotObservation, design: TrainingDesign):
    """``U_k = X_k S^H`` for every block, shape (K, Q, M)."""
    return obs.blocks @ design.S.conj().T


def _check_dims(obs: PilotObservation, design: TrainingDesign):
    cfg = design.cfg
    expected = (design.K, cfg.Q, design.T)
    if obs.blocks.shape != expected:
        raise ValueError(
            f"observation blocks have shape {obs.blocks.shape}, design expects {expected}"
        )


def hkmr_estimate(obs: PilotObservation, design: TrainingDesign,
                  grid: PeakGrid = DEFAULT_GRID, hosvd_refine=False) -> FrequencyEstimate:
    """Hybrid Kronecker factorization and multi-rank-one (HKMR) estimator."""
    _check_dims(obs, design)
    cfg = design.cfg
    K = design.K
    try:
        U_y = np.empty((cfg.Q_y * cfg.M_y, K), complex)
        U_z = np.empty((cfg.Q_z * cfg.M_z, K), complex)
        fit_ratio = np.empty(K)
        for k in range(K):
            fit = nearest_kronecker(obs.blocks[k], cfg.Q_y, design.T_y)
            if fit.degenerate:
                raise DegenerateInputError(f"pilot block {k} is all zero")
            fit_ratio[k] = fit.fit_ratio
            # split the block scale evenly so both domains weight blocks alike;
            # the Kronecker product (alpha_k * beta_k) is unchanged
            w = np.sqrt(fit.singular_values[0])
            U_y[:, k] = (w * fit.A @ design.S_y.conj().T).reshape(-1, order="F")
            U_z[:, k] = (fit.B / w @ design.S_z.conj().T).reshape(-1, order="F")

        T_y = U_y.reshape(cfg.Q_y, cfg.M_y, K, order="F")
        T_z = U_z.reshape(cfg.Q_z, cfg.M_z, K, order="F")
        ry = hosvd_rank1_3(T_y, refine=hosvd_refine)
        rz = hosvd_rank1_3(T_z, refine=hosvd_refine)
        mu_ue, mu_bs = peak_search(ry.u1, cfg.Q_y, grid), peak_search(ry.u2, cfg.M_y, grid)
        psi_ue, psi_bs = peak_search(rz.u1, cfg.Q_z, grid), peak_search(rz.u2, cfg.M_z, grid)

        # spatial filtering with unit-norm beams built from the estimates
        l_y = _beamform(T_y, mu_ue, mu_bs)
        l_z = _beamform(T_z, psi_ue, psi_bs)
        n_hat = design.Omega.conj() @ (l_y * l_z)
        N_hat = unvec(n_hat, cfg.N_z, cfg.N_y)
        if np.sum(np.abs(N_hat) ** 2) <= _DEGENERATE_ENERGY * np.sum(np.abs(obs.blocks) ** 2):
            raise DegenerateInputError("filtered IRS response vanished")
        u, s, v = svd_rank1(N_hat)
        n_z, n_y = np.sqrt(s) * u, np.sqrt(s) * v.conj()
        mu_y = peak_search(n_y, cfg.N_y, grid)
        psi_z = peak_search(n_z, cfg.N_z, grid)
    except DegenerateInputError as exc:
        return _flagged_estimate(grid, str(exc))

    return FrequencyEstimate(
        mu_bs, psi_bs, mu_ue, psi_ue, mu_y, psi_z,
        vectors={"a_y": ry.u2, "q_y": ry.u1, "a_z": rz.u2, "q_z": rz.u1,
                 "n_y": n_y, "n_z": n_z, "l_y": l_y, "l_z": l_z},
        diagnostics={"kron_fit_ratio": fit_ratio,
                     "irs_fit_ratio": s**2 / np.sum(np.abs(N_hat) ** 2)},
    )


def _beamform(T, mu_rx, mu_tx):
    g = steering_vector(mu_rx, T.shape[0]).conj() / np.sqrt(T.shape[0])
    f = steering_vector(mu_tx, T.shape[1]).conj() / np.sqrt(T.shape[1])
    return mode_product(mode_product(T, g, 1), f, 1)


def cascaded_ls(obs: PilotObservation, design: TrainingDesign) -> np.ndarray:
    """Matched-filter estimate ``E = U Omega^H`` of ``sqrt(P_T) (H^T <> G)``."""
    _check_dims(obs, design)
    U_blocks = _matched_blocks(obs, design)
    K, Q, M = U_blocks.shape
    U = U_blocks.transpose(0, 2, 1).reshape(K, M * Q).T
    return U @ design.Omega.conj().T / design.gain


def tshdr_estimate(obs: PilotObservation, design: TrainingDesign,
                   grid: PeakGrid = DEFAULT_GRID, hosvd_refine=False) -> FrequencyEstimate:
    """Two-stage higher-dimensional rank-one (TSHDR) estimator."""
    cfg = design.cfg
    E = cascaded_ls(obs, design)
    perm = block_perm_indices(cfg.M_y, cfg.M_z, cfg.Q_y, cfg.Q_z, cfg.N_y, cfg.N_z)
    J = E[invert_permutation(perm)]
    fit = nearest_kronecker(J, cfg.Q_y * cfg.M_y, cfg.N_y)
    if fit.degenerate:
        return _flagged_estimate(grid, "cascaded channel estimate is all zero")
    try:
        ry = hosvd_rank1_3(fit.A.reshape(cfg.Q_y, cfg.M_y, cfg.N_y, order="F"), hosvd_refine)
        rz = hosvd_rank1_3(fit.B.reshape(cfg.Q_z, cfg.M_z, cfg.N_z, order="F"), hosvd_refine)
        est = FrequencyEstimate(
            mu_bs=peak_search(ry.u2, cfg.M_y, grid),
            psi_bs=peak_search(rz.u2, cfg.M_z, grid),
            mu_ue=peak_search(ry.u1, cfg.Q_y, grid),
            psi_ue=peak_search(rz.u1, cfg.Q_z, grid),
            mu_y=peak_search(ry.u3, cfg.N_y, grid),
            psi_z=peak_search(rz.u3, cfg.N_z, grid),
        )
    except DegenerateInputError as exc:
        return _flagged_estimate(grid, str(exc))
    est.vectors = {"a_y": ry.u2, "q_y": ry.u1, "n_y": ry.u3,
                   "a_z": rz.u2, "q_z": rz.u1, "n_z": rz.u3,
                   "J_y": fit.A, "J_z": fit.B}
    est.diagnostics = {"kron_fit_ratio": fit.fit_ratio, "kron_residual": fit.residual,
                       "J": J}
    return est


def ls_baseline(obs: PilotObservation, design: TrainingDesign) -> np.ndarray:
    """Unstructured LS estimate of the cascaded channel (no factorization)."""
    return cascaded_ls(obs, design)


@dataclass(frozen=True)
class KRFResult:
    H: np.ndarray
    G: np.ndarray
    E: np.ndarray
    residuals: np.ndarray


def krf_baseline(obs: PilotObservation, design: TrainingDesign) -> KRFResult:
    """Khatri-Rao factorization: rank-one fit of every unvec'd column of the LS estimate.

    Column ``n`` of ``E`` is ``vec(g_n h_n^T)``; ``h_n`` is unit norm
    (largest entry real nonnegative) and ``g_n`` carries the scale.
    """
    cfg = design.cfg
    E_ls = cascaded_ls(obs, design)
    Q, M, N = cfg.Q, cfg.M, cfg.N
    H_T = np.zeros((M, N), complex)
    G = np.zeros((Q, N), complex)
    residuals = np.zeros(N)
    for n in range(N):
        col = unvec(E_ls[:, n], Q, M)
        if not np.any(col):
            continue
        u, s, v = svd_rank1(col)
        h = v.conj()
        ph = h[int(np.argmax(np.abs(h)))]
        ph = ph / abs(ph)
        H_T[:, n] = h / ph
        G[:, n] = s * ph * u
        residuals[n] = np.sqrt(max(np.sum(np.abs(col) ** 2) - s**2, 0.0))
    return KRFResult(H=H_T.T, G=G, E=khatri_rao(H_T, G), residuals=residuals)


def reconstruct_cascaded(est: FrequencyEstimate, cfg: ArrayConfig, E_ref=None) -> np.ndarray:
    """Parametric ``E = H^T <> G`` rebuilt from estimated frequencies.

    ``H^T <> G = (a kron q) n^T`` with ``a = a_y kron a_z``, ``q = q_y kron q_z``
    and ``n = n_y kron n_z``.  When ``E_ref`` is given, the result is scaled
    by the complex scalar minimizing ``||E_ref - c E||_F``.
    """
    a = np.kron(steering_vector(est.mu_bs, cfg.M_y), steering_vector(est.psi_bs, cfg.M_z))
    q = np.kron(steering_vector(est.mu_ue, cfg.Q_y), steering_vector(est.psi_ue, cfg.Q_z))
    n = np.kron(steering_vector(est.mu_y, cfg.N_y), steering_vector(est.psi_z, cfg.N_z))
    E_hat = np.outer(np.kron(a, q), n)
    if E_ref is not None:
        E_hat = gauge_fit(E_hat, E_ref)
    return E_hat


def gauge_fit(E_hat, E_ref):
    """``c * E_hat`` with ``c`` the least-squares complex scale towards ``E_ref``."""
    denom = np.vdot(E_hat, E_hat)
    if denom == 0:
        return E_hat
    return (np.vdot(E_hat, E_ref) / denom) * E_hat
