"""scikit-learn style wrappers around the estimators.

Each class is configured by array sizes and training options.  ``fit`` takes
pilot blocks ``(K, Q, T)`` (or a batch ``(n, K, Q, T)``) and stores the
results; ``predict`` returns spatial frequencies ``(n, 6)`` in the order of
:data:`~irs2d.channel.PARAMETERS` and ``transform`` returns cascaded-channel
estimates ``(n, M Q, N)``.

    >>> est = TSHDREstimator().fit(blocks)
    >>> est.frequencies_          # doctest: +SKIP
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .channel import PARAMETERS, ArrayConfig
from .estimators import (
    PeakGrid,
    hkmr_estimate,
    krf_baseline,
    ls_baseline,
    reconstruct_cascaded,
    tshdr_estimate,
)
from .training import PilotObservation, build_design
from .validation import check_blocks, check_noise_var


class _ChannelEstimatorBase(BaseEstimator):
    def __init__(self, M_y=4, M_z=4, Q_y=4, Q_z=4, N_y=4, N_z=4,
                 unit_modulus=False, bpsk_pilots=False, P_T=1.0, noise_var=0.0):
        self.M_y = M_y
        self.M_z = M_z
        self.Q_y = Q_y
        self.Q_z = Q_z
        self.N_y = N_y
        self.N_z = N_z
        self.unit_modulus = unit_modulus
        self.bpsk_pilots = bpsk_pilots
        self.P_T = P_T
        self.noise_var = noise_var

    @property
    def array_config(self) -> ArrayConfig:
        return ArrayConfig(self.M_y, self.M_z, self.Q_y, self.Q_z, self.N_y, self.N_z)

    def _design(self):
        return build_design(self.array_config, unit_modulus=self.unit_modulus,
                            bpsk_pilots=self.bpsk_pilots)

    def _observations(self, X, design):
        blocks = check_blocks(X, design)
        nv = check_noise_var(self.noise_var)
        return [PilotObservation(b, nv, self.P_T) for b in blocks]

    def fit(self, X, y=None):
        self.design_ = self._design()
        self._fit_observations(self._observations(X, self.design_))
        return self

    def _prepare(self, X):
        check_is_fitted(self, "design_")
        return self._observations(X, self.design_)


class _FrequencyEstimatorBase(_ChannelEstimatorBase):
    _estimate_fn = None

    def __init__(self, M_y=4, M_z=4, Q_y=4, Q_z=4, N_y=4, N_z=4, unit_modulus=False,
                 bpsk_pilots=False, P_T=1.0, noise_var=0.0, grid_size=4096,
                 refine="parabolic", hosvd_refine=False):
        super().__init__(M_y, M_z, Q_y, Q_z, N_y, N_z, unit_modulus, bpsk_pilots, P_T, noise_var)
        self.grid_size = grid_size
        self.refine = refine
        self.hosvd_refine = hosvd_refine

    def estimate(self, obs):
        """Run the estimator on one :class:`PilotObservation`."""
        grid = PeakGrid(size=self.grid_size, refine=self.refine)
        return type(self)._estimate_fn(obs, self.design_, grid, self.hosvd_refine)

    def _fit_observations(self, observations):
        self.estimates_ = [self.estimate(o) for o in observations]
        self.frequencies_ = np.array([e.as_array() for e in self.estimates_])
        self.cascaded_ = np.array([reconstruct_cascaded(e, self.array_config)
                                   for e in self.estimates_])
        self.feature_names_out_ = np.array(PARAMETERS)
        self.n_flagged_ = sum(e.flagged for e in self.estimates_)

    def predict(self, X):
        return np.array([self.estimate(o).as_array() for o in self._prepare(X)])

    def transform(self, X):
        cfg = self.array_config
        return np.array([reconstruct_cascaded(self.estimate(o), cfg) for o in self._prepare(X)])


class HKMREstimator(_FrequencyEstimatorBase):
    """Per-block Kronecker factorization followed by rank-one tensor steps."""

    _estimate_fn = staticmethod(hkmr_estimate)


class TSHDREstimator(_FrequencyEstimatorBase):
    """Matched filtering, block permutation and two joint rank-one factorizations."""

    _estimate_fn = staticmethod(tshdr_estimate)


class LSEstimator(_ChannelEstimatorBase):
    """Unstructured least-squares cascaded channel."""

    def _fit_observations(self, observations):
        self.cascaded_ = np.array([ls_baseline(o, self.design_) for o in observations])

    def transform(self, X):
        return np.array([ls_baseline(o, self.design_) for o in self._prepare(X)])

    predict = transform


class KRFEstimator(_ChannelEstimatorBase):
    """Column-wise Khatri-Rao factorization of the LS estimate."""

    def _fit_observations(self, observations):
        self.results_ = [krf_baseline(o, self.design_) for o in observations]
        self.cascaded_ = np.array([r.E for r in self.results_])

    def transform(self, X):
        return np.array([krf_baseline(o, self.design_).E for o in self._prepare(X)])

    predict = transform
