import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from irs2d.channel import PARAMETERS, wrap_angle
from irs2d.models import HKMREstimator, KRFEstimator, LSEstimator, TSHDREstimator
from irs2d.validation import check_blocks, check_positive_int

from conftest import make_obs


@pytest.mark.parametrize("cls", [HKMREstimator, TSHDREstimator])
def test_frequency_estimators(cfg, design, cls):
    scene, ch, obs = make_obs(cfg, design, 12)
    est = cls().fit(obs.blocks)
    truth = np.array([scene.truth[p] for p in PARAMETERS])
    np.testing.assert_allclose(wrap_angle(est.frequencies_[0] - truth), 0, atol=1e-5)
    assert est.cascaded_.shape == (1, 256, 16)
    assert est.n_flagged_ == 0
    batch = np.stack([obs.blocks, make_obs(cfg, design, 13)[2].blocks])
    assert est.predict(batch).shape == (2, 6)
    assert est.transform(obs).shape == (1, 256, 16)
    assert list(est.feature_names_out_) == list(PARAMETERS)


@pytest.mark.parametrize("cls", [LSEstimator, KRFEstimator])
def test_channel_estimators(cfg, design, cls):
    scene, ch, obs = make_obs(cfg, design, 12)
    est = cls().fit([obs])
    np.testing.assert_allclose(est.cascaded_[0], ch.cascaded(), atol=1e-10)
    np.testing.assert_allclose(est.predict(obs.blocks)[0], ch.cascaded(), atol=1e-10)


def test_params_and_clone():
    est = TSHDREstimator(grid_size=1024, N_y=2)
    assert est.get_params()["grid_size"] == 1024
    c = clone(est)
    assert c.get_params() == est.get_params()
    est.set_params(refine="local")
    assert est.refine == "local"


def test_not_fitted_and_bad_input(cfg, design):
    with pytest.raises(NotFittedError):
        TSHDREstimator().predict(np.zeros((16, 16, 16)))
    with pytest.raises(ValueError):
        TSHDREstimator().fit(np.zeros((16, 16, 8)))
    with pytest.raises(ValueError):
        check_blocks(np.full((16, 16, 16), np.nan), design)
    with pytest.raises(TypeError):
        check_blocks(np.array([["a"]]), design)
    with pytest.raises(ValueError):
        check_positive_int(0, "trials")
    with pytest.raises(ValueError):
        HKMREstimator(noise_var=-1).fit(np.zeros((16, 16, 16)))
