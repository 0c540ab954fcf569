import numpy as np
import pytest

from irs2d.channel import ArrayConfig, build_channel_factors, sample_scene
from irs2d.training import NoiseModel, build_design, synthesize_received


def crandn(rng, *shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture
def cfg():
    return ArrayConfig()


@pytest.fixture
def design(cfg):
    return build_design(cfg)


def make_obs(cfg, design, seed, noise_var=0.0, P_T=1.0):
    rng = np.random.default_rng(seed)
    scene = sample_scene(rng)
    ch = build_channel_factors(cfg, scene)
    obs = synthesize_received(ch, design, NoiseModel(noise_var), P_T, rng)
    return scene, ch, obs
