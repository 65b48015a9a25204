import numpy as np
import pytest

from fibersense.sim import SimConfig, build_layout


@pytest.fixture(scope="session")
def layout():
    return build_layout()


def clean_sim_config(layout, seed=7, **overrides):
    """Noise-free, unit-sensitivity config so source contributions are exact."""
    cfg = SimConfig(
        layout=layout, seed=seed, noise_sigma_rad=0.0, sensitivity_range=(1.0, 1.0)
    )
    for key, value in overrides.items():
        setattr(cfg, key, value)
    return cfg


def block_energy_ref(samples):
    """Two-pass reference: mean of squares per bin, plain float64 loop shape."""
    s = np.asarray(samples, dtype=np.float64)
    return np.array([np.mean(s[:, i] ** 2) for i in range(s.shape[1])])
