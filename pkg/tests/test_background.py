import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fibersense.errors import WarmupError
from fibersense.detect import BackgroundModel, apply_hysteresis, block_energy
from fibersense.sim import WaterfallBlock

from conftest import block_energy_ref


def test_block_energy_matches_two_pass_reference():
    rng = np.random.Generator(np.random.PCG64(1))
    samples = rng.normal(0, 0.3, (50, 20))
    block = WaterfallBlock(0.0, 50, 20, samples)
    got = block_energy(block)
    ref = block_energy_ref(samples)
    assert np.allclose(got, ref, rtol=1e-12, atol=0)


def test_single_update_arithmetic():
    bg = BackgroundModel(alpha=0.01, warmup_blocks=0, mean=np.zeros(3), var=np.zeros(3))
    bg.update(np.ones(3))
    assert np.allclose(bg.mean, 0.01, rtol=1e-12)
    assert np.allclose(bg.var, 0.01, rtol=1e-12)


def test_variance_uses_pre_update_mean():
    # mean=2, var=1, e=4, alpha=0.1:
    # mean' = 0.9*2 + 0.1*4 = 2.2 ; var' = 0.9*1 + 0.1*(4-2)^2 = 1.3
    bg = BackgroundModel(alpha=0.1, warmup_blocks=0, mean=[2.0], var=[1.0])
    bg.update([4.0])
    assert bg.mean[0] == pytest.approx(2.2, rel=1e-12)
    assert bg.var[0] == pytest.approx(1.3, rel=1e-12)


def test_sigma_floor_in_z_scores():
    bg = BackgroundModel(alpha=0.01, sigma_floor=1e-6, warmup_blocks=0,
                         mean=[1e-4], var=[0.0])
    z = bg.z_scores([1e-4 + 1e-7])
    assert z[0] == pytest.approx(0.1, rel=1e-9)


def test_equal_energy_keeps_mean_and_decays_variance():
    bg = BackgroundModel(alpha=0.05, warmup_blocks=0, mean=[3.0], var=[2.0])
    bg.update([3.0])
    assert bg.mean[0] == pytest.approx(3.0, rel=1e-12)
    assert bg.var[0] == pytest.approx(2.0 * 0.95, rel=1e-12)


def test_frozen_bins_unchanged():
    bg = BackgroundModel(alpha=0.5, warmup_blocks=0, mean=[1.0, 1.0], var=[0.5, 0.5])
    bg.update([9.0, 9.0], freeze=[True, False])
    assert bg.mean[0] == 1.0 and bg.var[0] == 0.5
    assert bg.mean[1] == pytest.approx(5.0)
    assert bg.var[1] == pytest.approx(0.25 + 0.5 * 64.0)


def test_warmup_refuses_z_scores_then_warms():
    bg = BackgroundModel(warmup_blocks=3)
    e = np.full(4, 2.0)
    for _ in range(3):
        assert not bg.is_warm
        with pytest.raises(WarmupError):
            bg.z_scores(e)
        bg.update(e)
    assert bg.is_warm
    assert np.allclose(bg.z_scores(e), 0.0)


def test_first_block_seeds_conservative_variance():
    bg = BackgroundModel(warmup_blocks=0, init_sigma_scale=0.5)
    bg.update(np.array([4.0]))
    assert bg.mean[0] == 4.0
    assert bg.sigma()[0] == pytest.approx(2.0)  # deliberately wide at first


def test_shape_mismatch_rejected():
    bg = BackgroundModel(warmup_blocks=0)
    bg.update(np.zeros(4))
    with pytest.raises(ValueError):
        bg.update(np.zeros(5))


def test_streaming_equals_batch_recomputation():
    """EMA state after N streamed updates == one-shot replay of the recurrence."""
    rng = np.random.Generator(np.random.PCG64(7))
    n_blocks, n_bins = 1000, 32
    energies = rng.gamma(2.0, 0.5, (n_blocks, n_bins))
    freezes = rng.random((n_blocks, n_bins)) < 0.1

    bg = BackgroundModel(alpha=0.01, warmup_blocks=0)
    for e, f in zip(energies, freezes):
        bg.update(e, freeze=f)

    # independent batch replay
    mean = energies[0].copy()
    var = (0.5 * np.maximum(energies[0], 1e-6)) ** 2
    for e, f in zip(energies[1:], freezes[1:]):
        nm = 0.99 * mean + 0.01 * e
        nv = 0.99 * var + 0.01 * (e - mean) ** 2
        keep = f
        nm[keep] = mean[keep]
        nv[keep] = var[keep]
        mean, var = nm, nv

    assert np.allclose(bg.mean, mean, rtol=1e-9, atol=0)
    assert np.allclose(bg.var, var, rtol=1e-9, atol=0)


def test_hysteresis_latches_between_thresholds():
    z = np.array([6.0])
    active = apply_hysteresis(z, None)
    assert active[0]
    active = apply_hysteresis(np.array([4.0]), active)  # between k_off and k_on
    assert active[0]
    active = apply_hysteresis(np.array([2.9]), active)
    assert not active[0]
    active = apply_hysteresis(np.array([4.0]), active)  # needs k_on again
    assert not active[0]


@given(
    z0=st.floats(-2, 10, allow_nan=False),
    z1=st.floats(-2, 10, allow_nan=False),
)
@settings(max_examples=100)
def test_hysteresis_matches_truth_table(z0, z1):
    a0 = bool(apply_hysteresis(np.array([z0]), None)[0])
    assert a0 == (z0 >= 5.0)
    a1 = bool(apply_hysteresis(np.array([z1]), np.array([a0]))[0])
    assert a1 == ((z1 >= 3.0) if a0 else (z1 >= 5.0))
