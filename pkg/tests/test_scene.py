import math

import numpy as np
import pytest

from tddan import scene
from tddan.errors import DegenerateSource, InvalidArgument
from tddan.scene import Rir, SourceSignal


def direct_convolve(x, h):
    """O(N*M) truncated convolution used as the oracle."""
    out = np.zeros(len(x))
    for n in range(len(x)):
        acc = 0.0
        for m in range(min(len(h), n + 1)):
            acc += h[m] * x[n - m]
        out[n] = acc
    return out


def test_tail_envelope_drops_60_db_at_t60():
    fs, t60 = 8000, 0.3
    ratio = scene.tail_envelope(2400, t60, fs) / scene.tail_envelope(0, t60, fs)
    assert ratio == pytest.approx(1e-3, rel=1e-12)
    assert scene.tail_envelope(0, t60, fs) == pytest.approx(0.5)


def test_rir_tail_follows_envelope():
    fs, t60, delay = 8000, 0.3, 5
    rir = scene.synth_rir(t60, 0.4, fs, delay, seed=1)
    n = np.arange(1, len(rir.taps) - delay)
    white = rir.taps[delay + 1:] / scene.tail_envelope(n, t60, fs)
    assert np.std(white) == pytest.approx(1.0, abs=0.05)
    assert rir.taps[delay] == 1.0 and np.all(rir.taps[:delay] == 0)


def test_rir_is_deterministic():
    a = scene.synth_rir(0.3, 0.4, 8000, 3, seed=11)
    b = scene.synth_rir(0.3, 0.4, 8000, 3, seed=11)
    np.testing.assert_array_equal(a.taps, b.taps)


def test_start_index_rule():
    rir = Rir.from_taps([0.05, 0.2, 1.0, 0.3, -0.4], 8000)
    assert rir.start_index == 1


def test_rir_invariants_hold():
    rir = scene.synth_rir(0.45, 0.5, 8000, 17, seed=3)
    assert 0 <= rir.start_index < rir.early_end_index <= len(rir.taps)
    assert rir.early_end_index - rir.start_index == 400
    peak = np.max(np.abs(rir.taps))
    above = np.nonzero(np.abs(rir.taps) > peak / 10)[0]
    assert rir.start_index == above[0] == 17


@pytest.mark.parametrize("t60", [0.0, -0.1, 0.04])
def test_rir_rejects_bad_t60(t60):
    with pytest.raises(InvalidArgument):
        scene.synth_rir(t60, 0.5, 8000, 0, seed=0)


def test_rir_rejects_bad_sample_rate():
    with pytest.raises(InvalidArgument):
        scene.synth_rir(0.3, 0.5, 0, 0, seed=0)


def test_split_window_covers_fifty_ms():
    taps = np.zeros(1000)
    taps[100] = 1.0
    taps[101:] = 0.01
    early, late = scene.split_rir(Rir.from_taps(taps, 8000))
    nz = np.nonzero(early)[0]
    assert nz[0] == 100 and nz[-1] == 499
    assert np.all(late[:500] == 0) and np.all(late[500:] == taps[500:])
    np.testing.assert_array_equal(early + late, taps)


def test_split_short_rir_has_empty_late_part():
    rir = Rir.from_taps(np.r_[0.0, 1.0, 0.5 * np.ones(100)], 8000)
    early, late = scene.split_rir(rir)
    assert np.all(late == 0)
    np.testing.assert_array_equal(early, rir.taps)


def test_split_convolution_linearity_against_direct_sum():
    rng = np.random.default_rng(5)
    rir = scene.synth_rir(0.25, 0.3, 8000, 7, seed=9)
    early, late = scene.split_rir(rir)
    x = rng.standard_normal(600)
    full = direct_convolve(x, rir.taps[:600])
    np.testing.assert_allclose(
        direct_convolve(x, early[:600]) + direct_convolve(x, late[:600]), full, atol=1e-10)
    np.testing.assert_allclose(scene.render(x, early) + scene.render(x, late),
                               scene.render(x, rir.taps), atol=1e-10)


def test_render_identity_and_shift():
    src = SourceSignal([1.0, 0.0, 0.0, 0.0], 8000)
    np.testing.assert_allclose(scene.render(src, [1.0]), [1, 0, 0, 0], atol=1e-15)
    np.testing.assert_allclose(scene.render(src, [0.0, 0.5]), [0, 0.5, 0, 0], atol=1e-15)


def test_render_matches_direct_convolution():
    rng = np.random.default_rng(0)
    x, h = rng.standard_normal(300), rng.standard_normal(57)
    np.testing.assert_allclose(scene.render(x, h), direct_convolve(x, h), atol=1e-12)


def test_render_rejects_empty_taps():
    with pytest.raises(InvalidArgument):
        scene.render(np.ones(4), [])


def _unit_rir():
    return Rir.from_taps([1.0], 8000)


def test_identity_scene():
    src = SourceSignal(np.sin(np.arange(400) * 0.1) * 0.5, 8000)
    sc = scene.mix_scene([src], [_unit_rir()], sir_db=3.0, snr_db=math.inf, seed=0)
    np.testing.assert_allclose(sc.mixture, src.samples, atol=1e-15)
    assert np.all(sc.noise == 0)


def test_equal_power_zero_sir_gives_unit_gain():
    rng = np.random.default_rng(1)
    a = rng.standard_normal(1000)
    b = np.roll(a, 37)  # same power
    sc = scene.mix_scene([SourceSignal(0.2 * a, 8000), SourceSignal(0.2 * b, 8000)],
                         [_unit_rir(), _unit_rir()], 0.0, math.inf, 0)
    assert sc.gains[1] / sc.gains[0] == pytest.approx(1.0, abs=1e-12)


def test_sir_six_db_halves_amplitude():
    rng = np.random.default_rng(2)
    a = rng.standard_normal(1000)
    b = np.roll(a, 11)
    sc = scene.mix_scene([SourceSignal(0.2 * a, 8000), SourceSignal(0.2 * b, 8000)],
                         [_unit_rir(), _unit_rir()], 6.02, math.inf, 0)
    assert sc.gains[1] / sc.gains[0] == pytest.approx(10 ** (-6.02 / 20), rel=1e-12)
    assert sc.gains[1] / sc.gains[0] == pytest.approx(0.5, abs=1e-3)
    assert scene.realized_sir_db(sc, 1) == pytest.approx(6.02, abs=1e-9)


def test_silent_source_is_rejected():
    silent = SourceSignal(np.zeros(100), 8000)
    with pytest.raises(DegenerateSource):
        scene.mix_scene([SourceSignal(np.ones(100) * 0.1, 8000), silent],
                        [_unit_rir(), _unit_rir()], 0.0, 25.0, 0)


@pytest.mark.parametrize("k", [1, 2, 3])
def test_generated_scene_invariants(k):
    p = scene.sample_scene_params(3, k)
    sc = scene.build_scene(p, k, 0.5, 8000)
    recon = np.sum(sc.early, axis=0) + np.sum(sc.late, axis=0) + sc.noise
    assert np.max(np.abs(sc.mixture - recon)) <= 1e-10 * np.max(np.abs(sc.mixture))
    for e, lt, r in zip(sc.early, sc.late, sc.reverberant):
        np.testing.assert_allclose(e + lt, r, atol=1e-12)
        assert len(e) == len(sc.mixture)
    for i in range(1, k):
        assert scene.realized_sir_db(sc, i) == pytest.approx(p.sir_db, abs=0.01)
    assert scene.realized_snr_db(sc) == pytest.approx(p.snr_db, abs=0.01)
    for s in sc.sources:
        assert np.max(np.abs(s.samples)) <= 1.0
    for rir in sc.rirs:
        assert rir.early_end_index - rir.start_index == 400


def test_scene_params_deterministic():
    assert scene.sample_scene_params(42, 9) == scene.sample_scene_params(42, 9)


def test_scene_params_ranges_monte_carlo():
    draws = [scene.sample_scene_params(0, i) for i in range(10000)]
    t60 = np.array([d.t60 for d in draws])
    assert t60.min() >= 0.2 and t60.max() <= 0.5
    assert abs(t60.mean() - 0.35) <= 0.01
    sir = np.array([d.sir_db for d in draws])
    snr = np.array([d.snr_db for d in draws])
    assert sir.min() >= -5 and sir.max() <= 5
    assert snr.min() >= 20 and snr.max() <= 30


def test_child_seeds_distinct():
    seeds = [scene.sample_scene_params(123, i).seed for i in range(10000)]
    assert len(set(seeds)) >= 0.9999 * len(seeds)


def test_synth_source_in_range_and_deterministic():
    a = scene.synth_source(0.5, 8000, 4)
    b = scene.synth_source(0.5, 8000, 4)
    np.testing.assert_array_equal(a.samples, b.samples)
    assert np.max(np.abs(a.samples)) <= 1.0
    # bursts leave silent gaps
    assert np.mean(a.samples == 0) > 0.05
