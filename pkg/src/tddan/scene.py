"""Synthetic reverberant multi-speaker scenes.

Room responses are modelled as a unit direct path followed by an exponentially
decaying Gaussian tail.  Each response is cut into an early part (the direct
path plus the following 50 ms) and a late part, and every speaker is rendered
through both so that

    mixture = sum_k early[k] + sum_k late[k] + noise

holds by construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import signal

from .errors import DegenerateSource, InvalidArgument

EARLY_WINDOW_S = 0.050
T60_RANGE = (0.2, 0.5)
SIR_RANGE = (-5.0, 5.0)
SNR_RANGE = (20.0, 30.0)
MAX_SPEAKERS = 4
MAX_DIRECT_DELAY = 40


def _frozen(x):
    x = np.array(x, dtype=np.float64)
    x.setflags(write=False)
    return x


def early_window(sample_rate):
    return int(round(EARLY_WINDOW_S * sample_rate))


def find_start_index(taps):
    """Index of the first tap whose magnitude exceeds a tenth of the peak."""
    mag = np.abs(taps)
    peak = mag.max()
    if peak == 0:
        raise InvalidArgument("impulse response is all zeros")
    return int(np.argmax(mag > peak / 10.0))


@dataclass(frozen=True)
class Rir:
    taps: np.ndarray
    sample_rate: int
    start_index: int
    early_end_index: int
    t60: float = float("nan")

    @classmethod
    def from_taps(cls, taps, sample_rate, t60=float("nan")):
        taps = _frozen(taps)
        if taps.ndim != 1 or taps.size == 0:
            raise InvalidArgument("taps must be a non-empty 1-D sequence")
        if sample_rate <= 0:
            raise InvalidArgument("sample_rate must be positive")
        start = find_start_index(taps)
        # may run past the end for short responses; the late part is then empty
        return cls(taps, int(sample_rate), start, start + early_window(sample_rate), float(t60))


@dataclass(frozen=True)
class SourceSignal:
    samples: np.ndarray
    sample_rate: int
    speaker_id: str = ""

    def __post_init__(self):
        object.__setattr__(self, "samples", _frozen(self.samples))
        if self.samples.ndim != 1 or self.samples.size == 0:
            raise InvalidArgument("source must be a non-empty 1-D signal")
        if not np.all(np.isfinite(self.samples)):
            raise InvalidArgument("source contains non-finite samples")


@dataclass(frozen=True)
class MixtureScene:
    sources: list
    rirs: list
    early: list
    late: list
    reverberant: list
    noise: np.ndarray
    mixture: np.ndarray
    sir_db: float
    snr_db: float
    seed: int
    gains: tuple = field(default=())

    @property
    def num_speakers(self):
        return len(self.sources)

    @property
    def sample_rate(self):
        return self.sources[0].sample_rate

    def __len__(self):
        return self.mixture.size


def tail_envelope(n, t60, sample_rate):
    """Amplitude envelope of the tail ``n`` samples after the direct path."""
    return 0.5 * np.exp(-3.0 * math.log(10.0) * np.asarray(n) / (sample_rate * t60))


def synth_rir(t60, length, sample_rate, direct_delay, seed):
    """Direct impulse plus a Gaussian tail decaying by 60 dB over ``t60`` seconds."""
    if t60 <= 0 or sample_rate <= 0:
        raise InvalidArgument("t60 and sample_rate must be positive")
    if t60 <= 0.05:
        raise InvalidArgument(f"t60 must exceed 50 ms, got {t60}")
    if length < t60:
        raise InvalidArgument("length must be at least t60")
    if direct_delay < 0:
        raise InvalidArgument("direct_delay must be non-negative")
    n_taps = int(round(length * sample_rate))
    if n_taps <= direct_delay:
        raise InvalidArgument("response too short for the requested direct delay")

    rng = np.random.default_rng(seed)
    taps = np.zeros(n_taps)
    taps[direct_delay] = 1.0
    n = np.arange(1, n_taps - direct_delay)
    taps[direct_delay + 1:] = tail_envelope(n, t60, sample_rate) * rng.standard_normal(n.size)
    return Rir.from_taps(taps, sample_rate, t60)


def split_rir(rir):
    """Return ``(early_taps, late_taps)``; they sum exactly to ``rir.taps``."""
    early = np.array(rir.taps, dtype=np.float64)
    early[rir.early_end_index:] = 0.0
    late = rir.taps - early
    return early, late


def render(source, taps):
    """Linear convolution of ``source`` with ``taps``, truncated to the source length."""
    taps = np.asarray(taps, dtype=np.float64)
    if taps.size == 0:
        raise InvalidArgument("empty impulse response")
    x = source.samples if isinstance(source, SourceSignal) else np.asarray(source, dtype=np.float64)
    return signal.fftconvolve(x, taps)[: x.size]


def power(x):
    return float(np.mean(np.square(x)))


def mix_scene(sources, rirs, sir_db, snr_db, seed):
    """Render, level and sum speakers; speaker 0 is the SIR reference.

    ``snr_db=math.inf`` disables the noise term.  SNR is measured against the
    noiseless sum of reverberant renders.
    """
    sources = list(sources)
    rirs = list(rirs)
    k = len(sources)
    if k < 1 or len(rirs) != k:
        raise InvalidArgument("need one RIR per source and at least one source")
    fs = sources[0].sample_rate
    length = sources[0].samples.size
    for s, r in zip(sources, rirs):
        if s.sample_rate != fs or r.sample_rate != fs:
            raise InvalidArgument("sample rates differ")
        if s.samples.size != length:
            raise InvalidArgument("sources must share length")

    early, late = [], []
    for i, (s, r) in enumerate(zip(sources, rirs)):
        e_taps, l_taps = split_rir(r)
        e = render(s, e_taps)
        lt = render(s, l_taps)
        if power(e + lt) == 0.0:
            raise DegenerateSource(f"speaker {i} renders to silence")
        early.append(e)
        late.append(lt)

    ref_power = power(early[0] + late[0])
    gains = [1.0]
    for i in range(1, k):
        p = power(early[i] + late[i])
        gains.append(math.sqrt(ref_power / (p * 10.0 ** (sir_db / 10.0))))
    # keep the levelled dry sources inside [-1, 1]
    peak = max(g * np.max(np.abs(s.samples)) for g, s in zip(gains, sources))
    norm = 1.0 / max(1.0, peak)
    gains = [g * norm for g in gains]

    early = [g * e for g, e in zip(gains, early)]
    late = [g * lt for g, lt in zip(gains, late)]
    reverberant = [e + lt for e, lt in zip(early, late)]
    scaled_sources = [
        SourceSignal(g * s.samples, fs, s.speaker_id) for g, s in zip(gains, sources)
    ]

    rng = np.random.default_rng(seed)
    if math.isinf(snr_db) and snr_db > 0:
        noise = np.zeros(length)
    else:
        noise = rng.standard_normal(length)
        target = power(np.sum(reverberant, axis=0)) / 10.0 ** (snr_db / 10.0)
        noise *= math.sqrt(target / power(noise))

    mixture = np.sum(early, axis=0) + np.sum(late, axis=0) + noise
    return MixtureScene(
        sources=scaled_sources,
        rirs=rirs,
        early=[_frozen(e) for e in early],
        late=[_frozen(lt) for lt in late],
        reverberant=[_frozen(r) for r in reverberant],
        noise=_frozen(noise),
        mixture=_frozen(mixture),
        sir_db=float(sir_db) if k > 1 else float("nan"),
        snr_db=float(snr_db),
        seed=int(seed),
        gains=tuple(gains),
    )


def realized_sir_db(scene, k):
    return 10.0 * math.log10(power(scene.reverberant[0]) / power(scene.reverberant[k]))


def realized_snr_db(scene):
    return 10.0 * math.log10(power(np.sum(scene.reverberant, axis=0)) / power(scene.noise))


@dataclass(frozen=True)
class SceneParams:
    seed: int
    t60: float
    sir_db: float
    snr_db: float
    speaker_seeds: tuple


def derive_seed(*keys):
    """64-bit child seed from integer keys (numpy SeedSequence hashing)."""
    return int(np.random.SeedSequence([int(k) for k in keys]).generate_state(1, np.uint64)[0])


def sample_scene_params(master_seed, index):
    seed = derive_seed(master_seed, index)
    rng = np.random.default_rng(seed)
    t60 = float(rng.uniform(*T60_RANGE))
    sir = float(rng.uniform(*SIR_RANGE))
    snr = float(rng.uniform(*SNR_RANGE))
    speaker_seeds = tuple(derive_seed(seed, k) for k in range(MAX_SPEAKERS))
    return SceneParams(seed, t60, sir, snr, speaker_seeds)


def synth_source(duration_s, sample_rate, seed, speaker_id=""):
    """Speech-like placeholder: resonant AR(2) noise bursts separated by silences.

    Each speaker gets its own resonance; every burst jitters it a little so the
    spectra overlap across speakers without being identical.
    """
    rng = np.random.default_rng(seed)
    n = int(round(duration_s * sample_rate))
    out = np.zeros(n)
    base_freq = rng.uniform(250.0, 0.35 * sample_rate)
    radius = rng.uniform(0.9, 0.97)
    pos = int(rng.integers(0, int(0.1 * sample_rate) + 1))
    while pos < n:
        burst = int(rng.uniform(0.1, 0.4) * sample_rate)
        freq = base_freq * rng.uniform(0.85, 1.15)
        theta = 2.0 * math.pi * freq / sample_rate
        a = [1.0, -2.0 * radius * math.cos(theta), radius * radius]
        seg = signal.lfilter([1.0], a, rng.standard_normal(burst))
        seg *= np.hanning(burst) * rng.uniform(0.3, 1.0)
        end = min(n, pos + burst)
        out[pos:end] = seg[: end - pos]
        pos = end + int(rng.uniform(0.05, 0.2) * sample_rate)
    peak = np.max(np.abs(out))
    if peak == 0:
        out[0] = 1.0
        peak = 1.0
    return SourceSignal(0.9 * out / peak, int(sample_rate), speaker_id)


def build_scene(params, num_speakers, duration_s, sample_rate, sources=None):
    """Synthesize a full scene from :class:`SceneParams`."""
    if not 1 <= num_speakers <= MAX_SPEAKERS:
        raise InvalidArgument(f"num_speakers must be in [1, {MAX_SPEAKERS}]")
    if sources is None:
        sources = [
            synth_source(duration_s, sample_rate, params.speaker_seeds[k], f"spk{k}")
            for k in range(num_speakers)
        ]
    rirs = []
    for k in range(num_speakers):
        rng = np.random.default_rng(params.speaker_seeds[k] ^ 0x5EED)
        delay = int(rng.integers(0, MAX_DIRECT_DELAY + 1))
        rirs.append(synth_rir(params.t60, params.t60 + 0.05, sample_rate, delay, int(rng.integers(2**63))))
    return mix_scene(sources, rirs, params.sir_db, params.snr_db, params.seed)
