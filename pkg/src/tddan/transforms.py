"""Waveform <-> representation maps.

All framers share one padding rule: ``N - hop`` zeros on the left, and on the
right ``N - hop`` zeros plus whatever completes the last frame, so every input
sample is covered by the same number of full frames.  ``length`` travels with
each representation so the synthesis side can trim back exactly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import InvalidArgument, InvalidConfiguration

LPS_FLOOR = 1e-12


def hann(n):
    """Periodic Hann window."""
    return 0.5 - 0.5 * np.cos(2.0 * np.pi * np.arange(n) / n)


def sqrt_hann(n):
    return np.sqrt(hann(n))


def rectangular(n):
    return np.ones(n)


WINDOWS = {"hann": hann, "sqrt_hann": sqrt_hann, "rect": rectangular}


def get_window(name, n):
    try:
        return WINDOWS[name](n)
    except KeyError:
        raise InvalidArgument(f"unknown window {name!r}") from None


def frame_padding(length, n, hop):
    """Return ``(left, right, num_frames)`` for a signal of ``length`` samples."""
    if hop < 1 or hop > n:
        raise InvalidArgument(f"hop must be in [1, {n}], got {hop}")
    left = n - hop
    total = length + 2 * (n - hop)
    extra = (-(total - n)) % hop
    right = n - hop + extra
    frames = (total + extra - n) // hop + 1
    return left, right, frames


def frames_of(x, n, hop):
    x = np.asarray(x, dtype=np.float64)
    left, right, t = frame_padding(x.size, n, hop)
    xp = np.pad(x, (left, right))
    return sliding_window_view(xp, n)[::hop][:t]


def overlap_add(frames, hop, length, n):
    """Sum ``frames`` (T x N) at stride ``hop`` and trim the framing pad."""
    t = frames.shape[0]
    chunks = -(-n // hop)
    blocks = np.zeros((t + chunks, hop))
    for i in range(chunks):
        seg = frames[:, i * hop:(i + 1) * hop]
        blocks[i:i + t, : seg.shape[1]] += seg
    left = n - hop
    return blocks.reshape(-1)[left:left + length]


@dataclass(frozen=True)
class ComplexSpectrogram:
    data: np.ndarray
    window_size: int
    hop: int
    window: np.ndarray
    length: int

    @property
    def num_frames(self):
        return self.data.shape[0]


@dataclass(frozen=True)
class Rep:
    data: np.ndarray
    hop: int
    kernel_size: int
    length: int


@dataclass(frozen=True)
class AnalysisKernel:
    weights: np.ndarray
    hop: int
    kind: str = "free"

    @property
    def channels(self):
        return self.weights.shape[0]

    @property
    def kernel_size(self):
        return self.weights.shape[1]


def stft(waveform, window_size, hop, window=None):
    n = int(window_size)
    if n % 2:
        raise InvalidArgument("window_size must be even")
    if window is None:
        window = hann(n)
    window = np.asarray(window, dtype=np.float64)
    if window.size != n:
        raise InvalidArgument("window length must equal window_size")
    x = np.asarray(waveform, dtype=np.float64)
    frames = frames_of(x, n, hop)
    data = np.fft.rfft(frames * window, axis=1)
    return ComplexSpectrogram(data, n, int(hop), window, x.size)


def istft(spec):
    """Weighted overlap-add inverse using the analysis window for synthesis.

    Every output sample is divided by the overlap-added squared window, so
    reconstruction is exact whenever that sum is non-zero across the signal.
    """
    n, hop, w = spec.window_size, spec.hop, spec.window
    frames = np.fft.irfft(spec.data, n=n, axis=1) * w
    t = frames.shape[0]
    norm = overlap_add(np.tile(w * w, (t, 1)), hop, spec.length, n)
    if spec.length and norm.min() <= 1e-10 * max(norm.max(), 1e-300):
        raise InvalidConfiguration("window/hop pair does not overlap-add to a positive gain")
    return overlap_add(frames, hop, spec.length, n) / norm


def lps(spec, floor=LPS_FLOOR):
    if floor <= 0:
        raise InvalidArgument("floor must be positive")
    data = spec.data if isinstance(spec, ComplexSpectrogram) else np.asarray(spec)
    return np.log(np.abs(data) ** 2 + floor)


def stacked_stft_basis(n):
    """Unwindowed cos/sin rows: cos for f = 0..N/2, then sin for f = 1..N/2-1."""
    f_cos = np.arange(n // 2 + 1)[:, None]
    f_sin = np.arange(1, n // 2)[:, None]
    idx = np.arange(n)[None, :]
    return np.vstack([np.cos(2 * np.pi * idx * f_cos / n), np.sin(2 * np.pi * idx * f_sin / n)])


def build_stacked_stft_kernel(n, window=None, hop=None):
    n = int(n)
    if n % 2:
        raise InvalidArgument("kernel size must be even")
    window = rectangular(n) if window is None else np.asarray(window, dtype=np.float64)
    if window.size != n:
        raise InvalidArgument("window length must equal kernel size")
    weights = stacked_stft_basis(n) * window[None, :]
    return AnalysisKernel(weights, int(hop or n // 2), "stacked-stft")


def stacked_stft_synthesis_kernel(n, window, hop):
    """Dual synthesis kernel for a windowed stacked-STFT analysis kernel.

    Requires the squared window to overlap-add to a constant at ``hop``.
    """
    window = np.asarray(window, dtype=np.float64)
    ola = np.zeros(hop)
    for start in range(0, n, hop):
        seg = (window * window)[start:start + hop]
        ola[: seg.size] += seg
    if np.ptp(ola) > 1e-10 * ola.max():
        raise InvalidConfiguration("squared window is not constant-overlap-add at this hop")
    inv = np.linalg.inv(stacked_stft_basis(n))
    return AnalysisKernel((window[:, None] * inv / ola[0]).T, int(hop), "stacked-stft")


def encode(waveform, kernel):
    x = np.asarray(waveform, dtype=np.float64)
    if x.size < kernel.kernel_size:
        raise InvalidArgument("waveform shorter than the kernel")
    frames = frames_of(x, kernel.kernel_size, kernel.hop)
    return Rep(frames @ kernel.weights.T, kernel.hop, kernel.kernel_size, x.size)


def decode(rep, kernel):
    if rep.hop != kernel.hop or rep.kernel_size != kernel.kernel_size:
        raise InvalidArgument("representation framing does not match the kernel")
    frames = rep.data @ kernel.weights
    return overlap_add(frames, kernel.hop, rep.length, kernel.kernel_size)


def magnitude(rep):
    data = rep.data if isinstance(rep, Rep) else np.asarray(rep)
    return np.abs(data)
