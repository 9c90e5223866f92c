"""Time-domain deep attractor network laboratory.

Synthetic reverberant scenes, STFT/learned-kernel transforms, oracle masks and
metrics, a small reverse-mode autodiff engine, and DAN / Conv-TasNet / TD-DAN
models trained to map reverberant mixtures onto early reflections.
"""

__version__ = "0.1.0"
