"""Dataset generation, training, evaluation and file I/O."""

from .config import ExperimentConfig, load_config
from .dataset import generate_dataset, load_manifest, load_scene
from .evaluate import evaluate
from .train import LrSchedule, load_model, train
from .wav import read_wav, write_wav

__all__ = [
    "ExperimentConfig", "LrSchedule", "evaluate", "generate_dataset", "load_config", "load_manifest",
    "load_model", "load_scene", "read_wav", "train", "write_wav",
]
