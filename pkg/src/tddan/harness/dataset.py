"""Synthetic dataset generation and manifest handling.

Layout of a dataset directory::

    manifest.json
    scenes/<scene_id>/mixture.wav
    scenes/<scene_id>/noise.wav
    scenes/<scene_id>/{source,early,reverberant}_<k>.wav

Waveforms are stored as 32-bit float WAV.  The manifest lists, per scene, its
split, speaker count, acoustic parameters and relative WAV paths.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
from dataclasses import dataclass

import numpy as np

from .. import scene as sc
from ..autodiff.checkpoint import atomic_write_bytes
from ..errors import InvalidArgument
from .wav import read_wav, write_wav

MANIFEST = "manifest.json"
SPLITS = ("train", "valid", "test")


def scene_id(index):
    return f"scene{index:05d}"


def split_of(sid):
    """80/10/10 split from the first bytes of sha256(scene_id)."""
    bucket = int.from_bytes(hashlib.sha256(sid.encode()).digest()[:8], "big") % 100
    return "train" if bucket < 80 else "valid" if bucket < 90 else "test"


def allocate_speaker_counts(num_scenes, proportions, seed):
    """Per-scene speaker counts matching ``proportions`` up to rounding, in shuffled order.

    Quotas use the largest-remainder rule so every count is within one scene
    of its exact share.
    """
    ks = sorted(proportions)
    total = sum(proportions[k] for k in ks)
    exact = [num_scenes * proportions[k] / total for k in ks]
    quota = [math.floor(e) for e in exact]
    by_remainder = sorted(range(len(ks)), key=lambda i: (-(exact[i] - quota[i]), ks[i]))
    for i in by_remainder[: num_scenes - sum(quota)]:
        quota[i] += 1
    counts = np.repeat(ks, quota)
    np.random.default_rng(sc.derive_seed(seed, 0xC0)).shuffle(counts)
    return [int(k) for k in counts]


def _rel(sid, name):
    return f"scenes/{sid}/{name}.wav"


def generate_dataset(cfg, out_dir):
    """Synthesize every scene of ``cfg`` (a DatasetConfig) into ``out_dir``; returns the manifest."""
    os.makedirs(out_dir, exist_ok=True)
    counts = allocate_speaker_counts(cfg.num_scenes, cfg.speaker_counts, cfg.master_seed)
    records = []
    for index, k in enumerate(counts):
        sid = scene_id(index)
        params = sc.sample_scene_params(cfg.master_seed, index)
        mix = sc.build_scene(params, k, cfg.duration_s, cfg.sample_rate)
        os.makedirs(os.path.join(out_dir, "scenes", sid), exist_ok=True)
        files = {"mixture": _rel(sid, "mixture"), "noise": _rel(sid, "noise"),
                 "source": [], "early": [], "reverberant": []}
        write_wav(os.path.join(out_dir, files["mixture"]), mix.mixture, cfg.sample_rate)
        write_wav(os.path.join(out_dir, files["noise"]), mix.noise, cfg.sample_rate)
        for j in range(k):
            for kind, sig in (("source", mix.sources[j].samples), ("early", mix.early[j]),
                              ("reverberant", mix.reverberant[j])):
                path = _rel(sid, f"{kind}_{j}")
                write_wav(os.path.join(out_dir, path), sig, cfg.sample_rate)
                files[kind].append(path)
        records.append({
            "scene_id": sid,
            "split": split_of(sid),
            "num_speakers": k,
            "seed": params.seed,
            "t60": params.t60,
            "sir_db": params.sir_db if k > 1 else None,
            "snr_db": params.snr_db,
            "sample_rate": cfg.sample_rate,
            "num_samples": len(mix),
            **files,
        })
    manifest = {
        "dataset": {
            "num_scenes": cfg.num_scenes,
            "speaker_counts": {str(k): v for k, v in sorted(cfg.speaker_counts.items())},
            "sample_rate": cfg.sample_rate,
            "duration_s": cfg.duration_s,
            "master_seed": cfg.master_seed,
        },
        "scenes": records,
    }
    blob = json.dumps(manifest, indent=1, sort_keys=True).encode() + b"\n"
    atomic_write_bytes(os.path.join(out_dir, MANIFEST), blob)
    return manifest


def load_manifest(data_dir):
    path = os.path.join(data_dir, MANIFEST)
    if not os.path.exists(path):
        raise InvalidArgument(f"no {MANIFEST} in {data_dir}")
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


@dataclass
class SceneData:
    """Waveforms of one stored scene."""

    scene_id: str
    num_speakers: int
    sample_rate: int
    mixture: np.ndarray
    early: list
    reverberant: list
    source: list
    noise: np.ndarray


def load_scene(data_dir, record):
    def read(rel):
        x, fs = read_wav(os.path.join(data_dir, rel))
        if fs != record["sample_rate"]:
            raise InvalidArgument(f"{rel}: sample rate {fs} != {record['sample_rate']}")
        return x

    return SceneData(
        scene_id=record["scene_id"],
        num_speakers=record["num_speakers"],
        sample_rate=record["sample_rate"],
        mixture=read(record["mixture"]),
        early=[read(p) for p in record["early"]],
        reverberant=[read(p) for p in record["reverberant"]],
        source=[read(p) for p in record["source"]],
        noise=read(record["noise"]),
    )


def select(manifest, split=None):
    scenes = manifest["scenes"]
    if split is None or split == "all":
        return list(scenes)
    if split not in SPLITS:
        raise InvalidArgument(f"split must be one of {SPLITS} or 'all'")
    return [r for r in scenes if r["split"] == split]
