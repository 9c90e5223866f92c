"""Training loop: random segments, speaker-count batches, Adam, LR halving."""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field

import numpy as np

from ..autodiff import adam_step, backward, load_checkpoint, save_checkpoint, zero_grad
from ..autodiff.checkpoint import atomic_write_bytes
from ..errors import EmptySpeaker, InvalidArgument, NumericalFailure
from ..nets import ModelConfig, build_model
from ..nets.models import ConvTasNet
from ..scene import derive_seed
from .dataset import load_manifest, load_scene, select
from .tables import write_rows

LOG_FIELDS = ("epoch", "train_loss", "valid_loss", "lr")


@dataclass
class LrSchedule:
    """Halve the rate after ``patience`` consecutive epochs without a new best validation loss.

    ``best`` starts at the validation loss of the untrained model.
    """

    lr: float
    patience: int
    best: float = math.inf
    since_best: int = 0

    def update(self, valid_loss):
        """Record one epoch's validation loss; returns True if it is a new best."""
        if valid_loss < self.best:
            self.best = valid_loss
            self.since_best = 0
            return True
        self.since_best += 1
        if self.since_best >= self.patience:
            self.lr *= 0.5
            self.since_best = 0
        return False


@dataclass
class TrainResult:
    log: list = field(default_factory=list)
    steps: int = 0
    best_valid: float = math.inf
    skipped: list = field(default_factory=list)


def random_segment(rng, scene, length):
    """Same random contiguous window of the mixture and every target."""
    n = scene.mixture.size
    if n <= length:
        return scene.mixture, scene.early
    start = int(rng.integers(0, n - length + 1))
    return scene.mixture[start:start + length], [d[start:start + length] for d in scene.early]


def make_batches(scenes, batch_size, rng):
    """Shuffle, group by speaker count, cut into batches and shuffle the batch order."""
    order = rng.permutation(len(scenes))
    groups = {}
    for i in order:
        groups.setdefault(scenes[i].num_speakers, []).append(scenes[i])
    batches = []
    for k in sorted(groups):
        members = groups[k]
        batches += [members[i:i + batch_size] for i in range(0, len(members), batch_size)]
    return [batches[i] for i in rng.permutation(len(batches))]


def checkpoint_config(model, weights, extra=None):
    return {"model": model.cfg.to_dict(), "loss_weights": vars(weights) if weights else None,
            **(extra or {})}


def load_model(path):
    config, tensors = load_checkpoint(path)
    model = build_model(ModelConfig.from_dict(config["model"]))
    model.load_state_dict(tensors)
    return model, config


def _usable(model, scene):
    return not isinstance(model, ConvTasNet) or scene.num_speakers == model.K


def _dump_failure(out_path, payload):
    atomic_write_bytes(out_path + ".failure.json", json.dumps(payload, indent=1, sort_keys=True).encode())


def validation_loss(model, scenes, weights):
    losses = []
    for s in scenes:
        try:
            _, diag = model.loss(s.mixture, s.early, weights)
        except (EmptySpeaker, InvalidArgument):
            continue
        losses.append(diag["loss"])
    return float(np.mean(losses)) if losses else math.nan


def train(exp, data_dir, out_path, log_path=None, progress=None):
    """Train ``exp.model`` on the dataset in ``data_dir``; the best-validation weights go to ``out_path``."""
    tcfg = exp.training
    weights = exp.loss_weights
    manifest = load_manifest(data_dir)
    model = build_model(exp.model)
    train_set = [load_scene(data_dir, r) for r in select(manifest, "train")]
    valid_set = [load_scene(data_dir, r) for r in select(manifest, "valid")]
    train_set = [s for s in train_set if _usable(model, s)]
    valid_set = [s for s in valid_set if _usable(model, s)] or train_set
    if not train_set:
        raise InvalidArgument("no usable training scenes")
    seg_len = int(round(tcfg.segment_s * exp.dataset.sample_rate))
    params = model.parameters()
    log_path = log_path or os.path.splitext(out_path)[0] + "_log.csv"
    result = TrainResult()
    ck_extra = {"experiment": exp.to_dict()}

    schedule = LrSchedule(tcfg.lr, tcfg.patience_epochs)
    schedule.update(validation_loss(model, valid_set, weights))
    result.best_valid = schedule.best
    save_checkpoint(out_path, model.state_dict(), checkpoint_config(model, weights, ck_extra))

    for epoch in range(1, tcfg.max_epochs + 1):
        rng = np.random.default_rng(derive_seed(tcfg.seed, epoch))
        lr = schedule.lr
        epoch_losses = []
        for batch in make_batches(train_set, tcfg.batch_size, rng):
            zero_grad(params)
            used = 0
            for s in batch:
                mixture, early = random_segment(rng, s, seg_len)
                try:
                    loss, diag = model.loss(mixture, early, weights)
                except (EmptySpeaker, InvalidArgument) as exc:
                    # a segment where one speaker is silent carries no target
                    result.skipped.append((epoch, s.scene_id, str(exc)))
                    continue
                if not np.isfinite(diag["loss"]):
                    _dump_failure(out_path, {"epoch": epoch, "step": result.steps, "scene_id": s.scene_id,
                                             "diagnostics": {k: repr(v) for k, v in diag.items()}})
                    raise NumericalFailure(f"non-finite loss on scene {s.scene_id} (epoch {epoch})")
                backward(loss * (1.0 / len(batch)))
                epoch_losses.append(diag["loss"])
                used += 1
            if used:
                adam_step(params, lr)
                result.steps += 1
            if tcfg.max_steps is not None and result.steps >= tcfg.max_steps:
                break
        train_loss = float(np.mean(epoch_losses)) if epoch_losses else math.nan
        valid_loss = validation_loss(model, valid_set, weights)
        if schedule.update(valid_loss):
            result.best_valid = valid_loss
            save_checkpoint(out_path, model.state_dict(), checkpoint_config(model, weights, ck_extra))
        row = {"epoch": epoch, "train_loss": train_loss, "valid_loss": valid_loss, "lr": lr}
        result.log.append(row)
        write_log(log_path, result.log)
        if progress:
            progress(row)
        if tcfg.max_steps is not None and result.steps >= tcfg.max_steps:
            break
    return result


def write_log(path, rows):
    write_rows(path, rows, LOG_FIELDS)
