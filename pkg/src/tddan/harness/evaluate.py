"""Per-scene evaluation of trained models and oracle-mask systems."""

from __future__ import annotations

import math

import numpy as np

from .. import metrics
from ..errors import EmptySpeaker, InvalidArgument, UnsupportedCondition
from ..nets.models import DAN, TDDAN, ConvTasNet, unit_rms_scale
from .dataset import load_manifest, load_scene, select
from .targets import ORACLE_SYSTEMS, oracle_estimates
from .tables import write_rows

METRICS_FIELDS = (
    "scene_id", "num_speakers", "system", "attractor_mode", "si_sdr_db", "sdr_db",
    "loss", "recon", "concentration", "discrimination",
)
SUMMARY_FIELDS = ("system", "attractor_mode", "num_speakers", "scenes", "si_sdr_db", "sdr_db")
ATTRACTOR_MODES = ("oracle", "kmeans")


def system_name(model):
    if isinstance(model, ConvTasNet):
        return "tasnet"
    if isinstance(model, DAN):
        return "dan-lps"
    return f"tddan-{model.cfg.encoder}"


def score_estimates(estimates, scene, filter_len):
    """Align estimates to the early targets by SI-SDR, then score SDR against the clean sources."""
    perm, si = metrics.eval_align(estimates, scene.early)
    sdr = [metrics.sdr_projective(estimates[p], clean, filter_len) for p, clean in zip(perm, scene.source)]
    return float(np.mean(si)), float(np.mean(sdr))


def _row(scene, system, mode, si, sdr, diag=None):
    diag = diag or {}
    return {
        "scene_id": scene.scene_id, "num_speakers": scene.num_speakers, "system": system,
        "attractor_mode": mode, "si_sdr_db": si, "sdr_db": sdr,
        **{k: float(diag.get(k, math.nan)) for k in ("loss", "recon", "concentration", "discrimination")},
    }


def evaluate_model_scene(model, scene, modes, filter_len=512, kmeans_seed=0, weights=None):
    """Metrics rows for one scene; every attractor mode reuses a single forward pass."""
    if isinstance(model, ConvTasNet):
        if scene.num_speakers != model.K:
            raise UnsupportedCondition(
                f"Conv-TasNet was built for {model.K} speakers; {scene.scene_id} has {scene.num_speakers}")
        _, diag = model.loss(scene.mixture, scene.early)
        est = model.separate(scene.mixture, scene.num_speakers)
        return [_row(scene, system_name(model), "none", *score_estimates(est, scene, filter_len), diag)]

    try:
        _, diag = model.loss(scene.mixture, scene.early, weights)
    except EmptySpeaker:
        diag = {}
    scale = unit_rms_scale(scene.mixture)
    x = scale * scene.mixture
    if isinstance(model, TDDAN):
        fwd = model.forward(x)
        run = lambda mode: model.separate(scene.mixture, scene.num_speakers, mode, scene.early,
                                          kmeans_seed, fwd=fwd)
    else:
        ses = model.ses(x)
        run = lambda mode: model.separate(scene.mixture, scene.num_speakers, mode, scene.early,
                                          kmeans_seed, ses=ses)
    rows = []
    for mode in modes:
        est = run(mode)
        rows.append(_row(scene, system_name(model), mode, *score_estimates(est, scene, filter_len), diag))
    return rows


def evaluate_oracle_scene(scene, systems=ORACLE_SYSTEMS, filter_len=512):
    rows = []
    for system in systems:
        est = oracle_estimates(system, scene.mixture, scene.early, scene.reverberant, scene.noise)
        rows.append(_row(scene, f"oracle-{system}", "none", *score_estimates(est, scene, filter_len)))
    return rows


def summarize(rows):
    groups = {}
    for r in rows:
        groups.setdefault((r["system"], r["attractor_mode"], r["num_speakers"]), []).append(r)
    out = []
    for (system, mode, k), members in sorted(groups.items()):
        out.append({
            "system": system, "attractor_mode": mode, "num_speakers": k, "scenes": len(members),
            "si_sdr_db": float(np.mean([m["si_sdr_db"] for m in members])),
            "sdr_db": float(np.mean([m["sdr_db"] for m in members])),
        })
    return out


def evaluate(data_dir, out_csv, model=None, modes=("oracle",), split="test", oracle_systems=(),
             filter_len=512, kmeans_seed=0, weights=None, summary_csv=None):
    """Evaluate ``model`` (and/or oracle-mask systems) on one split and write the metrics CSVs."""
    for mode in modes:
        if mode not in ATTRACTOR_MODES:
            raise InvalidArgument(f"attractor mode must be one of {ATTRACTOR_MODES}")
    manifest = load_manifest(data_dir)
    rows = []
    for record in select(manifest, split):
        scene = load_scene(data_dir, record)
        if model is not None:
            rows += evaluate_model_scene(model, scene, modes, filter_len, kmeans_seed, weights)
        rows += evaluate_oracle_scene(scene, oracle_systems, filter_len)
    write_rows(out_csv, rows, METRICS_FIELDS)
    summary = summarize(rows)
    if summary_csv:
        write_rows(summary_csv, summary, SUMMARY_FIELDS)
    return rows, summary
