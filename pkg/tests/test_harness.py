import json
import math
import os

import numpy as np
import pytest

from tddan import metrics
from tddan.autodiff import Tensor
from tddan.cli import main
from tddan.errors import InvalidConfiguration, NumericalFailure, UnsupportedCondition
from tddan.harness import config as hc
from tddan.harness import dataset as ds
from tddan.harness.evaluate import METRICS_FIELDS, evaluate, evaluate_model_scene
from tddan.harness.tables import read_rows
from tddan.harness.targets import oracle_estimates
from tddan.harness.train import LrSchedule, load_model, make_batches, train
from tddan.nets import build_model
from tddan.nets.models import TDDAN

SMALL = {
    "dataset": {"num_scenes": 6, "speaker_counts": {"1": 1, "2": 2}, "duration_s": 0.3, "master_seed": 5},
    "model": {"kind": "tddan", "encoder": "stft", "D": 4, "E": 4,
              "tcn": {"B": 4, "H": 8, "P": 3, "X": 2, "R": 2}},
    "training": {"max_epochs": 2, "segment_s": 0.2, "batch_size": 2, "seed": 1},
}


@pytest.fixture(scope="module")
def small_data(tmp_path_factory):
    root = tmp_path_factory.mktemp("data")
    cfg = hc.ExperimentConfig.from_dict(SMALL)
    ds.generate_dataset(cfg.dataset, str(root))
    return cfg, str(root)


def test_config_defaults():
    cfg = hc.ExperimentConfig()
    t = cfg.training
    assert (t.lr, t.max_epochs, t.segment_s, t.batch_size, t.patience_epochs) == (1e-3, 50, 4.0, 16, 3)
    assert cfg.dataset.sample_rate == 8000 and cfg.dataset.duration_s == 2.0 and cfg.dataset.num_scenes == 200
    assert (cfg.model.tcn.B, cfg.model.tcn.H, cfg.model.tcn.X, cfg.model.tcn.R) == (16, 32, 4, 2)


def test_config_round_trip():
    cfg = hc.ExperimentConfig.from_dict(SMALL)
    assert hc.ExperimentConfig.from_dict(json.loads(hc.dump_config(cfg))) == cfg


@pytest.mark.parametrize("bad", [
    {"training": {"patience_epochs": 0}},
    {"training": {"segment_s": 0}},
    {"dataset": {"speaker_counts": {"7": 1}}},
    {"eval": {"attractor_mode": "spectral"}},
    {"model": {"kind": "rnn"}},
    {"bogus": {}},
    {"training": {"no_such_key": 1}},
])
def test_config_validation(bad):
    with pytest.raises(InvalidConfiguration):
        hc.ExperimentConfig.from_dict(bad)


def test_speaker_count_proportions():
    counts = ds.allocate_speaker_counts(1000, {1: 0.1, 2: 0.45, 3: 0.45}, seed=0)
    assert len(counts) == 1000
    for k, p in {1: 0.1, 2: 0.45, 3: 0.45}.items():
        assert abs(counts.count(k) / 1000 - p) <= 0.03
    assert counts != sorted(counts)


def test_splits_stable_and_near_80_10_10():
    splits = [ds.split_of(ds.scene_id(i)) for i in range(5000)]
    assert splits == [ds.split_of(ds.scene_id(i)) for i in range(5000)]
    for name, p in (("train", 0.8), ("valid", 0.1), ("test", 0.1)):
        assert abs(splits.count(name) / 5000 - p) < 0.02


def test_manifest_contents(small_data):
    cfg, root = small_data
    manifest = ds.load_manifest(root)
    assert len(manifest["scenes"]) == 6
    for r in manifest["scenes"]:
        k = r["num_speakers"]
        assert len(r["early"]) == len(r["source"]) == len(r["reverberant"]) == k
        assert (r["sir_db"] is None) == (k == 1)
        assert r["split"] == ds.split_of(r["scene_id"])
        for rel in r["early"] + [r["mixture"]]:
            assert os.path.exists(os.path.join(root, rel))
    assert sorted(r["num_speakers"] for r in manifest["scenes"]) == [1, 1, 2, 2, 2, 2]


def test_generation_is_byte_identical(small_data, tmp_path):
    cfg, root = small_data
    ds.generate_dataset(cfg.dataset, str(tmp_path))
    for name in ("manifest.json", "scenes/scene00003/mixture.wav", "scenes/scene00003/early_0.wav"):
        with open(os.path.join(root, name), "rb") as a, open(tmp_path / name, "rb") as b:
            assert a.read() == b.read()


def test_stored_scene_satisfies_mixing_identity(small_data):
    _, root = small_data
    rec = ds.load_manifest(root)["scenes"][0]
    s = ds.load_scene(root, rec)
    recon = np.sum(s.reverberant, axis=0) + s.noise
    # float32 storage: agreement to single-precision rounding
    assert np.max(np.abs(recon - s.mixture)) <= 1e-6 * np.max(np.abs(s.mixture))


def test_lr_schedule_trace():
    sched = LrSchedule(1e-3, 3)
    sched.update(10.0)
    trace = []
    for _ in range(7):
        trace.append(sched.lr)
        sched.update(11.0)
    assert trace == [1e-3, 1e-3, 1e-3, 5e-4, 5e-4, 5e-4, 2.5e-4]


def test_lr_schedule_resets_on_improvement():
    sched = LrSchedule(1e-3, 2)
    sched.update(10.0)
    assert not sched.update(11.0)
    assert sched.update(9.0)
    sched.update(9.5)
    assert sched.lr == 1e-3
    sched.update(9.5)
    assert sched.lr == 5e-4


def test_batches_group_speaker_counts():
    class S:
        def __init__(self, k):
            self.num_speakers = k
    scenes = [S(k) for k in [1, 2, 2, 3, 1, 2, 3, 3, 2]]
    batches = make_batches(scenes, 2, np.random.default_rng(0))
    assert sum(len(b) for b in batches) == len(scenes)
    for b in batches:
        assert len({s.num_speakers for s in b}) == 1


def test_training_is_deterministic(small_data, tmp_path):
    cfg, root = small_data
    a = train(cfg, root, str(tmp_path / "a.ck"))
    b = train(cfg, root, str(tmp_path / "b.ck"))
    assert abs(a.log[0]["train_loss"] - b.log[0]["train_loss"]) <= 1e-12
    assert [r["lr"] for r in a.log] == [1e-3, 1e-3]
    with open(tmp_path / "a.ck", "rb") as fa, open(tmp_path / "b.ck", "rb") as fb:
        assert fa.read() == fb.read()
    rows = read_rows(tmp_path / "a_log.csv")
    assert list(rows[0]) == ["epoch", "train_loss", "valid_loss", "lr"] and len(rows) == 2


def test_checkpoint_restores_model(small_data, tmp_path):
    cfg, root = small_data
    train(cfg, root, str(tmp_path / "m.ck"))
    model, config = load_model(str(tmp_path / "m.ck"))
    assert isinstance(model, TDDAN)
    assert config["experiment"]["model"]["tcn"]["B"] == 4
    assert config["loss_weights"]["alpha_c"] == 1.0


def test_nan_loss_aborts_with_scene_id(small_data, tmp_path, monkeypatch):
    cfg, root = small_data

    def bad_loss(self, mixture, early, weights=None):
        return Tensor(np.array(math.nan), requires_grad=True), {"loss": math.nan}

    monkeypatch.setattr(TDDAN, "loss", bad_loss)
    out = str(tmp_path / "x.ck")
    with pytest.raises(NumericalFailure, match="scene"):
        train(cfg, root, out)
    with open(out + ".failure.json") as fh:
        dump = json.load(fh)
    assert dump["scene_id"].startswith("scene")


def test_evaluate_rows_and_audit(small_data, tmp_path):
    cfg, root = small_data
    model = build_model(cfg.model)
    out = tmp_path / "metrics.csv"
    rows, summary = evaluate(root, str(out), model, ("oracle", "kmeans"), "all", ("irm-derevb",))
    stored = read_rows(out)
    assert tuple(stored[0]) == METRICS_FIELDS
    assert len(stored) == 6 * 3
    for r in stored:
        if r["system"] != "oracle-irm-derevb":
            continue
        rec = next(x for x in ds.load_manifest(root)["scenes"] if x["scene_id"] == r["scene_id"])
        s = ds.load_scene(root, rec)
        est = oracle_estimates("irm-derevb", s.mixture, s.early, s.reverberant, s.noise)
        _, scores = metrics.eval_align(est, s.early)
        assert float(r["si_sdr_db"]) == float(np.mean(scores))
    assert {(x["system"], x["attractor_mode"]) for x in summary} >= {("tddan-stft", "oracle"), ("tddan-stft", "kmeans")}


def test_single_speaker_modes_agree(small_data):
    cfg, root = small_data
    model = build_model(cfg.model)
    rec = next(r for r in ds.load_manifest(root)["scenes"] if r["num_speakers"] == 1)
    rows = evaluate_model_scene(model, ds.load_scene(root, rec), ("oracle", "kmeans"))
    # one cluster is the mean of the selected bins, which is the oracle attractor
    assert rows[0]["si_sdr_db"] == pytest.approx(rows[1]["si_sdr_db"], abs=1e-6)
    assert rows[0]["loss"] == rows[1]["loss"]


def test_tasnet_rejects_other_speaker_counts(small_data):
    cfg, root = small_data
    model = build_model(hc.ExperimentConfig.from_dict({**SMALL, "model": {**SMALL["model"], "kind": "tasnet"}}).model)
    rec = next(r for r in ds.load_manifest(root)["scenes"] if r["num_speakers"] == 1)
    with pytest.raises(UnsupportedCondition):
        evaluate_model_scene(model, ds.load_scene(root, rec), ("oracle",))


def test_cli_reports_invalid_config(tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"training": {"patience_epochs": 0}}))
    assert main(["generate", "--config", str(path), "--out", str(tmp_path / "d")]) == 2
    assert "patience_epochs" in capsys.readouterr().err


def test_cli_compare_targets(small_data, tmp_path, capsys):
    _, root = small_data
    out = tmp_path / "targets.csv"
    assert main(["compare-targets", "--data", root, "--out", str(out)]) == 0
    rows = {r["target"]: r for r in read_rows(out)}
    assert float(rows["source"]["sdr_db"]) >= 60
    assert float(rows["early"]["sdr_db"]) >= 40
    assert float(rows["reverberant"]["sdr_db"]) <= float(rows["early"]["sdr_db"]) - 15


def test_cli_grad_check(capsys):
    assert main(["grad-check"]) == 0
    assert "0 failure(s)" in capsys.readouterr().out
