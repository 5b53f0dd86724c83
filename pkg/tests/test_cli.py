"""End-to-end CLI runs plus config-file and exit-code behavior."""

import json

import numpy as np
import pytest

from jamlab.cli import (
    EXIT_ACCEPT,
    EXIT_CONFIG,
    EXIT_IO,
    EXIT_OK,
    RunConfig,
    main,
)
from jamlab.cnn import load_checkpoint
from jamlab.dataset import DatasetManifest


@pytest.fixture(scope="module")
def cli_run(tmp_path_factory):
    """One desk-scale CLI pipeline: generate -> train(1 epoch) -> eval."""
    root = tmp_path_factory.mktemp("cli")
    data_dir = root / "data"
    model_dir = root / "models"
    report_dir = root / "reports"
    rc = main(["generate", "--group", "A", "--id", "1", "--scale", "1000",
               "--seed", "3", "--out", str(data_dir)])
    assert rc == EXIT_OK
    manifest_path = data_dir / "A1-scale1000.manifest.json"
    rc = main(["train", "--data", str(manifest_path), "--out", str(model_dir),
               "--epochs", "1", "--seed", "1"])
    assert rc == EXIT_OK
    ckpt = model_dir / "A1-scale1000.ckpt"
    rc = main(["eval", "--checkpoint", str(ckpt), "--data", str(manifest_path),
               "--out", str(report_dir)])
    assert rc == EXIT_OK
    return root, manifest_path, ckpt, report_dir


def test_generate_outputs(cli_run):
    root, manifest_path, _, _ = cli_run
    manifest = DatasetManifest.load(manifest_path)
    assert len(manifest.records) == 200  # 10 per cell floor at this scale
    assert (manifest_path.parent / manifest.tensor_file).exists()


def test_train_outputs(cli_run):
    root, _, ckpt, _ = cli_run
    model, opt_state, extra = load_checkpoint(ckpt)
    assert model.input_shape == (150, 256, 4)
    assert extra["scenario"] == "A1"
    assert extra["split_policy"] == "sixty_forty"
    history = json.loads((ckpt.parent / "A1-scale1000.history.json").read_text())
    assert len(history["epochs"]) == 1


def test_eval_report_contents(cli_run):
    _, _, _, report_dir = cli_run
    report = json.loads((report_dir / "A1-scale1000.report.json").read_text())
    assert report["n"] == 80  # 40% of 200
    assert 0.0 <= report["accuracy"] <= 1.0
    assert report["scenario"] == "A1"
    assert sum(v["n"] for v in report["per_cell"].values()) == 80
    tsv = (report_dir / "A1-scale1000.report.tsv").read_text().splitlines()
    assert tsv[0] == "section\tkey\tn\taccuracy"
    assert any(line.startswith("aggregate") for line in tsv)


def test_eval_rejects_wrong_dataset(cli_run, tmp_path):
    root, manifest_path, ckpt, _ = cli_run
    other_data = tmp_path / "other"
    rc = main(["generate", "--group", "A", "--id", "1", "--scale", "1000",
               "--seed", "4", "--out", str(other_data)])
    assert rc == EXIT_OK
    rc = main(["eval", "--checkpoint", str(ckpt),
               "--data", str(other_data / "A1-scale1000.manifest.json"),
               "--out", str(tmp_path / "r")])
    assert rc == EXIT_CONFIG


def test_epochs_zero_checkpoint_equals_init(cli_run, tmp_path):
    from jamlab.cnn import DetectorModel
    from jamlab.cnn.model import PARAM_KEYS

    _, manifest_path, _, _ = cli_run
    out = tmp_path / "zero"
    rc = main(["train", "--data", str(manifest_path), "--out", str(out),
               "--epochs", "0", "--seed", "6"])
    assert rc == EXIT_OK
    model, _, _ = load_checkpoint(out / "A1-scale1000.ckpt")
    fresh = DetectorModel((150, 256, 4), seed=6)
    for k in PARAM_KEYS:
        assert np.array_equal(model.params[k], fresh.params[k])


def test_report_summary_and_missing_rows(cli_run, tmp_path):
    _, _, _, report_dir = cli_run
    out = tmp_path / "summary"
    rc = main(["report", "--runs", str(report_dir), "--out", str(out),
               "--min-accuracy", "0.0"])
    # other 11 scenarios are absent, so the merge flags an acceptance failure
    assert rc == EXIT_ACCEPT
    summary = json.loads((out / "summary.json").read_text())
    assert len(summary["rows"]) == 12
    statuses = {row["scenario"]: row["status"] for row in summary["rows"]}
    assert statuses["A1"] == "pass"
    assert statuses["D1"] == "absent"
    tsv = (out / "summary.tsv").read_text().splitlines()
    assert len(tsv) == 13


def test_report_plot_dump(cli_run, tmp_path):
    _, manifest_path, _, report_dir = cli_run
    out = tmp_path / "plotted"
    rc = main(["report", "--runs", str(report_dir), "--out", str(out),
               "--min-accuracy", "0.0", "--plot", str(manifest_path),
               "--plot-index", "0", "--plot-out", "spectro.png"])
    assert rc == EXIT_ACCEPT  # still flags the 11 absent scenarios
    assert (out / "spectro.png").stat().st_size > 1000


def test_run_config_round_trip():
    cfg = RunConfig(command="train", options={
        "data": "runs/data/C1.manifest.json",
        "epochs": 50,
        "lr": 0.01,
        "split_policy": "fifty_fifty",
        "verbose": True,
        "stem": None,
    })
    again = RunConfig.from_text(cfg.to_text())
    assert again == cfg


def test_config_file_overrides_flags(cli_run, tmp_path):
    _, manifest_path, _, _ = cli_run
    cfg_file = tmp_path / "train.cfg"
    out = tmp_path / "cfgout"
    cfg_file.write_text(
        f"command = train\nepochs = 0\nseed = 6\nout = {out}\n"
    )
    rc = main(["train", "--data", str(manifest_path), "--out", "ignored",
               "--epochs", "7", "--config", str(cfg_file)])
    assert rc == EXIT_OK
    _, _, extra = load_checkpoint(out / "A1-scale1000.ckpt")
    assert extra["epochs"] == 0  # config file wins over --epochs 7


def test_config_file_command_mismatch(tmp_path):
    cfg_file = tmp_path / "bad.cfg"
    cfg_file.write_text("command = generate\n")
    rc = main(["train", "--data", "x", "--config", str(cfg_file)])
    assert rc == EXIT_CONFIG


def test_config_file_unknown_key(tmp_path):
    cfg_file = tmp_path / "bad.cfg"
    cfg_file.write_text("command = generate\nbogus = 1\n")
    rc = main(["generate", "--group", "A", "--config", str(cfg_file)])
    assert rc == EXIT_CONFIG


def test_missing_data_is_io_error(tmp_path):
    rc = main(["train", "--data", str(tmp_path / "nope.manifest.json"),
               "--out", str(tmp_path)])
    assert rc == EXIT_IO


def test_out_dir_env_override(cli_run, tmp_path, monkeypatch):
    _, manifest_path, _, _ = cli_run
    target = tmp_path / "env_target"
    monkeypatch.setenv("JAMLAB_OUT_DIR", str(target))
    rc = main(["train", "--data", str(manifest_path), "--out", "ignored",
               "--epochs", "0", "--seed", "2"])
    assert rc == EXIT_OK
    assert (target / "A1-scale1000.ckpt").exists()
