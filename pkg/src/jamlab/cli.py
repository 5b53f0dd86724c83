"""Command-line harness: generate datasets, train, evaluate, merge reports.

Verbs:
  generate  build one scenario dataset (tensor file + manifest)
  train     train the detector on a dataset, write checkpoint + history
  eval      evaluate a checkpoint on its dataset's test split
  report    merge per-scenario reports into one summary

Every command accepts ``--config FILE`` pointing at a flat ``key = value``
text file whose entries override the command-line flags. The environment
variable JAMLAB_OUT_DIR overrides output directories (paths only; numeric
settings can never come from the environment).

Exit codes: 0 success, 2 configuration error, 3 I/O or file-format error,
4 acceptance failure (missing or under-threshold rows in ``report``).
"""

import argparse
import json
import os
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .cnn import (
    AdamHyper,
    DetectorModel,
    TrainConfig,
    evaluate_model,
    load_checkpoint,
    save_checkpoint,
    train_model,
)
from .dataset import (
    DatasetManifest,
    SplitPolicy,
    generate_dataset,
    open_samples,
    split,
    table_config,
)
from .errors import ConfigError, FormatError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_ACCEPT = 4

SCENARIOS = [f"{g}{i}" for g in "AB" for i in range(1, 6)] + ["C1", "D1"]


@dataclass
class RunConfig:
    """Flat command configuration, round-trippable through ``key = value`` text."""

    command: str
    options: dict

    def to_text(self) -> str:
        lines = [f"command = {self.command}"]
        for key in sorted(self.options):
            lines.append(f"{key} = {_encode(self.options[key])}")
        return "\n".join(lines) + "\n"

    @staticmethod
    def from_text(text: str) -> "RunConfig":
        command = None
        options = {}
        for raw in text.splitlines():
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ConfigError(f"bad config line: {raw!r}")
            key, value = (part.strip() for part in line.split("=", 1))
            if key == "command":
                command = value
            else:
                options[key] = _decode(value)
        if command is None:
            raise ConfigError("config file is missing the 'command' entry")
        return RunConfig(command=command, options=options)


def _encode(value) -> str:
    if value is None:
        return "null"
    if isinstance(value, bool):
        return "true" if value else "false"
    return str(value)


def _decode(value: str):
    if value == "null":
        return None
    if value in ("true", "false"):
        return value == "true"
    try:
        return int(value)
    except ValueError:
        pass
    try:
        return float(value)
    except ValueError:
        pass
    return value


def _apply_config_file(args: argparse.Namespace) -> None:
    """Values from --config override the parsed flags."""
    if not getattr(args, "config", None):
        return
    cfg = RunConfig.from_text(Path(args.config).read_text())
    if cfg.command != args.command:
        raise ConfigError(
            f"config file is for {cfg.command!r}, invoked command is {args.command!r}"
        )
    for key, value in cfg.options.items():
        if not hasattr(args, key):
            raise ConfigError(f"unknown config key {key!r}")
        setattr(args, key, value)


def _out_dir(args) -> Path:
    override = os.environ.get("JAMLAB_OUT_DIR")
    return Path(override) if override else Path(args.out)


def _progress(label):
    def cb(done, total):
        if done == total or done % 200 == 0:
            print(f"  {label}: {done}/{total}", file=sys.stderr)
    return cb


def cmd_generate(args) -> int:
    config = table_config(args.group, args.id, scale=args.scale, master_seed=args.seed)
    out = _out_dir(args)
    manifest = generate_dataset(
        config, out, stem=args.stem, workers=args.workers,
        progress=_progress(f"generate {config.name}") if args.verbose else None,
    )
    print(f"wrote {out / manifest.tensor_file} ({len(manifest.records)} samples)")
    print(f"digest {manifest.tensor_digest}")
    return EXIT_OK


def _resolve_manifest(data: str) -> Path:
    """Accept a manifest path, a tensor path, or a bare stem."""
    p = Path(data)
    if p.suffix == ".json":
        return p
    if p.suffix == ".samples":
        return p.parent / (p.name[:-len(".samples")] + ".manifest.json")
    return p.parent / (p.name + ".manifest.json")


class _RowSubset:
    """Lazy row view over a (possibly memory-mapped) sample array."""

    def __init__(self, data, ids):
        self.data = data
        self.ids = np.asarray(ids, dtype=np.int64)

    def __len__(self):
        return len(self.ids)

    def __getitem__(self, idx):
        return self.data[self.ids[idx]]


def _load_split(manifest_path: Path, policy: str | None, split_seed: int):
    manifest = DatasetManifest.load(manifest_path)
    data_path = manifest_path.parent / manifest.tensor_file
    data = open_samples(data_path, manifest)
    if policy in (None, "auto"):
        policy = SplitPolicy.default_for_group(manifest.scenario.group)
    train_ids, test_ids = split(manifest, policy, seed=split_seed)
    return manifest, data, policy, train_ids, test_ids


def cmd_train(args) -> int:
    manifest_path = _resolve_manifest(args.data)
    manifest, data, policy, train_ids, test_ids = _load_split(
        manifest_path, args.split_policy, args.split_seed
    )
    labels = np.array([r.label for r in manifest.records], dtype=np.int64)
    stem = manifest_path.name.replace(".manifest.json", "")
    out = _out_dir(args)
    out.mkdir(parents=True, exist_ok=True)

    model = DetectorModel(tuple(manifest.tensor_shape), seed=args.seed)
    cfg = TrainConfig(
        epochs=args.epochs,
        batch_size=args.batch_size,
        seed=args.seed,
        adam=AdamHyper(lr=args.lr),
    )
    log = (lambda e: print(
        f"  epoch {e['epoch']:3d}  loss {e['loss']:.4f}  acc {e['accuracy']:.4f}",
        file=sys.stderr,
    )) if args.verbose else None
    history, opt_state = train_model(
        model, _RowSubset(data, train_ids), labels[train_ids], cfg, log=log
    )

    extra = {
        "scenario": manifest.scenario.name,
        "group": manifest.scenario.group,
        "manifest_file": manifest_path.name,
        "dataset_digest": manifest.tensor_digest,
        "split_policy": policy,
        "split_seed": args.split_seed,
        "train_seed": args.seed,
        "epochs": args.epochs,
        "batch_size": args.batch_size,
        "lr": args.lr,
    }
    ckpt_path = out / f"{stem}.ckpt"
    save_checkpoint(ckpt_path, model, opt_state=None, extra=extra)
    history_path = out / f"{stem}.history.json"
    history_path.write_text(json.dumps({"config": extra, "epochs": history}, indent=1))
    print(f"wrote {ckpt_path}")
    print(f"wrote {history_path}")
    return EXIT_OK


def cmd_eval(args) -> int:
    model, _, extra = load_checkpoint(args.checkpoint)
    manifest_path = _resolve_manifest(args.data)
    manifest, data, policy, train_ids, test_ids = _load_split(
        manifest_path, extra.get("split_policy"), int(extra.get("split_seed", 0))
    )
    if manifest.tensor_digest != extra.get("dataset_digest"):
        raise ConfigError(
            "checkpoint was trained on a different dataset "
            f"({extra.get('dataset_digest')} != {manifest.tensor_digest})"
        )
    labels = np.array([r.label for r in manifest.records], dtype=np.int64)
    records = [manifest.records[i] for i in test_ids]
    report = evaluate_model(model, _RowSubset(data, test_ids), labels[test_ids], records)
    report.update({
        "scenario": manifest.scenario.name,
        "group": manifest.scenario.group,
        "n_rx": manifest.scenario.n_rx,
        "dataset_digest": manifest.tensor_digest,
        "checkpoint": str(args.checkpoint),
        "split_policy": policy,
    })

    stem = manifest_path.name.replace(".manifest.json", "")
    out = _out_dir(args)
    out.mkdir(parents=True, exist_ok=True)
    report_path = out / f"{stem}.report.json"
    report_path.write_text(json.dumps(report, indent=1))
    _write_report_table(out / f"{stem}.report.tsv", report)
    print(f"accuracy {report['accuracy']:.4f} on {report['n']} test samples")
    print(f"wrote {report_path}")
    return EXIT_OK


def _write_report_table(path: Path, report: dict) -> None:
    lines = ["section\tkey\tn\taccuracy"]
    lines.append(f"aggregate\tall\t{report['n']}\t{report['accuracy']:.6f}")
    for key in sorted(report.get("per_snr", {}), key=float):
        v = report["per_snr"][key]
        lines.append(f"per_snr\t{key}\t{v['n']}\t{v['accuracy']:.6f}")
    for key in sorted(report.get("per_cell", {})):
        v = report["per_cell"][key]
        lines.append(f"per_cell\t{key}\t{v['n']}\t{v['accuracy']:.6f}")
    path.write_text("\n".join(lines) + "\n")


def cmd_report(args) -> int:
    runs = Path(args.runs)
    rows = []
    failures = 0
    reports = {}
    for name in SCENARIOS:
        matches = sorted(runs.glob(f"{name}*.report.json"))
        if not matches:
            rows.append({"scenario": name, "status": "absent"})
            failures += 1
            continue
        report = json.loads(matches[0].read_text())
        reports[name] = report
        ok = report["accuracy"] >= args.min_accuracy
        failures += 0 if ok else 1
        rows.append({
            "scenario": name,
            "status": "pass" if ok else "fail",
            "n_test": report["n"],
            "accuracy": report["accuracy"],
            "per_snr": {k: v["accuracy"] for k, v in report.get("per_snr", {}).items()},
        })

    summary = {"min_accuracy": args.min_accuracy, "rows": rows}
    if "C1" in reports and "D1" in reports:
        # lowest-SNR degradation when the receiver grows from 4 to 8 antennas
        c_acc = reports["C1"].get("per_snr", {}).get("5", {}).get("accuracy")
        d_acc = reports["D1"].get("per_snr", {}).get("5", {}).get("accuracy")
        if c_acc is not None and d_acc is not None:
            summary["snr5_gap_4rx_minus_8rx"] = c_acc - d_acc

    out = _out_dir(args)
    out.mkdir(parents=True, exist_ok=True)
    (out / "summary.json").write_text(json.dumps(summary, indent=1))
    lines = ["scenario\tstatus\tn_test\taccuracy"]
    for row in rows:
        if "accuracy" in row:
            lines.append(f"{row['scenario']}\t{row['status']}\t{row['n_test']}\t"
                         f"{row['accuracy']:.6f}")
        else:
            lines.append(f"{row['scenario']}\t{row['status']}\t-\t-")
    (out / "summary.tsv").write_text("\n".join(lines) + "\n")
    print(f"wrote {out / 'summary.json'}")

    if args.plot:
        _plot_sample(Path(args.plot), args.plot_index, out / args.plot_out)

    return EXIT_ACCEPT if failures else EXIT_OK


def _plot_sample(manifest_path: Path, index: int, out_path: Path) -> None:
    """Diagnostic spectrogram dump of one stored sample (needs matplotlib)."""
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    manifest = DatasetManifest.load(manifest_path)
    data = open_samples(manifest_path.parent / manifest.tensor_file, manifest)
    tensor = np.array(data[index])
    n_rx = tensor.shape[-1]
    fig, axes = plt.subplots(1, n_rx, figsize=(3 * n_rx, 4), squeeze=False)
    for r in range(n_rx):
        axes[0][r].imshow(tensor[:, :, r], aspect="auto", origin="lower", cmap="viridis")
        axes[0][r].set_title(f"rx {r}")
        axes[0][r].set_xlabel("frequency bin")
    axes[0][0].set_ylabel("time bin")
    rec = manifest.records[index]
    fig.suptitle(
        f"{manifest.scenario.name}[{index}] label={rec.label} "
        f"snr={rec.snr_db:g} sjr={rec.sjr_db} jam={rec.jam_type}"
    )
    fig.tight_layout()
    fig.savefig(out_path, dpi=110)
    print(f"wrote {out_path}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="jamlab", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="generate one scenario dataset")
    g.add_argument("--group", required=True, choices=list("ABCDabcd"))
    g.add_argument("--id", type=int, default=1, help="dataset id (1-5 for A/B, 1 for C/D)")
    g.add_argument("--scale", type=int, default=1,
                   help="divide sample counts by this factor (min 10 per cell)")
    g.add_argument("--seed", type=int, default=0, help="master seed")
    g.add_argument("--out", default="runs/data")
    g.add_argument("--stem", default=None, help="output file stem override")
    g.add_argument("--workers", type=int, default=1)
    g.add_argument("--config", default=None)
    g.add_argument("--verbose", action="store_true")
    g.set_defaults(func=cmd_generate)

    t = sub.add_parser("train", help="train the detector on a dataset")
    t.add_argument("--data", required=True, help="manifest path, tensor path, or stem")
    t.add_argument("--out", default="runs/models")
    t.add_argument("--epochs", type=int, default=50)
    t.add_argument("--batch-size", type=int, default=32)
    t.add_argument("--lr", type=float, default=0.01)
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--split-policy", default="auto",
                   choices=["auto", SplitPolicy.SIXTY_FORTY, SplitPolicy.FIFTY_FIFTY])
    t.add_argument("--split-seed", type=int, default=0)
    t.add_argument("--config", default=None)
    t.add_argument("--verbose", action="store_true")
    t.set_defaults(func=cmd_train)

    e = sub.add_parser("eval", help="evaluate a checkpoint on the test split")
    e.add_argument("--checkpoint", required=True)
    e.add_argument("--data", required=True)
    e.add_argument("--out", default="runs/reports")
    e.add_argument("--config", default=None)
    e.set_defaults(func=cmd_eval)

    r = sub.add_parser("report", help="merge per-scenario reports into a summary")
    r.add_argument("--runs", required=True, help="directory containing *.report.json")
    r.add_argument("--out", default="runs/summary")
    r.add_argument("--min-accuracy", type=float, default=0.978)
    r.add_argument("--plot", default=None, help="manifest path for a diagnostic plot")
    r.add_argument("--plot-index", type=int, default=0)
    r.add_argument("--plot-out", default="sample.png")
    r.add_argument("--config", default=None)
    r.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        _apply_config_file(args)
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except FormatError as exc:
        print(f"format error: {exc}", file=sys.stderr)
        return EXIT_IO
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
