"""Mini-batch training and evaluation on labeled sample tensors.

Inputs are standardized per sample (zero mean, unit variance over the whole
tensor) right before entering the network, both at train and at eval time,
so the detector keys on time-frequency structure rather than absolute level.
"""

from dataclasses import dataclass, field

import numpy as np

from .model import DetectorModel
from .optim import AdamHyper, AdamState, adam_step


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 50
    batch_size: int = 32
    seed: int = 0
    adam: AdamHyper = field(default_factory=AdamHyper)


def standardize(batch: np.ndarray) -> np.ndarray:
    """Zero-mean unit-variance normalization per sample, in float32."""
    batch = np.array(batch, dtype=np.float32, copy=True)
    flat = batch.reshape(batch.shape[0], -1)
    mean = flat.mean(axis=1)
    std = flat.std(axis=1)
    flat -= mean[:, None]
    flat /= std[:, None] + 1e-8
    return batch


def one_hot(labels: np.ndarray, n_classes: int = 2) -> np.ndarray:
    out = np.zeros((len(labels), n_classes), dtype=np.float32)
    out[np.arange(len(labels)), np.asarray(labels, dtype=np.int64)] = 1.0
    return out


def train_model(model: DetectorModel, data, labels, cfg: TrainConfig, log=None) -> tuple:
    """Run the training loop; returns (per-epoch history dicts, Adam state).

    ``data`` may be an in-memory array or a memory-mapped tensor file; rows
    are pulled per batch. One seeded RNG drives both the epoch shuffles and
    the dropout masks, so a fixed seed fixes the whole trajectory.
    """
    labels = np.asarray(labels, dtype=np.int64)
    n = len(labels)
    rng = np.random.default_rng(cfg.seed)
    state = AdamState(model)
    history = []
    for epoch in range(1, cfg.epochs + 1):
        perm = rng.permutation(n)
        loss_sum = 0.0
        correct = 0
        for b0 in range(0, n, cfg.batch_size):
            idx = np.sort(perm[b0:b0 + cfg.batch_size])
            xb = standardize(data[idx])
            yb = one_hot(labels[idx], model.arch.n_classes)
            probs = model.forward(xb, train=True, rng=rng)
            loss_sum += model.loss(probs, yb) * len(idx)
            grads = model.backward(yb)
            adam_step(model, grads, state, cfg.adam)
            correct += int((probs.argmax(axis=1) == labels[idx]).sum())
        entry = {"epoch": epoch, "loss": loss_sum / n, "accuracy": correct / n}
        history.append(entry)
        if log:
            log(entry)
    return history, state


def evaluate_model(model: DetectorModel, data, labels, records=None,
                   batch_size: int = 64) -> dict:
    """Accuracy, confusion matrix and per-condition breakdown on a test set.

    ``records`` (manifest entries aligned with the rows of ``data``) key the
    breakdown by SNR, SJR and jamming type; without them only the aggregate
    numbers are reported.
    """
    labels = np.asarray(labels, dtype=np.int64)
    n = len(labels)
    preds = np.empty(n, dtype=np.int64)
    for b0 in range(0, n, batch_size):
        xb = standardize(data[b0:b0 + batch_size])
        preds[b0:b0 + len(xb)] = model.forward(xb, train=False).argmax(axis=1)

    confusion = np.zeros((2, 2), dtype=np.int64)
    for t, p in zip(labels, preds):
        confusion[t, p] += 1
    report = {
        "n": int(n),
        "accuracy": float((preds == labels).mean()) if n else 0.0,
        "confusion": confusion.tolist(),
    }
    if records is not None:
        per_cell: dict = {}
        per_snr: dict = {}
        for rec, t, p in zip(records, labels, preds):
            ck = _cell_key(rec)
            cell = per_cell.setdefault(ck, {"n": 0, "correct": 0})
            cell["n"] += 1
            cell["correct"] += int(t == p)
            sk = f"{rec.snr_db:g}"
            snr = per_snr.setdefault(sk, {"n": 0, "correct": 0})
            snr["n"] += 1
            snr["correct"] += int(t == p)
        for d in (per_cell, per_snr):
            for v in d.values():
                v["accuracy"] = v["correct"] / v["n"]
        report["per_cell"] = per_cell
        report["per_snr"] = per_snr
    return report


def _cell_key(rec) -> str:
    sjr = "none" if rec.sjr_db is None else f"{rec.sjr_db:g}"
    jam = rec.jam_type or "none"
    return f"label={rec.label}|snr={rec.snr_db:g}|sjr={sjr}|jam={jam}"
