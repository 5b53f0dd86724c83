"""End-to-end sample generation for the four scenario groups, with manifests.

Group A/B datasets fix one SNR each (five datasets per group); C and D sweep
all five SNRs in one dataset. Every dataset is half attacked, half clean.
Generation is deterministic: sample i of a dataset is a pure function of
(master_seed, i), so any single sample can be regenerated from its manifest
record without rebuilding the set.

On-disk layout: a flat little-endian binary of float32 tensors behind a
32-byte header, plus a JSON manifest carrying the scenario, the per-sample
records and the SHA-256 digest of the tensor file.
"""

import dataclasses
import hashlib
import json
import math
import struct
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .attacker import AttackPlan, JamType, apply_attack, draw_attack_plan
from .channel import (
    ChannelParams,
    NoiseParams,
    add_noise,
    apply_channel,
    draw_channel,
    mean_active_power,
)
from .errors import ConfigError, FormatError
from .features import FeatureParams, Label, SampleTensor, featurize_record
from .ofdm import LinkParams, build_subcarrier_map, modulate_frame, to_time_domain

FORMAT_VERSION = 1
_MAGIC = b"JLTENSOR"
_HEADER = struct.Struct("<8sIIIIQ")  # magic, version, T, F, n_rx, sample count

SNR_GRID_DB = (5.0, 10.0, 15.0, 20.0, 25.0)
SJR_GRID_DB = (0.0, -5.0, -10.0, -15.0, -20.0)
JAM_TYPES = (JamType.BARRAGE, JamType.PILOT_TONE)
GROUP_N_RX = {"A": 4, "B": 8, "C": 4, "D": 8}
GROUP_SAMPLES_PER_CELL = {"A": 150, "B": 150, "C": 375, "D": 375}
MIN_CELL_SAMPLES = 10


@dataclass(frozen=True)
class ScenarioConfig:
    """One scenario dataset configuration."""

    group: str
    dataset_id: int
    snr_set: tuple
    sjr_set: tuple = SJR_GRID_DB
    jam_types: tuple = JAM_TYPES
    samples_per_cell: int = 150
    scale: int = 1
    master_seed: int = 0
    n_attacked: int = 2
    link: LinkParams = field(default_factory=LinkParams)
    channel: ChannelParams = field(default_factory=ChannelParams)
    mean_filter: tuple = (4, 4)

    def __post_init__(self):
        if self.group not in GROUP_N_RX:
            raise ConfigError(f"unknown group {self.group!r}")
        max_id = 5 if self.group in ("A", "B") else 1
        if not 1 <= self.dataset_id <= max_id:
            raise ConfigError(f"dataset_id {self.dataset_id} invalid for group {self.group}")
        if self.link.n_rx != GROUP_N_RX[self.group]:
            raise ConfigError(
                f"group {self.group} uses {GROUP_N_RX[self.group]} receive antennas, "
                f"link has {self.link.n_rx}"
            )
        if self.group in ("A", "B") and len(self.snr_set) != 1:
            raise ConfigError("group A/B datasets fix a single SNR")
        if self.samples_per_cell < 1 or self.scale < 1:
            raise ConfigError("samples_per_cell and scale must be >= 1")
        if self.master_seed < 0:
            raise ConfigError("master_seed must be non-negative")
        if not self.sjr_set or not self.jam_types:
            raise ConfigError("need at least one SJR and one jamming type")
        if self.channel.n_taps > self.link.cp_len:
            raise ConfigError("delay spread exceeds the cyclic prefix")
        if self.n_attacked > self.link.n_rx:
            raise ConfigError("cannot attack more antennas than the receiver has")

    @property
    def n_rx(self) -> int:
        return self.link.n_rx

    @property
    def name(self) -> str:
        return f"{self.group}{self.dataset_id}"

    def feature_params(self) -> FeatureParams:
        return FeatureParams(
            n_subcarriers=self.link.n_subcarriers,
            cp_len=self.link.cp_len,
            n_symbols=self.link.n_symbols_total,
            mean_filter=self.mean_filter,
            pool_stride=self.mean_filter,
        )

    def tensor_shape(self) -> tuple:
        t, f = self.feature_params().out_shape
        return (t, f, self.n_rx)


def table_config(group: str, dataset_id: int = 1, scale: int = 1, master_seed: int = 0) -> ScenarioConfig:
    """Ready-made configuration for one of the 12 standard scenario datasets."""
    group = group.upper()
    if group not in GROUP_N_RX:
        raise ConfigError(f"unknown group {group!r}")
    if group in ("A", "B"):
        snr_set = (SNR_GRID_DB[dataset_id - 1],) if 1 <= dataset_id <= 5 else ()
    else:
        snr_set = SNR_GRID_DB
    return ScenarioConfig(
        group=group,
        dataset_id=dataset_id,
        snr_set=snr_set,
        samples_per_cell=GROUP_SAMPLES_PER_CELL[group],
        scale=scale,
        master_seed=master_seed,
        link=LinkParams(n_rx=GROUP_N_RX[group]),
    )


@dataclass
class SampleRecord:
    """Manifest entry for one sample; enough to regenerate it bit-identically."""

    index: int
    label: int
    snr_db: float
    sjr_db: float | None = None
    jam_type: str | None = None
    attacked: list = field(default_factory=list)
    intervals: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @staticmethod
    def from_dict(d: dict) -> "SampleRecord":
        return SampleRecord(**d)


def _cell_counts(n_cells: int, samples_per_cell: int, scale: int) -> list:
    """Per-cell attacked-sample counts after scaling.

    The scaled group total is divided across cells with a largest-remainder
    round-robin so the total stays exact; a floor of MIN_CELL_SAMPLES keeps
    heavily scaled cells populated.
    """
    if scale == 1:
        return [samples_per_cell] * n_cells
    total = (n_cells * samples_per_cell) // scale
    base, extra = divmod(total, n_cells)
    counts = [base + (1 if i < extra else 0) for i in range(n_cells)]
    return [max(MIN_CELL_SAMPLES, c) for c in counts]


def plan_records(config: ScenarioConfig) -> list:
    """Lay out every sample of a dataset: cells, labels, SNRs, in a fixed order.

    Attacked cells come first (jam type major, SJR minor), then the clean
    block, equal in size to the attacked block. Within a multi-SNR cell the
    SNR cycles deterministically through the grid.
    """
    cells = [(jam, sjr) for jam in config.jam_types for sjr in config.sjr_set]
    counts = _cell_counts(len(cells), config.samples_per_cell, config.scale)
    records = []
    index = 0
    for (jam, sjr), count in zip(cells, counts):
        for i in range(count):
            records.append(
                SampleRecord(
                    index=index,
                    label=int(Label.PRESENT),
                    snr_db=float(config.snr_set[i % len(config.snr_set)]),
                    sjr_db=float(sjr),
                    jam_type=jam.value,
                )
            )
            index += 1
    n_absent = sum(counts)
    for i in range(n_absent):
        records.append(
            SampleRecord(
                index=index,
                label=int(Label.ABSENT),
                snr_db=float(config.snr_set[i % len(config.snr_set)]),
            )
        )
        index += 1
    return records


def synthesize_sample(config: ScenarioConfig, record: SampleRecord) -> SampleTensor:
    """Generate one labeled tensor from its manifest record.

    The per-sample RNG stream is seeded by (master_seed, index) and consumed
    in a fixed order: data bits, legitimate channel, attacker channel, attack
    plan, jam waveform, receiver noise. The returned tensor's meta carries
    the realized attack geometry, which generate_dataset copies back into
    the manifest record.
    """
    link = config.link
    rng = np.random.default_rng(np.random.SeedSequence([config.master_seed, record.index]))
    smap = build_subcarrier_map(link)

    # single precision end to end: calibration tolerances are orders of
    # magnitude above float32 rounding, and it halves the generation cost
    n_data = len(smap.data_indices)
    bits = rng.integers(0, 2, size=(link.n_tx, link.n_symbols_total * n_data), dtype=np.int8)
    grids = np.empty(
        (link.n_tx, link.n_symbols_total, link.n_subcarriers), dtype=np.complex64
    )
    for t in range(link.n_tx):
        grids[t] = modulate_frame(bits[t], smap, link, dtype=np.complex64)

    legit = draw_channel(
        config.channel, link.n_tx, link.n_rx, link.n_subcarriers, rng, dtype=np.complex64
    )
    clean = apply_channel(grids, legit)

    if record.label == Label.PRESENT:
        attacker_ch = draw_channel(
            config.channel, 2, link.n_rx, link.n_subcarriers, rng, dtype=np.complex64
        )
        plan = draw_attack_plan(
            JamType(record.jam_type),
            record.sjr_db,
            link.n_rx,
            config.n_attacked,
            link.n_symbols_total,
            rng,
        )
        received = apply_attack(clean, plan, smap, attacker_ch, rng)
    else:
        plan = AttackPlan.absent(link.n_rx)
        received = clean

    reference = mean_active_power(clean, smap)
    received = add_noise(received, NoiseParams(record.snr_db), reference, rng)

    time_signals = np.stack([to_time_domain(received[r], link) for r in range(link.n_rx)])
    attacked = [int(r) for r in np.flatnonzero(plan.gamma)]
    meta = {
        "scenario": config.name,
        "index": record.index,
        "seed": [config.master_seed, record.index],
        "snr_db": record.snr_db,
        "sjr_db": record.sjr_db,
        "jam_type": record.jam_type,
        "attacked": attacked,
        "intervals": [list(plan.intervals[r][0]) for r in attacked],
    }
    return featurize_record(time_signals, config.feature_params(), Label(record.label), meta)


@dataclass
class DatasetManifest:
    """Scenario, per-sample records, and the digest of the tensor file."""

    scenario: ScenarioConfig
    records: list
    tensor_file: str
    tensor_digest: str
    tensor_shape: tuple
    format_version: int = FORMAT_VERSION

    def to_dict(self) -> dict:
        scenario = dataclasses.asdict(self.scenario)
        scenario["jam_types"] = [j.value for j in self.scenario.jam_types]
        return {
            "format_version": self.format_version,
            "scenario": scenario,
            "tensor_file": self.tensor_file,
            "tensor_digest": self.tensor_digest,
            "tensor_shape": list(self.tensor_shape),
            "records": [r.to_dict() for r in self.records],
        }

    @staticmethod
    def from_dict(d: dict) -> "DatasetManifest":
        if d.get("format_version") != FORMAT_VERSION:
            raise FormatError(f"unsupported manifest version {d.get('format_version')}")
        s = dict(d["scenario"])
        s["link"] = LinkParams(**s["link"])
        s["channel"] = ChannelParams(**s["channel"])
        s["snr_set"] = tuple(s["snr_set"])
        s["sjr_set"] = tuple(s["sjr_set"])
        s["jam_types"] = tuple(JamType(j) for j in s["jam_types"])
        s["mean_filter"] = tuple(s["mean_filter"])
        return DatasetManifest(
            scenario=ScenarioConfig(**s),
            records=[SampleRecord.from_dict(r) for r in d["records"]],
            tensor_file=d["tensor_file"],
            tensor_digest=d["tensor_digest"],
            tensor_shape=tuple(d["tensor_shape"]),
        )

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=1))

    @staticmethod
    def load(path) -> "DatasetManifest":
        return DatasetManifest.from_dict(json.loads(Path(path).read_text()))


def _synth_values(args) -> tuple:
    config, record = args
    tensor = synthesize_sample(config, record)
    return tensor.values, tensor.meta


def generate_dataset(
    config: ScenarioConfig,
    out_dir,
    stem: str | None = None,
    workers: int = 1,
    progress=None,
) -> DatasetManifest:
    """Generate a full dataset to ``out_dir`` and return its manifest.

    Writes ``<stem>.samples`` (binary tensors) and ``<stem>.manifest.json``.
    ``progress`` may be a callable taking (done, total).
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    if stem is None:
        stem = config.name if config.scale == 1 else f"{config.name}-scale{config.scale}"
    records = plan_records(config)
    shape = config.tensor_shape()
    data_path = out_dir / f"{stem}.samples"

    digest = hashlib.sha256()
    header = _HEADER.pack(_MAGIC, FORMAT_VERSION, shape[0], shape[1], shape[2], len(records))
    jobs = [(config, r) for r in records]
    with open(data_path, "wb") as fh:
        fh.write(header)
        digest.update(header)
        if workers > 1:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                results = pool.map(_synth_values, jobs, chunksize=4)
                for done, (values, meta) in enumerate(results, 1):
                    _write_sample(fh, digest, values, shape)
                    _fill_record(records[done - 1], meta)
                    if progress:
                        progress(done, len(records))
        else:
            for done, job in enumerate(jobs, 1):
                values, meta = _synth_values(job)
                _write_sample(fh, digest, values, shape)
                _fill_record(records[done - 1], meta)
                if progress:
                    progress(done, len(records))

    manifest = DatasetManifest(
        scenario=config,
        records=records,
        tensor_file=data_path.name,
        tensor_digest=f"sha256:{digest.hexdigest()}",
        tensor_shape=shape,
    )
    manifest.save(out_dir / f"{stem}.manifest.json")
    return manifest


def _write_sample(fh, digest, values: np.ndarray, shape) -> None:
    if values.shape != tuple(shape):
        raise FormatError(f"sample shape {values.shape} does not match header {shape}")
    raw = np.ascontiguousarray(values, dtype="<f4").tobytes()
    fh.write(raw)
    digest.update(raw)


def _fill_record(record: SampleRecord, meta: dict) -> None:
    record.attacked = meta["attacked"]
    record.intervals = meta["intervals"]


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 22), b""):
            h.update(chunk)
    return f"sha256:{h.hexdigest()}"


def open_samples(data_path, manifest: DatasetManifest, verify: bool = True) -> np.ndarray:
    """Memory-map the tensor file as (count, T, F, n_rx) float32.

    Verifies the manifest digest and the header before returning the map.
    """
    data_path = Path(data_path)
    if verify and sha256_file(data_path) != manifest.tensor_digest:
        raise FormatError(f"digest mismatch for {data_path.name}")
    with open(data_path, "rb") as fh:
        head = fh.read(_HEADER.size)
    magic, version, t, f, c, count = _HEADER.unpack(head)
    if magic != _MAGIC:
        raise FormatError(f"{data_path.name} is not a tensor file")
    if version != FORMAT_VERSION:
        raise FormatError(f"unsupported tensor file version {version}")
    if (t, f, c) != tuple(manifest.tensor_shape) or count != len(manifest.records):
        raise FormatError(f"{data_path.name} header disagrees with its manifest")
    return np.memmap(data_path, dtype="<f4", mode="r", offset=_HEADER.size,
                     shape=(count, t, f, c))


def load_samples(data_path, manifest: DatasetManifest, ids=None, verify: bool = True):
    """Load tensors (and labels) for ``ids`` in the given order, into RAM."""
    data = open_samples(data_path, manifest, verify=verify)
    if ids is None:
        ids = range(len(manifest.records))
    ids = np.asarray(list(ids), dtype=np.int64)
    if ids.size and (ids.min() < 0 or ids.max() >= len(manifest.records)):
        raise FormatError("sample id out of range")
    labels = np.array([manifest.records[i].label for i in ids], dtype=np.uint8)
    return np.array(data[ids]), labels


class SplitPolicy:
    SIXTY_FORTY = "sixty_forty"
    FIFTY_FIFTY = "fifty_fifty"

    FRACTIONS = {SIXTY_FORTY: 0.6, FIFTY_FIFTY: 0.5}

    @staticmethod
    def default_for_group(group: str) -> str:
        return SplitPolicy.SIXTY_FORTY if group in ("A", "B") else SplitPolicy.FIFTY_FIFTY


def split(manifest: DatasetManifest, policy: str, seed: int = 0) -> tuple:
    """Stratified train/test split over (label, SNR, SJR, jam type) cells.

    Per-stratum train counts are floor(frac * n) plus largest-remainder
    top-ups so the overall train fraction is exact; strata are shuffled with
    the given seed. Returns (train_ids, test_ids), disjoint and exhaustive.
    """
    if policy not in SplitPolicy.FRACTIONS:
        raise ConfigError(f"unknown split policy {policy!r}")
    frac = SplitPolicy.FRACTIONS[policy]

    strata: dict = {}
    for r in manifest.records:
        key = (r.label, r.snr_db, r.sjr_db, r.jam_type)
        strata.setdefault(key, []).append(r.index)
    for key, ids in strata.items():
        if len(ids) < 2:
            raise ConfigError(f"stratum {key} has {len(ids)} sample(s); cannot split")

    total = len(manifest.records)
    target = int(math.floor(frac * total + 0.5))
    keys = sorted(strata, key=lambda k: tuple(str(x) for x in k))
    floors = {k: int(math.floor(frac * len(strata[k]))) for k in keys}
    remainders = sorted(
        keys, key=lambda k: (-(frac * len(strata[k]) - floors[k]), str(k))
    )
    short = target - sum(floors.values())
    take = dict(floors)
    for k in remainders[:short]:
        take[k] += 1

    rng = np.random.default_rng(seed)
    train, test = [], []
    for k in keys:
        ids = np.array(strata[k])
        rng.shuffle(ids)
        train.extend(ids[: take[k]].tolist())
        test.extend(ids[take[k]:].tolist())
    return sorted(train), sorted(test)
