"""Desk-scale MIMO-OFDM satellite link lab: jamming simulation, labeled
time-frequency datasets, and a from-scratch CNN jammer detector."""

import ctypes as _ctypes
import sys as _sys

if _sys.platform.startswith("linux"):
    # Large array temporaries dominate this workload; glibc would mmap and
    # immediately unmap them, paying the kernel page-fault cost on every
    # batch. Keeping big blocks on the heap makes frees reusable.
    try:
        _libc = _ctypes.CDLL("libc.so.6")
        _libc.mallopt(-3, 1 << 30)  # M_MMAP_THRESHOLD
        _libc.mallopt(-1, 1 << 30)  # M_TRIM_THRESHOLD
    except OSError:
        pass

__version__ = "0.1.0"

from .ofdm import LinkParams, SubcarrierMap, build_subcarrier_map, modulate_frame
from .channel import ChannelParams, NoiseParams, draw_channel, apply_channel, add_noise
from .attacker import AttackPlan, JamType, draw_attack_plan, jam_signal, inject
from .features import FeatureParams, Label, SampleTensor, featurize_record
from .dataset import (
    DatasetManifest,
    ScenarioConfig,
    SplitPolicy,
    generate_dataset,
    load_samples,
    open_samples,
    split,
    table_config,
)
from .cnn import (
    AdamHyper,
    CnnArchitecture,
    DetectorModel,
    TrainConfig,
    evaluate_model,
    load_checkpoint,
    save_checkpoint,
    train_model,
)
