"""Turns per-antenna received waveforms into the stacked time-frequency tensor.

One spectrogram column per OFDM symbol: the record is cut into windows of
N + cp_len samples (hop = window), the cyclic-prefix lead-in of each window
is skipped and the N-point DFT of the symbol body is taken, so frequency
bins line up exactly with subcarriers and pilot structure stays column
aligned. Magnitudes are block-mean filtered, decimated, converted to dB and
clipped relative to the per-sample median level.
"""

import enum
from dataclasses import dataclass

import numpy as np
import scipy.fft
from numpy.lib.stride_tricks import sliding_window_view

from .errors import ConfigError, SizeMismatch

# Guard before log10 so silent records clip to a finite floor instead of -inf.
_TINY = 1e-20


class Label(enum.IntEnum):
    ABSENT = 0
    PRESENT = 1


@dataclass(frozen=True)
class FeatureParams:
    """Spectrogram and pooling geometry plus the dB clipping range."""

    n_subcarriers: int = 1024
    cp_len: int = 64
    n_symbols: int = 600
    mean_filter: tuple = (4, 4)
    pool_stride: tuple = (4, 4)
    db_floor_rel: float = -60.0
    db_ceil_rel: float = 40.0

    def __post_init__(self):
        if self.mean_filter != self.pool_stride:
            raise ConfigError("mean filter size and pool stride must match (block mean)")
        h, w = self.mean_filter
        if h < 1 or w < 1:
            raise ConfigError("mean filter must be at least 1x1")
        if self.n_symbols % h or self.n_subcarriers % w:
            raise ConfigError("pooling must divide the spectrogram shape evenly")

    @property
    def stft_window(self) -> int:
        return self.n_subcarriers + self.cp_len

    @property
    def stft_hop(self) -> int:
        return self.stft_window

    @property
    def out_shape(self) -> tuple:
        return (self.n_symbols // self.mean_filter[0], self.n_subcarriers // self.mean_filter[1])


@dataclass
class SampleTensor:
    """One labeled dataset sample: (time, frequency, antenna) in clipped dB."""

    values: np.ndarray
    label: Label
    meta: dict


def stft_magnitude(signal: np.ndarray, params: FeatureParams) -> np.ndarray:
    """Per-symbol spectrogram magnitudes of one antenna's waveform.

    ``signal`` is the flattened record of n_symbols windows of N + cp_len
    samples. Output shape is (n_symbols, N).
    """
    signal = np.asarray(signal).reshape(-1)
    expected = params.n_symbols * params.stft_window
    if signal.size != expected:
        raise SizeMismatch(f"expected {expected} samples, got {signal.size}")
    windows = signal.reshape(params.n_symbols, params.stft_window)
    body = windows[:, params.cp_len:]
    out = np.abs(scipy.fft.fft(body, axis=-1))
    out /= np.sqrt(params.n_subcarriers, dtype=out.dtype)
    return out


def block_mean(grid: np.ndarray, params: FeatureParams) -> np.ndarray:
    """Mean filter + stride decimation, still in linear magnitude."""
    h, w = params.mean_filter
    sh, sw = params.pool_stride
    if grid.shape[0] < h or grid.shape[1] < w:
        raise SizeMismatch(f"grid {grid.shape} smaller than the {h}x{w} mean filter")
    windows = sliding_window_view(grid, (h, w))[::sh, ::sw]
    return windows.mean(axis=(-2, -1))


def to_db(values: np.ndarray, params: FeatureParams, reference_db: float | None = None) -> np.ndarray:
    """Amplitude dB with floor/ceiling clipping around a reference level.

    The reference defaults to the median dB of ``values`` itself; the full
    sample pipeline passes the median over all antennas so the clip window
    is common to the whole tensor.
    """
    db = 20.0 * np.log10(np.maximum(values, _TINY))
    if reference_db is None:
        reference_db = float(np.median(db))
    return np.clip(db, reference_db + params.db_floor_rel, reference_db + params.db_ceil_rel)


def smooth_and_pool(grid: np.ndarray, params: FeatureParams) -> np.ndarray:
    """Pool one magnitude grid and convert it to clipped dB."""
    return to_db(block_mean(grid, params), params)


def assemble_tensor(grids, label: Label, meta: dict) -> SampleTensor:
    """Stack per-antenna grids along the third (spatial) axis."""
    shapes = {g.shape for g in grids}
    if len(shapes) != 1:
        raise SizeMismatch(f"antenna grids disagree in shape: {sorted(shapes)}")
    values = np.stack(grids, axis=-1).astype(np.float32)
    return SampleTensor(values=values, label=Label(label), meta=dict(meta))


def featurize_record(time_signals: np.ndarray, params: FeatureParams,
                     label: Label, meta: dict) -> SampleTensor:
    """Full feature path for one record: STFT, pool, joint dB clip, stack.

    ``time_signals`` holds one waveform per receive antenna, each of length
    n_symbols * (N + cp_len). The dB clip window is anchored at the median
    over the whole stacked tensor so antennas share a common scale.
    """
    time_signals = np.asarray(time_signals)
    pooled = np.stack(
        [block_mean(stft_magnitude(sig, params), params) for sig in time_signals],
        axis=-1,
    )
    db = to_db(pooled, params)
    return assemble_tensor([db[..., i] for i in range(db.shape[-1])], label, meta)
