"""Legitimate transmitter: BPSK frequency grids with comb pilots and cyclic prefix.

Subcarrier layout: a contiguous active block (data + evenly spaced pilots)
centered in [0, N), with the DC bin and the band edges left as null guards.
Pilots sit at a fixed offset inside the block and repeat with constant stride.
"""

from dataclasses import dataclass

import numpy as np
import scipy.fft

from .errors import ConfigError, SizeMismatch


@dataclass(frozen=True)
class LinkParams:
    """Static parameters of the legitimate MIMO-OFDM link."""

    n_subcarriers: int = 1024
    n_data_subcarriers: int = 705
    n_pilots: int = 88
    pilot_spacing: int = 8
    pilot_offset: int = 4
    cp_len: int = 64
    n_symbols_per_frame: int = 60
    n_frames: int = 10
    n_tx: int = 2
    n_rx: int = 4

    def __post_init__(self):
        positive = {
            "n_subcarriers": self.n_subcarriers,
            "n_data_subcarriers": self.n_data_subcarriers,
            "cp_len": self.cp_len,
            "n_symbols_per_frame": self.n_symbols_per_frame,
            "n_frames": self.n_frames,
            "n_tx": self.n_tx,
            "n_rx": self.n_rx,
        }
        for name, value in positive.items():
            if value <= 0:
                raise ConfigError(f"{name} must be strictly positive, got {value}")
        if self.n_pilots < 0 or self.pilot_offset < 0:
            raise ConfigError("n_pilots and pilot_offset must be non-negative")
        if self.n_pilots > 0 and self.pilot_spacing <= 0:
            raise ConfigError("pilot_spacing must be strictly positive")
        if self.n_pilots + self.n_data_subcarriers > self.n_subcarriers:
            raise ConfigError("more active subcarriers than subcarriers")
        if self.cp_len >= self.n_subcarriers:
            raise ConfigError("cyclic prefix must be shorter than the symbol body")

    @property
    def n_active(self) -> int:
        return self.n_pilots + self.n_data_subcarriers

    @property
    def n_symbols_total(self) -> int:
        return self.n_symbols_per_frame * self.n_frames

    @property
    def symbol_len(self) -> int:
        return self.n_subcarriers + self.cp_len


@dataclass(frozen=True)
class SubcarrierMap:
    """Partition of the N subcarriers into pilot, data and null index sets."""

    n_subcarriers: int
    active_start: int
    pilot_indices: np.ndarray
    data_indices: np.ndarray
    null_indices: np.ndarray


def build_subcarrier_map(params: LinkParams) -> SubcarrierMap:
    """Place the active block and the pilot comb; everything else is a null guard.

    The active block of ``n_active`` contiguous bins is centered in [0, N).
    The DC bin (index 0) always stays null, so at most N - 1 bins can be
    active. Pilots occupy ``active_start + pilot_offset + spacing * m``.
    """
    n = params.n_subcarriers
    n_active = params.n_active
    if n_active > n - 1:
        raise ConfigError(
            f"{n_active} active bins plus the DC null do not fit {n} subcarriers"
        )
    active_start = max(1, (n - n_active) // 2)

    if params.n_pilots > 0:
        last = params.pilot_offset + params.pilot_spacing * (params.n_pilots - 1)
        if last >= n_active:
            raise ConfigError("pilot comb does not fit inside the active block")
        pilots = active_start + params.pilot_offset + params.pilot_spacing * np.arange(
            params.n_pilots, dtype=np.int64
        )
    else:
        pilots = np.empty(0, dtype=np.int64)

    active = np.arange(active_start, active_start + n_active, dtype=np.int64)
    data = np.setdiff1d(active, pilots)
    nulls = np.setdiff1d(np.arange(n, dtype=np.int64), active)
    return SubcarrierMap(
        n_subcarriers=n,
        active_start=active_start,
        pilot_indices=pilots,
        data_indices=data,
        null_indices=nulls,
    )


def modulate_frame(
    bits: np.ndarray,
    smap: SubcarrierMap,
    params: LinkParams,
    pilot_value: complex = 1.0 + 0.0j,
    dtype=np.complex128,
) -> np.ndarray:
    """Map a bit sequence onto one antenna's frequency grid.

    Bit 0 -> +1, bit 1 -> -1 on the data bins (BPSK), ``pilot_value`` on the
    pilot bins, exact zero on the null bins. Returns a complex array of shape
    (n_symbols_total, n_subcarriers).
    """
    n_sym = params.n_symbols_total
    n_data = len(smap.data_indices)
    bits = np.asarray(bits)
    if bits.size != n_sym * n_data:
        raise SizeMismatch(
            f"expected {n_sym * n_data} bits ({n_sym} symbols x {n_data} data bins), "
            f"got {bits.size}"
        )
    grid = np.zeros((n_sym, params.n_subcarriers), dtype=dtype)
    grid[:, smap.data_indices] = 1.0 - 2.0 * bits.reshape(n_sym, n_data)
    grid[:, smap.pilot_indices] = pilot_value
    return grid


def demodulate_frame(grid: np.ndarray, smap: SubcarrierMap) -> np.ndarray:
    """Hard BPSK decisions on the data bins, in data-index order."""
    data = grid[:, smap.data_indices]
    return (data.real < 0).astype(np.uint8).reshape(-1)


def to_time_domain(grid: np.ndarray, params: LinkParams) -> np.ndarray:
    """Inverse DFT each symbol (1/sqrt(N) scaling) and prepend the cyclic prefix.

    Returns shape (n_symbols, N + cp_len).
    """
    if grid.ndim != 2 or grid.shape[1] != params.n_subcarriers:
        raise SizeMismatch(f"grid shape {grid.shape} does not match N={params.n_subcarriers}")
    # scipy.fft keeps complex64 inputs in single precision, numpy would upcast
    body = scipy.fft.ifft(grid, axis=-1)
    body *= np.sqrt(params.n_subcarriers)
    return np.concatenate([body[:, -params.cp_len:], body], axis=-1)


def from_time_domain(signal: np.ndarray, params: LinkParams) -> np.ndarray:
    """Strip the cyclic prefix and apply the forward DFT (1/sqrt(N) scaling)."""
    if signal.ndim != 2 or signal.shape[1] != params.symbol_len:
        raise SizeMismatch(
            f"signal shape {signal.shape} does not match N+cp={params.symbol_len}"
        )
    body = signal[:, params.cp_len:]
    out = scipy.fft.fft(body, axis=-1)
    out /= np.sqrt(params.n_subcarriers)
    return out
