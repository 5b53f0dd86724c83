"""Rician MIMO multipath channels and additive receiver noise.

One channel realization is drawn per recorded sample (block fading): the
first tap carries the line-of-sight component with the configured K factor,
later taps are Rayleigh with an exponentially decaying power profile, total
tap power normalized to one so E[|H(k)|^2] = 1 on every link.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, SizeMismatch
from .ofdm import SubcarrierMap


@dataclass(frozen=True)
class ChannelParams:
    """Multipath profile: K factor, tap count and per-tap power decay in dB."""

    k_factor: float = 5.0
    n_taps: int = 8
    tap_decay_db: float = 3.0

    def __post_init__(self):
        if self.k_factor < 0:
            raise ConfigError(f"k_factor must be >= 0, got {self.k_factor}")
        if self.n_taps < 1:
            raise ConfigError(f"n_taps must be >= 1, got {self.n_taps}")


@dataclass(frozen=True)
class NoiseParams:
    """Receiver SNR: mean legitimate power per active bin over noise power per bin."""

    snr_db: float = math.inf

    def __post_init__(self):
        if math.isnan(self.snr_db):
            raise ConfigError("snr_db must not be NaN")


@dataclass(frozen=True)
class ChannelRealization:
    """Per-link taps plus their length-N frequency response."""

    taps: np.ndarray           # (n_tx, n_rx, n_taps) complex
    freq_response: np.ndarray  # (n_tx, n_rx, N) complex


def tap_power_profile(params: ChannelParams) -> np.ndarray:
    """Exponentially decaying per-tap powers, normalized to sum to 1."""
    p = 10.0 ** (-params.tap_decay_db * np.arange(params.n_taps) / 10.0)
    return p / p.sum()


def crandn(rng: np.random.Generator, shape, dtype=np.complex128) -> np.ndarray:
    """Unit-variance circular complex Gaussian samples.

    Real and imaginary parts are drawn interleaved in the matching float
    width, so the complex64 path stays in single precision end to end.
    """
    shape = (shape,) if np.isscalar(shape) else tuple(shape)
    n = int(np.prod(shape)) if shape else 1
    cdt = np.dtype(dtype)
    fdt = np.float32 if cdt == np.complex64 else np.float64
    flat = rng.standard_normal(2 * n, dtype=fdt).view(cdt)
    flat *= fdt(1.0) / np.sqrt(fdt(2.0))
    return flat.reshape(shape)


def draw_channel(
    params: ChannelParams,
    n_tx: int,
    n_rx: int,
    n_subcarriers: int,
    rng,
    dtype=np.complex128,
) -> ChannelRealization:
    """Draw one block-fading realization for an n_tx x n_rx link.

    Tap 0 is Rician: sqrt(K/(K+1)) at a uniform random phase plus a
    sqrt(1/(K+1)) scattered part, scaled by the tap-0 power. Remaining taps
    are zero-mean complex Gaussian with the decaying power profile.
    """
    if n_tx < 1 or n_rx < 1:
        raise ConfigError("antenna counts must be >= 1")
    rng = np.random.default_rng(rng)
    power = tap_power_profile(params)
    k = params.k_factor

    taps = np.zeros((n_tx, n_rx, params.n_taps), dtype=np.complex128)
    theta = rng.uniform(0.0, 2.0 * np.pi, size=(n_tx, n_rx))
    los = np.sqrt(k / (k + 1.0)) * np.exp(1j * theta)
    taps[:, :, 0] = np.sqrt(power[0]) * (los + np.sqrt(1.0 / (k + 1.0)) * crandn(rng, (n_tx, n_rx)))
    if params.n_taps > 1:
        scatter = crandn(rng, (n_tx, n_rx, params.n_taps - 1))
        taps[:, :, 1:] = scatter * np.sqrt(power[1:])

    freq = np.fft.fft(taps, n=n_subcarriers, axis=-1)
    return ChannelRealization(taps=taps.astype(dtype), freq_response=freq.astype(dtype))


def apply_channel(grids: np.ndarray, ch: ChannelRealization) -> np.ndarray:
    """Per-subcarrier mix Y_r(k) = sum_t X_t(k) H_tr(k).

    ``grids`` has shape (n_tx, n_symbols, N); the channel is constant over
    the record. Returns (n_rx, n_symbols, N).
    """
    grids = np.asarray(grids)
    n_tx, _, n = grids.shape
    if ch.freq_response.shape[0] != n_tx or ch.freq_response.shape[2] != n:
        raise SizeMismatch(
            f"channel {ch.freq_response.shape} does not match grids {grids.shape}"
        )
    return np.einsum("tsn,trn->rsn", grids, ch.freq_response)


def add_noise(
    grid: np.ndarray,
    noise: NoiseParams,
    reference_power: float,
    rng,
) -> np.ndarray:
    """Add white complex Gaussian noise at the configured SNR to all N bins.

    Per-bin noise variance is reference_power / 10^(snr_db/10); an infinite
    snr_db returns the input untouched.
    """
    if reference_power <= 0:
        raise ConfigError(f"reference_power must be > 0, got {reference_power}")
    if math.isinf(noise.snr_db):
        return grid
    rng = np.random.default_rng(rng)
    sigma2 = reference_power / 10.0 ** (noise.snr_db / 10.0)
    dtype = grid.dtype if np.issubdtype(grid.dtype, np.complexfloating) else np.complex128
    noise_grid = crandn(rng, grid.shape, dtype=dtype)
    noise_grid *= np.sqrt(sigma2)
    noise_grid += grid
    return noise_grid


def active_indices(smap: SubcarrierMap) -> np.ndarray:
    """Sorted indices of the data and pilot bins."""
    return np.sort(np.concatenate([smap.data_indices, smap.pilot_indices]))


def mean_active_power(received: np.ndarray, smap: SubcarrierMap) -> float:
    """Mean |Y|^2 over the active bins of a received grid (any leading dims)."""
    return float(np.mean(np.abs(received[..., active_indices(smap)]) ** 2))


def measure_snr(clean: np.ndarray, noisy: np.ndarray, smap: SubcarrierMap) -> float:
    """Measured SNR in dB of a noisy grid against its clean counterpart."""
    p_sig = mean_active_power(clean, smap)
    p_noise = float(np.mean(np.abs(noisy - clean) ** 2))
    return 10.0 * np.log10(p_sig / p_noise)
