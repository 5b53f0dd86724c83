"""Multi-antenna jammer: random antenna targeting, attack windows, two waveforms.

Barrage jamming fills the whole band with white complex Gaussian noise;
pilot-tone jamming puts Gaussian energy only on the pilot bins. The jammer
grid itself is drawn at unit per-bin power; the received strength is set per
attacked antenna so the measured signal-to-jamming ratio equals the target
regardless of the attacker-channel realization.

SJR convention: mean legitimate power per active bin at the attacked antenna
divided by mean jamming power per bin (over all N bins) inside the attack
window. Flat noise power per bin is the same yardstick the SNR uses, and it
makes pilot-tone jamming concentrate N/N_p times more power per occupied bin
than barrage at the same SJR.
"""

import enum
from dataclasses import dataclass

import numpy as np

from .channel import ChannelRealization, crandn, mean_active_power
from .errors import ConfigError, SizeMismatch
from .ofdm import SubcarrierMap


class JamType(enum.Enum):
    BARRAGE = "barrage"
    PILOT_TONE = "pilot_tone"


# Attack window length as a fraction of the record, drawn uniformly.
MIN_INTERVAL_FRAC = 0.3


@dataclass(frozen=True)
class AttackPlan:
    """Who gets jammed, how, how hard, and when."""

    present: bool
    jam_type: JamType | None
    sjr_db: float | None
    gamma: np.ndarray                 # (n_rx,) bool, True = antenna attacked
    intervals: tuple                  # per antenna: tuple of (start, stop) symbol ranges
    n_attacked: int
    jammer_tx: int = 2

    @staticmethod
    def absent(n_rx: int) -> "AttackPlan":
        return AttackPlan(
            present=False,
            jam_type=None,
            sjr_db=None,
            gamma=np.zeros(n_rx, dtype=bool),
            intervals=tuple(() for _ in range(n_rx)),
            n_attacked=0,
        )


def draw_attack_plan(
    jam_type: JamType,
    sjr_db: float,
    n_rx: int,
    n_attacked: int,
    n_symbols: int,
    rng,
    jammer_tx: int = 2,
) -> AttackPlan:
    """Pick attacked antennas and one attack window per antenna.

    Antennas are chosen uniformly without replacement. Each attacked antenna
    gets an independent contiguous window whose length is uniform between
    30% and 100% of the record and whose start is uniform over the fits.
    """
    if n_attacked > n_rx:
        raise ConfigError(f"cannot attack {n_attacked} of {n_rx} antennas")
    if n_attacked < 1:
        raise ConfigError("an attack plan needs at least one attacked antenna")
    rng = np.random.default_rng(rng)
    chosen = rng.choice(n_rx, size=n_attacked, replace=False)
    gamma = np.zeros(n_rx, dtype=bool)
    gamma[chosen] = True

    min_len = max(1, int(np.ceil(MIN_INTERVAL_FRAC * n_symbols)))
    intervals = []
    for r in range(n_rx):
        if not gamma[r]:
            intervals.append(())
            continue
        length = int(rng.integers(min_len, n_symbols + 1))
        start = int(rng.integers(0, n_symbols - length + 1))
        intervals.append(((start, start + length),))
    return AttackPlan(
        present=True,
        jam_type=jam_type,
        sjr_db=float(sjr_db),
        gamma=gamma,
        intervals=tuple(intervals),
        n_attacked=n_attacked,
        jammer_tx=jammer_tx,
    )


def jam_signal(
    plan: AttackPlan,
    smap: SubcarrierMap,
    n_subcarriers: int,
    n_symbols: int,
    rng,
    dtype=np.complex128,
) -> np.ndarray:
    """Draw the jammer's frequency grid, one layer per jammer antenna.

    Occupied bins carry independent unit-variance complex Gaussian symbols:
    every bin for barrage, only the pilot bins for pilot-tone jamming.
    Returns (jammer_tx, n_symbols, N).
    """
    if not plan.present:
        raise ConfigError("jam_signal called with an absent-attacker plan")
    rng = np.random.default_rng(rng)
    shape = (plan.jammer_tx, n_symbols, n_subcarriers)
    if plan.jam_type is JamType.BARRAGE:
        return crandn(rng, shape, dtype=dtype)
    if plan.jam_type is JamType.PILOT_TONE:
        if len(smap.pilot_indices) == 0:
            raise ConfigError("pilot-tone jamming requires a non-empty pilot set")
        grid = np.zeros(shape, dtype=dtype)
        sub = (plan.jammer_tx, n_symbols, len(smap.pilot_indices))
        grid[:, :, smap.pilot_indices] = crandn(rng, sub, dtype=dtype)
        return grid
    raise ConfigError(f"unknown jam type {plan.jam_type!r}")


def _interval_rows(intervals) -> np.ndarray:
    if not intervals:
        return np.empty(0, dtype=np.int64)
    return np.concatenate([np.arange(s, e, dtype=np.int64) for s, e in intervals])


def received_jam_field(jam: np.ndarray, attacker_channel: ChannelRealization) -> np.ndarray:
    """Jamming as seen at each receive antenna: sum_t J_t(k) H^a_tr(k)."""
    if jam.shape[0] != attacker_channel.freq_response.shape[0]:
        raise SizeMismatch("jammer antenna count does not match the attacker channel")
    return np.einsum("tsn,trn->rsn", jam, attacker_channel.freq_response)


def compute_sjr_scales(
    clean: np.ndarray,
    plan: AttackPlan,
    jam: np.ndarray,
    attacker_channel: ChannelRealization,
    smap: SubcarrierMap,
    field: np.ndarray | None = None,
) -> np.ndarray:
    """Per-antenna amplitude scales that pin the received SJR to plan.sjr_db.

    The legitimate reference is the antenna's mean received power per active
    bin over the whole record; the jam field is measured inside the antenna's
    attack window over all N bins. A precomputed ``field`` (from
    received_jam_field) avoids recomputing the channel product.
    """
    if field is None:
        field = received_jam_field(jam, attacker_channel)
    scales = np.ones(len(plan.gamma))
    target_ratio = 10.0 ** (plan.sjr_db / 10.0)
    for r in np.flatnonzero(plan.gamma):
        rows = _interval_rows(plan.intervals[r])
        p_ref = mean_active_power(clean[r], smap)
        q_meas = float(np.mean(np.abs(field[r, rows, :]) ** 2))
        q_target = p_ref / target_ratio
        scales[r] = np.sqrt(q_target / q_meas)
    return scales


def inject(
    received: np.ndarray,
    plan: AttackPlan,
    jam: np.ndarray,
    attacker_channel: ChannelRealization,
    scales: np.ndarray | None = None,
    field: np.ndarray | None = None,
) -> np.ndarray:
    """Add the attacker's contribution inside each attacked antenna's window.

    Non-attacked antennas and symbols outside the window are returned
    bit-identical. ``scales`` (default all ones) multiplies the jam field
    per receive antenna.
    """
    received = np.asarray(received)
    n_rx = received.shape[0]
    if len(plan.gamma) != n_rx:
        raise SizeMismatch(f"plan covers {len(plan.gamma)} antennas, grid has {n_rx}")
    if jam.shape[1:] != received.shape[1:]:
        raise SizeMismatch(f"jam grid {jam.shape} does not match received {received.shape}")
    if not plan.present:
        return received.copy()

    if field is None:
        field = received_jam_field(jam, attacker_channel)
    if scales is None:
        scales = np.ones(n_rx)
    out = received.copy()
    for r in np.flatnonzero(plan.gamma):
        for s0, s1 in plan.intervals[r]:
            out[r, s0:s1, :] += (scales[r] * field[r, s0:s1, :]).astype(out.dtype, copy=False)
    return out


def apply_attack(
    clean: np.ndarray,
    plan: AttackPlan,
    smap: SubcarrierMap,
    attacker_channel: ChannelRealization,
    rng,
) -> np.ndarray:
    """Full attacker path: draw the jam grid, calibrate it, inject it."""
    if not plan.present:
        return clean.copy()
    n_rx, n_symbols, n = clean.shape
    jam = jam_signal(plan, smap, n, n_symbols, rng, dtype=clean.dtype)
    field = received_jam_field(jam, attacker_channel)
    scales = compute_sjr_scales(clean, plan, jam, attacker_channel, smap, field=field)
    return inject(clean, plan, jam, attacker_channel, scales, field=field)


def measure_sjr(
    clean: np.ndarray,
    attacked: np.ndarray,
    plan: AttackPlan,
    smap: SubcarrierMap,
) -> np.ndarray:
    """Measured per-antenna SJR in dB (NaN for antennas that were not attacked)."""
    out = np.full(len(plan.gamma), np.nan)
    jam_part = attacked - clean
    for r in np.flatnonzero(plan.gamma):
        rows = _interval_rows(plan.intervals[r])
        p_ref = mean_active_power(clean[r], smap)
        q = float(np.mean(np.abs(jam_part[r, rows, :]) ** 2))
        out[r] = 10.0 * np.log10(p_ref / q)
    return out
