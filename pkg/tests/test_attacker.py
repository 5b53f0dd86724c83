"""Attack plans, jamming waveforms, calibration and injection."""

import numpy as np
import pytest

from jamlab.attacker import (
    AttackPlan,
    JamType,
    apply_attack,
    compute_sjr_scales,
    draw_attack_plan,
    inject,
    jam_signal,
    measure_sjr,
    received_jam_field,
)
from jamlab.channel import ChannelParams, ChannelRealization, draw_channel, mean_active_power
from jamlab.errors import ConfigError
from jamlab.ofdm import LinkParams, build_subcarrier_map, modulate_frame
from jamlab.channel import apply_channel

LINK = LinkParams(
    n_subcarriers=256,
    n_data_subcarriers=180,
    n_pilots=20,
    pilot_spacing=8,
    pilot_offset=4,
    cp_len=16,
    n_symbols_per_frame=6,
    n_frames=10,
)
SMAP = build_subcarrier_map(LINK)
N_SYM = LINK.n_symbols_total


def _clean(seed, n_rx=4):
    rng = np.random.default_rng(seed)
    bits = rng.integers(0, 2, (LINK.n_tx, N_SYM * len(SMAP.data_indices)))
    grids = np.stack([modulate_frame(bits[t], SMAP, LINK) for t in range(LINK.n_tx)])
    ch = draw_channel(ChannelParams(), LINK.n_tx, n_rx, LINK.n_subcarriers, rng=seed + 1)
    return apply_channel(grids, ch)


def test_absent_plan_is_all_zero():
    plan = AttackPlan.absent(4)
    assert not plan.present
    assert not plan.gamma.any()
    assert all(iv == () for iv in plan.intervals)


def test_antenna_choice_is_uniform():
    rng = np.random.default_rng(0)
    hits = np.zeros(4)
    n_draws = 10_000
    for _ in range(n_draws):
        plan = draw_attack_plan(JamType.BARRAGE, 0.0, 4, 2, N_SYM, rng)
        hits += plan.gamma
    freqs = hits / n_draws
    assert np.abs(freqs - 0.5).max() < 0.02


def test_eight_antennas_two_attacked():
    plan = draw_attack_plan(JamType.PILOT_TONE, -5.0, 8, 2, N_SYM, rng=1)
    assert plan.gamma.sum() == 2
    assert plan.n_attacked == 2


def test_interval_lengths_and_bounds():
    rng = np.random.default_rng(2)
    min_len = int(np.ceil(0.3 * N_SYM))
    for _ in range(500):
        plan = draw_attack_plan(JamType.BARRAGE, 0.0, 4, 2, N_SYM, rng)
        for r in np.flatnonzero(plan.gamma):
            (s0, s1), = plan.intervals[r]
            assert 0 <= s0 < s1 <= N_SYM
            assert min_len <= s1 - s0 <= N_SYM


def test_too_many_attacked_antennas():
    with pytest.raises(ConfigError):
        draw_attack_plan(JamType.BARRAGE, 0.0, 2, 3, N_SYM, rng=0)


def test_pilot_tone_energy_confined_to_pilot_bins():
    plan = draw_attack_plan(JamType.PILOT_TONE, -10.0, 4, 2, N_SYM, rng=3)
    jam = jam_signal(plan, SMAP, LINK.n_subcarriers, N_SYM, rng=4)
    mask = np.zeros(LINK.n_subcarriers, dtype=bool)
    mask[SMAP.pilot_indices] = True
    assert (jam[:, :, ~mask] == 0).all()
    assert (jam[:, :, mask] != 0).all()


def test_pilot_tone_requires_pilots():
    params = LinkParams(n_pilots=0, n_data_subcarriers=36, n_subcarriers=64, cp_len=8)
    empty_map = build_subcarrier_map(params)
    plan = draw_attack_plan(JamType.PILOT_TONE, 0.0, 4, 1, N_SYM, rng=5)
    with pytest.raises(ConfigError):
        jam_signal(plan, empty_map, 64, N_SYM, rng=6)


def test_barrage_at_zero_db_matches_legit_power():
    clean = _clean(10)
    plan = draw_attack_plan(JamType.BARRAGE, 0.0, 4, 2, N_SYM, rng=11)
    attacked = apply_attack(clean, plan, SMAP, _attacker_channel(12), rng=13)
    jam_part = attacked - clean
    for r in np.flatnonzero(plan.gamma):
        (s0, s1), = plan.intervals[r]
        legit = mean_active_power(clean[r], SMAP)
        jam_per_bin = np.mean(np.abs(jam_part[r, s0:s1, :]) ** 2)
        assert abs(jam_per_bin / legit - 1.0) < 0.02


def _attacker_channel(seed, n_rx=4):
    return draw_channel(ChannelParams(), 2, n_rx, LINK.n_subcarriers, rng=seed)


def test_power_concentration_ratio():
    # at equal SJR the pilot-tone jammer packs N/N_p more power per occupied bin
    clean = _clean(20)
    results = {}
    for jam_type in (JamType.BARRAGE, JamType.PILOT_TONE):
        plan = draw_attack_plan(jam_type, -5.0, 4, 1, N_SYM, rng=21)
        attacked = apply_attack(clean, plan, SMAP, _attacker_channel(22), rng=23)
        jam_part = attacked - clean
        r = int(np.flatnonzero(plan.gamma)[0])
        (s0, s1), = plan.intervals[r]
        occupied = SMAP.pilot_indices if jam_type is JamType.PILOT_TONE else slice(None)
        results[jam_type] = np.mean(np.abs(jam_part[r, s0:s1, occupied]) ** 2)
    ratio = results[JamType.PILOT_TONE] / results[JamType.BARRAGE]
    expected = LINK.n_subcarriers / LINK.n_pilots
    assert abs(ratio / expected - 1.0) < 0.05


def test_inject_absent_plan_identity():
    clean = _clean(30)
    out = inject(clean, AttackPlan.absent(4), np.zeros((2,) + clean.shape[1:]),
                 _attacker_channel(31))
    assert np.array_equal(out, clean)


def test_inject_unit_channel_full_interval():
    clean = _clean(32)
    plan = AttackPlan(
        present=True, jam_type=JamType.BARRAGE, sjr_db=0.0,
        gamma=np.array([True, False, False, False]),
        intervals=(((0, N_SYM),), (), (), ()),
        n_attacked=1,
    )
    jam = jam_signal(plan, SMAP, LINK.n_subcarriers, N_SYM, rng=33)
    unit = ChannelRealization(
        taps=np.ones((2, 4, 1), dtype=complex),
        freq_response=np.ones((2, 4, LINK.n_subcarriers), dtype=complex),
    )
    out = inject(clean, plan, jam, unit)
    assert np.allclose(out[0] - clean[0], jam.sum(axis=0))
    assert np.array_equal(out[1:], clean[1:])


def test_inject_matches_loop_oracle():
    rng = np.random.default_rng(34)
    n, s = 8, 6
    clean = rng.standard_normal((2, s, n)) + 1j * rng.standard_normal((2, s, n))
    jam = rng.standard_normal((2, s, n)) + 1j * rng.standard_normal((2, s, n))
    ch = draw_channel(ChannelParams(n_taps=2), 2, 2, n, rng=35)
    plan = AttackPlan(
        present=True, jam_type=JamType.BARRAGE, sjr_db=0.0,
        gamma=np.array([False, True]),
        intervals=((), ((2, 5),)),
        n_attacked=1,
    )
    out = inject(clean, plan, jam, ch)
    expected = clean.copy()
    for sym in range(2, 5):
        for k in range(n):
            expected[1, sym, k] += sum(
                jam[t, sym, k] * ch.freq_response[t, 1, k] for t in range(2)
            )
    assert np.abs(out - expected).max() < 1e-10


def test_outside_interval_untouched():
    clean = _clean(36)
    plan = AttackPlan(
        present=True, jam_type=JamType.BARRAGE, sjr_db=0.0,
        gamma=np.array([True, False, False, False]),
        intervals=(((10, 20),), (), (), ()),
        n_attacked=1,
    )
    attacked = apply_attack(clean, plan, SMAP, _attacker_channel(37), rng=38)
    assert np.array_equal(attacked[0, :10], clean[0, :10])
    assert np.array_equal(attacked[0, 20:], clean[0, 20:])
    assert (attacked[0, 10:20] != clean[0, 10:20]).any()


@pytest.mark.parametrize("sjr_db", [0.0, -5.0, -10.0, -15.0, -20.0])
@pytest.mark.parametrize("jam_type", [JamType.BARRAGE, JamType.PILOT_TONE])
def test_measured_sjr_hits_target(sjr_db, jam_type):
    clean = _clean(int(40 + sjr_db))
    plan = draw_attack_plan(jam_type, sjr_db, 4, 2, N_SYM, rng=int(50 - sjr_db))
    attacked = apply_attack(clean, plan, SMAP, _attacker_channel(60), rng=61)
    measured = measure_sjr(clean, attacked, plan, SMAP)
    for r in np.flatnonzero(plan.gamma):
        assert abs(measured[r] - sjr_db) <= 0.3
    assert np.isnan(measured[~plan.gamma]).all()


def test_non_attacked_antennas_bit_identical():
    clean = _clean(70)
    plan = draw_attack_plan(JamType.PILOT_TONE, -10.0, 4, 2, N_SYM, rng=71)
    attacked = apply_attack(clean, plan, SMAP, _attacker_channel(72), rng=73)
    for r in range(4):
        if not plan.gamma[r]:
            assert np.array_equal(attacked[r], clean[r])


def test_scales_make_field_power_exact():
    clean = _clean(80)
    plan = draw_attack_plan(JamType.BARRAGE, -10.0, 4, 1, N_SYM, rng=81)
    jam = jam_signal(plan, SMAP, LINK.n_subcarriers, N_SYM, rng=82)
    ch = _attacker_channel(83)
    scales = compute_sjr_scales(clean, plan, jam, ch, SMAP)
    field = received_jam_field(jam, ch)
    r = int(np.flatnonzero(plan.gamma)[0])
    (s0, s1), = plan.intervals[r]
    got = np.mean(np.abs(scales[r] * field[r, s0:s1]) ** 2)
    want = mean_active_power(clean[r], SMAP) / 10.0 ** (plan.sjr_db / 10.0)
    assert abs(got / want - 1.0) < 1e-9
