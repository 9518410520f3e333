"""Timestep plans: baselines, region partitioning, curved decimation."""

import math

import numpy as np
import pytest

from diffstream import (
    AttentionProfile,
    InvalidCount,
    InvalidFractions,
    InvalidSkip,
    SamplingRegion,
    TimestepSchedule,
    curved_from_profile,
    curved_schedule,
    equally_spaced,
    export_schedule_csv,
    focus_from_scores,
    import_schedule_csv,
    region_bounds,
    region_focused,
    split_sizes,
)

THIRDS = (1 / 3, 1 / 3, 1 / 3)


def reference_sizes(total, fractions):
    """Largest-remainder allocation, ties to Final then Middle then Initial."""
    raw = [f * total for f in fractions]
    sizes = [math.floor(r) for r in raw]
    remainder = total - sum(sizes)
    order = sorted(range(3), key=lambda i: (-(raw[i] - sizes[i]), -i))
    for i in range(remainder):
        sizes[order[i]] += 1
    return tuple(sizes)


def reference_curved_length(base_len, fractions, focus, P):
    """Direct counting of kept base positions, including forced endpoints."""
    s_init, s_mid, s_fin = reference_sizes(base_len, fractions)
    blocks = {
        SamplingRegion.INITIAL: list(range(0, s_init)),
        SamplingRegion.MIDDLE: list(range(s_init, s_init + s_mid)),
        SamplingRegion.FINAL: list(range(s_init + s_mid, base_len)),
    }
    total = 0
    for region, block in blocks.items():
        kept = set(block) if region is focus else set(block[::P])
        if 0 in block:
            kept.add(0)
        if base_len - 1 in block:
            kept.add(base_len - 1)
        total += len(kept)
    return total


# -- equally spaced ----------------------------------------------------------

def test_equally_spaced_examples():
    assert equally_spaced(1000, 10).steps == (1000, 889, 778, 667, 556, 445, 334, 223, 112, 1)
    assert equally_spaced(5, 5).steps == (5, 4, 3, 2, 1)
    assert equally_spaced(12, 4).steps == (12, 8, 5, 1)


def test_equally_spaced_invalid_counts():
    with pytest.raises(InvalidCount):
        equally_spaced(10, 11)
    with pytest.raises(InvalidCount):
        equally_spaced(10, 1)


# -- region bounds -----------------------------------------------------------

def test_region_bounds_examples():
    b = region_bounds(12, THIRDS)
    assert (b.initial, b.middle, b.final) == (range(9, 13), range(5, 9), range(1, 5))
    b = region_bounds(10, (0.5, 0.3, 0.2))
    assert (b.initial, b.middle, b.final) == (range(6, 11), range(3, 6), range(1, 3))
    b = region_bounds(3, THIRDS)
    assert all(len(b.of(r)) == 1 for r in SamplingRegion)


def test_region_bounds_partition_property():
    rng = np.random.default_rng(17)
    for _ in range(300):
        M = int(rng.integers(3, 400))
        raw = rng.random(3) + 0.02
        fr = tuple(raw / raw.sum())
        b = region_bounds(M, fr)
        covered = list(b.final) + list(b.middle) + list(b.initial)
        assert covered == list(range(1, M + 1))
        for r, f in zip((b.initial, b.middle, b.final), fr):
            assert abs(len(r) - M * f) <= 1


def test_split_sizes_remainder_ties_favor_final():
    assert split_sizes(250, THIRDS) == (83, 83, 84)
    assert split_sizes(5, THIRDS) == (1, 2, 2)


def test_invalid_fractions():
    with pytest.raises(InvalidFractions):
        split_sizes(10, (0.5, 0.5, 0.5))
    with pytest.raises(InvalidFractions):
        split_sizes(10, (0.0, 0.5, 0.5))
    with pytest.raises(InvalidFractions):
        split_sizes(10, (0.5, 0.5))


# -- curved schedules --------------------------------------------------------

def test_region_focused_example_12():
    t = region_focused(12, SamplingRegion.FINAL, 2, THIRDS)
    assert t.steps == (12, 10, 8, 6, 4, 3, 2, 1)
    assert t.focus is SamplingRegion.FINAL
    assert t.skip_factor == 2


def test_skip_factor_one_keeps_everything():
    for focus in SamplingRegion:
        t = region_focused(40, focus, 1, THIRDS)
        assert t.steps == tuple(range(40, 0, -1))


def test_region_focused_250_step_budget():
    t = region_focused(250, SamplingRegion.FINAL, 3, THIRDS)
    assert len(t) == 140
    assert reference_curved_length(250, THIRDS, SamplingRegion.FINAL, 3) == 140


def test_curved_on_mapped_base_matches_reference_count():
    for focus in SamplingRegion:
        t = curved_schedule(1000, 250, focus, 3, THIRDS)
        assert len(t) == reference_curved_length(250, THIRDS, focus, 3) == 140


def test_invalid_skip():
    with pytest.raises(InvalidSkip):
        region_focused(12, SamplingRegion.FINAL, 0, THIRDS)


def test_schedule_invariants_random_cases():
    rng = np.random.default_rng(23)
    for _ in range(1000):
        M = int(rng.integers(3, 400))
        P = int(rng.integers(1, 8))
        raw = rng.random(3) + 0.02
        fr = tuple(raw / raw.sum())
        focus = list(SamplingRegion)[rng.integers(3)]
        t = curved_schedule(M, M, focus, P, fr)
        arr = np.asarray(t.steps)
        assert arr[0] == M and arr[-1] == 1
        assert np.all(np.diff(arr) < 0)
        assert np.all((arr >= 1) & (arr <= M))
        assert len(set(t.steps)) == len(t.steps)
        assert len(t) == reference_curved_length(M, fr, focus, P)


def test_focused_region_is_never_decimated():
    t = curved_schedule(300, 300, SamplingRegion.MIDDLE, 4, THIRDS)
    middle = [tau for tau, r in zip(t.steps, t.regions) if r is SamplingRegion.MIDDLE]
    assert np.all(np.diff(middle) == -1)


def test_monotone_budget_in_skip_factor():
    rng = np.random.default_rng(29)
    for _ in range(100):
        M = int(rng.integers(6, 300))
        raw = rng.random(3) + 0.05
        fr = tuple(raw / raw.sum())
        focus = list(SamplingRegion)[rng.integers(3)]
        lengths = [len(curved_schedule(M, M, focus, P, fr)) for P in range(1, 9)]
        assert all(a >= b for a, b in zip(lengths, lengths[1:]))


# -- focus recommendation ----------------------------------------------------

def test_focus_from_scores_and_ties():
    assert focus_from_scores(0.1, 0.2, 0.7) == (SamplingRegion.FINAL, False)
    assert focus_from_scores(0.7, 0.2, 0.1) == (SamplingRegion.INITIAL, False)
    assert focus_from_scores(1.0, 1.0, 1.0) == (SamplingRegion.MIDDLE, True)
    # Middle beats Final beats Initial on exact ties
    assert focus_from_scores(0.5, 0.0, 0.5) == (SamplingRegion.FINAL, True)
    assert focus_from_scores(0.5, 0.5, 0.0) == (SamplingRegion.MIDDLE, True)


def test_curved_from_profile_matches_region_focused():
    profile = AttentionProfile(score_initial=0.05, score_middle=0.05, score_final=0.9)
    t = curved_from_profile(profile, 120, 2, THIRDS)
    assert t.steps == region_focused(120, SamplingRegion.FINAL, 2, THIRDS).steps

    noisy = AttentionProfile(score_initial=0.9, score_middle=0.05, score_final=0.05)
    t = curved_from_profile(noisy, 120, 2, THIRDS)
    assert t.steps == region_focused(120, SamplingRegion.INITIAL, 2, THIRDS).steps


def test_curved_from_profile_tie_flagged():
    uniform = AttentionProfile(1 / 3, 1 / 3, 1 / 3)
    t = curved_from_profile(uniform, 90, 3, THIRDS)
    assert t.focus is SamplingRegion.MIDDLE
    assert t.meta.get("tie") is True


def test_curved_from_profile_degenerate_falls_back_to_equal():
    zero = AttentionProfile(0.0, 0.0, 0.0)
    t = curved_from_profile(zero, 90, 3, THIRDS)
    expected_len = len(region_focused(90, SamplingRegion.MIDDLE, 3, THIRDS))
    assert len(t) == expected_len
    assert t.focus is None
    assert t.meta.get("degenerate_profile") is True
    assert t.steps == equally_spaced(90, expected_len).steps


# -- serialization -----------------------------------------------------------

def test_schedule_csv_round_trip(tmp_path):
    t = curved_schedule(200, 100, SamplingRegion.INITIAL, 2, (0.4, 0.3, 0.3))
    path = tmp_path / "plan.csv"
    export_schedule_csv(t, path)
    back = import_schedule_csv(path)
    assert back.steps == t.steps
    assert back.regions == t.regions


def test_schedule_validation():
    with pytest.raises(InvalidCount):
        TimestepSchedule(steps=(5, 5, 1), regions=(SamplingRegion.INITIAL,) * 3)
    with pytest.raises(InvalidCount):
        TimestepSchedule(steps=(5, 3, 2), regions=(SamplingRegion.INITIAL,) * 3)
