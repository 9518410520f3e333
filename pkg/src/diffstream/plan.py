"""Discrete sampling trajectories.

Two families are built here: equally spaced baselines, and curved
schedules that keep full step density inside one region of the diffusion
trajectory while non-focused regions retain only every P-th step. The
trajectory splits into three contiguous regions: Initial (timesteps near
M, high noise), Middle, and Final (timesteps near 1, nearly clean).

Frozen construction rules:

* Region sizes come from the largest-remainder method; exact remainder
  ties are resolved in favour of Final, then Middle, then Initial.
* Non-focused regions are decimated counting from their high-noise end,
  so the first retained step of every region is its boundary step.
* The endpoints t_1 = M and t_n = 1 are always retained, even when
  decimation would drop them.
* Focus ties resolve Middle over Final over Initial.

All functions are pure over immutable inputs.
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import Mapping, Sequence

import numpy as np

from .errors import InvalidCount, InvalidFractions, InvalidRange, InvalidSkip

DEFAULT_FRACTIONS = (1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0)
DEFAULT_BASE_STEPS = 250
DEFAULT_SKIP_FACTOR = 3


class SamplingRegion(Enum):
    """Contiguous thirds of the sampling trajectory."""

    INITIAL = "initial"
    MIDDLE = "middle"
    FINAL = "final"


@dataclass(frozen=True)
class RegionBounds:
    """Half-open timestep ranges for the three regions (Final holds the lowest taus)."""

    initial: range
    middle: range
    final: range

    def of(self, region: SamplingRegion) -> range:
        return getattr(self, region.value)

    def region_of(self, tau: int) -> SamplingRegion:
        for region in SamplingRegion:
            if tau in self.of(region):
                return region
        raise InvalidCount(f"tau {tau} outside the partitioned range")


@dataclass(frozen=True)
class TimestepSchedule:
    """Strictly decreasing timestep subsequence with region metadata.

    ``steps[0]`` is the trajectory start M and ``steps[-1]`` is 1;
    ``regions[k]`` labels the region of ``steps[k]``.
    """

    steps: tuple[int, ...]
    regions: tuple[SamplingRegion, ...]
    skip_factor: int = 1
    focus: SamplingRegion | None = None
    meta: Mapping[str, object] = field(default_factory=dict)

    def __post_init__(self):
        if len(self.steps) < 1 or len(self.steps) != len(self.regions):
            raise InvalidCount("steps and regions must be equal-length and nonempty")
        arr = np.asarray(self.steps)
        if np.any(np.diff(arr) >= 0):
            raise InvalidCount("steps must be strictly decreasing")
        if self.steps[-1] != 1:
            raise InvalidCount("schedule must terminate at tau = 1")
        if self.skip_factor < 1:
            raise InvalidSkip(f"skip factor must be >= 1, got {self.skip_factor}")

    def __len__(self) -> int:
        return len(self.steps)

    @property
    def start(self) -> int:
        """Trajectory start, t_1 = M."""
        return self.steps[0]

    def region_of(self, tau: int) -> SamplingRegion:
        try:
            return self.regions[self.steps.index(tau)]
        except ValueError:
            raise InvalidCount(f"tau {tau} is not in this schedule") from None


def split_sizes(total: int, fractions: Sequence[float]) -> tuple[int, int, int]:
    """Largest-remainder split of `total` into (initial, middle, final) sizes.

    Remainder ties go to Final, then Middle, then Initial. Each size is
    within one of ``total * fraction``.
    """
    fr = np.asarray(fractions, dtype=np.float64)
    if fr.shape != (3,):
        raise InvalidFractions(f"need exactly three fractions, got {fractions!r}")
    if np.any(fr <= 0.0):
        raise InvalidFractions(f"fractions must be positive, got {fractions!r}")
    if abs(float(fr.sum()) - 1.0) > 1e-9:
        raise InvalidFractions(f"fractions must sum to 1, got sum {float(fr.sum())!r}")
    raw = fr * total
    sizes = np.floor(raw).astype(int)
    remainder = total - int(sizes.sum())
    # stable sort on (-fractional part, -index): index 2 is Final
    order = sorted(range(3), key=lambda i: (-(raw[i] - sizes[i]), -i))
    for i in range(remainder):
        sizes[order[i]] += 1
    return int(sizes[0]), int(sizes[1]), int(sizes[2])


def region_bounds(M: int, fractions: Sequence[float] = DEFAULT_FRACTIONS) -> RegionBounds:
    """Partition [1..M] into Final (lowest taus), Middle, Initial contiguous ranges."""
    if M < 1:
        raise InvalidCount(f"M must be >= 1, got {M}")
    s_init, s_mid, s_fin = split_sizes(M, fractions)
    return RegionBounds(
        final=range(1, 1 + s_fin),
        middle=range(1 + s_fin, 1 + s_fin + s_mid),
        initial=range(1 + s_fin + s_mid, M + 1),
    )


def _rounded_linspace(M: int, n: int) -> np.ndarray:
    steps = np.rint(np.linspace(M, 1, n)).astype(int)
    if np.unique(steps).size != steps.size:
        raise InvalidCount(f"rounded trajectory from {M} in {n} steps has duplicates")
    return steps


def equally_spaced(M: int, n: int) -> TimestepSchedule:
    """`n` timesteps rounded from the linear interpolation of M down to 1."""
    if not 2 <= n <= M:
        raise InvalidCount(f"need 2 <= n <= M, got n={n}, M={M}")
    steps = _rounded_linspace(M, n)
    bounds = region_bounds(M, DEFAULT_FRACTIONS)
    regions = tuple(bounds.region_of(int(t)) for t in steps)
    return TimestepSchedule(steps=tuple(int(t) for t in steps), regions=regions)


def _decimate(
    base: np.ndarray,
    focus: SamplingRegion,
    P: int,
    fractions: Sequence[float],
) -> tuple[tuple[int, ...], tuple[SamplingRegion, ...]]:
    """Keep the focused block of `base` whole, every P-th step elsewhere."""
    s_init, s_mid, s_fin = split_sizes(len(base), fractions)
    blocks = {
        SamplingRegion.INITIAL: base[:s_init],
        SamplingRegion.MIDDLE: base[s_init:s_init + s_mid],
        SamplingRegion.FINAL: base[s_init + s_mid:],
    }
    kept: list[int] = []
    regions: list[SamplingRegion] = []
    for region in (SamplingRegion.INITIAL, SamplingRegion.MIDDLE, SamplingRegion.FINAL):
        block = blocks[region]
        sel = block if region is focus else block[::P]
        keep = {int(t) for t in sel}
        # endpoints survive decimation unconditionally
        if len(block) and int(base[0]) in (int(block[0]), int(block[-1])):
            keep.add(int(base[0]))
        if len(block) and int(base[-1]) in (int(block[0]), int(block[-1])):
            keep.add(int(base[-1]))
        for t in sorted(keep, reverse=True):
            kept.append(t)
            regions.append(region)
    return tuple(kept), tuple(regions)


def region_focused(
    M: int,
    focus: SamplingRegion,
    P: int,
    fractions: Sequence[float] = DEFAULT_FRACTIONS,
) -> TimestepSchedule:
    """Curve the full trajectory M..1: focused region dense, others every P-th step."""
    return curved_schedule(M, M, focus, P, fractions)


def curved_schedule(
    M: int,
    base_steps: int,
    focus: SamplingRegion,
    P: int,
    fractions: Sequence[float] = DEFAULT_FRACTIONS,
) -> TimestepSchedule:
    """Curved schedule over an equally spaced `base_steps`-long base mapped onto [1..M].

    With ``base_steps == M`` the base is the raw trajectory M..1.
    """
    if P < 1:
        raise InvalidSkip(f"skip factor must be >= 1, got {P}")
    if M < 3:
        raise InvalidCount(f"need M >= 3 to partition into regions, got {M}")
    if not 2 <= base_steps <= M:
        raise InvalidCount(f"need 2 <= base_steps <= M, got {base_steps}")
    base = _rounded_linspace(M, base_steps)
    steps, regions = _decimate(base, focus, P, fractions)
    return TimestepSchedule(
        steps=steps, regions=regions, skip_factor=P, focus=focus,
    )


def focus_from_scores(
    score_initial: float, score_middle: float, score_final: float
) -> tuple[SamplingRegion, bool]:
    """Argmax region of the three scores and whether it was an exact tie.

    Ties resolve Middle over Final over Initial.
    """
    scores = {
        SamplingRegion.MIDDLE: score_middle,
        SamplingRegion.FINAL: score_final,
        SamplingRegion.INITIAL: score_initial,
    }
    best = max(scores.values())
    tied = sum(1 for v in scores.values() if v == best) > 1
    for region, value in scores.items():
        if value == best:
            return region, tied
    raise AssertionError("unreachable")


def curved_from_profile(
    profile,
    M: int,
    P: int,
    fractions: Sequence[float] = DEFAULT_FRACTIONS,
    base_steps: int | None = None,
) -> TimestepSchedule:
    """Curved schedule focused on the region the attention profile scores highest.

    `profile` needs ``score_initial``, ``score_middle`` and ``score_final``
    attributes. An all-zero profile is degenerate: the result falls back to
    an equally spaced schedule of the same length, flagged in ``meta``.
    Exact ties are flagged in ``meta`` and resolve to Middle.
    """
    scores = (profile.score_initial, profile.score_middle, profile.score_final)
    if any(not np.isfinite(s) or s < 0.0 for s in scores):
        raise InvalidRange(f"profile scores must be finite and nonnegative, got {scores}")
    if base_steps is None:
        base_steps = M
    if all(s == 0.0 for s in scores):
        fallback = curved_schedule(M, base_steps, SamplingRegion.MIDDLE, P, fractions)
        sched = equally_spaced(M, len(fallback))
        return TimestepSchedule(
            steps=sched.steps,
            regions=sched.regions,
            skip_factor=P,
            focus=None,
            meta={"degenerate_profile": True},
        )
    focus, tied = focus_from_scores(*scores)
    sched = curved_schedule(M, base_steps, focus, P, fractions)
    if tied:
        return TimestepSchedule(
            steps=sched.steps,
            regions=sched.regions,
            skip_factor=P,
            focus=focus,
            meta={"tie": True},
        )
    return sched


def export_schedule_csv(tsched: TimestepSchedule, path) -> None:
    """Write ``index,tau,region`` rows, index counting from 1."""
    with open(path, "w", encoding="ascii") as fh:
        fh.write("index,tau,region\n")
        for k, (tau, region) in enumerate(zip(tsched.steps, tsched.regions), start=1):
            fh.write(f"{k},{tau},{region.value}\n")


def import_schedule_csv(path) -> TimestepSchedule:
    """Read a schedule written by :func:`export_schedule_csv`."""
    steps: list[int] = []
    regions: list[SamplingRegion] = []
    with open(path, "r", encoding="ascii") as fh:
        header = fh.readline().strip()
        if header != "index,tau,region":
            raise InvalidCount(f"unexpected schedule CSV header: {header!r}")
        for line in fh:
            line = line.strip()
            if not line:
                continue
            _, tau, region = line.split(",")
            steps.append(int(tau))
            regions.append(SamplingRegion(region))
    return TimestepSchedule(steps=tuple(steps), regions=tuple(regions))
