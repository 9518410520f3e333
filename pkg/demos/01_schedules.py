"""Noise schedules and timestep plans.

Walks through the coefficient table behind the forward process, then
builds the sampling trajectories: the equally spaced baseline and curved
plans that keep full density in one region while skipping every P-th
step elsewhere.
"""

from pathlib import Path

from diffstream import (
    SamplingRegion,
    build_linear_schedule,
    curved_schedule,
    equally_spaced,
    export_schedule_csv,
    region_bounds,
)

out = Path(__file__).parent / "out"
out.mkdir(exist_ok=True)

# The linear beta table: beta ramps 1e-4 -> 2e-2 over 1000 steps and the
# cumulative signal coefficient alpha_bar decays toward zero.
sched = build_linear_schedule()
print(f"M = {sched.M}")
print(f"alpha_bar at tau=1:    {sched.alpha_bar[0]:.6f}  (nearly clean)")
print(f"alpha_bar at tau=500:  {sched.alpha_bar[499]:.6f}")
print(f"alpha_bar at tau=1000: {sched.alpha_bar[999]:.2e}  (pure noise)")
sched.to_csv(out / "noise_schedule.csv")

# Equal thirds of the trajectory: Final holds the low, nearly-clean taus.
bounds = region_bounds(1000)
for region in SamplingRegion:
    r = bounds.of(region)
    print(f"{region.value:>7}: tau {r.start}..{r.stop - 1}")

# The 250-step equally spaced baseline.
base = equally_spaced(1000, 250)
print(f"\nequally spaced baseline: {len(base)} steps, "
      f"{base.steps[0]} -> {base.steps[-1]}")

# Curving it: keep the focused region dense, every 3rd step elsewhere.
# The budget lands at 140 steps regardless of which region is focused.
for focus in SamplingRegion:
    plan = curved_schedule(1000, 250, focus, P=3)
    print(f"curved, {focus.value:>7} focused: {len(plan)} steps")

final_plan = curved_schedule(1000, 250, SamplingRegion.FINAL, P=3)
export_schedule_csv(final_plan, out / "curved_final.csv")
print(f"\nfirst steps: {final_plan.steps[:8]} ...")
print(f"last steps:  ... {final_plan.steps[-8:]}")
print(f"wrote {out / 'noise_schedule.csv'} and {out / 'curved_final.csv'}")
