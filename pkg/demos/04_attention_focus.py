"""From attention maps to a curved schedule.

Self-attention maps captured over the frame window say which keys the
model looks at: columns near the buffer hold the most-denoised frames
(the Final region of sampling), the tail holds the noisiest (Initial).
Averaging the post-buffer mass per region picks the schedule focus.
"""

from pathlib import Path

import numpy as np

from diffstream import (
    AttentionMap,
    SamplingRegion,
    curved_from_profile,
    key_region_bounds,
    load_attention_map,
    profile_report_csv,
    region_scores,
    write_attention_map,
)

out = Path(__file__).parent / "out"
out.mkdir(exist_ok=True)

WINDOW, BUFFER = 32, 6


def synthetic_map(hot_region):
    """A window-sized map with extra mass on one key region."""
    scores = np.full((WINDOW, WINDOW), 0.1, dtype=np.float32)
    r = key_region_bounds(WINDOW, BUFFER)[hot_region]
    scores[BUFFER:, r.start:r.stop] += 5.0
    return AttentionMap(scores)


# A model that keeps attending to its most-denoised context: dense steps
# belong near the end of sampling (Final focus).
amap = synthetic_map(SamplingRegion.FINAL)
write_attention_map(amap, out / "final_heavy.iaam")
profile = region_scores(load_attention_map(out / "final_heavy.iaam"), BUFFER)
print(profile_report_csv(profile))

plan = curved_from_profile(profile, M=1000, P=3, base_steps=250)
print(f"curved plan: {len(plan)} steps, focus {plan.focus.value}\n")

# A model that tracks its noisy tail instead: Initial focus.
noisy = region_scores(synthetic_map(SamplingRegion.INITIAL), BUFFER)
print(profile_report_csv(noisy))
plan = curved_from_profile(noisy, M=1000, P=3, base_steps=250)
print(f"curved plan: {len(plan)} steps, focus {plan.focus.value}\n")

# A perfectly uniform map ties; the tie is flagged and Middle is chosen.
flat = region_scores(AttentionMap(np.full((WINDOW, WINDOW), 0.5, np.float32)), BUFFER)
plan = curved_from_profile(flat, M=1000, P=3, base_steps=250)
print(f"uniform map: focus {plan.focus.value}, meta {dict(plan.meta)}")
