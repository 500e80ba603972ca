"""Randomized inequality campaigns, end to end.

Each lemma-level fact about sigma_k and its derived matrices is wired to a
seeded sampling campaign: draw curvature vectors from the positive cone
(log-uniform, with a clustered tail to stress divided-difference limits),
evaluate the signed margin, and normalize by a problem-appropriate scale so
"violation" means the same thing across twelve orders of magnitude.

Run:  python3 demos/inequality_campaigns.py
"""

from flowlab import LEMMA_IDS, run_campaign

SAMPLES = 5000
SEED = 0

print(f"{SAMPLES} samples per suite, seed {SEED}, n = 4\n")
print(f"{'suite':16s} {'samples':>8s} {'violations':>11s} {'worst margin':>14s}")
for lemma_id in LEMMA_IDS:
    report = run_campaign(lemma_id, {"n": 4}, SAMPLES, SEED)
    print(f"{lemma_id:16s} {report.samples:8d} {report.violations:11d} "
          f"{report.worst_margin:14.3e}")

# The negative control: sigma_1^2 - 3 sigma_2 is positive on the cone for
# n = 2 but fails the admissibility condition, and the checker must say so
# with a concrete counterexample.
print("\nnegative control: F = sigma(1)^2 - 3*sigma(2), n = 2")
bad = run_campaign("condition", {"n": 2, "F": "sigma(1)^2 - 3*sigma(2)"},
                   SAMPLES, SEED)
print(f"violations: {bad.violations} / {bad.samples}")
print(f"worst margin: {bad.worst_margin:.3e}")
print(f"counterexample lambda: {bad.worst_sample['lambda']}")
