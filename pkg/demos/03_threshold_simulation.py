#!/usr/bin/env python3
"""Simulate a threshold-style stochastic net and recover its parameters.

The net says B reposts A with probability 0.8 and C with probability 0.7;
silent branches absorb the skipped reposts.  Simulating 10,000 cascades and
then enriching the bare net from the simulated log should hand the
probabilities back, which is the round-trip check for both the simulator and
the enrichment estimator.
"""

from repostminer import enrich, simulate
from repostminer.reference_nets import threshold_fspn

fspn = threshold_fspn(p_b=0.8, p_c=0.7)
print("true arc probabilities:")
for arc, p in sorted(fspn.arc_probabilities.items()):
    print(f"  {arc[0]} -> {arc[1]}: {p}")

log = simulate(fspn, n_traces=10_000, seed=42)
n_b = sum(1 for t in log if "B" in t.activities())
n_c = sum(1 for t in log if "C" in t.activities())
print(f"\nsimulated {len(log)} cascades ({log.event_count()} events)")
print(f"  share containing B: {n_b / len(log):.4f}")
print(f"  share containing C: {n_c / len(log):.4f}")

recovered = enrich(fspn.net, log)
print("\nrecovered from the simulated log:")
for arc, p in sorted(recovered.arc_probabilities.items()):
    truth = fspn.arc_probabilities[arc]
    print(f"  {arc[0]} -> {arc[1]}: {p:.4f}  (true {truth}, off by {abs(p - truth):.4f})")

print("\nrecovered delay means (seconds):")
for t, d in sorted(recovered.delay_distributions.items()):
    print(f"  {t}: {d.mean():.1f} from {len(d.samples)} samples")
