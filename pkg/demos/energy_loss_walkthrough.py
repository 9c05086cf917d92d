"""How the energy loss behaves on a handful of hand-written logit vectors.

The loss is negative exactly when the target class has the strictly largest
logit, and adding a constant to every logit leaves it unchanged.
"""
import numpy as np

from epruning.energy import EnergySample, GibbsParams, energy_loss, gibbs_probabilities

cases = [
    ("confident and right", [4.0, 0.5, -1.0], 0),
    ("confident and wrong", [4.0, 0.5, -1.0], 2),
    ("tie at the top", [2.0, 2.0, 0.0], 0),
    ("barely right", [1.01, 1.0, 0.0], 0),
]

for label, logits, target in cases:
    sample = EnergySample(np.array(logits), target)
    shifted = EnergySample(np.array(logits) + 37.5, target)
    print(f"{label:22s} E = {energy_loss(sample):+.3f}   shifted E = {energy_loss(shifted):+.3f}")

# the Gibbs distribution over class energies; beta=1 is softmax
sample = EnergySample(np.array([4.0, 0.5, -1.0]), 0)
for beta in (0.25, 1.0, 4.0):
    probs = gibbs_probabilities(sample, GibbsParams(beta))
    print(f"beta={beta:<5} p = {np.round(probs, 4)}")
