"""
A positive-unlabeled classifier in plain numpy
==============================================

Positives carry label 0, unlabeled rows are trained toward label 1, and
each step uses equally sized positive and unlabeled batches. The network's
sigmoid gives q = P(y = 1); the recorded score is p = 1 - q.
"""

import numpy as np

from trendpu.data import GaussianConfig, balanced_batches, gen_two_gaussians, make_pu_split, reveal_truth
from trendpu.model import (AdamState, ModelSpec, adam_step, backward, init_params, predict_scores,
                           pu_loss_and_grads)
from trendpu.verify import finite_difference_grad, max_relative_error

data = gen_two_gaussians(GaussianConfig(dim=20, sigma=0.5, n=1000, pi=0.5), seed=0)
pu = make_pu_split(data, n_labeled=100, seed=1)
print(f"{pu.n_labeled} labeled positives, {pu.n_unlabeled} unlabeled rows")

spec = ModelSpec(pu.dim, hidden_dims=(16,))
params = init_params(spec, np.random.default_rng(2))

# backprop agrees with central differences on a small batch
pair = next(balanced_batches(pu, 8, epoch_seed=0))
err = max_relative_error(backward(params, pair.positive_batch, pair.unlabeled_batch),
                         finite_difference_grad(params, pair.positive_batch, pair.unlabeled_batch))
print(f"gradient check: max relative error {err:.2e}")

state = AdamState.for_params(params, lr=1e-3)
x_unl = pu.features[pu.unlabeled_index]
for epoch in range(5):
    for pair in balanced_batches(pu, 64, epoch_seed=epoch):
        loss, grads = pu_loss_and_grads(params, pair.positive_batch, pair.unlabeled_batch)
        params, state = adam_step(params, grads, state)
    p = predict_scores(params, x_unl)
    print(f"epoch {epoch + 1}: last loss {loss:.4f}, mean unlabeled score {p.mean():.3f}")

# the unlabeled positives still score higher than the negatives
truth = reveal_truth(pu)[pu.unlabeled_index]
print(f"mean p on unlabeled positives {p[truth == 0].mean():.3f}, negatives {p[truth == 1].mean():.3f}")
