"""Central finite-difference verification of the analytic gradients."""

from __future__ import annotations

import numpy as np

from .model import SKIP, InputFeatures, MTLParams, example_loss_and_grads


def gradient_check(
    params: MTLParams,
    features: InputFeatures,
    span_target=SKIP,
    subj_target=SKIP,
    epsilon: float = 1e-4,
) -> float:
    """Max relative error between analytic and numeric gradients.

    Perturbs every coordinate of every non-frozen parameter tensor with
    central differences.  Intended for tiny configurations; cost is two
    forward passes per parameter.
    """

    _, analytic = example_loss_and_grads(
        features, params, span_target=span_target, subj_target=subj_target
    )
    max_rel = 0.0
    for name, tensor in params.tensors.items():
        if name in params.frozen:
            continue
        grad = analytic.get(name)
        if grad is None:
            grad = np.zeros_like(tensor)
        flat = tensor.reshape(-1)
        grad_flat = np.asarray(grad).reshape(-1)
        for idx in range(flat.size):
            original = flat[idx]
            flat[idx] = original + epsilon
            plus, _ = example_loss_and_grads(
                features, params, span_target=span_target, subj_target=subj_target
            )
            flat[idx] = original - epsilon
            minus, _ = example_loss_and_grads(
                features, params, span_target=span_target, subj_target=subj_target
            )
            flat[idx] = original
            numeric = (plus - minus) / (2.0 * epsilon)
            denom = max(abs(numeric), abs(grad_flat[idx]), 1e-8)
            rel = abs(numeric - grad_flat[idx]) / denom
            max_rel = max(max_rel, rel)
    return max_rel
