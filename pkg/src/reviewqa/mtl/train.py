"""Multi-task SGD: a seeded Bernoulli draw picks the head each step."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .features import MTLExample
from .model import MTLConfig, MTLParams, example_loss_and_grads, init_params


class DivergenceError(RuntimeError):
    def __init__(self, step: int, loss: float):
        super().__init__(f"training diverged at step {step} (loss {loss})")
        self.step = step


@dataclass
class TrainConfig:
    epochs: int = 30
    lr: float = 0.1
    seed: int = 0
    task_sample_prob: float = 0.5  # probability of a span (QA) step


@dataclass
class TrainResult:
    params: MTLParams
    epoch_span_loss: list[float] = field(default_factory=list)
    epoch_subj_loss: list[float] = field(default_factory=list)


def train_mtl(
    dataset: list[MTLExample],
    model_config: MTLConfig,
    config: TrainConfig | None = None,
) -> TrainResult:
    """Plain SGD, one example per step, deterministic given the seed.

    Each step draws Bernoulli(task_sample_prob): heads, the span loss
    backpropagates through its head and the shared encoder; tails, the
    subjectivity loss does.
    """
    config = config or TrainConfig()
    if not dataset:
        raise ValueError("dataset must be non-empty")
    if not any(
        ex.span_target is not None or model_config.allow_no_answer for ex in dataset
    ):
        raise ValueError("no trainable span targets in the dataset")
    params = init_params(model_config, seed=config.seed)
    rng = np.random.default_rng(config.seed)
    result = TrainResult(params=params)
    step = 0
    for _ in range(config.epochs):
        order = rng.permutation(len(dataset))
        span_losses: list[float] = []
        subj_losses: list[float] = []
        for idx in order:
            ex = dataset[int(idx)]
            take_span = bool(rng.random() < config.task_sample_prob)
            if take_span:
                if ex.span_target is None and not model_config.allow_no_answer:
                    continue  # nothing for the span head to learn from
                loss, grads = example_loss_and_grads(
                    ex.features, params, span_target=ex.span_target
                )
                span_losses.append(loss)
            else:
                loss, grads = example_loss_and_grads(
                    ex.features, params, subj_target=ex.subj_target
                )
                subj_losses.append(loss)
            if not np.isfinite(loss):
                raise DivergenceError(step, loss)
            for name, grad in grads.items():
                if name in params.frozen:
                    continue
                params.tensors[name] -= config.lr * grad
            step += 1
        result.epoch_span_loss.append(
            float(np.mean(span_losses)) if span_losses else float("nan")
        )
        result.epoch_subj_loss.append(
            float(np.mean(subj_losses)) if subj_losses else float("nan")
        )
    return result
