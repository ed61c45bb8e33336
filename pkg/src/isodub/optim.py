"""Named parameter store and Adam with inverse-square-root warmup."""

from __future__ import annotations

import numpy as np

from .errors import ShapeError, TrainingStateError
from .tensor import Tensor


class ParameterStore:
    """Ordered map of named parameters plus matching Adam moment state."""

    def __init__(self):
        self.params: dict[str, Tensor] = {}
        self.moments_m: dict[str, np.ndarray] = {}
        self.moments_v: dict[str, np.ndarray] = {}
        self.step_count = 0

    def add(self, name: str, tensor: Tensor) -> Tensor:
        if name in self.params:
            raise TrainingStateError(f"duplicate parameter name: {name!r}")
        tensor.requires_grad = True
        self.params[name] = tensor
        self.moments_m[name] = np.zeros_like(tensor.data)
        self.moments_v[name] = np.zeros_like(tensor.data)
        return tensor

    def __getitem__(self, name: str) -> Tensor:
        return self.params[name]

    def __contains__(self, name: str) -> bool:
        return name in self.params

    def names(self) -> list[str]:
        return list(self.params)

    def n_values(self) -> int:
        return sum(p.size for p in self.params.values())

    def zero_grads(self):
        for p in self.params.values():
            p.grad = None

    def fill_missing_grads(self):
        """Zero-fill grads of parameters the current loss did not touch."""
        for p in self.params.values():
            if p.grad is None:
                p.grad = np.zeros_like(p.data)

    def state_arrays(self) -> dict[str, np.ndarray]:
        return {name: p.data for name, p in self.params.items()}

    def load_arrays(self, arrays: dict[str, np.ndarray]):
        for name, p in self.params.items():
            if name not in arrays:
                raise TrainingStateError(f"checkpoint is missing parameter {name!r}")
            arr = arrays[name]
            if arr.shape != p.data.shape:
                raise ShapeError(
                    f"parameter {name!r}: checkpoint shape {arr.shape} vs model {p.data.shape}"
                )
            p.data = arr.astype(p.data.dtype)
        extra = set(arrays) - set(self.params)
        if extra:
            raise TrainingStateError(f"checkpoint has unknown parameters: {sorted(extra)}")


def adam_step(
    store: ParameterStore,
    lr: float,
    betas: tuple[float, float] = (0.9, 0.98),
    eps: float = 1e-9,
):
    """One Adam update over all parameters; clears gradients afterward."""
    b1, b2 = betas
    store.step_count += 1
    t = store.step_count
    bias1 = 1.0 - b1**t
    bias2 = 1.0 - b2**t
    for name, p in store.params.items():
        if p.grad is None:
            raise TrainingStateError(f"parameter {name!r} has no gradient; run backward first")
        m = store.moments_m[name]
        v = store.moments_v[name]
        m *= b1
        m += (1.0 - b1) * p.grad
        v *= b2
        v += (1.0 - b2) * p.grad**2
        m_hat = m / bias1
        v_hat = v / bias2
        p.data -= (lr * m_hat / (np.sqrt(v_hat) + eps)).astype(p.data.dtype)
    store.zero_grads()


def warmup_inv_sqrt_lr(step: int, base_lr: float, warmup_steps: int) -> float:
    """Linear warmup to base_lr, then inverse-square-root decay."""
    step = max(step, 1)
    if warmup_steps <= 0:
        return base_lr / (step**0.5)
    return base_lr * min(step / warmup_steps, (warmup_steps / step) ** 0.5)
