"""Online linear SVM trained by Pegasos over a sliding window of recent examples.

The model keeps at most ``k`` observations. Each :meth:`PegasosModel.step`
takes one stochastic subgradient step of

    lambda/2 * ||w||^2 + 1/|A| * sum_{(x, y) in A} max(0, 1 - y <w, x>)

with ``A`` the current window and step size ``1 / (lambda * t)``.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import asdict, dataclass

import numpy as np

from .errors import DomainError, StateError


@dataclass(frozen=True)
class PegasosConfig:
    dim: int
    lam: float = 0.01
    k: int = 10
    use_projection: bool = False

    def __post_init__(self):
        if not self.lam > 0:
            raise DomainError(f"lambda must be positive, got {self.lam}")
        if int(self.k) != self.k or self.k < 1:
            raise DomainError(f"window size k must be a positive integer, got {self.k}")
        if int(self.dim) != self.dim or self.dim < 1:
            raise DomainError(f"dim must be a positive integer, got {self.dim}")


def _check_label(y) -> int:
    if y not in (1, -1):
        raise DomainError(f"binary label must be +1 or -1, got {y!r}")
    return int(y)


class PegasosModel:
    """Single-writer model; ``observe`` and ``step`` mutate in place and return self."""

    def __init__(self, config: PegasosConfig):
        self.config = config
        self.w = np.zeros(config.dim)
        self.t = 0
        self.window: deque[tuple[np.ndarray, int]] = deque(maxlen=config.k)

    def _check_x(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.config.dim,):
            raise DomainError(f"expected a vector of length {self.config.dim}, got shape {x.shape}")
        return x

    @property
    def eta(self) -> float:
        """Step size used by the most recent update (inf before any step)."""
        return math.inf if self.t == 0 else 1.0 / (self.config.lam * self.t)

    def observe(self, x, y) -> PegasosModel:
        # deque(maxlen=k) evicts the oldest entry on append
        self.window.append((self._check_x(x).copy(), _check_label(y)))
        return self

    def step(self) -> PegasosModel:
        if not self.window:
            raise StateError("cannot take a subgradient step with an empty window")
        lam = self.config.lam
        X = np.stack([x for x, _ in self.window])
        y = np.array([y for _, y in self.window], dtype=float)
        active = y * (X @ self.w) < 1.0
        grad = lam * self.w - (y[active] @ X[active]) / len(self.window)
        self.t += 1
        self.w = self.w - grad / (lam * self.t)
        if self.config.use_projection:
            norm = np.linalg.norm(self.w)
            radius = 1.0 / math.sqrt(lam)
            if norm > radius:
                self.w = self.w * (radius / norm)
        return self

    def objective(self, data) -> float:
        if not data:
            raise DomainError("objective needs at least one example")
        X = np.stack([self._check_x(x) for x, _ in data])
        y = np.array([_check_label(y) for _, y in data], dtype=float)
        hinge = np.maximum(0.0, 1.0 - y * (X @ self.w))
        return float(0.5 * self.config.lam * (self.w @ self.w) + hinge.mean())

    def margin(self, x) -> float:
        return float(self.w @ self._check_x(x))

    def predict(self, x) -> tuple[int, float]:
        m = self.margin(x)
        return (1 if m >= 0 else -1), m

    def to_dict(self) -> dict:
        return {
            "config": asdict(self.config),
            "t": self.t,
            "w": self.w.tolist(),
            "window": [{"x": x.tolist(), "y": y} for x, y in self.window],
        }

    @classmethod
    def from_dict(cls, record: dict) -> PegasosModel:
        model = cls(PegasosConfig(**record["config"]))
        model.t = int(record["t"])
        model.w = np.asarray(record["w"], dtype=float)
        for item in record["window"]:
            model.observe(item["x"], item["y"])
        return model
