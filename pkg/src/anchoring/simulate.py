"""Synthetic scene generator with ground-truth instance ids.

Each instance keeps a fixed class, base size, and unit appearance vector
for the whole scene.  Motion is stationary or constant-velocity with
reflection at the workspace bounds.  Per-frame observations add Gaussian
noise to position and size (sizes clamped positive), spherical noise to
the appearance (renormalized to unit length), and may be dropped entirely
with a fixed probability.  Everything is driven by one seeded generator,
so equal configs produce identical scenes.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import ValidationError
from .percepts import Frame, Percept

DEFAULT_CLASSES = ("chair", "table", "monitor", "plant", "sofa", "shelf", "lamp", "box")


@dataclass(frozen=True)
class SimConfig:
    seed: int = 0
    num_frames: int = 20
    frame_period: float = 0.5          # seconds between frames
    num_instances: int = 5
    class_vocabulary: tuple[str, ...] = DEFAULT_CLASSES
    bounds: tuple[tuple[float, float], ...] = ((0.0, 10.0), (0.0, 10.0), (0.0, 2.0))
    motion: str = "stationary"         # "stationary" | "constant_velocity"
    speed_range: tuple[float, float] = (0.1, 0.5)   # m/s, constant_velocity only
    base_size_range: tuple[float, float] = (0.2, 1.0)  # per-axis extent, meters
    min_separation: float = 0.5        # minimum initial center distance, meters
    position_sigma: float = 0.05       # moderate default observation noise
    size_sigma: float = 0.01
    appearance_sigma: float = 0.1
    dropout: float = 0.0               # per-observation detection miss probability
    embedding_dim: int = 32

    def validate(self) -> None:
        if self.num_frames < 1:
            raise ValidationError(f"num_frames must be >= 1, got {self.num_frames}")
        if not self.frame_period > 0:
            raise ValidationError(f"frame_period must be > 0, got {self.frame_period}")
        if self.num_instances < 1:
            raise ValidationError(f"num_instances must be >= 1, got {self.num_instances}")
        if not self.class_vocabulary:
            raise ValidationError("class vocabulary must be non-empty")
        if len(self.bounds) != 3 or any(hi <= lo for lo, hi in self.bounds):
            raise ValidationError(f"bounds must be 3 non-empty intervals, got {self.bounds!r}")
        if self.motion not in ("stationary", "constant_velocity"):
            raise ValidationError(f"unknown motion model {self.motion!r}")
        if self.speed_range[0] < 0 or self.speed_range[1] < self.speed_range[0]:
            raise ValidationError(f"bad speed_range {self.speed_range!r}")
        if self.base_size_range[0] <= 0 or self.base_size_range[1] < self.base_size_range[0]:
            raise ValidationError(f"bad base_size_range {self.base_size_range!r}")
        if not (0.0 <= self.dropout < 1.0):
            raise ValidationError(f"dropout must lie in [0, 1), got {self.dropout}")
        for name, sigma in (
            ("position_sigma", self.position_sigma),
            ("size_sigma", self.size_sigma),
            ("appearance_sigma", self.appearance_sigma),
        ):
            if sigma < 0:
                raise ValidationError(f"{name} must be >= 0, got {sigma}")
        if self.embedding_dim < 1:
            raise ValidationError(f"embedding_dim must be >= 1, got {self.embedding_dim}")
        if self.min_separation < 0:
            raise ValidationError(f"min_separation must be >= 0, got {self.min_separation}")


@dataclass(eq=False)
class _Instance:
    instance_id: str
    class_label: str
    base_size: np.ndarray
    appearance: np.ndarray
    position: np.ndarray
    velocity: np.ndarray


_MIN_SIZE = 0.01  # meters; noisy sizes are clamped here to stay positive


def _unit_vector(rng: np.random.Generator, dim: int) -> np.ndarray:
    v = rng.normal(size=dim)
    norm = np.linalg.norm(v)
    while norm < 1e-12:
        v = rng.normal(size=dim)
        norm = np.linalg.norm(v)
    return v / norm


def _spawn_positions(cfg: SimConfig, rng: np.random.Generator) -> list[np.ndarray]:
    lows = np.array([b[0] for b in cfg.bounds])
    highs = np.array([b[1] for b in cfg.bounds])
    positions: list[np.ndarray] = []
    attempts = 0
    while len(positions) < cfg.num_instances:
        candidate = rng.uniform(lows, highs)
        attempts += 1
        if all(np.linalg.norm(candidate - p) >= cfg.min_separation for p in positions):
            positions.append(candidate)
        elif attempts > 1000 * cfg.num_instances:
            raise ValidationError(
                "could not place instances with the requested minimum separation; "
                "shrink min_separation or the instance count"
            )
    return positions


def _reflect(position: np.ndarray, velocity: np.ndarray, bounds: Sequence[tuple[float, float]]):
    # bounce off workspace walls, flipping the velocity component
    for axis, (lo, hi) in enumerate(bounds):
        if position[axis] < lo:
            position[axis] = 2 * lo - position[axis]
            velocity[axis] = -velocity[axis]
        elif position[axis] > hi:
            position[axis] = 2 * hi - position[axis]
            velocity[axis] = -velocity[axis]
        position[axis] = min(max(position[axis], lo), hi)


def generate(cfg: SimConfig) -> list[Frame]:
    """Generate one scene.  Classes are assigned round-robin through the
    vocabulary, so configs with at least as many classes as instances get
    distinctly classed objects."""
    cfg.validate()
    rng = np.random.default_rng(cfg.seed)

    positions = _spawn_positions(cfg, rng)
    instances: list[_Instance] = []
    for i in range(cfg.num_instances):
        base_size = rng.uniform(cfg.base_size_range[0], cfg.base_size_range[1], size=3)
        if cfg.motion == "constant_velocity":
            speed = rng.uniform(cfg.speed_range[0], cfg.speed_range[1])
            velocity = _unit_vector(rng, 3) * speed
        else:
            velocity = np.zeros(3)
        instances.append(
            _Instance(
                instance_id=f"inst_{i}",
                class_label=cfg.class_vocabulary[i % len(cfg.class_vocabulary)],
                base_size=base_size,
                appearance=_unit_vector(rng, cfg.embedding_dim),
                position=positions[i],
                velocity=velocity,
            )
        )

    frames: list[Frame] = []
    for k in range(cfg.num_frames):
        timestamp = k * cfg.frame_period
        percepts: list[Percept] = []
        for j, inst in enumerate(instances):
            if k > 0:
                inst.position = inst.position + inst.velocity * cfg.frame_period
                _reflect(inst.position, inst.velocity, cfg.bounds)
            dropped = rng.random() < cfg.dropout
            if dropped:
                continue
            position = inst.position + rng.normal(0.0, cfg.position_sigma, size=3) \
                if cfg.position_sigma > 0 else inst.position.copy()
            size = inst.base_size + rng.normal(0.0, cfg.size_sigma, size=3) \
                if cfg.size_sigma > 0 else inst.base_size.copy()
            size = np.maximum(size, _MIN_SIZE)
            if cfg.appearance_sigma > 0:
                noisy = inst.appearance + rng.normal(0.0, cfg.appearance_sigma, size=cfg.embedding_dim)
                norm = np.linalg.norm(noisy)
                appearance = noisy / norm if norm > 1e-12 else inst.appearance.copy()
            else:
                appearance = inst.appearance.copy()
            percepts.append(
                Percept(
                    percept_id=f"f{k:04d}_p{j}",
                    class_label=inst.class_label,
                    appearance=appearance,
                    position=position,
                    size=size,
                    timestamp=timestamp,
                    ground_truth_instance=inst.instance_id,
                )
            )
        frames.append(Frame(timestamp=timestamp, percepts=percepts))
    return frames
