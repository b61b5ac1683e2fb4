"""Constant-speed ring highway: vehicles wrap around at the segment end."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

KMH = 1.0 / 3.6


@dataclass(frozen=True)
class HighwayConfig:
    length: float = 1000.0
    lane_count: int = 3
    lane_width: float = 5.0
    vehicle_count: int = 150
    speed_min: float = 50.0  # km/h
    speed_max: float = 130.0  # km/h

    def __post_init__(self):
        if self.length <= 0:
            raise ValueError("highway length must be > 0")
        if self.lane_count < 1:
            raise ValueError("lane_count must be >= 1")
        if self.vehicle_count < 0:
            raise ValueError("vehicle_count must be >= 0")
        if self.speed_min > self.speed_max:
            raise ValueError("speed_min must not exceed speed_max")


@dataclass(frozen=True)
class Pose:
    lane: int
    x: float
    speed: float  # m/s


def init_fleet(config: HighwayConfig, rng: np.random.Generator) -> list[Pose]:
    """Round-robin lanes, uniform position and uniform speed."""
    n = config.vehicle_count
    xs = rng.uniform(0.0, config.length, size=n)
    speeds = rng.uniform(config.speed_min * KMH, config.speed_max * KMH, size=n)
    return [Pose(i % config.lane_count, float(x) % config.length, float(v)) for i, (x, v) in enumerate(zip(xs, speeds))]


def advance(pose: Pose, dt: float, length: float) -> Pose:
    if dt < 0:
        raise ValueError("dt must be >= 0")
    return Pose(pose.lane, math.fmod(pose.x + pose.speed * dt, length), pose.speed)


def ring_gap(a: float, b: float, length: float) -> float:
    d = abs(a - b) % length
    return min(d, length - d)


def distance(a: Pose, b: Pose, config: HighwayConfig) -> float:
    dx = ring_gap(a.x, b.x, config.length)
    dy = config.lane_width * abs(a.lane - b.lane)
    return math.hypot(dx, dy)


def distance_matrix(x: np.ndarray, lane: np.ndarray, config: HighwayConfig) -> np.ndarray:
    """Pairwise ring distances for the whole fleet (vectorised ``distance``)."""
    dx = np.abs(x[:, None] - x[None, :]) % config.length
    dx = np.minimum(dx, config.length - dx)
    dy = config.lane_width * np.abs(lane[:, None] - lane[None, :])
    return np.hypot(dx, dy)
