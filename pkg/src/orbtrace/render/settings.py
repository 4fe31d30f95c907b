from __future__ import annotations

from dataclasses import dataclass

MIN_DEPTH = 5  # a hollow-orb chief path alone crosses four interfaces


@dataclass(frozen=True)
class RenderSettings:
    samples_per_pixel: int = 16
    max_depth: int = 16
    seed: int = 0
    gamma: float = 2.2
    strict: bool = False  # raise on non-finite radiance instead of clamping

    def __post_init__(self):
        if int(self.samples_per_pixel) != self.samples_per_pixel or self.samples_per_pixel < 1:
            raise ValueError(f"samples_per_pixel must be a positive integer, got {self.samples_per_pixel}")
        if int(self.max_depth) != self.max_depth or self.max_depth < MIN_DEPTH:
            raise ValueError(f"max_depth must be an integer >= {MIN_DEPTH}, got {self.max_depth}")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must fit in 64 bits")
        if not self.gamma > 0:
            raise ValueError("gamma must be positive")
