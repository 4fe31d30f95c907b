"""Pinhole camera model shared by the renderer and the analysis tools.

Image coordinates are continuous pixels: x to the right, y downward, pixel
``(i, j)`` covering ``[i, i+1) x [j, j+1)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Circle:
    cx: float
    cy: float
    r: float


class Camera:
    def __init__(self, spec):
        self.spec = spec
        self.position = np.asarray(spec.position, dtype=np.float64)
        f = np.asarray(spec.look_at, dtype=np.float64) - self.position
        self.forward = f / np.linalg.norm(f)
        r = np.cross(self.forward, np.asarray(spec.up, dtype=np.float64))
        self.right = r / np.linalg.norm(r)
        self.up = np.cross(self.right, self.forward)
        self.width = int(spec.width)
        self.height = int(spec.height)
        self.tan_half = math.tan(math.radians(spec.vertical_fov) / 2.0)
        self.aspect = self.width / self.height

    def packed(self) -> np.ndarray:
        return np.concatenate([self.position, self.forward, self.right, self.up,
                               [self.tan_half, self.aspect, self.width, self.height]])

    def ray_direction(self, x: float, y: float) -> np.ndarray:
        sx = (2.0 * x / self.width - 1.0) * self.tan_half * self.aspect
        sy = (1.0 - 2.0 * y / self.height) * self.tan_half
        d = self.forward + sx * self.right + sy * self.up
        return d / np.linalg.norm(d)

    def project(self, point) -> np.ndarray:
        """Pixel coordinates of one point or an (N, 3) array of points."""
        p = np.asarray(point, dtype=np.float64) - self.position
        z = p @ self.forward
        if np.any(z <= 0):
            raise ValueError("point behind the camera")
        sx = (p @ self.right) / z
        sy = (p @ self.up) / z
        x = (sx / (self.tan_half * self.aspect) + 1.0) * 0.5 * self.width
        y = (1.0 - sy / self.tan_half) * 0.5 * self.height
        return np.stack([x, y], axis=-1)

    def sphere_silhouette(self, center, radius: float, samples: int = 360) -> Circle:
        """Least-squares circle through the projected outline of a sphere.

        The outline is an ellipse off the optical axis; for the orb it is a
        circle to well below a hundredth of a pixel.
        """
        c = np.asarray(center, dtype=np.float64)
        v = c - self.position
        dist = np.linalg.norm(v)
        if dist <= radius:
            raise ValueError("camera inside sphere")
        axis = v / dist
        helper = self.up if abs(np.dot(self.up, axis)) < 0.9 else self.right
        a = np.cross(axis, helper)
        a /= np.linalg.norm(a)
        b = np.cross(axis, a)
        half = math.asin(radius / dist)
        phi = np.linspace(0.0, 2.0 * math.pi, samples, endpoint=False)
        dirs = (math.cos(half) * axis[None, :]
                + math.sin(half) * (np.cos(phi)[:, None] * a + np.sin(phi)[:, None] * b))
        pts = self.project(self.position + dirs * dist)
        return fit_circle(pts)


def fit_circle(points) -> Circle:
    """Algebraic (Kasa) least-squares circle fit."""
    p = np.asarray(points, dtype=np.float64)
    A = np.column_stack([2 * p[:, 0], 2 * p[:, 1], np.ones(len(p))])
    rhs = (p ** 2).sum(axis=1)
    (cx, cy, k), *_ = np.linalg.lstsq(A, rhs, rcond=None)
    return Circle(float(cx), float(cy), float(math.sqrt(k + cx * cx + cy * cy)))
