"""Closed-form Euclidean projections onto the constraint sets and their
Cartesian product.

Supported sets: boxes, balls, half-spaces, second-order cones of the form
{(x, t) : ||x|| <= beta * t} (last coordinate is the cone axis), the
intersection of an origin-centered ball with such a cone, and the full
space (no constraint).
"""

from dataclasses import dataclass, field

import numpy as np

from .linalg import DimensionError


def project_box(z, lower, upper):
    z = np.asarray(z, dtype=float)
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    if z.shape != lower.shape or z.shape != upper.shape:
        raise DimensionError("box projection: shape mismatch")
    if np.any(lower > upper):
        raise ValueError("box has lower > upper")
    return np.clip(z, lower, upper)


def project_ball(z, radius, center=None):
    z = np.asarray(z, dtype=float)
    if radius <= 0:
        raise ValueError("ball radius must be positive")
    d = z if center is None else z - np.asarray(center, dtype=float)
    nrm = np.linalg.norm(d)
    if nrm <= radius:
        return z.copy()
    scaled = d * (radius / nrm)
    return scaled if center is None else scaled + np.asarray(center, dtype=float)


def project_halfspace(z, normal, offset):
    z = np.asarray(z, dtype=float)
    a = np.asarray(normal, dtype=float)
    nrm2 = float(a @ a)
    if nrm2 == 0.0:
        raise ValueError("half-space normal must be nonzero")
    viol = float(a @ z) - offset
    if viol <= 0.0:
        return z.copy()
    return z - (viol / nrm2) * a


def project_soc(z, beta):
    """Projection onto {(x, t) : ||x|| <= beta * t}, t the last coordinate."""
    z = np.asarray(z, dtype=float)
    if beta <= 0:
        raise ValueError("cone ratio must be positive")
    if z.shape[0] < 2:
        raise DimensionError("cone projection needs at least 2 coordinates")
    x, t = z[:-1], z[-1]
    nx = np.linalg.norm(x)
    if nx <= beta * t:
        return z.copy()
    if beta * nx <= -t:
        return np.zeros_like(z)
    lam = (beta * nx + t) / (beta * beta + 1.0)
    out = np.empty_like(z)
    out[:-1] = x * (lam * beta / nx)
    out[-1] = lam
    return out


def project_ball_cap_cone(z, radius, beta):
    """Projection onto ball(radius, origin) intersect {||x|| <= beta t}.

    Realized as ball-projection after cone-projection; exact for an
    origin-centered ball intersected with a convex cone.
    """
    return project_ball(project_soc(z, beta), radius)


@dataclass(frozen=True)
class Box:
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "lower", np.asarray(self.lower, dtype=float))
        object.__setattr__(self, "upper", np.asarray(self.upper, dtype=float))
        if np.any(self.lower > self.upper):
            raise ValueError("box has lower > upper")

    @property
    def dim(self):
        return self.lower.shape[0]

    def project(self, z):
        return project_box(z, self.lower, self.upper)

    def contains(self, z, tol=0.0):
        return bool(np.all(z >= self.lower - tol) and np.all(z <= self.upper + tol))


@dataclass(frozen=True)
class Ball:
    radius: float
    center: np.ndarray

    def __post_init__(self):
        if self.radius <= 0:
            raise ValueError("ball radius must be positive")
        object.__setattr__(self, "center", np.asarray(self.center, dtype=float))

    @property
    def dim(self):
        return self.center.shape[0]

    def project(self, z):
        return project_ball(z, self.radius, self.center)

    def contains(self, z, tol=0.0):
        return bool(np.linalg.norm(np.asarray(z) - self.center) <= self.radius + tol)


@dataclass(frozen=True)
class HalfSpace:
    normal: np.ndarray
    offset: float

    def __post_init__(self):
        object.__setattr__(self, "normal", np.asarray(self.normal, dtype=float))
        if not np.any(self.normal):
            raise ValueError("half-space normal must be nonzero")

    @property
    def dim(self):
        return self.normal.shape[0]

    def project(self, z):
        return project_halfspace(z, self.normal, self.offset)

    def contains(self, z, tol=0.0):
        return bool(self.normal @ np.asarray(z) <= self.offset + tol)


@dataclass(frozen=True)
class SecondOrderCone:
    """{(x, t) : ||x|| <= beta * t}; `dim` counts x plus the axis coordinate."""

    beta: float
    dim: int

    def __post_init__(self):
        if self.beta <= 0:
            raise ValueError("cone ratio must be positive")
        if self.dim < 2:
            raise ValueError("cone needs at least 2 coordinates")

    def project(self, z):
        return project_soc(z, self.beta)

    def contains(self, z, tol=0.0):
        z = np.asarray(z)
        return bool(np.linalg.norm(z[:-1]) <= self.beta * z[-1] + tol)


@dataclass(frozen=True)
class BallCapCone:
    """Origin-centered ball intersected with {||x|| <= beta * t}."""

    radius: float
    beta: float
    dim: int

    def __post_init__(self):
        if self.radius <= 0 or self.beta <= 0:
            raise ValueError("radius and cone ratio must be positive")
        if self.dim < 2:
            raise ValueError("cone needs at least 2 coordinates")

    def project(self, z):
        return project_ball_cap_cone(z, self.radius, self.beta)

    def contains(self, z, tol=0.0):
        z = np.asarray(z)
        in_ball = np.linalg.norm(z) <= self.radius + tol
        in_cone = np.linalg.norm(z[:-1]) <= self.beta * z[-1] + tol
        return bool(in_ball and in_cone)


@dataclass(frozen=True)
class FullSpace:
    dim: int

    def project(self, z):
        return np.asarray(z, dtype=float).copy()

    def contains(self, z, tol=0.0):
        return True


@dataclass(frozen=True)
class ProductSet:
    """Ordered Cartesian product of sets, each owning a contiguous slice of z.

    Blocks are (set, start) pairs; starts must tile [0, dim) exactly in
    order with no gaps or overlaps.
    """

    blocks: tuple = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "blocks", tuple(self.blocks))
        pos = 0
        for s, start in self.blocks:
            if start != pos:
                raise ValueError(
                    f"product-set blocks must be contiguous: expected start {pos}, got {start}"
                )
            pos += s.dim
        object.__setattr__(self, "_dim", pos)
        # All-box products project by a single clip; this is the hot path
        # for the box-constrained benchmark.
        if self.blocks and all(isinstance(s, Box) for s, _ in self.blocks):
            lower = np.concatenate([s.lower for s, _ in self.blocks])
            upper = np.concatenate([s.upper for s, _ in self.blocks])
            object.__setattr__(self, "_clip_bounds", (lower, upper))
        else:
            object.__setattr__(self, "_clip_bounds", None)

    @classmethod
    def from_sets(cls, sets):
        blocks = []
        pos = 0
        for s in sets:
            blocks.append((s, pos))
            pos += s.dim
        return cls(tuple(blocks))

    @property
    def dim(self):
        return self._dim

    def project(self, z):
        z = np.asarray(z, dtype=float)
        if z.shape[0] != self.dim:
            raise DimensionError(
                f"product-set covers {self.dim} coordinates, vector has {z.shape[0]}"
            )
        if self._clip_bounds is not None:
            lower, upper = self._clip_bounds
            return np.clip(z, lower, upper)
        out = np.empty_like(z)
        for s, start in self.blocks:
            stop = start + s.dim
            out[start:stop] = s.project(z[start:stop])
        return out

    def contains(self, z, tol=0.0):
        z = np.asarray(z)
        return all(
            s.contains(z[start : start + s.dim], tol) for s, start in self.blocks
        )

    def is_all_fullspace(self):
        return all(isinstance(s, FullSpace) for s, _ in self.blocks)


def full_space(dim):
    """Unconstrained product set of a given dimension."""
    if dim == 0:
        return ProductSet(())
    return ProductSet.from_sets([FullSpace(dim)])


def project_product(z, product):
    return product.project(z)
