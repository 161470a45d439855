"""Separable Bregman functions and the scalar nonsmooth operators built on them.

A Bregman function here is a coordinate-wise sum of scalar pieces
``j(x) = x**2 / 2 + gamma * |x - shift|`` plus the indicator of a box
``[lower, upper]``.  Every piece is 1-strongly convex, so subdifferentials
are nonempty closed intervals whose lower bound grows at least linearly,
which is what the coordinate solvers rely on.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

#: Absolute tolerance for subgradient interval membership after a
#: closed-form update (closed forms are exact up to rounding).
MEMBERSHIP_TOL = 1e-9

_KINDS = ("euclidean", "elastic_net", "shifted_elastic_net")


class BregmanError(ValueError):
    """Invalid Bregman configuration or a violated precondition."""


def shrink(x: float, lam: float) -> float:
    """Soft-thresholding ``sgn(x) * max(|x| - lam, 0)``."""
    if lam < 0:
        raise BregmanError(f"shrinkage threshold must be >= 0, got {lam}")
    if x > lam:
        return x - lam
    if x < -lam:
        return x + lam
    return 0.0


def project_box(x: float, lower: float, upper: float) -> float:
    """Clamp ``x`` to the interval ``[lower, upper]``."""
    if lower > upper:
        raise BregmanError(f"empty box [{lower}, {upper}]")
    return min(max(x, lower), upper)


def interval_project(t: float, lo: float, hi: float) -> float:
    """Nearest point of the closed interval ``[lo, hi]`` to ``t``."""
    return min(max(t, lo), hi)


def interval_dist_zero(lo: float, hi: float) -> float:
    """Distance from 0 to the interval ``[lo, hi]`` (0 if it contains 0)."""
    if lo > 0:
        return lo
    if hi < 0:
        return -hi
    return 0.0


@dataclass(frozen=True)
class ScalarBregman:
    """One separable piece ``j(x) = x^2/2 + gamma*|x - shift|`` on a box.

    ``kind`` selects the family: "euclidean" forces gamma = shift = 0,
    "elastic_net" forces shift = 0, "shifted_elastic_net" is the general
    form.  The box may be unbounded via IEEE infinities.
    """

    kind: str = "euclidean"
    gamma: float = 0.0
    shift: float = 0.0
    lower: float = -math.inf
    upper: float = math.inf

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise BregmanError(f"unknown Bregman kind {self.kind!r}")
        if self.gamma < 0:
            raise BregmanError("gamma must be >= 0")
        if self.kind == "euclidean" and self.gamma != 0:
            raise BregmanError("euclidean piece must have gamma == 0")
        if self.kind != "shifted_elastic_net" and self.shift != 0:
            raise BregmanError("only shifted_elastic_net may carry a shift")
        if self.lower > self.upper:
            raise BregmanError(f"empty box [{self.lower}, {self.upper}]")

    def in_box(self, x: float) -> bool:
        return self.lower <= x <= self.upper

    def j_value(self, x: float) -> float:
        """Value of the scalar piece, without the box indicator."""
        return 0.5 * x * x + self.gamma * abs(x - self.shift)

    def value(self, x: float) -> float:
        """Value including the box indicator (+inf outside the box)."""
        if not self.in_box(x):
            return math.inf
        return self.j_value(x)

    def j_interval(self, x: float) -> tuple[float, float]:
        """Subdifferential of the scalar piece alone, as ``(lo, hi)``."""
        if self.gamma == 0.0:
            return (x, x)
        d = x - self.shift
        if d > 0:
            g = x + self.gamma
            return (g, g)
        if d < 0:
            g = x - self.gamma
            return (g, g)
        return (x - self.gamma, x + self.gamma)

    def subdiff_interval(self, x: float) -> tuple[float, float]:
        """Subdifferential of piece + box indicator at ``x`` in the box."""
        if not self.in_box(x):
            raise BregmanError(
                f"point {x} outside box [{self.lower}, {self.upper}]"
            )
        lo, hi = self.j_interval(x)
        if x == self.upper:
            hi = math.inf
        if x == self.lower:
            lo = -math.inf
        return (lo, hi)

    def contains_subgradient(self, x: float, p: float,
                             tol: float = MEMBERSHIP_TOL) -> bool:
        lo, hi = self.subdiff_interval(x)
        return lo - tol <= p <= hi + tol

    def min_norm_subgradient(self, x: float) -> float:
        """Element of the subdifferential at ``x`` of smallest magnitude."""
        lo, hi = self.subdiff_interval(x)
        return interval_project(0.0, lo, hi)


def euclidean_piece(lower: float = -math.inf,
                    upper: float = math.inf) -> ScalarBregman:
    return ScalarBregman("euclidean", 0.0, 0.0, lower, upper)


def elastic_net_piece(gamma: float, lower: float = -math.inf,
                      upper: float = math.inf) -> ScalarBregman:
    kind = "euclidean" if gamma == 0 else "elastic_net"
    return ScalarBregman(kind, gamma, 0.0, lower, upper)


@dataclass(frozen=True)
class BregmanSpec:
    """Separable Bregman function: sum of scalar pieces plus box indicator."""

    per_coordinate: tuple[ScalarBregman, ...]
    mu: float = 1.0

    def __post_init__(self):
        if self.mu <= 0:
            raise BregmanError("mu must be > 0 for the coordinate solvers")
        object.__setattr__(self, "per_coordinate",
                           tuple(self.per_coordinate))

    @property
    def n(self) -> int:
        return len(self.per_coordinate)

    @classmethod
    def euclidean(cls, n: int, lower: float = -math.inf,
                  upper: float = math.inf) -> "BregmanSpec":
        return cls(tuple(euclidean_piece(lower, upper) for _ in range(n)))

    @classmethod
    def elastic_net(cls, n: int, gamma: float, lower: float = -math.inf,
                    upper: float = math.inf) -> "BregmanSpec":
        return cls(tuple(elastic_net_piece(gamma, lower, upper)
                         for _ in range(n)))

    @classmethod
    def shifted_elastic_net(cls, gamma: float,
                            shifts: np.ndarray) -> "BregmanSpec":
        if gamma == 0:
            return cls.euclidean(len(shifts))
        return cls(tuple(
            ScalarBregman("shifted_elastic_net", gamma, float(s))
            for s in np.asarray(shifts, dtype=float)))

    @property
    def gamma(self) -> float:
        """Common sparsity weight if all pieces share one, else error."""
        gammas = {sb.gamma for sb in self.per_coordinate}
        if len(gammas) != 1:
            raise BregmanError("pieces carry different gamma values")
        return gammas.pop()

    def value(self, x: np.ndarray) -> float:
        x = self._check_dim(x)
        return float(sum(sb.value(xi)
                         for sb, xi in zip(self.per_coordinate, x)))

    def in_box(self, x: np.ndarray) -> bool:
        x = self._check_dim(x)
        return all(sb.in_box(xi) for sb, xi in zip(self.per_coordinate, x))

    def min_norm_subgradient(self, x: np.ndarray) -> np.ndarray:
        x = self._check_dim(x)
        return np.array([sb.min_norm_subgradient(xi)
                         for sb, xi in zip(self.per_coordinate, x)])

    def contains_subgradient(self, x: np.ndarray, p: np.ndarray,
                             tol: float = MEMBERSHIP_TOL) -> bool:
        x = self._check_dim(x)
        p = self._check_dim(p)
        return all(sb.contains_subgradient(xi, pi, tol)
                   for sb, xi, pi in zip(self.per_coordinate, x, p))

    def membership_violation(self, x: np.ndarray, p: np.ndarray) -> float:
        """Largest coordinate-wise distance of ``p`` from the subdifferential."""
        x = self._check_dim(x)
        p = self._check_dim(p)
        worst = 0.0
        for sb, xi, pi in zip(self.per_coordinate, x, p):
            lo, hi = sb.subdiff_interval(xi)
            worst = max(worst, abs(pi - interval_project(pi, lo, hi)))
        return worst

    def _check_dim(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.n,):
            raise BregmanError(f"expected vector of length {self.n}, "
                               f"got shape {x.shape}")
        return x


def bregman_distance(spec: BregmanSpec, x: np.ndarray, p: np.ndarray,
                     y: np.ndarray) -> float:
    """Generalised distance ``J(y) - J(x) - <p, y - x>`` for ``p`` in dJ(x).

    Nonnegative, and at least ``mu/2 * ||y - x||^2`` by strong convexity.
    """
    x = np.asarray(x, dtype=float)
    p = np.asarray(p, dtype=float)
    y = np.asarray(y, dtype=float)
    if not spec.contains_subgradient(x, p):
        raise BregmanError("p is not a subgradient of J at x")
    return spec.value(y) - spec.value(x) - float(np.dot(p, y - x))


@dataclass
class PrimalDualState:
    """Iterate pair ``(x, p)`` with ``p`` a subgradient of J at ``x``."""

    x: np.ndarray
    p: np.ndarray
    k: int = 0

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=float).copy()
        self.p = np.asarray(self.p, dtype=float).copy()
        if self.x.shape != self.p.shape:
            raise BregmanError("x and p must have matching shapes")

    @classmethod
    def initial(cls, spec: BregmanSpec, x0: np.ndarray) -> "PrimalDualState":
        """Start from ``x0`` with the minimal-norm subgradient as ``p0``."""
        x0 = np.asarray(x0, dtype=float)
        if not spec.in_box(x0):
            raise BregmanError("x0 violates the box constraints")
        return cls(x0, spec.min_norm_subgradient(x0), 0)

    def validate(self, spec: BregmanSpec, tol: float = MEMBERSHIP_TOL):
        if not spec.in_box(self.x):
            raise BregmanError("state x left the box constraints")
        if not spec.contains_subgradient(self.x, self.p, tol):
            raise BregmanError("state p is not a subgradient of J at x")
