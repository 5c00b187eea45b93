"""Space-filling initial designs on the unit hypercube."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import pdist


@dataclass(frozen=True)
class Design:
    """A set of n points in [0, 1]^d."""

    points: np.ndarray

    def __post_init__(self) -> None:
        self.points.setflags(write=False)

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def d(self) -> int:
        return self.points.shape[1]

    def min_distance(self) -> float:
        """Smallest pairwise Euclidean distance (inf for a single point)."""
        if self.n < 2:
            return float("inf")
        return float(pdist(self.points).min())


def latin_hypercube(n: int, d: int, rng: np.random.Generator) -> Design:
    """Latin hypercube sample: one point per axis-aligned stratum.

    Each dimension is divided into n equal strata; a random permutation
    assigns strata to points and the point is placed uniformly inside its
    stratum (not at the centre).
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if d < 1:
        raise ValueError(f"d must be >= 1, got {d}")
    pts = np.empty((n, d))
    for j in range(d):
        pts[:, j] = (rng.permutation(n) + rng.random(n)) / n
    return Design(pts)


def maximin_lhs(
    n: int, d: int, rng: np.random.Generator, restarts: int = 100
) -> Design:
    """Best of ``restarts`` Latin hypercube draws by minimum pairwise distance."""
    if restarts < 1:
        raise ValueError(f"restarts must be >= 1, got {restarts}")
    best = latin_hypercube(n, d, rng)
    best_dist = best.min_distance()
    for _ in range(restarts - 1):
        cand = latin_hypercube(n, d, rng)
        dist = cand.min_distance()
        if dist > best_dist:
            best, best_dist = cand, dist
    return best
