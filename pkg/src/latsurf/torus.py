"""Points on the flat 3-torus, represented in [-pi, pi)^3."""

from dataclasses import dataclass

import numpy as np

TWO_PI = 2.0 * np.pi


def wrap(p):
    """Canonical representative with every coordinate in [-pi, pi).

    Accepts any array shaped (..., 3) or plain scalars/vectors; the
    reduction is idempotent up to floating point exactness (a second
    application is a no-op bit for bit).
    """
    p = np.asarray(p, dtype=float)
    return np.mod(p + np.pi, TWO_PI) - np.pi


def distance(p, q):
    """Flat-torus metric: Euclidean norm of the wrapped difference."""
    d = wrap(np.asarray(p, dtype=float) - np.asarray(q, dtype=float))
    return np.sqrt(np.sum(d * d, axis=-1))


@dataclass(frozen=True)
class TorusPoint:
    """A single point on the torus; coordinates stored canonically."""

    p1: float
    p2: float
    p3: float

    def __post_init__(self):
        w = wrap([self.p1, self.p2, self.p3])
        object.__setattr__(self, "p1", float(w[0]))
        object.__setattr__(self, "p2", float(w[1]))
        object.__setattr__(self, "p3", float(w[2]))

    @classmethod
    def from_array(cls, arr):
        arr = np.asarray(arr, dtype=float)
        return cls(float(arr[0]), float(arr[1]), float(arr[2]))

    def as_array(self):
        return np.array([self.p1, self.p2, self.p3])

    def distance(self, other):
        return float(distance(self.as_array(), np.asarray(other, dtype=float)
                              if not isinstance(other, TorusPoint)
                              else other.as_array()))


def as_points(arr):
    """View an (n, 3) array as a list of TorusPoint."""
    arr = np.asarray(arr, dtype=float)
    return [TorusPoint(float(a), float(b), float(c)) for a, b, c in arr]
