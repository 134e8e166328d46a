"""Dispersion relation of the simple cubic lattice and its derived fields.

The dispersion is e(p) = 3 - cos p1 - cos p2 - cos p3 on the torus
[-pi, pi)^3, the Fourier multiplier of the discrete Laplacian on Z^3.
Its level sets {e = a} foliate the torus for regular values a, and all
geometry of those surfaces is available in closed form:

  grad e = (sin p1, sin p2, sin p3),  Hess e = diag(cos p1, cos p2, cos p3),

  M = s1^2 c2 c3 + s2^2 c1 c3 + s3^2 c1 c2,      K = M / |grad e|^4,

  H = ( (c1+c2+c3) - (s1^2 c1 + s2^2 c2 + s3^2 c3)/|grad e|^2 ) / |grad e|,

with s_j = sin p_j, c_j = cos p_j. K and H are the Gauss and mean
curvature of the level set through p with respect to the outward normal
grad e / |grad e|.

The exceptional level values are {0, 2, 3, 4, 6}: four critical values
of e plus the value 3 whose level set carries flat umbilic points.
triple_norm(a) is the distance of a to that set, and chi builds a smooth
cutoff supported where that distance is not small.

Every function here is pure, closed form, and vectorized over a trailing
axis of length 3.
"""

from dataclasses import dataclass

import numpy as np
from scipy.special import betainc

from .errors import CriticalPoint

CRITICAL_VALUES = (0.0, 2.0, 4.0, 6.0)
EXCEPTIONAL_VALUES = (0.0, 2.0, 3.0, 4.0, 6.0)

# Below this gradient norm a point counts as critical: double precision
# noise floor, not a modeling choice.
CRITICAL_GRAD_TOL = 1e-12

_EXC = np.array(EXCEPTIONAL_VALUES)


def _coords(p):
    p = np.asarray(p, dtype=float)
    if p.shape[-1] != 3:
        raise ValueError("expected trailing axis of length 3, got shape %r"
                         % (p.shape,))
    return p


def eval_e(p):
    """Dispersion value, in [0, 6]. Even: eval_e(p) == eval_e(-p)."""
    p = _coords(p)
    return 3.0 - np.cos(p).sum(axis=-1)


def differentials(p):
    """Gradient and Hessian of e at p.

    Returns (grad, hess) with shapes (..., 3) and (..., 3, 3); the
    Hessian is diagonal with entries cos p_j.
    """
    p = _coords(p)
    grad = np.sin(p)
    c = np.cos(p)
    hess = np.zeros(p.shape + (3,))
    idx = np.arange(3)
    hess[..., idx, idx] = c
    return grad, hess


def grad_norm(p):
    """|grad e(p)|."""
    s = np.sin(_coords(p))
    return np.sqrt((s * s).sum(axis=-1))


@dataclass(frozen=True)
class CurvatureSample:
    """Pointwise geometry bundle of the level set through p.

    Fields are scalars for a single point and arrays for batched input.
    kappa1 and kappa2 are the principal curvatures ordered by absolute
    value, |kappa1| <= |kappa2|, ties broken negative first; they are the
    roots of x^2 - H x + K.
    """

    grad_norm: np.ndarray
    normal: np.ndarray
    gauss: np.ndarray
    mean: np.ndarray
    kappa1: np.ndarray
    kappa2: np.ndarray


def curvature(p):
    """Curvature bundle of the level set through p.

    Raises CriticalPoint if any input point has |grad e| < 1e-12 (the
    eight points with all coordinates in {0, pi}).
    """
    p = _coords(p)
    s = np.sin(p)
    c = np.cos(p)
    g2 = (s * s).sum(axis=-1)
    g = np.sqrt(g2)
    if np.any(g < CRITICAL_GRAD_TOL):
        raise CriticalPoint("curvature at a critical point of the dispersion")

    m = (s[..., 0] ** 2 * c[..., 1] * c[..., 2]
         + s[..., 1] ** 2 * c[..., 0] * c[..., 2]
         + s[..., 2] ** 2 * c[..., 0] * c[..., 1])
    gauss = m / g2 ** 2
    mean = (c.sum(axis=-1) - (s * s * c).sum(axis=-1) / g2) / g

    disc = np.maximum(mean * mean - 4.0 * gauss, 0.0)
    root = np.sqrt(disc)
    lo = 0.5 * (mean - root)
    hi = 0.5 * (mean + root)
    # |lo| <= |hi| selects lo, which is also the negative one on ties.
    pick_lo = np.abs(lo) <= np.abs(hi)
    kappa1 = np.where(pick_lo, lo, hi)
    kappa2 = np.where(pick_lo, hi, lo)

    normal = s / g[..., None]
    return CurvatureSample(grad_norm=g, normal=normal, gauss=gauss,
                           mean=mean, kappa1=kappa1, kappa2=kappa2)


def m_field(p):
    """The field M = K |grad e|^4 and its gradient.

    M = s1^2 c2 c3 + s2^2 c1 c3 + s3^2 c1 c2 vanishes exactly where the
    Gauss curvature does, but is polynomial in (s, c) and hence smooth
    across critical points. The gradient is closed form:

        dM/dp_i = s_i (2 c1 c2 c3 - s_j^2 c_k - s_k^2 c_j)

    for {i, j, k} = {1, 2, 3}.
    """
    p = _coords(p)
    s = np.sin(p)
    c = np.cos(p)
    s0, s1, s2 = s[..., 0], s[..., 1], s[..., 2]
    c0, c1, c2 = c[..., 0], c[..., 1], c[..., 2]
    m = s0 ** 2 * c1 * c2 + s1 ** 2 * c0 * c2 + s2 ** 2 * c0 * c1
    ccc = 2.0 * c0 * c1 * c2
    grad = np.stack([
        s0 * (ccc - s1 ** 2 * c2 - s2 ** 2 * c1),
        s1 * (ccc - s0 ** 2 * c2 - s2 ** 2 * c0),
        s2 * (ccc - s0 ** 2 * c1 - s1 ** 2 * c0),
    ], axis=-1)
    return m, grad


def triple_norm(a):
    """Distance of the level a to the exceptional values {0, 2, 3, 4, 6}."""
    a = np.asarray(a, dtype=float)
    return np.min(np.abs(a[..., None] - _EXC), axis=-1)


@dataclass(frozen=True)
class CutoffSpec:
    """Shape parameters of the smooth level cutoff.

    lam is the overall scale Lambda in (0, 1/2]; the cutoff vanishes where
    triple_norm(t) <= lam/3 and equals one where triple_norm(t) >= 2*lam/3.
    order k >= 2 selects a polynomial smoothstep that is C^k at both edges.
    """

    lam: float = 0.3
    order: int = 3

    def __post_init__(self):
        if not (0.0 < self.lam <= 0.5):
            raise ValueError("lam must lie in (0, 1/2], got %r" % (self.lam,))
        if int(self.order) != self.order or self.order < 2:
            raise ValueError("order must be an integer >= 2, got %r"
                             % (self.order,))

    @property
    def inner_edge(self):
        return self.lam / 3.0

    @property
    def outer_edge(self):
        return 2.0 * self.lam / 3.0


def chi(t, spec=CutoffSpec()):
    """Smooth cutoff in the exceptional-value distance of t.

    Zero on triple_norm(t) <= lam/3, one on triple_norm(t) >= 2*lam/3,
    monotone in the distance in between, and C^order everywhere. The ramp
    is the regularized incomplete beta smoothstep of the given order.
    """
    x = (triple_norm(t) - spec.inner_edge) / (spec.outer_edge
                                              - spec.inner_edge)
    x = np.clip(x, 0.0, 1.0)
    k = spec.order + 1
    return betainc(k, k, x)
