"""Oscillatory surface integrals and their decay diagnostics.

The central object is the Fourier transform of the weighted surface
measure of one level set,

    mu_hat(xi) = integral over the level set of e^{i xi.p} / |grad e(p)|,

evaluated by phase-resolving quadrature: the base mesh is subdivided
(curved, Newton-projected) a few cached levels deep, then each cached
triangle is subdivided n-fold flat until every leaf edge is below
0.2 / max(1, |xi|). On a flat triangle the phase is affine in the leaf
lattice indices, so the n^2 midpoint sums collapse through prefix sums
of geometric sequences to O(n) per triangle.

On top of mu_hat sit the experiment drivers: radial decay scans with
top-decade exponent fits, the two-parameter decay bound they are
compared against, a stratified Monte Carlo estimate of the fourth-power
integral, and dyadic curvature/normal diagnostics that measure the
patch volumes behind the bound.
"""

import logging
from dataclasses import dataclass

import numpy as np
from scipy.special import betainc

from . import _kernels, dispersion, fitting
from .curvegeom import d_omega, extract_gamma, find_tangential_points
from .errors import BudgetExceeded, PhaseUnderresolved
from .levelset import SurfaceMesh, extract_surface
from .torus import wrap

log = logging.getLogger(__name__)

PHASE_EDGE_FACTOR = 0.2   # leaf edge * max(1, |xi|) must stay below this
MAX_WORK = 2.5e8          # row elements per evaluation (cost ~ sum of n_i)
CHUNK_ELEMENTS = 4_000_000
MAX_CACHE_TRIANGLES = 3_000_000
NOISE_REL = 1e-5          # quadrature noise floor relative to mu_hat(0)


def _project_to_level(p, a, steps=4):
    # Newton along grad e; input points are O(h^2) from the surface
    p = np.array(p, dtype=float)
    for _ in range(steps):
        s = np.sin(p)
        g2 = (s * s).sum(axis=-1)
        val = dispersion.eval_e(p) - a
        p -= (val / g2)[..., None] * s
        if np.max(np.abs(val)) < 1e-13:
            break
    return wrap(p)


def _subdivide(verts, weights, tris, a):
    """One 4-to-1 refinement with shared-edge welding and projection."""
    t = np.asarray(tris)
    n_tri = len(t)
    edges = np.concatenate([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]])
    edges = np.sort(edges, axis=1)
    keys = edges[:, 0].astype(np.int64) * len(verts) + edges[:, 1]
    uniq, inv = np.unique(keys, return_inverse=True)
    ua = (uniq // len(verts)).astype(np.int64)
    ub = (uniq % len(verts)).astype(np.int64)
    va = verts[ua]
    mid = wrap(va + 0.5 * wrap(verts[ub] - va))
    mid = _project_to_level(mid, a)
    mid_w = 1.0 / dispersion.grad_norm(mid)

    base = len(verts)
    m01 = base + inv[:n_tri]
    m12 = base + inv[n_tri:2 * n_tri]
    m20 = base + inv[2 * n_tri:]
    children = np.concatenate([
        np.stack([t[:, 0], m01, m20], axis=1),
        np.stack([t[:, 1], m12, m01], axis=1),
        np.stack([t[:, 2], m20, m12], axis=1),
        np.stack([m01, m12, m20], axis=1)])
    return (np.concatenate([verts, mid]),
            np.concatenate([weights, mid_w]),
            children)


def refine_mesh(mesh, depth):
    """Curved 4-to-1 refinement of a level-set mesh, depth times.

    New vertices are Newton-projected onto the exact level set and the
    geometry bundle is recomputed from the closed forms, so the result
    is a drop-in SurfaceMesh with 4^depth the triangles. Useful when a
    diagnostic needs finer spatial sampling than the extraction grid.
    """
    verts = mesh.vertices
    weights = 1.0 / mesh.geometry.grad_norm
    tris = mesh.triangles
    for _ in range(int(depth)):
        verts, weights, tris = _subdivide(verts, weights, tris,
                                          float(mesh.level))
    v0 = verts[tris[:, 0]]
    e1 = wrap(verts[tris[:, 1]] - v0)
    e2 = wrap(verts[tris[:, 2]] - v0)
    areas = 0.5 * np.linalg.norm(np.cross(e1, e2), axis=1)
    return SurfaceMesh(level=float(mesh.level),
                       resolution=int(mesh.resolution * 2 ** int(depth)),
                       vertices=verts, triangles=tris,
                       geometry=dispersion.curvature(verts), areas=areas)


def _corner_table(verts, weights, tris):
    v0 = verts[tris[:, 0]]
    v1 = v0 + wrap(verts[tris[:, 1]] - v0)
    v2 = v0 + wrap(verts[tris[:, 2]] - v0)
    corners = np.stack([v0, v1, v2], axis=1)
    w = weights[tris]
    e1 = v1 - v0
    e2 = v2 - v0
    areas = 0.5 * np.linalg.norm(np.cross(e1, e2), axis=1)
    edges = np.maximum(np.linalg.norm(e1, axis=1),
                       np.maximum(np.linalg.norm(e2, axis=1),
                                  np.linalg.norm(v2 - v1, axis=1)))
    order = np.argsort(edges, kind="stable")
    return (np.ascontiguousarray(corners[order]),
            np.ascontiguousarray(w[order]),
            areas[order], edges[order])


class PhaseQuadrature:
    """Reusable mu_hat evaluator bound to one surface mesh.

    Building the evaluator subdivides the mesh (with projection back to
    the exact level set) until just below the triangle cache budget;
    evaluation then only adds flat subdivision, whose depth adapts per
    triangle and per |xi|.
    """

    def __init__(self, mesh, max_cache_triangles=MAX_CACHE_TRIANGLES,
                 max_work=MAX_WORK, backend="auto"):
        if backend == "auto":
            backend = "compiled" if _kernels.HAVE_COMPILED else "numpy"
        if backend == "compiled" and not _kernels.HAVE_COMPILED:
            raise ValueError("compiled backend unavailable (no numba)")
        if backend not in ("compiled", "numpy"):
            raise ValueError("backend must be auto, compiled or numpy")
        self.backend = backend
        self.mesh = mesh
        self.level = float(mesh.level)
        self.max_work = float(max_work)
        verts = mesh.vertices
        weights = 1.0 / mesh.geometry.grad_norm
        tris = mesh.triangles
        self.cache_depth = 0
        while 4 * len(tris) <= max_cache_triangles:
            verts, weights, tris = _subdivide(verts, weights, tris,
                                              self.level)
            self.cache_depth += 1
        (self._corners, self._weights,
         self._areas, self._edges) = _corner_table(verts, weights, tris)
        log.debug("quadrature cache: depth %d, %d triangles, %s backend",
                  self.cache_depth, len(self._edges), backend)

    @property
    def mass(self):
        """mu_hat(0): the weighted surface mass."""
        return float((self._areas * self._weights.mean(axis=1)).sum())

    @property
    def n_triangles(self):
        """Number of cached (curved-subdivision) triangles."""
        return len(self._edges)

    def _splits(self, xi_norm):
        """Per-triangle flat subdivision counts for an evaluation at |xi|.

        Triangle i is split n_i-fold with n_i the smallest integer
        bringing its leaf edges below the phase-resolution length
        0.2 / max(1, |xi|); edges are sorted, so equal n_i form
        contiguous runs.
        """
        need = self._edges * (max(1.0, float(xi_norm)) / PHASE_EDGE_FACTOR)
        return np.maximum(1, np.ceil(need - 1e-12).astype(np.int64))

    def work_for(self, xi):
        """Cost measure of one evaluation (row elements, ~ sum of n_i).

        Accepts a frequency vector or its norm.
        """
        return int(self._splits(np.linalg.norm(xi)).sum())

    def __call__(self, xi):
        xi = np.asarray(xi, dtype=float).ravel()
        if xi.shape != (3,):
            raise ValueError("xi must have three components")
        splits = self._splits(np.linalg.norm(xi))
        work = int(splits.sum())
        if work > self.max_work:
            raise PhaseUnderresolved(
                "|xi| = %.3g needs %.2g work units, budget %.2g"
                % (np.linalg.norm(xi), work, self.max_work))
        if self.backend == "compiled":
            nmax = int(splits[-1])
            return complex(_kernels.flat_sum_all(
                self._corners, self._weights, self._areas, splits, xi,
                np.empty(nmax, dtype=complex),
                np.empty(nmax, dtype=complex)))
        acc = 0.0 + 0.0j
        lo = 0
        while lo < len(splits):
            n = int(splits[lo])
            hi = int(np.searchsorted(splits, n, side="right"))
            chunk = max(1, CHUNK_ELEMENTS // n)
            for start in range(lo, hi, chunk):
                acc += self._flat_sum(start, min(hi, start + chunk), n, xi)
            lo = hi
        return complex(acc)

    def _flat_sum(self, lo, hi, n, xi):
        """Midpoint sum over the n^2 flat leaves of triangles [lo, hi).

        With P(x, y) = A + x(B-A) + y(C-A) the phase is affine in the
        leaf lattice indices (i, j), so the triangular lattice sums
        reduce to correlations of geometric sequences with their prefix
        sums: O(n) per triangle instead of O(n^2). The weight
        1/|grad e| enters linearly interpolated from the corner values.
        """
        c = self._corners[lo:hi]
        w = self._weights[lo:hi]
        s_flat = self._areas[lo:hi]
        e1 = c[:, 1] - c[:, 0]
        e2 = c[:, 2] - c[:, 0]
        g0 = c[:, 0] @ xi
        g1 = e1 @ xi
        g2 = e2 @ xi

        if n == 1:
            ph = np.exp(1j * (g0 + (g1 + g2) / 3.0))
            return (s_flat * w.mean(axis=1) * ph).sum()

        delta = 1.0 / n
        wa = w[:, 0]
        dw1 = w[:, 1] - wa
        dw2 = w[:, 2] - wa

        ii = np.arange(n)
        # geometric phase rows via cumprod: one exp per triangle, not n
        ph1 = np.empty((len(g1), n), dtype=complex)
        ph1[:, 0] = 1.0
        ph1[:, 1:] = np.exp(1j * delta * g1)[:, None]
        np.cumprod(ph1, axis=1, out=ph1)
        ph2 = np.empty_like(ph1)
        ph2[:, 0] = 1.0
        ph2[:, 1:] = np.exp(1j * delta * g2)[:, None]
        np.cumprod(ph2, axis=1, out=ph2)

        pre0 = np.cumsum(ph2, axis=1)            # A_k = sum_{j<=k} E2_j
        ph2 *= ii
        pre1 = np.cumsum(ph2, axis=1, out=ph2)   # B_k = sum_{j<=k} j E2_j
        rev0 = pre0[:, ::-1]                     # A_{n-1-i} along axis 1
        rev1 = pre1[:, ::-1]
        ph1i = ph1 * ii

        # upright leaves: i + j <= n - 1, centroid offset (1/3, 1/3)
        t0 = np.einsum("tn,tn->t", ph1, rev0)
        t1 = np.einsum("tn,tn->t", ph1i, rev0)
        t2 = np.einsum("tn,tn->t", ph1, rev1)
        up = (wa * t0 + delta * dw1 * (t1 + t0 / 3.0)
              + delta * dw2 * (t2 + t0 / 3.0))

        # inverted leaves: i + j <= n - 2, centroid offset (2/3, 2/3)
        s0 = np.einsum("tn,tn->t", ph1[:, :-1], rev0[:, 1:])
        s1 = np.einsum("tn,tn->t", ph1i[:, :-1], rev0[:, 1:])
        s2 = np.einsum("tn,tn->t", ph1[:, :-1], rev1[:, 1:])
        inv = (wa * s0 + delta * dw1 * (s1 + 2.0 * s0 / 3.0)
               + delta * dw2 * (s2 + 2.0 * s0 / 3.0))

        theta = delta * (g1 + g2)
        shift = np.exp(1j * theta / 3.0)
        pref = (s_flat / n ** 2) * np.exp(1j * (g0 + theta / 3.0))
        return (pref * (up + shift * inv)).sum()


_EVALUATORS = []
_EVALUATOR_CAP = 4


def _evaluator_for(mesh):
    for m, ev in _EVALUATORS:
        if m is mesh:
            return ev
    ev = PhaseQuadrature(mesh)
    _EVALUATORS.append((mesh, ev))
    del _EVALUATORS[:-_EVALUATOR_CAP]
    return ev


def mu_hat(mesh, xi):
    """Fourier transform of the weighted surface measure at xi.

    Quadrature of e^{i p.xi} / |grad e(p)| over the mesh's level set,
    phase-resolved per the module docstring. Satisfies conjugate
    symmetry mu_hat(-xi) = conj(mu_hat(xi)) exactly. Raises
    PhaseUnderresolved when |xi| would need more quadrature work than
    the budget allows.
    """
    return _evaluator_for(mesh)(xi)


def tangential_set_for(mesh, lam=0.3):
    """Tangential points of the mesh's level (empty for convex levels)."""
    gamma = extract_gamma(mesh.level, mesh, lam=lam)
    return find_tangential_points(mesh.level, gamma)


# ---------------------------------------------------------------------------
# decay scans and the theorem bound


@dataclass
class DecayScan:
    """One radial scan of |mu_hat(r omega)| with its tail fit.

    radii/values hold every evaluated sample; envelope_radii/values the
    per-cluster maxima the exponent fit runs on (oscillation lobes make
    raw samples scatter far below the envelope).
    """

    level: float
    omega: np.ndarray
    radii: np.ndarray
    values: np.ndarray
    envelope_radii: np.ndarray
    envelope_values: np.ndarray
    exponent: float       # decay rate: values ~ r^(-exponent) on the tail
    constant: float
    fit_rms: float
    d_omega: float
    noise_floor: float
    n_discarded: int
    resolution: int

    def as_dict(self):
        return {
            "level": self.level,
            "omega": self.omega.tolist(),
            "radii": self.radii.tolist(),
            "values": self.values.tolist(),
            "envelope_radii": self.envelope_radii.tolist(),
            "envelope_values": self.envelope_values.tolist(),
            "exponent": self.exponent,
            "constant": self.constant,
            "fit_rms": self.fit_rms,
            "d_omega": self.d_omega,
            "noise_floor": self.noise_floor,
            "n_discarded": self.n_discarded,
            "resolution": self.resolution,
        }


def _radii_from(r_range, n_radii):
    r = np.asarray(r_range, dtype=float).ravel()
    if r.size == 2:
        r = np.geomspace(r[0], r[1], n_radii)
    if r.size < 4:
        raise ValueError("need at least four radii")
    if np.any(np.diff(r) <= 0) or r[0] <= 0:
        raise ValueError("radii must be positive and strictly increasing")
    return r


def decay_scan(a, omega, r_range, mesh=None, resolution=128, n_radii=16,
               lam=0.3, evaluator=None, tset=None, envelope=6,
               cluster_step=0.4):
    """Scan |mu_hat_a(r omega)| over radii and fit the tail exponent.

    r_range is either (r_min, r_max), expanded to n_radii log-spaced
    points, or an explicit increasing list. Around each nominal radius
    the scan samples `envelope` additive offsets of cluster_step and
    keeps the cluster maximum, so the fit tracks the decay envelope
    rather than whichever lobe a single radius lands on (lobe spacing
    along r is pi / |omega.p| >= 0.58, so a 2.0-wide cluster brackets a
    full lobe for all but the slowest phases). The exponent comes from
    a log-log least squares over the top decade of nominal radii, after
    dropping envelope values within 10x of the quadrature noise floor.
    Passing mesh, evaluator or tset re-uses expensive state across
    scans.
    """
    omega = np.asarray(omega, dtype=float).ravel()
    nrm = np.linalg.norm(omega)
    if nrm == 0.0:
        raise ValueError("omega must be a nonzero direction")
    omega = omega / nrm
    nominal = _radii_from(r_range, n_radii)
    if envelope < 1:
        raise ValueError("envelope must be at least 1")
    if cluster_step <= 0.0:
        raise ValueError("cluster_step must be positive")

    if evaluator is None:
        if mesh is None:
            mesh = extract_surface(a, resolution)
        evaluator = _evaluator_for(mesh)
    else:
        mesh = evaluator.mesh
    if abs(float(mesh.level) - float(a)) > 1e-9:
        raise ValueError("mesh level %.6g does not match a=%.6g"
                         % (mesh.level, a))
    if tset is None:
        tset = tangential_set_for(mesh, lam=lam)

    all_r = nominal[:, None] + cluster_step * np.arange(envelope)[None, :]
    all_v = np.array([[abs(evaluator(r * omega)) for r in row]
                      for row in all_r])
    pick = np.argmax(all_v, axis=1)
    env_r = all_r[np.arange(len(nominal)), pick]
    env_v = all_v[np.arange(len(nominal)), pick]
    order = np.argsort(all_r, axis=None)
    radii = all_r.ravel()[order]
    values = all_v.ravel()[order]
    noise_floor = NOISE_REL * evaluator.mass

    tail = nominal >= nominal[-1] / 10.0
    keep = tail & (env_v > 10.0 * noise_floor)
    n_discarded = int(tail.sum() - keep.sum())
    if keep.sum() < 3:
        raise BudgetExceeded(
            "only %d usable radii in the top decade; scan deeper or "
            "lower the noise floor" % int(keep.sum()))
    fit = fitting.fit_power(env_r[keep], env_v[keep])

    return DecayScan(level=float(mesh.level), omega=omega, radii=radii,
                     values=values, envelope_radii=env_r,
                     envelope_values=env_v,
                     exponent=float(-fit.params["s"]),
                     constant=float(fit.params["c"]),
                     fit_rms=float(fit.rms_rel),
                     d_omega=d_omega(tset, omega),
                     noise_floor=noise_floor, n_discarded=n_discarded,
                     resolution=int(mesh.resolution))


def theorem_bound(r, omega, tset, L=None, C=1.0, beta=None):
    """Decay bound shape for |mu_hat| along the direction omega.

    With D = min_j |nu(p^(j)) x omega| (1 when there are no tangential
    points) and <x> = (1 + x^2)^(1/2), returns

        C * ( 2^-L + 1/<r> + L^2 / <r^(3/4) D^(1/2)> )

    valid for every L >= 1; L defaults to log2<r>, the choice that
    nearly minimizes it. With beta in (0, 1/2) the variant

        C * ( 1/<r> + beta^-2 / <r^(3/4 - beta) D^(1/2 - beta)> )

    is returned instead and L is ignored.
    """
    r = np.asarray(r, dtype=float)
    d = d_omega(tset, omega)
    br = np.hypot(1.0, r)
    if beta is not None:
        if not 0.0 < beta < 0.5:
            raise ValueError("beta must lie in (0, 1/2)")
        out = C * (1.0 / br
                   + beta ** -2 / np.hypot(1.0, r ** (0.75 - beta)
                                           * d ** (0.5 - beta)))
        return out if out.ndim else float(out)
    if L is None:
        L = np.maximum(1.0, np.log2(br))
    else:
        L = np.asarray(L, dtype=float)
        if np.any(L < 1):
            raise ValueError("L must be at least 1")
    out = C * (2.0 ** -L + 1.0 / br
               + L ** 2 / np.hypot(1.0, r ** 0.75 * np.sqrt(d)))
    return out if out.ndim else float(out)


# ---------------------------------------------------------------------------
# fourth-power integral


@dataclass(frozen=True)
class SamplerConfig:
    """Stratified sampler settings for the fourth-power integral.

    Radial shells partition the ball into n_shells geometric strata
    (log-spaced edges, so the small-|xi| peak gets its own shells);
    directions are drawn from a mixture of the uniform sphere and
    uniform caps of angular radius cap_radius around the tangential
    normal axes (both signs). cap_fraction is the mixture weight of the
    caps; it is ignored when the level has no tangential points.
    """

    n_samples: int = 4096
    n_shells: int = 8
    cap_radius: float = 0.2
    cap_fraction: float = 0.5
    target_rel_se: float = 0.2
    seed: int = 0

    def __post_init__(self):
        if self.n_samples < self.n_shells * 8:
            raise ValueError("need at least eight samples per shell")
        if not 0.0 < self.cap_radius < np.pi / 2:
            raise ValueError("cap_radius must lie in (0, pi/2)")
        if not 0.0 <= self.cap_fraction < 1.0:
            raise ValueError("cap_fraction must lie in [0, 1)")


@dataclass
class L4Estimate:
    value: float
    std_error: float
    m_cut: float
    n_samples: int
    n_cap_axes: int
    shell_edges: np.ndarray
    shell_values: np.ndarray
    shell_errors: np.ndarray

    def as_dict(self):
        return {
            "value": self.value,
            "std_error": self.std_error,
            "m_cut": self.m_cut,
            "n_samples": self.n_samples,
            "n_cap_axes": self.n_cap_axes,
            "shell_edges": self.shell_edges.tolist(),
            "shell_values": self.shell_values.tolist(),
            "shell_errors": self.shell_errors.tolist(),
        }


def _cap_axes(tset):
    axes = []
    for nu in np.atleast_2d(tset.normals) if tset.count else []:
        if all(min(np.linalg.norm(nu - b), np.linalg.norm(nu + b)) > 1e-6
               for b in axes):
            axes.append(nu)
    return np.array(axes) if axes else np.empty((0, 3))


def _sample_directions(rng, n, axes, cap_radius, cap_fraction):
    """Mixture draw on the sphere plus exact density values.

    Overlapping caps make disjoint angular strata ill-defined, so the
    cap refinement is a mixture density rather than a partition: the
    density at omega counts how many caps contain it.
    """
    n_caps = 2 * len(axes)
    pick_cap = (rng.random(n) < cap_fraction) if n_caps else \
        np.zeros(n, dtype=bool)
    omega = rng.normal(size=(n, 3))
    omega /= np.linalg.norm(omega, axis=1, keepdims=True)

    idx = np.flatnonzero(pick_cap)
    if idx.size:
        cos_cap = np.cos(cap_radius)
        which = rng.integers(0, n_caps, size=idx.size)
        centers = np.concatenate([axes, -axes])[which]
        z = 1.0 - rng.random(idx.size) * (1.0 - cos_cap)
        phi = rng.random(idx.size) * 2.0 * np.pi
        rad = np.sqrt(np.maximum(0.0, 1.0 - z * z))
        local = np.stack([rad * np.cos(phi), rad * np.sin(phi), z], axis=1)
        # orthonormal frame per center
        helper = np.where(np.abs(centers[:, [2]]) < 0.9,
                          np.array([0.0, 0.0, 1.0]),
                          np.array([1.0, 0.0, 0.0]))
        t1 = np.cross(centers, helper)
        t1 /= np.linalg.norm(t1, axis=1, keepdims=True)
        t2 = np.cross(centers, t1)
        omega[idx] = (local[:, [0]] * t1 + local[:, [1]] * t2
                      + local[:, [2]] * centers)

    dens = np.full(n, (1.0 - cap_fraction) / (4.0 * np.pi)
                   if n_caps else 1.0 / (4.0 * np.pi))
    if n_caps:
        cos_cap = np.cos(cap_radius)
        cap_area = 2.0 * np.pi * (1.0 - cos_cap)
        dots = omega @ axes.T
        inside = (dots >= cos_cap).sum(axis=1) + (-dots >= cos_cap).sum(axis=1)
        dens += cap_fraction * inside / (n_caps * cap_area)
    return omega, dens


def l4_integral(a, m_cut, mesh=None, resolution=128, config=None,
                integrand=None, lam=0.3, evaluator=None, tset=None):
    """Monte Carlo estimate of the ball integral of |mu_hat|^4.

    Integrates |mu_hat_a(xi)|^4 over |xi| <= m_cut by stratified
    sampling: geometric radial shells, directions importance-drawn
    toward the tangential normal caps where the integrand concentrates.
    Samples are spent in two stages: a pilot batch per shell, then the
    remainder allocated proportionally to the pilot spread, so shells
    holding the sharp small-|xi| peak get most of the budget. The
    pilot samples stay in the estimate; the allocation ratio bias this
    introduces is far below the reported standard error. integrand
    overrides the default (a callable xi -> real), which is how the
    constant-field self-test recovers the exact ball volume. Passing
    mesh, evaluator or tset re-uses expensive state across sweeps.
    Raises BudgetExceeded when the achieved standard error misses the
    configured relative target.
    """
    if m_cut < 2:
        raise ValueError("the cutoff radius must be at least 2")
    cfg = config if config is not None else SamplerConfig()
    if evaluator is None:
        if mesh is None:
            mesh = extract_surface(a, resolution)
        evaluator = _evaluator_for(mesh)
    else:
        mesh = evaluator.mesh
    if abs(float(mesh.level) - float(a)) > 1e-9:
        raise ValueError("mesh level %.6g does not match a=%.6g"
                         % (mesh.level, a))
    if integrand is None:
        def integrand(xi):
            return abs(evaluator(xi)) ** 4
    if tset is None:
        tset = tangential_set_for(mesh, lam=lam)
    axes = _cap_axes(tset)
    cap_fraction = cfg.cap_fraction if len(axes) else 0.0

    # geometric shells from a unit-scale core outward: the integrand
    # falls off like a power of r, so log-uniform strata keep the
    # within-shell spread bounded where equal-volume shells would bury
    # the small-|xi| peak inside one huge stratum
    if cfg.n_shells == 1:
        edges = np.array([0.0, float(m_cut)])
    else:
        rmin = min(1.0, float(m_cut) / 2.0)
        k = np.arange(cfg.n_shells + 1, dtype=float)
        edges = rmin * (float(m_cut) / rmin) ** ((k - 1.0)
                                                 / (cfg.n_shells - 1.0))
        edges[0] = 0.0
    streams = np.random.default_rng(cfg.seed).spawn(cfg.n_shells)

    def draw(k, nk):
        r0, r1 = edges[k], edges[k + 1]
        vol_r = (r1 ** 3 - r0 ** 3) / 3.0
        rng = streams[k]
        u = rng.random(nk)
        radii = (u * (r1 ** 3 - r0 ** 3) + r0 ** 3) ** (1.0 / 3.0)
        omega, dens = _sample_directions(rng, nk, axes, cfg.cap_radius,
                                         cap_fraction)
        vals = np.array([integrand(r * w) for r, w in zip(radii, omega)])
        return vol_r * vals / dens

    n_pilot = max(8, cfg.n_samples // (4 * cfg.n_shells))
    contribs = [draw(k, n_pilot) for k in range(cfg.n_shells)]
    spread = np.array([c.std(ddof=1) for c in contribs])
    remaining = cfg.n_samples - cfg.n_shells * n_pilot
    if remaining > 0:
        if spread.sum() > 0.0:
            share = spread / spread.sum()
        else:
            share = np.full(cfg.n_shells, 1.0 / cfg.n_shells)
        extra = np.floor(share * remaining).astype(int)
        # distribute the rounding leftovers to the widest shells
        order = np.argsort(-(share * remaining - extra))
        extra[order[:remaining - int(extra.sum())]] += 1
        for k in range(cfg.n_shells):
            if extra[k]:
                contribs[k] = np.concatenate([contribs[k],
                                              draw(k, int(extra[k]))])

    shell_vals = np.array([c.mean() for c in contribs])
    shell_errs = np.array([c.std(ddof=1) / np.sqrt(len(c))
                           for c in contribs])
    value = float(shell_vals.sum())
    se = float(np.sqrt((shell_errs ** 2).sum()))
    if se > cfg.target_rel_se * max(abs(value), 1e-300):
        raise BudgetExceeded(
            "standard error %.3g exceeds %.3g of the estimate %.3g; "
            "raise n_samples" % (se, cfg.target_rel_se, value))
    total = int(sum(len(c) for c in contribs))
    return L4Estimate(value=value, std_error=se, m_cut=float(m_cut),
                      n_samples=total, n_cap_axes=len(axes),
                      shell_edges=edges, shell_values=shell_vals,
                      shell_errors=shell_errs)


# ---------------------------------------------------------------------------
# dyadic diagnostics


def smoothstep(t, order=3):
    """C^(order-1) monotone step: 0 below 0, 1 above 1."""
    t = np.clip(t, 0.0, 1.0)
    return betainc(order, order, t)


@dataclass(frozen=True)
class DyadicConfig:
    """Dyadic decomposition settings.

    depth is the number L of curvature bands: band k collects
    2^-k c0 <= |K| <= 2^(-k+2) c0 for 1 <= k <= L, band 0 the region
    |K| >= c0, and the closing band everything below 2^(-L+1) c0.
    Annulus j collects 2^-j <= |nu x omega| <= 2^(-j+2). smoothness is
    the order of the smoothstep used for the partitions of unity.
    """

    depth: int = 5
    c0: float = 0.05
    j_max: int = None
    smoothness: int = 3
    bound_constant: float = 8.0
    dichotomy_factor: float = 4.0
    min_support: int = 30

    def __post_init__(self):
        if self.depth < 1:
            raise ValueError("depth must be at least 1")
        if not 0.0 < self.c0 <= 1.0:
            raise ValueError("c0 must lie in (0, 1]")
        if self.smoothness < 1:
            raise ValueError("smoothness must be at least 1")
        if self.min_support < 1:
            raise ValueError("min_support must be at least 1")
        if self.bound_constant <= 0.0 or self.dichotomy_factor <= 0.0:
            raise ValueError("bound_constant and dichotomy_factor must "
                             "be positive")
        if self.j_max is None:
            object.__setattr__(self, "j_max", self.depth)


def curvature_partition(kappa, c0, depth, order=3):
    """Partition of unity over the dyadic curvature bands.

    Returns (depth + 2, n): row 0 covers |K| >= c0, rows 1..depth the
    bands, the last row the closing band. Rows sum to 1 exactly
    (telescoping differences of one smoothstep).
    """
    with np.errstate(divide="ignore"):
        x = np.log2(np.maximum(np.abs(kappa), 1e-300) / c0)
    steps = [smoothstep(x + k, order) for k in range(depth + 1)]
    rows = [steps[0]]
    rows += [steps[k] - steps[k - 1] for k in range(1, depth + 1)]
    rows.append(1.0 - steps[depth])
    return np.array(rows)


def normal_partition(cross_mag, j_max, order=3):
    """Partition of unity over the dyadic normal annuli.

    Returns (j_max + 2, n): rows 0..j_max are the annuli
    2^-j <= |nu x omega| <= 2^(-j+2), the last row the tail beyond
    j_max. Rows sum to 1 exactly.
    """
    with np.errstate(divide="ignore"):
        u = -np.log2(np.clip(cross_mag, 1e-300, None))
    # telescoping differences of S(u + 2 - j): rows sum to S(u + 2),
    # which is identically 1 since |nu x omega| <= 1 forces u >= 0
    rows = [smoothstep(u - j + 2, order) - smoothstep(u - j + 1, order)
            for j in range(j_max + 1)]
    rows.append(smoothstep(u - j_max + 1, order))
    return np.array(rows)


@dataclass
class DyadicTable:
    """Measured patch volumes against their shape bounds."""

    level: float
    omega: np.ndarray
    config: DyadicConfig
    d_omega: float
    volumes: np.ndarray        # (depth, j_max + 1), k = 1..depth
    bounds: np.ndarray         # min-shape bound per cell (unscaled)
    branch2: np.ndarray        # cells exempted by the dichotomy
    violations: np.ndarray     # cells violating constant * bound
    band_volumes: np.ndarray   # (depth + 2,) including k=0 and closing band
    support_counts: np.ndarray  # triangles touching band k = 1..depth
    fitted_constant: float
    row_constant: float

    @property
    def n_violations(self):
        return int(self.violations.sum())


def dyadic_diagnostics(mesh, tset, omega, cfg=None):
    """Measure vol(U_kj) over the dyadic (curvature, normal) cells.

    U_kj collects surface points whose Gauss curvature sits in dyadic
    band k and whose normal lies in annulus j around the direction
    omega. Volumes are partition-of-unity weighted areas, with the
    partitions evaluated per vertex and averaged over triangle corners.
    Each cell is compared with
    min(2^-k, 2^-k-j / sqrt(D), 2^-3j/2 / D^(1/4)); cells where
    D <= dichotomy_factor * (2^-k c0 + 2^-j+2) fall on the other branch
    of the volume dichotomy and are exempt. A cell violates when it is
    on neither branch within bound_constant.

    Fine bands are narrower than the per-triangle curvature variation,
    so cell volumes are sampling estimates; their fidelity is governed
    by how many triangles touch a band, hence the min_support guard on
    the deepest band rather than a pointwise resolution test.
    """
    cfg = cfg if cfg is not None else DyadicConfig()
    omega = np.asarray(omega, dtype=float).ravel()
    omega = omega / np.linalg.norm(omega)

    tris = mesh.triangles
    areas = mesh.areas
    psi_v = curvature_partition(mesh.geometry.gauss, cfg.c0, cfg.depth,
                                cfg.smoothness)
    cross_v = np.linalg.norm(np.cross(mesh.geometry.normal, omega), axis=1)
    phi_v = normal_partition(cross_v, cfg.j_max, cfg.smoothness)

    psi_c = psi_v[:, tris]                      # (depth + 2, T, 3)
    phi_c = phi_v[:, tris]
    band_volumes = np.einsum("ktc,t->k", psi_c, areas) / 3.0
    cells = np.einsum("ktc,jtc,t->kj", psi_c[1:cfg.depth + 1],
                      phi_c[:cfg.j_max + 1], areas, optimize=True) / 3.0

    support = (psi_c[1:cfg.depth + 1] > 0.01).any(axis=2).sum(axis=1)
    if support[-1] < cfg.min_support:
        raise ValueError(
            "deepest curvature band touches %d triangles, need at least "
            "%d; reduce depth, raise c0 or refine the mesh"
            % (int(support[-1]), cfg.min_support))

    d = d_omega(tset, omega)
    ks = np.arange(1, cfg.depth + 1)[:, None]
    js = np.arange(0, cfg.j_max + 1)[None, :]
    bounds = np.minimum(2.0 ** -ks,
                        np.minimum(2.0 ** (-ks - js) / np.sqrt(d),
                                   2.0 ** (-1.5 * js) / d ** 0.25))
    branch2 = d <= cfg.dichotomy_factor * (2.0 ** -ks * cfg.c0
                                           + 2.0 ** (-js + 2.0))
    with np.errstate(divide="ignore", invalid="ignore"):
        ratios = np.where(cells > 0, cells / bounds, 0.0)
    first_branch = ~branch2
    fitted = float(ratios[first_branch].max()) if first_branch.any() else 0.0
    violations = first_branch & (ratios > cfg.bound_constant)
    row_constant = float((2.0 ** np.arange(1, cfg.depth + 1)
                          * band_volumes[1:cfg.depth + 1]).max())
    return DyadicTable(level=float(mesh.level), omega=omega, config=cfg,
                       d_omega=d, volumes=cells, bounds=bounds,
                       branch2=branch2, violations=violations,
                       band_volumes=band_volumes, support_counts=support,
                       fitted_constant=fitted, row_constant=row_constant)
