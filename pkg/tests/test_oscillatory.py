import numpy as np
import pytest

from latsurf import _kernels
from latsurf import dispersion as dsp
from latsurf import levelset as ls
from latsurf import oscillatory as osc
from latsurf.curvegeom import extract_gamma
from latsurf.errors import BudgetExceeded, PhaseUnderresolved

PI = np.pi

needs_compiled = pytest.mark.skipif(
    not _kernels.HAVE_COMPILED, reason="compiled kernel unavailable")


@pytest.fixture(scope="module")
def mesh25():
    return ls.extract_surface(2.5, 64)


@pytest.fixture(scope="module")
def quad25(mesh25):
    return osc.PhaseQuadrature(mesh25)


@pytest.fixture(scope="module")
def tset25(mesh25):
    return osc.tangential_set_for(mesh25)


@pytest.fixture(scope="module")
def small25():
    # cheap mesh + evaluator for guard and plumbing tests
    mesh = ls.extract_surface(2.5, 24)
    return mesh, osc.PhaseQuadrature(mesh, max_cache_triangles=30_000)


@pytest.fixture(scope="module")
def fine25(mesh25):
    return osc.refine_mesh(mesh25, 2)


# ------------------------------------------------------------------ oracle
# Direct midpoint sum over the n^2 flat subtriangles of one triangle:
# upright cells have centroid offset 1/3, inverted cells 2/3, and the
# weight is interpolated linearly at each centroid. This is the slow
# definition the prefix-sum evaluator must reproduce to rounding.

def brute_triangle(corners, weights, area, n, xi):
    c0 = corners[0]
    e1 = corners[1] - c0
    e2 = corners[2] - c0
    wa = weights[0]
    dw1 = weights[1] - wa
    dw2 = weights[2] - wa
    total = 0.0 + 0.0j
    leaf = area / n ** 2
    for i in range(n):
        for j in range(n - i):
            u, v = (i + 1.0 / 3.0) / n, (j + 1.0 / 3.0) / n
            p = c0 + u * e1 + v * e2
            total += leaf * (wa + dw1 * u + dw2 * v) \
                * np.exp(1j * np.dot(xi, p))
    for i in range(n):
        for j in range(n - 1 - i):
            u, v = (i + 2.0 / 3.0) / n, (j + 2.0 / 3.0) / n
            p = c0 + u * e1 + v * e2
            total += leaf * (wa + dw1 * u + dw2 * v) \
                * np.exp(1j * np.dot(xi, p))
    return total


def synthetic_quadrature(seed, nt):
    rng = np.random.default_rng(seed)
    corners = rng.uniform(-PI, PI, size=(nt, 3, 3))
    weights = rng.uniform(0.5, 2.0, size=(nt, 3))
    e1 = corners[:, 1] - corners[:, 0]
    e2 = corners[:, 2] - corners[:, 0]
    areas = 0.5 * np.linalg.norm(np.cross(e1, e2), axis=1)
    pq = osc.PhaseQuadrature.__new__(osc.PhaseQuadrature)
    pq._corners = corners
    pq._weights = weights
    pq._areas = areas
    return pq, corners, weights, areas


def test_flat_sum_matches_direct_leaf_sum():
    pq, corners, weights, areas = synthetic_quadrature(7, 6)
    xi = np.array([1.3, -2.1, 0.7])
    for n in (1, 2, 3, 7):
        want = sum(brute_triangle(corners[t], weights[t], areas[t], n, xi)
                   for t in range(6))
        got = pq._flat_sum(0, 6, n, xi)
        assert abs(got - want) <= 1e-12 * abs(want)


@needs_compiled
def test_compiled_kernel_matches_reference():
    pq, corners, weights, areas = synthetic_quadrature(11, 6)
    xi = np.array([0.9, 2.4, -1.6])
    splits = np.array([1, 2, 3, 4, 7, 5], dtype=np.int64)
    want = sum(pq._flat_sum(t, t + 1, int(splits[t]), xi)
               for t in range(6))
    nmax = int(splits.max())
    got = _kernels.flat_sum_all(
        corners, weights, areas, splits, xi,
        np.empty(nmax, dtype=complex), np.empty(nmax, dtype=complex))
    assert abs(got - want) <= 1e-12 * abs(want)


@needs_compiled
def test_backends_agree_on_surface():
    mesh = ls.extract_surface(2.5, 24)
    qn = osc.PhaseQuadrature(mesh, max_cache_triangles=40_000,
                             backend="numpy")
    qc = osc.PhaseQuadrature(mesh, max_cache_triangles=40_000,
                             backend="compiled")
    for xi in (np.array([4.0, -5.0, 2.0]), np.array([20.0, 9.0, -24.0])):
        a, b = qn(xi), qc(xi)
        assert abs(a - b) <= 1e-12 * qn.mass


def test_backend_selection_validated(small25, monkeypatch):
    mesh, _ = small25
    with pytest.raises(ValueError):
        osc.PhaseQuadrature(mesh, max_cache_triangles=2_000,
                            backend="weird")
    monkeypatch.setattr(osc._kernels, "HAVE_COMPILED", False)
    with pytest.raises(ValueError):
        osc.PhaseQuadrature(mesh, max_cache_triangles=2_000,
                            backend="compiled")
    q = osc.PhaseQuadrature(mesh, max_cache_triangles=2_000, backend="auto")
    assert q.backend == "numpy"


# --------------------------------------------------------- basic invariants

def test_zero_frequency_is_surface_density(quad25):
    val = quad25(np.zeros(3))
    assert val.imag == 0.0
    assert val.real == pytest.approx(quad25.mass, rel=1e-12)
    # cross-check against the independent level-sweep estimates
    prof = ls.coarea_profile(64)
    i = int(np.argmin(np.abs(prof.a_grid - 2.5)))
    assert prof.phi[i] == pytest.approx(quad25.mass, rel=2e-2)
    assert prof.phi_hist[i] == pytest.approx(quad25.mass, rel=2e-2)


def test_conjugate_symmetry_exact(quad25):
    for xi in (np.array([3.0, -7.0, 11.0]), np.array([40.0, 13.5, -2.25])):
        assert quad25(-xi) == np.conj(quad25(xi))


def test_modulus_bounded_by_mass(quad25):
    rng = np.random.default_rng(3)
    for _ in range(5):
        xi = rng.normal(size=3) * 15.0
        assert abs(quad25(xi)) <= quad25.mass * (1.0 + 1e-12)


def test_resolution_doubling_changes_little(quad25):
    m32 = ls.extract_surface(2.5, 32)
    q32 = osc.PhaseQuadrature(m32, max_cache_triangles=400_000)
    xi = 40.0 * np.array([0.3, -0.5, 0.8]) / np.linalg.norm([0.3, -0.5, 0.8])
    v64, v32 = abs(quad25(xi)), abs(q32(xi))
    assert abs(v64 - v32) / v64 < 2e-2


def test_work_budget_enforced(small25):
    mesh, q = small25
    assert q.work_for(np.array([50.0, 0.0, 0.0])) \
        >= q.work_for(np.array([5.0, 0.0, 0.0]))
    tight = osc.PhaseQuadrature(mesh, max_cache_triangles=2_000, max_work=50)
    with pytest.raises(PhaseUnderresolved):
        tight(np.array([200.0, 0.0, 0.0]))


def test_frequency_shape_validated(small25):
    _, q = small25
    with pytest.raises(ValueError):
        q(np.zeros(2))


# ------------------------------------------------------------- decay scans

def test_convex_level_decays_like_inverse_radius():
    mesh = ls.extract_surface(1.0, 64)
    w = np.array([0.3, -0.5, 0.8])
    scan = osc.decay_scan(1.0, w, (10, 300), mesh=mesh, n_radii=8,
                          envelope=5, cluster_step=0.4)
    assert scan.exponent >= 0.9
    assert scan.fit_rms < 0.1


def test_generic_direction_beats_three_quarters(mesh25, quad25, tset25):
    w = np.array([0.2, 0.4, 1.0])
    scan = osc.decay_scan(2.5, w, (10, 400), evaluator=quad25, n_radii=8,
                          envelope=8, cluster_step=0.45, tset=tset25)
    assert scan.exponent >= 0.9
    assert scan.d_omega > 0.3


def test_tangential_direction_decays_slower(mesh25, quad25, tset25):
    w = tset25.normals[0]
    scan = osc.decay_scan(2.5, w, (10, 400), evaluator=quad25, n_radii=8,
                          envelope=8, cluster_step=0.45, tset=tset25)
    assert scan.exponent >= 0.45
    assert scan.exponent < 0.9
    assert scan.d_omega < 0.05


def test_curve_normal_direction_intermediate(mesh25, quad25, tset25):
    # normals along the zero-curvature curve, away from its tangential
    # points, sit between the flat and the curved regimes
    gamma = extract_gamma(2.5, mesh25)
    pts = np.concatenate(gamma.components)
    nus = dsp.curvature(pts).normal
    dist = np.minimum(
        np.linalg.norm(nus[:, None] - tset25.normals[None], axis=2),
        np.linalg.norm(nus[:, None] + tset25.normals[None], axis=2),
    ).min(axis=1)
    w = nus[int(np.argmax(dist))]
    scan = osc.decay_scan(2.5, w, (30, 600), evaluator=quad25, n_radii=8,
                          envelope=8, cluster_step=0.5, tset=tset25)
    assert 0.65 <= scan.exponent <= 1.1


def test_decay_scan_validation(small25):
    mesh, q = small25
    with pytest.raises(ValueError):
        osc.decay_scan(2.5, np.zeros(3), (10, 20), evaluator=q)
    with pytest.raises(ValueError):
        osc.decay_scan(2.5, np.array([1.0, 0, 0]), (10, 20),
                       evaluator=q, envelope=0)
    with pytest.raises(ValueError):
        osc.decay_scan(2.5, np.array([1.0, 0, 0]), (10, 20),
                       evaluator=q, cluster_step=0.0)
    with pytest.raises(ValueError):
        # evaluator holds a level-2.5 mesh
        osc.decay_scan(1.0, np.array([1.0, 0, 0]), (10, 20), evaluator=q)


def test_decay_scan_noise_floor_budget(small25, monkeypatch):
    mesh, q = small25
    monkeypatch.setattr(osc, "NOISE_REL", 1.0)
    with pytest.raises(BudgetExceeded):
        osc.decay_scan(2.5, np.array([1.0, 0, 0]), (5, 10), evaluator=q,
                       n_radii=4, envelope=2, cluster_step=0.4)


def test_decay_scan_as_dict_roundtrip(small25):
    mesh, q = small25
    scan = osc.decay_scan(2.5, np.array([0.3, -0.5, 0.8]), (5, 15),
                          evaluator=q, n_radii=4, envelope=2,
                          cluster_step=0.4)
    d = scan.as_dict()
    assert d["exponent"] == scan.exponent
    assert len(d["radii"]) == len(d["values"]) == 8
    assert len(d["envelope_radii"]) == 4


# ----------------------------------------------------------- bound profile

def synthetic_tset(normals):
    from latsurf.curvegeom import TangentialSet
    normals = np.asarray(normals, dtype=float).reshape(-1, 3)
    n = len(normals)
    return TangentialSet(level=2.5, points=np.zeros((n, 3)),
                         normals=normals, provenance=np.ones(n, dtype=int),
                         residuals=np.zeros(n))


EMPTY_TSET = synthetic_tset(np.zeros((0, 3)))
Z_AXIS = np.array([0.0, 0.0, 1.0])


def test_bound_formula_pinned():
    # one tangential normal at angle asin(0.37) from omega pins D
    r, d = 250.0, 0.37
    omega = np.array([d, 0.0, np.sqrt(1.0 - d * d)])
    lead = np.hypot(1.0, r ** 0.75 * np.sqrt(d))
    want = 2.0 ** -5.0 + 1.0 / np.hypot(1.0, r) + 25.0 / lead
    got = osc.theorem_bound(r, omega, synthetic_tset(Z_AXIS), L=5.0)
    assert got == pytest.approx(want, rel=1e-12)


def test_bound_log_squared_profile_dominates():
    # with L = log2 r and no tangential points (D = 1) the bound
    # settles on log^2(r) / r^(3/4)
    for r, tol in ((1e4, 5e-2), (1e8, 1e-3)):
        L = np.log2(r)
        got = osc.theorem_bound(r, Z_AXIS, EMPTY_TSET, L=L)
        ratio = got * r ** 0.75 / L ** 2
        assert abs(ratio - 1.0) <= tol


def test_bound_tangential_limit():
    # along a tangential normal D = 0 and the curvature term loses all
    # decay
    r = 1e6
    got = osc.theorem_bound(r, Z_AXIS, synthetic_tset(Z_AXIS), L=3.0, C=2.0)
    want = 2.0 * (2.0 ** -3.0 + 1.0 / np.hypot(1.0, r) + 9.0)
    assert got == pytest.approx(want, rel=1e-12)


def test_bound_beta_variant_slope():
    from latsurf import fitting
    r = np.logspace(6, 9, 20)
    vals = np.array([osc.theorem_bound(ri, Z_AXIS, EMPTY_TSET, beta=0.1)
                     for ri in r])
    fit = fitting.fit_power(r, vals)
    assert fit.params["s"] == pytest.approx(-0.65, abs=0.02)


def test_bound_validation():
    with pytest.raises(ValueError):
        osc.theorem_bound(10.0, Z_AXIS, EMPTY_TSET, L=0.5)
    with pytest.raises(ValueError):
        osc.theorem_bound(10.0, Z_AXIS, EMPTY_TSET, beta=0.6)
    with pytest.raises(ValueError):
        osc.theorem_bound(10.0, Z_AXIS, EMPTY_TSET, beta=0.0)


# ------------------------------------------------------------- L4 integral

def test_ball_volume_recovered_within_three_sigma(small25):
    mesh, _ = small25
    est = osc.l4_integral(2.5, 8.0, mesh=mesh, integrand=lambda xi: 1.0)
    exact = 4.0 / 3.0 * PI * 8.0 ** 3
    assert est.n_cap_axes > 0
    assert abs(est.value - exact) <= 3.0 * est.std_error
    assert est.value == pytest.approx(est.shell_values.sum(), rel=1e-12)


def test_cutoff_doubling_controlled_on_convex_level():
    mesh = ls.extract_surface(1.0, 24)
    ev = osc.PhaseQuadrature(mesh, max_cache_triangles=30_000)
    cfg = osc.SamplerConfig(n_samples=1024, target_rel_se=0.5, seed=0)
    j2 = osc.l4_integral(1.0, 2.0, evaluator=ev, config=cfg)
    j4 = osc.l4_integral(1.0, 4.0, evaluator=ev, config=cfg)
    slack = 3.0 * np.hypot(j2.std_error, j4.std_error)
    assert j4.value - j2.value <= j2.value + slack


def test_l4_validation(small25):
    mesh, _ = small25
    with pytest.raises(ValueError):
        osc.l4_integral(2.5, 1.9, mesh=mesh, integrand=lambda xi: 1.0)
    with pytest.raises(ValueError):
        osc.SamplerConfig(n_samples=7, n_shells=8)
    with pytest.raises(ValueError):
        osc.SamplerConfig(cap_radius=2.0)
    with pytest.raises(ValueError):
        osc.SamplerConfig(cap_fraction=1.0)
    with pytest.raises(BudgetExceeded):
        cfg = osc.SamplerConfig(n_samples=256, target_rel_se=1e-9)
        osc.l4_integral(2.5, 4.0, mesh=mesh, config=cfg,
                        integrand=lambda xi: float(xi[0] ** 2))


def test_l4_sampling_deterministic(small25):
    mesh, _ = small25
    a = osc.l4_integral(2.5, 4.0, mesh=mesh, integrand=lambda xi: 1.0)
    b = osc.l4_integral(2.5, 4.0, mesh=mesh, integrand=lambda xi: 1.0)
    assert a.value == b.value
    assert a.std_error == b.std_error


# ------------------------------------------------------- dyadic partitions

def test_curvature_partition_sums_to_one():
    kappa = np.array([0.0, 1e-300, 1e-8, 3e-3, 0.049, 0.2, 5.0, -0.02])
    rows = osc.curvature_partition(kappa, c0=0.05, depth=5)
    assert rows.shape == (7, 8)
    assert np.all(rows >= 0.0)
    np.testing.assert_allclose(rows.sum(axis=0), 1.0, atol=1e-12)


def test_curvature_partition_band_support():
    c0, depth = 0.05, 5
    for k in range(1, depth + 1):
        lo, hi = 2.0 ** -k * c0, 2.0 ** (2 - k) * c0
        vals = np.array([lo * 0.999, hi * 1.001, np.sqrt(lo * hi)])
        rows = osc.curvature_partition(vals, c0=c0, depth=depth)
        assert rows[k, 0] == 0.0
        assert rows[k, 1] == 0.0
        assert rows[k, 2] == pytest.approx(1.0, abs=1e-12)


def test_normal_partition_sums_to_one():
    cross = np.array([1.0, 0.7, 1e-2, 1e-7, 1e-300])
    rows = osc.normal_partition(cross, j_max=8)
    assert rows.shape == (10, 5)
    assert np.all(rows >= 0.0)
    np.testing.assert_allclose(rows.sum(axis=0), 1.0, atol=1e-12)


def test_normal_partition_band_support():
    j_max = 8
    for j in range(2, j_max + 1):
        lo, hi = 2.0 ** -j, 2.0 ** (2 - j)
        vals = np.array([lo * 0.999, min(hi * 1.001, 1.0 - 1e-9),
                         2.0 ** (1 - j)])
        rows = osc.normal_partition(vals, j_max=j_max)
        assert rows[j, 0] == 0.0
        if hi * 1.001 < 1.0:
            assert rows[j, 1] == 0.0
        assert rows[j, 2] == pytest.approx(1.0, abs=1e-12)


# ------------------------------------------------------ dyadic diagnostics

def test_refine_subdivides_onto_surface(mesh25):
    fine = osc.refine_mesh(mesh25, 1)
    assert len(fine.triangles) == 4 * len(mesh25.triangles)
    assert fine.resolution == 2 * mesh25.resolution
    assert fine.level == mesh25.level
    assert np.abs(dsp.eval_e(fine.vertices) - 2.5).max() <= 1e-9
    assert fine.areas.min() > 0.0
    assert fine.total_area == pytest.approx(mesh25.total_area, rel=5e-3)


def test_dyadic_bound_holds_off_axis(fine25, tset25):
    w = np.array([1.0, 0.0, 0.0])
    table = osc.dyadic_diagnostics(fine25, tset25, w,
                                   osc.DyadicConfig(j_max=8))
    assert table.n_violations == 0
    # the dichotomy must not absorb every cell for a direction this far
    # from the tangential normals
    assert table.d_omega > 0.7
    assert int((~table.branch2).sum()) > 0
    assert np.isfinite(table.fitted_constant)
    assert table.row_constant > 0.0
    assert np.all(table.support_counts >= table.config.min_support)


def test_dyadic_row_sums_within_band_volumes(fine25, tset25):
    w = np.array([1.0, 0.0, 0.0])
    table = osc.dyadic_diagnostics(fine25, tset25, w,
                                   osc.DyadicConfig(j_max=8))
    assert np.all(table.volumes >= 0.0)
    depth = table.config.depth
    row_sums = table.volumes.sum(axis=1)
    assert np.all(row_sums <= table.band_volumes[1:depth + 1] + 1e-9)


def test_dyadic_band_volumes_halve_in_small_curvature_range(fine25, tset25):
    # below |K| ~ 6e-3 the volume of {|K| <= c} is linear in c, so the
    # dyadic band volumes scale like 2^-k
    w = np.array([1.0, 0.0, 0.0])
    table = osc.dyadic_diagnostics(fine25, tset25, w,
                                   osc.DyadicConfig(depth=3, c0=0.005,
                                                    j_max=8))
    rows = 2.0 ** np.arange(1, 4) * table.band_volumes[1:4]
    assert rows.max() / rows.min() < 1.15


def test_dyadic_far_angular_bins_empty(fine25, tset25):
    w = np.array([1.0, 0.0, 0.0])
    table = osc.dyadic_diagnostics(fine25, tset25, w,
                                   osc.DyadicConfig(j_max=14))
    assert table.volumes[:, 13:].sum() == 0.0


def test_dyadic_support_guard(mesh25, tset25):
    with pytest.raises(ValueError, match="deepest curvature band"):
        osc.dyadic_diagnostics(mesh25, tset25, np.array([1.0, 0, 0]),
                               osc.DyadicConfig(min_support=10 ** 9))


def test_dyadic_config_validated():
    with pytest.raises(ValueError):
        osc.DyadicConfig(depth=0)
    with pytest.raises(ValueError):
        osc.DyadicConfig(c0=0.0)
    with pytest.raises(ValueError):
        osc.DyadicConfig(min_support=0)
    with pytest.raises(ValueError):
        osc.DyadicConfig(dichotomy_factor=0.0)
