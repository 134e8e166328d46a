"""Resolvent-denominator integrals on periodic grids.

The integrals all involve powers of h(p) = chi(e(p)) / |alpha - e(p) + i eta|
over the torus. Grids are uniform with a half-cell midpoint offset, which
keeps every critical point of e strictly between sample points and makes
h exactly even under the index reversal i -> N-1-i.

The four-denominator value uses the spectral identity

    I(u) = (2pi)^-3 sum_xi  H(xi)^4 e^{-i u.xi},
    H(xi) = Delta^3 sum_p h(p) e^{-i xi.p},

which for lattice shifts u equals the direct nine-fold Riemann sum
Delta^9 sum h(p)h(q)h(r)h(p+q+r-u) exactly (midpoint grids are closed
under sums of three points mod 2pi). Two independent slow oracles of
that sum back the FFT path in the tests.

Riemann sums here are trustworthy only when the grid resolves the eta
scale; every public value recomputes itself on the half grid and raises
UnderResolved when the two disagree by more than 5%.
"""

import logging
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import dispersion
from .dispersion import CutoffSpec
from .errors import UnderResolved, UShiftRounded
from .torus import wrap
from . import fitting

log = logging.getLogger(__name__)

RESOLUTION_RTOL = 0.05
ETA_BUDGET = 8.0  # grids must satisfy N >= ETA_BUDGET / eta


def _is_pow2(n):
    return n >= 4 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class ResolventParams:
    """Parameters of one resolvent-denominator experiment.

    u is the torus shift of the fourth denominator; it participates only
    in four_denominator and is rounded there to the nearest grid lattice
    vector. lam records the cutoff scale a theorem would require; it is
    enforced by callers, not here, because several experiments
    deliberately run outside theorem hypotheses (alpha = 3).
    """

    alpha: float
    eta: float
    n: int
    u: tuple = (0.0, 0.0, 0.0)
    cutoff: CutoffSpec = field(default_factory=CutoffSpec)
    lam: float = 0.3

    def __post_init__(self):
        if not (0.0 < self.eta <= 0.5):
            raise ValueError("eta must lie in (0, 1/2], got %r" % (self.eta,))
        if not _is_pow2(self.n):
            raise ValueError("n must be a power of two >= 4, got %r"
                             % (self.n,))
        u = tuple(float(x) for x in np.atleast_1d(self.u).ravel())
        if len(u) != 3:
            raise ValueError("u must have three components")
        object.__setattr__(self, "u", u)

    @property
    def spacing(self):
        return 2.0 * np.pi / self.n

    def with_n(self, n):
        return ResolventParams(alpha=self.alpha, eta=self.eta, n=n,
                               u=self.u, cutoff=self.cutoff, lam=self.lam)


@dataclass
class GridField:
    """Samples on the uniform midpoint grid plus their provenance."""

    values: np.ndarray
    params: ResolventParams
    kind: str  # "resolvent" | "spectrum"


def midpoints(n):
    """Grid coordinates -pi + (i + 1/2) 2pi/n."""
    return -np.pi + (np.arange(n) + 0.5) * (2.0 * np.pi / n)


def _e_grid(n):
    c = np.cos(midpoints(n))
    return (3.0 - c[:, None, None] - c[None, :, None] - c[None, None, :])


def resolvent_field(params, apply_cutoff=True):
    """Sample h(p) = [chi(e) or 1] / |alpha - e + i eta| on the grid."""
    e = _e_grid(params.n)
    h = 1.0 / np.sqrt((params.alpha - e) ** 2 + params.eta ** 2)
    if apply_cutoff:
        h *= dispersion.chi(e, params.cutoff)
    return GridField(values=h, params=params, kind="resolvent")


def fft_spectrum(gridfield):
    """Continuum-normalized DFT of a grid field.

    Returns H(xi) = Delta^3 sum_p f(p) e^{-i xi.p} over the midpoint
    grid, xi running over the integer frequencies of np.fft.fftfreq.
    The half-cell offset enters as a per-axis phase. For the (real,
    even) resolvent field the spectrum is real and even; tests pin this
    at 1e-10.
    """
    f = gridfield.values
    n = gridfield.params.n
    delta = gridfield.params.spacing
    spec = np.fft.fftn(f).astype(np.complex128)
    k = np.fft.fftfreq(n, d=1.0 / n)
    ph = np.exp(1j * k * (np.pi - 0.5 * delta))
    spec *= delta ** 3
    spec *= ph[:, None, None]
    spec *= ph[None, :, None]
    spec *= ph[None, None, :]
    return GridField(values=spec, params=gridfield.params, kind="spectrum")


# ---------------------------------------------------------------------------
# streamed Riemann sums (one and two denominators)


def _one_den_raw(alpha, eta, n):
    x = midpoints(n)
    c = np.cos(x)
    base = c[:, None] + c[None, :]
    eta2 = eta * eta
    total = 0.0
    for i in range(n):
        t = (alpha - 3.0 + c[i]) + base
        total += float(np.sum(1.0 / np.sqrt(t * t + eta2)))
    return total * (2.0 * np.pi / n) ** 3


def _two_den_raw(alpha, eta, n, q):
    x = midpoints(n)
    c = np.cos(x)
    cq = [np.cos(x + q[d]) for d in range(3)]
    base = c[:, None] + c[None, :]
    base_q = cq[1][:, None] + cq[2][None, :]
    eta2 = eta * eta
    total = 0.0
    for i in range(n):
        t1 = (alpha - 3.0 + c[i]) + base
        t2 = (alpha - 3.0 + cq[0][i]) + base_q
        total += float(np.sum(1.0 /
                              (np.sqrt(t1 * t1 + eta2)
                               * np.sqrt(t2 * t2 + eta2))))
    return total * (2.0 * np.pi / n) ** 3


def _resolution_guard(value, half_value, what):
    rel = abs(value - half_value) / abs(value)
    if rel > RESOLUTION_RTOL:
        raise UnderResolved(
            "%s changed %.1f%% between the half and full grid; "
            "increase n" % (what, 100.0 * rel))
    return rel


def one_denominator(params, check=True):
    """Riemann sum of the single-denominator integral over the torus.

    No cutoff enters: this is the bare integral of 1/|alpha - e + i eta|.
    With check enabled the value is recomputed on the half grid and must
    agree within 5%.
    """
    v = _one_den_raw(params.alpha, params.eta, params.n)
    if check:
        vh = _one_den_raw(params.alpha, params.eta, params.n // 2)
        _resolution_guard(v, vh, "one_denominator")
    return v


def two_denominator(params, q, check=True):
    """Riemann sum of the shifted two-denominator integral.

    q is an arbitrary torus shift (no grid rounding needed: the second
    factor is evaluated at p + q in closed form).
    """
    q = np.asarray(q, dtype=float).ravel()
    if q.shape != (3,):
        raise ValueError("q must have three components")
    v = _two_den_raw(params.alpha, params.eta, params.n, q)
    if check:
        vh = _two_den_raw(params.alpha, params.eta, params.n // 2, q)
        _resolution_guard(v, vh, "two_denominator")
    return v


# ---------------------------------------------------------------------------
# four denominators


def _lattice_shift(params):
    """Round u to the grid lattice; warn when the rounding is nonzero."""
    u = np.asarray(params.u, dtype=float)
    s = np.rint(u / params.spacing).astype(np.int64)
    offset = wrap(u - s * params.spacing)
    if np.max(np.abs(offset)) > 1e-12:
        warnings.warn(
            "u %s rounded to lattice vector %s (offset %s)"
            % (np.array2string(u, precision=6),
               np.array2string(s * params.spacing, precision=6),
               np.array2string(offset, precision=3)),
            UShiftRounded, stacklevel=3)
    return s % params.n


def _four_den_value(params, apply_cutoff):
    n = params.n
    delta = params.spacing
    s = _lattice_shift(params)
    h = resolvent_field(params, apply_cutoff=apply_cutoff).values
    spec = np.fft.fftn(h)
    k = np.fft.fftfreq(n, d=1.0 / n)
    ph = np.exp(1j * k * (np.pi - 0.5 * delta))
    spec *= ph[:, None, None]
    spec *= ph[None, :, None]
    spec *= ph[None, None, :]
    r = np.ascontiguousarray(spec.real)
    imag_leak = np.abs(spec.imag).max() / max(np.abs(r).max(), 1e-300)
    if imag_leak > 1e-8:
        raise UnderResolved(
            "spectrum lost evenness (imag/real = %.2e)" % imag_leak)
    del spec
    r **= 2
    r **= 2
    if np.all(s == 0):
        total = float(r.sum())
    else:
        u_eff = s * delta
        w = [np.exp(-1j * k * u_eff[d]) for d in range(3)]
        acc = r * w[0][:, None, None]
        acc *= w[1][None, :, None]
        acc *= w[2][None, None, :]
        total = float(acc.sum().real)
    return delta ** 12 * total / (2.0 * np.pi) ** 3


def four_denominator(params, apply_cutoff=True, check=True):
    """Momentum-conserving product of four resolvent denominators.

    Returns Delta^9 sum_{p,q,r} h(p)h(q)h(r)h(p+q+r-u) with periodic
    wrap, evaluated spectrally in O(N^3 log N). u is rounded to the
    nearest grid lattice vector (UShiftRounded warning reports the
    offset). The cutoff chi rides along by default, matching the
    definition the decay theorems work with.
    """
    v = _four_den_value(params, apply_cutoff)
    if check:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", UShiftRounded)
            vh = _four_den_value(params.with_n(params.n // 2), apply_cutoff)
        _resolution_guard(v, vh, "four_denominator")
    return v


def direct_four_denominator(params, apply_cutoff=True):
    """O(N^6) oracle for the four-denominator sum (no FFT).

    Builds the pair correlation T(m) = sum_l h(l) h(l+m) and the pair
    convolution W(m) = sum_{i+j=m} h(i) h(j) by explicit cyclic rolls,
    then contracts them. Feasible up to N = 16; used to validate the
    spectral path.
    """
    n = params.n
    s = _lattice_shift(params)
    h = resolvent_field(params, apply_cutoff=apply_cutoff).values
    hr = h[::-1, ::-1, ::-1]
    t_corr = np.empty_like(h)
    w_conv = np.empty_like(h)
    for m in np.ndindex(n, n, n):
        rolled = np.roll(h, shift=tuple(-np.array(m)), axis=(0, 1, 2))
        t_corr[m] = np.sum(h * rolled)
        rolled = np.roll(hr, shift=tuple(np.array(m) + 1), axis=(0, 1, 2))
        w_conv[m] = np.sum(h * rolled)
    c = (1 + s) % n
    t_shift = np.roll(t_corr, shift=tuple(-c), axis=(0, 1, 2))
    return float(np.sum(w_conv * t_shift)) * params.spacing ** 9


def literal_four_denominator(params, apply_cutoff=True):
    """Positional-arithmetic oracle: wraps p+q+r-u back onto the grid.

    Sums over explicit point pairs with the third index vectorized;
    every wrapped fourth point must land exactly on a midpoint, which
    doubles as a check that midpoint grids are closed under sums of
    three points. Feasible only for N = 4.
    """
    n = params.n
    if n > 4:
        raise ValueError("literal oracle is for n = 4 only")
    s = _lattice_shift(params)
    u_eff = s * params.spacing
    h = resolvent_field(params, apply_cutoff=apply_cutoff).values
    x = midpoints(n)
    pts = np.stack(np.meshgrid(x, x, x, indexing="ij"), axis=-1)
    pts = pts.reshape(-1, 3)
    vals = h.reshape(-1)
    total = 0.0
    for i in range(len(pts)):
        for j in range(len(pts)):
            fourth = wrap(pts[i] + pts[j] + pts - u_eff)
            idx = np.rint((fourth + np.pi) / params.spacing - 0.5).astype(int)
            if np.max(np.abs(
                    fourth - (-np.pi + (idx + 0.5) * params.spacing))) > 1e-9:
                raise AssertionError("fourth point missed the grid")
            idx %= n
            flat = (idx[:, 0] * n + idx[:, 1]) * n + idx[:, 2]
            total += vals[i] * vals[j] * float(np.sum(vals * vals[flat]))
    return total * params.spacing ** 9


# ---------------------------------------------------------------------------
# sweeps


@dataclass
class SweepReport:
    """Result of an eta sweep: values, per-point resolution data, fits."""

    kind: str
    alpha: float
    etas: np.ndarray
    ns: np.ndarray
    values: np.ndarray
    rel_changes: np.ndarray
    shift: tuple
    fits: dict            # model name -> FitResult
    winner: str

    def as_dict(self):
        return {
            "kind": self.kind,
            "alpha": self.alpha,
            "etas": self.etas.tolist(),
            "ns": self.ns.tolist(),
            "values": self.values.tolist(),
            "rel_changes": self.rel_changes.tolist(),
            "shift": list(self.shift),
            "fits": {k: f.as_dict() for k, f in self.fits.items()},
            "winner": self.winner,
        }


def _budget_n(eta, n_min, n_max):
    need = int(2 ** np.ceil(np.log2(ETA_BUDGET / eta)))
    n = max(n_min, need)
    if n > n_max:
        raise UnderResolved(
            "eta %g needs n = %d, over the budget cap %d" % (eta, n, n_max))
    return n


def eta_sweep(kind, template, etas, q=None, n_max=2048):
    """Run one/two/four-denominator values over an eta list and fit models.

    Every eta gets the smallest power-of-two grid satisfying the
    n >= 8/eta budget (never below the template's n); the relative
    change against the half grid is recorded per point. Fits: log-log
    power, c1 + c2 |log eta|, and c |log eta|^q where the eta range
    admits it; the winner minimizes relative rms.
    """
    etas = np.asarray(sorted(etas, reverse=True), dtype=float)
    if len(etas) < 3:
        raise ValueError("an eta sweep needs at least three points")
    ratios = etas[:-1] / etas[1:]
    if np.max(np.abs(ratios / ratios[0] - 1.0)) > 1e-9:
        raise ValueError("eta list must be log-spaced")
    if kind not in ("one", "two", "four"):
        raise ValueError("kind must be one of 'one', 'two', 'four'")
    if kind == "two":
        if q is None:
            raise ValueError("two-denominator sweeps need the shift q")
        q = np.asarray(q, dtype=float).ravel()

    values = []
    rels = []
    ns = []
    for eta in etas:
        n = _budget_n(eta, template.n, n_max)
        p = ResolventParams(alpha=template.alpha, eta=float(eta), n=n,
                            u=template.u, cutoff=template.cutoff,
                            lam=template.lam)
        if kind == "one":
            v = _one_den_raw(p.alpha, p.eta, p.n)
            vh = _one_den_raw(p.alpha, p.eta, p.n // 2)
        elif kind == "two":
            v = _two_den_raw(p.alpha, p.eta, p.n, q)
            vh = _two_den_raw(p.alpha, p.eta, p.n // 2, q)
        else:
            v = _four_den_value(p, apply_cutoff=True)
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", UShiftRounded)
                vh = _four_den_value(p.with_n(p.n // 2), apply_cutoff=True)
        rels.append(_resolution_guard(v, vh, "%s_denominator" % kind))
        values.append(v)
        ns.append(n)
        log.debug("%s sweep: eta=%g n=%d value=%.6g", kind, eta, n, v)

    values = np.array(values)
    fits = {"power": fitting.fit_power(etas, values),
            "loglin": fitting.fit_loglin(etas, values)}
    try:
        fits["polylog"] = fitting.fit_polylog(etas, values)
    except ValueError:
        pass
    winner = min(fits, key=lambda k: fits[k].rms_rel)
    return SweepReport(kind=kind, alpha=template.alpha, etas=etas,
                       ns=np.array(ns), values=values,
                       rel_changes=np.array(rels),
                       shift=tuple(q) if kind == "two" else template.u,
                       fits=fits, winner=winner)
