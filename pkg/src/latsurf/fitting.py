"""Scaling-model fits shared by the sweep drivers.

Four model families cover every experiment in the package:

    power         y = c x^s          (log-log least squares)
    loglin        y = c1 + c2 |log x|
    polylog       y = c |log x|^q
    offset_power  y = a + b (x^-s - 1)/s   (nests loglin at s = 0)

Residuals are reported relative to the data, rms((y - fit)/y), so models
with different functional forms compare on one scale.
"""

from dataclasses import dataclass

import numpy as np
from scipy.optimize import least_squares


@dataclass(frozen=True)
class FitResult:
    model: str
    params: dict
    rms_rel: float

    def predict(self, x):
        x = np.asarray(x, dtype=float)
        if self.model == "power":
            return self.params["c"] * x ** self.params["s"]
        if self.model == "loglin":
            return self.params["c1"] + self.params["c2"] * np.abs(np.log(x))
        if self.model == "polylog":
            return self.params["c"] * np.abs(np.log(x)) ** self.params["q"]
        if self.model == "offset_power":
            return (self.params["a"] + self.params["b"]
                    * _expm1_ratio(self.params["s"], np.abs(np.log(x))))
        raise ValueError("unknown model %r" % self.model)

    def as_dict(self):
        return {"model": self.model, "rms_rel": self.rms_rel,
                **self.params}


def _rel_rms(y, pred):
    y = np.asarray(y, dtype=float)
    return float(np.sqrt(np.mean(((y - pred) / y) ** 2)))


def _check(x, y):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.ndim != 1 or x.shape != y.shape or len(x) < 2:
        raise ValueError("need two 1d arrays of equal length >= 2")
    if np.any(x <= 0) or np.any(y <= 0):
        raise ValueError("fits are defined for positive data only")
    return x, y


def fit_power(x, y):
    """Least squares for y = c x^s in log-log coordinates.

    s is the signed slope: decaying data gives s < 0. Callers sweeping a
    regularization eta downward usually report -s as the blow-up
    exponent.
    """
    x, y = _check(x, y)
    s, logc = np.polyfit(np.log(x), np.log(y), 1)
    fit = FitResult("power", {"c": float(np.exp(logc)), "s": float(s)}, 0.0)
    return FitResult("power", fit.params, _rel_rms(y, fit.predict(x)))


def fit_loglin(x, y):
    """Least squares for y = c1 + c2 |log x|."""
    x, y = _check(x, y)
    basis = np.vstack([np.ones_like(x), np.abs(np.log(x))]).T
    (c1, c2), *_ = np.linalg.lstsq(basis, y, rcond=None)
    fit = FitResult("loglin", {"c1": float(c1), "c2": float(c2)}, 0.0)
    return FitResult("loglin", fit.params, _rel_rms(y, fit.predict(x)))


def _expm1_ratio(s, L):
    # expm1(s L)/s, continued through s = 0 by its limit L
    if s == 0.0:
        return np.asarray(L, dtype=float).copy()
    return np.expm1(s * L) / s


def fit_offset_power(x, y):
    """Least squares for y = a + b (x^-s - 1)/s, the offset power family.

    In L = |log x| the model reads a + b expm1(sL)/s and tends to the
    log-linear model a + bL as s -> 0, so the log model is nested at
    s = 0 instead of sitting behind a parametrization singularity the
    way it does for a + b x^-s. The fitted s is then a usable growth
    exponent for data that may be logarithmic: slowly varying data
    comes out with s near 0, genuine power blow-up recovers its
    exponent (pure c x^-s is the member a = c, b = c s). Fitting is a
    grid multistart over s with the linear pair (a, b) profiled out,
    polished by Levenberg-Marquardt on all three parameters.
    """
    x, y = _check(x, y)
    L = np.abs(np.log(x))

    def profiled(s):
        basis = np.vstack([np.ones_like(L), _expm1_ratio(s, L)]).T
        (a, b), *_ = np.linalg.lstsq(basis, y, rcond=None)
        res = y - basis @ (a, b)
        return (a, b), float(res @ res)

    grid = np.linspace(-2.0, 2.0, 81)
    sse = [profiled(s)[1] for s in grid]
    s0 = grid[int(np.argmin(sse))]
    (a0, b0), _ = profiled(s0)

    def residual(theta):
        a, b, s = theta
        return a + b * _expm1_ratio(s, L) - y

    sol = least_squares(residual, (a0, b0, s0), method="lm")
    a, b, s = (float(v) for v in sol.x)
    fit = FitResult("offset_power", {"a": a, "b": b, "s": s}, 0.0)
    return FitResult("offset_power", fit.params, _rel_rms(y, fit.predict(x)))


def fit_polylog(x, y):
    """Least squares for y = c |log x|^q (log of |log x| regression).

    Requires |log x| bounded away from zero; x must stay below exp(-1/4)
    or above exp(1/4) so the inner logarithm is informative.
    """
    x, y = _check(x, y)
    ll = np.abs(np.log(x))
    if np.any(ll < 0.25):
        raise ValueError("|log x| too small for a polylog fit")
    q, logc = np.polyfit(np.log(ll), np.log(y), 1)
    fit = FitResult("polylog", {"c": float(np.exp(logc)), "q": float(q)}, 0.0)
    return FitResult("polylog", fit.params, _rel_rms(y, fit.predict(x)))


def fit_decay_floor(x, y, s_min):
    """Best fit of y = c x^(-s) subject to s >= s_min.

    Used to ask whether any power law at least as steep as s_min can
    compete with a slowly varying model: the returned rms_rel is the
    best achievable over the constrained family. For each s the optimal
    c in the relative-error metric is closed form; s is scanned on a
    grid then polished by golden section.
    """
    x, y = _check(x, y)
    if s_min < 0:
        raise ValueError("s_min must be nonnegative")

    def best_c_rms(s):
        t = x ** (-s) / y
        c = float(t.sum() / (t * t).sum())
        return c, float(np.sqrt(np.mean((1.0 - c * t) ** 2)))

    grid = np.linspace(s_min, s_min + 3.0, 121)
    rms = [best_c_rms(s)[1] for s in grid]
    i = int(np.argmin(rms))
    lo = grid[max(i - 1, 0)]
    hi = grid[min(i + 1, len(grid) - 1)]
    gr = (np.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    for _ in range(60):
        m1 = b - gr * (b - a)
        m2 = a + gr * (b - a)
        if best_c_rms(m1)[1] < best_c_rms(m2)[1]:
            b = m2
        else:
            a = m1
    s = max(0.5 * (a + b), s_min)
    c, r = best_c_rms(s)
    return FitResult("power", {"c": c, "s": float(-s)}, r)


def best_model(fits):
    """The fit with the smallest relative residual."""
    fits = list(fits)
    if not fits:
        raise ValueError("no fits given")
    return min(fits, key=lambda f: f.rms_rel)
