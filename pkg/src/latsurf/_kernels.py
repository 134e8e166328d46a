"""Optional compiled kernel behind the phase quadrature.

Same arithmetic as the numpy path in oscillatory.PhaseQuadrature (per
triangle prefix sums of geometric phase sequences); the scalar loop
just avoids the row temporaries. When numba is missing HAVE_COMPILED
is False and callers stay on numpy.
"""

import numpy as np

try:
    from numba import njit
    HAVE_COMPILED = True
except ImportError:  # pragma: no cover - environment without numba
    njit = None
    HAVE_COMPILED = False


if HAVE_COMPILED:

    @njit(cache=True)
    def flat_sum_all(corners, weights, areas, splits, xi,
                     scratch_a, scratch_b):  # pragma: no cover - compiled
        acc = 0.0 + 0.0j
        for t in range(corners.shape[0]):
            n = splits[t]
            c0x = corners[t, 0, 0]
            c0y = corners[t, 0, 1]
            c0z = corners[t, 0, 2]
            g0 = c0x * xi[0] + c0y * xi[1] + c0z * xi[2]
            g1 = ((corners[t, 1, 0] - c0x) * xi[0]
                  + (corners[t, 1, 1] - c0y) * xi[1]
                  + (corners[t, 1, 2] - c0z) * xi[2])
            g2 = ((corners[t, 2, 0] - c0x) * xi[0]
                  + (corners[t, 2, 1] - c0y) * xi[1]
                  + (corners[t, 2, 2] - c0z) * xi[2])
            wa = weights[t, 0]
            dw1 = weights[t, 1] - wa
            dw2 = weights[t, 2] - wa
            area = areas[t]
            if n == 1:
                wbar = wa + (dw1 + dw2) / 3.0
                acc += area * wbar * np.exp(1j * (g0 + (g1 + g2) / 3.0))
                continue
            delta = 1.0 / n
            st1 = np.exp(1j * delta * g1)
            st2 = np.exp(1j * delta * g2)
            pa = 0.0 + 0.0j
            pb = 0.0 + 0.0j
            cur = 1.0 + 0.0j
            for k in range(n):
                pa += cur
                pb += k * cur
                scratch_a[k] = pa
                scratch_b[k] = pb
                cur *= st2
            t0 = 0.0 + 0.0j
            t1 = 0.0 + 0.0j
            t2 = 0.0 + 0.0j
            s0 = 0.0 + 0.0j
            s1 = 0.0 + 0.0j
            s2 = 0.0 + 0.0j
            cur = 1.0 + 0.0j
            for i in range(n - 1):
                va = cur * scratch_a[n - 1 - i]
                t0 += va
                t1 += i * va
                t2 += cur * scratch_b[n - 1 - i]
                vb = cur * scratch_a[n - 2 - i]
                s0 += vb
                s1 += i * vb
                s2 += cur * scratch_b[n - 2 - i]
                cur *= st1
            va = cur * scratch_a[0]
            t0 += va
            t1 += (n - 1) * va
            t2 += cur * scratch_b[0]
            up = (wa * t0 + delta * dw1 * (t1 + t0 / 3.0)
                  + delta * dw2 * (t2 + t0 / 3.0))
            inv = (wa * s0 + delta * dw1 * (s1 + 2.0 * s0 / 3.0)
                   + delta * dw2 * (s2 + 2.0 * s0 / 3.0))
            theta = delta * (g1 + g2)
            pref = (area / (n * n)) * np.exp(1j * (g0 + theta / 3.0))
            acc += pref * (up + np.exp(1j * theta / 3.0) * inv)
        return acc

else:  # pragma: no cover - environment without numba
    flat_sum_all = None
