"""Regularized denominator integrals and their eta scaling.

The resolvent-style integrands 1/(|a - e| + i eta) blow up as the
smoothing eta goes to zero at rates that separate the cases: one
denominator grows like |log eta|, two denominators shifted along a
straight line in the surface grow like eta^-1/2, a generic shift
stays polylogarithmic, and the four-fold convolution off band center
runs close to its trivial eta^-1 rate on desk-size grids, with the
log factors showing up as the polylog model outfitting every pure
power. The sweeps fit competing scaling models and report which wins;
the offset-power family reads off a blow-up exponent that stays
meaningful for logarithmic data.

Run:  python3 demos/eta_sweeps.py   (two to three minutes)
"""

import numpy as np

from latsurf import fitting
from latsurf.denominators import ResolventParams, eta_sweep

etas = 2.0 ** -np.arange(3, 7)


def show(rep):
    s = fitting.fit_offset_power(rep.etas, rep.values).params["s"]
    print("  winner %-8s  blow-up s = %+.3f" % (rep.winner, s))
    for eta, n, v in zip(rep.etas, rep.ns, rep.values):
        print("    eta = 2^%-3d  N = %-4d  value = %12.4f"
              % (round(np.log2(eta)), n, v))


print("one denominator, a = 3 (log growth expected):")
show(eta_sweep("one", ResolventParams(alpha=3.0, eta=0.125, n=64),
               etas, n_max=512))

print("\ntwo denominators, shift along the line 0.5 (1,-1,0) "
      "(eta^-1/2 expected):")
show(eta_sweep("two", ResolventParams(alpha=3.0, eta=0.125, n=64),
               etas, q=(0.5, -0.5, 0.0), n_max=512))

print("\ntwo denominators, generic shift (polylog expected):")
show(eta_sweep("two", ResolventParams(alpha=3.0, eta=0.125, n=64),
               etas, q=(1.1, 0.3, 2.0), n_max=512))

# the four-fold convolution needs the finer template grid to pass its
# resolution doubling check, so it sweeps a shallower eta range
print("\nfour denominators via FFT, a = 2.5 (near the trivial eta^-1):")
show(eta_sweep("four", ResolventParams(alpha=2.5, eta=0.25, n=256),
               2.0 ** -np.arange(2, 6), n_max=256))
