"""Lyapunov spectra for the three reference runs, under both rate rows."""

import numpy as np

from rspnet import lyapunov as ly

for name, (p, s0, ref) in ly.BENCHMARKS.items():
    for field in ly.FIELDS:
        r = ly.lyapunov_spectrum(p, s0, 2000.0, field=field)
        print(f"{name:7s} {field:8s} {np.array2string(r.exponents, precision=4)}  {ly.classify_spectrum(r).value}")
    print(f"{name:7s} {'ref':8s} {np.array2string(np.array(ref), precision=4)}")
