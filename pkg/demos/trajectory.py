"""Follow an orbit near the C0 cycle and print which corner it is closest to."""

import numpy as np

from rspnet import equilibria as eq
from rspnet import game_core as gc
from rspnet import integrator as it

p = (-0.4, -0.5)
mid = 0.5 * (eq.vertex_location("PS") + eq.vertex_location("RS"))
s0 = 0.995 * gc.embed(mid) + 0.005 * gc.SimplexState.nash().vector
tr = it.integrate(p, it.to_chart(s0, "log"), 600.0, chart="log", t_eval=np.arange(0.0, 600.0, 5.0))
last = None
for t, l in zip(tr.times, tr.states):
    r = gc.reduce(gc.from_log(l))
    v = min(eq.VERTICES, key=lambda v: np.linalg.norm(r - eq.vertex_location(v)))
    if v != last:
        print(f"t={t:6.1f}  near {v}")
        last = v
