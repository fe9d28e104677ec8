"""Which itineraries can an orbit near the network follow?"""

import warnings

from rspnet import hetnet as hn
from rspnet import switching as sw

warnings.simplefilter("ignore", hn.NonLinearizableWarning)

p = (0.3, -0.5)
for text in ("PP,SP,SS", "PP,SP,SR,PR,PP", "PP,SP,SR,RR", "C0,C0", "C2,C2"):
    v = sw.check_attainable(sw.Itinerary.parse(text), p, h=1e-3)
    print(f"{text:16s} {v.outcome:14s} {v.note}")

lhs, rhs, decided = sw.dwld_inequality(p, 1e-3)
print(f"tie-win-loss-tie bound: LHS >= {lhs[0]:.6f}, RHS <= {rhs[1]:.3e}, decided={decided}")

m = sw.measure_ratio(p, sw.Itinerary(("PP", "SP", "SS")), h=1e-3, n_samples=20_000)
print(f"followers share {m.ratio:.3e} <= (h/(1-h))^{m.p_est:.2f} = {m.bound:.3e}")
