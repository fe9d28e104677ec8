"""Colour the parameter square by cycle stability and write CSV + PGM next to this file."""

from collections import Counter
from pathlib import Path

from rspnet import stability as st

here = Path(__file__).parent
rows = st.region_atlas(0.05)
st.write_atlas_csv(rows, here / "regions.csv")
st.write_pgm(st.atlas_label_grid(rows), here / "regions.pgm")
for label, n in Counter(r["label"] for r in rows).most_common():
    print(f"{label:14s} {n}")
print("beta_tau =", round(st.beta_tau(), 5))
