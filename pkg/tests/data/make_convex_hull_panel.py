"""Regenerate convex_hull_panel.csv, the bundled end-to-end fixture.

Six donors on smooth random-walk paths (PCG64, seed 2011), rounded to four
decimals; the treated path is 0.45*d01 + 0.35*d02 + 0.20*d03 over 1995-2014
with an effect of 0.5, 1.0, ..., 2.5 added after 2009.

    python3 tests/data/make_convex_hull_panel.py
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from scmkit.fixtures import gen_convex_hull_panel
from scmkit.panel import write_long_csv

WEIGHTS = (0.45, 0.35, 0.20, 0.0, 0.0, 0.0)
EFFECT = (0.5, 1.0, 1.5, 2.0, 2.5)


def build():
    rng = np.random.default_rng(2011)
    steps = rng.normal(0.1, 0.3, size=(20, 6))
    levels = np.array([8.0, 11.0, 9.5, 14.0, 6.0, 10.5])
    paths = np.round(levels + np.cumsum(steps, axis=0), 4)
    return gen_convex_hull_panel(WEIGHTS, paths, EFFECT, start=1995)


if __name__ == "__main__":
    write_long_csv(build(), Path(__file__).with_name("convex_hull_panel.csv"))
