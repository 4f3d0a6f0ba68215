"""Heaviest hyperflow edge against the sublinear bound, across block lengths.

For (3,6)-regular codes the bound is 4 n^0.30103.  The ratio column shows how
much room the bound leaves on typical noise.
"""

import numpy as np

from lpsc.bounds import check_bound_on_instance
from lpsc.decoder import gamma_from_error
from lpsc.graphs import build_regular
from lpsc.witness import find_dual_witness, remove_cycles_and_normalize, to_wdag

rng = np.random.default_rng(0)
print(f"{'n':>4} {'alpha_max':>10} {'bound':>8} {'ratio':>6}  unified optimum")
for n in (24, 48, 72, 96):
    worst = None
    for seed in range(6):
        g = build_regular(3, 6, n, seed=seed)
        gamma = gamma_from_error((rng.random(n) < 0.05).astype(int))
        res = find_dual_witness(g, gamma)
        if res.weighting is None:
            continue
        h = remove_cycles_and_normalize(to_wdag(g, res.weighting, gamma), g)
        rep = check_bound_on_instance(g, h.to_weighting(g), gamma)
        assert rep.ok, rep.violations
        if worst is None or rep.ratio > worst.ratio:
            worst = rep
    if worst is not None:
        print(f"{n:>4} {float(worst.alpha_max):>10.4f} {worst.bound:>8.3f} {worst.ratio:>6.3f}  {worst.unified_value}")
