"""Unroll the heaviest part of a hyperflow into a weighted forest.

G_max keeps everything feeding the heaviest check-to-variable edge.  The
forest replicates each node once per path to the sink, which makes the weight
bookkeeping a tree computation.
"""

import numpy as np

from lpsc.decoder import gamma_from_error
from lpsc.forest import expand_to_forest, extract_gmax, replicate_depths, verify_forest_properties
from lpsc.graphs import build_regular
from lpsc.witness import find_dual_witness, remove_cycles_and_normalize, to_wdag

rng = np.random.default_rng(3)
for seed in range(100):
    g = build_regular(3, 6, 24, seed=seed)
    gamma = gamma_from_error((rng.random(g.n_vars) < 0.12).astype(int))
    res = find_dual_witness(g, gamma)
    if res.weighting is None:
        continue
    gm = extract_gmax(remove_cycles_and_normalize(to_wdag(g, res.weighting, gamma), g))
    if gm.sink is not None and len(gm.check_nodes) > 2:
        break

print(f"G_max: sink v{gm.sink} fed by c{gm.c_max} with weight alpha = {gm.alpha}")
print(f"  {len(gm.var_nodes)} variables, {len(gm.check_nodes)} checks")
forest = expand_to_forest(gm)
print(f"forest: {len(forest)} replicates, {len(forest.roots())} root(s)")
depths = replicate_depths(forest)
print(f"deepest replicate sits below {max(depths.values())} checks")
rep = verify_forest_properties(gm, forest)
print(f"all forest properties hold: {rep.ok}")
