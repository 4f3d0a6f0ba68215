"""Decode one noisy word, then read the same answer off a dual witness.

The LP decoder succeeds exactly when a dual witness with positive slack
exists.  The witness is cleaned into an acyclic hyperflow, whose heaviest
edge is the quantity the bounds control.
"""

import numpy as np

from lpsc.bounds import max_edge_weight
from lpsc.decoder import gamma_from_error, lp_decode
from lpsc.graphs import build_regular
from lpsc.witness import find_dual_witness, remove_cycles_and_normalize, to_wdag, verify_hyperflow

g = build_regular(3, 6, 30, seed=4)
rng = np.random.default_rng(1)
eta = (rng.random(g.n_vars) < 0.08).astype(int)
gamma = gamma_from_error(eta)
print(f"code: n={g.n_vars}, m={g.n_checks}; flipped bits: {np.flatnonzero(eta).tolist()}")

dec = lp_decode(g, gamma)
res = find_dual_witness(g, gamma)
print(f"LP decoding succeeds: {dec.success}")
print(f"best witness slack t* = {res.margin}  (positive iff success)")

if res.weighting is not None:
    h = remove_cycles_and_normalize(to_wdag(g, res.weighting, gamma), g)
    w = h.to_weighting(g)
    print(f"hyperflow verifies: {verify_hyperflow(g, gamma, w).ok}")
    print(f"nonzero edges: {sum(1 for x in w.values() if x)} of {len(g.edges)}")
    print(f"alpha_max = {max_edge_weight(w)} ~ {float(max_edge_weight(w)):.4f}")
