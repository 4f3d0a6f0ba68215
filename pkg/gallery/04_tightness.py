"""A family where every witness needs a heavy edge.

Noise sits on a binary tree of depth y hanging off one check; each noisy
variable must be paid for through that check.  The explicit hyperflow and the
LP optimum both scale with the number of tree leaves b_n = 2^y.
"""

from fractions import Fraction

from lpsc.tightness import build_tight_instance, certify_lower_bound, verify_explicit_hyperflow

for y in (1, 2):
    inst = build_tight_instance(3, 4, yn=y)
    chk = verify_explicit_hyperflow(inst, Fraction(1, 4))
    print(f"y={y}: n={inst.graph.n_vars}, b_n={inst.b_n}")
    print(f"  explicit hyperflow verifies: {chk.ok}, its max weight {chk.max_weight}")
    if y == 1:
        # y=2 takes about a minute and a half; try it from the CLI with `lpsc tight certify`
        cert = certify_lower_bound(inst)
        print(f"  smallest possible max weight {cert.min_max_weight} >= b_n: {cert.ok}")
