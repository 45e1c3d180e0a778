"""Circuit depth of a hopping model on random cubic graphs.

The per-step depth depends only on the number of colors, so it stays flat
as the graph grows; the preparation grows only through the fermionic
permutation, which is logarithmic in the number of sites.

Run with ``python3 demos/depth_sweep.py``.
"""

import math

from auxferm.circuits import full_depth_report
from auxferm.encoder import encode_hamiltonian
from auxferm.models import hopping_model, random_regular_graph


def main() -> None:
    print(f"{'N':>4} {'chi':>4} {'nu':>3} {'per step':>9} {'prep':>7} {'prep - 2nu log2 N':>18}")
    for n in (8, 16, 32, 64, 128):
        model = hopping_model(random_regular_graph(n, 3, seed=2))
        asg = model.assignment()
        rep = full_depth_report(encode_hamiltonian(model, model.layout(asg), asg), steps=10)
        print(f"{n:>4} {rep.chi:>4} {rep.nu:>3} {rep.per_step_depth:>9} {rep.prep_depth:>7g} "
              f"{rep.prep_depth - 2 * rep.nu * math.log2(n):>18g}")

    print("\nfull table for the largest instance:\n")
    print(rep.table())


if __name__ == "__main__":
    main()
