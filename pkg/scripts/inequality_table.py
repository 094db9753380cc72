#!/usr/bin/env python3
"""Worst ratio per inequality row on two grids and their refinement factor."""

import sys

from alp.inequalities import FieldEnsembleSpec, default_suite, refinement_table
from alp.spectral import Grid

if __name__ == "__main__":
    na, nb = (int(a) for a in sys.argv[1:3]) if len(sys.argv) > 2 else (16, 32)
    count = int(sys.argv[3]) if len(sys.argv) > 3 else 20
    spec = FieldEnsembleSpec(seed=0, count=count)
    table = refinement_table(default_suite(Grid.cube(na), spec), default_suite(Grid.cube(nb), spec))
    print(f"{'name':<24}{'worst ' + str(na):>14}{'worst ' + str(nb):>14}{'factor':>10}")
    for name, (wa, wb, r) in sorted(table.items()):
        print(f"{name:<24}{wa:>14.4e}{wb:>14.4e}{r:>10.3f}")
