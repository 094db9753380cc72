#!/usr/bin/env python3
"""Observed time order of the solver on the Doppler-shifted shear (exact solution known)."""

import math
import sys

from alp.solver import RotationSpec, SolverConfig, initial_field, run, shear_exact
from alp.spectral import Grid

if __name__ == "__main__":
    n = int(sys.argv[1]) if len(sys.argv) > 1 else 16
    errs = []
    for dt in (0.02, 0.01, 0.005, 0.0025):
        c = SolverConfig(Grid.cube(n), nu_h=0.1, epsilon=1.0, dt=dt, t_end=1.0,
                         rotation=RotationSpec("zero"), initial="shifted-shear", amplitude=0.5)
        e = (run(c, initial_field(c)).state.u - shear_exact(c, 1.0, 0.5, 1.0)).norm()
        order = f"{math.log2(errs[-1] / e):.3f}" if errs else "-"
        errs.append(e)
        print(f"dt={dt:<7g} err={e:.3e} order={order}", flush=True)
