#!/usr/bin/env python3
"""Recompute the Gronwall constant on the reference run and compare with the frozen one."""

import sys

from alp.experiments import FROZEN_GRONWALL_C, calibrate_gronwall, reference_config

if __name__ == "__main__":
    c = reference_config()
    C = calibrate_gronwall(c)
    print(f"reference: {c.grid.shape}, nu_h={c.nu_h}, amplitude={c.amplitude}, t_end={c.t_end}")
    print(f"calibrated C = {C:.6e}   frozen C = {FROZEN_GRONWALL_C:.6e}")
    sys.exit(0 if C <= FROZEN_GRONWALL_C * (1 + 1e-12) else 1)
