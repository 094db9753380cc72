"""
Acceptance checks, one test per criterion.

Each test prints one ``CRITERION n PASS|FAIL`` line (also collected into the
pytest terminal summary).  Run directly with ``python3 tests/test_acceptance.py``
to get the lines without pytest.
"""

import math
import sys
import time
from pathlib import Path

import numpy as np

from alp import cli
from alp.experiments import exp_splitting_scheme, ledger_tolerance
from alp.inequalities import (
    FieldEnsembleSpec,
    default_suite,
    gen_ensemble,
    refinement_table,
)
from alp.norms import NormSpec, inner_product_Hs, norm_H0s
from alp.paraproduct import bony
from alp.solver import (
    RotationSpec,
    SolverConfig,
    coriolis_term,
    eval_rotation,
    initial_field,
    run,
    shear_exact,
)
from alp.spectral import (
    Grid,
    dyadic_block_iso,
    dyadic_block_vert,
    filter_bank,
    forward_transform,
    product,
)

RESULTS: list[str] = []

# row names covered by the refinement check (trilinear, product, div-free,
# Bernstein, commutator, interpolation)
REFINED = (
    "trilinear_Hs", "product_H0s", "product_H0s_self", "divfree_grad", "divfree_cq",
    "bernstein_hv_upper", "bernstein_hv_lower", "bernstein_vh_upper", "bernstein_vh_lower",
    "bernstein_hv_embed", "bernstein_vh_embed", "commutator", "interpolation",
)


def report(n: int, ok: bool, detail: str):
    line = f"CRITERION {n} {'PASS' if ok else 'FAIL'}: {detail}"
    RESULTS.append(line)
    print(line, flush=True)
    assert ok, line


def _white(grid, rng, comps=None):
    shape = grid.shape if comps is None else (comps,) + grid.shape
    return forward_transform(rng.standard_normal(shape), grid)


def test_criterion_1_partition_and_bony():
    t0 = time.perf_counter()
    g = Grid.cube(32)
    rng = np.random.default_rng(20240101)
    worst_pou = worst_bony = 0.0
    for _ in range(50):
        u, v = _white(g, rng), _white(g, rng)
        for kind, blk in (("iso", dyadic_block_iso), ("vert", dyadic_block_vert)):
            acc = sum(blk(u, j).coeffs for j in filter_bank(g, kind).indices)
            worst_pou = max(worst_pou, np.sqrt(np.sum(np.abs(u.coeffs - acc) ** 2)) / u.norm())
            ref = product(u, v)
            worst_bony = max(worst_bony, (bony(u, v, kind).total() - ref).norm() / ref.norm())
    wall = time.perf_counter() - t0
    ok = worst_pou <= 1e-12 and worst_bony <= 1e-12 and wall < 60
    report(1, ok, f"partition {worst_pou:.2e} <= 1e-12, Bony {worst_bony:.2e} <= 1e-12, "
                  f"{wall:.1f}s < 60s (50 fields, 32^3)")


def test_criterion_2_coriolis_skew_symmetry():
    g = Grid.cube(32)
    spec = NormSpec(0.0, 0.6)
    fields = gen_ensemble(FieldEnsembleSpec(seed=7, count=50, divfree=False), g)
    worst = 0.0
    for kind in ("constant-e3", "beta-plane", "x1-only-general"):
        B = eval_rotation(RotationSpec(kind, beta=0.5), 0.3, g)
        for u in fields:
            val = abs(inner_product_Hs(coriolis_term(u, B), u, spec))
            worst = max(worst, val / norm_H0s(u, 0.6) ** 2)
    report(2, worst <= 1e-11, f"max |<u x B, u>_H0s| / ||u||^2 = {worst:.2e} <= 1e-11 "
                              "(3 rotation kinds x 50 fields, s = 0.6)")


def test_criterion_3_linear_decay_and_order():
    g = Grid.cube(32)
    # (a) single mode, nonlinearity off, both viscosities
    lin = SolverConfig(g, nu_h=0.1, nu_v=0.03, epsilon=1.0, dt=0.01, t_end=1.0,
                       rotation=RotationSpec("zero"), nonlinear=False, initial="mode", amplitude=1.0)
    u0 = initial_field(lin)
    res = run(lin, u0)
    # mode (0, cos(x1 + x3), 0): |k_h|^2 = 1, k3^2 = 1
    exact = u0 * math.exp(-(0.1 + 0.03) * 1.0)
    e_lin = (res.state.u - exact).norm() / exact.norm()
    # (b) full system, shear data, under constant rotation: exact solution
    g = Grid.cube(16)
    errs = {}
    for dt in (0.01, 0.005, 0.0025):
        c = SolverConfig(g, nu_h=0.1, epsilon=0.1, dt=dt, t_end=1.0,
                         rotation=RotationSpec("constant-e3"), initial="shear", amplitude=0.5)
        errs[dt] = (run(c, initial_field(c)).state.u - shear_exact(c, 1.0, 0.5)).norm()
    # (c) order on the Doppler-shifted shear, whose time error is not zero
    shifted = []
    for dt in (0.01, 0.005, 0.0025):
        c = SolverConfig(g, nu_h=0.1, epsilon=1.0, dt=dt, t_end=1.0,
                         rotation=RotationSpec("zero"), initial="shifted-shear", amplitude=0.5)
        shifted.append((run(c, initial_field(c)).state.u - shear_exact(c, 1.0, 0.5, 1.0)).norm())
    orders = [math.log2(shifted[i] / shifted[i + 1]) for i in range(2)]
    C = max(e / dt**2 for dt, e in errs.items())
    ok = e_lin <= 1e-12 and min(orders) >= 1.9 and all(e <= 1e-12 for e in errs.values())
    report(3, ok, f"mode decay rel err {e_lin:.2e} <= 1e-12 (32^3); shear err <= {C:.2e} dt^2 "
                  f"(max {max(errs.values()):.2e}); observed order "
                  f"{orders[0]:.3f}, {orders[1]:.3f} >= 1.9 (shifted shear, 16^3)")


def test_criterion_4_energy_ledger():
    t0 = time.perf_counter()
    nu_h = 0.1
    c = SolverConfig(Grid.cube(32), nu_h=nu_h, epsilon=0.1, dt=0.01, t_end=5.0,
                     rotation=RotationSpec("beta-plane", beta=0.5), initial="taylor-green",
                     amplitude=0.1 * nu_h)
    res = run(c, initial_field(c))
    inc = res.diagnostics.ledger_increments()
    wall = time.perf_counter() - t0
    tol = ledger_tolerance(c.dt)
    ok = res.healthy and inc.max() <= tol and wall < 600 and res.state.t == 5.0
    report(4, ok, f"max ledger increment {inc.max():.2e} <= {tol:.0e} over {len(inc)} steps, "
                  f"{wall:.0f}s < 600s (32^3, beta-plane, eps = 0.1)")


_SPLIT = {}


def _splitting():
    if "rep" not in _SPLIT:
        c = SolverConfig(Grid.cube(32), nu_h=0.1, epsilon=1.0, dt=0.01, t_end=1.0,
                         rotation=RotationSpec("x1-only-general", beta=0.5),
                         initial="random", amplitude=0.01, seed=0)
        _SPLIT["rep"] = exp_splitting_scheme(c, N=1, epsilons=(1.0, 0.1, 0.01))
    return _SPLIT["rep"]


def test_criterion_5_localization_invariant():
    rep = _splitting()
    loc = max(r["max_localization_defect"] for r in rep.rows)
    ctrl = max(v for k, v in rep.summary.items() if k.startswith("control_defect_t1"))
    ok = loc <= 1e-10 and ctrl > 1e-4
    report(5, ok, f"max ||v - S_N^(x2,x3) v|| / ||v|| = {loc:.2e} <= 1e-10 "
                  f"(eps 1, 0.1, 0.01); x2-dependent control reaches {ctrl:.2e} > 1e-4 by t = 1")


def test_criterion_6_uniform_horizon():
    rep = _splitting()
    hs = [r["horizon"] for r in rep.rows]
    spread = rep.summary["horizon_spread"]
    report(6, spread < 0.10, f"horizons {', '.join(f'{h:g}' for h in hs)} "
                             f"(t_end {rep.summary['t_end']:g}); spread {spread:.3f} < 0.10")


def test_criterion_7_inequality_refinement():
    t0 = time.perf_counter()
    spec = FieldEnsembleSpec(seed=0, count=100)
    coarse = default_suite(Grid.cube(16), spec)
    fine = default_suite(Grid.cube(32), spec)
    table = refinement_table(coarse, fine)
    factors = {n: max(r, 1 / r) for n, (wa, wb, r) in table.items() if n in REFINED}
    worst_name = max(factors, key=factors.get)
    interp = max(s["interpolation"].worst_ratio for s in (coarse, fine))
    wall = time.perf_counter() - t0
    missing = [n for n in REFINED if n not in factors]
    ok = not missing and factors[worst_name] < 4 and interp <= 1 + 1e-10 and wall < 900
    report(7, ok, f"worst refinement factor {factors[worst_name]:.3f} < 4 ({worst_name}); "
                  f"interpolation {interp:.17g} <= 1 + 1e-10; {wall:.0f}s < 900s")


SOLVE_CFG = """\
grid = 16
nu_h = 0.05
epsilon = 0.1
dt = 0.01
t_end = 0.2
rotation = beta-plane
initial = random
amplitude = 0.05
seed = 3
"""

VERIFY_CFG = """\
grid = 16
target = all
count = 8
seed = 3
"""


def test_criterion_8_determinism(tmp_path):
    same = []
    for sub, text in (("solve", SOLVE_CFG), ("verify", VERIFY_CFG)):
        cfg = tmp_path / f"{sub}.cfg"
        cfg.write_text(text)
        outs = []
        for i in range(2):
            out = tmp_path / f"{sub}-{i}"
            status = cli.main([sub, "--config", str(cfg), "--out", str(out)])
            run_dir = next(out.iterdir())
            outs.append((status, {p.name: p.read_bytes() for p in sorted(run_dir.glob("*.csv"))}))
        same.append(outs[0][0] == outs[1][0] == 0 and outs[0][1] == outs[1][1] and outs[0][1])
        n_csv = len(outs[0][1])
    report(8, all(same), f"solve and verify CSV bytes identical across repeated runs "
                         f"(solve {'ok' if same[0] else 'differs'}, verify "
                         f"{'ok' if same[1] else 'differs'}, {n_csv} verify CSVs)")


if __name__ == "__main__":
    import tempfile

    failed = 0
    tests = [v for k, v in sorted(globals().items()) if k.startswith("test_criterion")]
    for t in tests:
        try:
            if "tmp_path" in t.__code__.co_varnames[: t.__code__.co_argcount]:
                with tempfile.TemporaryDirectory() as d:
                    t(Path(d))
            else:
                t()
        except AssertionError:
            failed += 1
    sys.exit(1 if failed else 0)
