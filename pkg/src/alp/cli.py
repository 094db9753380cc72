"""
Command line entry point: ``alp <subcommand> --config <path> [--seed n] [--out dir]``.

Exit status: 0 on success, 1 when a checked property fails, 2 on a
configuration error or unknown subcommand.
"""

from __future__ import annotations

import argparse
import math
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from . import experiments as E
from . import inequalities as Q
from . import io
from .norms import (
    norm_dyadic_iso,
    norm_dyadic_vert,
    norm_gradh_H0s,
    norm_gradh_Hs,
    norm_gradh_LinfvL2h,
    norm_H0s,
    norm_Hs,
    norm_L2,
    norm_LinfvL2h,
    norm_Lp,
)
from .paraproduct import block_energy, bony
from .solver import DIAG_COLUMNS, ConfigError, SolverConfig, initial_field, run
from .spectral import dyadic_block_iso, dyadic_block_vert, filter_bank, product

SUBCOMMANDS = ("decompose", "norms", "verify", "solve", "experiment")


def _with_seed(cfg, seed):
    if seed is None:
        return cfg
    if isinstance(cfg, SolverConfig):
        return replace(cfg, seed=seed)
    if isinstance(cfg, io.VerifyConfig):
        return replace(cfg, ensemble=replace(cfg.ensemble, seed=seed))
    return replace(cfg, solver=replace(cfg.solver, seed=seed))


def _field(cfg):
    if isinstance(cfg, io.VerifyConfig):
        return Q.gen_ensemble(replace(cfg.ensemble, count=1), cfg.grid)[0]
    solver = cfg.solver if isinstance(cfg, io.ExperimentConfig) else cfg
    return initial_field(solver)


def _s(cfg) -> float:
    return cfg.solver.s if isinstance(cfg, io.ExperimentConfig) else cfg.s


# ---------------------------------------------------------------------------
# subcommands; each returns (status, manifest extras)


def cmd_decompose(cfg, out: Path):
    u = _field(cfg)
    rows, worst = [], 0.0
    for kind, block in (("iso", dyadic_block_iso), ("vert", dyadic_block_vert)):
        bank = filter_bank(u.grid, kind)
        total = block(u, bank.jmin)
        for j in bank.indices:
            if j > bank.jmin:
                total = total + block(u, j)
        ref = u.norm()
        err = (u - total).norm() / ref if ref > 0 else (u - total).norm()
        worst = max(worst, err)
        e = block_energy(u, kind)
        for comp in range(3):
            ec = block_energy(u[comp], kind)
            rows.extend((kind, comp + 1, j, ec[j]) for j in bank.indices)
        rows.append((kind, 0, "", sum(e.values())))
        rows.append((kind, -1, "partition_error", err))
    io.write_csv(out / "blocks.csv", ("bank", "component", "j", "energy"), rows)
    brows = []
    for kind in ("iso", "vert"):
        split = bony(u[0], u[1], kind)
        ref = product(u[0], u[1])
        err = (ref - split.total()).norm() / max(ref.norm(), 1e-300)
        worst = max(worst, err)
        brows.append((kind, split.Tuv.norm(), split.Tvu.norm(), split.R.norm(), err))
    io.write_csv(out / "bony.csv", ("bank", "Tuv", "Tvu", "R", "rel_error"), brows)
    ok = worst <= 1e-12
    io.write_kv(out / "verdict.txt", [("pass", ok), ("worst_rel_error", worst)])
    return (0 if ok else 1), []


def cmd_norms(cfg, out: Path):
    u = _field(cfg)
    s = _s(cfg)
    rows = [
        ("L2", norm_L2(u)), ("H0s", norm_H0s(u, s)), ("Hs", norm_Hs(u, s)),
        ("gradh_H0s", norm_gradh_H0s(u, s)), ("gradh_Hs", norm_gradh_Hs(u, s)),
        ("dyadic_vert", norm_dyadic_vert(u, s)), ("dyadic_iso", norm_dyadic_iso(u, s)),
        ("Lp2", norm_Lp(u, 2)), ("Linf", norm_Lp(u, np.inf)),
        ("LinfvL2h", norm_LinfvL2h(u)), ("gradh_LinfvL2h", norm_gradh_LinfvL2h(u)),
    ]
    h0s = rows[1][1]
    rows.append(("dyadic_vert_over_H0s", rows[5][1] / h0s if h0s > 0 else 0.0))
    io.write_csv(out / "norms.csv", ("name", "value"), rows)
    ok = all(math.isfinite(v) for _, v in rows)
    return (0 if ok else 1), []


def _check_report(fam: str, rep: Q.InequalityReport) -> list[str]:
    fails = []
    for name in rep.names:
        w = rep.worst(name)
        if not math.isfinite(w):
            fails.append(f"{name}: non-finite worst ratio")
    if fam == "interpolation" and rep.worst_ratio > 1 + 1e-10:
        fails.append(f"interpolation ratio {rep.worst_ratio:.17g} > 1 + 1e-10")
    if fam == "divfree" and rep.worst("divfree_grad") > math.sqrt(2) * (1 + 1e-12):
        fails.append("divfree_grad ratio exceeds sqrt(2)")
    return fails


def cmd_verify(cfg: io.VerifyConfig, out: Path):
    if not isinstance(cfg, io.VerifyConfig):
        raise ConfigError(["verify needs a config with a 'target' key"])
    grids = (cfg.grid,) + tuple(g for g in cfg.grids if g != cfg.grid)
    suites = {}
    fails = []
    for g in grids:
        suite = Q.default_suite(g, cfg.ensemble, cfg.s, cfg.qs, cfg.js, cfg.targets)
        suites[g.label] = suite
        for fam, rep in suite.items():
            io.write_report_csv(out / f"report_{fam}_{g.label}.csv", rep)
            fails.extend(f"{g.label} {m}" for m in _check_report(fam, rep))
    rows = []
    for label, suite in suites.items():
        for fam, rep in suite.items():
            for name in rep.names:
                rows.append((fam, name, label, rep.samples, rep.skipped, rep.worst(name)))
    io.write_csv(out / "summary.csv", ("family", "name", "grid", "rows", "skipped", "worst_ratio"), rows)
    if len(grids) > 1:
        base = suites[grids[0].label]
        trows = []
        for g in grids[1:]:
            for name, (wa, wb, r) in Q.refinement_table(base, suites[g.label]).items():
                ok = 0.25 <= r <= 4.0 if wa > 0 and wb > 0 else True
                trows.append((name, grids[0].label, g.label, wa, wb, r, int(ok)))
                if not ok:
                    fails.append(f"{name}: refinement ratio {r:.4g} outside [1/4, 4]")
        io.write_csv(out / "refinement.csv",
                     ("name", "grid_a", "grid_b", "worst_a", "worst_b", "ratio", "pass"), trows)
    io.write_kv(out / "verdict.txt", [("pass", not fails)] + [("failure", f) for f in fails])
    return (1 if fails else 0), []


def cmd_solve(cfg, out: Path):
    if not isinstance(cfg, SolverConfig):
        raise ConfigError(["solve needs a solver config (no 'target' or 'experiment' key)"])
    res = run(cfg, initial_field(cfg))
    io.write_csv(out / "diagnostics.csv", DIAG_COLUMNS, res.diagnostics.rows)
    if res.snapshots:
        snap = out / "snapshots"
        snap.mkdir()
        for t, u in res.snapshots:
            io.write_snapshot(snap / f"t{int(round(t / cfg.dt)):08d}.alp1", u)
    io.write_snapshot(out / "final.alp1", res.state.u)
    items = [("healthy", res.healthy), ("halt_reason", res.halt_reason or ""),
             ("steps", res.state.n), ("t_final", res.state.t)]
    if res.required_dt is not None:
        items.append(("required_dt", res.required_dt))
    io.write_kv(out / "verdict.txt", items)
    return (0 if res.healthy else 1), []


def cmd_experiment(cfg, out: Path):
    if not isinstance(cfg, io.ExperimentConfig):
        raise ConfigError(["experiment needs a config with an 'experiment' key"])
    sc = cfg.solver
    if cfg.experiment == "small-data-decay":
        rep = E.exp_small_data_decay(sc, cfg.amplitudes)
    elif cfg.experiment == "splitting":
        rep = E.exp_splitting_scheme(sc, cfg.N, cfg.epsilons, cfg.c_small, cfg.negative_control)
    elif cfg.experiment == "ns-propagation":
        rep = E.exp_ns_propagation(sc)
    else:
        rep = E.exp_rossby_sweep(sc, cfg.epsilons, cfg.baseline_eps)
    timing = [(f"timing.{k}", v) for k, v in rep.timing.items()]
    if rep.rows:
        io.write_dict_rows(out / f"{rep.name}.csv", rep.rows)
    for key, data in rep.series.items():
        io.write_dat(out / f"{key}.dat", data)
    io.write_kv(out / "verdict.txt", [("pass", rep.verdict)] + sorted(rep.summary.items()))
    return (0 if rep.verdict else 1), timing


HANDLERS = {"decompose": cmd_decompose, "norms": cmd_norms, "verify": cmd_verify,
            "solve": cmd_solve, "experiment": cmd_experiment}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="alp", description="Anisotropic Littlewood-Paley toolkit")
    p.add_argument("subcommand", help=", ".join(SUBCOMMANDS))
    p.add_argument("--config", required=True, help="key = value config file")
    p.add_argument("--seed", type=int, default=None, help="override the config seed")
    p.add_argument("--out", default="runs", help="parent directory for run directories")
    p.add_argument("--version", action="version", version=f"alp {__version__}")
    return p


def dispatch(subcommand: str, cfg, out_base, config_path=None) -> int:
    if subcommand not in HANDLERS:
        print(f"alp: unknown subcommand {subcommand!r}; expected one of {', '.join(SUBCOMMANDS)}",
              file=sys.stderr)
        return 2
    run_dir = io.make_run_dir(out_base, cfg.seed)
    echo = io.config_echo(config_path) if config_path else []
    manifest = io.RunManifest(run_dir, subcommand, cfg.seed, __version__, echo)
    try:
        status, extra = HANDLERS[subcommand](cfg, run_dir)
    except ConfigError as exc:
        for e in exc.errors:
            print(f"alp: config error: {e}", file=sys.stderr)
        status, extra = 2, []
    except E.HypothesisError as exc:
        print(f"alp: {exc}", file=sys.stderr)
        status, extra = 2, []
    manifest.extra = extra
    manifest.write(status)
    print(run_dir)
    return status


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 2
    if args.subcommand not in SUBCOMMANDS:
        print(f"alp: unknown subcommand {args.subcommand!r}; expected one of {', '.join(SUBCOMMANDS)}",
              file=sys.stderr)
        return 2
    try:
        cfg = _with_seed(io.parse_config(args.config), args.seed)
    except ConfigError as exc:
        for e in exc.errors:
            print(f"alp: config error: {e}", file=sys.stderr)
        return 2
    return dispatch(args.subcommand, cfg, args.out, args.config)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
