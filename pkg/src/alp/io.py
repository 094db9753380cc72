"""
Configuration parsing and file emission.

Config files are line-based ``key = value`` text; ``#`` starts a comment.
The keys present pick the config type: ``target`` gives a
:class:`VerifyConfig`, ``experiment`` an :class:`ExperimentConfig`, anything
else a :class:`~alp.solver.SolverConfig`.  Parsing collects every error
before raising :class:`~alp.solver.ConfigError`.
"""

from __future__ import annotations

import datetime as _dt
import hashlib
import math
import os
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .inequalities import FieldEnsembleSpec, InequalityReport
from .solver import (
    INITIAL_KINDS,
    ROTATION_KINDS,
    ConfigError,
    RotationSpec,
    SolverConfig,
    value_errors,
)
from .spectral import DEALIAS_RULES, Grid, SpectralField, VectorField

MAGIC = b"ALP1"
VERIFY_TARGETS = ("trilinear", "product", "divfree", "bernstein", "commutator",
                  "interpolation", "gagliardo_nirenberg", "equivalence", "embedding")


# ---------------------------------------------------------------------------
# config types


@dataclass(frozen=True)
class VerifyConfig:
    grid: Grid
    ensemble: FieldEnsembleSpec
    targets: tuple[str, ...]
    s: float = 0.6
    qs: tuple[int, ...] = (0, 1, 2)
    js: tuple[int, ...] = (0, 1, 2)
    grids: tuple[Grid, ...] = ()

    @property
    def seed(self) -> int:
        return self.ensemble.seed


@dataclass(frozen=True)
class ExperimentConfig:
    solver: SolverConfig
    experiment: str
    amplitudes: tuple[float, ...] = (0.0, 0.1, 1.0, 10.0)
    epsilons: tuple[float, ...] = (1.0, 0.1, 0.01)
    N: int = 1
    c_small: float = 0.1
    negative_control: bool = True
    baseline_eps: float = 1e6

    @property
    def seed(self) -> int:
        return self.solver.seed

    @property
    def grid(self) -> Grid:
        return self.solver.grid


# ---------------------------------------------------------------------------
# value parsers


def _grid(v: str) -> Grid:
    parts = [p for p in v.replace("x", " ").replace("X", " ").split()]
    if len(parts) == 1:
        return Grid.cube(int(parts[0]))
    if len(parts) == 3:
        return Grid(*(int(p) for p in parts))
    raise ValueError("grid must be 'n' or 'n1 x n2 x n3'")


def _bool(v: str) -> bool:
    low = v.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError("expected a boolean")


def _float(v: str) -> float:
    x = float(v)
    if math.isnan(x):
        raise ValueError("NaN not allowed")
    return x


def _list(conv):
    def parse(v: str):
        items = [p.strip() for p in v.split(",") if p.strip()]
        if not items:
            raise ValueError("empty list")
        return tuple(conv(p) for p in items)
    return parse


def _choice(options):
    def parse(v: str):
        if v not in options:
            raise ValueError(f"expected one of {', '.join(options)}")
        return v
    return parse


def _band(v: str):
    lo, hi = _list(int)(v)
    return (lo, hi)


SOLVER_KEYS = {
    "grid": _grid, "nu_h": _float, "nu_v": _float, "epsilon": _float, "dt": _float,
    "t_end": _float, "s": _float, "rotation": _choice(ROTATION_KINDS), "beta": _float,
    "dealias": _choice(DEALIAS_RULES), "snapshot_every": int, "seed": int,
    "initial": _choice(INITIAL_KINDS), "amplitude": _float, "nonlinear": _bool,
    "cfl": _float, "dt_cap": _float, "blowup_threshold": _float,
}
SOLVER_REQUIRED = ("grid", "nu_h", "epsilon", "dt", "t_end")

VERIFY_KEYS = {
    "grid": _grid, "seed": int, "s": _float, "target": _list(_choice(VERIFY_TARGETS + ("all",))),
    "count": int, "spectrum": _float, "band": _band, "divfree": _bool,
    "q": _list(int), "j": _list(int), "grids": _list(_grid),
}
VERIFY_REQUIRED = ("grid", "target")

EXPERIMENT_NAMES = ("small-data-decay", "splitting", "ns-propagation", "rossby-sweep")
EXPERIMENT_KEYS = {
    **SOLVER_KEYS, "experiment": _choice(EXPERIMENT_NAMES), "amplitudes": _list(_float),
    "epsilons": _list(_float), "N": int, "c_small": _float, "negative_control": _bool,
    "baseline_eps": _float,
}
EXPERIMENT_REQUIRED = SOLVER_REQUIRED + ("experiment",)


def _lines(text: str):
    for no, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if line:
            yield no, line


def read_pairs(text: str) -> tuple[dict[str, str], list[str]]:
    pairs: dict[str, str] = {}
    errors = []
    for no, line in _lines(text):
        if "=" not in line:
            errors.append(f"line {no}: expected key = value, got {line!r}")
            continue
        k, v = (p.strip() for p in line.split("=", 1))
        if not k:
            errors.append(f"line {no}: empty key")
        elif k in pairs:
            errors.append(f"line {no}: duplicate key {k!r}")
        else:
            pairs[k] = v
    return pairs, errors


def _convert(pairs, table, required, errors) -> dict:
    out = {}
    for k, v in pairs.items():
        if k not in table:
            errors.append(f"unknown key {k!r}")
            continue
        try:
            out[k] = table[k](v)
        except (ValueError, TypeError) as exc:
            errors.append(f"{k} = {v!r}: {exc}")
    for k in required:
        if k not in pairs:
            errors.append(f"missing required key {k!r}")
    return out


def _solver_from(vals: dict, errors: list) -> SolverConfig | None:
    kw = {k: vals[k] for k in SOLVER_KEYS if k in vals and k not in ("rotation", "beta")}
    try:
        kw["rotation"] = RotationSpec(vals.get("rotation", "constant-e3"), vals.get("beta", 0.5))
    except ValueError as exc:
        errors.append(str(exc))
        return None
    if any(k not in kw for k in SOLVER_REQUIRED):
        errors.extend(value_errors(kw))
        return None
    try:
        return SolverConfig(**kw)
    except ConfigError as exc:
        errors.extend(exc.errors)
    return None


def parse_config_text(text: str):
    """Parse config text; raises :class:`ConfigError` listing every problem."""
    pairs, errors = read_pairs(text)
    if "target" in pairs:
        vals = _convert(pairs, VERIFY_KEYS, VERIFY_REQUIRED, errors)
        cfg = None
        if not errors:
            try:
                ens = FieldEnsembleSpec(seed=vals.get("seed", 0), count=vals.get("count", 100),
                                        spectrum=vals.get("spectrum", 3.0), band=vals.get("band"),
                                        divfree=vals.get("divfree", True))
            except ValueError as exc:
                errors.append(str(exc))
            targets = vals["target"]
            if "all" in targets:
                targets = VERIFY_TARGETS
            if not math.isfinite(vals.get("s", 0.6)) or vals.get("s", 0.6) <= 0.5:
                errors.append("s must exceed 1/2")
            if not errors:
                cfg = VerifyConfig(vals["grid"], ens, tuple(targets), vals.get("s", 0.6),
                                   vals.get("q", (0, 1, 2)), vals.get("j", (0, 1, 2)),
                                   vals.get("grids", ()))
    elif "experiment" in pairs:
        vals = _convert(pairs, EXPERIMENT_KEYS, EXPERIMENT_REQUIRED, errors)
        solver = _solver_from(vals, errors)
        cfg = None
        if "epsilons" in vals and any(e <= 0 for e in vals["epsilons"]):
            errors.append("epsilons must be > 0")
        if vals.get("N", 1) < 0:
            errors.append("N must be >= 0")
        if not errors and solver is not None:
            extra = {k: vals[k] for k in ("amplitudes", "epsilons", "N", "c_small",
                                           "negative_control", "baseline_eps") if k in vals}
            cfg = ExperimentConfig(solver, vals["experiment"], **extra)
    else:
        vals = _convert(pairs, SOLVER_KEYS, SOLVER_REQUIRED, errors)
        cfg = _solver_from(vals, errors)
    if errors or cfg is None:
        raise ConfigError(errors or ["invalid configuration"])
    return cfg


def parse_config(path) -> SolverConfig | VerifyConfig | ExperimentConfig:
    """Read and validate a config file (see module docstring)."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError([f"cannot read config {path}: {exc.strerror}"]) from exc
    return parse_config_text(text)


def config_echo(path) -> list[tuple[str, str]]:
    pairs, _ = read_pairs(Path(path).read_text(encoding="utf-8"))
    return sorted(pairs.items())


# ---------------------------------------------------------------------------
# ALP1 snapshots


def _record(f: SpectralField) -> bytes:
    n1, n2, n3 = f.grid.shape
    head = MAGIC + struct.pack("<qqq", n1, n2, n3) + bytes([1 if f.real else 0])
    return head + np.ascontiguousarray(f.coeffs, dtype="<c16").tobytes()


def write_snapshot(path, u) -> Path:
    """Write a scalar (one record) or vector field (three records) in ALP1 format.

    Record: ``b"ALP1"``, ``n1 n2 n3`` as little-endian int64, one reality byte,
    then ``n1*n2*n3`` complex coefficients as interleaved little-endian float64
    ``(re, im)`` with ``k3`` fastest.
    """
    path = Path(path)
    comps = u.components if isinstance(u, VectorField) else (u,)
    with open(path, "wb") as fh:
        for c in comps:
            fh.write(_record(c))
    return path


def read_snapshot(path):
    """Inverse of :func:`write_snapshot`: a SpectralField or a VectorField."""
    data = Path(path).read_bytes()
    pos = 0
    recs = []
    while pos < len(data):
        if data[pos:pos + 4] != MAGIC:
            raise ValueError(f"bad magic at byte {pos}")
        n1, n2, n3 = struct.unpack_from("<qqq", data, pos + 4)
        real = bool(data[pos + 28])
        pos += 29
        size = n1 * n2 * n3 * 16
        if pos + size > len(data):
            raise ValueError("truncated snapshot")
        c = np.frombuffer(data, dtype="<c16", count=n1 * n2 * n3, offset=pos).reshape(n1, n2, n3)
        recs.append(SpectralField(Grid(n1, n2, n3), c.astype(complex), real))
        pos += size
    if len(recs) == 1:
        return recs[0]
    if len(recs) == 3:
        return VectorField.from_components(*recs)
    raise ValueError(f"expected 1 or 3 records, found {len(recs)}")


# ---------------------------------------------------------------------------
# text outputs


def fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return "%.17g" % float(x)
    if x is None:
        return ""
    return str(x)


def write_csv(path, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    path = Path(path)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for r in rows:
            fh.write(",".join(fmt(x) for x in r) + "\n")
    return path


def write_dict_rows(path, rows: list[dict]) -> Path:
    header = list(rows[0].keys()) if rows else []
    return write_csv(path, header, ([r[h] for h in header] for r in rows))


REPORT_COLUMNS = ("name", "sample_id", "lhs", "rhs", "ratio", "j_or_q", "grid")


def write_report_csv(path, report: InequalityReport) -> Path:
    return write_csv(path, REPORT_COLUMNS,
                     ((r.name, r.sample_id, r.lhs, r.rhs, r.ratio, r.j_or_q, r.grid)
                      for r in report.rows))


def write_dat(path, data: np.ndarray, columns: Sequence[str] = ()) -> Path:
    """Whitespace-separated series for gnuplot."""
    path = Path(path)
    data = np.atleast_2d(np.asarray(data, dtype=float))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        if columns:
            fh.write("# " + " ".join(columns) + "\n")
        for row in data:
            fh.write(" ".join("%.17g" % x for x in row) + "\n")
    return path


def write_kv(path, items) -> Path:
    path = Path(path)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for k, v in items:
            fh.write(f"{k}={fmt(v)}\n")
    return path


# ---------------------------------------------------------------------------
# run directory and manifest


def _now() -> str:
    return _dt.datetime.now(_dt.timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def make_run_dir(base, seed: int) -> Path:
    """``base/<UTC timestamp>-seed<seed>``, suffixed if it already exists."""
    stamp = _dt.datetime.now(_dt.timezone.utc).strftime("%Y%m%dT%H%M%SZ")
    root = Path(base) / f"{stamp}-seed{seed}"
    path, i = root, 0
    while path.exists():
        i += 1
        path = Path(f"{root}-{i}")
    path.mkdir(parents=True)
    return path


def sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


@dataclass
class RunManifest:
    run_dir: Path
    subcommand: str
    seed: int
    version: str
    config: list = field(default_factory=list)
    started: str = field(default_factory=_now)
    finished: str = ""
    extra: list = field(default_factory=list)

    def files(self) -> list[Path]:
        out = []
        for root, _, names in os.walk(self.run_dir):
            for n in names:
                p = Path(root) / n
                if p.name != "manifest.txt":
                    out.append(p)
        return sorted(out)

    def write(self, status: int) -> Path:
        self.finished = _now()
        path = self.run_dir / "manifest.txt"
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(f"artifact_version={self.version}\n")
            fh.write(f"subcommand={self.subcommand}\n")
            fh.write(f"seed={self.seed}\n")
            fh.write(f"started={self.started}\n")
            fh.write(f"finished={self.finished}\n")
            fh.write(f"exit_status={status}\n")
            for k, v in self.config:
                fh.write(f"config.{k}={v}\n")
            for k, v in self.extra:
                fh.write(f"{k}={fmt(v)}\n")
            for p in self.files():
                fh.write(f"file {sha256(p)} {p.relative_to(self.run_dir).as_posix()}\n")
        return path


def verify_manifest(path) -> list[str]:
    """Recompute checksums; returns the relative paths that do not match."""
    path = Path(path)
    bad = []
    for line in path.read_text(encoding="utf-8").splitlines():
        if line.startswith("file "):
            _, digest, rel = line.split(" ", 2)
            f = path.parent / rel
            if not f.exists() or sha256(f) != digest:
                bad.append(rel)
    return bad
