"""
Pseudo-spectral integrator for rotating anisotropic Navier-Stokes on the torus

    d_t u + u.grad u - nu_h Lap_h u - nu_v d_3^2 u + (1/eps) u x B(t, x_h) = -grad p,
    div u = 0.

One step is a Strang composition: an exact pointwise rotation over ``dt/2``,
an integrating-factor midpoint RK2 step for the nonlinearity with exact
anisotropic diffusion, and another rotation over ``dt/2``.  The pressure is
never formed; the Leray projector removes it.

The diffusion operator above follows the viscous terms as they act on the
spectrum: every coefficient decays like ``exp(-(nu_h |k_h|^2 + nu_v k3^2) t)``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np

from .inequalities import FieldEnsembleSpec, gen_ensemble
from .norms import (
    NormSpec,
    norm_gradh_H0s,
    norm_gradh_LinfvL2h,
    norm_H0s,
    norm_Hs,
    norm_LinfvL2h,
)
from .spectral import (
    DEALIAS_RULES,
    Grid,
    VectorField,
    advection,
    divergence_defect,
    forward_transform,
    from_physical,
    inverse_transform,
    leray_project,
    to_physical,
    truncate_nyquist,
)

ROTATION_KINDS = ("zero", "constant-e3", "beta-plane", "x1-only-general", "x1x2-general")
INITIAL_KINDS = ("zero", "taylor-green", "shear", "shifted-shear", "random", "mode")


class ConfigError(ValueError):
    """Invalid configuration; ``errors`` lists every problem found."""

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


class CFLViolation(RuntimeError):
    """Raised by :func:`step` when ``dt`` exceeds the admissible step."""

    def __init__(self, dt: float, dt_max: float):
        self.dt = dt
        self.dt_max = dt_max
        super().__init__(f"dt = {dt:.6g} exceeds CFL limit; need dt <= {dt_max:.6g}")


# ---------------------------------------------------------------------------
# rotation vector


Component = Callable[[float, np.ndarray, np.ndarray], np.ndarray]


def _const(c):
    return lambda t, x1, x2: np.full(np.broadcast(x1, x2).shape, float(c))


@dataclass(frozen=True)
class RotationSpec:
    """The rotation vector ``B(t, x_h)``.

    Built-in kinds (``beta`` is the modulation amplitude):

    ``zero``             B = 0
    ``constant-e3``      B = e3
    ``beta-plane``       B = (0, 0, 1 + beta sin x2)
    ``x1-only-general``  B = (0, 0, 1 + beta sin x1) unless ``components`` given
    ``x1x2-general``     B = (0, 0, 1 + beta sin(x1 + x2)) unless ``components`` given

    ``components`` overrides the closures ``b_i(t, x1, x2)``.  Kinds tagged
    ``x1-only`` are evaluated at ``x2 = 0`` so they cannot depend on ``x2``.
    """

    kind: str = "constant-e3"
    beta: float = 0.5
    components: Optional[tuple[Component, Component, Component]] = None

    def __post_init__(self):
        if self.kind not in ROTATION_KINDS:
            raise ValueError(f"unknown rotation kind {self.kind!r}; expected one of {ROTATION_KINDS}")
        if self.components is not None and self.kind not in ("x1-only-general", "x1x2-general"):
            raise ValueError("custom components need kind x1-only-general or x1x2-general")

    @property
    def dependence(self) -> str:
        return {"zero": "constant", "constant-e3": "constant", "beta-plane": "x1x2",
                "x1-only-general": "x1-only", "x1x2-general": "x1x2"}[self.kind]

    def closures(self) -> tuple[Component, Component, Component]:
        if self.components is not None:
            return self.components
        b = self.beta
        zero = _const(0.0)
        if self.kind == "zero":
            return zero, zero, zero
        if self.kind == "constant-e3":
            return zero, zero, _const(1.0)
        if self.kind == "beta-plane":
            return zero, zero, lambda t, x1, x2: 1.0 + b * np.sin(x2) + 0.0 * x1
        if self.kind == "x1-only-general":
            return zero, zero, lambda t, x1, x2: 1.0 + b * np.sin(x1) + 0.0 * x2
        return zero, zero, lambda t, x1, x2: 1.0 + b * np.sin(x1 + x2)


def eval_rotation(rotation: RotationSpec, t: float, grid: Grid) -> np.ndarray:
    """Samples of ``B(t, x_h)`` as a ``(3, n1, n2)`` array."""
    x1, x2 = grid.horizontal_coordinates()
    if rotation.dependence == "x1-only":
        x2 = np.zeros_like(x2)
    out = np.empty((3, grid.n1, grid.n2))
    for i, f in enumerate(rotation.closures()):
        out[i] = np.broadcast_to(np.asarray(f(t, x1, x2), dtype=float), (grid.n1, grid.n2))
    if not np.all(np.isfinite(out)):
        raise ValueError("rotation vector is not finite on the grid")
    return out


# ---------------------------------------------------------------------------
# substeps


def rotate_pointwise(samples: np.ndarray, B: np.ndarray, angle_scale: float) -> np.ndarray:
    """Rotate ``samples`` (3, n1, n2, n3) about ``B(x_h)`` by ``|B| * angle_scale``.

    This is the exact flow of ``du/dt = -(u x B) / eps`` over time ``tau`` with
    ``angle_scale = tau / eps`` (Rodrigues formula).
    """
    b = B[..., None]
    bn = np.sqrt(np.sum(b * b, axis=0))
    theta = bn * angle_scale
    safe = np.where(bn > 0, bn, 1.0)
    k = np.where(bn > 0, b / safe, 0.0)
    c, s = np.cos(theta), np.sin(theta)
    kxu = np.stack([
        k[1] * samples[2] - k[2] * samples[1],
        k[2] * samples[0] - k[0] * samples[2],
        k[0] * samples[1] - k[1] * samples[0],
    ])
    kdu = np.sum(k * samples, axis=0)
    return c * samples + s * kxu + (1.0 - c) * k * kdu


def _rodrigues(v, axis, theta):
    c, s = np.cos(theta), np.sin(theta)
    kxv = np.stack([
        axis[1] * v[2] - axis[2] * v[1],
        axis[2] * v[0] - axis[0] * v[2],
        axis[0] * v[1] - axis[1] * v[0],
    ])
    kdv = axis[0] * v[0] + axis[1] * v[1] + axis[2] * v[2]
    return c * v + s * kxv + (1.0 - c) * axis * kdv


def rotation_constant(u: VectorField, b, angle_scale: float) -> VectorField:
    """Exact flow of ``du/dt = -P(u x b) / eps`` for a constant vector ``b``.

    For divergence-free modes ``P(u x b) = (b . khat)(u x khat)``, so each
    mode rotates about ``khat`` by ``(b . khat) * angle_scale``; the mean
    rotates about ``b`` by ``|b| * angle_scale``.
    """
    grid = u.grid
    b = np.asarray(b, dtype=float)
    k1, k2, k3 = grid.k_eff
    kmag = np.sqrt(k1**2 + k2**2 + k3**2)
    safe = np.where(kmag > 0, kmag, 1.0)
    axis = np.stack([np.broadcast_to(k / safe, grid.shape) for k in (k1, k2, k3)])
    rate = b[0] * axis[0] + b[1] * axis[1] + b[2] * axis[2]
    bn = float(np.linalg.norm(b))
    zero = kmag == 0
    if bn > 0:
        axis[:, zero] = (b / bn)[:, None]
        rate[zero] = bn
    out = _rodrigues(u.coeffs, axis, rate * angle_scale)
    return leray_project(truncate_nyquist(VectorField._trusted(grid, out, u.real, False)))


def rotation_substep(u: VectorField, B: np.ndarray, dt: float, epsilon: float,
                     project: bool = True) -> VectorField:
    """Coriolis substep over ``dt``.

    A spatially constant ``B`` uses the exact projected flow
    (:func:`rotation_constant`).  Otherwise the pointwise rotation is done on
    the native grid and followed by a Leray projection; with
    ``project=False`` the raw rotated field is returned (its ``H^{0,s}``
    norm equals that of ``u`` for x3-independent ``B``).
    """
    if not np.any(B):
        return u
    if project and np.all(B == B[:, :1, :1]):
        return rotation_constant(u, B[:, 0, 0], dt / epsilon)
    v = rotate_pointwise(inverse_transform(u), B, dt / epsilon)
    w = forward_transform(v, u.grid)
    if not project:
        return w
    return leray_project(truncate_nyquist(w))


def coriolis_term(u: VectorField, B: np.ndarray) -> VectorField:
    """``u x B`` formed pointwise on the native grid (no truncation)."""
    s = inverse_transform(u)
    b = B[..., None]
    c = np.stack([s[1] * b[2] - s[2] * b[1], s[2] * b[0] - s[0] * b[2], s[0] * b[1] - s[1] * b[0]])
    return forward_transform(c, u.grid)


def diffusion_factor(grid: Grid, dt: float, nu_h: float, nu_v: float) -> np.ndarray:
    k3 = grid.k[2]
    return np.exp(-(nu_h * grid.kh2 + nu_v * k3**2) * dt)


def diffusion_substep(u: VectorField, dt: float, nu_h: float, nu_v: float) -> VectorField:
    """Exact heat flow: coefficients times ``exp(-(nu_h |k_h|^2 + nu_v k3^2) dt)``."""
    return VectorField._trusted(u.grid, u.coeffs * diffusion_factor(u.grid, dt, nu_h, nu_v),
                                u.real, u.divfree)


def advection_divform(u: VectorField, rule: str = "3/2-pad") -> VectorField:
    """``div(u (x) u)``: equals ``(u . grad) u`` for divergence-free ``u``.

    The six products ``u_i u_j`` are alias-free, so the two forms differ only
    by ``u div u``; this one needs 9 transforms instead of 15.
    """
    grid = u.grid
    pu = to_physical(u.coeffs, grid, rule, u.real)
    k = grid.k_eff
    out = np.zeros((3,) + grid.shape, complex)
    for i in range(3):
        for j in range(i, 3):
            c = from_physical(pu[i] * pu[j], grid, rule)
            out[i] += 1j * k[j] * c
            if j != i:
                out[j] += 1j * k[i] * c
    return VectorField._trusted(grid, out, u.real, False)


def nonlinear_rhs(u: VectorField, rule: str = "3/2-pad") -> VectorField:
    """``-P (u . grad) u`` with dealiased products (divergence form when ``u.divfree``)."""
    adv = advection_divform(u, rule) if u.divfree else advection(u, u, rule)
    return leray_project(truncate_nyquist(-adv))


# ---------------------------------------------------------------------------
# configuration and state


_CHECKS = {
    "nu_h": (lambda v: v > 0, "need ν_h > 0"),
    "nu_v": (lambda v: v >= 0, "need ν_v >= 0"),
    "epsilon": (lambda v: v > 0, "need ε > 0"),
    "dt": (lambda v: v > 0, "need dt > 0"),
    "t_end": (lambda v: v >= 0, "need t_end >= 0"),
    "s": (math.isfinite, "need finite s"),
    "dealias": (lambda v: v in DEALIAS_RULES, f"expected one of {DEALIAS_RULES}"),
    "snapshot_every": (lambda v: v >= 0, "need snapshot_every >= 0"),
    "initial": (lambda v: v in INITIAL_KINDS, f"expected one of {INITIAL_KINDS}"),
    "cfl": (lambda v: 0 < v <= 1, "need 0 < cfl <= 1"),
    "dt_cap": (lambda v: v > 0, "need dt_cap > 0"),
}


def value_errors(values: dict) -> list[str]:
    """Check the solver values present in ``values``; one message per violation."""
    return [f"{k} = {values[k]!r}: {msg}" for k, (ok, msg) in _CHECKS.items()
            if k in values and not ok(values[k])]


@dataclass(frozen=True)
class SolverConfig:
    grid: Grid
    nu_h: float
    epsilon: float
    dt: float
    t_end: float
    nu_v: float = 0.0
    s: float = 0.6
    rotation: RotationSpec = field(default_factory=RotationSpec)
    dealias: str = "3/2-pad"
    snapshot_every: int = 0
    seed: int = 0
    initial: str = "taylor-green"
    amplitude: float = 0.01
    nonlinear: bool = True
    cfl: float = 0.5
    dt_cap: float = math.inf
    blowup_threshold: float = 1e8

    def __post_init__(self):
        errs = self.errors()
        if errs:
            raise ConfigError(errs)

    def errors(self) -> list[str]:
        return value_errors({k: getattr(self, k) for k in _CHECKS})

    @property
    def spec(self) -> NormSpec:
        return NormSpec(0.0, self.s)

    @property
    def n_steps(self) -> int:
        return int(round(self.t_end / self.dt))

    def with_(self, **kw) -> "SolverConfig":
        return replace(self, **kw)


@dataclass(frozen=True)
class State:
    t: float
    u: VectorField
    n: int = 0


def cfl_limit(u: VectorField, config: SolverConfig) -> float:
    """``min(cfl * h / max|u|, dt_cap)``; rotation imposes no limit."""
    h = min(u.grid.spacing)
    s = inverse_transform(u)
    umax = float(np.sqrt(np.max(np.sum(s * s, axis=0))))
    lim = config.cfl * h / umax if umax > 0 else math.inf
    return min(lim, config.dt_cap)


def _if_rk2(u: VectorField, dt: float, config: SolverConfig) -> VectorField:
    e_half = diffusion_factor(u.grid, 0.5 * dt, config.nu_h, config.nu_v)
    e_full = e_half * e_half
    if not config.nonlinear:
        return VectorField._trusted(u.grid, u.coeffs * e_full, u.real, u.divfree)
    n0 = nonlinear_rhs(u, config.dealias)
    mid = (u.coeffs + 0.5 * dt * n0.coeffs) * e_half
    n1 = nonlinear_rhs(VectorField._trusted(u.grid, mid, u.real, True), config.dealias)
    return VectorField._trusted(u.grid, e_full * u.coeffs + dt * e_half * n1.coeffs, u.real, True)


def step(state: State, config: SolverConfig, dt: float | None = None) -> State:
    """Advance one Strang step; refuses (``CFLViolation``) when dt is too large."""
    dt = config.dt if dt is None else dt
    if config.nonlinear:
        lim = cfl_limit(state.u, config)
        if dt > lim:
            raise CFLViolation(dt, lim)
    grid = state.u.grid
    u = state.u
    rot = config.rotation.kind != "zero"
    if rot:
        u = rotation_substep(u, eval_rotation(config.rotation, state.t + 0.25 * dt, grid),
                             0.5 * dt, config.epsilon)
    u = _if_rk2(u, dt, config)
    if rot:
        u = rotation_substep(u, eval_rotation(config.rotation, state.t + 0.75 * dt, grid),
                             0.5 * dt, config.epsilon)
    return State(state.t + dt, u, state.n + 1)


# ---------------------------------------------------------------------------
# diagnostics and driver


DIAG_COLUMNS = ("t", "H0s", "Hs", "gradh_H0s", "LinfvL2h", "gradh_LinfvL2h",
                "dissipation_cum", "blowup_cum")


@dataclass
class Diagnostics:
    """Per-step time series; integrals use the trapezoid rule."""

    nu_h: float
    s: float
    rows: list[tuple] = field(default_factory=list)

    def record(self, t: float, u: VectorField):
        h0s = norm_H0s(u, self.s)
        hs = norm_Hs(u, self.s)
        g = norm_gradh_H0s(u, self.s)
        li = norm_LinfvL2h(u)
        gli = norm_gradh_LinfvL2h(u)
        if self.rows:
            p = dict(zip(DIAG_COLUMNS, self.rows[-1]))
            dt = t - p["t"]
            diss = p["dissipation_cum"] + self.nu_h * dt * (g * g + p["gradh_H0s"] ** 2)
            f_now = gli**2 * (1 + li**2)
            f_prev = p["gradh_LinfvL2h"] ** 2 * (1 + p["LinfvL2h"] ** 2)
            blow = p["blowup_cum"] + 0.5 * dt * (f_now + f_prev)
        else:
            diss = blow = 0.0
        self.rows.append((t, h0s, hs, g, li, gli, diss, blow))

    def column(self, name: str) -> np.ndarray:
        i = DIAG_COLUMNS.index(name)
        return np.array([r[i] for r in self.rows])

    @property
    def healthy(self) -> bool:
        return all(math.isfinite(x) for r in self.rows for x in r)

    def energy_ledger(self) -> np.ndarray:
        """``||u||^2_{H^{0,s}} + 2 nu_h int ||grad_h u||^2_{H^{0,s}}``."""
        return self.column("H0s") ** 2 + self.column("dissipation_cum")

    def ledger_increments(self) -> np.ndarray:
        return np.diff(self.energy_ledger())


@dataclass
class RunResult:
    diagnostics: Diagnostics
    snapshots: list
    state: State
    halt_reason: Optional[str] = None
    required_dt: Optional[float] = None

    @property
    def healthy(self) -> bool:
        return self.halt_reason is None and self.diagnostics.healthy


def run(config: SolverConfig, u0: VectorField, callback=None) -> RunResult:
    """Integrate from ``u0`` to ``config.t_end`` in fixed steps.

    Halts early (``halt_reason`` set) on CFL violation, non-finite values or
    when the blow-up integral exceeds ``config.blowup_threshold``.  ``callback``
    is called as ``callback(state)`` after each step.
    """
    if u0.grid != config.grid:
        raise ValueError("u0 grid does not match config grid")
    if divergence_defect(u0) > 1e-10:
        warnings.warn("initial field is not divergence-free; projecting", stacklevel=2)
    u0 = leray_project(u0)
    diag = Diagnostics(config.nu_h, config.s)
    state = State(0.0, u0)
    diag.record(0.0, u0)
    snaps = [(0.0, u0)] if config.snapshot_every else []
    halt = None
    need = None
    for n in range(1, config.n_steps + 1):
        try:
            new = step(state, config)
        except CFLViolation as exc:
            halt, need = "cfl", exc.dt_max
            break
        # keep t on the lattice n * dt so outputs are reproducible
        state = State(n * config.dt, new.u, n)
        if not np.all(np.isfinite(state.u.coeffs)):
            halt = "nan"
            break
        diag.record(state.t, state.u)
        if callback is not None:
            callback(state)
        if config.snapshot_every and n % config.snapshot_every == 0:
            snaps.append((state.t, state.u))
        if not diag.healthy:
            halt = "nan"
            break
        if diag.rows[-1][-1] > config.blowup_threshold:
            halt = "blowup"
            break
    return RunResult(diag, snaps, state, halt, need)


# ---------------------------------------------------------------------------
# initial data


def _normalise(u: VectorField, amplitude: float, s: float) -> VectorField:
    n = norm_H0s(u, s)
    if n == 0:
        return u
    return u * (amplitude / n)


def initial_field(config: SolverConfig, kind: str | None = None,
                  amplitude: float | None = None) -> VectorField:
    """Initial data scaled so ``||u0||_{H^{0,s}} = amplitude``.

    ``shear`` is ``(0, sin x1, 0)``; ``shifted-shear`` adds the mean flow
    ``(1, 0, 0)`` and is not rescaled; ``mode`` is ``(0, cos(x1 + x3), 0)``.
    """
    kind = config.initial if kind is None else kind
    amp = config.amplitude if amplitude is None else amplitude
    grid = config.grid
    x1, x2, x3 = grid.coordinates()
    full = lambda a: np.broadcast_to(a, grid.shape)  # noqa: E731
    zero = np.zeros(grid.shape)
    if kind == "zero":
        return VectorField.zeros(grid)
    if kind == "taylor-green":
        s = np.stack([full(np.sin(x1) * np.cos(x2) * np.cos(x3)),
                      full(-np.cos(x1) * np.sin(x2) * np.cos(x3)), zero])
    elif kind in ("shear", "shifted-shear"):
        s = np.stack([zero, full(np.sin(x1)), zero])
    elif kind == "mode":
        s = np.stack([zero, full(np.cos(x1 + x3)), zero])
    elif kind == "random":
        return _normalise(gen_ensemble(FieldEnsembleSpec(seed=config.seed, count=1), grid)[0],
                          amp, config.s)
    else:
        raise ValueError(f"unknown initial field {kind!r}")
    u = leray_project(forward_transform(s, grid))
    u = _normalise(u, amp, config.s)
    if kind == "shifted-shear":
        c = u.coeffs.copy()
        c[0, 0, 0, 0] += 1.0
        u = VectorField._trusted(grid, c, True, True)
    return u


def shear_exact(config: SolverConfig, t: float, amplitude: float, mean: float = 0.0) -> VectorField:
    """``(U, A e^{-nu_h t} sin(x1 - U t), 0)`` scaled like :func:`initial_field`."""
    grid = config.grid
    x1, _, _ = grid.coordinates()
    # ||(0, sin x1, 0)||_{H^{0,s}} = 1/sqrt(2)
    a = amplitude * math.sqrt(2.0)
    s = np.zeros((3,) + grid.shape)
    s[0] = mean
    s[1] = np.broadcast_to(a * math.exp(-config.nu_h * t) * np.sin(x1 - mean * t), grid.shape)
    return forward_transform(s, grid)
