"""Configuration-driven analysis runs and the command-line entry point.

A single JSON document selects a kernel, a sampling grid, finite
difference steps, tolerances and a set of tasks; the run emits a JSON
report (atomically: write to a temporary file, then rename) and,
optionally, CSV field tables for external plotting.  Identical config
and seed produce byte-identical reports except for the wall-clock
entries.

Exit codes: 0 all requested verdict tasks passed, 1 a verdict failed,
2 configuration error, 3 domain violation, 4 numeric structural error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
import time
from dataclasses import dataclass, field as dataclass_field
from importlib import import_module
from typing import Callable

import numpy as np

from . import __version__
from .chern import (
    FdSteps,
    chern_connection,
    compatibility_residuals,
    curvature,
    dual_curvature_check,
    metric_from_kernel,
    subbundle_split,
)
from .errors import BckError, DomainError, SingularMetricError, StructuralError
from .forms import cauchy_riemann_residual
from .grids import ChartGrid
from .kernels import (
    ConstantKernel,
    DiscPowerKernel,
    GrassmannKernel,
    KernelSpec,
    SectionKernel,
    admissibility,
    gram,
    psd_check,
)
from .linalg import frob
from .polys import MatrixPolynomial
from .positivity import griffiths_verdict
from .selfcheck import run_selfcheck

__all__ = [
    "ConfigError",
    "AnalysisConfig",
    "AnalysisReport",
    "run_analyze",
    "run_verify_theorem55",
    "run_selftest",
    "main",
]

REPORT_SCHEMA = "bck-report/1"

TASK_ORDER = (
    "selftest",
    "psd",
    "admissibility",
    "connection",
    "curvature",
    "compatibility",
    "dual",
    "subbundle",
    "griffiths",
    "theorem55",
)

_DEFAULT_TOLERANCES = {
    "psd": 1e-8,
    "admissibility": 1e-10,
    "compatibility": 1e-5,
    "purity": 1e-5,
    "method_agreement": 5e-5,
    "dual": 1e-5,
    "subbundle": 1e-4,
    "holomorphy": 1e-6,
    "pos": 1e-6,
    "neg": 1e-6,
}


class ConfigError(BckError):
    """The configuration document is malformed or inconsistent."""


# ---------------------------------------------------------------------------
# config parsing
# ---------------------------------------------------------------------------


def _as_complex(value) -> complex:
    if isinstance(value, (int, float)):
        return complex(value)
    if isinstance(value, (list, tuple)) and len(value) == 2:
        return complex(float(value[0]), float(value[1]))
    raise ConfigError(f"cannot read {value!r} as a complex number")


def _parse_matrix(rows) -> np.ndarray:
    try:
        return np.array([[_as_complex(x) for x in row] for row in rows], dtype=complex)
    except (TypeError, ConfigError) as exc:
        raise ConfigError(f"bad matrix literal: {exc}") from exc


def _parse_polynomial(entry, dim: int) -> MatrixPolynomial:
    """One polynomial: a list of monomials {"c": coeff, "p": powers-of-z}."""
    if not isinstance(entry, list):
        raise ConfigError("a polynomial entry must be a list of monomials")
    terms = {}
    for mono in entry:
        if not isinstance(mono, dict) or "c" not in mono:
            raise ConfigError(f"bad monomial {mono!r}: need at least a coefficient 'c'")
        powers = mono.get("p", [0] * dim)
        if isinstance(powers, int):
            powers = [powers]
        if len(powers) != dim:
            raise ConfigError(f"monomial powers {powers!r} do not match dimension {dim}")
        key = (tuple(int(x) for x in powers), (0,) * dim)
        coeff = np.asarray(_as_complex(mono["c"]))
        terms[key] = terms.get(key, 0) + coeff
    if not terms:
        terms[((0,) * dim, (0,) * dim)] = np.asarray(0.0 + 0.0j)
    return MatrixPolynomial(dim, terms, shape=())


def _parse_polynomial_matrix(rows, dim: int) -> Callable[[np.ndarray], np.ndarray]:
    if not isinstance(rows, list) or not rows or not all(isinstance(r, list) for r in rows):
        raise ConfigError("expected a matrix of polynomial entries")
    polys = [[_parse_polynomial(entry, dim) for entry in row] for row in rows]
    n, m = len(polys), len(polys[0])
    if any(len(row) != m for row in polys):
        raise ConfigError("polynomial matrix rows have unequal lengths")

    def matrix_field(z):
        out = np.empty((n, m), dtype=complex)
        for i in range(n):
            for j in range(m):
                out[i, j] = polys[i][j](z)
        return out

    return matrix_field


def build_kernel(cfg: dict) -> KernelSpec:
    if not isinstance(cfg, dict) or "variant" not in cfg:
        raise ConfigError("kernel config must be an object with a 'variant'")
    variant = cfg["variant"]
    if variant == "disc_power":
        if "nu" not in cfg:
            raise ConfigError("disc_power needs 'nu'")
        try:
            return DiscPowerKernel(float(cfg["nu"]))
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
    if variant == "constant":
        if "matrix" not in cfg:
            raise ConfigError("constant kernel needs 'matrix'")
        return ConstantKernel(_parse_matrix(cfg["matrix"]), base_dim=int(cfg.get("base_dim", 1)))
    if variant == "from_sections":
        base_dim = int(cfg.get("base_dim", 1))
        if "monomials" in cfg:
            m = int(cfg["monomials"])
            if m < 1 or base_dim != 1:
                raise ConfigError("'monomials' shorthand needs m >= 1 on a 1-d chart")
            entries = [[[{"c": 1, "p": [k]}] for k in range(m)]]
        elif "entries" in cfg:
            entries = cfg["entries"]
        else:
            raise ConfigError("from_sections needs 'entries' or 'monomials'")
        sections = _parse_polynomial_matrix(entries, base_dim)
        gram_matrix = _parse_matrix(cfg["gram"]) if "gram" in cfg else None
        try:
            return SectionKernel(
                sections, base_dim=base_dim, gram=gram_matrix, params={"entries": "polynomial"}
            )
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
    if variant == "universal_grassmann":
        try:
            return GrassmannKernel(int(cfg["ambient_dim"]), int(cfg["rank"]))
        except (KeyError, ValueError) as exc:
            raise ConfigError(f"bad universal_grassmann config: {exc}") from exc
    if variant == "user_hook":
        target = cfg.get("target")
        if not target or ":" not in target:
            raise ConfigError("user_hook needs 'target' of the form 'module:function'")
        mod_name, fn_name = target.split(":", 1)
        try:
            fn = getattr(import_module(mod_name), fn_name)
        except (ImportError, AttributeError) as exc:
            raise ConfigError(f"cannot import user hook {target!r}: {exc}") from exc
        spec = fn(**cfg.get("params", {}))
        if not isinstance(spec, KernelSpec):
            raise ConfigError("user hook must return a KernelSpec")
        return spec
    raise ConfigError(f"unknown kernel variant {variant!r}")


def _build_grid(cfg: dict) -> ChartGrid:
    if not isinstance(cfg, dict) or "axes" not in cfg or not cfg["axes"]:
        raise ConfigError("grid config needs a nonempty 'axes' list")
    re_lo, re_hi, im_lo, im_hi, re_res, im_res, scale = [], [], [], [], [], [], []
    for axis in cfg["axes"]:
        try:
            lo, hi = (float(x) for x in axis["re"])
            re_lo.append(lo)
            re_hi.append(hi)
            lo, hi = (float(x) for x in axis["im"])
            im_lo.append(lo)
            im_hi.append(hi)
            re_res.append(int(axis["re_res"]))
            im_res.append(int(axis["im_res"]))
            scale.append(float(axis.get("scale", 1.0)))
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"bad grid axis {axis!r}: {exc}") from exc
    if any(r < 2 for r in re_res) or any(r < 2 for r in im_res):
        raise ConfigError("grid resolution must be >= 2 per real axis")
    try:
        return ChartGrid(
            tuple(re_lo), tuple(re_hi), tuple(im_lo), tuple(im_hi),
            tuple(re_res), tuple(im_res), tuple(scale),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


@dataclass
class AnalysisConfig:
    """Validated analysis request."""

    kernel: KernelSpec
    grid: ChartGrid
    steps: FdSteps
    tolerances: dict
    tasks: tuple[str, ...]
    seed: int
    direction_count: int
    psd_points: int
    subbundle_frame: Callable | None
    output_report: str | None
    output_csv_dir: str | None
    echo: dict

    @classmethod
    def from_dict(cls, raw: dict) -> "AnalysisConfig":
        if not isinstance(raw, dict):
            raise ConfigError("config must be a JSON object")
        kernel = build_kernel(raw.get("kernel", {}))
        grid = _build_grid(raw.get("grid", {}))
        if grid.dim != kernel.base_dim:
            raise ConfigError(
                f"grid has {grid.dim} complex axes but the kernel chart has "
                f"{kernel.base_dim}"
            )
        fd_cfg = raw.get("fd_steps", raw.get("fd", {}))
        steps = FdSteps(
            first=float(fd_cfg.get("first", 1e-5)),
            second=float(fd_cfg.get("second", 1e-4)),
            richardson=bool(fd_cfg.get("richardson", False)),
        )
        if steps.first <= 0 or steps.second <= 0:
            raise ConfigError("finite-difference steps must be positive")
        tolerances = dict(_DEFAULT_TOLERANCES)
        for key, value in raw.get("tolerances", {}).items():
            if key not in tolerances:
                raise ConfigError(f"unknown tolerance {key!r}")
            tolerances[key] = float(value)
        tasks = raw.get("tasks", [])
        if not isinstance(tasks, list) or not tasks:
            raise ConfigError("'tasks' must be a nonempty list")
        unknown = [t for t in tasks if t not in TASK_ORDER]
        if unknown:
            raise ConfigError(f"unknown tasks: {unknown}")
        ordered = tuple(t for t in TASK_ORDER if t in tasks)
        directions = raw.get("directions", {})
        seed = int(directions.get("seed", raw.get("seed", 0)))
        env_seed = os.environ.get("BCK_SEED")
        if env_seed is not None:
            try:
                seed = int(env_seed)
            except ValueError as exc:
                raise ConfigError(f"BCK_SEED must be an integer: {env_seed!r}") from exc
        count = int(directions.get("count", 64))
        if count < 0:
            raise ConfigError("direction count must be >= 0")
        psd_points = int(raw.get("samples", {}).get("psd_points", 50))
        if psd_points < 1:
            raise ConfigError("samples.psd_points must be >= 1")
        frame = None
        if "subbundle" in raw:
            sub = raw["subbundle"]
            if not isinstance(sub, dict) or "frame" not in sub:
                raise ConfigError("subbundle config needs a 'frame' polynomial matrix")
            frame = _parse_polynomial_matrix(sub["frame"], kernel.base_dim)
        if "subbundle" in ordered and frame is None:
            raise ConfigError("task 'subbundle' requires a 'subbundle.frame' config")
        output = raw.get("output", {})
        return cls(
            kernel=kernel,
            grid=grid,
            steps=steps,
            tolerances=tolerances,
            tasks=ordered,
            seed=seed,
            direction_count=count,
            psd_points=psd_points,
            subbundle_frame=frame,
            output_report=output.get("report"),
            output_csv_dir=output.get("csv_dir"),
            echo=raw,
        )


# ---------------------------------------------------------------------------
# the run context and tasks
# ---------------------------------------------------------------------------


@dataclass
class RunContext:
    config: AnalysisConfig
    points: np.ndarray
    points_total: int
    threads: int = 1
    _metric: object = dataclass_field(default=None, repr=False)

    @property
    def kernel(self) -> KernelSpec:
        return self.config.kernel

    @property
    def steps(self) -> FdSteps:
        return self.config.steps

    @property
    def tol(self) -> dict:
        return self.config.tolerances

    def metric(self):
        if self._metric is None:
            metric = metric_from_kernel(self.kernel, self.tol["admissibility"])
            metric.scale = np.asarray(self.config.grid.scale, dtype=float)
            self._metric = metric
        return self._metric

    def map_points(self, fn):
        if self.threads > 1:
            from concurrent.futures import ThreadPoolExecutor

            with ThreadPoolExecutor(max_workers=self.threads) as pool:
                return list(pool.map(fn, self.points))
        return [fn(z) for z in self.points]


def _point_columns(points: np.ndarray) -> list[dict]:
    cols = []
    for j in range(points.shape[1]):
        cols.append({"name": f"re_z{j + 1}", "values": [float(z[j].real) for z in points]})
        cols.append({"name": f"im_z{j + 1}", "values": [float(z[j].imag) for z in points]})
    return cols


def _matrix_field_columns(name: str, stacks: list[np.ndarray]) -> list[dict]:
    """Flatten per-point coefficient stacks into named real columns."""
    sample = stacks[0]
    cols = []
    for index in np.ndindex(sample.shape):
        tag = "_".join(str(i) for i in index)
        cols.append(
            {
                "name": f"{name}_{tag}_re",
                "values": [float(s[index].real) for s in stacks],
            }
        )
        cols.append(
            {
                "name": f"{name}_{tag}_im",
                "values": [float(s[index].imag) for s in stacks],
            }
        )
    return cols


def _task_selftest(ctx: RunContext) -> dict:
    entries = run_selfcheck(seed=ctx.config.seed)
    return {
        "passed": all(e["passed"] for e in entries),
        "data": {"checks": entries},
    }


def _task_psd(ctx: RunContext) -> dict:
    rng = np.random.default_rng(ctx.config.seed)
    grid = ctx.config.grid
    kernel = ctx.kernel
    pts = []
    attempts = 0
    while len(pts) < ctx.config.psd_points:
        attempts += 1
        if attempts > 1000 * ctx.config.psd_points:
            raise DomainError("could not sample points inside the kernel domain")
        z = np.empty(grid.dim, dtype=complex)
        for j in range(grid.dim):
            re = rng.uniform(grid.re_lo[j], grid.re_hi[j])
            im = rng.uniform(grid.im_lo[j], grid.im_hi[j])
            z[j] = re + 1j * im
        if kernel.contains(z):
            pts.append(z)
    margin = psd_check(gram(kernel, np.asarray(pts)))
    passed = margin >= -ctx.tol["psd"]
    return {
        "passed": bool(passed),
        "data": {"margin": float(margin), "sample_points": len(pts)},
    }


def _task_admissibility(ctx: RunContext) -> dict:
    worst = None
    for z in ctx.points:
        res = admissibility(ctx.kernel, z, tol=ctx.tol["admissibility"])
        rel = res.smallest_singular_value / res.norm if res.norm > 0 else 0.0
        if worst is None or rel < worst[0]:
            worst = (rel, z, res.invertible)
    all_invertible = worst is not None and worst[2] and worst[0] >= ctx.tol["admissibility"]
    return {
        "passed": bool(all_invertible),
        "data": {
            "min_relative_margin": float(worst[0]),
            "worst_point": worst[1],
            "points": int(ctx.points.shape[0]),
        },
    }


def _disc_connection_reference(nu, z):
    return nu * np.conj(z[0]) / (1.0 - abs(z[0]) ** 2)


def _disc_curvature_reference(nu, z):
    return nu / (1.0 - abs(z[0]) ** 2) ** 2


def _task_connection(ctx: RunContext) -> dict:
    metric = ctx.metric()

    def work(z):
        conn = chern_connection(metric, z, ctx.steps)
        resid = compatibility_residuals(metric, z, ctx.steps, connection=conn)
        return conn, resid

    results = ctx.map_points(work)
    rel_metric = max(r["metric"] / r["scale"] for _, r in results)
    holo = max(c.holo_defect for c, _ in results)
    data = {
        "max_relative_metric_residual": float(rel_metric),
        "max_holo_defect": float(holo),
        "fields": _point_columns(ctx.points)
        + _matrix_field_columns("a", [c.form.p for c, _ in results]),
    }
    if isinstance(ctx.kernel, DiscPowerKernel):
        err = max(
            abs(c.form.p[0, 0, 0] - _disc_connection_reference(ctx.kernel.nu, z))
            for (c, _), z in zip(results, ctx.points)
        )
        data["closed_form_max_abs_err"] = float(err)
    passed = rel_metric <= ctx.tol["compatibility"]
    return {"passed": bool(passed), "data": data}


def _task_curvature(ctx: RunContext) -> dict:
    metric = ctx.metric()

    def work(z):
        analytic = curvature(metric, z, ctx.steps, method="analytic_expansion")
        nested = curvature(metric, z, ctx.steps, method="nested_fd")
        scale = max(1.0, max(frob(m) for m in analytic.form.r11.reshape((-1, metric.fiber_dim, metric.fiber_dim))))
        agreement = (
            max(
                frob(analytic.form.r11[k, j] - nested.form.r11[k, j])
                for k in range(metric.dim)
                for j in range(metric.dim)
            )
            / scale
        )
        purity = nested.purity_residual / scale
        return analytic, agreement, purity

    results = ctx.map_points(work)
    agreement = max(a for _, a, _ in results)
    purity = max(p for _, _, p in results)
    pairing = max(c.pairing_residual for c, _, _ in results)
    data = {
        "max_method_disagreement": float(agreement),
        "max_relative_purity_residual": float(purity),
        "max_pairing_residual": float(pairing),
        "fields": _point_columns(ctx.points)
        + _matrix_field_columns("r11", [c.form.r11 for c, _, _ in results]),
    }
    if isinstance(ctx.kernel, DiscPowerKernel):
        err = max(
            abs(c.form.r11[0, 0, 0, 0] - _disc_curvature_reference(ctx.kernel.nu, z))
            / abs(_disc_curvature_reference(ctx.kernel.nu, z))
            for (c, _, _), z in zip(results, ctx.points)
        )
        data["closed_form_max_rel_err"] = float(err)
    passed = agreement <= ctx.tol["method_agreement"] and purity <= ctx.tol["purity"]
    return {"passed": bool(passed), "data": data}


def _task_compatibility(ctx: RunContext) -> dict:
    metric = ctx.metric()

    def work(z):
        return compatibility_residuals(metric, z, ctx.steps)

    results = ctx.map_points(work)
    rel = {
        key: max(r[key] / r["scale"] for r in results)
        for key in ("metric", "holo", "structure")
    }
    passed = all(v <= ctx.tol["compatibility"] for v in rel.values())
    return {
        "passed": bool(passed),
        "data": {f"max_relative_{k}_residual": float(v) for k, v in rel.items()},
    }


def _task_dual(ctx: RunContext) -> dict:
    def work(z):
        return dual_curvature_check(ctx.kernel, z, ctx.steps).residual

    residual = max(ctx.map_points(work))
    return {
        "passed": bool(residual <= ctx.tol["dual"]),
        "data": {"max_residual": float(residual)},
    }


def _task_subbundle(ctx: RunContext) -> dict:
    metric = ctx.metric()
    frame = ctx.config.subbundle_frame

    def work(z):
        split = subbundle_split(metric, frame, z, ctx.steps)
        return split.identity_residual, split.beta_antiholo_residual

    results = ctx.map_points(work)
    identity = max(r[0] for r in results)
    antiholo = max(r[1] for r in results)
    passed = identity <= ctx.tol["subbundle"]
    return {
        "passed": bool(passed),
        "data": {
            "max_identity_residual": float(identity),
            "max_beta_antiholo_residual": float(antiholo),
        },
    }


def _griffiths_report(ctx: RunContext):
    metric = ctx.metric()
    return griffiths_verdict(
        metric,
        lambda z: curvature(metric, z, ctx.steps),
        ctx.points,
        directions=ctx.config.direction_count,
        seed=ctx.config.seed,
        pos_tol=ctx.tol["pos"],
        neg_tol=ctx.tol["neg"],
    )


def _griffiths_data(ctx: RunContext, report) -> dict:
    return {
        "verdict": report.verdict,
        "min_margin": float(report.min_margin),
        "witness_point": report.witness_point,
        "witness_direction": report.witness_direction,
        "directions": int(report.directions.shape[0]),
        "max_hermiticity_residual": float(report.max_hermiticity_residual),
        "max_purity_residual": float(report.max_purity_residual),
        "sampled_directions_only": report.sampled_only,
        "fields": _point_columns(ctx.points)
        + [{"name": "min_margin", "values": [float(v) for v in report.min_margins]}],
    }


def _task_griffiths(ctx: RunContext) -> dict:
    report = _griffiths_report(ctx)
    return {
        "passed": report.verdict != "indefinite",
        "data": _griffiths_data(ctx, report),
    }


def _task_theorem55(ctx: RunContext) -> dict:
    kernel = ctx.kernel
    rng = np.random.default_rng(ctx.config.seed)
    sub = ctx.points
    if sub.shape[0] > 25:
        idx = rng.choice(sub.shape[0], size=25, replace=False)
        idx.sort()
        sub = sub[idx]
    cr_worst = 0.0
    for _ in range(3):
        w0 = ctx.points[int(rng.integers(0, ctx.points.shape[0]))]
        xi = rng.standard_normal(kernel.fiber_dim) + 1j * rng.standard_normal(kernel.fiber_dim)
        xi /= np.linalg.norm(xi)

        def section(z, w0=w0, xi=xi):
            return kernel.eval(z, w0) @ xi

        cr_worst = max(
            cr_worst,
            cauchy_riemann_residual(section, sub, ctx.steps.first, richardson=True),
        )
    adm_margin = np.inf
    for z in ctx.points:
        res = admissibility(kernel, z, tol=ctx.tol["admissibility"])
        rel = res.smallest_singular_value / res.norm if res.norm > 0 else 0.0
        adm_margin = min(adm_margin, rel)
    premise_ok = (
        kernel.holomorphic
        and cr_worst <= ctx.tol["holomorphy"]
        and adm_margin >= ctx.tol["admissibility"]
    )
    premise = {
        "holomorphic": bool(kernel.holomorphic),
        "cauchy_riemann_residual": float(cr_worst),
        "min_admissibility_margin": float(adm_margin),
        "satisfied": bool(premise_ok),
    }
    if not premise_ok:
        return {
            "passed": False,
            "status": "hypothesis_not_met",
            "data": {"premise": premise, "conclusion": None},
        }
    report = _griffiths_report(ctx)
    return {
        "passed": report.verdict != "indefinite",
        "status": "verified" if report.verdict != "indefinite" else "conclusion_failed",
        "data": {"premise": premise, "conclusion": _griffiths_data(ctx, report)},
    }


_TASKS = {
    "selftest": _task_selftest,
    "psd": _task_psd,
    "admissibility": _task_admissibility,
    "connection": _task_connection,
    "curvature": _task_curvature,
    "compatibility": _task_compatibility,
    "dual": _task_dual,
    "subbundle": _task_subbundle,
    "griffiths": _task_griffiths,
    "theorem55": _task_theorem55,
}

_GRIDLESS_TASKS = {"selftest", "psd"}


# ---------------------------------------------------------------------------
# report assembly
# ---------------------------------------------------------------------------


@dataclass
class AnalysisReport:
    data: dict

    @property
    def passed(self) -> bool:
        return self.data["passed"]

    @property
    def exit_code(self) -> int:
        return self.data["exit_code"]

    def to_json(self) -> str:
        return json.dumps(_jsonify(self.data), sort_keys=True, indent=2)


def _jsonify(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonify(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonify(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonify(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        value = float(obj)
        if not np.isfinite(value):
            raise StructuralError("report contains a non-finite numeric entry")
        return value
    if isinstance(obj, (np.complexfloating, complex)):
        if not (np.isfinite(obj.real) and np.isfinite(obj.imag)):
            raise StructuralError("report contains a non-finite numeric entry")
        return {"re": float(obj.real), "im": float(obj.imag)}
    return obj


def _error_kind(exc: Exception) -> str:
    if isinstance(exc, DomainError):
        return "domain"
    if isinstance(exc, (StructuralError, SingularMetricError)):
        return "structural"
    return "numeric"


def run_analyze(config: AnalysisConfig, threads: int = 1) -> AnalysisReport:
    """Execute the requested tasks and assemble the report.

    Tasks run in dependency order; a failure in one is recorded and does
    not abort the others.  The exit code is 0 only if every requested
    task passed, with structural and domain error kinds mapped to their
    dedicated codes.
    """
    margin = 4.0 * config.steps.max_step * max(config.grid.scale)
    all_points = config.grid.points()
    points = config.grid.interior_points(config.kernel, margin=margin)
    needs_grid = any(t not in _GRIDLESS_TASKS for t in config.tasks)
    if needs_grid and points.shape[0] == 0:
        raise DomainError(
            "no grid point lies inside the kernel domain with the stencil margin "
            f"{margin:.3e}"
        )
    ctx = RunContext(
        config=config,
        points=points,
        points_total=all_points.shape[0],
        threads=max(1, int(threads)),
    )
    tasks = {}
    for name in config.tasks:
        start = time.perf_counter()
        entry = {
            "passed": False,
            "status": "ok",
            "error": None,
            "error_kind": None,
            "data": {},
        }
        try:
            result = _TASKS[name](ctx)
            entry.update(result)
            entry.setdefault("status", "ok")
        except BckError as exc:
            entry["error"] = str(exc)
            entry["error_kind"] = _error_kind(exc)
            entry["status"] = "error"
        entry["timing"] = {"wall_s": time.perf_counter() - start}
        tasks[name] = entry

    passed = all(t["passed"] for t in tasks.values())
    if any(t["error_kind"] == "structural" for t in tasks.values()):
        exit_code = 4
    elif any(t["error_kind"] == "domain" for t in tasks.values()):
        exit_code = 3
    else:
        exit_code = 0 if passed else 1
    report = {
        "schema": REPORT_SCHEMA,
        "version": __version__,
        "config": config.echo,
        "seed": config.seed,
        "grid": {
            "points_total": int(all_points.shape[0]),
            "points_used": int(points.shape[0]),
            "stencil_margin": margin,
            "order": "row-major over re/im of each axis in declaration order",
        },
        "tasks": tasks,
        "passed": passed,
        "exit_code": exit_code,
    }
    return AnalysisReport(report)


def run_verify_theorem55(config: AnalysisConfig) -> dict:
    """Premise-gated positivity verification as a standalone report section."""
    margin = 4.0 * config.steps.max_step * max(config.grid.scale)
    points = config.grid.interior_points(config.kernel, margin=margin)
    if points.shape[0] == 0:
        raise DomainError("no grid point lies inside the kernel domain")
    ctx = RunContext(config=config, points=points, points_total=points.shape[0])
    return _task_theorem55(ctx)


def run_selftest(seed: int = 0) -> dict:
    """The invariant corpus as a report section."""
    entries = run_selfcheck(seed=seed)
    return {
        "passed": all(e["passed"] for e in entries),
        "data": {"checks": entries},
    }


# ---------------------------------------------------------------------------
# output and entry point
# ---------------------------------------------------------------------------


def _atomic_write(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path)) or "."
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".bck-", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _write_csv_fields(report: AnalysisReport, csv_dir: str) -> None:
    for name, task in report.data["tasks"].items():
        fields = task.get("data", {}).get("fields")
        if not fields:
            continue
        lines = [",".join(col["name"] for col in fields)]
        rows = len(fields[0]["values"])
        for i in range(rows):
            lines.append(",".join(repr(float(col["values"][i])) for col in fields))
        _atomic_write(os.path.join(csv_dir, f"{name}.csv"), "\n".join(lines) + "\n")


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="bck",
        description="Kernel-induced metrics, curvature and positivity on complex charts.",
    )
    sub = parser.add_subparsers(dest="command")
    analyze = sub.add_parser("analyze", help="run a configured analysis")
    analyze.add_argument("--config", required=True, help="path to the JSON config")
    analyze.add_argument("--out", default=None, help="report path (overrides config)")
    analyze.add_argument("--csv", default=None, help="directory for CSV field tables")
    analyze.add_argument("--threads", type=int, default=1, help="per-point worker threads")
    selftest = sub.add_parser("selftest", help="run the built-in invariant suite")
    selftest.add_argument("--seed", type=int, default=0)
    sub.add_parser("version", help="print the package version")

    args = parser.parse_args(argv)
    if args.command == "version":
        print(__version__)
        return 0
    if args.command == "selftest":
        section = run_selftest(seed=args.seed)
        for check in section["data"]["checks"]:
            status = "pass" if check["passed"] else "FAIL"
            print(
                f"{status}  {check['name']}: residual {check['residual']:.3e} "
                f"(tolerance {check['tolerance']:.1e})"
            )
        return 0 if section["passed"] else 1
    if args.command != "analyze":
        parser.print_help()
        return 2

    try:
        with open(args.config, "r", encoding="utf-8") as handle:
            raw = json.load(handle)
    except (OSError, json.JSONDecodeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    try:
        config = AnalysisConfig.from_dict(raw)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2

    try:
        report = run_analyze(config, threads=args.threads)
    except DomainError as exc:
        print(f"domain error: {exc}", file=sys.stderr)
        return 3
    except (StructuralError, SingularMetricError) as exc:
        print(f"structural error: {exc}", file=sys.stderr)
        return 4

    out_path = args.out or config.output_report
    text = report.to_json() + "\n"
    if out_path:
        _atomic_write(out_path, text)
    else:
        print(text, end="")
    csv_dir = args.csv or config.output_csv_dir
    if csv_dir:
        _write_csv_fields(report, csv_dir)
    return report.exit_code


if __name__ == "__main__":
    sys.exit(main())
