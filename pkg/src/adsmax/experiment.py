"""Sweep circle-map families through the full pipeline and report.

One row per family parameter: cross-ratio norm estimate, hull width
estimate, maximal-surface curvature supremum, PDE residual diagnostics,
and the dilatation of the sampled extension map, followed by the
inequality checks tying those quantities together and extremal fits of
the comparison constants.

Config schema (JSON object; all keys optional except family and params):

    {
      "family": "shear" | "power" | "mobius",
      "params": [0.25, 0.5, 1.0],
      "seed": 0,
      "curve_samples": 512,
      "trim_fraction": 0.6666666666666666,
      "workers": 1,
      "out_dir": ".",
      "solver":       {"R_max": 3.0, "n_r": 64, "n_theta": 128,
                       "tol_H": 1e-06, "max_iters": 200, "damping": 0.5},
      "norm_search":  {"grid": 17, "restarts": 32, "max_evals": 250000,
                       "nm_maxiter": 150, "trans_range": 4.0,
                       "scale_range": 3.0},
      "width_search": {"samples": 512, "tol": 1e-09, "max_iters": 200,
                       "top_pairs": 12}
    }

The master seed drives per-row seeds, so a fixed config reproduces the
report byte for byte.  Estimator directions: the norm and width values
are lower bounds, so inequality checks are only asserted where that
direction cannot produce a false violation; the remaining comparison is
reported as advisory.
"""

from __future__ import annotations

import dataclasses
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import AdsmaxError, AllUmbilical, ConfigInvalid, InsufficientData, IoError
from .extension import dilatation, ml_map
from .homeo import CircleHomeo, MobiusHomeo, PowerHomeo, ShearHomeo
from .hull import graph_samples
from .lorentz import Plane
from .mesh import TRUSTED_FRACTION, lambda_sup, trim_rim
from .mobius import Mobius
from .norm import SearchConfig, cross_ratio_norm
from .solver import SolverConfig, solve_maximal
from .surface_checks import (
    UMBILIC_EPS,
    check_linear_pde,
    check_quasilinear_pde,
    lipschitz_v,
)
from .width import WidthConfig, width_estimate

FAMILIES = ("mobius", "shear", "power")

# additive tolerance absorbing estimator bias in the inequality checks
PROP_SLACK = 1e-3

# regime cutoffs for the extremal constant fits
SMALL_WIDTH = 0.6
SMALL_NORM = 0.35
HIGH_LAMBDA = 0.5

_DEGENERATE = 1e-6

CSV_COLUMNS = (
    "family,param,norm_lb,width_lb,lambda_sup,K_formula_sup,K_measured_sup,"
    "res_linear,res_quasilinear,res_hessian,"
    "flag_propC,flag_propG,slack_propC,slack_propG"
)


@dataclass(frozen=True)
class ExperimentConfig:
    """One family sweep: which maps to run and with what budgets."""

    family: str
    params: tuple
    seed: int = 0
    curve_samples: int = 512
    trim_fraction: float = TRUSTED_FRACTION
    workers: int = 1
    out_dir: str = "."
    solver: SolverConfig = field(default_factory=SolverConfig)
    norm_search: SearchConfig = field(default_factory=SearchConfig)
    width_search: WidthConfig = field(default_factory=WidthConfig)

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ConfigInvalid(f"unknown family {self.family!r}; expected one of {FAMILIES}")
        params = tuple(float(p) for p in self.params)
        if not params:
            raise ConfigInvalid("parameter list must be nonempty")
        if not all(np.isfinite(params)):
            raise ConfigInvalid("parameters must be finite")
        if self.family == "power" and any(p <= 0 for p in params):
            raise ConfigInvalid("power family needs positive exponents")
        if not (0.05 <= float(self.trim_fraction) <= 1.0):
            raise ConfigInvalid(f"trim_fraction {self.trim_fraction} outside (0.05, 1]")
        if int(self.workers) < 1:
            raise ConfigInvalid("workers must be >= 1")
        object.__setattr__(self, "params", params)


def _build_section(cls, d: dict, name: str):
    allowed = {f.name for f in dataclasses.fields(cls)}
    bad = set(d) - allowed
    if bad:
        raise ConfigInvalid(f"unknown {name} keys: {sorted(bad)}")
    try:
        return cls(**d)
    except TypeError as e:
        raise ConfigInvalid(f"bad {name} section: {e}")


def config_from_dict(d: dict) -> ExperimentConfig:
    if not isinstance(d, dict):
        raise ConfigInvalid("config must be a JSON object")
    d = dict(d)
    sections = {
        "solver": _build_section(SolverConfig, d.pop("solver", {}), "solver"),
        "norm_search": _build_section(SearchConfig, d.pop("norm_search", {}), "norm_search"),
        "width_search": _build_section(WidthConfig, d.pop("width_search", {}), "width_search"),
    }
    allowed = {f.name for f in dataclasses.fields(ExperimentConfig)} - set(sections)
    bad = set(d) - allowed
    if bad:
        raise ConfigInvalid(f"unknown config keys: {sorted(bad)}")
    if "family" not in d or "params" not in d:
        raise ConfigInvalid("config needs at least 'family' and 'params'")
    return ExperimentConfig(**d, **sections)


def load_config(path: str) -> ExperimentConfig:
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except OSError as e:
        raise ConfigInvalid(f"cannot read config {path}: {e}")
    except json.JSONDecodeError as e:
        raise ConfigInvalid(f"config {path} is not valid JSON: {e}")
    return config_from_dict(raw)


def make_homeo(family: str, param: float) -> CircleHomeo:
    """Family member for one sweep parameter.

    mobius: a tilted Mobius map (rotation-conjugated scaling by param);
    shear:  the piecewise-Mobius shear with log-scale param;
    power:  the signed power map with exponent param.
    """
    if family == "mobius":
        m = Mobius.rotation(0.4) @ Mobius.scaling(float(param)) @ Mobius.rotation(-0.4)
        return MobiusHomeo(m)
    if family == "shear":
        return ShearHomeo(float(param))
    if family == "power":
        return PowerHomeo(float(param))
    raise ConfigInvalid(f"unknown family {family!r}")


@dataclass
class ReportRow:
    """Pipeline outputs and inequality verdicts for one parameter."""

    family: str
    param: float
    norm_lb: float = math.nan
    width_lb: float = math.nan
    lambda_sup: float = math.nan
    K_formula_sup: float = math.nan
    K_measured_sup: float = math.nan
    res_linear: float = math.nan
    res_quasilinear: float = math.nan
    res_hessian: float = math.nan
    flag_propC: bool = False
    flag_propG: bool = False
    slack_propC: float = math.nan
    slack_propG: float = math.nan
    flag_propF_advisory: bool = False
    slack_propF: float = math.nan
    lipschitz_sup: float = math.nan
    converged: bool = False
    error: str = ""


@dataclass
class FitEntry:
    """One extremal fit: the value, who contributed, and their spread."""

    value: float
    params: tuple
    spread: float


@dataclass
class ConstantFit:
    """Empirical comparison constants extracted from a report."""

    C1_hat: FitEntry
    M_hat_widthlaw: FitEntry
    M_hat_lipschitz: FitEntry
    C_upper_hat: FitEntry
    C0_lower_hat: FitEntry


@dataclass
class Report:
    family: str
    seed: int
    rows: list
    fit: ConstantFit | None = None


def _tan_clamped(w: float) -> float:
    """tan on [0, pi/2), saturating instead of wrapping past the pole."""
    return math.tan(min(w, math.pi / 2 - 1e-12))


def verify_inequalities(row: ReportRow) -> ReportRow:
    """Fill the inequality flags and slacks on a copy of the row.

    Checked with estimator direction in mind: width_lb underestimates the
    width, so it sits on the small side of both asserted comparisons;
    norm_lb underestimates the norm, which keeps the curvature-vs-width
    check and the norm-below-width check sound.  The norm-above-width
    comparison cannot be asserted from lower bounds and is advisory.
    """
    out = dataclasses.replace(row)
    if not all(np.isfinite([row.width_lb, row.lambda_sup, row.norm_lb])):
        return out
    tan_w = _tan_clamped(row.width_lb)
    lam = row.lambda_sup
    rhs_c = 2.0 * lam / (1.0 - lam * lam) if lam < 1.0 else math.inf
    out.slack_propC = rhs_c - tan_w
    out.flag_propC = out.slack_propC >= -PROP_SLACK
    out.slack_propG = tan_w - math.tanh(row.norm_lb / 4.0)
    out.flag_propG = out.slack_propG >= -PROP_SLACK
    out.slack_propF = math.sinh(row.norm_lb / 2.0) - tan_w
    out.flag_propF_advisory = out.slack_propF >= -PROP_SLACK
    return out


def _row_seed(master: int, index: int) -> int:
    return int(np.random.SeedSequence(entropy=master, spawn_key=(index,)).generate_state(1)[0])


def _trim_count(mesh, fraction: float) -> int:
    h = mesh.grid.stencils.h
    keep = int(math.floor(fraction * mesh.grid.R_max / h - 0.5)) + 1
    return max(mesh.grid.n_r - max(keep, 8), 0)


def _note(row: ReportRow, stage: str, exc: Exception) -> None:
    msg = f"{stage}: {exc}"
    row.error = msg if not row.error else row.error + "; " + msg


STAGES = ("norm", "width", "surface", "extend")


def _run_row(
    cfg: ExperimentConfig, index: int, param: float, stage: str = "extend"
) -> ReportRow:
    depth = STAGES.index(stage)
    row = ReportRow(family=cfg.family, param=float(param))
    seed = _row_seed(cfg.seed, index)
    try:
        phi = make_homeo(cfg.family, param)
    except AdsmaxError as e:
        _note(row, "family", e)
        return verify_inequalities(row)

    try:
        norm_cfg = dataclasses.replace(cfg.norm_search, seed=seed)
        row.norm_lb = float(cross_ratio_norm(phi, norm_cfg).value)
    except AdsmaxError as e:
        _note(row, "norm", e)
    if depth < 1:
        return verify_inequalities(row)

    try:
        curve = graph_samples(phi, cfg.curve_samples)
        row.width_lb = float(width_estimate(curve, cfg.width_search).value)
    except AdsmaxError as e:
        _note(row, "width", e)
    if depth < 2:
        return verify_inequalities(row)

    mesh = None
    try:
        mesh = solve_maximal(phi, cfg.solver)
        row.converged = bool(mesh.converged)
        if not mesh.converged:
            _note(row, "solver", AdsmaxError(f"residual {mesh.residual:.3e} above tol"))
    except AdsmaxError as e:
        _note(row, "solver", e)

    if mesh is not None:
        try:
            row.lambda_sup = float(lambda_sup(mesh, cfg.trim_fraction))
        except AdsmaxError as e:
            _note(row, "lambda", e)
        try:
            floor = float(mesh.f.min())
            c = 0.5 * (floor - math.pi / 2.0)
            if floor - c < 0.05 or c <= -math.pi / 2 + 0.05:
                raise AdsmaxError("no disjoint constant-height plane fits below")
            plane = Plane.from_dual([0.0, 0.0, -math.sin(c), math.cos(c)])
            res = check_linear_pde(mesh, plane)
            row.res_linear = float(res.linear_pde)
            row.res_hessian = float(res.hessian_identity)
        except AdsmaxError as e:
            _note(row, "linear-check", e)
        try:
            row.res_quasilinear = float(check_quasilinear_pde(mesh).quasilinear_pde)
        except AllUmbilical:
            pass  # totally geodesic rows have no log-curvature equation to check
        except AdsmaxError as e:
            _note(row, "quasilinear-check", e)
        if np.isfinite(row.lambda_sup) and row.lambda_sup > UMBILIC_EPS:
            try:
                row.lipschitz_sup = float(lipschitz_v(mesh))
            except AdsmaxError as e:
                _note(row, "lipschitz", e)
    if mesh is not None and depth >= 3:
        try:
            trimmed = trim_rim(mesh, _trim_count(mesh, cfg.trim_fraction))
            sampled = ml_map(trimmed)
            dil = dilatation(trimmed, sampled)
            row.K_formula_sup = float(dil.K_sup)
            row.K_measured_sup = float(trimmed.interior(dil.K_measured).max())
        except AdsmaxError as e:
            _note(row, "extension", e)

    return verify_inequalities(row)


def run_experiment(cfg: ExperimentConfig, stage: str = "extend") -> Report:
    """Run every parameter, verify inequalities, and fit constants.

    `stage` truncates the per-row pipeline (norm < width < surface <
    extend); quantities past the cut stay NaN.  Row failures are recorded
    on the row (`error`) and the sweep continues.  The constant fit is
    attached when enough nondegenerate rows exist, otherwise left as None.
    """
    if stage not in STAGES:
        raise ConfigInvalid(f"unknown stage {stage!r}; expected one of {STAGES}")
    jobs = [(cfg, i, p, stage) for i, p in enumerate(cfg.params)]
    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            rows = list(pool.map(_run_row, *zip(*jobs)))
    else:
        rows = [_run_row(*job) for job in jobs]
    report = Report(family=cfg.family, seed=cfg.seed, rows=rows)
    try:
        report.fit = fit_constants(report)
    except InsufficientData:
        report.fit = None
    return report


def _fit_entry(pairs: list) -> FitEntry:
    """Extremal-fit record from (param, ratio) pairs; NaN when empty."""
    if not pairs:
        return FitEntry(value=math.nan, params=(), spread=math.nan)
    ratios = [r for _, r in pairs]
    return FitEntry(
        value=math.nan,  # caller overwrites with min or max
        params=tuple(p for p, _ in pairs),
        spread=float(max(ratios) - min(ratios)),
    )


def fit_constants(report: Report) -> ConstantFit:
    """Extremal estimates of the comparison constants across the rows.

    Rows with errors, without convergence, or with degenerate (near-zero)
    norm and width are excluded; at least three distinct parameters must
    survive.  Each entry reports the contributing parameters and the
    spread of their ratios, so drift across refinement is visible.
    """
    rows = [
        r
        for r in report.rows
        if r.converged
        and np.isfinite([r.norm_lb, r.width_lb, r.lambda_sup, r.K_formula_sup]).all()
        and r.norm_lb > _DEGENERATE
        and r.width_lb > _DEGENERATE
    ]
    if len({r.param for r in rows}) < 3:
        raise InsufficientData(
            f"{len(rows)} nondegenerate rows; need 3 distinct parameters"
        )

    c1_pairs = [
        (r.param, r.lambda_sup / _tan_clamped(r.width_lb))
        for r in rows
        if r.width_lb <= SMALL_WIDTH
    ]
    c1 = _fit_entry(c1_pairs)
    if c1_pairs:
        c1.value = float(max(r for _, r in c1_pairs))

    mw_pairs = [
        (r.param, -math.log(1.0 - r.lambda_sup) / math.log(_tan_clamped(r.width_lb)))
        for r in rows
        if r.lambda_sup >= HIGH_LAMBDA and _tan_clamped(r.width_lb) > 1.0
    ]
    mw = _fit_entry(mw_pairs)
    if mw_pairs:
        mw.value = float(max(r for _, r in mw_pairs))

    ml_pairs = [(r.param, r.lipschitz_sup) for r in rows if np.isfinite(r.lipschitz_sup)]
    ml = _fit_entry(ml_pairs)
    if ml_pairs:
        ml.value = float(max(r for _, r in ml_pairs))

    cu_pairs = [(r.param, math.log(r.K_formula_sup) / r.norm_lb) for r in rows]
    cu = _fit_entry(cu_pairs)
    if cu_pairs:
        cu.value = float(max(r for _, r in cu_pairs))

    c0_pairs = [
        (r.param, math.log(r.K_formula_sup) / r.norm_lb)
        for r in rows
        if r.norm_lb <= SMALL_NORM
    ]
    c0 = _fit_entry(c0_pairs)
    if c0_pairs:
        c0.value = float(min(r for _, r in c0_pairs))

    return ConstantFit(
        C1_hat=c1,
        M_hat_widthlaw=mw,
        M_hat_lipschitz=ml,
        C_upper_hat=cu,
        C0_lower_hat=c0,
    )


# --- emission ----------------------------------------------------------------


def _fmt(x: float) -> str:
    if isinstance(x, bool):
        return "true" if x else "false"
    return f"{x:.12g}"


def _csv_text(report: Report) -> str:
    lines = [CSV_COLUMNS]
    for r in report.rows:
        lines.append(
            ",".join(
                [
                    r.family,
                    _fmt(r.param),
                    _fmt(r.norm_lb),
                    _fmt(r.width_lb),
                    _fmt(r.lambda_sup),
                    _fmt(r.K_formula_sup),
                    _fmt(r.K_measured_sup),
                    _fmt(r.res_linear),
                    _fmt(r.res_quasilinear),
                    _fmt(r.res_hessian),
                    _fmt(r.flag_propC),
                    _fmt(r.flag_propG),
                    _fmt(r.slack_propC),
                    _fmt(r.slack_propG),
                ]
            )
        )
    return "\n".join(lines) + "\n"


def _json_text(report: Report) -> str:
    obj = {
        "family": report.family,
        "seed": report.seed,
        "rows": [dataclasses.asdict(r) for r in report.rows],
        "fit": None if report.fit is None else dataclasses.asdict(report.fit),
    }
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _svg_text(report: Report) -> str:
    """Scatter of (norm_lb, tan width_lb) with the two envelope curves."""
    W, H = 640, 480
    ml, mr, mt, mb = 64, 20, 20, 44
    pts = [
        (r.norm_lb, _tan_clamped(r.width_lb))
        for r in report.rows
        if np.isfinite([r.norm_lb, r.width_lb]).all()
    ]
    xmax = max([x for x, _ in pts] + [1.0]) * 1.08
    ymax = max(
        [y for _, y in pts] + [math.sinh(xmax / 2.0)]
    ) * 1.08

    def px(x):
        return ml + (W - ml - mr) * x / xmax

    def py(y):
        return H - mb - (H - mt - mb) * y / ymax

    def poly(fn, n=160):
        xs = [xmax * k / (n - 1) for k in range(n)]
        return " ".join(f"{px(x):.2f},{py(fn(x)):.2f}" for x in xs)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" '
        f'viewBox="0 0 {W} {H}">',
        f'<rect width="{W}" height="{H}" fill="white"/>',
        f'<line x1="{ml}" y1="{H - mb}" x2="{W - mr}" y2="{H - mb}" stroke="black"/>',
        f'<line x1="{ml}" y1="{mt}" x2="{ml}" y2="{H - mb}" stroke="black"/>',
    ]
    for k in range(6):
        x = xmax * k / 5
        y = ymax * k / 5
        parts.append(
            f'<text x="{px(x):.2f}" y="{H - mb + 16}" font-size="11" '
            f'text-anchor="middle">{x:.2f}</text>'
        )
        parts.append(
            f'<text x="{ml - 6}" y="{py(y) + 4:.2f}" font-size="11" '
            f'text-anchor="end">{y:.2f}</text>'
        )
    parts.append(
        f'<polyline points="{poly(lambda x: math.sinh(x / 2.0))}" fill="none" '
        f'stroke="#b2442c" stroke-dasharray="6 3"/>'
    )
    parts.append(
        f'<polyline points="{poly(lambda x: math.tanh(x / 4.0))}" fill="none" '
        f'stroke="#2c7a43" stroke-dasharray="2 3"/>'
    )
    for x, y in pts:
        parts.append(f'<circle cx="{px(x):.2f}" cy="{py(y):.2f}" r="4" fill="#1f5fa8"/>')
    parts.append(
        f'<text x="{W - mr - 4}" y="{mt + 14}" font-size="12" text-anchor="end">'
        "upper envelope sinh(x/2), lower envelope tanh(x/4)</text>"
    )
    parts.append(
        f'<text x="{(ml + W - mr) // 2}" y="{H - 8}" font-size="12" '
        f'text-anchor="middle">cross-ratio norm (lower bound)</text>'
    )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def emit(report: Report, fmt: str, out_dir: str = ".") -> str:
    """Write the report in one format; returns the written path."""
    if not report.rows:
        raise IoError("report has no rows to emit")
    renderers = {"csv": _csv_text, "json": _json_text, "svg": _svg_text}
    if fmt not in renderers:
        raise ConfigInvalid(f"format must be one of {sorted(renderers)}, got {fmt!r}")
    text = renderers[fmt](report)
    path = os.path.join(out_dir, f"report.{fmt}")
    try:
        os.makedirs(out_dir, exist_ok=True)
        with open(path, "w", newline="\n") as fh:
            fh.write(text)
    except OSError as e:
        raise IoError(f"cannot write {path}: {e}")
    return path


def load_report(path: str) -> Report:
    """Read back an emitted JSON report (inverse of emit('json'))."""
    try:
        with open(path) as fh:
            obj = json.load(fh)
    except OSError as e:
        raise IoError(f"cannot read {path}: {e}")
    rows = [ReportRow(**r) for r in obj["rows"]]
    fit = None
    if obj.get("fit") is not None:
        fit = ConstantFit(
            **{k: FitEntry(value=v["value"], params=tuple(v["params"]), spread=v["spread"])
               for k, v in obj["fit"].items()}
        )
    return Report(family=obj["family"], seed=int(obj["seed"]), rows=rows, fit=fit)
