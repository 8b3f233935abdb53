"""Command-line driver for batch verification runs.

Commands: validate, constants, fiber, thresholds, rate-study, oracle-check.
Exit codes are a stable contract: 0 all checks pass, 1 usage or I/O error,
2 verification failure.  The only environment knob is LEVYHOM_LOG (log
verbosity); identical config plus seed gives byte-identical CSV artifacts.
"""

from __future__ import annotations

import argparse
import logging
import math
import os
import sys
import time
from dataclasses import dataclass, field, replace

import numpy as np

from ._util import fmt, parallel_map, write_csv
from .coefficient import (ModelParams, certify, oracle_c0, theory_constants,
                          theta_modulus, validate_coefficient)
from .config import StudyConfig
from .errors import LevyhomError, TruncationUnstable
from .fiber import ModeSet, assemble_fiber_matrix, oracle_form_element
from .homogenization import (build_xi_grid, discrepancy_study, loglog_slope,
                             rate_bound, slope_widening)
from .spectral import threshold_report

log = logging.getLogger(__name__)


@dataclass
class CheckVerdict:
    name: str
    status: str          # pass | fail | skip
    margin: float | None = None
    detail: str = ""


@dataclass
class RunReport:
    command: str
    config_digest: str
    wall_time: float = 0.0
    checks: list = field(default_factory=list)
    artifacts: list = field(default_factory=list)
    values: dict = field(default_factory=dict)

    def add(self, name, status, margin=None, detail=""):
        self.checks.append(CheckVerdict(name, status, margin, detail))

    @property
    def passed(self) -> bool:
        return all(c.status != "fail" for c in self.checks)

    def render(self) -> str:
        lines = [f"command: {self.command}",
                 f"config:  {self.config_digest}",
                 f"status:  {'PASS' if self.passed else 'FAIL'} "
                 f"(wall {self.wall_time:.2f} s)"]
        if self.values:
            lines.append("values:")
            for key, val in self.values.items():
                lines.append(f"  {key} = {fmt(val)}")
        lines.append("checks:")
        for c in self.checks:
            extra = f" margin={fmt(c.margin)}" if c.margin is not None else ""
            detail = f" [{c.detail}]" if c.detail else ""
            lines.append(f"  {c.name}: {c.status}{extra}{detail}")
        if self.artifacts:
            lines.append("artifacts:")
            for path in self.artifacts:
                lines.append(f"  {path}")
        return "\n".join(lines)


def _prepare(cfg: StudyConfig):
    params = ModelParams(cfg.dimension, cfg.alpha)
    coeff = certify(cfg.build_coefficient(), cfg.resolved_positivity_grid)
    constants = theory_constants(params, coeff)
    modes = ModeSet(cfg.dimension, cfg.resolved_truncation)
    return params, coeff, constants, modes


# ----------------------------------------------------------------------
# Commands
# ----------------------------------------------------------------------

def cmd_validate(cfg: StudyConfig, out_dir: str, workers: int | None) -> RunReport:
    report = RunReport("validate", cfg.digest())
    params = ModelParams(cfg.dimension, cfg.alpha)
    coeff = cfg.build_coefficient()
    try:
        cert = validate_coefficient(coeff, cfg.resolved_positivity_grid)
    except LevyhomError as exc:
        report.add("symmetry+positivity", "fail", detail=str(exc))
        return report
    report.add("symmetry", "pass")
    report.add("positivity", "pass", margin=cert.mu_minus,
               detail=f"certified mu_minus={cert.mu_minus:.6g}")
    coeff = certify(coeff, cfg.resolved_positivity_grid)
    constants = theory_constants(params, coeff)
    report.values.update({
        "c0": constants.c0,
        "mu_minus": constants.mu_minus,
        "mu_plus": constants.mu_plus,
        "mu_eff": constants.mu_eff,
        "delta0": constants.delta0,
        "d0": constants.d0,
    })
    report.add("mu_eff_within_bounds",
               "pass" if constants.mu_minus <= constants.mu_eff <= constants.mu_plus
               else "fail")
    return report


def cmd_constants(cfg: StudyConfig, out_dir: str, workers: int | None) -> RunReport:
    report = RunReport("constants", cfg.digest())
    params, coeff, constants, _ = _prepare(cfg)
    report.values.update({
        "c0": constants.c0,
        "mu_minus": constants.mu_minus,
        "mu_plus": constants.mu_plus,
        "mu_eff": constants.mu_eff,
        "delta0": constants.delta0,
        "d0": constants.d0,
        "theta(1/e)": constants.theta(np.array([math.exp(-1.0)] + [0.0] * (cfg.dimension - 1))),
        "theta(1)": constants.theta(np.eye(cfg.dimension)[0]),
    })
    report.add("delta0_below_pi", "pass" if constants.delta0 < math.pi else "fail",
               margin=math.pi - constants.delta0)
    return report


def cmd_fiber(cfg: StudyConfig, out_dir: str, workers: int | None,
              xi_values=()) -> RunReport:
    report = RunReport("fiber", cfg.digest())
    params, coeff, constants, modes = _prepare(cfg)
    if not xi_values:
        raise ValueError("fiber requires --xi with at least one value")
    os.makedirs(out_dir, exist_ok=True)
    for idx, xi_spec in enumerate(xi_values):
        xi = np.array([float(v) for v in str(xi_spec).split(",")], dtype=float)
        if xi.size == 1 and cfg.dimension > 1:
            xi = np.concatenate([xi, np.zeros(cfg.dimension - 1)])
        fiber = assemble_fiber_matrix(coeff, params, constants.c0, modes, xi)
        header = []
        for j in range(modes.size):
            header += [f"re_{j}", f"im_{j}"]
        rows = []
        for row in fiber.entries:
            flat = []
            for z in row:
                flat += [float(z.real), float(z.imag)]
            rows.append(flat)
        path = os.path.join(out_dir, f"fiber_{idx}.csv")
        write_csv(path, header, rows, digest=cfg.digest())
        report.artifacts.append(path)
        herm = float(np.max(np.abs(fiber.entries - fiber.entries.conj().T)))
        scale = max(1.0, float(np.max(np.abs(fiber.entries))))
        report.add(f"hermitian_xi{idx}", "pass" if herm <= 1e-12 * scale else "fail",
                   margin=herm)
    return report


# per-quantity extra slope margin; the second-order quantity gets +0.05
_PHI_EXTRA_MARGIN = 0.05


def _threshold_requirement(alpha: float, quantity: str, margin: float):
    """Expected log-log slope floor and regressor kind per quantity."""
    if alpha == 1.0:
        # regress against the quantity's own logarithmic rate function
        return "rate", 1.0 - margin
    if quantity == "f_minus_p":
        expo = alpha if alpha < 1.0 else 1.0
    elif quantity == "phi":
        expo = 2.0 * alpha if alpha < 1.0 else 2.0
        margin = margin + _PHI_EXTRA_MARGIN
    elif quantity == "rho_star":
        expo = 1.0 + alpha if alpha < 1.0 else 2.0
    else:
        raise ValueError(quantity)
    return "xi", expo - margin


def _threshold_rate(alpha: float, quantity: str, r: np.ndarray) -> np.ndarray:
    theta = np.array([theta_modulus(alpha, v) for v in r])
    if quantity == "f_minus_p":
        return theta
    if quantity == "phi":
        return theta ** 2
    if quantity == "rho_star":
        if alpha < 1.0:
            return r ** (1.0 + alpha)
        if alpha == 1.0:
            return r ** 2 * (1.0 + np.abs(np.log(r)))
        return r ** 2
    raise ValueError(quantity)


def cmd_thresholds(cfg: StudyConfig, out_dir: str, workers: int | None) -> RunReport:
    report = RunReport("thresholds", cfg.digest())
    params, coeff, constants, modes = _prepare(cfg)
    d = cfg.dimension

    spec = cfg.xi_grid
    n_rad = max(2, int(round((spec.radial_max_exp - spec.radial_min_exp)
                             * spec.radial_per_decade)) + 1)
    radii = np.logspace(spec.radial_min_exp, spec.radial_max_exp, n_rad)
    radii = radii[radii <= constants.delta0]
    direction = np.eye(d)[0]
    xis = [np.zeros(d)] + [r * direction for r in radii]

    def one_report(xi):
        try:
            return threshold_report(coeff, params, modes, xi, constants,
                                    projector_tol=cfg.tolerances.projector_abs)
        except LevyhomError as exc:
            return exc

    rows = []
    failure = None
    for xi, rep in zip(xis, parallel_map(one_report, xis, workers)):
        if isinstance(rep, LevyhomError):
            failure = f"threshold_report failed at |xi|={np.linalg.norm(xi):.3g}: {rep}"
            break
        rows.append(
            [float(v) for v in rep.xi] + [rep.xi_norm, rep.lambda1, rep.lambda2,
                                          rep.f_minus_p_norm, rep.phi_norm,
                                          rep.af_minus_effective_norm, rep.rho,
                                          rep.rho_star]
        )

    os.makedirs(out_dir, exist_ok=True)
    header = [f"xi_{j + 1}" for j in range(d)] + [
        "xi_norm", "lambda1", "lambda2", "f_minus_p", "phi_norm",
        "af_minus_eff", "rho", "rho_star"]
    path = os.path.join(out_dir, "thresholds.csv")
    write_csv(path, header, rows, digest=cfg.digest())
    report.artifacts.append(path)
    if failure is not None:
        report.add("threshold_rows", "fail", detail=failure)
        return report
    report.add("threshold_rows", "pass", detail=f"{len(rows)} quasimomenta")

    arr = np.array(rows)
    norms = arr[:, d]
    lam1, lam2 = arr[:, d + 1], arr[:, d + 2]
    lower = constants.mu_minus * constants.c0 * norms ** params.alpha
    upper = constants.mu_plus * constants.c0 * norms ** params.alpha
    ok1 = bool(np.all(lam1 >= lower - 1e-10) and np.all(lam1 <= upper + 1e-10))
    report.add("lambda1_bounds", "pass" if ok1 else "fail")
    ok2 = bool(np.all(lam2 >= constants.d0 - 1e-10))
    report.add("lambda2_gap", "pass" if ok2 else "fail",
               margin=float(np.min(lam2) - constants.d0))

    margin = cfg.tolerances.slope_margin + slope_widening(params.alpha)
    quantities = {"f_minus_p": arr[:, d + 3], "phi": arr[:, d + 4],
                  "rho_star": np.abs(arr[:, d + 7])}
    for name, vals in quantities.items():
        sel = norms > 0.0
        r, v = norms[sel], vals[sel]
        if np.all(v <= 1e-12):
            report.add(f"slope_{name}", "pass", detail="identically zero")
            continue
        kind, floor = _threshold_requirement(params.alpha, name, margin)
        x = r if kind == "xi" else _threshold_rate(params.alpha, name, r)
        try:
            slope, _ = loglog_slope(x, v)
        except LevyhomError as exc:
            report.add(f"slope_{name}", "fail", detail=str(exc))
            continue
        status = "pass" if slope >= floor else "fail"
        report.add(f"slope_{name}", status, margin=slope - floor,
                   detail=f"slope={slope:.3f} floor={floor:.3f}")
    return report


def cmd_rate_study(cfg: StudyConfig, out_dir: str, workers: int | None) -> RunReport:
    report = RunReport("rate-study", cfg.digest())
    params, coeff, constants, modes = _prepare(cfg)
    grid = build_xi_grid(
        cfg.dimension,
        points_per_dim=cfg.xi_grid.points_per_dim,
        radial_min_exp=cfg.xi_grid.radial_min_exp,
        radial_max_exp=cfg.xi_grid.radial_max_exp,
        radial_per_decade=cfg.xi_grid.radial_per_decade,
        directions=cfg.xi_grid.directions,
    )
    eps = cfg.epsilons.values()
    truncation_failed = None
    try:
        result = discrepancy_study(coeff, params, modes, grid, eps, workers=workers)
    except TruncationUnstable as exc:
        result = exc.result
        truncation_failed = str(exc)

    os.makedirs(out_dir, exist_ok=True)
    bounds = rate_bound(params.alpha, result.epsilons)
    rows = list(zip(result.epsilons, result.discrepancies, bounds,
                    result.bound_ratios, result.argmax_xi_norm))
    footers = [("fitted_slope", result.fitted_slope if result.fitted_slope is not None
                else "exact"),
               ("r_squared", result.r_squared if result.r_squared is not None else ""),
               ("truncation_stability", result.truncation_stability)]
    if params.alpha == 1.0 and result.log_corrected_slope is not None:
        footers.append(("log_corrected_slope", result.log_corrected_slope))
    path = os.path.join(out_dir, "rate_study.csv")
    write_csv(path, ["epsilon", "discrepancy", "rate_bound", "bound_ratio",
                     "argmax_xi_norm"], rows, digest=cfg.digest(), footer_rows=footers)
    report.artifacts.append(path)

    for msg in result.warnings:
        report.add("alpha_singularity_warning", "skip", detail=msg)

    if truncation_failed:
        report.add("truncation_stability", "fail", detail=truncation_failed)
    else:
        report.add("truncation_stability", "pass",
                   margin=0.05 - result.truncation_stability,
                   detail=f"{result.truncation_stability:.2%} under N doubling")

    if result.exact:
        report.add("slope", "pass", detail="discrepancy identically zero (exact)")
        report.add("bound_ratio", "pass", detail="exact")
        return report

    margin = cfg.tolerances.slope_margin + slope_widening(params.alpha)
    if params.alpha == 1.0:
        slope, floor = result.log_corrected_slope, 1.0 - margin
        detail = f"log-corrected slope={slope:.3f} floor={floor:.3f}"
    else:
        expo = params.alpha if params.alpha < 1.0 else 2.0 - params.alpha
        slope, floor = result.fitted_slope, expo - margin
        detail = f"slope={slope:.3f} floor={floor:.3f}"
    report.add("slope", "pass" if slope >= floor else "fail",
               margin=slope - floor, detail=detail)

    ratios = result.bound_ratios[result.bound_ratios > 0]
    spread = float(ratios.max() / ratios.min()) if ratios.size else 1.0
    report.add("bound_ratio", "pass" if spread <= 10.0 else "fail",
               margin=10.0 - spread, detail=f"max/min={spread:.3f}")
    return report


def cmd_oracle_check(cfg: StudyConfig, out_dir: str, workers: int | None) -> RunReport:
    report = RunReport("oracle-check", cfg.digest())
    if cfg.dimension != 1:
        raise ValueError("oracle-check requires a d=1 config")
    params, coeff, constants, modes = _prepare(cfg)
    tol = cfg.tolerances.oracle_rel

    c0_quad, c0_err = oracle_c0(params)
    rel_c0 = abs(c0_quad - constants.c0) / constants.c0
    report.add("c0_quadrature", "pass" if rel_c0 <= tol else "fail",
               margin=tol - rel_c0,
               detail=f"gamma={constants.c0:.9g} quad={c0_quad:.9g}")

    span = min(2, modes.truncation)
    xis = (0.3, 1.0)
    rows = []
    worst = 0.0
    for m in range(-span, span + 1):
        for n in range(-span, span + 1):
            for xi in xis:
                closed = _closed_entry(coeff, params, constants.c0, modes, m, n, xi)
                orc = oracle_form_element(coeff, params, m, n, xi)
                err = abs(orc.value - closed)
                rel = err / abs(closed) if abs(closed) > 1e-9 else err
                worst = max(worst, rel)
                rows.append([m, n, xi, params.alpha, closed.real, closed.imag,
                             orc.value.real, orc.value.imag, rel])
    os.makedirs(out_dir, exist_ok=True)
    path = os.path.join(out_dir, "oracle_check.csv")
    write_csv(path, ["m", "n", "xi", "alpha", "closed_re", "closed_im",
                     "oracle_re", "oracle_im", "rel_err"], rows,
              digest=cfg.digest())
    report.artifacts.append(path)
    report.add("form_elements", "pass" if worst <= tol else "fail",
               margin=tol - worst, detail=f"worst rel err {worst:.3e}")
    return report


def _closed_entry(coeff, params, c0, modes, m, n, xi):
    fiber = assemble_fiber_matrix(coeff, params, c0, modes, np.array([float(xi)]))
    i = modes.index_of([m])
    j = modes.index_of([n])
    return complex(fiber.entries[i, j])


# ----------------------------------------------------------------------
# Entry point
# ----------------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    """Parser whose usage errors exit 1 (2 is reserved for verification)."""

    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"error: {message}\n")
        raise SystemExit(1)


COMMANDS = {
    "validate": cmd_validate,
    "constants": cmd_constants,
    "fiber": cmd_fiber,
    "thresholds": cmd_thresholds,
    "rate-study": cmd_rate_study,
    "oracle-check": cmd_oracle_check,
}


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="levyhom",
                     description="Spectral verification runs for periodic "
                                 "nonlocal-operator homogenization")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="path to JSON config")
        p.add_argument("--out", default=None, help="output directory")
        p.add_argument("--workers", type=int, default=None,
                       help="parallel map width (default: all cores)")
        p.add_argument("--truncation", type=int, default=None,
                       help="override the configured truncation")
        if name == "fiber":
            p.add_argument("--xi", nargs="+", required=True,
                           help="quasimomenta, comma-separated per component")
    return parser


def main(argv=None) -> int:
    level = os.environ.get("LEVYHOM_LOG", "warning").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)

    try:
        cfg = StudyConfig.load(args.config)
        if args.truncation is not None:
            cfg = replace(cfg, truncation=args.truncation)
            cfg.validate()
    except (OSError, ValueError, KeyError, TypeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1

    out_dir = args.out if args.out is not None else cfg.output
    start = time.perf_counter()
    try:
        if args.command == "fiber":
            report = cmd_fiber(cfg, out_dir, args.workers, xi_values=args.xi)
        else:
            report = COMMANDS[args.command](cfg, out_dir, args.workers)
    except LevyhomError as exc:
        print(f"verification failure: {exc}", file=sys.stderr)
        return 2
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    report.wall_time = time.perf_counter() - start
    print(report.render())
    return 0 if report.passed else 2


if __name__ == "__main__":
    sys.exit(main())
