"""Scenario parsing, the built-in catalog, task runners, and report emission.

A scenario is a JSON object selecting one task (kernel, metric, statistics,
schwarz, gradnorm, suzuki), the domains and kernel backends involved, the
points or sampling recipe, and optional tolerance overrides.  Runners produce
a Report: fixed per-task CSV columns plus a JSON twin carrying the
environment stamp (backend, order, degree, effective basis size, effective
tolerances) — never wall-clock data, so repeated runs are bit-identical.

Complex scalars are serialized as "re+imj" strings with shortest-round-trip
floats; points join coordinates with ';'.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .berezin import normalization_residual, reproducing_check, variance
from .domains import Annulus, DomainSpec, domain_from_json
from .gradient import boundary_constancy_scan, grad_logP_norm, invariance_check, \
    representative_map
from .kernels import closed_form_kernel, numeric_kernel
from .maps import MapError, MapSpec, mobius_automorphism
from .metric import finite_difference_check, metric_at, metric_norm_sq
from .quadrature import build_rule
from .schwarz import DomainContext, analytic_gradient_sup, builtin_map_suite, default_order, \
    equality_classifier, make_context, pullback_metric, suzuki_condition_check, verify_global, \
    verify_pointwise

TASKS = ("kernel", "metric", "statistics", "schwarz", "gradnorm", "suzuki")

DEFAULT_TOLERANCES = {
    "slack_min": -1e-8,
    "cov_identity": 1e-6,
    "deviation": 1e-10,
    "rep_equality_closed": 1e-8,
    "rep_equality_numeric": 1e-4,
    "invariance": 1e-8,
    "fisher_rel": 1e-8,
    "mean_zero": 1e-8,
    "normalization": 1e-8,
    "reproducing": 1e-8,
    "backend_agreement": 1e-6,
    "psd_min_eig": -1e-8,
    "lambda_spread": 1e-6,
    "condition_d": 1e-8,
    "fd_metric": 1e-6,
    "symmetry": 1e-13,
}


class ScenarioError(ValueError):
    """Malformed scenario input (schema violation, missing field, bad value)."""


# ---------------------------------------------------------------------------
# serialization helpers

def fmt_complex(c: complex) -> str:
    c = complex(c)
    sign = "+" if c.imag >= 0 or math.isnan(c.imag) else "-"
    return f"{c.real!r}{sign}{abs(c.imag)!r}j"


def fmt_point(p) -> str:
    return ";".join(fmt_complex(c) for c in np.atleast_1d(np.asarray(p, dtype=complex)))


def parse_point(fragment) -> np.ndarray:
    """Scenario point encoding: a list of [re, im] coordinate pairs."""
    try:
        arr = np.asarray(fragment, dtype=float)
        if arr.ndim == 1:  # a single [re, im] pair for dimension one
            arr = arr[None, :]
        if arr.ndim != 2 or arr.shape[1] != 2:
            raise ValueError
    except (TypeError, ValueError) as exc:
        raise ScenarioError(f"cannot parse point {fragment!r}: expected [[re, im], ...]") from exc
    return arr[:, 0] + 1j * arr[:, 1]


def point_to_json(p) -> list:
    p = np.atleast_1d(np.asarray(p, dtype=complex))
    return [[float(c.real), float(c.imag)] for c in p]


@dataclass
class Report:
    """One scenario's results: fixed-column rows plus pass/fail bookkeeping."""

    scenario_id: str
    task: str
    environment: dict
    columns: list[str]
    rows: list[dict] = field(default_factory=list)
    failures: list[str] = field(default_factory=list)
    summary: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return not self.failures

    def add_row(self, **values):
        row = {c: _native(values.get(c, "")) for c in self.columns}
        self.rows.append(row)

    def fail(self, message: str):
        self.failures.append(message)

    def to_json(self) -> dict:
        return {
            "scenario_id": self.scenario_id,
            "task": self.task,
            "environment": self.environment,
            "columns": list(self.columns),
            "rows": [dict(r) for r in self.rows],
            "summary": self.summary,
            "passed": self.passed,
            "failures": list(self.failures),
        }

    def write(self, outdir: str | Path) -> tuple[Path, Path]:
        outdir = Path(outdir)
        outdir.mkdir(parents=True, exist_ok=True)
        csv_path = outdir / f"{self.scenario_id}.csv"
        json_path = outdir / f"{self.scenario_id}.json"
        with open(csv_path, "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=self.columns)
            writer.writeheader()
            for row in self.rows:
                writer.writerow({k: _csv_cell(v) for k, v in row.items()})
        with open(json_path, "w") as fh:
            json.dump(self.to_json(), fh, indent=1, sort_keys=True)
            fh.write("\n")
        return csv_path, json_path


def _native(v):
    if isinstance(v, np.bool_):
        return bool(v)
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, np.floating):
        return float(v)
    return v


def _csv_cell(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


# ---------------------------------------------------------------------------
# scenario plumbing

def _tolerances(scenario: dict) -> dict:
    tol = dict(DEFAULT_TOLERANCES)
    overrides = scenario.get("tolerances", {})
    if not isinstance(overrides, dict):
        raise ScenarioError("'tolerances' must be an object")
    for key, val in overrides.items():
        if key not in tol:
            raise ScenarioError(f"unknown tolerance {key!r}")
        tol[key] = float(val)
    return tol


def _domains(scenario: dict) -> list[DomainSpec]:
    if "domains" in scenario:
        frags = scenario["domains"]
    elif "domain" in scenario:
        frags = [scenario["domain"]]
    else:
        raise ScenarioError("scenario needs a 'domain' or 'domains' field")
    try:
        return [domain_from_json(f) for f in frags]
    except (KeyError, ValueError, TypeError) as exc:
        raise ScenarioError(f"bad domain fragment: {exc}") from exc


def _context(scenario: dict, domain: DomainSpec, override_order: int | None = None,
             override_degree: int | None = None, kernel_key: str = "kernel") -> DomainContext:
    cfg = scenario.get(kernel_key, {})
    backend = cfg.get("kernel", "auto")
    order = override_order or scenario.get("order") or default_order(domain)
    degree = override_degree if override_degree is not None else cfg.get("degree")
    truncation = cfg.get("truncation")
    try:
        return make_context(domain, backend=backend, order=int(order),
                            degree=degree, truncation=truncation)
    except ValueError as exc:
        raise ScenarioError(str(exc)) from exc


def _environment(scenario: dict, contexts: list[DomainContext], tol: dict) -> dict:
    return {
        "backends": [c.kernel.backend for c in contexts],
        "orders": [c.rule.order for c in contexts],
        "effective_basis": [c.kernel.effective_basis for c in contexts],
        "tolerances": dict(tol),
    }


def _sample(scenario: dict, domain: DomainSpec, default_margin: float) -> tuple[np.ndarray, np.ndarray]:
    """Seeded (points, directions) for one domain, honoring explicit lists."""
    if "points" in scenario:
        pts = np.stack([parse_point(p) for p in scenario["points"]])
        if "directions" in scenario:
            dirs = np.stack([parse_point(d) for d in scenario["directions"]])
        else:
            dirs = np.ones_like(pts)
        if dirs.shape != pts.shape:
            raise ScenarioError("'directions' must match 'points' in shape")
        return pts, dirs
    cfg = scenario.get("random", {})
    count = int(cfg.get("count", 20))
    seed = int(cfg.get("seed", 12345))
    margin = float(cfg.get("margin", default_margin))
    rng = np.random.default_rng(seed)
    pts = domain.sample_interior(rng, count, margin=margin)
    raw = rng.normal(size=(count, domain.dim, 2))
    dirs = raw[..., 0] + 1j * raw[..., 1]
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)  # unit directions: residual scales with |X|
    return pts, dirs


def _sampling_margin(domain: DomainSpec) -> float:
    # keeps angular aliasing of moment quadrature below ~1e-9 at default orders
    if isinstance(domain, Annulus):
        return (1.0 - domain.r) / 4.0
    return 0.4 if domain.dim == 1 else 0.55


def _polar_grid(domain: DomainSpec, n_radii: int, n_angles: int, rmax: float,
                phase: float = 0.0) -> np.ndarray:
    radii = np.linspace(rmax / n_radii, rmax, n_radii)
    angles = 2.0 * np.pi * (np.arange(n_angles) + phase) / n_angles
    pts = (radii[:, None] * np.exp(1j * angles[None, :])).reshape(-1)
    if isinstance(domain, Annulus):
        lo, hi = domain.r + 0.02, rmax
        radii = np.linspace(lo, hi, n_radii)
        pts = (radii[:, None] * np.exp(1j * angles[None, :])).reshape(-1)
    return pts[:, None]


# ---------------------------------------------------------------------------
# task runners

GRADNORM_COLUMNS = ["scenario_id", "check", "domain", "z", "xi", "grad_norm",
                    "rep_norm", "residual", "expected", "deviation", "passed"]
SCHWARZ_COLUMNS = ["scenario_id", "z", "X", "pullback", "base_metric", "c_f", "lhs",
                   "rhs", "slack", "cov_residual", "lambda_estimate", "map",
                   "quad_error", "var_converged", "passed"]
STATISTICS_COLUMNS = ["scenario_id", "domain", "z", "X", "normalization_residual",
                      "mean_zero_residual", "fisher_value", "metric_value",
                      "fisher_rel_error", "reproducing_residual", "quad_error", "passed"]
KERNEL_COLUMNS = ["scenario_id", "domain", "z", "xi", "value", "symmetry_residual",
                  "reference_rel_error", "diag_positive", "passed"]
METRIC_COLUMNS = ["scenario_id", "check", "z", "min_eigenvalue", "residual", "passed"]
SUZUKI_COLUMNS = ["scenario_id", "alpha", "pairs", "max_violation", "holds_on_grid",
                  "implied_C", "analytic_sup", "passed"]


def _run_gradnorm(scenario: dict, tol: dict) -> Report:
    domains = _domains(scenario)
    contexts = [_context(scenario, d) for d in domains]
    report = Report(scenario_id=scenario["id"], task="gradnorm",
                    environment=_environment(scenario, contexts, tol),
                    columns=GRADNORM_COLUMNS)

    for domain, ctx in zip(domains, contexts):
        if "boundary_xi" in scenario:
            xi0 = parse_point(scenario["boundary_xi"])
            grid_cfg = scenario.get("grid", {})
            rng = np.random.default_rng(int(grid_cfg.get("seed", 404)))
            pts = domain.sample_interior(rng, int(grid_cfg.get("count", 50)),
                                         margin=float(grid_cfg.get("margin", 0.05)))
            scan = boundary_constancy_scan(ctx.kernel, xi0, pts)
            for z, val in zip(pts, scan.values):
                dev = abs(val - scan.expected)
                ok = dev <= tol["deviation"]
                report.add_row(scenario_id=scenario["id"], check="boundary_constancy",
                               domain=domain.kind, z=fmt_point(z), xi=fmt_point(xi0),
                               grad_norm=float(val), rep_norm="", residual="",
                               expected=scan.expected, deviation=float(dev), passed=ok)
            if scan.max_deviation > tol["deviation"]:
                report.fail(f"{domain.kind}: boundary constancy deviation "
                            f"{scan.max_deviation:.3e} > {tol['deviation']:.0e}")
            report.summary.setdefault("max_deviation", {})[domain.kind] = scan.max_deviation

        if scenario.get("rep_pairs"):
            cfg = scenario["rep_pairs"]
            rng = np.random.default_rng(int(cfg.get("seed", 505)))
            count = int(cfg.get("count", 30))
            margin = float(cfg.get("margin", 0.3))
            z0s = domain.sample_interior(rng, count, margin=margin)
            xis = domain.sample_interior(rng, count, margin=margin)
            limit = tol["rep_equality_closed"] if ctx.kernel.closed_form \
                else tol["rep_equality_numeric"]
            for z0, xi in zip(z0s, xis):
                g = grad_logP_norm(ctx.kernel, z0, xi)
                rep = representative_map(ctx.kernel, z0, xi).norm_sq
                resid = abs(g - rep)
                ok = resid <= limit
                report.add_row(scenario_id=scenario["id"], check="rep_equality",
                               domain=domain.kind, z=fmt_point(z0), xi=fmt_point(xi),
                               grad_norm=float(g), rep_norm=float(rep),
                               residual=float(resid), expected=0.0,
                               deviation=float(resid), passed=ok)
                if not ok:
                    report.fail(f"{domain.kind}: rep-map residual {resid:.3e} > {limit:.0e}")

        mobius_ok = (domain.kind == "ball" and domain.dim == 1) or domain.kind == "polydisc"
        if scenario.get("mobius_invariance") and mobius_ok:
            cfg = scenario["mobius_invariance"]
            rng = np.random.default_rng(int(cfg.get("seed", 606)))
            count = int(cfg.get("count", 10))
            for _ in range(count):
                raw = rng.uniform(-0.6, 0.6, size=(domain.dim, 2))
                params = raw[:, 0] + 1j * raw[:, 1]
                phi = mobius_automorphism(domain, params)
                z = domain.sample_interior(rng, 1, margin=0.3)[0]
                xi = domain.sample_interior(rng, 1, margin=0.3)[0]
                resid = invariance_check(phi, ctx.kernel, ctx.kernel, z, xi)
                ok = resid <= tol["invariance"]
                report.add_row(scenario_id=scenario["id"], check="mobius_invariance",
                               domain=domain.kind, z=fmt_point(z), xi=fmt_point(xi),
                               grad_norm="", rep_norm="", residual=float(resid),
                               expected=0.0, deviation=float(resid), passed=ok)
                if not ok:
                    report.fail(f"invariance residual {resid:.3e} > {tol['invariance']:.0e}")

        if scenario.get("trend"):
            cfg = scenario["trend"]
            base = parse_point(cfg["base"])
            lo, hi, count = cfg.get("radii", [0.75, 0.98, 20])
            ts = np.linspace(float(lo), float(hi), int(count))
            norms = []
            for t in ts:  # radial grid along the positive real axis
                xi = np.array([t + 0j])
                norms.append(math.sqrt(representative_map(ctx.kernel, base, xi).norm_sq))
            increasing = bool(np.all(np.diff(norms) > 0))
            for t, v in zip(ts, norms):
                report.add_row(scenario_id=scenario["id"], check="rep_radial_trend",
                               domain=domain.kind, z=fmt_point(base),
                               xi=fmt_point([t]), grad_norm="", rep_norm=float(v),
                               residual="", expected="", deviation="", passed=increasing)
            if not increasing:
                report.fail("representative-map norm not strictly increasing along the radial grid")
            report.summary["trend_increasing"] = increasing

        if scenario.get("compare"):
            cfg = scenario["compare"]
            order = int(cfg.get("order", 64))
            degree = int(cfg.get("degree", 15))
            rule = build_rule(domain, order)
            other = numeric_kernel(domain, rule, degree)
            rmin, rmax = cfg.get("grid_radii", [0.55, 0.9])
            count = int(cfg.get("count", 24))
            n_r = max(count // 6, 2)
            radii = np.linspace(float(rmin), float(rmax), n_r)
            angles = 2.0 * np.pi * np.arange(6) / 6.0
            pts = (radii[:, None] * np.exp(1j * angles[None, :])).reshape(-1)[:count, None]
            limit = float(cfg.get("tol", tol["backend_agreement"]))
            for i in range(len(pts)):
                z, xi = pts[i], pts[(i + 1) % len(pts)]
                va = complex(np.asarray(ctx.kernel.kernel(z, xi)))
                vb = complex(np.asarray(other.kernel(z, xi)))
                rel = abs(va - vb) / max(abs(va), 1e-300)
                ok = rel <= limit
                report.add_row(scenario_id=scenario["id"], check="backend_agreement",
                               domain=domain.kind, z=fmt_point(z), xi=fmt_point(xi),
                               grad_norm=abs(va), rep_norm=abs(vb), residual=float(rel),
                               expected=0.0, deviation=float(rel), passed=ok)
                if not ok:
                    report.fail(f"backend disagreement {rel:.3e} > {limit:.0e}")
    return report


def _resolve_maps(scenario: dict) -> list[tuple[MapSpec, DomainSpec, DomainSpec]]:
    if scenario.get("suite") == "builtin":
        return [(m, m.source, m.target) for m in builtin_map_suite()]
    if "map" not in scenario:
        raise ScenarioError("schwarz task needs a 'map' or 'suite': 'builtin'")
    if "source" not in scenario or "target" not in scenario:
        raise ScenarioError("schwarz task needs 'source' and 'target' domains")
    source = domain_from_json(scenario["source"])
    target = domain_from_json(scenario["target"])
    comps = scenario["map"].get("components")
    if not comps:
        raise ScenarioError("'map' needs a 'components' list")
    try:
        f = MapSpec(source=source, target=target, components=tuple(comps),
                    name=scenario["map"].get("name", "scenario-map"))
    except MapError as exc:
        raise ScenarioError(str(exc)) from exc
    return [(f, source, target)]


def _run_schwarz(scenario: dict, tol: dict) -> Report:
    triples = _resolve_maps(scenario)
    ctx_cache: dict = {}

    def ctx_for(domain: DomainSpec) -> DomainContext:
        if domain not in ctx_cache:
            ctx_cache[domain] = _context(scenario, domain)
        return ctx_cache[domain]

    contexts = [ctx_for(d) for _, d, _ in triples]
    report = Report(scenario_id=scenario["id"], task="schwarz",
                    environment=_environment(scenario, contexts, tol),
                    columns=SCHWARZ_COLUMNS)
    classify = bool(scenario.get("classify", False))
    expectations = scenario.get("expect", {})

    for f, source, target in triples:
        ctx1, ctx2 = ctx_for(source), ctx_for(target)
        pts, dirs = _sample(scenario, source, _sampling_margin(source))
        try:
            f.check_rule(ctx1.rule)
            f.check_points(pts)
        except MapError as exc:
            raise ScenarioError(str(exc)) from exc

        sample = list(zip(pts, dirs))
        for z, X in sample:
            rec = verify_pointwise(f, ctx1, ctx2, z, X)
            ok = rec.slack >= tol["slack_min"] and rec.cov_identity_residual <= tol["cov_identity"]
            report.add_row(scenario_id=scenario["id"], z=fmt_point(rec.z), X=fmt_point(rec.X),
                           pullback=rec.pullback, base_metric=rec.base_metric, c_f=rec.c_f,
                           lhs=rec.lhs, rhs=rec.rhs, slack=rec.slack,
                           cov_residual=rec.cov_identity_residual,
                           lambda_estimate=rec.lambda_estimate, map=f.name,
                           quad_error=rec.quad_error, var_converged=rec.var_converged,
                           passed=ok)
            if rec.slack < tol["slack_min"]:
                report.fail(f"{f.name}: slack {rec.slack:.3e} below {tol['slack_min']:.0e} "
                            f"at z={fmt_point(rec.z)}")
            if rec.cov_identity_residual > tol["cov_identity"]:
                report.fail(f"{f.name}: covariance identity residual "
                            f"{rec.cov_identity_residual:.3e} at z={fmt_point(rec.z)}")

        if classify:
            er = equality_classifier(f, ctx1, ctx2, sample, spread_tol=tol["lambda_spread"])
            report.summary.setdefault("classification", {})[f.name] = {
                "is_lambda_isometry": er.is_lambda_isometry,
                "lambda": er.lam,
                "ratio_spread": er.ratio_spread,
                "condition_d_residual": er.condition_d_residual,
                "constant_map": er.constant_map,
                "injective_on_sample": er.injective_on_sample,
            }
            want = expectations.get(f.name)
            if want is not None:
                if bool(want.get("isometry")) != er.is_lambda_isometry:
                    report.fail(f"{f.name}: classified isometry={er.is_lambda_isometry}, "
                                f"expected {want.get('isometry')}")
                if "lambda" in want and er.is_lambda_isometry:
                    if abs(er.lam - float(want["lambda"])) > tol["lambda_spread"]:
                        report.fail(f"{f.name}: lambda {er.lam} != {want['lambda']}")
                    if er.condition_d_residual > tol["condition_d"]:
                        report.fail(f"{f.name}: kernel-ratio residual "
                                    f"{er.condition_d_residual:.3e}")

        C_field = scenario.get("C")
        if C_field is not None:
            C = analytic_gradient_sup(target) if C_field == "analytic" else float(C_field)
            if C is None:
                raise ScenarioError(f"no analytic constant for target {target.kind}")
            comp = verify_global(f, ctx1, ctx2, C, pts, eig_tol=tol["psd_min_eig"])
            report.summary.setdefault("global", {})[f.name] = {
                "C": comp.constant, "min_eigenvalue": comp.min_eigenvalue,
                "passed": comp.passed,
            }
            if not comp.passed:
                report.fail(f"{f.name}: C*g1 - f*g2 not PSD "
                            f"(min eigenvalue {comp.min_eigenvalue:.3e}, C={C})")
    return report


def _run_statistics(scenario: dict, tol: dict) -> Report:
    domains = _domains(scenario)
    contexts = [_context(scenario, d) for d in domains]
    report = Report(scenario_id=scenario["id"], task="statistics",
                    environment=_environment(scenario, contexts, tol),
                    columns=STATISTICS_COLUMNS)
    for domain, ctx in zip(domains, contexts):
        pts, dirs = _sample(scenario, domain, _sampling_margin(domain))

        def test_fn(p):  # fixed holomorphic probe, inside every numeric span of degree >= 2
            return np.prod(p, axis=-1) ** 2

        for z, X in zip(pts, dirs):
            nres = normalization_residual(ctx.density, ctx.rule, z)
            var = variance(ctx.density, ctx.rule, z,
                           lambda q: ctx.density._dlog_dir_unchecked(z, X, q))
            mean_abs = abs(var.mean)
            fisher = float(np.real(var.value))
            gval = metric_norm_sq(metric_at(ctx.kernel, z), X)
            rel = abs(fisher - gval) / abs(gval)
            rres = reproducing_check(ctx.density, ctx.rule, z, test_fn)
            ok = (nres <= tol["normalization"] and mean_abs <= tol["mean_zero"]
                  and rel <= tol["fisher_rel"] and rres <= tol["reproducing"])
            report.add_row(scenario_id=scenario["id"], domain=domain.kind,
                           z=fmt_point(z), X=fmt_point(X),
                           normalization_residual=float(nres),
                           mean_zero_residual=float(mean_abs),
                           fisher_value=fisher, metric_value=float(gval),
                           fisher_rel_error=float(rel),
                           reproducing_residual=float(rres),
                           quad_error=float(var.quad_error_estimate), passed=ok)
            if not ok:
                report.fail(f"{domain.kind} at z={fmt_point(z)}: "
                            f"norm={nres:.2e} mean={mean_abs:.2e} "
                            f"fisher_rel={rel:.2e} repr={rres:.2e}")
    return report


def _run_kernel(scenario: dict, tol: dict) -> Report:
    domains = _domains(scenario)
    contexts = [_context(scenario, d) for d in domains]
    report = Report(scenario_id=scenario["id"], task="kernel",
                    environment=_environment(scenario, contexts, tol),
                    columns=KERNEL_COLUMNS)
    for domain, ctx in zip(domains, contexts):
        pts, _ = _sample(scenario, domain, 0.2)
        reference = None
        if scenario.get("reference") == "closed":
            reference = closed_form_kernel(domain)
        for i in range(len(pts)):
            z, xi = pts[i], pts[(i + 1) % len(pts)]
            val = complex(np.asarray(ctx.kernel.kernel(z, xi)))
            sym = abs(val - np.conjugate(complex(np.asarray(ctx.kernel.kernel(xi, z)))))
            diag_ok = float(ctx.kernel.diag(z)) > 0
            rel = ""
            ok = sym <= tol["symmetry"] and diag_ok
            if reference is not None:
                ref = complex(np.asarray(reference.kernel(z, xi)))
                rel = abs(val - ref) / max(abs(ref), 1e-300)
                ok = ok and rel <= tol["backend_agreement"]
            report.add_row(scenario_id=scenario["id"], domain=domain.kind,
                           z=fmt_point(z), xi=fmt_point(xi), value=fmt_complex(val),
                           symmetry_residual=float(sym),
                           reference_rel_error=rel if rel == "" else float(rel),
                           diag_positive=diag_ok, passed=ok)
            if not ok:
                report.fail(f"{domain.kind}: kernel check failed at z={fmt_point(z)}")
    return report


def _run_metric(scenario: dict, tol: dict) -> Report:
    domains = _domains(scenario)
    contexts = [_context(scenario, d) for d in domains]
    report = Report(scenario_id=scenario["id"], task="metric",
                    environment=_environment(scenario, contexts, tol),
                    columns=METRIC_COLUMNS)
    h = float(scenario.get("fd_step", 1e-4))
    for domain, ctx in zip(domains, contexts):
        pts, _ = _sample(scenario, domain, max(0.2, 3 * h))
        for z in pts:
            G = metric_at(ctx.kernel, z)
            resid = finite_difference_check(ctx.kernel, z, h)
            ok = G.eigenvalues[0] > 0 and resid <= tol["fd_metric"]
            report.add_row(scenario_id=scenario["id"], check="fd_hessian",
                           z=fmt_point(z), min_eigenvalue=float(G.eigenvalues[0]),
                           residual=float(resid), passed=ok)
            if not ok:
                report.fail(f"fd residual {resid:.3e} at z={fmt_point(z)}")
        if scenario.get("mobius_invariance") and domain.dim == 1:
            cfg = scenario["mobius_invariance"]
            rng = np.random.default_rng(int(cfg.get("seed", 707)))
            for _ in range(int(cfg.get("count", 10))):
                a = rng.uniform(-0.6, 0.6) + 1j * rng.uniform(-0.6, 0.6)
                phi = mobius_automorphism(domain, [a])
                z = domain.sample_interior(rng, 1, margin=0.25)[0]
                X = np.array([1.0 + 0.5j])
                direct = metric_norm_sq(metric_at(ctx.kernel, z), X)
                pulled = pullback_metric(phi, ctx.kernel, z, X)
                resid = abs(direct - pulled)
                ok = resid <= tol["invariance"] * max(direct, 1.0)
                report.add_row(scenario_id=scenario["id"], check="mobius_pullback",
                               z=fmt_point(z), min_eigenvalue="", residual=float(resid),
                               passed=ok)
                if not ok:
                    report.fail(f"metric pullback invariance residual {resid:.3e}")
    return report


def _run_suzuki(scenario: dict, tol: dict) -> Report:
    domains = _domains(scenario)
    ctx = _context(scenario, domains[0])
    report = Report(scenario_id=scenario["id"], task="suzuki",
                    environment=_environment(scenario, [ctx], tol),
                    columns=SUZUKI_COLUMNS)
    alpha = float(scenario.get("alpha", 0.5))
    grid = scenario.get("grid", {})
    n_r = int(grid.get("radii", 10))
    n_a = int(grid.get("angles", 5))
    rmax = float(grid.get("rmax", 0.95))
    ws = _polar_grid(domains[0], n_r, n_a, rmax, phase=0.0)
    zetas = _polar_grid(domains[0], n_r, n_a, rmax, phase=0.37)
    rep = suzuki_condition_check(ctx, alpha, ws, zetas)
    sup = analytic_gradient_sup(domains[0])
    ok = rep.holds_on_grid and (sup is None or rep.implied_C >= sup)
    report.add_row(scenario_id=scenario["id"], alpha=rep.alpha, pairs=rep.pairs_evaluated,
                   max_violation=rep.max_violation, holds_on_grid=rep.holds_on_grid,
                   implied_C=rep.implied_C, analytic_sup="" if sup is None else float(sup),
                   passed=ok)
    report.summary["suzuki"] = {"holds_on_grid": rep.holds_on_grid,
                                "implied_C": rep.implied_C,
                                "max_violation": rep.max_violation}
    if not rep.holds_on_grid:
        report.fail(f"condition violated on grid by {rep.max_violation:.3e}")
    if sup is not None and rep.implied_C < sup:
        report.fail(f"implied C {rep.implied_C} below analytic sup {sup}")
    return report


_RUNNERS = {
    "gradnorm": _run_gradnorm,
    "schwarz": _run_schwarz,
    "statistics": _run_statistics,
    "kernel": _run_kernel,
    "metric": _run_metric,
    "suzuki": _run_suzuki,
}


def validate_scenario(scenario: dict) -> None:
    if not isinstance(scenario, dict):
        raise ScenarioError("scenario must be a JSON object")
    if not scenario.get("id") or not isinstance(scenario["id"], str):
        raise ScenarioError("scenario needs a string 'id'")
    task = scenario.get("task")
    if task not in TASKS:
        raise ScenarioError(f"'task' must be one of {TASKS}, got {task!r}")


def run_scenario(scenario: dict, order: int | None = None,
                 degree: int | None = None) -> Report:
    """Validate and execute one scenario, returning its Report."""
    validate_scenario(scenario)
    scenario = dict(scenario)
    if order is not None:
        scenario["order"] = int(order)
    if degree is not None:
        scenario.setdefault("kernel", {})
        scenario["kernel"] = dict(scenario["kernel"], degree=int(degree))
    tol = _tolerances(scenario)
    return _RUNNERS[scenario["task"]](scenario, tol)


# ---------------------------------------------------------------------------
# built-in catalog

BUILTIN_SCENARIOS: dict[str, dict] = {
    "ball-gradnorm": {
        "id": "ball-gradnorm",
        "task": "gradnorm",
        "domain": {"kind": "ball", "dim": 2},
        "kernel": {"kernel": "closed"},
        "boundary_xi": [[1.0, 0.0], [0.0, 0.0]],
        "grid": {"count": 50, "seed": 101, "margin": 0.05},
    },
    "polydisc-gradnorm": {
        "id": "polydisc-gradnorm",
        "task": "gradnorm",
        "domain": {"kind": "polydisc", "dim": 2},
        "kernel": {"kernel": "closed"},
        "boundary_xi": [[1.0, 0.0], [0.0, 1.0]],
        "grid": {"count": 50, "seed": 102, "margin": 0.05},
    },
    "schwarz-suite": {
        "id": "schwarz-suite",
        "task": "schwarz",
        "suite": "builtin",
        "random": {"count": 20, "seed": 202, "margin": 0.4},
        "C": "analytic",
    },
    "equality-suite": {
        "id": "equality-suite",
        "task": "schwarz",
        "suite": "builtin",
        "random": {"count": 12, "seed": 203, "margin": 0.4},
        "classify": True,
        "expect": {
            "first-coordinate-embedding": {"isometry": True, "lambda": 1.0},
            "constant": {"isometry": True, "lambda": 0.0},
            "square": {"isometry": False},
            "identity": {"isometry": True, "lambda": 1.0},
            "mobius(0.3-0.2j)": {"isometry": True, "lambda": 1.0},
        },
    },
    "fisher-identity": {
        "id": "fisher-identity",
        "task": "statistics",
        "domains": [{"kind": "ball", "dim": 1}, {"kind": "polydisc", "dim": 2}],
        "kernel": {"kernel": "closed"},
        "random": {"count": 20, "seed": 303},
    },
    "rep-map-suite": {
        "id": "rep-map-suite",
        "task": "gradnorm",
        "domains": [{"kind": "ball", "dim": 1}, {"kind": "ball", "dim": 2},
                    {"kind": "polydisc", "dim": 2}],
        "kernel": {"kernel": "closed"},
        "rep_pairs": {"count": 30, "seed": 505, "margin": 0.3},
        "mobius_invariance": {"count": 10, "seed": 606},
    },
    "annulus-trend": {
        "id": "annulus-trend",
        "task": "gradnorm",
        "domain": {"kind": "annulus", "dim": 1, "r": 0.5},
        "kernel": {"kernel": "laurent", "truncation": 15},
        "order": 40,
        "trend": {"base": [[0.7, 0.0]], "radii": [0.75, 0.98, 20]},
        "compare": {"kernel": "numeric", "degree": 15, "order": 64,
                    "grid_radii": [0.55, 0.9], "count": 24, "tol": 1e-6},
    },
    "suzuki-disc": {
        "id": "suzuki-disc",
        "task": "suzuki",
        "domain": {"kind": "ball", "dim": 1},
        "kernel": {"kernel": "closed"},
        "alpha": 0.5,
        "grid": {"radii": 10, "angles": 5, "rmax": 0.95},
    },
    "disc-metric-fd": {
        "id": "disc-metric-fd",
        "task": "metric",
        "domain": {"kind": "ball", "dim": 1},
        "kernel": {"kernel": "closed"},
        "random": {"count": 20, "seed": 801, "margin": 0.2},
        "mobius_invariance": {"count": 10, "seed": 707},
    },
}


def list_builtin() -> list[str]:
    """Ids of the built-in scenarios, fixed order."""
    return list(BUILTIN_SCENARIOS.keys())


def builtin_scenario(scenario_id: str) -> dict:
    try:
        return json.loads(json.dumps(BUILTIN_SCENARIOS[scenario_id]))
    except KeyError:
        raise ScenarioError(f"unknown built-in scenario {scenario_id!r}") from None
