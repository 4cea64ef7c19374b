"""Batch experiment runner.

One named pipeline per invocation::

    hodgelab <pipeline> --config cfg.json [--out DIR] [--format json|csv] [--seed N]

Pipelines: spectrum, betti, hodge-verify, duality, kunneth, maps-verify,
decay-report, convergence.  Exit code 0 when every verdict passes, 1 on a
verdict failure, 2 on configuration or solver errors.  Reports are
deterministic for a fixed config and seed: stable key order, floats at 12
significant digits, and no timing data inside the serialized files.

The environment variable HODGELAB_THREADS caps BLAS/OpenMP thread counts.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import os
import sys
import time
from dataclasses import dataclass, field

import numpy as np

from . import maps as maps_mod
from . import schwartz, topology
from .model import (
    CIRCLE,
    LINE,
    FactorSpec,
    InvalidSpecError,
    ManifoldSpec,
    circle,
    line,
    manifold,
)
from .operators import (
    CochainComplex,
    conjugate_form,
    default_mode,
    laplacian_h_direct,
    laplacian_mu,
    norm,
)
from .spectral import (
    EigenSolveConfig,
    NoSpectralGapError,
    SolverError,
    kernel_dimension,
    solve_low_spectrum,
)
from .topology import ComplexTooLargeError, poincare_polynomial

PIPELINES = (
    "spectrum",
    "betti",
    "hodge-verify",
    "duality",
    "kunneth",
    "maps-verify",
    "decay-report",
    "convergence",
)

EXIT_PASS = 0
EXIT_VERDICT_FAIL = 1
EXIT_CONFIG_ERROR = 2


class ConfigError(ValueError):
    """The experiment config file is missing, malformed, or inconsistent."""


# -- configuration -----------------------------------------------------------


@dataclass
class ExperimentConfig:
    """Parsed experiment description (see docs/config-schema.json)."""

    name: str
    manifold: ManifoldSpec
    degrees: tuple[int, ...]
    mode: str | None
    solver: EigenSolveConfig
    truncation_radius: float      # R for the compression/extension maps
    maps_tolerance: float
    rank_subdivisions: int        # grid used for exact cellular ranks
    duality_rtol: float
    kunneth_rtol: float
    convergence_subdivisions: tuple[int, ...]
    convergence_reference: tuple[float, ...]
    convergence_order_window: tuple[float, float]
    envelope_slack: float
    raw: dict = field(repr=False, default_factory=dict)


def _parse_factor(d: dict) -> FactorSpec:
    try:
        kind = d["kind"]
        n = int(d["N"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"bad factor entry {d!r}: {exc}") from exc
    if kind == LINE:
        return line(float(d.get("c", 0.0)), float(d.get("L", 8.0)), n)
    if kind == CIRCLE:
        return circle(float(d.get("circumference", 2.0 * np.pi)), n)
    raise ConfigError(f"unknown factor kind {kind!r}")


def load_config(path: str, seed_override: int | None = None) -> ExperimentConfig:
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path!r}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path!r} is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict) or "manifold" not in raw:
        raise ConfigError("config must be an object with a 'manifold' list")
    try:
        m = manifold(*[_parse_factor(f) for f in raw["manifold"]])
    except InvalidSpecError as exc:
        raise ConfigError(str(exc)) from exc
    degrees = tuple(int(p) for p in raw.get("degrees", range(m.n + 1)))
    if any(not 0 <= p <= m.n for p in degrees):
        raise ConfigError(f"degrees {degrees} out of range 0..{m.n}")
    solver_raw = dict(raw.get("solver", {}))
    if seed_override is not None:
        solver_raw["seed"] = seed_override
    try:
        solver = EigenSolveConfig(**solver_raw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad solver config: {exc}") from exc
    maps_raw = raw.get("maps", {})
    conv = raw.get("convergence", {})
    window = conv.get("order_window", [1.7, 2.3])
    return ExperimentConfig(
        name=str(raw.get("name", _model_label(m))),
        manifold=m,
        degrees=degrees,
        mode=raw.get("mode"),
        solver=solver,
        truncation_radius=float(maps_raw.get("R", 4.0)),
        maps_tolerance=float(maps_raw.get("tolerance", 1e-6)),
        rank_subdivisions=int(raw.get("rank_subdivisions", 8)),
        duality_rtol=float(
            raw.get("duality", {}).get("eigenvalue_rtol", 2.0 * solver.tol)
        ),
        kunneth_rtol=float(raw.get("kunneth", {}).get("eigenvalue_rtol", 0.01)),
        convergence_subdivisions=tuple(
            int(n) for n in conv.get("subdivisions", [128, 256, 512])
        ),
        convergence_reference=tuple(
            float(x) for x in conv.get("reference", [2.0, 4.0, 6.0, 8.0])
        ),
        convergence_order_window=(float(window[0]), float(window[1])),
        envelope_slack=float(raw.get("envelope_slack", 0.5)),
        raw=raw,
    )


def _model_label(m: ManifoldSpec) -> str:
    return "x".join("S1" if f.kind == CIRCLE else "R" for f in m.factors)


# -- report plumbing ---------------------------------------------------------


@dataclass
class ReportBundle:
    """Everything one pipeline produced, plus the verdict list.

    wall_clock_s is informational only and is never serialized, keeping
    report files byte-identical across repeated runs.
    """

    pipeline: str
    model: str
    sections: dict
    verdicts: list
    tolerances: dict
    wall_clock_s: float = 0.0

    @property
    def passed(self) -> bool:
        return all(v["passed"] for v in self.verdicts)


def _verdict(name, value, expected, tolerance, route, passed, degree=None):
    out = {
        "name": name,
        "value": value,
        "expected": expected,
        "tolerance": tolerance,
        "route": route,
        "passed": bool(passed),
    }
    if degree is not None:
        out["degree"] = degree
    return out


def _clean(obj):
    """Recursively convert to plain JSON types with 12-significant-digit floats."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_clean(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if not np.isfinite(x):
            return repr(x)
        return float(f"{x:.12g}")
    return obj


def write_report(bundle: ReportBundle, out_dir: str, fmt: str) -> list[str]:
    """Serialize a bundle; returns the file paths written."""
    os.makedirs(out_dir, exist_ok=True)
    written = []
    doc = {
        "pipeline": bundle.pipeline,
        "model": bundle.model,
        "sections": _clean(bundle.sections),
        "tolerances": _clean(bundle.tolerances),
        "verdicts": _clean(bundle.verdicts),
        "passed": bundle.passed,
    }
    if fmt == "json":
        path = os.path.join(out_dir, f"{bundle.pipeline}.json")
        with open(path, "w") as fh:
            json.dump(doc, fh, indent=2, sort_keys=False)
            fh.write("\n")
        written.append(path)
    elif fmt == "csv":
        if "spectra" in bundle.sections:
            path = os.path.join(out_dir, "spectrum.csv")
            with open(path, "w", newline="") as fh:
                w = csv.writer(fh)
                w.writerow(["model", "degree", "index", "eigenvalue", "residual"])
                for entry in bundle.sections["spectra"]:
                    for i, (lam, res) in enumerate(
                        zip(entry["eigenvalues"], entry["residuals"])
                    ):
                        w.writerow(
                            [bundle.model, entry["degree"], i, f"{lam:.12g}", f"{res:.12g}"]
                        )
            written.append(path)
        path = os.path.join(out_dir, f"{bundle.pipeline}-verdicts.csv")
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(
                ["model", "degree", "quantity", "value", "expected", "tolerance", "verdict"]
            )
            for v in bundle.verdicts:
                w.writerow(
                    [
                        bundle.model,
                        v.get("degree", ""),
                        v["name"],
                        _csv_num(v["value"]),
                        _csv_num(v["expected"]),
                        _csv_num(v["tolerance"]),
                        "PASS" if v["passed"] else "FAIL",
                    ]
                )
        written.append(path)
    else:
        raise ConfigError(f"unknown report format {fmt!r}")
    return written


def _csv_num(x):
    if isinstance(x, float):
        return f"{x:.12g}"
    if isinstance(x, (list, tuple)):
        return " ".join(str(_csv_num(v)) for v in x)
    return x


# -- shared pipeline pieces --------------------------------------------------


def _complex(cfg: ExperimentConfig, m: ManifoldSpec | None = None) -> CochainComplex:
    return CochainComplex(m or cfg.manifold, mode=cfg.mode)


def _solve_degrees(cx, degrees, scfg):
    """Spectrum + certified kernel count per degree."""
    out = []
    for p in degrees:
        op = laplacian_mu(cx, p)
        spec = solve_low_spectrum(op, scfg)
        count, cert = kernel_dimension(spec, scfg)
        out.append((p, op, spec, count, cert))
    return out


def _expected_flavor(m: ManifoldSpec) -> str:
    return "compact" if default_mode(m) == "relative" else "ordinary"


def _spectrum_entry(p, spec, count, cert):
    return {
        "degree": p,
        "eigenvalues": spec.eigenvalues,
        "residuals": spec.residuals,
        "kernel_count": count,
        "gap_ratio": cert.gap_ratio,
        "tau_abs": cert.tau_abs,
    }


# -- pipelines ---------------------------------------------------------------


def run_spectrum(cfg: ExperimentConfig) -> ReportBundle:
    cx = _complex(cfg)
    entries, verdicts = [], []
    for p, op, spec, count, cert in _solve_degrees(cx, cfg.degrees, cfg.solver):
        entries.append(_spectrum_entry(p, spec, count, cert))
        worst = float(spec.residuals.max())
        tol = 1e-6 * max(spec.scale, 1.0)
        verdicts.append(
            _verdict("residual_max", worst, 0.0, tol, "solver residual check",
                     worst <= tol, degree=p)
        )
    return ReportBundle(
        "spectrum", cfg.name, {"spectra": entries}, verdicts,
        {"residual": "1e-6 * spectral scale"},
    )


def run_betti(cfg: ExperimentConfig) -> ReportBundle:
    m = cfg.manifold
    coarse = manifold(
        *[dataclasses.replace(f, subdivisions=cfg.rank_subdivisions) for f in m.factors]
    )
    cx = _complex(cfg, coarse)
    flavor = topology.complex_flavor(cx)
    cellular = topology.betti_from_complex(cx)
    closed = poincare_polynomial(m, flavor)
    verdicts = [
        _verdict(
            "betti_numbers",
            list(cellular.coeffs),
            list(closed.coeffs),
            0,
            "exact cellular ranks vs closed-form polynomial",
            cellular.coeffs == closed.coeffs,
        )
    ]
    sections = {
        "flavor": flavor,
        "cellular": list(cellular.coeffs),
        "closed_form": list(closed.coeffs),
        "table": {
            "ordinary": list(poincare_polynomial(m, "ordinary").coeffs),
            "compact": list(poincare_polynomial(m, "compact").coeffs),
        },
    }
    return ReportBundle("betti", cfg.name, sections, verdicts, {"agreement": "exact"})


def run_hodge_verify(cfg: ExperimentConfig) -> ReportBundle:
    m = cfg.manifold
    cx = _complex(cfg)
    flavor = _expected_flavor(m)
    expected = poincare_polynomial(m, flavor)
    entries, verdicts = [], []
    for p, op, spec, count, cert in _solve_degrees(cx, cfg.degrees, cfg.solver):
        entries.append(_spectrum_entry(p, spec, count, cert))
        verdicts.append(
            _verdict(
                "kernel_count",
                count,
                expected.betti(p),
                0,
                f"{flavor} Betti number (closed form)",
                count == expected.betti(p),
                degree=p,
            )
        )
    sections = {"flavor": flavor, "expected": list(expected.coeffs), "spectra": entries}
    return ReportBundle(
        "hodge-verify", cfg.name, sections, verdicts,
        {"kernel": "exact count under certified gap"},
    )


def run_duality(cfg: ExperimentConfig) -> ReportBundle:
    """Low spectra of the decay-weight Laplacian in degree p against the
    growth-weight Laplacian in degree n-p."""
    m = cfg.manifold
    cs = [abs(f.c) for f in m.factors]
    if all(c == 0 for c in cs):
        raise ConfigError("duality needs at least one weighted line factor")
    minus = manifold(
        *[dataclasses.replace(f, c=-abs(f.c)) if f.kind == LINE else f for f in m.factors]
    )
    plus = manifold(
        *[dataclasses.replace(f, c=abs(f.c)) if f.kind == LINE else f for f in m.factors]
    )
    cx_minus = CochainComplex(minus)
    cx_plus = CochainComplex(plus)
    n = m.n
    entries, verdicts = [], []
    compare = min(5, cfg.solver.k - 1)
    for p in cfg.degrees:
        sm = solve_low_spectrum(laplacian_mu(cx_minus, p), cfg.solver)
        sp_ = solve_low_spectrum(laplacian_mu(cx_plus, n - p), cfg.solver)
        cm, _ = kernel_dimension(sm, cfg.solver)
        cp, _ = kernel_dimension(sp_, cfg.solver)
        a = np.sort(sm.eigenvalues)[:compare]
        b = np.sort(sp_.eigenvalues)[:compare]
        scale = np.maximum(np.maximum(np.abs(a), np.abs(b)), 1.0)
        dev = float(np.max(np.abs(a - b) / scale))
        entries.append(
            {"degree": p, "minus": a, "plus_dual": b, "relative_deviation": dev,
             "kernel_minus": cm, "kernel_plus_dual": cp}
        )
        verdicts.append(
            _verdict("kernel_count_duality", cm, cp, 0,
                     "decay-weight degree p vs growth-weight degree n-p",
                     cm == cp, degree=p)
        )
        verdicts.append(
            _verdict("spectrum_duality", dev, 0.0, cfg.duality_rtol,
                     "sorted low eigenvalues across the two pictures",
                     dev <= cfg.duality_rtol, degree=p)
        )
    return ReportBundle(
        "duality", cfg.name, {"pairs": entries}, verdicts,
        {"eigenvalue_rtol": cfg.duality_rtol},
    )


def run_kunneth(cfg: ExperimentConfig) -> ReportBundle:
    m = cfg.manifold
    if m.n < 2:
        raise ConfigError("kunneth needs a product of at least two factors")
    cx = _complex(cfg)
    ma = manifold(m.factors[0])
    mb = manifold(*m.factors[1:])
    solver = cfg.solver
    wide = dataclasses.replace(solver, k=max(solver.k, 8))

    def factor_data(msub):
        cxs = CochainComplex(msub, mode=None if default_mode(m) is None else None)
        counts, spectra = [], []
        for p in range(msub.n + 1):
            spec = solve_low_spectrum(laplacian_mu(cxs, p), wide)
            cnt, _ = kernel_dimension(spec, wide)
            counts.append(cnt)
            spectra.append(spec.eigenvalues)
        return counts, spectra

    counts_a, spec_a = factor_data(ma)
    counts_b, spec_b = factor_data(mb)
    entries, verdicts = [], []
    for p, op, spec, count, cert in _solve_degrees(cx, cfg.degrees, wide):
        expected = sum(
            counts_a[q] * counts_b[p - q]
            for q in range(max(0, p - mb.n), min(ma.n, p) + 1)
        )
        verdicts.append(
            _verdict("kernel_count_kunneth", count, expected, 0,
                     "convolution of certified factor kernel counts",
                     count == expected, degree=p)
        )
        sums = sorted(
            float(x + y)
            for q in range(max(0, p - mb.n), min(ma.n, p) + 1)
            for x in spec_a[q]
            for y in spec_b[p - q]
        )
        tau = 1e-8 * spec.scale
        nonzero = [v for v in spec.eigenvalues if v >= tau][:5]
        matched = []
        for v in nonzero:
            best = min(abs(v - s) / max(v, 1e-300) for s in sums)
            matched.append(best)
        dev = max(matched) if matched else 0.0
        entries.append(
            {"degree": p, "product_nonzero": nonzero, "sum_match_rdev": matched}
        )
        verdicts.append(
            _verdict("eigenvalue_sums", dev, 0.0, cfg.kunneth_rtol,
                     "product eigenvalues vs sums of factor eigenvalues",
                     dev <= cfg.kunneth_rtol, degree=p)
        )
    sections = {
        "factor_kernel_counts": {"first": counts_a, "rest": counts_b},
        "matches": entries,
    }
    return ReportBundle(
        "kunneth", cfg.name, sections, verdicts, {"eigenvalue_rtol": cfg.kunneth_rtol}
    )


def run_maps_verify(cfg: ExperimentConfig) -> ReportBundle:
    m = cfg.manifold
    if default_mode(m) != "relative":
        raise ConfigError("maps-verify needs growth weights (c > 0) on every line")
    cx = _complex(cfg)
    expected = poincare_polynomial(m, "compact")
    entries, verdicts = [], []
    for p, op, spec, count, cert in _solve_degrees(cx, cfg.degrees, cfg.solver):
        if count == 0:
            continue
        kernels = spec.kernel_forms(count)
        rep = maps_mod.surjectivity_certificate(
            kernels, cfg.truncation_radius, tolerance=cfg.maps_tolerance
        )
        entries.append(
            {
                "degree": p,
                "kernel_count": count,
                "pairing_margin": rep.pairing.margin,
                "epsilon": rep.pairing.epsilon,
                "projection_errors": rep.projection_errors,
                "tail_ratios": rep.tail_ratios,
                "derivative_sup": rep.derivative_sup,
                "j_rank": rep.j_rank,
            }
        )
        verdicts.append(
            _verdict("pairing_margin", rep.pairing.margin, 0.0, rep.pairing.epsilon,
                     "Gram deviation of extended-vs-original kernel pairing",
                     rep.pairing.margin < rep.pairing.epsilon, degree=p)
        )
        perr = max(rep.projection_errors) if rep.projection_errors else 0.0
        verdicts.append(
            _verdict("projection_roundtrip", perr, 0.0, cfg.maps_tolerance,
                     "norm of projected preimage minus original kernel form",
                     perr < cfg.maps_tolerance, degree=p)
        )
        tmax = max(rep.tail_ratios) if rep.tail_ratios else 0.0
        verdicts.append(
            _verdict("tail_ratio", tmax, 0.0, rep.tail_bound,
                     "compressed-tail energy over plain-tail energy",
                     tmax <= rep.tail_bound, degree=p)
        )
        verdicts.append(
            _verdict("extension_rank", rep.j_rank, count, 0,
                     "rank of circle-period pairings of extended kernels",
                     rep.j_rank == count, degree=p)
        )
    return ReportBundle(
        "maps-verify", cfg.name, {"certificates": entries}, verdicts,
        {"projection": cfg.maps_tolerance, "tail_bound": 36.0},
    )


def run_decay_report(cfg: ExperimentConfig) -> ReportBundle:
    m = cfg.manifold
    if not m.line_axes():
        raise ConfigError("decay-report needs at least one line factor")
    cx = _complex(cfg)
    axis = m.line_axes()[0]
    c = abs(m.factors[axis].c)
    entries, verdicts = [], []
    for p in cfg.degrees:
        op_mu = laplacian_mu(cx, p)
        op_h = laplacian_h_direct(cx, p)
        spec = solve_low_spectrum(op_mu, cfg.solver)
        count, _ = kernel_dimension(spec, cfg.solver)
        for i in range(spec.k):
            form_h = conjugate_form(spec.form(i), sign=1)
            nrm = norm(form_h, "dx")
            if nrm == 0:
                continue
            form_h.values /= nrm
            table = schwartz.seminorm_table(form_h, max_k=3, max_alpha=2, axis=axis)
            finite = all(np.isfinite(v) for v in table.entries.values())
            g = schwartz.garding_ratio(form_h, op_h, axis=axis)
            lhs, rhs, ladder = schwartz.seminorm_ladder_check(form_h, op_h, 2, axis=axis)
            entry = {
                "degree": p,
                "index": i,
                "eigenvalue": float(spec.eigenvalues[i]),
                "seminorm_max": max(table.entries.values()),
                "garding_ratio": g,
                "ladder_ratio": ladder,
            }
            verdicts.append(
                _verdict("seminorms_finite", float(max(table.entries.values())),
                         "finite", np.inf, "monomial-weighted difference seminorms",
                         finite, degree=p)
            )
            if i < count and c > 0:
                excess = schwartz.envelope_excess(form_h, c, axis=axis)
                entry["envelope_excess"] = excess
                verdicts.append(
                    _verdict("decay_envelope", excess, 0.0, cfg.envelope_slack,
                             "log|w| + (c/2)x^2 against a log-linear bound on [2,6]",
                             excess <= cfg.envelope_slack, degree=p)
                )
            entries.append(entry)
    return ReportBundle(
        "decay-report", cfg.name, {"forms": entries}, verdicts,
        {"envelope_slack": cfg.envelope_slack},
    )


def run_convergence(cfg: ExperimentConfig) -> ReportBundle:
    m = cfg.manifold
    if m.n != 1 or m.factors[0].kind != LINE:
        raise ConfigError("convergence runs on a single weighted line factor")
    ref = np.asarray(cfg.convergence_reference)
    kneed = dataclasses.replace(cfg.solver, k=max(cfg.solver.k, len(ref) + 2))
    rows = []
    for n in cfg.convergence_subdivisions:
        msub = manifold(dataclasses.replace(m.factors[0], subdivisions=n))
        cx = CochainComplex(msub)
        spec = solve_low_spectrum(laplacian_h_direct(cx, 0), kneed)
        vals = spec.eigenvalues[: len(ref)]
        err = float(np.max(np.abs(vals - ref) / ref))
        rows.append({"N": n, "eigenvalues": vals, "max_relative_error": err})
    orders = []
    for a, b in zip(rows, rows[1:]):
        ratio = np.log(a["max_relative_error"] / b["max_relative_error"])
        orders.append(float(ratio / np.log(b["N"] / a["N"])))
    lo, hi = cfg.convergence_order_window
    order = float(np.mean(orders)) if orders else float("nan")
    final = rows[-1]["max_relative_error"]
    verdicts = [
        _verdict("final_accuracy", final, 0.0, 0.01,
                 "lowest eigenvalues vs closed-form oscillator ladder",
                 final <= 0.01),
        _verdict("convergence_order", order, [lo, hi], 0,
                 "log-ratio of errors under refinement",
                 bool(orders) and lo <= order <= hi),
    ]
    sections = {"runs": rows, "orders": orders, "mean_order": order}
    return ReportBundle(
        "convergence", cfg.name, sections, verdicts,
        {"accuracy": 0.01, "order_window": [lo, hi]},
    )


_RUNNERS = {
    "spectrum": run_spectrum,
    "betti": run_betti,
    "hodge-verify": run_hodge_verify,
    "duality": run_duality,
    "kunneth": run_kunneth,
    "maps-verify": run_maps_verify,
    "decay-report": run_decay_report,
    "convergence": run_convergence,
}


def run(pipeline: str, cfg: ExperimentConfig) -> ReportBundle:
    """Execute one named pipeline and time it."""
    if pipeline not in _RUNNERS:
        raise ConfigError(f"unknown pipeline {pipeline!r}; choose from {PIPELINES}")
    t0 = time.perf_counter()
    bundle = _RUNNERS[pipeline](cfg)
    bundle.wall_clock_s = time.perf_counter() - t0
    return bundle


# -- entry point -------------------------------------------------------------


def _limit_threads():
    raw = os.environ.get("HODGELAB_THREADS")
    if not raw:
        return
    try:
        k = max(1, int(raw))
    except ValueError:
        return
    try:
        from threadpoolctl import threadpool_limits

        threadpool_limits(limits=k)
    except ImportError:
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
            os.environ[var] = str(k)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hodgelab",
        description="Verification pipelines for weighted Hodge Laplacian models.",
    )
    parser.add_argument("pipeline", choices=PIPELINES)
    parser.add_argument("--config", required=True, help="JSON experiment config")
    parser.add_argument("--out", default=".", help="report output directory")
    parser.add_argument("--format", choices=("json", "csv"), default="json")
    parser.add_argument("--seed", type=int, default=None, help="solver seed override")
    return parser


def main(argv: list[str] | None = None) -> int:
    _limit_threads()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG_ERROR if exc.code not in (0, None) else 0
    try:
        cfg = load_config(args.config, seed_override=args.seed)
        bundle = run(args.pipeline, cfg)
        paths = write_report(bundle, args.out, args.format)
    except (ConfigError, InvalidSpecError, SolverError, NoSpectralGapError,
            ComplexTooLargeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG_ERROR
    for v in bundle.verdicts:
        status = "PASS" if v["passed"] else "FAIL"
        deg = f" p={v['degree']}" if "degree" in v else ""
        print(f"[{status}] {bundle.model}{deg} {v['name']}: "
              f"value={v['value']} expected={v['expected']}")
    for p in paths:
        print(f"wrote {p}")
    print(f"done in {bundle.wall_clock_s:.2f}s")
    return EXIT_PASS if bundle.passed else EXIT_VERDICT_FAIL


if __name__ == "__main__":
    sys.exit(main())
