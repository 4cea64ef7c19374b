"""Acceptance suite: ten numbered criteria, one verdict line each.

Grids follow the published acceptance tables: N = 128 per axis (N = 48 for
the 3-D model), truncation L = 8, weights c = +-1, compression radius
R = 4.  Tolerances are pinned here and nowhere else.
"""

import time

import numpy as np
import pytest

from hodgelab.maps import pairing_matrix, surjectivity_certificate
from hodgelab.model import InvalidSpecError, circle, line, manifold
from hodgelab.operators import (
    CochainComplex,
    DiscreteForm,
    codifferential_mu,
    conjugate_form,
    conjugate_to_h,
    default_mode,
    inner,
    laplacian_h_direct,
    laplacian_mu,
    norm,
)
from hodgelab.schwartz import (
    envelope_excess,
    garding_ratio,
    seminorm_ladder_check,
    seminorm_table,
)
from hodgelab.spectral import (
    EigenSolveConfig,
    kernel_dimension,
    solve_low_spectrum,
)
from hodgelab.topology import (
    betti_from_complex,
    complex_flavor,
    poincare_polynomial,
)

L = 8.0
N2 = 128
N3 = 48
R_MAPS = 4.0
TWO_PI = 2.0 * np.pi

SOLVER = EigenSolveConfig(k=6, tau_gap=1e3)
RUNTIME_BUDGET_S = 300.0          # per model, per criterion
DUALITY_TOL = 2.0 * SOLVER.tol    # "2x solver tolerance", relative
EIGENSUM_RTOL = 0.01
OSC_RTOL = 0.01
ORDER_WINDOW = (1.7, 2.3)
WEITZENBOECK_ABS = 1e-2
STABILITY_RTOL = 0.05
ENVELOPE_SLACK = 0.5
ADJOINT_TOL = 1e-12


@pytest.fixture
def verdict(capsys):
    """One visible PASS/FAIL line per criterion, immune to output capture."""

    def _verdict(num, ok, detail):
        line_ = f"ACCEPTANCE {num:02d}: {'PASS' if ok else 'FAIL'} — {detail}"
        with capsys.disabled():
            print(f"\n{line_}")
        assert ok, line_

    return _verdict


def _kernel_counts(m, mode=None, solver=SOLVER):
    cx = CochainComplex(m, mode=mode)
    counts = []
    for p in range(cx.n + 1):
        spec = solve_low_spectrum(laplacian_mu(cx, p), solver)
        count, cert = kernel_dimension(spec, solver)
        assert cert.gap_ratio >= solver.tau_gap
        counts.append(count)
    return tuple(counts)


GROWTH_MODELS = [
    ("R1", manifold(line(1.0, L, N2)), (0, 1)),
    ("R2", manifold(line(1.0, L, N2), line(1.0, L, N2)), (0, 0, 1)),
    ("S1xR", manifold(circle(TWO_PI, N2), line(1.0, L, N2)), (0, 1, 1)),
    (
        "T2xR",
        manifold(circle(TWO_PI, N3), circle(TWO_PI, N3), line(1.0, L, N3)),
        (0, 1, 2, 1),
    ),
]

DECAY_MODELS = [
    ("R1", manifold(line(-1.0, L, N2)), (1, 0)),
    ("R2", manifold(line(-1.0, L, N2), line(-1.0, L, N2)), (1, 0, 0)),
    ("S1xR", manifold(circle(TWO_PI, N2), line(-1.0, L, N2)), (1, 1, 0)),
]


def test_criterion_01_growth_kernels_are_compact_betti(verdict):
    details = []
    ok = True
    for name, m, expected in GROWTH_MODELS:
        t0 = time.perf_counter()
        counts = _kernel_counts(m)
        dt = time.perf_counter() - t0
        good = counts == expected and dt <= RUNTIME_BUDGET_S
        ok &= good
        details.append(f"{name} {counts} ({dt:.0f}s)")
    verdict(1, ok, "growth-weight kernel counts: " + "; ".join(details))


def test_criterion_02_decay_kernels_are_ordinary_betti(verdict):
    details = []
    ok = True
    for name, m, expected in DECAY_MODELS:
        t0 = time.perf_counter()
        counts = _kernel_counts(m)
        dt = time.perf_counter() - t0
        good = counts == expected and dt <= RUNTIME_BUDGET_S
        ok &= good
        details.append(f"{name} {counts} ({dt:.0f}s)")
    verdict(2, ok, "decay-weight kernel counts: " + "; ".join(details))


def test_criterion_03_torus_control(verdict):
    m = manifold(circle(TWO_PI, N2), circle(TWO_PI, N2))
    counts = _kernel_counts(m)
    verdict(3, counts == (1, 2, 1), f"flat torus kernel counts {counts}")


def _oscillator_error(n_sub):
    cx = CochainComplex(manifold(line(1.0, L, n_sub)))
    spec = solve_low_spectrum(laplacian_h_direct(cx, 0), EigenSolveConfig(k=6))
    ref = np.array([2.0, 4.0, 6.0, 8.0])
    return float(np.max(np.abs(spec.eigenvalues[:4] - ref) / ref))


def test_criterion_04_oscillator_ladder_and_order(verdict):
    errs = {n: _oscillator_error(n) for n in (128, 256, 512)}
    orders = [
        np.log(errs[a] / errs[b]) / np.log(2.0)
        for a, b in ((128, 256), (256, 512))
    ]
    order = float(np.mean(orders))
    ok = errs[512] <= OSC_RTOL and ORDER_WINDOW[0] <= order <= ORDER_WINDOW[1]
    verdict(
        4, ok, f"oscillator error(N=512)={errs[512]:.2e}, order={order:.2f}"
    )


def test_criterion_05_weighted_duality(verdict):
    models = {
        "R2": lambda c: manifold(line(c, L, N2), line(c, L, N2)),
        "S1xR": lambda c: manifold(circle(TWO_PI, N2), line(c, L, N2)),
    }
    worst = 0.0
    ok = True
    for name, mk in models.items():
        cxm = CochainComplex(mk(-1.0))
        cxp = CochainComplex(mk(1.0))
        n = 2
        for p in range(n + 1):
            sm = solve_low_spectrum(laplacian_mu(cxm, p), SOLVER)
            sp_ = solve_low_spectrum(laplacian_mu(cxp, n - p), SOLVER)
            cm, _ = kernel_dimension(sm, SOLVER)
            cp, _ = kernel_dimension(sp_, SOLVER)
            a = np.sort(sm.eigenvalues)[:5]
            b = np.sort(sp_.eigenvalues)[:5]
            dev = float(
                np.max(np.abs(a - b) / np.maximum(np.maximum(np.abs(a), np.abs(b)), 1.0))
            )
            worst = max(worst, dev)
            ok &= cm == cp and dev <= DUALITY_TOL
    verdict(5, ok, f"dual spectra max deviation {worst:.2e} <= {DUALITY_TOL:.0e}")


def test_criterion_06_kunneth(verdict):
    m = manifold(circle(TWO_PI, N2), line(1.0, L, N2))
    cx = CochainComplex(m)
    wide = EigenSolveConfig(k=8)
    cx_a = CochainComplex(manifold(m.factors[0]))
    cx_b = CochainComplex(manifold(m.factors[1]))
    counts, spectra = {}, {}
    for tag, cxs in (("a", cx_a), ("b", cx_b)):
        counts[tag], spectra[tag] = [], []
        for p in range(2):
            spec = solve_low_spectrum(laplacian_mu(cxs, p), wide)
            cnt, _ = kernel_dimension(spec, wide)
            counts[tag].append(cnt)
            spectra[tag].append(spec.eigenvalues)
    ok = True
    worst = 0.0
    for p in range(3):
        spec = solve_low_spectrum(laplacian_mu(cx, p), wide)
        cnt, _ = kernel_dimension(spec, wide)
        expected = sum(
            counts["a"][q] * counts["b"][p - q]
            for q in range(max(0, p - 1), min(1, p) + 1)
        )
        ok &= cnt == expected
        sums = sorted(
            float(x + y)
            for q in range(max(0, p - 1), min(1, p) + 1)
            for x in spectra["a"][q]
            for y in spectra["b"][p - q]
        )
        tau = 1e-8 * spec.scale
        for v in [u for u in spec.eigenvalues if u >= tau][:5]:
            best = min(abs(v - s) / v for s in sums)
            worst = max(worst, best)
            ok &= best <= EIGENSUM_RTOL
    verdict(6, ok, f"product kernels factor-convolved; eigensum dev {worst:.2e}")


def test_criterion_07_maps_certificate(verdict):
    models = [
        ("R1", manifold(line(1.0, L, N2)), (1,)),
        ("S1xR", manifold(circle(TWO_PI, N2), line(1.0, L, N2)), (1, 2)),
    ]
    ok = True
    details = []
    for name, m, degrees in models:
        cx = CochainComplex(m)
        for p in degrees:
            spec = solve_low_spectrum(laplacian_mu(cx, p), SOLVER)
            count, _ = kernel_dimension(spec, SOLVER)
            kernels = spec.kernel_forms(count)
            rep = surjectivity_certificate(kernels, R_MAPS, tolerance=1e-6)
            ok &= (
                rep.pairing.margin < rep.pairing.epsilon
                and max(rep.projection_errors) < 1e-6
                and max(rep.tail_ratios) <= 36.0
                and rep.j_rank == count
            )
            details.append(
                f"{name} p={p} margin={rep.pairing.margin:.1e} "
                f"tail={max(rep.tail_ratios):.2f}"
            )
            # negative control: shrinking the radius degrades the margin
            margins = [
                pairing_matrix(kernels, r).margin for r in (4.0, 2.0, 1.0, 0.5)
            ]
            ok &= all(x < y for x, y in zip(margins, margins[1:]))
    verdict(7, ok, "; ".join(details))


def test_criterion_08_assembly_routes_agree(verdict):
    rng = np.random.default_rng(0)
    errs = {}
    for n_sub in (128, 256, 512):
        cx = CochainComplex(manifold(line(1.0, L, n_sub)))
        worst = 0.0
        for p in (0, 1):
            a = conjugate_to_h(laplacian_mu(cx, p))
            b = laplacian_h_direct(cx, p)
            x = cx.axis_coords(0, p)
            for t in range(3):
                comp = np.exp(-0.5 * x**2) * np.cos((t + 1) * 0.7 * x + 0.3 * t)
                v = comp * (cx.grids[0].spacing if p else 1.0)
                ya, yb = a.apply(v), b.apply(v)
                scale = max(np.max(np.abs(ya)), np.max(np.abs(yb)))
                worst = max(worst, float(np.max(np.abs(ya - yb)) / scale))
        errs[n_sub] = worst
    orders = [
        np.log(errs[a] / errs[b]) / np.log(2.0)
        for a, b in ((128, 256), (256, 512))
    ]
    order = float(np.mean(orders))
    ok = errs[512] < WEITZENBOECK_ABS and 1.5 <= order <= 2.5
    verdict(8, ok, f"route discrepancy {errs[512]:.2e} at N=512, order {order:.2f}")


def _diagnostics(n_sub):
    cx = CochainComplex(manifold(line(1.0, L, n_sub)))
    out = []
    for p in (0, 1):
        op_h = laplacian_h_direct(cx, p)
        spec = solve_low_spectrum(laplacian_mu(cx, p), EigenSolveConfig(k=4))
        count, _ = kernel_dimension(spec)
        for i in range(spec.k):
            f = conjugate_form(spec.form(i), 1)
            f.values /= norm(f, "dx")
            table = seminorm_table(f, max_k=3, max_alpha=2)
            g = garding_ratio(f, op_h)
            ladder = seminorm_ladder_check(f, op_h, 2)[2]
            env = envelope_excess(f, 1.0) if i < count else None
            out.append((p, i, table, g, ladder, env))
    return out


def test_criterion_09_schwartz_diagnostics(verdict):
    coarse = _diagnostics(128)
    fine = _diagnostics(256)
    ok = True
    worst_env = -np.inf
    for (p, i, ta, ga, la, ea), (_, _, tb, gb, lb, eb) in zip(coarse, fine):
        ok &= all(np.isfinite(v) for v in ta.entries.values())
        ok &= ta.stable_against(tb, rtol=STABILITY_RTOL)
        ok &= abs(ga - gb) / max(gb, 1e-300) < STABILITY_RTOL
        ok &= abs(la - lb) / max(lb, 1e-300) < STABILITY_RTOL
        if eb is not None:
            worst_env = max(worst_env, eb)
            ok &= eb <= ENVELOPE_SLACK
    verdict(
        9, ok, f"seminorms finite/stable; envelope excess {worst_env:.2e}"
    )


def test_criterion_10_structure_suite(verdict):
    ok = True
    details = []
    # exact integer d.d = 0 and adjointness across models and modes
    checks = [
        CochainComplex(manifold(circle(TWO_PI, 12), line(1.0, L, 12))),
        CochainComplex(manifold(circle(TWO_PI, 12), line(-1.0, L, 12))),
        CochainComplex(
            manifold(circle(TWO_PI, 8), circle(TWO_PI, 8), line(1.0, L, 8))
        ),
    ]
    rng = np.random.default_rng(2)
    for cx in checks:
        for p in range(cx.n):
            dd = cx.coboundary(p + 1) @ cx.coboundary(p)
            dd.eliminate_zeros()
            ok &= dd.nnz == 0
            u = DiscreteForm(cx, p, rng.standard_normal(cx.num_cells(p)))
            v = DiscreteForm(cx, p + 1, rng.standard_normal(cx.num_cells(p + 1)))
            du = DiscreteForm(cx, p + 1, cx.coboundary(p).astype(float) @ u.values)
            dv = DiscreteForm(cx, p, codifferential_mu(cx, p + 1) @ v.values)
            lhs, rhs = inner(du, v), inner(u, dv)
            ok &= abs(lhs - rhs) / max(abs(lhs), abs(rhs), 1.0) < ADJOINT_TOL
    details.append("d.d=0 and adjointness")
    # exact two-route topology, both modes
    for mode in ("relative", "absolute"):
        for m in (
            manifold(line(1.0, L, 6)),
            manifold(circle(TWO_PI, 6), line(1.0, L, 6)),
            manifold(circle(TWO_PI, 5), circle(TWO_PI, 6)),
        ):
            cx = CochainComplex(m, mode=mode)
            got = betti_from_complex(cx)
            want = poincare_polynomial(m, complex_flavor(cx))
            full_g = tuple(got.betti(p) for p in range(m.n + 1))
            full_w = tuple(want.betti(p) for p in range(m.n + 1))
            ok &= full_g == full_w
    details.append("two-route topology exact")
    # negative controls fail loudly
    m = manifold(circle(TWO_PI, 24), line(1.0, L, 24))
    wrong = _kernel_counts(m, mode="absolute")
    right = tuple(
        poincare_polynomial(m, "compact").betti(p) for p in range(3)
    )
    ok &= wrong != right
    with pytest.raises(InvalidSpecError):
        default_mode(manifold(line(1.0, L, 8), line(-1.0, L, 8)))
    details.append("negative controls loud")
    verdict(10, ok, "; ".join(details))
