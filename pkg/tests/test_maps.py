import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hodgelab.maps import (
    EndCompression,
    OutOfChartError,
    TruncationConflictError,
    compress_coordinate,
    compress_derivative,
    dual_pairings,
    extend_by_zero,
    pairing_matrix,
    project_kernel,
    surjectivity_certificate,
    tail_mass,
    top_form_integral,
)
from hodgelab.model import circle, line, manifold
from hodgelab.operators import (
    CochainComplex,
    components,
    form_from_components,
    norm,
    sample_form,
)
from hodgelab.spectral import EigenSolveConfig, kernel_dimension, solve_low_spectrum


def _kernel_forms(m, degree, k=5):
    cx = CochainComplex(m)
    from hodgelab.operators import laplacian_mu

    spec = solve_low_spectrum(laplacian_mu(cx, degree), EigenSolveConfig(k=k))
    count, _ = kernel_dimension(spec)
    return cx, spec.kernel_forms(count)


# -- coordinate compression ---------------------------------------------------


def test_identity_below_core_radius():
    s = np.linspace(0.0, 4.0, 50)
    assert compress_coordinate(s, 4.0) == pytest.approx(s)
    assert compress_derivative(s[:-1], 4.0) == pytest.approx(np.ones(49))


def test_inversion_branch_formula():
    R = 4.0
    for s in (4.6, 4.8, 4.95):
        assert compress_coordinate(s, R) == pytest.approx(R + 1.0 / (1.0 - (s - R)))


def test_out_of_chart():
    with pytest.raises(OutOfChartError):
        compress_coordinate(5.0, 4.0)
    with pytest.raises(OutOfChartError):
        compress_coordinate(-0.1, 4.0)


def test_compression_diverges_at_collar_edge():
    # the image sweeps out the whole tail as s approaches R+1
    assert compress_coordinate(4.0 + 1.0 - 1e-9, 4.0) > 1e8


@given(st.floats(0.0, 4.999), st.floats(0.0, 4.999))
@settings(max_examples=200)
def test_compression_monotone(a, b):
    R = 4.0
    lo, hi = sorted((a, b))
    assert compress_coordinate(lo, R) <= compress_coordinate(hi, R) + 1e-12


def test_derivative_matches_finite_differences():
    R = 4.0
    s = np.linspace(0.01, 4.9, 800)
    h = 1e-6
    fd = (compress_coordinate(s + h, R) - compress_coordinate(s - h, R)) / (2 * h)
    an = compress_derivative(s, R)
    assert an == pytest.approx(fd, rel=1e-3)


def test_derivative_sup_bounded():
    """The C^1 blend cannot keep the slope at 4 (its average over the blend
    half-interval is already 4 while it starts at 1); the fixed quintic
    blend stays below 6, which is the bound the tail inequality uses."""
    sup = EndCompression(4.0).derivative_sup()
    assert 4.0 < sup < 6.0
    # the bound is independent of the core radius
    assert EndCompression(2.0).derivative_sup() == pytest.approx(sup, rel=1e-6)


def test_negative_core_radius_rejected():
    with pytest.raises(ValueError):
        EndCompression(-1.0)


# -- extension by zero --------------------------------------------------------


def test_extension_identity_in_core():
    m = manifold(line(1.0, 8.0, 64))
    cx = CochainComplex(m)
    x = cx.axis_coords(0, 1)
    f = form_from_components(cx, 1, {(1,): np.exp(-(x**2))})
    g = extend_by_zero(f, 4.0)
    fa, ga = components(f)[(1,)], components(g)[(1,)]
    core = np.abs(x) <= 4.0 - 0.5
    assert ga[core] == pytest.approx(fa[core], rel=1e-12)


def test_extension_vanishes_outside_collar():
    m = manifold(line(1.0, 8.0, 64))
    cx = CochainComplex(m)
    x = cx.axis_coords(0, 1)
    f = form_from_components(cx, 1, {(1,): np.exp(-(x**2))})
    g = extend_by_zero(f, 4.0)
    ga = components(g)[(1,)]
    assert np.all(ga[np.abs(x) >= 5.0] == 0.0)


def test_extension_needs_room():
    m = manifold(line(1.0, 4.0, 32))
    cx = CochainComplex(m)
    f = form_from_components(cx, 1, {(1,): np.ones(32)})
    with pytest.raises(TruncationConflictError):
        extend_by_zero(f, 4.0)


def test_top_form_integral_gaussian_oracle():
    # the total integral of the weighted-kernel 1-form reproduces sqrt(pi)
    m = manifold(line(1.0, 8.0, 256))
    cx = CochainComplex(m)
    f = sample_form(cx, 1, {(1,): lambda x: np.exp(-(x**2))})
    assert top_form_integral(f) == pytest.approx(np.sqrt(np.pi), rel=1e-5)
    with pytest.raises(ValueError):
        top_form_integral(sample_form(cx, 0, {(0,): lambda x: x}))


def test_tail_mass_splits_total():
    m = manifold(line(1.0, 8.0, 128))
    cx = CochainComplex(m)
    f = sample_form(cx, 1, {(1,): lambda x: np.exp(-(x**2))})
    total = norm(f) ** 2
    assert 0.0 < tail_mass(f, 2.0) < total
    assert tail_mass(f, 0.0) == pytest.approx(total, rel=1e-12)


# -- pairing, projection, certificate ----------------------------------------


def test_pairing_near_identity_for_generous_radius():
    _, kernels = _kernel_forms(manifold(line(1.0, 8.0, 128)), 1)
    p = pairing_matrix(kernels, 4.0)
    assert p.invertible
    assert p.margin < 1e-6
    assert p.epsilon == 1.0  # one kernel form: budget 1/1


def test_projection_recovers_kernel_member():
    cx, kernels = _kernel_forms(manifold(line(1.0, 8.0, 96)), 1)
    w = kernels[0]
    back = project_kernel(w, kernels)
    assert back.values == pytest.approx(w.values, rel=1e-10)


def test_dual_pairings_circle_oracle():
    # the circle harmonic 1-form pairs with the point class to its period
    cx = CochainComplex(manifold(circle(2 * np.pi, 32)))
    f = sample_form(cx, 1, {(1,): lambda th: np.ones_like(th)})
    pair = dual_pairings([f])
    assert pair.shape == (1, 1)
    assert pair[0, 0] == pytest.approx(2 * np.pi)


def test_certificate_passes_line():
    _, kernels = _kernel_forms(manifold(line(1.0, 8.0, 128)), 1)
    rep = surjectivity_certificate(kernels, 4.0)
    assert rep.passed
    assert rep.j_rank == 1
    assert max(rep.tail_ratios) <= 36.0
    assert max(rep.projection_errors) < 1e-6


def test_certificate_passes_cylinder_both_degrees():
    m = manifold(circle(2 * np.pi, 48), line(1.0, 8.0, 96))
    for p in (1, 2):
        _, kernels = _kernel_forms(m, p)
        rep = surjectivity_certificate(kernels, 4.0)
        assert rep.passed, f"degree {p}"
        assert rep.kernel_count == 1


def test_margin_degrades_as_radius_shrinks():
    _, kernels = _kernel_forms(manifold(line(1.0, 8.0, 128)), 1)
    margins = [pairing_matrix(kernels, r).margin for r in (4.0, 3.0, 2.0, 1.0, 0.5)]
    assert all(a < b for a, b in zip(margins, margins[1:]))
