import numpy as np
import pytest

from hodgelab.model import circle, line, manifold
from hodgelab.operators import (
    CochainComplex,
    DiscreteForm,
    inner,
    laplacian_h_direct,
    laplacian_mu,
    norm,
    sample_form,
)
from hodgelab.spectral import (
    EigenSolveConfig,
    NoSpectralGapError,
    Spectrum,
    hodge_decompose,
    kernel_dimension,
    project_onto_kernel,
    solve_low_spectrum,
    zero_threshold,
)


def test_config_validation():
    with pytest.raises(ValueError):
        EigenSolveConfig(k=0)
    with pytest.raises(ValueError):
        EigenSolveConfig(tau_abs=-1.0)
    with pytest.raises(ValueError):
        EigenSolveConfig(tau_gap=0.5)


def test_oscillator_ladder_oracle():
    """Lowest eigenvalues of the growth-weight degree-0 operator on a line
    form the arithmetic ladder 2, 4, 6, 8 of the shifted harmonic oscillator."""
    cx = CochainComplex(manifold(line(1.0, 8.0, 256)))
    spec = solve_low_spectrum(laplacian_h_direct(cx, 0), EigenSolveConfig(k=4))
    assert spec.eigenvalues == pytest.approx([2.0, 4.0, 6.0, 8.0], rel=2e-3)


def test_solver_paths_agree():
    cx = CochainComplex(manifold(circle(2 * np.pi, 48), line(1.0, 8.0, 48)))
    op = laplacian_mu(cx, 0)
    dense = solve_low_spectrum(op, EigenSolveConfig(k=5, method="dense"))
    shift = solve_low_spectrum(op, EigenSolveConfig(k=5, method="shift-invert"))
    lob = solve_low_spectrum(op, EigenSolveConfig(k=5, method="lobpcg", maxiter=3000))
    assert shift.eigenvalues == pytest.approx(dense.eigenvalues, abs=1e-9)
    assert lob.eigenvalues == pytest.approx(dense.eigenvalues, abs=1e-7)


def test_determinism_for_fixed_seed():
    cx = CochainComplex(manifold(circle(2 * np.pi, 32), line(1.0, 8.0, 48)))
    op = laplacian_mu(cx, 1)
    cfg = EigenSolveConfig(k=4, method="shift-invert", seed=7)
    a = solve_low_spectrum(op, cfg)
    b = solve_low_spectrum(op, cfg)
    assert np.array_equal(a.eigenvalues, b.eigenvalues)


def test_eigenvectors_mass_orthonormal():
    cx = CochainComplex(manifold(line(1.0, 8.0, 48)))
    op = laplacian_mu(cx, 0)
    spec = solve_low_spectrum(op, EigenSolveConfig(k=4))
    gram = spec.eigenvectors.T @ (spec.eigenvectors * op.mass_diag[:, None])
    assert gram == pytest.approx(np.eye(4), abs=1e-10)


def test_kernel_dimension_certificate():
    cx = CochainComplex(manifold(line(1.0, 8.0, 64)))
    spec = solve_low_spectrum(laplacian_mu(cx, 1), EigenSolveConfig(k=5))
    count, cert = kernel_dimension(spec)
    assert count == 1
    assert cert.gap_ratio >= 1e3
    assert cert.first_above > cert.tau_abs


def test_no_gap_raises():
    cx = CochainComplex(manifold(line(1.0, 8.0, 64)))
    spec = solve_low_spectrum(laplacian_mu(cx, 0), EigenSolveConfig(k=5))
    # an absurd threshold buries the gap inside the nonzero spectrum
    with pytest.raises(NoSpectralGapError):
        kernel_dimension(spec, EigenSolveConfig(k=5, tau_abs=3.0, tau_gap=1e3))


def test_kernel_not_exhausted_raises():
    cx = CochainComplex(manifold(line(1.0, 8.0, 64)))
    spec = solve_low_spectrum(laplacian_mu(cx, 1), EigenSolveConfig(k=1))
    with pytest.raises(NoSpectralGapError):
        kernel_dimension(spec, EigenSolveConfig(k=1))


def test_zero_threshold_scales_with_operator():
    cx = CochainComplex(manifold(line(1.0, 8.0, 64)))
    spec = solve_low_spectrum(laplacian_mu(cx, 0), EigenSolveConfig(k=3))
    cfg = EigenSolveConfig()
    assert zero_threshold(spec, cfg) == pytest.approx(1e-8 * spec.scale)
    assert zero_threshold(spec, EigenSolveConfig(tau_abs=1e-5)) == 1e-5


def test_hodge_decomposition_reconstructs():
    cx = CochainComplex(manifold(circle(2 * np.pi, 24), line(1.0, 8.0, 32)))
    op = laplacian_mu(cx, 1)
    spec = solve_low_spectrum(op, EigenSolveConfig(k=6))
    f = sample_form(
        cx,
        1,
        {
            (1, 0): lambda th, x: np.exp(-(x**2)) * np.cos(th),
            (0, 1): lambda th, x: np.exp(-(x**2)) * (1.0 + 0.3 * np.sin(th)),
        },
    )
    parts = hodge_decompose(f, spec, op)
    assert parts.reconstruction_residual < 1e-8 * norm(f)
    # the three pieces are mutually orthogonal in the weighted inner product
    assert abs(inner(parts.harmonic, parts.exact)) < 1e-8
    assert abs(inner(parts.harmonic, parts.coexact)) < 1e-8
    assert abs(inner(parts.exact, parts.coexact)) < 1e-8
    # harmonic part is the kernel projection
    proj = project_onto_kernel(f, spec, 1)
    assert parts.harmonic.values == pytest.approx(proj.values, abs=1e-10)


def test_hodge_decomposition_degree_zero_has_no_exact_part():
    cx = CochainComplex(manifold(line(-1.0, 8.0, 48)))
    op = laplacian_mu(cx, 0)
    spec = solve_low_spectrum(op, EigenSolveConfig(k=5))
    f = sample_form(cx, 0, {(0,): lambda x: np.exp(-(x**2)) * x})
    parts = hodge_decompose(f, spec, op)
    assert np.all(parts.exact.values == 0.0)
    assert parts.phi is None
    assert parts.reconstruction_residual < 1e-8 * norm(f)


def test_spectrum_form_accessors():
    cx = CochainComplex(manifold(line(1.0, 8.0, 32)))
    spec = solve_low_spectrum(laplacian_mu(cx, 1), EigenSolveConfig(k=3))
    forms = spec.kernel_forms(1)
    assert len(forms) == 1
    assert isinstance(forms[0], DiscreteForm)
    assert isinstance(spec, Spectrum)
    assert norm(forms[0]) == pytest.approx(1.0, rel=1e-8)
