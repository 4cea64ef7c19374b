"""Compression of line tails and the two explicit cohomology maps.

The end compression acts on each line coordinate by |s|: identity for
|s| <= R, the inversion r = R + (1 - (|s|-R))^{-1} for R+1/2 <= |s| < R+1,
and a fixed quintic-smoothstep blend of the two on [R, R+1/2].  Pulling a
harmonic form back under the compression and cutting at |s| = R+1 yields
a compactly supported closed cochain ("extension by zero"); pairing those
against the original kernel basis gives the Gram-type matrix whose
invertibility certifies that the kernel projection is onto.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import reduce
from itertools import combinations

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from .model import degree_patterns
from .operators import (
    CochainComplex,
    DiscreteForm,
    components,
    form_from_components,
    inner,
    norm,
)


class OutOfChartError(ValueError):
    """A coordinate beyond R+1 has no preimage under the compression."""


class TruncationConflictError(ValueError):
    """The compression collar R+1 does not fit inside the truncated grid."""


def _smoothstep(u: np.ndarray) -> np.ndarray:
    return u**3 * (10.0 - 15.0 * u + 6.0 * u**2)


def _smoothstep_d(u: np.ndarray) -> np.ndarray:
    return 30.0 * u**2 * (1.0 - u) ** 2


def compress_coordinate(s, R: float):
    """Image r of a nonnegative tail coordinate under the inverse compression.

    Identity up to R, the inversion formula beyond R+1/2, and the blend in
    between; raises for s >= R+1 (outside the compressed chart).
    """
    s_arr = np.asarray(s, dtype=float)
    if np.any(s_arr < 0):
        raise OutOfChartError("tail coordinate must be nonnegative")
    if np.any(s_arr >= R + 1.0):
        raise OutOfChartError(f"coordinate {np.max(s_arr)} is at or beyond R+1={R + 1.0}")
    r = _compress_clipped(s_arr, R)
    return float(r) if np.isscalar(s) else r


def _compress_clipped(s: np.ndarray, R: float) -> np.ndarray:
    """Compression image with points at or past R+1 mapped far out.

    Internal helper for resampling, where out-of-chart points are cut to
    zero anyway.
    """
    s = np.asarray(s, dtype=float)
    t = s - R
    safe = np.clip(1.0 - t, 1e-12, None)
    g = R + 1.0 / safe
    u = np.clip(2.0 * t, 0.0, 1.0)
    w = _smoothstep(u)
    r = np.where(t <= 0.0, s, (1.0 - w) * s + w * g)
    return np.where(t >= 1.0, np.inf, r)


def compress_derivative(s, R: float):
    """dr/ds of the compression image; zero at or past R+1."""
    s_arr = np.asarray(s, dtype=float)
    t = s_arr - R
    safe = np.clip(1.0 - t, 1e-12, None)
    g = R + 1.0 / safe
    gd = 1.0 / safe**2
    u = np.clip(2.0 * t, 0.0, 1.0)
    w = _smoothstep(u)
    wd = 2.0 * _smoothstep_d(u)
    blend = (1.0 - w) + w * gd + wd * (g - s_arr)
    d = np.where(t <= 0.0, 1.0, np.where(t >= 0.5, gd, blend))
    d = np.where(t >= 1.0, 0.0, d)
    return float(d) if np.isscalar(s) else d


@dataclass(frozen=True)
class EndCompression:
    """The tail compression at core radius R with the fixed quintic blend."""

    R: float

    def __post_init__(self):
        if self.R < 0:
            raise ValueError("core radius must be nonnegative")

    def map(self, s):
        return compress_coordinate(s, self.R)

    def derivative(self, s):
        return compress_derivative(s, self.R)

    def derivative_sup(self, samples: int = 4001) -> float:
        """Sampled sup of dr/ds over the blend interval [R, R+1/2]."""
        s = np.linspace(self.R, self.R + 0.5, samples)
        return float(np.max(compress_derivative(s, self.R)))


def _pattern_interpolator(cx: CochainComplex, pattern, values: np.ndarray):
    points = []
    vals = values
    for a, e in enumerate(pattern):
        coords = cx.axis_coords(a, e)
        if cx.grids[a].periodic:
            period = cx.manifold.factors[a].circumference
            coords = np.append(coords, coords[0] + period)
            vals = np.concatenate([vals, vals.take([0], axis=a)], axis=a)
        points.append(coords)
    return RegularGridInterpolator(
        points, vals, method="linear", bounds_error=False, fill_value=0.0
    )


def extend_by_zero(form: DiscreteForm, R: float) -> DiscreteForm:
    """Pullback under the compression, cut to zero outside |s| <= R+1.

    Coefficients are resampled from the piecewise-multilinear component
    reconstruction at the mapped barycenters, with the chain-rule factor
    on every compressed axis that carries a differential.
    """
    cx = form.complex
    line_axes = cx.manifold.line_axes()
    for a in line_axes:
        if R + 1.0 >= cx.manifold.factors[a].truncation:
            raise TruncationConflictError(
                f"collar R+1={R + 1.0} reaches the truncation radius "
                f"{cx.manifold.factors[a].truncation} on axis {a}"
            )
    comps = components(form)
    interps = {q: _pattern_interpolator(cx, q, arr) for q, arr in comps.items()}
    out = {}
    for pattern in degree_patterns(cx.n, form.degree):
        meshes = cx.pattern_meshes(pattern)
        mapped = []
        chain = np.ones(meshes[0].shape) if meshes else np.ones(())
        outside = np.zeros(meshes[0].shape, dtype=bool)
        for a, mesh in enumerate(meshes):
            if a in line_axes:
                t = np.abs(mesh)
                r = _compress_clipped(t, R)
                mapped.append(np.sign(mesh) * np.where(np.isfinite(r), r, 0.0))
                outside |= t >= R + 1.0
                if pattern[a]:
                    chain = chain * compress_derivative(t, R)
            else:
                mapped.append(mesh)
        pts = np.stack([m.ravel() for m in mapped], axis=-1)
        vals = interps[pattern](pts).reshape(meshes[0].shape) * chain
        vals[outside] = 0.0
        out[pattern] = vals
    return form_from_components(cx, form.degree, out)


def top_form_integral(form: DiscreteForm) -> float:
    """Integral over the model of a top-degree cochain (sum of coefficients)."""
    if form.degree != form.complex.n:
        raise ValueError("integral is defined for top-degree forms")
    return float(form.values.sum())


# -- pairing matrix and projection -------------------------------------------


@dataclass
class PairingMatrix:
    """Gram-type pairings of extended kernel forms against the kernel basis."""

    matrix: np.ndarray
    epsilon: float           # 1/N invertibility budget
    max_diag_dev: float
    max_offdiag: float

    @property
    def invertible(self) -> bool:
        return max(self.max_diag_dev, self.max_offdiag) < self.epsilon

    @property
    def margin(self) -> float:
        return max(self.max_diag_dev, self.max_offdiag)


def pairing_matrix(
    kernels: list[DiscreteForm], R: float, extended: list[DiscreteForm] | None = None
) -> PairingMatrix:
    """A_ij = <extended_i, kernel_j>_mu for a mass-orthonormal kernel basis."""
    nk = len(kernels)
    if extended is None:
        extended = [extend_by_zero(w, R) for w in kernels]
    a = np.empty((nk, nk))
    for i, ext in enumerate(extended):
        for j, w in enumerate(kernels):
            a[i, j] = inner(ext, w)
    off = a - np.diag(np.diag(a))
    return PairingMatrix(
        a,
        epsilon=1.0 / nk if nk else 1.0,
        max_diag_dev=float(np.max(np.abs(np.diag(a) - 1.0))) if nk else 0.0,
        max_offdiag=float(np.max(np.abs(off))) if nk > 1 else 0.0,
    )


def project_kernel(nu: DiscreteForm, kernels: list[DiscreteForm]) -> DiscreteForm:
    """Orthogonal projection onto the span of the kernel basis."""
    if kernels and kernels[0].degree != nu.degree:
        raise ValueError("degree mismatch between form and kernel basis")
    out = np.zeros_like(nu.values)
    for w in kernels:
        out += inner(nu, w) * w.values
    return DiscreteForm(nu.complex, nu.degree, out)


def _tail_mask(cx: CochainComplex, pattern, R: float) -> np.ndarray:
    """Cells whose barycenter lies beyond |x| = R on some line axis."""
    shape = cx.pattern_shape(pattern)
    mask = np.zeros(shape, dtype=bool)
    for a in cx.manifold.line_axes():
        cond = np.abs(cx.axis_coords(a, pattern[a])) > R
        mask |= cond.reshape([shape[i] if i == a else 1 for i in range(len(shape))])
    return mask


def tail_mass(form: DiscreteForm, R: float) -> float:
    """Weighted squared mass of a form beyond the core radius R."""
    cx = form.complex
    total = 0.0
    m = cx.mass(form.degree, "mu")
    for pattern, sl in cx.pattern_slices(form.degree).items():
        vals = form.values[sl].reshape(cx.pattern_shape(pattern))
        mass = m[sl].reshape(cx.pattern_shape(pattern))
        mask = _tail_mask(cx, pattern, R)
        total += float(np.sum((vals**2 * mass)[mask]))
    return total


def dual_pairings(forms: list[DiscreteForm]) -> np.ndarray:
    """Integration pairings against the closed dual basis.

    Dual (n-p)-forms are products of circle angular forms; each one is
    indexed by an (n-p)-subset of the circle axes, and the pairing with a
    closed compactly supported p-form integrates the complementary
    component over the model.
    """
    if not forms:
        return np.zeros((0, 0))
    cx = forms[0].complex
    p = forms[0].degree
    n = cx.n
    circle_axes = cx.manifold.circle_axes()
    duals = list(combinations(circle_axes, n - p))
    pair = np.zeros((len(forms), len(duals)))
    slices = cx.pattern_slices(p)
    for k, s_axes in enumerate(duals):
        pattern = tuple(0 if a in s_axes else 1 for a in range(n))
        if pattern not in slices:
            continue
        shape = cx.pattern_shape(pattern)
        weights = reduce(
            np.multiply.outer,
            [
                cx.axis_quad(a, 0) if a in s_axes else np.ones(shape[a])
                for a in range(n)
            ],
        )
        i_axes = [a for a in range(n) if pattern[a]]
        sign = _perm_sign_of(list(i_axes) + list(s_axes))
        for i, form in enumerate(forms):
            vals = form.values[slices[pattern]].reshape(shape)
            pair[i, k] = sign * float(np.sum(vals * weights))
    return pair


def _perm_sign_of(seq) -> int:
    inv = sum(
        1 for i in range(len(seq)) for j in range(i + 1, len(seq)) if seq[i] > seq[j]
    )
    return -1 if inv % 2 else 1


@dataclass
class SurjectivityReport:
    """Quantitative certificate that both explicit maps are onto."""

    kernel_count: int
    R: float
    pairing: PairingMatrix
    projection_errors: np.ndarray
    tail_ratios: np.ndarray
    tail_bound: float
    derivative_sup: float
    j_rank: int
    tolerance: float

    @property
    def passed(self) -> bool:
        return bool(
            self.pairing.invertible
            and np.all(self.projection_errors < self.tolerance)
            and np.all(self.tail_ratios <= self.tail_bound)
            and self.j_rank == self.kernel_count
        )


def surjectivity_certificate(
    kernels: list[DiscreteForm], R: float, tolerance: float = 1e-6
) -> SurjectivityReport:
    """Full certificate: invertible pairing, exact projection recovery,
    tail-energy inequality, and full rank against the closed dual basis."""
    nk = len(kernels)
    extended = [extend_by_zero(w, R) for w in kernels]
    pairing = pairing_matrix(kernels, R, extended=extended)
    if not pairing.invertible:
        return SurjectivityReport(
            nk,
            R,
            pairing,
            np.full(nk, np.inf),
            np.full(nk, np.inf),
            36.0,
            EndCompression(R).derivative_sup(),
            0,
            tolerance,
        )
    a_inv = np.linalg.inv(pairing.matrix)
    cx = kernels[0].complex
    proj_err = np.zeros(nk)
    ratios = np.zeros(nk)
    for i in range(nk):
        nu_vals = sum(a_inv[i, j] * extended[j].values for j in range(nk))
        nu = DiscreteForm(cx, kernels[i].degree, nu_vals)
        proj_err[i] = norm(
            DiscreteForm(cx, nu.degree, project_kernel(nu, kernels).values - kernels[i].values)
        )
        diff = DiscreteForm(cx, nu.degree, extended[i].values - kernels[i].values)
        num = inner(diff, diff)
        den = tail_mass(kernels[i], R)
        ratios[i] = 0.0 if num <= 1e-300 else num / max(den, 1e-300)
    rank = int(np.linalg.matrix_rank(dual_pairings(extended))) if nk else 0
    return SurjectivityReport(
        nk,
        R,
        pairing,
        proj_err,
        ratios,
        36.0,
        EndCompression(R).derivative_sup(),
        rank,
        tolerance,
    )
