"""Decay diagnostics in the unweighted picture.

Eigenforms of the conjugated (oscillator-type) operator decay like
Gaussian-damped Schwartz functions along every line tail.  This module
measures the checkable shadows of that statement: monomial-weighted
difference seminorms, the elliptic energy ratio, the power-ladder ratio,
and pointwise shell profiles.  The constants in the underlying
inequalities are not computable; what is checked is finiteness and
stability under grid refinement.

All forms here live in the unweighted picture (multiply a weighted-picture
eigenform by e^h first, see operators.conjugate_form).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import reduce
from itertools import product

import numpy as np

from .operators import CochainComplex, DiscreteForm, OperatorHandle, components


class UnsupportedDerivativeError(ValueError):
    """Only first and second coefficient differences are stencilled."""


def _quad_weights(cx: CochainComplex, pattern) -> np.ndarray:
    return reduce(
        np.multiply.outer, [cx.axis_quad(a, e) for a, e in enumerate(pattern)]
    )


def _axis_derivative(cx: CochainComplex, arr: np.ndarray, axis: int, extent: int) -> np.ndarray:
    """Centered difference of a component array along one axis."""
    g = cx.grids[axis]
    if g.periodic:
        return (np.roll(arr, -1, axis=axis) - np.roll(arr, 1, axis=axis)) / (2.0 * g.spacing)
    return np.gradient(arr, g.spacing, axis=axis, edge_order=2)


def _monomial(cx: CochainComplex, pattern, axis: int, k: int) -> np.ndarray:
    shape = cx.pattern_shape(pattern)
    coord = cx.axis_coords(axis, pattern[axis]) ** k
    return coord.reshape([shape[i] if i == axis else 1 for i in range(len(shape))])


def _default_axis(cx: CochainComplex) -> int:
    axes = cx.manifold.line_axes()
    return axes[0] if axes else 0


def seminorm(
    form_h: DiscreteForm, k: int, alpha: tuple[int, ...] | int, axis: int | None = None
) -> float:
    """Unweighted L2 norm of x_axis^k times the alpha-difference of the form.

    alpha is a per-axis multi-index of total order at most 2 (an integer is
    read as a pure order in the monomial axis).
    """
    cx = form_h.complex
    if axis is None:
        axis = _default_axis(cx)
    if isinstance(alpha, int):
        a = [0] * cx.n
        a[axis] = alpha
        alpha = tuple(a)
    if len(alpha) != cx.n or any(o < 0 for o in alpha):
        raise UnsupportedDerivativeError(f"bad multi-index {alpha!r}")
    if sum(alpha) > 2:
        raise UnsupportedDerivativeError(
            f"difference order {sum(alpha)} > 2 is not stencilled"
        )
    if k < 0:
        raise ValueError("monomial power must be nonnegative")
    total = 0.0
    for pattern, arr in components(form_h).items():
        d = arr
        for ax, order in enumerate(alpha):
            for _ in range(order):
                d = _axis_derivative(cx, d, ax, pattern[ax])
        if k:
            d = d * _monomial(cx, pattern, axis, k)
        total += float(np.sum(d**2 * _quad_weights(cx, pattern)))
    return float(np.sqrt(total))


@dataclass
class SeminormReport:
    """Seminorm table of one form at one resolution."""

    entries: dict  # (k, |alpha| or multi-index) -> value
    subdivisions: tuple[int, ...]

    def stable_against(self, other: "SeminormReport", rtol: float = 0.05) -> bool:
        """All shared entries agree within rtol (relative to the larger)."""
        for key, v in self.entries.items():
            w = other.entries.get(key)
            if w is None:
                continue
            scale = max(abs(v), abs(w), 1e-300)
            if abs(v - w) / scale > rtol:
                return False
        return True


def seminorm_table(
    form_h: DiscreteForm, max_k: int = 3, max_alpha: int = 2, axis: int | None = None
) -> SeminormReport:
    """All seminorms with monomial power <= max_k and difference order <= max_alpha."""
    cx = form_h.complex
    entries = {}
    for k in range(max_k + 1):
        for alpha in product(*([range(max_alpha + 1)] * cx.n)):
            if sum(alpha) > max_alpha:
                continue
            entries[(k, alpha)] = seminorm(form_h, k, alpha, axis=axis)
    return SeminormReport(entries, tuple(f.subdivisions for f in cx.manifold.factors))


def garding_ratio(form_h: DiscreteForm, op_h: OperatorHandle, axis: int | None = None) -> float:
    """Elliptic energy ratio (sum |d_j w|^2 + |x w|^2) / (<Lw, w> + |w|^2).

    Boundedness of this ratio across refinement is the checkable form of
    the energy inequality for the oscillator-type operator.
    """
    cx = form_h.complex
    if axis is None:
        axis = _default_axis(cx)
    num = sum(
        seminorm(form_h, 0, tuple(1 if a == j else 0 for a in range(cx.n)))**2
        for j in range(cx.n)
    )
    num += seminorm(form_h, 1, tuple([0] * cx.n), axis=axis) ** 2
    quad = max(op_h.quad_form(form_h.values), 0.0)
    nrm2 = float(np.dot(form_h.values**2, op_h.mass_diag))
    if nrm2 == 0.0:
        raise ValueError("zero form has no energy ratio")
    return num / (quad + nrm2)


def seminorm_ladder_check(
    form_h: DiscreteForm, op_h: OperatorHandle, level: int, axis: int | None = None
):
    """(lhs, rhs, ratio) of the power-l seminorm ladder.

    lhs sums all squared seminorms with k + |alpha| <= level; rhs is
    <L^level w, w> + |w|^2.  Level 2 is the stencil limit.
    """
    if level not in (1, 2):
        raise UnsupportedDerivativeError("ladder levels 1 and 2 are supported")
    cx = form_h.complex
    lhs = 0.0
    for k in range(level + 1):
        for alpha in product(*([range(level + 1)] * cx.n)):
            if k + sum(alpha) > level:
                continue
            lhs += seminorm(form_h, k, alpha, axis=axis) ** 2
    z = form_h.values.copy()
    for _ in range(level):
        z = op_h.apply(z)
    rhs = float(np.dot(z * op_h.mass_diag, form_h.values))
    rhs = max(rhs, 0.0) + float(np.dot(form_h.values**2, op_h.mass_diag))
    return lhs, rhs, lhs / rhs


@dataclass
class DecayProfile:
    """Shell table of sup-norms along one line axis."""

    axis: int
    shell_edges: np.ndarray           # |x| in [edge_m, edge_{m+1})
    sup_abs: np.ndarray               # sup |component| per shell
    sup_weighted: np.ndarray          # rows k=0..3: sup |x^k * first difference|


def decay_profile(form_h: DiscreteForm, axis: int | None = None, max_power: int = 3) -> DecayProfile:
    """Per-shell sup of |components| and of monomial-weighted first differences."""
    cx = form_h.complex
    if axis is None:
        axis = _default_axis(cx)
    radius = cx.manifold.factors[axis].truncation
    edges = np.arange(0.0, np.ceil(radius) + 1.0)
    nshell = len(edges) - 1
    sup_abs = np.zeros(nshell)
    sup_w = np.zeros((max_power + 1, nshell))
    for pattern, arr in components(form_h).items():
        coord = np.abs(cx.axis_coords(axis, pattern[axis]))
        shape = arr.shape
        diff = _axis_derivative(cx, arr, axis, pattern[axis])
        cview = coord.reshape([shape[i] if i == axis else 1 for i in range(len(shape))])
        cgrid = np.broadcast_to(cview, shape)
        for m in range(nshell):
            mask = (cgrid >= edges[m]) & (cgrid < edges[m + 1])
            if not mask.any():
                continue
            sup_abs[m] = max(sup_abs[m], float(np.max(np.abs(arr[mask]))))
            for k in range(max_power + 1):
                sup_w[k, m] = max(
                    sup_w[k, m], float(np.max(np.abs((cgrid**k * diff)[mask])))
                )
    return DecayProfile(axis, edges, sup_abs, sup_w)


def envelope_excess(
    form_h: DiscreteForm,
    c: float,
    axis: int | None = None,
    lo: float = 2.0,
    hi: float = 6.0,
    log_slope: float = 8.0,
) -> float:
    """Worst excess of log|w| + (c/2) x^2 over a log-linear bound on [lo, hi].

    A Gaussian-factor form e^{-c x^2/2} times a polynomial keeps this
    quantity within slope * log(x/lo) of its value at x = lo; the returned
    excess is <= 0 when the envelope holds.
    """
    cx = form_h.complex
    if axis is None:
        axis = _default_axis(cx)
    best = {}
    peak = 0.0
    for pattern, arr in components(form_h).items():
        coord = np.abs(cx.axis_coords(axis, pattern[axis]))
        moved = np.moveaxis(arr, axis, 0)
        flat = np.abs(moved).reshape(len(coord), -1).max(axis=1)
        peak = max(peak, float(flat.max()))
        for x, v in zip(coord, flat):
            if v > best.get(x, 0.0):
                best[x] = v
    # points at round-off level carry no decay information
    floor = 1e-12 * max(peak, 1e-300)
    xs = np.array(sorted(x for x in best if lo <= x <= hi and best[x] > floor))
    if xs.size == 0:
        return float("-inf")
    ys = np.array([np.log(max(best[x], 1e-300)) + 0.5 * c * x**2 for x in xs])
    base = ys[0]
    bound = base + log_slope * np.log(xs / xs[0])
    return float(np.max(ys - bound))
