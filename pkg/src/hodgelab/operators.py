"""Discrete exterior calculus on the truncated tensor grid.

Cochains are indexed cell-by-cell (see model.enumerate_cells); a
coefficient is the integral of the form component over its cell, so a
0-form coefficient is a point value and a p-cell coefficient is
component * cell volume up to quadrature error.  Coboundary matrices are
exact signed incidence matrices with integer entries, hence d.d = 0 is an
integer identity.  Mass matrices are diagonal: for a cell with direction
set I the entry is

    density(barycenter) * prod_{j not in I} dual_j * prod_{j in I} 1/spacing_j

which makes  w^T M v  a quadrature of the weighted L^2 pairing of the
reconstructed components.  The weighted codifferential is the exact mass
adjoint  delta = M_{p-1}^{-1} D^T M_p,  so nonnegativity and adjointness
hold to round-off while eigenvalues converge at second order in the
spacing.

Boundary modes: "relative" drops every cell contained in the truncation
boundary (growth weights, c > 0); "absolute" keeps them (decay weights,
c < 0, where constants are square integrable).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import reduce

import numpy as np
import scipy.sparse as sp

from .model import (
    ABSOLUTE,
    LINE,
    RELATIVE,
    DegreeError,
    InvalidSpecError,
    ManifoldSpec,
    axis_cell_count,
    build_factor_grid,
    degree_patterns,
    weight_fields,
)


class WeightOverflowError(FloatingPointError):
    """The pointwise factor e^h cannot be represented; assemble in the
    weighted picture instead."""


def default_mode(m: ManifoldSpec) -> str:
    """Relative boundary cells for growth weights, absolute for decay."""
    signs = {np.sign(f.c) for f in m.factors if f.kind == LINE and f.c != 0.0}
    if signs == {1.0}:
        return RELATIVE
    if signs == {-1.0}:
        return ABSOLUTE
    if not signs:
        return ABSOLUTE
    raise InvalidSpecError(
        "mixed weight signs: pass an explicit boundary mode"
    )


class CochainComplex:
    """Coboundaries, masses and cell bookkeeping for one model and mode."""

    def __init__(self, manifold: ManifoldSpec, mode: str | None = None):
        if mode is not None and mode not in (RELATIVE, ABSOLUTE):
            raise InvalidSpecError(f"unknown boundary mode {mode!r}")
        self.manifold = manifold
        self.mode = mode if mode is not None else default_mode(manifold)
        self.grids = [build_factor_grid(f) for f in manifold.factors]
        self.weight = weight_fields(manifold)
        self._cob: dict[int, sp.csr_matrix] = {}
        self._mass: dict[tuple[int, str], np.ndarray] = {}

    @property
    def n(self) -> int:
        return self.manifold.n

    # -- per-axis data -------------------------------------------------

    def axis_size(self, axis: int, extent: int) -> int:
        return axis_cell_count(self.manifold.factors[axis], extent, self.mode)

    def axis_coords(self, axis: int, extent: int) -> np.ndarray:
        """Barycenter coordinates of the 1-D cells along one axis."""
        g = self.grids[axis]
        if extent == 1:
            if g.periodic:
                return g.nodes + 0.5 * g.spacing
            return g.nodes[:-1] + 0.5 * g.spacing
        if g.periodic or self.mode == ABSOLUTE:
            return g.nodes if g.periodic else g.nodes
        return g.nodes[1:-1]

    def axis_quad(self, axis: int, extent: int) -> np.ndarray:
        """Quadrature length per 1-D cell (dual length for vertices)."""
        g = self.grids[axis]
        m = self.axis_size(axis, extent)
        w = np.full(m, g.spacing)
        if extent == 0 and not g.periodic and self.mode == ABSOLUTE:
            w[0] = w[-1] = 0.5 * g.spacing
        return w

    # -- pattern bookkeeping --------------------------------------------

    def pattern_shape(self, pattern) -> tuple[int, ...]:
        return tuple(self.axis_size(a, e) for a, e in enumerate(pattern))

    def num_cells(self, p: int) -> int:
        return sum(
            int(np.prod(self.pattern_shape(q))) for q in degree_patterns(self.n, p)
        )

    def pattern_slices(self, p: int) -> dict[tuple[int, ...], slice]:
        out = {}
        off = 0
        for q in degree_patterns(self.n, p):
            size = int(np.prod(self.pattern_shape(q)))
            out[q] = slice(off, off + size)
            off += size
        return out

    def cell_volume(self, pattern) -> float:
        """Euclidean volume of a cell of this direction set (uniform)."""
        v = 1.0
        for a, e in enumerate(pattern):
            if e:
                v *= self.grids[a].spacing
        return v

    def pattern_coords(self, pattern) -> list[np.ndarray]:
        return [self.axis_coords(a, e) for a, e in enumerate(pattern)]

    def pattern_meshes(self, pattern) -> list[np.ndarray]:
        return np.meshgrid(*self.pattern_coords(pattern), indexing="ij")

    def barycenter_h(self, pattern) -> np.ndarray:
        """h at the barycenters of one pattern, in position layout."""
        axes = [
            self.weight.axis_h(a, self.axis_coords(a, e))
            for a, e in enumerate(pattern)
        ]
        return reduce(np.add.outer, axes)

    def h_vector(self, p: int) -> np.ndarray:
        """h at all p-cell barycenters, concatenated in cell order."""
        parts = [
            self.barycenter_h(q).ravel() for q in degree_patterns(self.n, p)
        ]
        return np.concatenate(parts)

    # -- coboundary -----------------------------------------------------

    def _axis_d(self, axis: int) -> sp.csr_matrix:
        """Signed 1-D incidence from vertices to edges on one axis."""
        g = self.grids[axis]
        f = self.manifold.factors[axis]
        n = f.subdivisions
        if g.periodic:
            rows, cols, vals = [], [], []
            for e in range(n):
                rows += [e, e]
                cols += [e, (e + 1) % n]
                vals += [-1, 1]
            return sp.csr_matrix((vals, (rows, cols)), shape=(n, n), dtype=np.int64)
        if self.mode == ABSOLUTE:
            rows = np.repeat(np.arange(n), 2)
            cols = np.column_stack([np.arange(n), np.arange(1, n + 1)]).ravel()
            vals = np.tile([-1, 1], n)
            return sp.csr_matrix((vals, (rows, cols)), shape=(n, n + 1), dtype=np.int64)
        rows, cols, vals = [], [], []
        for e in range(n):
            if e >= 1:
                rows.append(e), cols.append(e - 1), vals.append(-1)
            if e <= n - 2:
                rows.append(e), cols.append(e), vals.append(1)
        return sp.csr_matrix((vals, (rows, cols)), shape=(n, n - 1), dtype=np.int64)

    def coboundary(self, p: int) -> sp.csr_matrix:
        """Integer incidence matrix from p-cochains to (p+1)-cochains."""
        if not 0 <= p <= self.n:
            raise DegreeError(f"degree {p} out of range 0..{self.n}")
        if p in self._cob:
            return self._cob[p]
        n = self.n
        if p == n:
            d = sp.csr_matrix((0, self.num_cells(n)), dtype=np.int64)
            self._cob[p] = d
            return d
        src = degree_patterns(n, p)
        dst = degree_patterns(n, p + 1)
        blocks = []
        for J in dst:
            row = []
            for I in src:
                extra = [a for a in range(n) if J[a] and not I[a]]
                if len(extra) == 1 and all(J[a] >= I[a] for a in range(n)):
                    j = extra[0]
                    sign = (-1) ** sum(J[:j])
                    mats = [
                        self._axis_d(a)
                        if a == j
                        else sp.identity(self.axis_size(a, J[a]), dtype=np.int64, format="csr")
                        for a in range(n)
                    ]
                    row.append(sign * reduce(lambda x, y: sp.kron(x, y, format="csr"), mats))
                else:
                    row.append(None)
            blocks.append(row)
        d = sp.bmat(blocks, format="csr").astype(np.int64)
        self._cob[p] = d
        return d

    # -- mass -----------------------------------------------------------

    def mass(self, p: int, measure: str = "mu") -> np.ndarray:
        """Diagonal of the weighted (or unweighted) mass matrix on p-cells."""
        if measure not in ("mu", "dx"):
            raise InvalidSpecError(f"unknown measure {measure!r}")
        key = (p, measure)
        if key in self._mass:
            return self._mass[key]
        parts = []
        for pattern in degree_patterns(self.n, p):
            axes = []
            for a, e in enumerate(pattern):
                w = self.axis_quad(a, e).astype(float)
                if e:
                    w = w / self.grids[a].spacing ** 2
                if measure == "mu":
                    two_h = 2.0 * self.weight.axis_h(a, self.axis_coords(a, e))
                    if np.max(np.abs(two_h)) > 700.0:
                        raise WeightOverflowError(
                            "weighted mass overflows at this truncation; use the "
                            "direct unweighted-picture assembly or shrink the box"
                        )
                    w = w * np.exp(two_h)
                axes.append(w)
            parts.append(reduce(np.multiply.outer, axes).ravel())
        m = np.concatenate(parts)
        self._mass[key] = m
        return m


# -- forms ---------------------------------------------------------------


@dataclass
class DiscreteForm:
    """A degree-p cochain over the active boundary mode."""

    complex: CochainComplex
    degree: int
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        expect = self.complex.num_cells(self.degree)
        if self.values.shape != (expect,):
            raise InvalidSpecError(
                f"coefficient array has length {self.values.shape}, expected ({expect},)"
            )

    def copy(self) -> "DiscreteForm":
        return DiscreteForm(self.complex, self.degree, self.values.copy())


def components(form: DiscreteForm) -> dict[tuple[int, ...], np.ndarray]:
    """Pattern-wise component arrays (coefficients divided by cell volume)."""
    cx = form.complex
    out = {}
    for pattern, sl in cx.pattern_slices(form.degree).items():
        arr = form.values[sl].reshape(cx.pattern_shape(pattern))
        out[pattern] = arr / cx.cell_volume(pattern)
    return out


def form_from_components(
    cx: CochainComplex, p: int, comps: dict[tuple[int, ...], np.ndarray]
) -> DiscreteForm:
    parts = []
    for pattern in degree_patterns(cx.n, p):
        arr = comps.get(pattern)
        if arr is None:
            arr = np.zeros(cx.pattern_shape(pattern))
        parts.append(np.asarray(arr, dtype=float).ravel() * cx.cell_volume(pattern))
    return DiscreteForm(cx, p, np.concatenate(parts))


def sample_form(cx: CochainComplex, p: int, funcs: dict) -> DiscreteForm:
    """Cochain of a smooth form given by per-pattern component callables.

    Each callable receives the barycenter meshgrids (indexing='ij');
    missing patterns sample to zero.
    """
    comps = {}
    for pattern in degree_patterns(cx.n, p):
        f = funcs.get(pattern)
        if f is not None:
            comps[pattern] = np.asarray(f(*cx.pattern_meshes(pattern)), dtype=float)
    return form_from_components(cx, p, comps)


def inner(u: DiscreteForm, v: DiscreteForm, measure: str = "mu") -> float:
    if u.degree != v.degree or u.complex is not v.complex:
        raise InvalidSpecError("inner product needs forms of one degree on one complex")
    m = u.complex.mass(u.degree, measure)
    return float(np.dot(u.values * m, v.values))


def norm(u: DiscreteForm, measure: str = "mu") -> float:
    return float(np.sqrt(max(inner(u, u, measure), 0.0)))


# -- operators -------------------------------------------------------------


@dataclass
class OperatorHandle:
    """A mass-symmetric operator A = M^{-1} K on p-cochains.

    K is the (symmetric, PSD) stiffness matrix; M is the diagonal mass the
    operator is self-adjoint against, so its spectrum is that of
    M^{-1/2} K M^{-1/2}.
    """

    complex: CochainComplex
    degree: int
    stiffness: sp.csr_matrix
    mass_diag: np.ndarray
    name: str = ""
    _sym: sp.csr_matrix | None = field(default=None, repr=False)

    @property
    def dim(self) -> int:
        return self.mass_diag.shape[0]

    def apply(self, values: np.ndarray) -> np.ndarray:
        return (self.stiffness @ np.asarray(values, dtype=float)) / self.mass_diag

    def apply_form(self, form: DiscreteForm) -> DiscreteForm:
        return DiscreteForm(self.complex, self.degree, self.apply(form.values))

    def quad_form(self, values: np.ndarray) -> float:
        """<A w, w> in the operator's own inner product = w^T K w."""
        v = np.asarray(values, dtype=float)
        return float(v @ (self.stiffness @ v))

    def symmetrized(self) -> sp.csr_matrix:
        """M^{-1/2} K M^{-1/2}; shares the operator's spectrum."""
        if self._sym is None:
            r = 1.0 / np.sqrt(self.mass_diag)
            s = sp.diags(r) @ self.stiffness @ sp.diags(r)
            self._sym = ((s + s.T) * 0.5).tocsr()
        return self._sym

    def symmetry_defect(self, rng: np.random.Generator | None = None, probes: int = 4) -> float:
        """Max relative asymmetry |u K v - v K u| on random probes."""
        rng = rng or np.random.default_rng(0)
        kmax = max(abs(self.stiffness).max(), 1e-300)
        worst = 0.0
        for _ in range(probes):
            u = rng.standard_normal(self.dim)
            v = rng.standard_normal(self.dim)
            a = float(u @ (self.stiffness @ v))
            b = float(v @ (self.stiffness @ u))
            worst = max(worst, abs(a - b) / (kmax * self.dim))
        return worst


def codifferential_mu(cx: CochainComplex, p: int, measure: str = "mu") -> sp.csr_matrix:
    """Exact mass adjoint of d: p-cochains to (p-1)-cochains.

    Degree 0 returns the empty (zero) map.
    """
    if not 0 <= p <= cx.n:
        raise DegreeError(f"degree {p} out of range 0..{cx.n}")
    if p == 0:
        return sp.csr_matrix((0, cx.num_cells(0)))
    d = cx.coboundary(p - 1).astype(float)
    return sp.diags(1.0 / cx.mass(p - 1, measure)) @ d.T @ sp.diags(cx.mass(p, measure))


def _stiffness(cx: CochainComplex, p: int, measure: str) -> sp.csr_matrix:
    np_cells = cx.num_cells(p)
    k = sp.csr_matrix((np_cells, np_cells))
    if p < cx.n:
        d = cx.coboundary(p).astype(float)
        k = k + d.T @ sp.diags(cx.mass(p + 1, measure)) @ d
    if p > 0:
        dm = cx.coboundary(p - 1).astype(float)
        c = dm.T @ sp.diags(cx.mass(p, measure))
        k = k + c.T @ sp.diags(1.0 / cx.mass(p - 1, measure)) @ c
    return k.tocsr()


def laplacian_mu(cx: CochainComplex, p: int) -> OperatorHandle:
    """The weighted Hodge Laplacian d delta + delta d on p-cochains."""
    return OperatorHandle(
        cx, p, _stiffness(cx, p, "mu"), cx.mass(p, "mu"), name=f"laplacian_mu^{p}"
    )


def conjugate_to_h(op: OperatorHandle) -> OperatorHandle:
    """Push a mu-symmetric operator to the unweighted picture by e^h.

    The conjugated operator is symmetric against the unweighted mass and
    shares the spectrum of the input exactly (similarity by a diagonal).
    """
    cx = op.complex
    h = cx.h_vector(op.degree)
    if np.max(np.abs(h)) > 300.0:
        raise WeightOverflowError(
            "e^h overflows at this truncation; assemble laplacian_h_direct instead"
        )
    u_inv = sp.diags(np.exp(-h))
    k = (u_inv @ op.stiffness @ u_inv).tocsr()
    return OperatorHandle(cx, op.degree, k, cx.mass(op.degree, "dx"), name=op.name + "|h")


def conjugate_form(form: DiscreteForm, sign: int = 1) -> DiscreteForm:
    """Multiply coefficients by e^{sign*h} (mu picture <-> unweighted picture)."""
    h = form.complex.h_vector(form.degree)
    return DiscreteForm(form.complex, form.degree, form.values * np.exp(sign * h))


def zero_order_potential(cx: CochainComplex, p: int) -> np.ndarray:
    """Diagonal potential of the direct unweighted-picture assembly.

    For a cell with direction set I the entry is
    sum_j c_j^2 x_j^2 + sum_j c_j * (-1 if j in I else +1), which on the
    all-ones weight reduces to |x|^2 + n - 2p.
    """
    cs = cx.manifold.weight_exponents
    parts = []
    for pattern in degree_patterns(cx.n, p):
        axes = [cs[a] ** 2 * cx.axis_coords(a, e) ** 2 for a, e in enumerate(pattern)]
        quad = reduce(np.add.outer, axes)
        const = sum(c * (-1.0 if e else 1.0) for c, e in zip(cs, pattern))
        parts.append((quad + const).ravel())
    return np.concatenate(parts)


def laplacian_h_direct(cx: CochainComplex, p: int) -> OperatorHandle:
    """Unweighted Laplacian plus the oscillator potential, assembled directly.

    Valid for the quadratic weights of this model class only.
    """
    v = zero_order_potential(cx, p)
    mdx = cx.mass(p, "dx")
    k = _stiffness(cx, p, "dx") + sp.diags(mdx * v)
    return OperatorHandle(cx, p, k.tocsr(), mdx, name=f"laplacian_h_direct^{p}")


# -- Hodge star ------------------------------------------------------------


def _perm_sign(seq) -> int:
    inv = 0
    seq = list(seq)
    for i in range(len(seq)):
        for j in range(i + 1, len(seq)):
            if seq[i] > seq[j]:
                inv += 1
    return -1 if inv % 2 else 1


def _axis_resample(cx: CochainComplex, axis: int, from_extent: int) -> sp.csr_matrix:
    """Linear resampling between the vertex and edge sample grids of one axis.

    Relative mode treats the dropped boundary vertices as zeros.
    """
    g = cx.grids[axis]
    f = cx.manifold.factors[axis]
    n = f.subdivisions
    if from_extent == 0:
        nv = cx.axis_size(axis, 0)
        rows, cols, vals = [], [], []
        if g.periodic:
            for e in range(n):
                rows += [e, e]
                cols += [e, (e + 1) % n]
                vals += [0.5, 0.5]
        elif cx.mode == ABSOLUTE:
            for e in range(n):
                rows += [e, e]
                cols += [e, e + 1]
                vals += [0.5, 0.5]
        else:
            for e in range(n):
                if e >= 1:
                    rows.append(e), cols.append(e - 1), vals.append(0.5)
                if e <= n - 2:
                    rows.append(e), cols.append(e), vals.append(0.5)
        return sp.csr_matrix((vals, (rows, cols)), shape=(n, nv))
    nv = cx.axis_size(axis, 0)
    rows, cols, vals = [], [], []
    if g.periodic:
        for k in range(n):
            rows += [k, k]
            cols += [(k - 1) % n, k]
            vals += [0.5, 0.5]
    elif cx.mode == ABSOLUTE:
        rows.append(0), cols.append(0), vals.append(1.0)
        for k in range(1, n):
            rows += [k, k]
            cols += [k - 1, k]
            vals += [0.5, 0.5]
        rows.append(n), cols.append(n - 1), vals.append(1.0)
    else:
        for k in range(nv):
            v = k + 1
            rows += [k, k]
            cols += [v - 1, v]
            vals += [0.5, 0.5]
    return sp.csr_matrix((vals, (rows, cols)), shape=(nv, n))


def hodge_star(cx: CochainComplex, p: int) -> sp.csr_matrix:
    """Matrix of the metric Hodge star from p-cochains to (n-p)-cochains.

    The permutation sign is exact; component values are resampled between
    the staggered barycenter grids by per-axis linear interpolation.
    """
    if not 0 <= p <= cx.n:
        raise DegreeError(f"degree {p} out of range 0..{cx.n}")
    n = cx.n
    src = degree_patterns(n, p)
    dst = degree_patterns(n, n - p)
    dst_index = {q: i for i, q in enumerate(dst)}
    blocks = [[None] * len(src) for _ in dst]
    for ci, I in enumerate(src):
        Ic = tuple(1 - e for e in I)
        axes_i = [a for a in range(n) if I[a]]
        axes_c = [a for a in range(n) if Ic[a]]
        sign = _perm_sign(axes_i + axes_c)
        scale = sign * cx.cell_volume(Ic) / cx.cell_volume(I)
        mats = [_axis_resample(cx, a, I[a]) for a in range(n)]
        block = scale * reduce(lambda x, y: sp.kron(x, y, format="csr"), mats)
        blocks[dst_index[Ic]][ci] = block
    return sp.bmat(blocks, format="csr")


def apply_star(form: DiscreteForm) -> DiscreteForm:
    star = hodge_star(form.complex, form.degree)
    return DiscreteForm(
        form.complex, form.complex.n - form.degree, star @ form.values
    )
