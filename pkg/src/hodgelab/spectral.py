"""Low-spectrum solves, spectral-gap certification, Hodge decomposition.

The generalized symmetric problem K x = lambda M x is solved in the
symmetrized form S = M^{-1/2} K M^{-1/2} (M is diagonal).  A dense solve
covers small dimensions; above the cutoff ARPACK shift-invert is used,
with a preconditioned LOBPCG fallback.  All paths are deterministic for a
fixed seed.

Kernel detection never guesses: a kernel count is only reported together
with a gap certificate lambda_{k+1} / max(lambda_k, tau_abs) >= tau_gap,
and a missing gap raises.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .operators import CochainComplex, DiscreteForm, OperatorHandle


class SolverError(RuntimeError):
    """Eigenvalue iteration failed to converge; carries best residuals."""

    def __init__(self, message, residuals=None):
        super().__init__(message)
        self.residuals = residuals


class NoSpectralGapError(RuntimeError):
    """The computed spectrum shows no clear gap above the would-be kernel."""


@dataclass(frozen=True)
class EigenSolveConfig:
    """Knobs for the low-spectrum solve and zero classification.

    tau_abs None means 1e-8 times the largest symmetrized diagonal.
    """

    k: int = 6
    tol: float = 1e-8
    maxiter: int = 10000
    tau_abs: float | None = None
    tau_gap: float = 1e3
    seed: int = 0
    dense_cutoff: int = 4000
    method: str = "auto"  # auto | dense | shift-invert | lobpcg

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be at least 1")
        if self.tau_abs is not None and self.tau_abs <= 0:
            raise ValueError("tau_abs must be positive")
        if self.tau_gap <= 1:
            raise ValueError("tau_gap must exceed 1")


@dataclass
class Spectrum:
    """Ascending low eigenpairs of a mass-symmetric operator.

    Eigenform columns are coefficient vectors, orthonormal in the
    operator's mass inner product.
    """

    complex: CochainComplex
    degree: int
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray  # columns, mass-orthonormal coefficients
    residuals: np.ndarray
    mass_diag: np.ndarray
    scale: float  # largest symmetrized diagonal, the zero-threshold unit
    operator_name: str = ""

    @property
    def k(self) -> int:
        return len(self.eigenvalues)

    def form(self, i: int) -> DiscreteForm:
        return DiscreteForm(self.complex, self.degree, self.eigenvectors[:, i].copy())

    def kernel_forms(self, count: int) -> list[DiscreteForm]:
        return [self.form(i) for i in range(count)]


@dataclass(frozen=True)
class GapCertificate:
    count: int
    tau_abs: float
    tau_gap: float
    gap_ratio: float
    first_above: float


def _dense_solve(s: sp.csr_matrix, k: int):
    vals, vecs = la.eigh(s.toarray())
    return vals[:k], vecs[:, :k]


def _shift_invert_solve(s: sp.csr_matrix, k: int, cfg: EigenSolveConfig):
    n = s.shape[0]
    rng = np.random.default_rng(cfg.seed)
    diag = s.diagonal()
    sigma = -max(1e-3 * float(np.median(diag)), 1e-12 * float(diag.max()), 1e-12)
    v0 = rng.standard_normal(n)
    vals, vecs = spla.eigsh(
        s.tocsc(),
        k=k,
        sigma=sigma,
        which="LM",
        v0=v0,
        tol=cfg.tol,
        maxiter=cfg.maxiter,
    )
    order = np.argsort(vals)
    return vals[order], vecs[:, order]


def _lobpcg_solve(s: sp.csr_matrix, k: int, cfg: EigenSolveConfig):
    n = s.shape[0]
    rng = np.random.default_rng(cfg.seed)
    x = rng.standard_normal((n, min(n, k + 4)))
    prec = None
    try:
        import pyamg

        shift = 1e-4 * float(np.median(s.diagonal()))
        ml = pyamg.smoothed_aggregation_solver((s + shift * sp.identity(n)).tocsr())
        prec = ml.aspreconditioner()
    except Exception:
        pass
    import warnings

    with warnings.catch_warnings():
        # accuracy advisories are redundant: residuals are re-checked and
        # Rayleigh-Ritz refined by the caller
        warnings.simplefilter("ignore", UserWarning)
        vals, vecs = spla.lobpcg(
            s, x, M=prec, tol=max(cfg.tol, 1e-12), maxiter=cfg.maxiter, largest=False
        )
    order = np.argsort(vals)[:k]
    return vals[order], vecs[:, order]


def solve_low_spectrum(op: OperatorHandle, cfg: EigenSolveConfig | None = None) -> Spectrum:
    """k smallest eigenpairs of the mass-symmetric operator."""
    cfg = cfg or EigenSolveConfig()
    s = op.symmetrized()
    n = s.shape[0]
    k = min(cfg.k, n)
    method = cfg.method
    if method == "auto":
        if n <= cfg.dense_cutoff or k >= n - 1:
            method = "dense"
        elif n <= 50_000:
            method = "shift-invert"
        else:
            # factorization fill-in is prohibitive for large 3-D operators
            method = "lobpcg"
    try:
        if method == "dense":
            vals, vecs = _dense_solve(s, k)
        elif method == "shift-invert":
            try:
                vals, vecs = _shift_invert_solve(s, k, cfg)
            except (MemoryError, RuntimeError):
                vals, vecs = _lobpcg_solve(s, k, cfg)
        elif method == "lobpcg":
            vals, vecs = _lobpcg_solve(s, k, cfg)
        else:
            raise ValueError(f"unknown solver method {cfg.method!r}")
    except spla.ArpackNoConvergence as exc:
        raise SolverError(
            f"eigensolver did not converge within {cfg.maxiter} iterations",
            residuals=getattr(exc, "eigenvalues", None),
        ) from exc
    resid = np.linalg.norm(s @ vecs - vecs * vals[None, :], axis=0)
    scale = float(s.diagonal().max())
    if np.any(resid > max(cfg.tol * max(scale, 1.0), 1e-7 * scale)):
        # one Rayleigh-quotient refinement pass for loose iterative results
        q, _ = np.linalg.qr(vecs)
        small = q.T @ (s @ q)
        w, z = la.eigh(small)
        vecs = q @ z
        vals = w
        resid = np.linalg.norm(s @ vecs - vecs * vals[None, :], axis=0)
    coeff = vecs / np.sqrt(op.mass_diag)[:, None]
    return Spectrum(
        op.complex,
        op.degree,
        np.asarray(vals, dtype=float),
        coeff,
        resid,
        op.mass_diag,
        scale,
        operator_name=op.name,
    )


def zero_threshold(spectrum: Spectrum, cfg: EigenSolveConfig) -> float:
    return cfg.tau_abs if cfg.tau_abs is not None else 1e-8 * spectrum.scale


def kernel_dimension(spectrum: Spectrum, cfg: EigenSolveConfig | None = None):
    """Kernel count with a spectral-gap certificate.

    Returns (count, GapCertificate); raises NoSpectralGapError when the
    spectrum does not separate cleanly, or when every computed eigenvalue
    sits below the threshold (kernel not exhausted by k).
    """
    cfg = cfg or EigenSolveConfig()
    tau = zero_threshold(spectrum, cfg)
    vals = spectrum.eigenvalues
    count = int(np.sum(vals < tau))
    if count >= spectrum.k:
        raise NoSpectralGapError(
            f"all {spectrum.k} computed eigenvalues are below tau_abs={tau:.3e}; "
            "request more eigenpairs"
        )
    lam_top = vals[count - 1] if count > 0 else 0.0
    ratio = vals[count] / max(lam_top, tau)
    if ratio < cfg.tau_gap:
        raise NoSpectralGapError(
            f"no clear spectral gap: lambda_{count + 1}/max(lambda_{count}, tau) "
            f"= {ratio:.3e} < tau_gap={cfg.tau_gap:.1e}"
        )
    cert = GapCertificate(count, tau, cfg.tau_gap, float(ratio), float(vals[count]))
    return count, cert


def _deflated_cg(s, z, b, tol, maxiter):
    """CG for S y = b on the orthogonal complement of the columns of z."""

    def proj(v):
        if z.shape[1]:
            return v - z @ (z.T @ v)
        return v

    b = proj(b)
    y = np.zeros_like(b)
    r = b.copy()
    p = r.copy()
    rs = float(r @ r)
    bnorm = max(np.sqrt(rs), 1e-300)
    for _ in range(maxiter):
        if np.sqrt(rs) <= tol * bnorm:
            break
        sp_ = proj(s @ p)
        alpha = rs / float(p @ sp_)
        y += alpha * p
        r -= alpha * sp_
        rs_new = float(r @ r)
        p = r + (rs_new / rs) * p
        rs = rs_new
    else:
        raise SolverError("deflated CG did not converge", residuals=np.array([np.sqrt(rs)]))
    return proj(y)


@dataclass
class HodgeParts:
    harmonic: DiscreteForm
    exact: DiscreteForm      # d(phi)
    coexact: DiscreteForm    # delta(psi)
    phi: DiscreteForm | None
    psi: DiscreteForm | None
    reconstruction_residual: float


def project_onto_kernel(form: DiscreteForm, spectrum: Spectrum, count: int) -> DiscreteForm:
    m = spectrum.mass_diag
    out = np.zeros_like(form.values)
    for i in range(count):
        w = spectrum.eigenvectors[:, i]
        out += float(np.dot(form.values * m, w)) * w
    return DiscreteForm(form.complex, form.degree, out)


def hodge_decompose(
    form: DiscreteForm,
    spectrum: Spectrum,
    op: OperatorHandle,
    cfg: EigenSolveConfig | None = None,
    cg_tol: float = 1e-10,
    cg_maxiter: int = 20000,
) -> HodgeParts:
    """Split a cochain into harmonic + d(phi) + delta(psi).

    phi and psi come from the pseudo-inverse solve on the kernel
    complement, matching the smoothed decomposition of a gapped operator.
    """
    from .operators import codifferential_mu  # local to avoid cycle noise

    cfg = cfg or EigenSolveConfig()
    count, _ = kernel_dimension(spectrum, cfg)
    cx = form.complex
    p = form.degree
    harm = project_onto_kernel(form, spectrum, count)
    resid = form.values - harm.values
    sqm = np.sqrt(op.mass_diag)
    s = op.symmetrized()
    z = sqm[:, None] * spectrum.eigenvectors[:, :count]
    y = _deflated_cg(s, z, sqm * resid, cg_tol, cg_maxiter)
    u = y / sqm
    delta_p = codifferential_mu(cx, p)
    phi = dpart = None
    if p > 0:
        phi_vals = delta_p @ u
        phi = DiscreteForm(cx, p - 1, phi_vals)
        dpart = DiscreteForm(cx, p, cx.coboundary(p - 1).astype(float) @ phi_vals)
    else:
        dpart = DiscreteForm(cx, p, np.zeros_like(form.values))
    if p < cx.n:
        psi_vals = cx.coboundary(p).astype(float) @ u
        psi = DiscreteForm(cx, p + 1, psi_vals)
        delta_up = codifferential_mu(cx, p + 1)
        copart = DiscreteForm(cx, p, delta_up @ psi_vals)
    else:
        psi = None
        copart = DiscreteForm(cx, p, np.zeros_like(form.values))
    total = harm.values + dpart.values + copart.values
    err = total - form.values
    rr = float(np.sqrt(np.dot(err * op.mass_diag, err)))
    return HodgeParts(harm, dpart, copart, phi, psi, rr)
