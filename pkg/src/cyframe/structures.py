"""Almost complex structures, taming forms, metrics, unitary coframes.

An almost complex structure :math:`J` on the torus is stored by its real
matrix field :math:`J^a{}_b` (acting on coordinate vector components), a
2-form :math:`\\Omega` by its antisymmetric component field
:math:`\\Omega_{ab}`, and a Riemannian metric :math:`g` by its symmetric one.
The central constructions:

* generated families ``J = e^{H} J_0 e^{-H}`` with :math:`H(x)` a truncated
  Fourier matrix field.  Generators valued in the Lie algebra of the linear
  symplectic group of :math:`\\omega_0` keep :math:`\\omega_0` compatible
  (hence produce almost-Kahler, generically non-integrable structures);
  unconstrained generators produce structures that small perturbations of
  :math:`\\omega_0` merely tame,
* ``g(X, Y) = (\\Omega(X, JY) + \\Omega(Y, JX))/2``, the metric induced by a
  taming form, which is J-invariant for any :math:`\\Omega` and positive
  exactly when :math:`\\Omega` tames :math:`J`,
* global unitary (1,0)-coframes built by projecting coordinate differentials
  to type (1,0) and Gram-Schmidt orthonormalizing in the metric's Hermitian
  inner product, with a fixed ascending pivot order.

The coframe convention matches the flat model
:math:`\\theta^1 = (dx_1 + i\\,dx_2)/\\sqrt2`,
:math:`\\theta^2 = (dx_3 + i\\,dx_4)/\\sqrt2`, and the metric reconstructs as
:math:`g = \\sum_i \\theta^i \\otimes \\bar\\theta^i + \\bar\\theta^i \\otimes
\\theta^i`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from cyframe import forms
from cyframe.accel import (batch_inverse, expm_pade13, field_matmul,
                           field_pair, frobenius_sq)
from cyframe.grid import GridSpec, coordinate_gradient, sup_norm, trig_field

__all__ = [
    "AlmostComplexStructure",
    "TwoForm",
    "HermitianMetric",
    "UnitaryCoframe",
    "TamingReport",
    "ClassificationReport",
    "standard_complex_structure",
    "standard_symplectic_form",
    "build_acs",
    "check_taming",
    "metric_from_taming",
    "fundamental_form",
    "build_unitary_coframe",
    "pq_project",
    "nijenhuis_real",
    "nijenhuis_frame_block",
    "classify",
]

_ATOL = 1e-12


def _mat_field(grid: GridSpec, name: str, M: np.ndarray,
               square: bool = True) -> np.ndarray:
    M = np.asarray(M)
    d = grid.dim
    want = (d, d) + grid.shape
    if M.shape != want:
        raise ValueError(f"{name} must have shape {want}, got {M.shape}")
    if not np.all(np.isfinite(M)):
        raise ValueError(f"{name} contains non-finite values")
    return M


def _lin(M: np.ndarray) -> np.ndarray:
    """Move the two matrix axes last so numpy's stacked linalg applies."""
    return np.moveaxis(M, (0, 1), (-2, -1))


def _unlin(M: np.ndarray) -> np.ndarray:
    return np.ascontiguousarray(np.moveaxis(M, (-2, -1), (0, 1)))


# ---------------------------------------------------------------------------
# domain types


@dataclass(frozen=True)
class AlmostComplexStructure:
    """Real matrix field :math:`J^a{}_b` with :math:`J^2 = -\\mathrm{id}`."""

    grid: GridSpec
    J: np.ndarray

    def __post_init__(self):
        J = _mat_field(self.grid, "J", self.J)
        if np.iscomplexobj(J):
            raise ValueError("J must be a real matrix field")
        jj = np.einsum("ac...,cb...->ab...", J, J)
        eye = np.eye(self.grid.dim).reshape(
            (self.grid.dim, self.grid.dim) + (1,) * self.grid.dim)
        defect = sup_norm(jj + eye)
        if defect > 1e-11:
            raise ValueError(f"J^2 + id has sup norm {defect:.3e} > 1e-11")
        object.__setattr__(self, "J", J)

    def apply(self, vec: np.ndarray) -> np.ndarray:
        """``(JX)^a = J^a{}_b X^b`` for a coordinate vector field."""
        return np.einsum("ab...,b...->a...", self.J, vec)


@dataclass(frozen=True)
class TwoForm:
    """Antisymmetric component field :math:`\\Omega_{ab}`."""

    grid: GridSpec
    omega: np.ndarray

    def __post_init__(self):
        om = _mat_field(self.grid, "omega", self.omega)
        if np.iscomplexobj(om):
            raise ValueError("two-form components must be real")
        skew = sup_norm(om + np.swapaxes(om, 0, 1))
        if skew > _ATOL * max(sup_norm(om), 1.0):
            raise ValueError(f"two-form is not antisymmetric (defect {skew:.3e})")
        object.__setattr__(self, "omega", om)

    def closedness_defect(self) -> float:
        """Sup-norm of :math:`d\\Omega` (0 for symplectic data)."""
        return sup_norm(forms.exterior_derivative(self.omega, self.grid))


@dataclass(frozen=True)
class HermitianMetric:
    """Symmetric positive matrix field :math:`g_{ab}`, J-invariant."""

    grid: GridSpec
    g: np.ndarray

    def __post_init__(self):
        g = _mat_field(self.grid, "g", self.g)
        if np.iscomplexobj(g):
            raise ValueError("metric components must be real")
        sym = sup_norm(g - np.swapaxes(g, 0, 1))
        if sym > _ATOL * max(sup_norm(g), 1.0):
            raise ValueError(f"metric is not symmetric (defect {sym:.3e})")
        # positivity by Cholesky (an order of magnitude cheaper than a full
        # eigendecomposition on large grids); the failing eigenvalue is only
        # computed for the error message
        try:
            np.linalg.cholesky(_lin(g))
        except np.linalg.LinAlgError:
            mn = float(np.linalg.eigvalsh(_lin(g)).min())
            raise ValueError(
                f"metric is not positive (min eigenvalue {mn:.3e})")
        object.__setattr__(self, "g", g)

    def min_eigenvalue(self) -> float:
        """Smallest pointwise eigenvalue over the grid."""
        return float(np.linalg.eigvalsh(_lin(self.g)).min())

    def inverse(self) -> np.ndarray:
        return _unlin(batch_inverse(_lin(self.g)))

    def sqrt_det(self) -> np.ndarray:
        return np.sqrt(np.linalg.det(_lin(self.g)))


@dataclass(frozen=True)
class UnitaryCoframe:
    """Global unitary (1,0)-coframe rows ``P`` and dual frame rows ``Q``.

    ``theta^i = P[i, a] dx^a`` and ``e_i = Q[i, a] d/dx^a`` with
    ``theta^i(e_j) = delta^i_j``; rows are unitary for the metric's Hermitian
    pairing and of type (1,0) for the structure the frame was built from.
    """

    grid: GridSpec
    P: np.ndarray
    Q: np.ndarray
    pivots: tuple = ()
    condition: float = 1.0

    def __post_init__(self):
        n, d = self.grid.n, self.grid.dim
        for name, M in (("P", self.P), ("Q", self.Q)):
            if M.shape != (n, d) + self.grid.shape:
                raise ValueError(
                    f"{name} must have shape {(n, d) + self.grid.shape}, "
                    f"got {M.shape}")
        dual = field_matmul(self.P, self.Q.swapaxes(0, 1))
        eye = np.eye(n).reshape((n, n) + (1,) * d)
        defect = sup_norm(dual - eye)
        if defect > 1e-10:
            raise ValueError(f"P Q^T - id has sup norm {defect:.3e}")


# ---------------------------------------------------------------------------
# standard flat structures


def standard_complex_structure(grid: GridSpec) -> AlmostComplexStructure:
    """The constant structure pairing axes ``(0,1), (2,3), ...``.

    ``J0 d/dx_{2k} = d/dx_{2k+1}``.
    """
    d = grid.dim
    J0 = np.zeros((d, d))
    for k in range(grid.n):
        J0[2 * k, 2 * k + 1] = -1.0
        J0[2 * k + 1, 2 * k] = 1.0
    J = np.broadcast_to(J0.reshape((d, d) + (1,) * d),
                        (d, d) + grid.shape).copy()
    return AlmostComplexStructure(grid, J)


def standard_symplectic_form(grid: GridSpec) -> TwoForm:
    """:math:`\\omega_0 = dx_1 \\wedge dx_2 + dx_3 \\wedge dx_4 + \\dots`"""
    d = grid.dim
    om = np.zeros((d, d))
    for k in range(grid.n):
        om[2 * k, 2 * k + 1] = 1.0
        om[2 * k + 1, 2 * k] = -1.0
    return TwoForm(grid, np.broadcast_to(
        om.reshape((d, d) + (1,) * d), (d, d) + grid.shape).copy())


def _sp_basis_matrix(grid: GridSpec) -> np.ndarray:
    om = np.zeros((grid.dim, grid.dim))
    for k in range(grid.n):
        om[2 * k, 2 * k + 1] = 1.0
        om[2 * k + 1, 2 * k] = -1.0
    return om


# ---------------------------------------------------------------------------
# generated families


def build_acs(grid: GridSpec, family: str, epsilon: float,
              modes) -> AlmostComplexStructure:
    """Conjugated structure ``J = e^{eps H(x)} J_0 e^{-eps H(x)}``.

    Parameters
    ----------
    family : {"symplectic", "generic"}
        ``"symplectic"`` constrains the generator to the Lie algebra of the
        linear symplectic group of :math:`\\omega_0` (writing
        ``H = omega_0^{-1} S`` with ``S`` symmetric), so :math:`\\omega_0`
        stays compatible with ``J`` pointwise and the pair is almost-Kahler.
        ``"generic"`` places no constraint; :math:`\\omega_0` then only tames
        ``J`` for moderate amplitudes.
    epsilon : float
        Overall generator amplitude.
    modes : sequence of (i, j, kvec, amplitude, kind)
        Matrix-entry Fourier table for the generator (for the symplectic
        family the entries define the symmetric ``S``, symmetrized
        automatically).  The exponential is the fixed order-13 Pade
        scaling-and-squaring evaluation.
    """
    if family not in ("symplectic", "generic"):
        raise ValueError(f"unknown family {family!r}")
    d = grid.dim
    H = np.zeros((d, d) + grid.shape)
    for (i, j, kvec, amp, kind) in modes:
        i, j = int(i), int(j)
        if not (0 <= i < d and 0 <= j < d):
            raise ValueError(f"generator entry ({i}, {j}) out of range")
        wave = trig_field(grid, [(kvec, amp, kind)])
        if family == "symplectic":
            H[i, j] += wave
            if i != j:
                H[j, i] += wave
        else:
            H[i, j] += wave
    if family == "symplectic":
        om0 = _sp_basis_matrix(grid)
        om0_inv = np.linalg.inv(om0)
        H = np.einsum("ab,bc...->ac...", om0_inv, H)
    H = epsilon * H
    E = expm_pade13(_lin(H))
    E_inv = np.linalg.inv(E)
    J0 = np.zeros((d, d))
    for k in range(grid.n):
        J0[2 * k, 2 * k + 1] = -1.0
        J0[2 * k + 1, 2 * k] = 1.0
    J = _unlin(E @ J0 @ E_inv)
    return AlmostComplexStructure(grid, J)


# ---------------------------------------------------------------------------
# taming and the induced metric


@dataclass(frozen=True)
class TamingReport:
    """Pointwise taming and invariance diagnostics of a pair (Omega, J)."""

    min_eigenvalue: float
    invariance_residual: float
    failing_points: int
    tamed: bool
    compatible: bool


def check_taming(two_form: TwoForm, acs: AlmostComplexStructure,
                 invariance_tol: float = 1e-10) -> TamingReport:
    """Taming: positivity of the symmetric part of ``Omega(., J.)``.

    Also reports the J-invariance residual
    ``sup |Omega(J., J.) - Omega| / sup |Omega|`` separating compatible
    (almost-Kahler candidate) from merely taming forms.
    """
    om, J = two_form.omega, acs.J
    omJ = field_matmul(om, J)
    sym = 0.5 * (omJ + np.swapaxes(omJ, 0, 1))
    eigs = np.linalg.eigvalsh(_lin(sym))
    pt_min = eigs.min(axis=-1)
    mn = float(pt_min.min())
    failing = int(np.count_nonzero(pt_min <= 0.0))
    pull = forms.pullback_two_form(om, J)
    inv = sup_norm(pull - om) / max(sup_norm(om), 1e-300)
    return TamingReport(min_eigenvalue=mn, invariance_residual=float(inv),
                        failing_points=failing, tamed=mn > 0.0,
                        compatible=inv < invariance_tol)


def metric_from_taming(two_form: TwoForm,
                       acs: AlmostComplexStructure) -> HermitianMetric:
    """``g(X, Y) = (Omega(X, JY) + Omega(Y, JX)) / 2``.

    J-invariant for any 2-form; positive iff ``Omega`` tames ``J`` (the
    constructor enforces positivity).
    """
    om, J = two_form.omega, acs.J
    omJ = field_matmul(om, J)
    g = 0.5 * (omJ + np.swapaxes(omJ, 0, 1))
    metric = HermitianMetric(two_form.grid, g)
    inv_defect = sup_norm(forms.pullback_two_form(g, J) - g)
    if inv_defect > 1e-10 * max(sup_norm(g), 1.0):
        raise ValueError(
            f"induced metric lost J-invariance (defect {inv_defect:.3e})")
    return metric


def fundamental_form(metric: HermitianMetric,
                     acs: AlmostComplexStructure) -> TwoForm:
    """:math:`\\omega(X, Y) = g(JX, Y)`; inverse of ``metric_from_taming``
    on compatible pairs."""
    om = field_pair(acs.J, metric.g)
    return TwoForm(metric.grid, om)


# ---------------------------------------------------------------------------
# unitary coframes


def build_unitary_coframe(metric: HermitianMetric,
                          acs: AlmostComplexStructure,
                          keep_tol: float = 1e-6,
                          max_condition: float = 1e8) -> UnitaryCoframe:
    """Global unitary (1,0)-coframe by projection and Gram-Schmidt.

    Coordinate differentials are projected to type (1,0),
    ``pi(dx^a) = (dx^a - i J(dx^a)) / 2``, visited in ascending coordinate
    order; each is orthogonalized against the rows already kept (Hermitian
    product :math:`\\langle \\alpha, \\beta \\rangle = \\alpha\\, g^{-1}
    \\bar\\beta{}^{T}`) and kept only when its residual norm clears
    ``keep_tol`` at *every* grid point, so the pivot set is global.  A
    candidate that degenerates anywhere is skipped: ``n`` orthonormal
    accepted rows span the (1,0)-space pointwise regardless of what was
    skipped.  Rows are normalized in place, so the flat structure yields
    exactly ``(dx_1 + i dx_2)/sqrt(2), (dx_3 + i dx_4)/sqrt(2)``.

    The stacked frame matrix must stay numerically sane: condition numbers
    above ``max_condition`` abort.
    """
    grid = metric.grid
    n, d = grid.n, grid.dim
    ginv = metric.inverse()
    J = acs.J

    def herm(u, v):
        w = field_matmul(ginv, np.conj(v)[:, None])[:, 0]
        return field_pair(u[:, None], w[:, None])[0, 0]

    rows = []
    pivots = []
    for a in range(d):
        r = np.zeros((d,) + grid.shape, dtype=complex)
        r[a] = 1.0
        r = 0.5 * (r - 1j * J[a])
        for prev in rows:
            r = r - herm(r, prev) * prev
        norm2 = herm(r, r).real
        if float(norm2.min()) > keep_tol:
            rows.append(r / np.sqrt(norm2))
            pivots.append(a)
        if len(rows) == n:
            break
    if len(rows) < n:
        raise ValueError("coordinate projections span fewer than n "
                         "(1,0)-directions; cannot build a global coframe")
    P = np.stack(rows, axis=0)
    C = np.concatenate([P, np.conj(P)], axis=0)
    Clin = _lin(C)
    try:
        Minv = batch_inverse(Clin)
    except np.linalg.LinAlgError:
        raise ValueError("frame matrix is singular at some grid point")
    # Frobenius condition number normalized to 1 for unitary frames; an
    # upper bound on the 2-norm condition divided by the dimension, sharing
    # the inverse already needed for the dual frame
    fro2 = frobenius_sq(Clin)
    ifro2 = frobenius_sq(Minv)
    cond = float(np.sqrt((fro2 * ifro2).max())) / d
    if cond > max_condition:
        raise ValueError(f"frame condition number {cond:.3e} exceeds "
                         f"{max_condition:.1e}")
    Q = _unlin(np.swapaxes(Minv, -2, -1))[:n]
    return UnitaryCoframe(grid, P=np.ascontiguousarray(P),
                          Q=np.ascontiguousarray(Q),
                          pivots=tuple(pivots), condition=cond)


def pq_project(form: np.ndarray, coframe: UnitaryCoframe, p_holo: int,
               q_anti: int) -> np.ndarray:
    """Type projection of a coordinate form through a unitary coframe."""
    return forms.pq_project(form, coframe.grid, coframe.P, coframe.Q,
                            p_holo, q_anti)


# ---------------------------------------------------------------------------
# Nijenhuis tensor and classification


def nijenhuis_real(acs: AlmostComplexStructure) -> np.ndarray:
    """Real Nijenhuis tensor ``N(X, Y) = [JX, JY] - J[JX, Y] - J[X, JY] -
    [X, Y]`` on coordinate fields, as components ``N[c, a, b]``.

    Vanishes identically iff ``J`` is integrable.
    """
    grid, J = acs.grid, acs.J
    dJ = coordinate_gradient(J, grid)  # dJ[d, c, b] = d_d J^c_b
    term1 = np.einsum("da...,dcb...->cab...", J, dJ)
    term2 = np.einsum("db...,dca...->cab...", J, dJ)
    term3 = np.einsum("cd...,bda...->cab...", J, dJ)
    term4 = np.einsum("cd...,adb...->cab...", J, dJ)
    return term1 - term2 + term3 - term4


def nijenhuis_frame_block(acs: AlmostComplexStructure,
                          coframe: UnitaryCoframe) -> np.ndarray:
    """The (0,2) frame coefficients of the real Nijenhuis tensor.

    ``(1/2) theta^i(N(ebar_j, ebar_k))`` with the all-ordered-pairs 2-form
    convention; proportional to the canonical connection's (0,2) torsion by
    a fixed constant (frozen in the test suite).
    """
    nj = nijenhuis_real(acs)
    P, Q = coframe.P, coframe.Q
    return 0.5 * np.einsum("ic...,cab...,ja...,kb...->ijk...",
                           P, nj, np.conj(Q), np.conj(Q))


@dataclass(frozen=True)
class ClassificationReport:
    """Structure class of a pair, with the residuals that decided it."""

    label: str
    nijenhuis: float
    d_omega: float
    d_omega_mixed: float

    def as_dict(self):
        return {
            "label": self.label,
            "nijenhuis": self.nijenhuis,
            "d_omega": self.d_omega,
            "d_omega_mixed": self.d_omega_mixed,
        }


def classify(two_form: TwoForm, acs: AlmostComplexStructure,
             tol: float = 1e-8) -> ClassificationReport:
    """Kahler / almost-Kahler / quasi-Kahler / general classification.

    Works on the fundamental form of the induced metric: integrability is
    the real Nijenhuis sup-norm, the Kahler and almost-Kahler conditions
    are :math:`d\\omega = 0`, and the quasi-Kahler condition only requires
    the (2,1) + (1,2) part of :math:`d\\omega` to vanish (for complex
    dimension <= 2 the (3,0) + (0,3) part is identically zero, so the
    quasi-Kahler and almost-Kahler classes coincide there).
    """
    grid = two_form.grid
    g = metric_from_taming(two_form, acs)
    omega_f = fundamental_form(g, acs)
    cof = build_unitary_coframe(g, acs)
    nj = sup_norm(nijenhuis_real(acs))
    dom = forms.exterior_derivative(omega_f.omega, grid)
    dom_norm = sup_norm(dom)
    mixed = sup_norm(pq_project(dom, cof, 2, 1)) + sup_norm(
        pq_project(dom, cof, 1, 2))
    if nj < tol and dom_norm < tol:
        label = "kahler"
    elif dom_norm < tol:
        label = "almost_kahler"
    elif mixed < tol:
        label = "quasi_kahler"
    else:
        label = "general"
    return ClassificationReport(label=label, nijenhuis=float(nj),
                                d_omega=float(dom_norm),
                                d_omega_mixed=float(mixed))
