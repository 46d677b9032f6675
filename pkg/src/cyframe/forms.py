"""Coordinate exterior algebra and frame/type decompositions.

Differential forms are stored by their coordinate components: a ``p``-form is
an array with ``p`` leading axes of size ``2n`` (antisymmetric) followed by
the grid axes, with the determinant convention

.. math::

    (\\alpha \\wedge \\beta)(X_1, \\dots, X_{p+q})
      = \\sum_{\\sigma \\in \\mathrm{Sh}(p,q)} \\mathrm{sgn}(\\sigma)\\,
        \\alpha(X_{\\sigma(1)}, \\dots)\\, \\beta(X_{\\sigma(p+1)}, \\dots),

so components are plain evaluations, ``gamma[a, b] = gamma(e_a, e_b)``, and a
2-form written as :math:`c_{ij}\\,\\theta^i \\wedge \\theta^j` over *all*
ordered index pairs with antisymmetric :math:`c` has
:math:`c_{ij} = \\tfrac12\\,\\gamma(e_i, e_j)`, while mixed
:math:`(1,1)` coefficients of :math:`\\theta^i \\wedge \\bar\\theta^j` carry
no factor.  Type decomposition is performed by transforming every slot into a
complex frame basis and masking blocks by their antiholomorphic index count.
"""

from __future__ import annotations

import itertools

import numpy as np

from cyframe import accel
from cyframe.grid import GridSpec, coordinate_gradient

__all__ = [
    "form_degree",
    "exterior_derivative",
    "wedge",
    "contract_first_slot",
    "apply_j_covector",
    "pullback_two_form",
    "anti_invariant_part",
    "frame_components",
    "from_frame_components",
    "pq_project",
    "top_density",
    "antisymmetry_defect",
]


def form_degree(form: np.ndarray, grid: GridSpec) -> int:
    deg = form.ndim - grid.dim
    if deg < 0 or form.shape[:deg] != (grid.dim,) * deg:
        raise ValueError(
            f"array of shape {form.shape} is not a coordinate form on a "
            f"{grid.dim}-torus"
        )
    return deg


def exterior_derivative(form: np.ndarray, grid: GridSpec) -> np.ndarray:
    """Exterior derivative of a coordinate ``p``-form (``p <= 3``).

    ``(d\\gamma)_{a_0 \\dots a_p} = \\sum_k (-1)^k
    \\partial_{a_k} \\gamma_{a_0 \\dots \\widehat{a_k} \\dots a_p}``.
    """
    p = form_degree(form, grid)
    grad = coordinate_gradient(form, grid)  # (2n,) + form.shape
    if p == 0:
        return grad
    if p == 1:
        return grad - np.swapaxes(grad, 0, 1)
    out = np.zeros((grid.dim,) * (p + 1) + grid.shape, dtype=grad.dtype)
    for k in range(p + 1):
        # derivative axis moved into slot position k
        term = np.moveaxis(grad, 0, k)
        out += term if k % 2 == 0 else -term
    return out


def wedge(alpha: np.ndarray, beta: np.ndarray, grid: GridSpec) -> np.ndarray:
    """Wedge product of two coordinate forms (total degree ``<= 2n``)."""
    p = form_degree(alpha, grid)
    q = form_degree(beta, grid)
    r = p + q
    if r > grid.dim:
        raise ValueError(f"wedge degree {r} exceeds torus dimension {grid.dim}")
    if p == 0 or q == 0:
        return alpha * beta  # scalar factor broadcasts over trailing axes
    if p == 1 and q == 1:
        outer = np.einsum("a...,b...->ab...", alpha, beta)
        return outer - np.swapaxes(outer, 0, 1)
    dtype = np.result_type(alpha.dtype, beta.dtype)
    out = np.zeros((grid.dim,) * r + grid.shape, dtype=dtype)
    # outer product, alpha slots first; grid axes broadcast
    sub_a = "abcd"[:p]
    sub_b = "efgh"[:q]
    outer = np.einsum(f"{sub_a}...,{sub_b}...->{sub_a}{sub_b}...",
                      alpha, beta)
    for comb in itertools.combinations(range(r), p):
        rest = tuple(i for i in range(r) if i not in comb)
        perm = comb + rest
        inv = sum(1 for i in range(r) for j in range(i + 1, r)
                  if perm[i] > perm[j])
        sign = -1.0 if inv % 2 else 1.0
        out += sign * np.moveaxis(outer, range(r), perm)
    return out


def contract_first_slot(form: np.ndarray, vec: np.ndarray,
                        grid: GridSpec) -> np.ndarray:
    """Interior product: plug the vector field into the first slot."""
    p = form_degree(form, grid)
    if p == 0:
        raise ValueError("cannot contract a 0-form")
    sub = "abcd"[:p]
    return np.einsum(f"{sub}...,a...->{sub[1:]}...", form, vec)


def apply_j_covector(alpha: np.ndarray, J: np.ndarray) -> np.ndarray:
    """``(J\\alpha)(X) = \\alpha(JX)``, i.e. ``(J\\alpha)_a = \\alpha_b J^b_a``."""
    return np.einsum("b...,ba...->a...", alpha, J)


def pullback_two_form(gamma: np.ndarray, J: np.ndarray) -> np.ndarray:
    """``(J^*\\gamma)(X, Y) = \\gamma(JX, JY)``."""
    # (J^T gamma) J, one contraction at a time
    return accel.field_matmul(accel.field_pair(J, gamma), J)


def anti_invariant_part(gamma: np.ndarray, J: np.ndarray) -> np.ndarray:
    """The projection ``P(gamma)(X, Y) = (gamma(X, Y) - gamma(JX, JY)) / 2``.

    This kills the (1,1) part of a 2-form and keeps the (2,0) + (0,2) part.
    """
    return 0.5 * (gamma - pullback_two_form(gamma, J))


# ---------------------------------------------------------------------------
# frame components and (p, q) projection
#
# The complex frame basis stacks the holomorphic frame vectors e_i (rows of
# Q) above their conjugates, and the coframe stacks theta^i (rows of P) above
# conjugates.  Covariant slots transform by evaluation on the frame vectors.


def _frame_vectors(P: np.ndarray, Q: np.ndarray) -> np.ndarray:
    return np.concatenate([Q, np.conj(Q)], axis=0)


def _frame_covectors(P: np.ndarray, Q: np.ndarray) -> np.ndarray:
    return np.concatenate([P, np.conj(P)], axis=0)


_SLOT_SPECS = {
    1: "Aa...,a...->A...",
    2: "Aa...,Bb...,ab...->AB...",
    3: "Aa...,Bb...,Cc...,abc...->ABC...",
}


def frame_components(form: np.ndarray, grid: GridSpec, P: np.ndarray,
                     Q: np.ndarray) -> np.ndarray:
    """Evaluate a coordinate form on all tuples of complex frame vectors.

    Index values ``0..n-1`` are holomorphic slots (:math:`e_i`) and
    ``n..2n-1`` antiholomorphic (:math:`\\bar e_i`); the result of degree
    ``p <= 3`` has ``p`` leading axes of size ``2n``.
    """
    p = form_degree(form, grid)
    if p == 0:
        return form.astype(complex)
    if p not in _SLOT_SPECS:
        raise ValueError(f"frame components implemented for degree <= 3, "
                         f"got {p}")
    W = _frame_vectors(P, Q)
    fc = form.astype(complex)
    if p == 1:
        return np.ascontiguousarray(accel.field_matmul(W, fc[:, None])[:, 0])
    if p == 2:
        # contract one slot at a time: (ab)(bB) -> aB, then (Aa)(aB) -> AB
        return np.ascontiguousarray(
            accel.field_matmul(W, accel.field_matmul(fc, W.swapaxes(0, 1))))
    args = [W] * p + [fc]
    return np.ascontiguousarray(
        np.einsum(_SLOT_SPECS[p], *args, optimize=True))


def from_frame_components(comp: np.ndarray, grid: GridSpec, P: np.ndarray,
                          Q: np.ndarray) -> np.ndarray:
    """Inverse of :func:`frame_components`."""
    p = comp.ndim - grid.dim
    if p == 0:
        return comp
    if p not in _SLOT_SPECS:
        raise ValueError(f"frame components implemented for degree <= 3, "
                         f"got {p}")
    # the coordinate components are recovered by summing the coframe rows:
    # same contraction pattern with the roles of the index pairs swapped
    C = _frame_covectors(P, Q)
    if p == 1:
        return np.ascontiguousarray(accel.field_pair(C, comp[:, None])[:, 0])
    if p == 2:
        # (A a)(A B) -> aB, then (aB)(B b) -> ab
        return np.ascontiguousarray(
            accel.field_matmul(accel.field_pair(C, comp), C))
    spec = {3: "Aa...,Bb...,Cc...,ABC...->abc..."}[p]
    args = [C] * p + [comp]
    return np.ascontiguousarray(np.einsum(spec, *args, optimize=True))


def pq_project(form: np.ndarray, grid: GridSpec, P: np.ndarray,
               Q: np.ndarray, p_holo: int, q_anti: int) -> np.ndarray:
    """The ``(p, q)`` part of a coordinate form of degree ``p + q <= 3``.

    Slots are transformed to the complex frame basis, every block whose
    antiholomorphic index count differs from ``q_anti`` is zeroed, and the
    survivor is transformed back.  Summing over all ``(p, q)`` with
    ``p + q = deg`` reproduces the form exactly.
    """
    deg = form_degree(form, grid)
    if p_holo + q_anti != deg:
        raise ValueError(f"(p, q) = ({p_holo}, {q_anti}) does not sum to "
                         f"the form degree {deg}")
    if deg > 3:
        raise ValueError("type projection implemented for degree <= 3")
    comp = frame_components(form, grid, P, Q)
    n = grid.n
    idx = np.arange(grid.dim)
    anti = (idx >= n).astype(int)
    mask = np.zeros((grid.dim,) * deg, dtype=bool)
    it = np.ndindex(*([grid.dim] * deg))
    for multi in it:
        if sum(anti[list(multi)]) == q_anti:
            mask[multi] = True
    comp = comp * mask.reshape(mask.shape + (1,) * grid.dim)
    return from_frame_components(comp, grid, P, Q)


def top_density(form: np.ndarray, grid: GridSpec) -> np.ndarray:
    """Scalar density of a top-degree form w.r.t. the coordinate volume.

    For a ``2n``-form :math:`\\tau` this is
    :math:`\\tau(\\partial_1, \\dots, \\partial_{2n})`, so that
    :math:`\\int \\tau = \\int \\tau(\\partial_1, \\dots)\\,
    dx^1 \\cdots dx^{2n}`.
    """
    deg = form_degree(form, grid)
    if deg != grid.dim:
        raise ValueError(f"expected a {grid.dim}-form, got degree {deg}")
    return form[tuple(range(grid.dim))]


def antisymmetry_defect(form: np.ndarray, grid: GridSpec) -> float:
    """Sup-norm violation of slot antisymmetry (diagnostic)."""
    p = form_degree(form, grid)
    worst = 0.0
    for i in range(p):
        for j in range(i + 1, p):
            swapped = np.swapaxes(form, i, j)
            worst = max(worst, float(np.max(np.abs(form + swapped))))
    return worst
