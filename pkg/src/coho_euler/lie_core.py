"""Compact Lie algebras from structure constants, with reductive splits.

The algebra is stored densely: bracket coefficients C[i][j][k] with
[e_i, e_j] = sum_k C[i][j][k] e_k, together with an ad-invariant inner
product Q used to split off the isotropy subalgebra. Dimensions stay in
the single digits here, so clarity wins over sparsity throughout.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from .errors import InputError, StructureError
from .numerics import as_float_array
from .reports import ValidationReport

STRUCTURE_TOL = 1e-12
KERNEL_CUTOFF = 1e-10


@dataclass
class LieAlgebraSpec:
    """A finite-dimensional Lie algebra with a fixed inner product.

    Attributes:
        dim: number of basis vectors.
        structure: (dim, dim, dim) bracket coefficients, antisymmetric in
            the first two slots.
        Q: (dim, dim) symmetric positive-definite matrix; ad-invariance is
            checked by :func:`validate_structure`, not at construction.
    """

    dim: int
    structure: np.ndarray
    Q: np.ndarray

    def __post_init__(self):
        if self.dim < 1:
            raise InputError(f"algebra dimension must be >= 1, got {self.dim}")
        n = self.dim
        self.structure = as_float_array(self.structure, (n, n, n), "structure")
        try:
            self.Q = as_float_array(self.Q, (n, n), "Q")
        except InputError as exc:
            # a C/Q shape mismatch is a structural inconsistency, not bad data
            if "shape" in str(exc):
                raise StructureError(str(exc)) from exc
            raise

    def ad(self, x: np.ndarray) -> np.ndarray:
        """Matrix of ad(x): y -> [x, y] in the algebra basis."""
        x = as_float_array(x, (self.dim,), "x")
        # (ad x)_{k j} = sum_i x_i C[i, j, k]
        return np.einsum("i,ijk->kj", x, self.structure)


def bracket(alg: LieAlgebraSpec, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """The Lie bracket [x, y] in basis coordinates."""
    x = as_float_array(x, (alg.dim,), "x")
    y = as_float_array(y, (alg.dim,), "y")
    return np.einsum("i,j,ijk->k", x, y, alg.structure)


def su2() -> LieAlgebraSpec:
    """su(2) with [e1,e2]=e3 cyclically and the standard inner product."""
    C = np.zeros((3, 3, 3))
    for i, j, k in ((0, 1, 2), (1, 2, 0), (2, 0, 1)):
        C[i, j, k] = 1.0
        C[j, i, k] = -1.0
    return LieAlgebraSpec(3, C, np.eye(3))


def abelian(dim: int) -> LieAlgebraSpec:
    """R^dim with vanishing bracket."""
    return LieAlgebraSpec(dim, np.zeros((dim, dim, dim)), np.eye(dim))


def direct_sum(a: LieAlgebraSpec, b: LieAlgebraSpec) -> LieAlgebraSpec:
    """Block direct sum of two algebras with block-diagonal Q."""
    n, m = a.dim, b.dim
    C = np.zeros((n + m, n + m, n + m))
    C[:n, :n, :n] = a.structure
    C[n:, n:, n:] = b.structure
    Q = np.zeros((n + m, n + m))
    Q[:n, :n] = a.Q
    Q[n:, n:] = b.Q
    return LieAlgebraSpec(n + m, C, Q)


def validate_structure(alg: LieAlgebraSpec) -> ValidationReport:
    """Check antisymmetry, Jacobi, positivity of Q, and ad-invariance of Q."""
    C = alg.structure
    report = ValidationReport()

    report.add("antisymmetry", np.max(np.abs(C + C.transpose(1, 0, 2))), STRUCTURE_TOL)

    jac = (
        np.einsum("ijm,mkl->ijkl", C, C)
        + np.einsum("jkm,mil->ijkl", C, C)
        + np.einsum("kim,mjl->ijkl", C, C)
    )
    report.add("jacobi_identity", np.max(np.abs(jac)), STRUCTURE_TOL)

    report.add("Q_symmetric", np.max(np.abs(alg.Q - alg.Q.T)), STRUCTURE_TOL)
    eigmin = float(np.min(np.linalg.eigvalsh(0.5 * (alg.Q + alg.Q.T))))
    report.add_flag("Q_positive_definite", eigmin > 0.0, f"min eigenvalue {eigmin:.3e}")

    # Q(ad_i y, z) + Q(y, ad_i z) = 0 for every basis direction i
    ad_all = np.einsum("ijk->ikj", C)  # ad_all[i] = matrix of ad(e_i)
    inv = np.einsum("ikj,kl->ijl", ad_all, alg.Q) + np.einsum(
        "jk,ikl->ijl", alg.Q, ad_all
    )
    report.add("ad_invariance", np.max(np.abs(inv)), STRUCTURE_TOL)
    return report


@dataclass
class ReductiveSplit:
    """An isotropy subalgebra, its orthogonal complement, and the fixed part.

    Rows of ``m_basis`` are Q-orthonormal and span the complement of the
    isotropy; rows of ``m0_basis`` span the subspace of the complement
    annihilated by every ad(x), x in the isotropy (the isotropy group is
    assumed connected). ``m0_in_m`` holds the same vectors in complement
    coordinates.
    """

    algebra: LieAlgebraSpec
    h_basis: np.ndarray
    m_basis: np.ndarray
    m0_basis: np.ndarray
    m0_in_m: np.ndarray

    @property
    def dim_h(self) -> int:
        return self.h_basis.shape[0]

    @property
    def dim_m(self) -> int:
        return self.m_basis.shape[0]

    @property
    def dim_m0(self) -> int:
        return self.m0_basis.shape[0]

    def ad_on_m(self, x: np.ndarray) -> np.ndarray:
        """Matrix of (project to complement) . ad(x) in complement coordinates."""
        w = np.einsum("i,bj,ijk->bk", x, self.m_basis, self.algebra.structure)
        return self.m_basis @ self.algebra.Q @ w.T

    def bracket_on_m(self) -> np.ndarray:
        """Tensor B[a,b,c]: projected bracket of complement basis vectors."""
        M, C, Q = self.m_basis, self.algebra.structure, self.algebra.Q
        full = np.einsum("ai,bj,ijk->abk", M, M, C)
        return np.einsum("abk,kl,cl->abc", full, Q, M)


def _q_orthonormalize(vectors: np.ndarray, Q: np.ndarray, label: str) -> np.ndarray:
    """Modified Gram-Schmidt in the Q inner product; rejects dependent input."""
    out = []
    for k, v in enumerate(vectors):
        w = v.astype(float).copy()
        norm0 = float(np.sqrt(max(w @ Q @ w, 0.0)))
        for u in out:
            w = w - (u @ Q @ w) * u
        norm = float(np.sqrt(max(w @ Q @ w, 0.0)))
        if norm <= 1e-10 * max(norm0, 1.0):
            raise InputError(f"{label} vectors are linearly dependent (vector {k})")
        out.append(w / norm)
    return np.array(out) if out else np.zeros((0, Q.shape[0]))


def reductive_split(alg: LieAlgebraSpec, h_basis) -> ReductiveSplit:
    """Split the algebra into isotropy + Q-orthogonal complement + fixed part.

    The fixed part is computed as the joint kernel of the projected
    ad-action of the isotropy basis, extracted from a stacked SVD with
    singular values below ``KERNEL_CUTOFF`` treated as zero.
    """
    n = alg.dim
    h_rows = [as_float_array(v, (n,), "h_basis vector") for v in h_basis]
    h_arr = np.array(h_rows) if h_rows else np.zeros((0, n))
    h_on = _q_orthonormalize(h_arr, alg.Q, "isotropy basis")

    # isotropy must close under the bracket
    worst = 0.0
    for i in range(len(h_rows)):
        for j in range(i + 1, len(h_rows)):
            b = bracket(alg, h_arr[i], h_arr[j])
            resid = b - h_on.T @ (h_on @ alg.Q @ b)
            worst = max(worst, float(np.sqrt(max(resid @ alg.Q @ resid, 0.0))))
    if worst >= STRUCTURE_TOL:
        raise StructureError(
            f"isotropy basis does not span a subalgebra (off-span residual {worst:.3e})"
        )

    if h_arr.shape[0] == 0:
        m_basis = np.eye(n)
    else:
        rows = []
        for cand in np.eye(n):
            w = cand.copy()
            w = w - h_on.T @ (h_on @ alg.Q @ w)
            for u in rows:
                w = w - (u @ alg.Q @ w) * u
            norm = float(np.sqrt(max(w @ alg.Q @ w, 0.0)))
            if norm > 1e-8:
                rows.append(w / norm)
        m_basis = np.array(rows)
    if m_basis.shape[0] + h_arr.shape[0] != n:
        raise StructureError(
            f"complement has dimension {m_basis.shape[0]}, expected {n - h_arr.shape[0]}"
        )

    split = ReductiveSplit(alg, h_arr, m_basis, m_basis.copy(), np.eye(m_basis.shape[0]))
    if h_arr.shape[0] == 0:
        return split

    stacked = np.vstack([split.ad_on_m(x) for x in h_arr])
    _, svals, vt = np.linalg.svd(stacked)
    cutoff = KERNEL_CUTOFF * max(1.0, float(svals[0]) if svals.size else 1.0)
    rank = int(np.sum(svals > cutoff))
    m0_in_m = vt[rank:]
    split.m0_in_m = m0_in_m
    split.m0_basis = m0_in_m @ m_basis
    return split


def check_reductive_split(split: ReductiveSplit) -> ValidationReport:
    """Residual checks for an existing split (used by the CLI validator)."""
    alg = split.algebra
    report = ValidationReport()

    worst = 0.0
    h_on = _q_orthonormalize(split.h_basis, alg.Q, "isotropy basis") if split.dim_h else None
    for i in range(split.dim_h):
        for j in range(i + 1, split.dim_h):
            b = bracket(alg, split.h_basis[i], split.h_basis[j])
            resid = b - h_on.T @ (h_on @ alg.Q @ b)
            worst = max(worst, float(np.sqrt(max(resid @ alg.Q @ resid, 0.0))))
    report.add("isotropy_closed_under_bracket", worst, STRUCTURE_TOL)

    ortho = 0.0
    if split.dim_h:
        ortho = float(np.max(np.abs(split.h_basis @ alg.Q @ split.m_basis.T)))
    report.add("complement_Q_orthogonal", ortho, STRUCTURE_TOL)
    report.add_flag(
        "dimensions_add_up",
        split.dim_h + split.dim_m == alg.dim,
        f"{split.dim_h} + {split.dim_m} vs {alg.dim}",
    )

    fixed = 0.0
    if split.dim_m0:
        for x in split.h_basis:
            fixed = max(fixed, float(np.max(np.abs(split.ad_on_m(x) @ split.m0_in_m.T))))
    report.add("fixed_subspace_annihilated", fixed, KERNEL_CUTOFF)
    return report


def monte_carlo_fixed_check(split: ReductiveSplit, seed: int = 0, samples: int = 100):
    """Group-level confirmation that the fixed subspace is actually fixed.

    The kernel construction only sees the infinitesimal action; here the
    matrix exponential of 100 random isotropy elements (coefficients in
    [-1, 1]) is applied to every fixed-subspace vector. Valid for a
    connected isotropy group, the only kind supported.
    """
    report = ValidationReport()
    if split.dim_h == 0 or split.dim_m0 == 0:
        report.add("monte_carlo_ad_fixedness", 0.0, 1e-8, "no isotropy action to probe")
        return report
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(samples):
        x = rng.uniform(-1.0, 1.0, split.dim_h) @ split.h_basis
        g = expm(split.algebra.ad(x))
        for vec in split.m0_basis:
            worst = max(worst, float(np.max(np.abs(g @ vec - vec))))
    report.add("monte_carlo_ad_fixedness", worst, 1e-8, f"{samples} samples")
    return report
