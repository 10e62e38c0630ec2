"""Invariant metrics on a single orbit and their Levi-Civita connection.

For invariant vector fields the inner products are constant over the orbit,
so the Koszul formula loses its derivative terms and the connection becomes
an algebraic bilinear map on complement coordinates:

    2 <nabla_X Y, Z> = <[X,Y],Z> - <[Y,Z],X> + <[Z,X],Y>.

This identification of the invariant-field bracket with the algebra bracket
is only valid when the isotropy is trivial or acts trivially on the whole
complement; anything else is refused rather than guessed. The sign of the
bracket is fixed so that time-forward integration of du/dt = -nabla_u u on
su(2) with a diagonal metric reproduces the classical rigid-body equations
w1' = ((I2 - I3)/I1) w2 w3 (cyclic).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InputError, StructureError, UnsupportedConfigurationError
from .lie_core import ReductiveSplit
from .numerics import as_float_array
from .reports import ValidationReport

INVARIANCE_TOL = 1e-10


@dataclass
class InvariantMetric:
    """An invariant metric on one orbit: the Gram matrix of the complement basis."""

    split: ReductiveSplit
    gram: np.ndarray
    _gamma: np.ndarray | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        m = self.split.dim_m
        self.gram = as_float_array(self.gram, (m, m), "gram")
        if np.max(np.abs(self.gram - self.gram.T)) > 1e-12:
            raise StructureError("gram matrix is not symmetric")
        if np.min(np.linalg.eigvalsh(self.gram)) <= 0.0:
            raise InputError("gram matrix is not positive definite")

    def connection_supported(self) -> bool:
        return self.split.dim_h == 0 or self.split.dim_m0 == self.split.dim_m

    def connection_tensor(self) -> np.ndarray:
        """Gamma[a,b,c] with nabla_{e_a} e_b = sum_c Gamma[a,b,c] e_c (cached)."""
        if self._gamma is not None:
            return self._gamma
        if not self.connection_supported():
            raise UnsupportedConfigurationError(
                "invariant-field connection needs trivial isotropy or an isotropy "
                "acting trivially on the whole complement "
                f"(dim h = {self.split.dim_h}, dim m0 = {self.split.dim_m0}, "
                f"dim m = {self.split.dim_m})"
            )
        B = self.split.bracket_on_m()
        G1 = np.einsum("abd,dc->abc", B, self.gram)
        # K[a,b,c] = <[a,b],c> - <[b,c],a> + <[c,a],b>
        K = G1 - np.einsum("bca->abc", G1) + np.einsum("cab->abc", G1)
        m = self.split.dim_m
        gamma = 0.5 * np.linalg.solve(self.gram, K.reshape(m * m, m).T).T.reshape(m, m, m)
        self._gamma = gamma
        return gamma


def check_metric_invariance(metric: InvariantMetric) -> ValidationReport:
    """Ad(H)-invariance of the Gram matrix under the isotropy's ad-action."""
    report = ValidationReport()
    worst = 0.0
    for x in metric.split.h_basis:
        A = metric.split.ad_on_m(x)
        worst = max(worst, float(np.max(np.abs(A.T @ metric.gram + metric.gram @ A))))
    report.add("metric_ad_invariance", worst, INVARIANCE_TOL)
    return report


def invariant_connection(metric: InvariantMetric, X, Y) -> np.ndarray:
    """nabla_X Y for invariant fields, in complement coordinates."""
    m = metric.split.dim_m
    X = as_float_array(X, (m,), "X")
    Y = as_float_array(Y, (m,), "Y")
    return np.einsum("a,b,abc->c", X, Y, metric.connection_tensor())


def orbit_volume(metric: InvariantMetric) -> float:
    """Orbit volume relative to the reference density of the complement basis."""
    det = float(np.linalg.det(metric.gram))
    if det <= 0.0:
        raise InputError("gram matrix has non-positive determinant")
    return float(np.sqrt(det))


def euler_arnold_rhs(metric: InvariantMetric, X) -> np.ndarray:
    """du/dt = -nabla_u u at u = X; always gram-orthogonal to X."""
    return -invariant_connection(metric, X, X)


def divergence_form(metric: InvariantMetric) -> np.ndarray:
    """Row vector d with div(X) = d . X for invariant fields.

    The trace of Z -> nabla_Z X over a gram-orthonormal basis; identically
    zero for compact groups, so this is a runtime zero-witness.
    """
    gamma = metric.connection_tensor()
    L = np.linalg.cholesky(metric.gram)
    E = np.linalg.inv(L).T  # columns are gram-orthonormal
    # d_b = sum_i E_i^a Gamma[a,b,c] (gram E_i)_c
    GE = metric.gram @ E
    return np.einsum("ai,abc,ci->b", E, gamma, GE)


def divergence_of_invariant_field(metric: InvariantMetric, X) -> float:
    X = as_float_array(X, (metric.split.dim_m,), "X")
    return float(divergence_form(metric) @ X)
