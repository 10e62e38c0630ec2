"""Metric data dr^2 + g_r over an interval or circle of orbits.

A profile bundles the orbit-space descriptor, the reductive split of the
fibre, and a one-parameter family of Gram matrices with exact r-derivatives.
From these it derives the shape operator S_r = -1/2 g_r^{-1} g_r', the mean
curvature as its trace, relative orbit volumes, and the divergence-free
horizontal amplitude profile.

Convention note: with the shape operator above, trace(S_r) equals
-d/dr ln sqrt(det g_r), verified against the coordinate divergence
div(h dr) = h' + (f'/f) h on the flat model dr^2 + f(r)^2 dtheta^2. The
divergence-free horizontal profile is therefore h0(r) = vol(L/2)/vol(r),
with no square root. Validation surfaces this identity as a named check so
a disagreeing derivative table cannot pass silently.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import (
    DomainError,
    InputError,
    StructureError,
    UnsupportedConfigurationError,
)
from .lie_core import ReductiveSplit, abelian, reductive_split, su2
from .reports import ValidationReport

INTERVAL = "interval"
CIRCLE = "circle"
SINGULAR = "singular"
BOUNDARY = "boundary"

PROBE_POINTS = 512
FD_STEP = 1e-5


@dataclass(frozen=True)
class OrbitSpace:
    """Interval or circle of orbit parameters, with endpoint types."""

    kind: str
    length: float
    endpoint_kinds: tuple[str, str] | None = None

    def __post_init__(self):
        if self.kind not in (INTERVAL, CIRCLE):
            raise InputError(f"unknown orbit-space kind {self.kind!r}")
        if not (np.isfinite(self.length) and self.length > 0):
            raise InputError("orbit-space length must be a positive real")
        if self.kind == CIRCLE:
            if self.endpoint_kinds is not None:
                raise InputError("a circle orbit space has no endpoint kinds")
        else:
            kinds = self.endpoint_kinds
            if kinds is None or len(kinds) != 2:
                raise InputError("an interval orbit space needs two endpoint kinds")
            for k in kinds:
                if k not in (SINGULAR, BOUNDARY):
                    raise InputError(f"unknown endpoint kind {k!r}")


@dataclass(frozen=True)
class Frame:
    """Identification of vertical coefficient slots with fixed basis vectors."""

    n_coefficients: int
    monodromy: str = "identity"


class MetricProfile:
    """Base class for one-parameter families of invariant orbit metrics."""

    family = "abstract"

    def __init__(self, split: ReductiveSplit, orbit_space: OrbitSpace):
        self.split = split
        self.orbit_space = orbit_space
        if split.dim_m0 != split.dim_m:
            raise UnsupportedConfigurationError(
                "profiles require the whole complement to carry invariant fields "
                f"(dim m0 = {split.dim_m0}, dim m = {split.dim_m})"
            )

    # subclasses provide these two on the already-reduced coordinate
    def _gram(self, r: float) -> np.ndarray:
        raise NotImplementedError

    def _gram_prime(self, r: float) -> np.ndarray:
        raise NotImplementedError

    @property
    def dim(self) -> int:
        return self.split.dim_m

    @property
    def length(self) -> float:
        return self.orbit_space.length

    def frame(self) -> Frame:
        return Frame(self.split.dim_m0)

    def reduce(self, r: float) -> float:
        """Map r into the domain, raising at or beyond singular endpoints."""
        L = self.orbit_space.length
        if not np.isfinite(r):
            raise DomainError(f"coordinate {r!r} is not finite")
        if self.orbit_space.kind == CIRCLE:
            return float(r) % L
        left, right = self.orbit_space.endpoint_kinds
        if r < 0.0 or r > L:
            raise DomainError(f"coordinate {r} outside the interval [0, {L}]")
        if left == SINGULAR and r <= 0.0:
            raise DomainError("coordinate at or beyond the singular endpoint r = 0")
        if right == SINGULAR and r >= L:
            raise DomainError(f"coordinate at or beyond the singular endpoint r = {L}")
        return float(r)

    def gram_at(self, r: float) -> np.ndarray:
        return self._gram(self.reduce(r))

    def gram_prime_at(self, r: float) -> np.ndarray:
        return self._gram_prime(self.reduce(r))

    def shape_operator_at(self, r: float) -> np.ndarray:
        g, gp = self.gram_at(r), self.gram_prime_at(r)
        return -0.5 * np.linalg.solve(g, gp)

    def mean_curvature_at(self, r: float) -> float:
        return float(np.trace(self.shape_operator_at(r)))

    def volume_at(self, r: float) -> float:
        det = float(np.linalg.det(self.gram_at(r)))
        if det <= 0.0:
            raise InputError(f"orbit metric is not positive definite at r = {r}")
        return float(np.sqrt(det))

    def h0_at(self, r: float) -> float:
        if self.orbit_space.kind != CIRCLE:
            raise UnsupportedConfigurationError(
                "the divergence-free horizontal profile vanishes identically on "
                "an interval orbit space; only circles carry a nonzero one"
            )
        return self.volume_at(0.5 * self.length) / self.volume_at(r)

    def h0_prime_at(self, r: float) -> float:
        # h0' = H h0 since vol * h0 is constant in r
        return self.mean_curvature_at(r) * self.h0_at(r)


def metric_at(profile: MetricProfile, r: float) -> tuple[np.ndarray, np.ndarray]:
    return profile.gram_at(r), profile.gram_prime_at(r)


def shape_operator(profile: MetricProfile, r: float) -> np.ndarray:
    return profile.shape_operator_at(r)


def mean_curvature(profile: MetricProfile, r: float) -> float:
    return profile.mean_curvature_at(r)


def h0_profile(profile: MetricProfile, grid) -> np.ndarray:
    """Samples of the divergence-free horizontal amplitude, normalised at L/2."""
    return np.array([profile.h0_at(r) for r in np.asarray(grid, dtype=float)])


def reconstruct_velocity(state_slice, profile: MetricProfile, r: float):
    """(c, v) -> (h, vertical) at radius r; h = c*h0 on circles, 0 on intervals."""
    c, v = state_slice
    v = np.asarray(v, dtype=float)
    if profile.orbit_space.kind == CIRCLE:
        h = float(c) * profile.h0_at(r)
    else:
        h = 0.0
    return h, v


class RoundS3T2Profile(MetricProfile):
    """The round 3-sphere under its torus action: g_r = diag(cos^2 r, sin^2 r).

    Orbit space [0, pi/2] with the fibre circles collapsing at either end.
    """

    family = "round_s3_t2"

    def __init__(self):
        split = reductive_split(abelian(2), [])
        space = OrbitSpace(INTERVAL, np.pi / 2.0, (SINGULAR, SINGULAR))
        super().__init__(split, space)

    def _gram(self, r):
        c, s = np.cos(r), np.sin(r)
        return np.diag([c * c, s * s])

    def _gram_prime(self, r):
        s2 = np.sin(2.0 * r)
        return np.diag([-s2, s2])


class FourierDiagonalProfile(MetricProfile):
    """Diagonal g_r on a circle with log-entries given by truncated Fourier sums.

    Entry i is f_i(r)^2 = exp(a0 + sum_k a_k cos(2 pi k r / L) + b_k sin(...)),
    so positivity and smooth periodicity hold by construction. Used both for
    flat-torus fibres and for su(2) fibres.
    """

    family = "warped_torus"

    def __init__(self, split: ReductiveSplit, length: float, coefficients):
        space = OrbitSpace(CIRCLE, length)
        super().__init__(split, space)
        if len(coefficients) != split.dim_m:
            raise InputError(
                f"need {split.dim_m} coefficient lists, got {len(coefficients)}"
            )
        self.coefficients = []
        for entry in coefficients:
            arr = np.asarray(entry, dtype=float)
            if arr.ndim != 1 or arr.size % 2 == 0 or not np.all(np.isfinite(arr)):
                raise InputError(
                    "each Fourier entry must be a finite odd-length list "
                    "[a0, a1, b1, a2, b2, ...]"
                )
            self.coefficients.append(arr)

    def _phases(self, entry, r):
        a0 = entry[0]
        ks = np.arange(1, (entry.size - 1) // 2 + 1)
        ang = 2.0 * np.pi * ks * r / self.length
        a = entry[1::2]
        b = entry[2::2]
        phi = a0 + np.sum(a * np.cos(ang)) + np.sum(b * np.sin(ang))
        dphi = np.sum((2.0 * np.pi * ks / self.length) * (-a * np.sin(ang) + b * np.cos(ang)))
        return phi, dphi

    def _gram(self, r):
        return np.diag([np.exp(self._phases(e, r)[0]) for e in self.coefficients])

    def _gram_prime(self, r):
        vals = []
        for e in self.coefficients:
            phi, dphi = self._phases(e, r)
            vals.append(np.exp(phi) * dphi)
        return np.diag(vals)


def warped_torus(length: float, coefficients) -> FourierDiagonalProfile:
    """Flat-torus fibres: abelian algebra, one circle per diagonal entry."""
    split = reductive_split(abelian(len(coefficients)), [])
    return FourierDiagonalProfile(split, length, coefficients)


def berger_circle(length: float, coefficients) -> FourierDiagonalProfile:
    """su(2) fibres with a diagonal left-invariant metric varying over the base."""
    if len(coefficients) != 3:
        raise InputError("su(2) fibres need exactly three diagonal entries")
    profile = FourierDiagonalProfile(reductive_split(su2(), []), length, coefficients)
    profile.family = "berger_circle"
    return profile


class TabulatedProfile(MetricProfile):
    """Gram matrices and derivatives sampled on a grid, cubic-spline interpolated.

    Derivative samples are supplied by the caller; differentiating user data
    numerically would silently degrade every conservation diagnostic, so it
    is never done here.
    """

    family = "tabulated"

    def __init__(self, split, orbit_space, r_samples, gram_samples, gram_prime_samples):
        super().__init__(split, orbit_space)
        r = np.asarray(r_samples, dtype=float)
        g = np.asarray(gram_samples, dtype=float)
        gp = np.asarray(gram_prime_samples, dtype=float)
        d = split.dim_m
        if r.ndim != 1 or r.size < 4 or np.any(np.diff(r) <= 0):
            raise InputError("tabulated r samples must be strictly increasing, >= 4")
        if g.shape != (r.size, d, d) or gp.shape != g.shape:
            raise InputError("tabulated gram arrays must have shape (n, d, d)")
        if abs(r[0]) > 1e-12 or abs(r[-1] - orbit_space.length) > 1e-9:
            raise InputError("tabulated samples must cover [0, L] inclusive")
        bc = "periodic" if orbit_space.kind == CIRCLE else "not-a-knot"
        try:
            self._g_spline = CubicSpline(r, g, bc_type=bc, axis=0)
            self._gp_spline = CubicSpline(r, gp, bc_type=bc, axis=0)
        except ValueError as exc:
            raise StructureError(f"tabulated profile is not periodic: {exc}") from exc
        self.r_samples = r

    def _gram(self, r):
        g = self._g_spline(r)
        return 0.5 * (g + g.T)

    def _gram_prime(self, r):
        gp = self._gp_spline(r)
        return 0.5 * (gp + gp.T)


def load_tabulated_csv(path):
    """Read (r, gram, gram') samples from CSV.

    Mandatory header row, then columns: r, the upper triangle of gram in
    row-major order, then the upper triangle of gram' in the same order.
    """
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip()
        if not header or header.split(",")[0].strip().lower() != "r":
            raise InputError(f"{path}: first CSV column must be named 'r'")
        try:
            data = np.loadtxt(fh, delimiter=",", ndmin=2)
        except ValueError as exc:
            raise InputError(f"{path}: could not parse numeric rows: {exc}") from exc
    ncols = data.shape[1]
    ntri = (ncols - 1) // 2
    d = int(round((np.sqrt(8 * ntri + 1) - 1) / 2))
    if ncols != 1 + d * (d + 1) or d < 1:
        raise InputError(
            f"{path}: {ncols} columns do not match 1 + 2 * d(d+1)/2 for any d"
        )
    iu = np.triu_indices(d)
    n = data.shape[0]
    gram = np.zeros((n, d, d))
    prime = np.zeros((n, d, d))
    gram[:, iu[0], iu[1]] = data[:, 1 : 1 + ntri]
    prime[:, iu[0], iu[1]] = data[:, 1 + ntri :]
    gram = gram + np.triu(gram, 1).transpose(0, 2, 1)
    prime = prime + np.triu(prime, 1).transpose(0, 2, 1)
    return data[:, 0], gram, prime


def write_tabulated_csv(path, r, gram, gram_prime):
    d = gram.shape[1]
    iu = np.triu_indices(d)
    names = ["r"]
    names += [f"g_{i + 1}{j + 1}" for i, j in zip(*iu)]
    names += [f"gp_{i + 1}{j + 1}" for i, j in zip(*iu)]
    rows = np.column_stack([r, gram[:, iu[0], iu[1]], gram_prime[:, iu[0], iu[1]]])
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(names) + "\n")
        for row in rows:
            fh.write(",".join(f"{x:.17g}" for x in row) + "\n")


def _probe_grid(profile: MetricProfile, n=PROBE_POINTS) -> np.ndarray:
    L = profile.length
    if profile.orbit_space.kind == CIRCLE:
        return L * np.arange(n) / n
    return L * (np.arange(n) + 0.5) / n


def trace_identity_probes(profile: MetricProfile, n=PROBE_POINTS) -> np.ndarray:
    """Probe locations for the mean-curvature trace identity."""
    L = profile.length
    if profile.orbit_space.kind == CIRCLE:
        return L * np.arange(n) / n
    left, right = profile.orbit_space.endpoint_kinds
    lo = 0.05 * L if left == SINGULAR else 2 * FD_STEP
    hi = 0.95 * L if right == SINGULAR else L - 2 * FD_STEP
    return np.linspace(lo, hi, n)


def validate_profile(profile: MetricProfile) -> ValidationReport:
    """Positivity, endpoint collapse, periodicity and parity checks."""
    report = ValidationReport()
    L = profile.length

    probes = _probe_grid(profile)
    eigmin, r_worst = np.inf, probes[0]
    for r in probes:
        lam = float(np.min(np.linalg.eigvalsh(profile.gram_at(r))))
        if lam < eigmin:
            eigmin, r_worst = lam, r
    spd_ok = eigmin > 0.0
    report.add_flag(
        "gram_positive_on_probe_grid",
        spd_ok,
        f"min eigenvalue {eigmin:.3e} at r = {r_worst:.6g}",
    )
    if not spd_ok:
        # every later check divides by volumes; report what we have
        return report

    # trace(S_r) + d/dr ln sqrt(det gram) = 0: ties the derivative table to the
    # metric table and pins the no-half mean-curvature convention. Near a
    # collapsed orbit the identity involves quantities diverging like 1/r, so
    # the probe band stays clear of singular endpoints; it is the identity
    # being checked there, not the finite difference.
    worst = 0.0
    for r in trace_identity_probes(profile):
        lnv = np.log(profile.volume_at(r + FD_STEP)) - np.log(profile.volume_at(r - FD_STEP))
        worst = max(worst, abs(profile.mean_curvature_at(r) + lnv / (2 * FD_STEP)))
    report.add("mean_curvature_trace_identity", worst, 1e-6)

    if profile.orbit_space.kind == CIRCLE:
        g0, gp0 = metric_at(profile, 0.0)
        gL, gpL = profile._gram(L), profile._gram_prime(L)
        resid = max(np.max(np.abs(g0 - gL)), np.max(np.abs(gp0 - gpL)))
        report.add("periodicity", resid, 1e-10)
    else:
        for side, kind in zip((0.0, L), profile.orbit_space.endpoint_kinds):
            tag = f"r={side:g}"
            eps = L * np.geomspace(1e-2, 1e-8, 13)
            rs = side + eps if side == 0.0 else side - eps
            vols = np.array([profile.volume_at(r) for r in rs])
            if kind == SINGULAR:
                collapsing = np.all(np.diff(vols) < 0) and vols[-1] < 1e-6
                report.add_flag(
                    f"volume_collapse_at_{tag}",
                    bool(collapsing),
                    f"closest sample {vols[-1]:.3e}",
                )
                report.extend(_parity_check(profile, side, tag))
            else:
                report.add_flag(
                    f"volume_positive_at_{tag}",
                    bool(np.all(vols > 0)),
                    f"closest sample {vols[-1]:.3e}",
                )

    if isinstance(profile, TabulatedProfile):
        worst = 0.0
        dspline = profile._g_spline.derivative()
        for r in probes:
            worst = max(worst, float(np.max(np.abs(dspline(r) - profile.gram_prime_at(r)))))
        report.add("tabulated_derivative_consistency", worst, 1e-6)
    return report


def _parity_check(profile, side, tag) -> ValidationReport:
    """Collapsing diagonal entries must vanish to second order at the endpoint."""
    report = ValidationReport()
    L = profile.length
    eps = 1e-2 * L
    r1 = side + eps if side == 0.0 else side - eps
    r2 = side + eps / 2 if side == 0.0 else side - eps / 2
    g1, g2 = np.diag(profile.gram_at(r1)), np.diag(profile.gram_at(r2))
    scale = float(np.max(g1))
    worst = 0.0
    found = False
    for i, (a, b) in enumerate(zip(g1, g2)):
        if a > 1e-2 * scale:
            continue  # non-collapsing direction
        found = True
        ratio1 = a / eps**2
        ratio2 = b / (eps / 2) ** 2
        worst = max(worst, abs(ratio1 - ratio2) / max(abs(ratio2), 1e-30))
    if found:
        report.add(f"second_order_collapse_at_{tag}", worst, 5e-2)
    else:
        report.add_flag(
            f"second_order_collapse_at_{tag}", False, "no collapsing entry found"
        )
    return report
