"""Lax-pair integration and the Backlund transformation for both kinds.

The linear system in w = (lambda, mu, omega, phi, chi) with spectral
parameter m is integrated over the grid with the two-pass RK4 sweep.  Its
quadric constraint

    lambda^2 + mu^2 + omega^2 = 2 m omega nu,   nu = chi - qn phi^2 / (2 omega)

is conserved exactly by the continuous flow (for arbitrary coefficient
fields, compatible or not), so the reported drift isolates integrator
truncation.  The transformation itself is pointwise algebra:

    r' = r - (phi / (m omega nu)) (lambda X + mu Y + omega N),

with the coefficient update Hvec' = Hvec - (H/M) Mvec, Kvec' = Kvec - (K/M) Mvec,
Mvec = (omega, phi, chi), M = m omega nu.  The new governing fields
(xi', alpha', h') follow from the kind-specific closed forms and satisfy the
same governing system (kind preservation), which the tests verify as
residuals.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field

import numpy as np

from .errors import ParameterError, SingularGridError
from .fields import Grid2D, ScalarField, Vec3Field
from .kernel import CoefficientFields, GoverningFields
from .frames import FrameGrid, SurfaceTriple
from .sweep import sweep_grid

__all__ = [
    "LaxFields",
    "PrimedUpdate",
    "BacklundResult",
    "admissible_initial",
    "integrate_lax",
    "backlund_surface",
    "backlund_coefficients",
    "backlund_governing",
    "apply_backlund",
    "bianchi_darboux",
]

#: nodes with |omega|, |nu| or |M| below this are flagged singular
EPS_SING = 1e-8


@dataclass(frozen=True)
class LaxFields:
    """Solution of the Lax system plus derived quantities.

    ``singular`` marks nodes where omega, nu or M = m omega nu fall below
    ``EPS_SING`` (the transformation is undefined there).
    ``constraint_drift`` is max |lambda^2+mu^2+omega^2 - 2 m omega nu| over
    the grid relative to its initial magnitude; ``path_independence`` the max
    node-wise sup distance between the two sweep orders.
    """

    grid: Grid2D
    m: float
    qn: float
    lam: ScalarField
    mu: ScalarField
    omega: ScalarField
    phi: ScalarField
    chi: ScalarField
    nu: ScalarField
    bigM: ScalarField
    singular: np.ndarray = dc_field(repr=False)
    constraint_drift: float = 0.0
    path_independence: float = 0.0

    @property
    def n_singular(self) -> int:
        return int(self.singular.sum())


@dataclass(frozen=True)
class PrimedUpdate:
    """Raw coefficient update Hvec' = Hvec - (H/M) Mvec (theorem sign conventions)."""

    grid: Grid2D
    Ho: np.ndarray
    A1: np.ndarray
    Abar1: np.ndarray
    Ko: np.ndarray
    A2: np.ndarray
    Abar2: np.ndarray
    H: np.ndarray
    K: np.ndarray
    mask: np.ndarray = dc_field(repr=False, default=None)

    def __post_init__(self) -> None:
        if self.mask is None:
            object.__setattr__(self, "mask", np.zeros(self.grid.shape, dtype=bool))


@dataclass(frozen=True)
class BacklundResult:
    """Everything produced by one Backlund application."""

    lax: LaxFields
    primed_governing: GoverningFields
    primed_coefficients: CoefficientFields
    raw_update: PrimedUpdate
    r_primed: Vec3Field
    branch_invalid: np.ndarray = dc_field(repr=False, default=None)

    def __post_init__(self) -> None:
        if self.branch_invalid is None:
            object.__setattr__(
                self, "branch_invalid", np.zeros(self.lax.grid.shape, dtype=bool)
            )


def admissible_initial(
    m: float, qn: float, lambda0: float, omega0: float, phi0: float
) -> np.ndarray:
    """Initial 5-vector satisfying the quadric constraint exactly.

    Normalizes mu0 = 0 and solves the constraint for chi0:
    chi0 = (lambda0^2 + omega0^2)/(2 m omega0) + qn phi0^2/(2 omega0).
    """
    if m == 0.0:
        raise ParameterError("the Backlund parameter m must be nonzero")
    if omega0 == 0.0:
        raise ParameterError("omega0 must be nonzero for an admissible initial vector")
    chi0 = (lambda0 * lambda0 + omega0 * omega0) / (2.0 * m * omega0) + qn * phi0 * phi0 / (
        2.0 * omega0
    )
    return np.array([lambda0, 0.0, omega0, phi0, chi0])


def _lax_coeffs(c: CoefficientFields) -> dict[str, np.ndarray]:
    return {
        "p": c.p.values,
        "q": c.q.values,
        "Ho": c.Ho.values,
        "Ko": c.Ko.values,
        "A1": c.A1.values,
        "A2": c.A2.values,
        "Abar1": c.Abar1.values,
        "Abar2": c.Abar2.values,
    }


def _lax_matrix_x(cv, m, qn):
    shape = np.shape(cv["p"]) + (5, 5)
    L = np.zeros(shape)
    L[..., 0, 1] = -cv["p"]
    L[..., 0, 2] = m * cv["Abar1"] - cv["Ho"]
    L[..., 0, 3] = -m * qn * cv["A1"]
    L[..., 0, 4] = m * cv["Ho"]
    L[..., 1, 0] = cv["p"]
    L[..., 2, 0] = cv["Ho"]
    L[..., 3, 0] = cv["A1"]
    L[..., 4, 0] = cv["Abar1"]
    return L


def _lax_matrix_y(cv, m, qn):
    shape = np.shape(cv["q"]) + (5, 5)
    L = np.zeros(shape)
    L[..., 0, 1] = cv["q"]
    L[..., 1, 0] = -cv["q"]
    L[..., 1, 2] = m * cv["Abar2"] - cv["Ko"]
    L[..., 1, 3] = -m * qn * cv["A2"]
    L[..., 1, 4] = m * cv["Ko"]
    L[..., 2, 1] = cv["Ko"]
    L[..., 3, 1] = cv["A2"]
    L[..., 4, 1] = cv["Abar2"]
    return L


def _matvec(L, w):
    return np.einsum("...ij,...j->...i", L, w)


def integrate_lax(
    c: CoefficientFields,
    qn: float,
    m: float,
    init: np.ndarray,
    substeps: int = 4,
) -> LaxFields:
    """Integrate the 5-component linear system from ``init`` at the origin node.

    The background coefficients must come from a valid membrane O surface for
    the two sweep orders to agree; ``path_independence`` records the actual
    discrepancy (it blows up on an incompatible background, a useful negative
    control).  ``substeps`` > 1 sharpens constraint conservation without
    changing the O(h^2) interpolation accuracy.
    """
    if m == 0.0:
        raise ParameterError("the Backlund parameter m must be nonzero")
    init = np.asarray(init, dtype=float)
    if init.shape != (5,):
        raise ParameterError(f"init must be a 5-vector, got shape {init.shape}")
    coeffs = _lax_coeffs(c)

    def deriv_x(cv, w):
        return _matvec(_lax_matrix_x(cv, m, qn), w)

    def deriv_y(cv, w):
        return _matvec(_lax_matrix_y(cv, m, qn), w)

    out = sweep_grid(c.grid, coeffs, deriv_x, deriv_y, init, substeps=substeps)
    alt = sweep_grid(c.grid, coeffs, deriv_x, deriv_y, init, order="yx", substeps=substeps)
    with np.errstate(invalid="ignore"):
        path_err = float(np.nanmax(np.abs(out - alt)))

    lam, mu, om, ph, ch = (out[:, :, k] for k in range(5))
    with np.errstate(divide="ignore", invalid="ignore"):
        nu = ch - qn * ph * ph / (2.0 * om)
    bigM = m * om * nu
    singular = (
        ~np.isfinite(om)
        | ~np.isfinite(nu)
        | (np.abs(om) < EPS_SING)
        | (np.abs(nu) < EPS_SING)
        | (np.abs(bigM) < EPS_SING)
    )
    # division-free form of lambda^2 + mu^2 + omega^2 - 2 m omega nu
    quad = lam * lam + mu * mu + om * om - 2.0 * m * om * ch + m * qn * ph * ph
    q0 = abs(2.0 * m * init[2] * init[4] - m * qn * init[3] ** 2)
    scale = q0 if q0 > 0 else 1.0
    drift = float(np.max(np.abs(quad))) / scale
    f = lambda v: ScalarField(c.grid, v)
    return LaxFields(
        c.grid, m, qn, f(lam), f(mu), f(om), f(ph), f(ch), f(nu), f(bigM),
        singular, drift, path_err,
    )


def _nanwhere(mask: np.ndarray, values: np.ndarray) -> np.ndarray:
    return np.where(mask, np.nan, values)


def backlund_surface(s: SurfaceTriple, f: FrameGrid, lx: LaxFields) -> Vec3Field:
    """r' = r - (phi/(m omega nu)) (lambda X + mu Y + omega N), NaN at singular nodes."""
    X = f.frames[:, :, :, 0]
    Y = f.frames[:, :, :, 1]
    N = f.frames[:, :, :, 2]
    lam = lx.lam.values[:, :, None]
    mu = lx.mu.values[:, :, None]
    om = lx.omega.values[:, :, None]
    direction = lam * X + mu * Y + om * N
    with np.errstate(divide="ignore", invalid="ignore"):
        factor = lx.phi.values / lx.bigM.values
    factor = _nanwhere(lx.singular, factor)
    return Vec3Field(s.r.grid, s.r.values - factor[:, :, None] * direction)


def backlund_coefficients(
    c: CoefficientFields, lx: LaxFields, qn: float
) -> PrimedUpdate:
    """Primed coefficient six-tuple via the reflection update (theorem signs).

    H = m (nu Ho + omega Abar1 - qn phi A1 + qn phi^2 Ho / (2 omega)) and the
    K analogue; then every component of Hvec, Kvec is shifted by
    -(H/M) Mvec resp. -(K/M) Mvec with Mvec = (omega, phi, chi).
    """
    om, ph, ch = lx.omega.values, lx.phi.values, lx.chi.values
    nu, bigM = lx.nu.values, lx.bigM.values
    m = lx.m
    Ho, Ko = c.Ho.values, c.Ko.values
    A1, A2 = c.A1.values, c.A2.values
    Ab1, Ab2 = c.Abar1.values, c.Abar2.values
    with np.errstate(divide="ignore", invalid="ignore"):
        H = m * (nu * Ho + om * Ab1 - qn * ph * A1 + qn * ph * ph * Ho / (2.0 * om))
        K = m * (nu * Ko + om * Ab2 - qn * ph * A2 + qn * ph * ph * Ko / (2.0 * om))
        rH = H / bigM
        rK = K / bigM
    mask = lx.singular | ~np.isfinite(rH) | ~np.isfinite(rK)
    rH = _nanwhere(mask, rH)
    rK = _nanwhere(mask, rK)
    return PrimedUpdate(
        c.grid,
        Ho=Ho - rH * om, A1=A1 - rH * ph, Abar1=Ab1 - rH * ch,
        Ko=Ko - rK * om, A2=A2 - rK * ph, Abar2=Ab2 - rK * ch,
        H=H, K=K, mask=mask,
    )


def backlund_governing(
    g: GoverningFields, lx: LaxFields
) -> tuple[GoverningFields, np.ndarray]:
    """Primed (xi', alpha', h') of the same kind, plus the invalid-node mask.

    1st kind: e^xi' = (qn/2)(omega/nu) e^-xi (1 - t^2),
    alpha' = -alpha + log((1-t)/(1+t)), h' = t + (phi/omega) e^xi',
    defined only where |t| < 1 and the e^xi' argument is positive.
    2nd kind: e^xi' = (qn/2)(omega/nu) e^-xi (1 + t^2),
    alpha' = alpha - 2 arctan(t), h' = -t + (phi/omega) e^xi'.
    Both use t = h - (phi/omega) e^xi.  Invalid nodes become NaN.
    """
    qn = g.qn
    al, xi, h = g.alpha.values, g.xi.values, g.h.values
    om, ph, nu = lx.omega.values, lx.phi.values, lx.nu.values
    with np.errstate(divide="ignore", invalid="ignore"):
        t = h - (ph / om) * np.exp(xi)
        if g.kind == "first":
            ex_p = 0.5 * qn * (om / nu) * np.exp(-xi) * (1.0 - t * t)
            invalid = lx.singular | ~np.isfinite(t) | (np.abs(t) >= 1.0) | ~(ex_p > 0.0)
            ratio = (1.0 - t) / (1.0 + t)
            xi_p = np.log(_nanwhere(invalid, ex_p))
            al_p = -al + np.log(np.where(invalid | ~(ratio > 0), np.nan, ratio))
            h_p = t + (ph / om) * np.exp(xi_p)
        else:
            ex_p = 0.5 * qn * (om / nu) * np.exp(-xi) * (1.0 + t * t)
            invalid = lx.singular | ~np.isfinite(t) | ~(ex_p > 0.0)
            xi_p = np.log(_nanwhere(invalid, ex_p))
            al_p = al - 2.0 * np.arctan(_nanwhere(invalid, t))
            h_p = -t + (ph / om) * np.exp(xi_p)
    grid = g.grid
    primed = GoverningFields(
        kind=g.kind,
        qn=qn,
        alpha=ScalarField(grid, al_p),
        xi=ScalarField(grid, xi_p),
        h=ScalarField(grid, _nanwhere(invalid, h_p)),
    )
    return primed, invalid


def apply_backlund(
    g: GoverningFields,
    m: float,
    lambda0: float,
    omega0: float,
    phi0: float,
    frame0: np.ndarray | None = None,
    substeps: int = 4,
) -> BacklundResult:
    """One full Backlund application from an admissible initial vector.

    Builds coefficients, integrates the Lax system, and assembles the primed
    governing fields, the raw coefficient update, and the transformed surface.
    Raises SingularGridError when every node is singular.
    """
    from .kernel import coefficients_from_governing
    from .frames import integrate_frame, reconstruct_surfaces

    c = coefficients_from_governing(g)
    init = admissible_initial(m, g.qn, lambda0, omega0, phi0)
    lx = integrate_lax(c, g.qn, m, init, substeps=substeps)
    if lx.singular.all():
        raise SingularGridError("Backlund transformation undefined on every node")
    primed, invalid = backlund_governing(g, lx)
    raw = backlund_coefficients(c, lx, g.qn)
    frame0 = np.eye(3) if frame0 is None else frame0
    f = integrate_frame(c, frame0)
    triple, _ = reconstruct_surfaces(f, c)
    r_p = backlund_surface(triple, f, lx)
    primed_coeffs = coefficients_from_governing(primed)
    return BacklundResult(lx, primed, primed_coeffs, raw, r_p, invalid)


# ---------------------------------------------------------------------------
# Bianchi-Darboux specialization (cmc backgrounds)
# ---------------------------------------------------------------------------


def _bd_matrix_x(cv, mbar):
    # coefficient arrays are pre-evaluated at the nodes (ea = e^alpha,
    # eia = e^-alpha) so stage interpolation acts on the same linear data as
    # the general Lax sweep; the reduced flow is then its exact linear image
    shape = np.shape(cv["ea"]) + (5, 5)
    B = np.zeros(shape)
    B[..., 0, 1] = -cv["p"]
    B[..., 0, 2] = -cv["Ho"]
    B[..., 0, 3] = -mbar * cv["eia"]
    B[..., 0, 4] = -mbar * cv["ea"]
    B[..., 1, 0] = cv["p"]
    B[..., 2, 0] = cv["Ho"]
    B[..., 3, 0] = cv["ea"]
    B[..., 4, 0] = cv["eia"]
    return B


def _bd_matrix_y(cv, mbar):
    shape = np.shape(cv["ea"]) + (5, 5)
    B = np.zeros(shape)
    B[..., 0, 1] = cv["q"]
    B[..., 1, 0] = -cv["q"]
    B[..., 1, 2] = -cv["Ko"]
    B[..., 1, 3] = mbar * cv["eia"]
    B[..., 1, 4] = -mbar * cv["ea"]
    B[..., 2, 1] = cv["Ko"]
    B[..., 3, 1] = cv["ea"]
    B[..., 4, 1] = -cv["eia"]
    return B


def bianchi_darboux(
    g: GoverningFields,
    mbar: float,
    lambda0: float = 0.0,
    omega0: float = 1.0,
    branch: int = 1,
    substeps: int = 4,
) -> BacklundResult:
    """Classical Bianchi-Darboux transformation of a cmc background.

    Integrates the reduced system in (lambda, mu, omega, phi, sigma) with
    sigma = phi - 2 omega and mbar = m qn / 2; the relation chi = qn phi is
    preserved by the flow, so the reduced trajectory matches the general Lax
    system started from the corresponding admissible vector.  phi0 is solved
    from the constraint (quadratic; ``branch`` picks the root); the
    discriminant must be nonnegative, which bounds mbar from below.

    The result satisfies e^xi' = h' = 1 and e^alpha' = -(phi/sigma) e^-alpha.
    """
    from .kernel import coefficients_from_governing

    if g.kind != "first":
        raise ParameterError("Bianchi-Darboux requires a 1st-kind (cmc) background")
    if np.max(np.abs(g.xi.values)) > 0.0 or np.max(np.abs(g.h.values - 1.0)) > 0.0:
        raise ParameterError("Bianchi-Darboux requires xi = 0 and h = 1 exactly")
    if mbar == 0.0:
        raise ParameterError("mbar must be nonzero")
    if omega0 == 0.0:
        raise ParameterError("omega0 must be nonzero")
    qn = g.qn
    m = 2.0 * mbar / qn
    # constraint with chi0 = qn phi0: phi0^2 - 2 omega0 phi0 + (lambda0^2+omega0^2)/(2 mbar) = 0
    disc = omega0 * omega0 - (lambda0 * lambda0 + omega0 * omega0) / (2.0 * mbar)
    if disc < 0.0:
        raise ParameterError(
            f"no admissible phi0 for mbar={mbar}: constraint discriminant {disc:.3e} < 0"
        )
    phi0 = omega0 + (1 if branch >= 0 else -1) * np.sqrt(disc)

    c = coefficients_from_governing(g)
    Ho, Ko = c.Ho.values, c.Ko.values
    coeffs = {
        "p": c.p.values,
        "q": c.q.values,
        "Ho": Ho,
        "Ko": Ko,
        "ea": Ko + Ho,   # e^alpha  = cosh + sinh
        "eia": Ko - Ho,  # e^-alpha = cosh - sinh
    }

    def deriv_x(cv, w):
        return _matvec(_bd_matrix_x(cv, mbar), w)

    def deriv_y(cv, w):
        return _matvec(_bd_matrix_y(cv, mbar), w)

    init = np.array([lambda0, 0.0, omega0, phi0, phi0 - 2.0 * omega0])
    out = sweep_grid(g.grid, coeffs, deriv_x, deriv_y, init, substeps=substeps)
    lam, mu, om, ph, sig = (out[:, :, k] for k in range(5))
    ch = qn * ph
    with np.errstate(divide="ignore", invalid="ignore"):
        nu = ch - qn * ph * ph / (2.0 * om)
    bigM = m * om * nu
    singular = (
        ~np.isfinite(om) | ~np.isfinite(nu)
        | (np.abs(om) < EPS_SING) | (np.abs(nu) < EPS_SING) | (np.abs(bigM) < EPS_SING)
    )
    quad = lam * lam + mu * mu + om * om - 2.0 * m * om * ch + m * qn * ph * ph
    scale = abs(2.0 * m * omega0 * qn * phi0 - m * qn * phi0 * phi0)
    drift = float(np.max(np.abs(quad))) / (scale if scale > 0 else 1.0)
    f = lambda v: ScalarField(g.grid, v)
    lx = LaxFields(
        g.grid, m, qn, f(lam), f(mu), f(om), f(ph), f(ch), f(nu), f(bigM),
        singular, drift, 0.0,
    )
    if lx.singular.all():
        raise SingularGridError("Bianchi-Darboux transformation undefined on every node")
    primed, invalid = backlund_governing(g, lx)
    raw = backlund_coefficients(c, lx, qn)
    from .frames import integrate_frame, reconstruct_surfaces

    fgrid = integrate_frame(c, np.eye(3))
    triple, _ = reconstruct_surfaces(fgrid, c)
    r_p = backlund_surface(triple, fgrid, lx)
    primed_coeffs = coefficients_from_governing(primed)
    return BacklundResult(lx, primed, primed_coeffs, raw, r_p, invalid)
