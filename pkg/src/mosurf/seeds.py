"""Seed solutions (alpha, xi, h) of the governing systems for both kinds.

Three closed-form/ODE families are provided:

* ``cmc`` (1st kind): xi = 0, h = 1, alpha = a(x) with
  ``a'' + sinh(a) cosh(a) = 0`` -- a surface of constant mean curvature -1/2
  in conformal curvature-line coordinates (elliptic sinh-Gordon reduction).
* ``pseudospherical`` (2nd kind): xi = 0, h = 0, ``alpha = 2 arctan exp(z)``
  with ``z = (x - v y)/sqrt(1 - v^2)``, the sine-Gordon kink; a surface of
  constant Gauss curvature -1.
* ``liouville`` (2nd kind): alpha = pi/4 and ``exp(-xi) = a (x^2+y^2) + 1/(8a)``
  with the h branch integrated in closed form; the xi equation is the
  Liouville equation with separated variables.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateSeedError, ParameterError
from .fields import Grid2D, ScalarField
from .kernel import GoverningFields

__all__ = [
    "SeedSpec",
    "FAMILY_KINDS",
    "seed_cmc",
    "seed_pseudospherical",
    "seed_liouville",
    "generate_seed",
    "sinh_gordon_profile",
]

FAMILY_KINDS = {"cmc": "first", "pseudospherical": "second", "liouville": "second"}


@dataclass(frozen=True)
class SeedSpec:
    """Seed family, load and family-specific parameters.

    alpha0 is the cmc profile amplitude at the left edge, v the kink velocity
    (|v| < 1), (a, c1) the Liouville separation coefficient (a > 0) and the
    integration constant of its h branch.
    """

    family: str
    grid: Grid2D
    qn: float = 1.0
    alpha0: float = 1.0
    v: float = 0.0
    a: float = 0.5
    c1: float = 0.0

    def __post_init__(self) -> None:
        if self.family not in FAMILY_KINDS:
            raise ParameterError(
                f"unknown seed family {self.family!r}; expected one of {sorted(FAMILY_KINDS)}"
            )
        if self.qn == 0.0:
            raise ParameterError("the normal load qn must be nonzero")

    @property
    def kind(self) -> str:
        return FAMILY_KINDS[self.family]


def sinh_gordon_profile(
    alpha0: float, x0: float, dx: float, nx: int, substeps: int = 4
) -> tuple[np.ndarray, np.ndarray]:
    """Node values ``(a, a')`` of ``a'' = -sinh(a) cosh(a)``, ``a(x0) = alpha0``, ``a'(x0) = 0``.

    Classical RK4 with ``substeps`` steps per grid interval (step <= dx/4 by
    default), so the ODE error is far below the finite-difference residual
    tolerances used elsewhere. Conserves ``a'^2 + sinh^2 a`` to ~1e-12.
    """
    a = np.empty(nx)
    b = np.empty(nx)
    a[0], b[0] = alpha0, 0.0
    h = dx / substeps

    def rhs(state):
        av, bv = state
        return np.array([bv, -np.sinh(av) * np.cosh(av)])

    state = np.array([alpha0, 0.0])
    for i in range(1, nx):
        for _ in range(substeps):
            k1 = rhs(state)
            k2 = rhs(state + 0.5 * h * k1)
            k3 = rhs(state + 0.5 * h * k2)
            k4 = rhs(state + h * k3)
            state = state + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        a[i], b[i] = state
    return a, b


def seed_cmc(spec: SeedSpec) -> GoverningFields:
    """Constant-mean-curvature seed of the 1st kind (xi = 0, h = 1).

    The stresses are isotropic and homogeneous, T1 = T2 = qn.
    """
    if spec.family != "cmc":
        raise ParameterError(f"seed_cmc called with family {spec.family!r}")
    if spec.alpha0 == 0.0:
        raise DegenerateSeedError(
            "alpha0 = 0 gives a flat degenerate seed (vanishing third fundamental form)"
        )
    g = spec.grid
    profile, _ = sinh_gordon_profile(spec.alpha0, g.x0, g.dx, g.nx)
    alpha = np.repeat(profile[:, None], g.ny, axis=1)
    return GoverningFields(
        kind="first",
        qn=spec.qn,
        alpha=ScalarField(g, alpha),
        xi=ScalarField.zeros(g),
        h=ScalarField.constant(g, 1.0),
    )


def seed_pseudospherical(spec: SeedSpec) -> GoverningFields:
    """Sine-Gordon kink seed of the 2nd kind (xi = 0, h = 0).

    beta = 2 alpha is the Lorentz-boosted kink of ``beta_xx - beta_yy = sin beta``.
    """
    if spec.family != "pseudospherical":
        raise ParameterError(f"seed_pseudospherical called with family {spec.family!r}")
    if not abs(spec.v) < 1.0:
        raise ParameterError(f"kink velocity must satisfy |v| < 1, got {spec.v}")
    g = spec.grid
    X, Y = g.meshgrid()
    z = (X - spec.v * Y) / np.sqrt(1.0 - spec.v * spec.v)
    with np.errstate(over="ignore"):  # exp overflow saturates arctan at pi/2
        alpha = 2.0 * np.arctan(np.exp(z))
    return GoverningFields(
        kind="second",
        qn=spec.qn,
        alpha=ScalarField(g, alpha),
        xi=ScalarField.zeros(g),
        h=ScalarField.zeros(g),
    )


def seed_liouville(spec: SeedSpec) -> GoverningFields:
    """Separated Liouville seed of the 2nd kind (alpha = pi/4).

    ``u = exp(-xi) = a (x^2 + y^2) + 1/(8a)`` and
    ``h = (2 a y^2 + 1/(4a) + c1)/u - 1`` solve the h equations exactly.
    With c1 = 0 the column x = 0 has h = 1, where the stress T1 is singular;
    a small negative c1 (> -1/(4a)) keeps the whole grid regular.
    """
    if spec.family != "liouville":
        raise ParameterError(f"seed_liouville called with family {spec.family!r}")
    if not spec.a > 0.0:
        raise ParameterError(f"liouville coefficient a must be positive, got {spec.a}")
    g = spec.grid
    a, c1 = spec.a, spec.c1
    X, Y = g.meshgrid()
    u = a * (X * X + Y * Y) + 1.0 / (8.0 * a)
    if not (u > 0.0).all():  # impossible for a > 0; guards a broken grid
        raise DegenerateSeedError("liouville denominator u is not positive on the grid")
    h = (2.0 * a * Y * Y + 1.0 / (4.0 * a) + c1) / u - 1.0
    return GoverningFields(
        kind="second",
        qn=spec.qn,
        alpha=ScalarField.constant(g, np.pi / 4.0),
        xi=ScalarField(g, -np.log(u)),
        h=ScalarField(g, h),
    )


_GENERATORS = {
    "cmc": seed_cmc,
    "pseudospherical": seed_pseudospherical,
    "liouville": seed_liouville,
}


def generate_seed(spec: SeedSpec) -> GoverningFields:
    """Dispatch on the seed family."""
    return _GENERATORS[spec.family](spec)
