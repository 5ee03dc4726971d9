"""Separation measures between univariate normal distributions.

For X ~ N(mu_x, sigma_x^2) and Y ~ N(mu_y, sigma_y^2) the directional total
variation distance is

    dtvd(X, Y) = 4 * Phi((mu_y - mu_x) / (sigma_x + sigma_y)) - 2
               = 2 * erf((mu_y - mu_x) / (sqrt(2) * (sigma_x + sigma_y)))

where Phi is the standard normal cdf. Its sign follows sign(mu_y - mu_x) and
its magnitude is the separation achieved by the optimal single-threshold
rule. That rule comes from the minimax probability classifier, which for two
normals has the closed-form boundary

    a* = 1 / (mu_x - mu_y)
    T  = (mu_x * sigma_y + mu_y * sigma_x) / (sigma_x + sigma_y)
    b* = a* * T
    kappa* = |mu_x - mu_y| / (sigma_x + sigma_y)

and the tail-mass expression

    Area(t) = 1 - Phi((t - mu_x) / sigma_x) + Phi((t - mu_y) / sigma_y)

satisfies dtvd = 2 - 2 * Area(T) in both orderings of the means. A numeric
quadrature of the unsigned total variation distance is provided as an
independent check on the closed forms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

from .errors import DegenerateBoundaryError, NumericError

_CDF_LO = float(np.nextafter(0.0, 1.0))
_CDF_HI = float(np.nextafter(1.0, 0.0))
_DTVD_HI = float(np.nextafter(2.0, 0.0))
_TVD_HI = float(np.nextafter(1.0, 0.0))

# Absolute error contract of tvd_numeric.
TVD_QUAD_TOL = 1e-9


@dataclass(frozen=True)
class Gaussian1D:
    """A univariate normal, parameterized by mean and standard deviation.

    sigma = 0 is representable (it arises as a degenerate per-dimension
    statistic on the encoder side) but every operation in this module
    requires sigma > 0.
    """

    mu: float
    sigma: float

    def __post_init__(self):
        if not (math.isfinite(self.mu) and math.isfinite(self.sigma)):
            raise ValueError("Gaussian1D parameters must be finite")
        if self.sigma < 0.0:
            raise ValueError("Gaussian1D sigma must be non-negative")


@dataclass(frozen=True)
class MpmSolution:
    """Closed-form minimax separating rule between two normals.

    a_star and b_star define the decision function a*x - b; threshold is the
    decision point b_star / a_star and kappa_star the worst-case margin.
    """

    a_star: float
    b_star: float
    kappa_star: float
    threshold: float


def _require_positive_sigma(p: Gaussian1D, name: str) -> None:
    if p.sigma <= 0.0:
        raise ValueError(f"{name}.sigma must be > 0, got {p.sigma!r}")


def std_normal_cdf(x: float) -> float:
    """Standard normal cdf via erf, accurate to well under 1e-12.

    The result is clamped into the open interval (0, 1): for |x| large
    enough that erf saturates in float64, the nearest representable value
    inside the interval is returned.
    """
    x = float(x)
    if not math.isfinite(x):
        raise ValueError("std_normal_cdf requires a finite argument")
    val = 0.5 * (1.0 + math.erf(x / math.sqrt(2.0)))
    if val <= 0.0:
        return _CDF_LO
    if val >= 1.0:
        return _CDF_HI
    return val


def dtvd_closed_form(px: Gaussian1D, py: Gaussian1D) -> float:
    """Directional total variation distance, in the open interval (-2, 2).

    Computed as 2 * erf((mu_y - mu_x) / (sqrt(2) * (sigma_x + sigma_y))).
    Antisymmetric in its arguments; zero when the means coincide. Values
    that saturate float64 erf are clamped one ulp inside the interval.
    """
    _require_positive_sigma(px, "px")
    _require_positive_sigma(py, "py")
    arg = (py.mu - px.mu) / (px.sigma + py.sigma)
    val = 2.0 * math.erf(arg / math.sqrt(2.0))
    if val >= 2.0:
        return _DTVD_HI
    if val <= -2.0:
        return -_DTVD_HI
    return val


def mpm_closed_form(px: Gaussian1D, py: Gaussian1D) -> MpmSolution:
    """Minimax separating rule; requires mu_x != mu_y.

    Raises DegenerateBoundaryError when the means coincide (the boundary is
    undefined there; dtvd_closed_form is still well defined and equals 0).
    """
    _require_positive_sigma(px, "px")
    _require_positive_sigma(py, "py")
    if px.mu == py.mu:
        raise DegenerateBoundaryError(
            "separating boundary undefined for equal means")
    a_star = 1.0 / (px.mu - py.mu)
    threshold = (px.mu * py.sigma + py.mu * px.sigma) / (px.sigma + py.sigma)
    b_star = a_star * threshold
    kappa_star = abs(px.mu - py.mu) / (px.sigma + py.sigma)
    return MpmSolution(a_star=a_star, b_star=b_star,
                       kappa_star=kappa_star, threshold=threshold)


def misclassification_area(px: Gaussian1D, py: Gaussian1D,
                           threshold: float) -> float:
    """Tail-mass expression 1 - Phi((t-mu_x)/sigma_x) + Phi((t-mu_y)/sigma_y).

    When mu_x <= mu_y this is the total misclassified mass of the rule that
    labels values below t as X and above as Y. The same expression is kept
    unchanged when mu_x > mu_y so that the identity

        dtvd_closed_form(px, py) = 2 - 2 * misclassification_area(px, py, T)

    holds in both orderings at the minimax threshold T; in that case its
    value is 2 minus the misclassified mass and may exceed 1.
    """
    _require_positive_sigma(px, "px")
    _require_positive_sigma(py, "py")
    threshold = float(threshold)
    if not math.isfinite(threshold):
        raise ValueError("threshold must be finite")
    return (1.0
            - std_normal_cdf((threshold - px.mu) / px.sigma)
            + std_normal_cdf((threshold - py.mu) / py.sigma))


def _pdf_crossings(px: Gaussian1D, py: Gaussian1D) -> list[float]:
    """Real solutions of p_x(u) = p_y(u), used as quadrature break points."""
    a = 1.0 / (2.0 * px.sigma ** 2)
    b = 1.0 / (2.0 * py.sigma ** 2)
    qa = b - a
    qb = -2.0 * (b * py.mu - a * px.mu)
    qc = b * py.mu ** 2 - a * px.mu ** 2 - math.log(px.sigma / py.sigma)
    if qa == 0.0:
        if qb == 0.0:
            return []
        return [-qc / qb]
    disc = qb * qb - 4.0 * qa * qc
    if disc <= 0.0:
        return []
    root = math.sqrt(disc)
    return sorted([(-qb - root) / (2.0 * qa), (-qb + root) / (2.0 * qa)])


def tvd_numeric(px: Gaussian1D, py: Gaussian1D) -> float:
    """Unsigned total variation distance by adaptive quadrature.

    Integrates 0.5 * |p_x - p_y| over [min mu - 10 max sigma,
    max mu + 10 max sigma] with the pdf crossing points passed as break
    points. Guaranteed absolute error at most 1e-9 or NumericError is
    raised. The result lies in [0, 1).
    """
    _require_positive_sigma(px, "px")
    _require_positive_sigma(py, "py")
    lo = min(px.mu, py.mu) - 10.0 * max(px.sigma, py.sigma)
    hi = max(px.mu, py.mu) + 10.0 * max(px.sigma, py.sigma)

    cx = 1.0 / (math.sqrt(2.0 * math.pi) * px.sigma)
    cy = 1.0 / (math.sqrt(2.0 * math.pi) * py.sigma)
    vx = 2.0 * px.sigma ** 2
    vy = 2.0 * py.sigma ** 2
    mx, my = px.mu, py.mu

    def integrand(u: float) -> float:
        return abs(cx * math.exp(-(u - mx) ** 2 / vx)
                   - cy * math.exp(-(u - my) ** 2 / vy))

    points = [c for c in _pdf_crossings(px, py) if lo < c < hi]
    val, abserr = quad(integrand, lo, hi, points=points or None,
                       epsabs=1e-11, epsrel=1e-11, limit=500)
    if 0.5 * abserr > TVD_QUAD_TOL:
        raise NumericError(
            f"quadrature error estimate {0.5 * abserr:.3e} exceeds "
            f"{TVD_QUAD_TOL:.1e}")
    result = 0.5 * val
    if result < 0.0:
        return 0.0
    if result >= 1.0:
        return _TVD_HI
    return result
