"""Closed-form special functions and constants.

Everything here is a pure function of its arguments.  These values are the
ground truth that the Monte Carlo checks compare against.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError

GAMMA_MAX_ARG = 170.0


class Regime(enum.Enum):
    POSITIVE_BETA = "positive_beta"  # beta > 0
    INVERSE_SUB = "inverse_sub"  # beta == 0, Y is W itself
    NEGATIVE_REGULAR = "negative_regular"  # -alpha < beta < 0
    CRITICAL = "critical"  # beta == -alpha
    DIVERGENT = "divergent"  # beta < -alpha


def classify(alpha: float, beta: float) -> Regime:
    if beta > 0:
        return Regime.POSITIVE_BETA
    if beta == 0:
        return Regime.INVERSE_SUB
    if beta > -alpha:
        return Regime.NEGATIVE_REGULAR
    if beta == -alpha:
        return Regime.CRITICAL
    return Regime.DIVERGENT


@dataclass(frozen=True)
class FiissParams:
    """Index pair ``(alpha, beta)`` of a fractionally integrated inverse
    stable subordinator."""

    alpha: float
    beta: float = 0.0

    def __post_init__(self):
        a, b = float(self.alpha), float(self.beta)
        if not 0.0 < a < 1.0:
            raise DomainError(f"alpha must lie in (0, 1), got {self.alpha!r}")
        if not math.isfinite(b):
            raise DomainError(f"beta must be finite, got {self.beta!r}")
        object.__setattr__(self, "alpha", a)
        object.__setattr__(self, "beta", b)

    @property
    def regime(self) -> Regime:
        return classify(self.alpha, self.beta)

    @property
    def index(self) -> float:
        """Self-similarity index alpha + beta."""
        return self.alpha + self.beta

    @property
    def continuous(self) -> bool:
        return self.beta > -self.alpha

    @property
    def c(self) -> float:
        """Rate multiplier (alpha + beta) / alpha in the exponential functional."""
        return (self.alpha + self.beta) / self.alpha

    def as_dict(self) -> dict:
        return {"alpha": self.alpha, "beta": self.beta, "regime": self.regime.value}


def _check_alpha(alpha: float) -> float:
    if not 0.0 < alpha < 1.0:
        raise DomainError(f"alpha must lie in (0, 1), got {alpha!r}")
    return float(alpha)


def _require_continuous(params: FiissParams) -> None:
    if not params.continuous:
        raise DomainError(
            f"requires beta > -alpha, got alpha={params.alpha}, beta={params.beta}"
        )


def gamma_fn(x: float) -> float:
    """Euler's gamma function on ``(0, 170]``.

    Backed by :func:`math.gamma`, a fixed-coefficient Lanczos approximation
    accurate to a few ulp on this range.
    """
    x = float(x)
    if not 0.0 < x <= GAMMA_MAX_ARG:
        raise DomainError(f"gamma_fn argument must lie in (0, {GAMMA_MAX_ARG}], got {x!r}")
    return math.gamma(x)


def mittag_leffler_moment(alpha: float, n: int) -> float:
    """``E W(1)^n = n! / (Gamma(1-alpha)^n Gamma(1+n alpha))``."""
    _check_alpha(alpha)
    if int(n) != n or n < 1:
        raise DomainError(f"moment order must be a positive integer, got {n!r}")
    n = int(n)
    log_m = math.lgamma(n + 1) - n * math.log(gamma_fn(1 - alpha)) - math.lgamma(1 + n * alpha)
    return math.exp(log_m)


def laplace_exponent_phi(alpha: float, s: float) -> float:
    """Laplace exponent of the killed subordinator with unit killing rate,
    ``Gamma(1-alpha) Gamma(1+alpha s) / Gamma(1+alpha(s-1))``."""
    _check_alpha(alpha)
    if s < 0:
        raise DomainError(f"s must be nonnegative, got {s!r}")
    return gamma_fn(1 - alpha) * gamma_fn(1 + alpha * s) / gamma_fn(1 + alpha * (s - 1))


def psi_exponent(params: FiissParams, s: float) -> float:
    """Laplace exponent of ``c Z`` with ``c = (alpha+beta)/alpha``."""
    _require_continuous(params)
    a, h = params.alpha, params.index
    if s < 0 or h * s + 1 - a <= 0:
        raise DomainError(f"psi_exponent undefined at s={s!r} for {params}")
    return gamma_fn(1 - a) * gamma_fn(h * s + 1) / gamma_fn(h * s + 1 - a)


def inverse_lil_constant(alpha: float) -> float:
    """limsup constant of ``W(u) / (u^alpha (log|log u|)^(1-alpha))``."""
    _check_alpha(alpha)
    return 1.0 / (gamma_fn(1 - alpha) * alpha**alpha * (1 - alpha) ** (1 - alpha))


def modulus_constant(alpha: float) -> float:
    """Exact uniform modulus-of-continuity constant of W (exposed, not verified)."""
    _check_alpha(alpha)
    return 1.0 / (gamma_fn(1 - alpha) * alpha ** (2 * alpha - 1) * (1 - alpha) ** (1 - alpha))


def lil_constant(params: FiissParams) -> float:
    """``c_{alpha,beta} = 1 / (Gamma(1-alpha) (alpha+beta)^alpha (1-alpha)^(1-alpha))``.

    At ``beta = 0`` the expression is literally :func:`inverse_lil_constant`.
    """
    _require_continuous(params)
    a = params.alpha
    return 1.0 / (gamma_fn(1 - a) * params.index**a * (1 - a) ** (1 - a))


def tail_asymptote(params: FiissParams, x: float) -> float:
    """Leading term of ``-log P{Y(1) > x}``, i.e. ``(x / c)^(1/(1-alpha))``."""
    if x <= 0:
        raise DomainError(f"x must be positive, got {x!r}")
    return (x / lil_constant(params)) ** (1.0 / (1.0 - params.alpha))


def fiiss_mean(params: FiissParams, u: float = 1.0) -> float:
    """``E Y(u) = u^(alpha+beta) Gamma(1+beta) / (Gamma(1-alpha) Gamma(1+alpha+beta))``.

    Finite iff ``beta > -1``.
    """
    a, b = params.alpha, params.beta
    if b <= -1:
        raise DomainError(f"E Y(u) is infinite for beta <= -1, got {b}")
    return u ** (a + b) * gamma_fn(1 + b) / (gamma_fn(1 - a) * gamma_fn(1 + a + b))


def fiiss_moment(params: FiissParams, n: int, u: float = 1.0) -> float:
    """``E Y(u)^n = u^(n(alpha+beta)) n! / (Psi(1) ... Psi(n))`` for beta > -alpha."""
    if int(n) != n or n < 1:
        raise DomainError(f"moment order must be a positive integer, got {n!r}")
    prod = 1.0
    for k in range(1, int(n) + 1):
        prod *= psi_exponent(params, k)
    return u ** (n * params.index) * math.factorial(int(n)) / prod


# Levy measure of the killed subordinator Z.  With y = 1 - exp(-x/alpha) the
# measure becomes alpha * y^(-alpha-1) dy on (0, 1).


def _y_of(alpha, x):
    return -np.expm1(-np.asarray(x, dtype=float) / alpha)


def levy_density_nu(alpha: float, x):
    """Density ``exp(-x/alpha) / (1 - exp(-x/alpha))^(alpha+1)`` on ``x > 0``."""
    _check_alpha(alpha)
    xa = np.asarray(x, dtype=float)
    if np.any(xa <= 0):
        raise DomainError("levy_density_nu requires x > 0")
    out = np.exp(-xa / alpha) / _y_of(alpha, xa) ** (alpha + 1)
    return float(out) if out.ndim == 0 else out


def nu_tail(alpha: float, eps):
    """Mass of the Levy measure above ``eps``: ``(1 - exp(-eps/alpha))^(-alpha) - 1``."""
    _check_alpha(alpha)
    e = np.asarray(eps, dtype=float)
    if np.any(e <= 0):
        raise DomainError("nu_tail requires eps > 0")
    # (1 - q)^(-alpha) - 1 with q = exp(-eps/alpha), written to keep precision
    # for both small and large eps
    out = np.expm1(-alpha * np.log1p(-np.exp(-e / alpha)))
    return float(out) if out.ndim == 0 else out


def nu_small_jump_mean(alpha: float, eps: float) -> float:
    """First moment of the Levy measure below ``eps``, ``int_0^eps x nu(dx)``.

    Uses the series ``alpha^2 sum_k y^(k-alpha) / (k (k-alpha))`` with
    ``y = 1 - exp(-eps/alpha)``.
    """
    _check_alpha(alpha)
    if eps <= 0:
        raise DomainError("nu_small_jump_mean requires eps > 0")
    y = float(_y_of(alpha, eps))
    if y >= 1.0:
        raise DomainError("eps too large for the series representation")
    kmax = 64 if y < 0.5 else int(min(1e6, math.ceil(-40.0 / math.log(y)) + 2))
    k = np.arange(1, kmax + 1, dtype=float)
    terms = np.exp((k - alpha) * math.log(y)) / (k * (k - alpha))
    return alpha * alpha * float(terms[::-1].sum())
