"""Statistical tests, estimators, and the verification report container."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate
from scipy.special import kolmogorov

from .analytic import FiissParams, _check_alpha, _require_continuous, lil_constant
from .errors import DomainError
from .paths import DEFAULT_T_STEP, fiiss_from_subordinator, simulate_subordinator_until
from .sampling import EmpiricalSample, RandomSource, _json_default


@dataclass(frozen=True)
class KSResult:
    statistic: float
    p_value: float


def _values(a) -> np.ndarray:
    v = a.values if isinstance(a, EmpiricalSample) else np.sort(np.asarray(a, dtype=float).ravel())
    if v.size == 0:
        raise DomainError("empty sample")
    return v


def ks_two_sample(a, b) -> KSResult:
    """Two-sample Kolmogorov-Smirnov statistic with asymptotic p-value."""
    x, y = _values(a), _values(b)
    z = np.concatenate([x, y])
    fx = np.searchsorted(x, z, side="right") / x.size
    fy = np.searchsorted(y, z, side="right") / y.size
    d = float(np.max(np.abs(fx - fy)))
    en = x.size * y.size / (x.size + y.size)
    return KSResult(d, float(kolmogorov(math.sqrt(en) * d)))


def ks_one_sample(a, cdf) -> KSResult:
    """One-sample Kolmogorov-Smirnov statistic against a continuous ``cdf``."""
    x = _values(a)
    n = x.size
    f = np.asarray(cdf(x), dtype=float)
    i = np.arange(1, n + 1)
    d = float(max(np.max(i / n - f), np.max(f - (i - 1) / n)))
    return KSResult(d, float(kolmogorov(math.sqrt(n) * d)))


def moment_estimate(a, n: int) -> tuple[float, float]:
    """Sample mean of ``x^n`` and its standard error."""
    if int(n) != n or n < 1:
        raise DomainError(f"moment order must be a positive integer, got {n!r}")
    p = _values(a) ** int(n)
    se = float(p.std(ddof=1) / math.sqrt(p.size)) if p.size > 1 else 0.0
    return float(p.mean()), se


@dataclass(frozen=True)
class Fit:
    slope: float
    intercept: float
    r2: float


def loglog_slope(xs, ys, log_x: bool = True, log_y: bool = True) -> Fit:
    """Ordinary least squares of ``ys`` on ``xs`` in (optionally) log coordinates."""
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    if x.shape != y.shape or x.ndim != 1 or x.size < 3:
        raise DomainError("need at least three matching points")
    if (log_x and np.any(x <= 0)) or (log_y and np.any(y <= 0)):
        raise DomainError("nonpositive value under log")
    if log_x:
        x = np.log(x)
    if log_y:
        y = np.log(y)
    xm, ym = x.mean(), y.mean()
    sxx = np.sum((x - xm) ** 2)
    if sxx == 0:
        raise DomainError("xs are all equal")
    slope = float(np.sum((x - xm) * (y - ym)) / sxx)
    intercept = float(ym - slope * xm)
    ss_tot = float(np.sum((y - ym) ** 2))
    ss_res = float(np.sum((y - intercept - slope * x) ** 2))
    r2 = 1.0 if ss_tot == 0 else 1.0 - ss_res / ss_tot
    return Fit(slope, intercept, r2)


# --- Dynkin-Lamperti law ------------------------------------------------------


def _dl_left(alpha: float, x: float) -> float:
    # int_0^x s^-a (1-s)^(a-1) ds with s = q^(1/(1-a)); integrand becomes smooth
    a = alpha
    g = lambda q: (1.0 - q ** (1.0 / (1.0 - a))) ** (a - 1.0) / (1.0 - a)
    return integrate.quad(g, 0.0, x ** (1.0 - a), epsabs=1e-13, epsrel=1e-12)[0]


def _dl_right(alpha: float, x: float) -> float:
    # int_x^1 s^-a (1-s)^(a-1) ds with 1-s = q^(1/a)
    a = alpha
    g = lambda q: (1.0 - q ** (1.0 / a)) ** (-a) / a
    return integrate.quad(g, 0.0, (1.0 - x) ** a, epsabs=1e-13, epsrel=1e-12)[0]


def dynkin_lamperti_cdf(alpha: float, x):
    """CDF of the density ``sin(pi alpha)/pi x^-alpha (1-x)^(alpha-1)`` on (0, 1)."""
    _check_alpha(alpha)
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    k = math.sin(math.pi * alpha) / math.pi
    half = _dl_left(alpha, 0.5)
    out = np.empty(xs.shape)
    for i, xi in enumerate(xs.flat):
        if xi <= 0:
            out.flat[i] = 0.0
        elif xi >= 1:
            out.flat[i] = 1.0
        elif xi <= 0.5:
            out.flat[i] = k * _dl_left(alpha, xi)
        else:
            out.flat[i] = k * half + k * (_dl_right(alpha, 0.5) - _dl_right(alpha, xi))
    out = np.clip(out, 0.0, 1.0)
    return float(out[0]) if np.ndim(x) == 0 else out


# --- LIL envelope -----------------------------------------------------------


@dataclass
class LilScan:
    params: FiissParams
    u_grid: np.ndarray
    ratios: np.ndarray  # (n_paths, len(u_grid))
    constant: float

    @property
    def path_max(self) -> np.ndarray:
        return self.ratios.max(axis=1)

    @property
    def max_ratio(self) -> float:
        return float(self.ratios.max())

    @property
    def min_path_max(self) -> float:
        return float(self.path_max.min())

    def median_at(self, index: int = -1) -> float:
        return float(np.median(self.ratios[:, index]))

    def as_dict(self) -> dict:
        return {
            "params": self.params.as_dict(),
            "constant": self.constant,
            "max_ratio": self.max_ratio,
            "max_over_constant": self.max_ratio / self.constant,
            "min_path_max": self.min_path_max,
            "median_at_last_u": self.median_at(-1),
            "u_min": float(self.u_grid[0]),
            "u_max": float(self.u_grid[-1]),
            "n_paths": int(self.ratios.shape[0]),
        }


def lil_ratio_scan(params: FiissParams, u_grid, n_paths: int, src: RandomSource,
                   t_step: float = 0.02) -> LilScan:
    """``Y(u) / (u^(alpha+beta) (log log u)^(1-alpha))`` along ``u_grid``, per path."""
    _require_continuous(params)
    u = np.asarray(u_grid, dtype=float)
    if u.min() <= math.e:
        raise DomainError("u_grid must lie above e so that log log u > 0")
    norm = u**params.index * np.log(np.log(u)) ** (1 - params.alpha)
    ratios = np.empty((n_paths, u.size))
    for i in range(n_paths):
        d = simulate_subordinator_until(params.alpha, float(u.max()), t_step, src.substream(i))
        ratios[i] = fiiss_from_subordinator(d, params, u) / norm
    return LilScan(params, u, ratios, lil_constant(params))


# --- reports ----------------------------------------------------------------

_RELATIONS = {
    "<": lambda s, t: s < t,
    "<=": lambda s, t: s <= t,
    ">": lambda s, t: s > t,
    ">=": lambda s, t: s >= t,
    "in": lambda s, t: t[0] <= s <= t[1],
    "true": lambda s, t: bool(s),
}


@dataclass
class ReportEntry:
    """One named check; ``passed`` is derived from ``statistic`` and ``threshold``."""

    name: str
    statistic: float
    threshold: object
    relation: str = "<"
    n: int = 0
    seed: int = 0
    params: dict = field(default_factory=dict)
    meta: dict = field(default_factory=dict)
    passed: bool = field(init=False)

    def __post_init__(self):
        if self.relation not in _RELATIONS:
            raise DomainError(f"unknown relation {self.relation!r}")
        stat = self.statistic
        self.passed = bool(np.isfinite(stat)) and bool(_RELATIONS[self.relation](stat, self.threshold))

    def as_dict(self) -> dict:
        return {
            "name": self.name,
            "statistic": self.statistic,
            "relation": self.relation,
            "threshold": self.threshold,
            "passed": self.passed,
            "n": self.n,
            "seed": self.seed,
            "params": self.params,
            "meta": self.meta,
        }

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{status} {self.name}: statistic={self.statistic:.6g} {self.relation} {self.threshold}"


@dataclass
class VerificationReport:
    entries: list = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    def add(self, entry: ReportEntry) -> ReportEntry:
        self.entries.append(entry)
        return entry

    @property
    def passed(self) -> bool:
        return all(e.passed for e in self.entries)

    def as_dict(self) -> dict:
        return {"meta": self.meta, "passed": self.passed, "entries": [e.as_dict() for e in self.entries]}

    def to_json(self) -> str:
        return json.dumps(self.as_dict(), indent=2, default=_json_default, ensure_ascii=False) + "\n"
