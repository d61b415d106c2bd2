"""Grid simulation of the stable subordinator D, its inverse W, and the
fractionally integrated process Y.

Conventions
-----------
* D is sampled on a uniform time grid ``t_i = i * t_step`` with exact stable
  increments, ``D_0 = 0``.
* ``W(u) = t_step * min{i : D_i > u}``, which overestimates the continuum
  value by less than one time step.
* ``Y(u) = t_step * sum_i (u - D_i)^beta`` over nodes below ``u`` (strictly
  below when ``beta < 0``), the left-endpoint rule for
  ``int_0^inf (u - D(t))^beta 1{D(t) <= u} dt``.  ``Y(0) = 0``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import partial

import numpy as np
from scipy.signal import fftconvolve
from scipy.special import binom

from .analytic import FiissParams, _check_alpha, gamma_fn, mittag_leffler_moment
from .errors import DomainError, RangeError, ResourceCapError
from .sampling import EmpiricalSample, RandomSource, map_chunks, sample_positive_stable, write_csv

DEFAULT_T_STEP = 1e-3
DEFAULT_U_STEP = 1e-2
MAX_NODES = 50_000_000
BLOCK_ELEMENTS = 2_000_000


@dataclass(frozen=True)
class GridPath:
    """Values of a process on the uniform grid ``origin + step * i``."""

    step: float
    values: np.ndarray
    origin: float = 0.0
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 1 or v.size < 2:
            raise DomainError("a GridPath needs at least two values")
        if not self.step > 0:
            raise DomainError(f"grid step must be positive, got {self.step!r}")
        object.__setattr__(self, "values", v)

    @property
    def grid(self) -> np.ndarray:
        return self.origin + self.step * np.arange(self.values.size)

    def __len__(self):
        return self.values.size

    def to_csv(self, path, label: str = "t", meta: dict | None = None) -> None:
        write_csv(path, [label, "value"], [self.grid, self.values], meta={**self.meta, **(meta or {})})


def increment_scale(alpha: float, step: float) -> float:
    """Scale of a D increment over ``step``: ``(Gamma(1-alpha) step)^(1/alpha)``."""
    return (gamma_fn(1 - alpha) * step) ** (1.0 / alpha)


def _check_cap(count: int, cap: int) -> None:
    if count > cap:
        raise ResourceCapError(f"path would need {count} nodes, cap is {cap}")


def simulate_subordinator(alpha: float, horizon: float, step: float, src: RandomSource, max_nodes: int = MAX_NODES) -> GridPath:
    """D on ``[0, horizon]`` (rounded up to whole steps)."""
    _check_alpha(alpha)
    if not 0 < step < horizon:
        raise DomainError(f"need 0 < step < horizon, got step={step}, horizon={horizon}")
    n_inc = int(math.ceil(horizon / step - 1e-9))
    _check_cap(n_inc + 1, max_nodes)
    inc = increment_scale(alpha, step) * sample_positive_stable(alpha, src, n_inc)
    values = np.concatenate(([0.0], np.cumsum(inc)))
    return GridPath(step, values, meta={"process": "D", "alpha": alpha})


def simulate_subordinator_until(alpha: float, level: float, step: float, src: RandomSource,
                                max_nodes: int = MAX_NODES, multiple_of: int = 1) -> GridPath:
    """D on a horizon grown by doubling until the last node exceeds ``level``.

    ``multiple_of`` pads the node count so that ``len - 1`` is divisible by it,
    which keeps strided sub-grids ending on the last node.
    """
    _check_alpha(alpha)
    if step <= 0:
        raise DomainError("step must be positive")
    scale = increment_scale(alpha, step)
    mean_w = max(level, 0.0) ** alpha * mittag_leffler_moment(alpha, 1)
    n_inc = max(16, int(1.5 * mean_w / step) + 16)
    chunks = [np.zeros(1)]
    last, total = 0.0, 0
    while last <= level or total % multiple_of:
        if last > level:
            n_inc = multiple_of - total % multiple_of
        _check_cap(total + n_inc + 1, max_nodes)
        inc = scale * sample_positive_stable(alpha, src, n_inc)
        part = last + np.cumsum(inc)
        chunks.append(part)
        last, total = part[-1], total + n_inc
        n_inc = total  # doubling
    return GridPath(step, np.concatenate(chunks), meta={"process": "D", "alpha": alpha})


def invert_path(d: GridPath, u_grid) -> np.ndarray:
    """``W(u) = d.step * min{i : d.values[i] > u}``; zero for ``u < 0``."""
    u = np.asarray(u_grid, dtype=float)
    if u.size and np.max(u) >= d.values[-1]:
        raise RangeError(f"u up to {np.max(u)} exceeds the subordinator reach {d.values[-1]}")
    idx = np.searchsorted(d.values, u, side="right")
    w = d.step * idx
    return np.where(u < 0, 0.0, w)


def simulate_inverse_subordinator(alpha: float, u_max: float, u_step: float, t_step: float,
                                  src: RandomSource, max_nodes: int = MAX_NODES) -> GridPath:
    if u_step <= 0 or t_step <= 0:
        raise DomainError("u_step and t_step must be positive")
    d = simulate_subordinator_until(alpha, u_max, t_step, src, max_nodes)
    m = int(round(u_max / u_step))
    u = u_step * np.arange(m + 1)
    return GridPath(u_step, invert_path(d, u), meta={"process": "W", "alpha": alpha, "t_step": t_step})


# --- Y from a subordinator path ------------------------------------------


def fiiss_from_subordinator(d: GridPath, params: FiissParams, u_grid) -> np.ndarray:
    """Time-integral form of Y evaluated on one D path."""
    u = np.atleast_1d(np.asarray(u_grid, dtype=float))
    beta = params.beta
    if u.size and np.max(u) >= d.values[-1]:
        raise RangeError(f"u up to {np.max(u)} exceeds the subordinator reach {d.values[-1]}")
    out = np.zeros(u.shape)
    pos = u > 0
    if beta == 0:
        out[pos] = d.step * np.searchsorted(d.values, u[pos], side="right")
        return out
    side = "left" if beta < 0 else "right"
    counts = np.searchsorted(d.values, u, side=side)
    nodes = d.values
    block = max(1, BLOCK_ELEMENTS // max(1, int(counts.max(initial=1))))
    for start in range(0, u.size, block):
        sl = slice(start, start + block)
        uu, kk = u[sl], counts[sl]
        kmax = int(kk.max(initial=0))
        if kmax == 0:
            continue
        diff = uu[:, None] - nodes[None, :kmax]
        mask = np.arange(kmax)[None, :] < kk[:, None]
        terms = np.where(mask, np.where(mask, diff, 1.0) ** beta, 0.0)
        out[sl] = d.step * terms.sum(axis=1)
    out[~pos] = 0.0
    return out


def fiiss_riemann_liouville(w: GridPath, beta: float, u_grid) -> np.ndarray:
    """``beta * int_0^u (u-y)^(beta-1) W(y) dy`` by product trapezoid.

    W is interpolated linearly between grid nodes and the kernel is
    integrated exactly on every cell, so the weak singularity at ``y = u``
    costs nothing.
    """
    if beta <= 0:
        raise DomainError(f"Riemann-Liouville form needs beta > 0, got {beta}")
    u = np.atleast_1d(np.asarray(u_grid, dtype=float))
    x = w.grid
    if u.size and np.max(u) > x[-1] + 1e-12 * w.step:
        raise RangeError("u beyond the end of the W grid")
    out = np.zeros(u.shape)
    wv = w.values
    slopes = np.diff(wv) / w.step
    for i, ui in enumerate(u):
        if ui <= 0:
            continue
        k = min(int(math.ceil(ui / w.step - 1e-12)), wv.size - 1)  # cells 1..k
        a = ui - x[:k]
        b = np.maximum(ui - x[1 : k + 1], 0.0)
        ab, bb = a**beta, b**beta
        part0 = wv[:k] * (ab - bb) / beta
        part1 = slopes[:k] * (a * (ab - bb) / beta - (a * ab - b * bb) / (beta + 1))
        out[i] = beta * float(np.sum(part0 + part1))
    return out


def fiiss_marchaud(w: GridPath, params: FiissParams, u_grid) -> np.ndarray:
    """``u^beta W(u) + |beta| int_0^u (W(u) - W(u-y)) y^(beta-1) dy``.

    W is interpolated linearly between nodes; on each cell the increment is
    affine in ``y`` and is integrated exactly against ``y^(beta-1)``.
    """
    b = params.beta
    if not -params.alpha < b < 0:
        raise DomainError(f"Marchaud form needs -alpha < beta < 0, got beta={b}")
    u = np.atleast_1d(np.asarray(u_grid, dtype=float))
    x = w.grid
    if u.size and np.max(u) > x[-1] + 1e-12 * w.step:
        raise RangeError("u beyond the end of the W grid")
    wv = w.values
    slopes = np.diff(wv) / w.step
    out = np.zeros(u.shape)
    for i, ui in enumerate(u):
        if ui <= 0:
            continue
        k = min(int(math.ceil(ui / w.step - 1e-12)), wv.size - 1)
        w_u = wv[k - 1] + slopes[k - 1] * (ui - x[k - 1])
        # cell j covers x in [x_j, x_{j+1}], i.e. y = u - x in [bj, aj]
        a = ui - x[:k]
        bj = ui - x[1 : k + 1]
        a_last = a[-1]
        a, bj = a[:-1], bj[:-1]
        s = slopes[: k - 1]
        const = w_u - wv[: k - 1] - s * a
        integral = const * (a**b - bj**b) / b + s * (a ** (b + 1) - bj ** (b + 1)) / (b + 1)
        last = slopes[k - 1] * a_last ** (b + 1) / (b + 1)
        out[i] = ui**b * w_u + abs(b) * (float(integral.sum()) + last)
    return out


# --- batched marginals ------------------------------------------------------


def _passage_values(count: int, src: RandomSource, alpha: float, levels: np.ndarray, beta: float, t_step: float) -> np.ndarray:
    """Y at each level for ``count`` independent paths, shape (count, len(levels))."""
    top = float(levels.max())
    scale = increment_scale(alpha, t_step)
    mean_steps = top**alpha * mittag_leffler_moment(alpha, 1) / t_step
    k = int(1.25 * mean_steps) + 16
    out = np.zeros((count, levels.size))
    carry = np.zeros(count)
    active = np.arange(count)
    strict = beta < 0
    while active.size:
        rows = max(1, BLOCK_ELEMENTS // k)
        done = []
        for start in range(0, active.size, rows):
            ids = active[start : start + rows]
            inc = scale * sample_positive_stable(alpha, src, (ids.size, k))
            csum = np.cumsum(inc, axis=1)
            nodes = np.empty_like(csum)
            nodes[:, 0] = carry[ids]
            nodes[:, 1:] = carry[ids, None] + csum[:, :-1]
            for j, lev in enumerate(levels):
                below = nodes < lev if strict else nodes <= lev
                if beta == 0:
                    out[ids, j] += below.sum(axis=1)
                else:
                    terms = np.where(below, np.where(below, lev - nodes, 1.0) ** beta, 0.0)
                    out[ids, j] += terms.sum(axis=1)
            carry[ids] = nodes[:, -1] + inc[:, -1]
            done.append(ids[carry[ids] > top])
        finished = np.concatenate(done)
        active = np.setdiff1d(active, finished, assume_unique=True)
        k = max(64, k // 2)
    out[:, levels <= 0] = 0.0
    return t_step * out


def fiiss_values_at(params: FiissParams, u_values, n: int, src: RandomSource,
                    t_step: float = DEFAULT_T_STEP, workers: int = 1, chunk: int = 10_000) -> np.ndarray:
    """Y at several fixed ``u`` on each of ``n`` independent paths, shape (n, m)."""
    levels = np.atleast_1d(np.asarray(u_values, dtype=float))
    if t_step <= 0:
        raise DomainError("t_step must be positive")
    func = partial(_passage_values, alpha=params.alpha, levels=levels, beta=params.beta, t_step=t_step)
    return map_chunks(func, n, src, chunk=chunk, workers=workers)


def fiiss_marginal(params: FiissParams, u: float, n: int, src: RandomSource,
                   t_step: float = DEFAULT_T_STEP, workers: int = 1) -> EmpiricalSample:
    """n i.i.d. draws of ``Y(u)``; with ``beta = 0`` these are draws of ``W(u)``."""
    if u <= 0:
        raise DomainError(f"u must be positive, got {u}")
    vals = fiiss_values_at(params, [u], n, src, t_step, workers)[:, 0]
    return EmpiricalSample.from_draws(
        vals, alpha=params.alpha, beta=params.beta, u=u, t_step=t_step,
        seed=src.seed, stream_id=src.stream_id, path=list(src.path),
    )


# --- refinement scan --------------------------------------------------------


def _time_integral_grid(nodes: np.ndarray, t_step: float, h: float, n_grid: int, beta: float,
                        near: int = 8, order: int = 14) -> np.ndarray:
    """``t_step * sum_{nodes < jh} (jh - node)^beta`` for ``j = 0..n_grid``.

    Node-grid pairs closer than ``near`` cells are summed exactly; farther
    pairs use the binomial expansion of ``(m - f)^beta`` in the fractional
    offset ``f`` of the node inside its cell, which turns each order into a
    convolution.  Truncation error is below ``near^-order`` relative.
    """
    y = np.zeros(n_grid + 1)
    nodes = nodes[nodes < n_grid * h]
    if nodes.size == 0:
        return y
    pos = nodes / h
    cell = np.floor(pos).astype(np.int64)
    frac = pos - cell
    # exact near field: grid points cell+1 .. cell+near-1
    for m in range(1, near):
        j = cell + m
        ok = j <= n_grid
        np.add.at(y, j[ok], (m - frac[ok]) ** beta)
    # a node sitting exactly on a grid point is excluded there (strict rule)
    # but contributes nothing else; m starts at 1 so nothing to undo
    far = np.zeros(n_grid + 1)
    if n_grid >= near:
        mm = np.arange(n_grid + 1, dtype=float)
        for p in range(order + 1):
            coef = binom(beta, p) * (-1.0) ** p
            if coef == 0.0:
                continue
            weights = np.bincount(cell, weights=frac**p, minlength=n_grid + 1)[: n_grid + 1]
            kern = np.zeros(n_grid + 1)
            kern[near:] = mm[near:] ** (beta - p)
            far += coef * fftconvolve(weights, kern)[: n_grid + 1]
    return t_step * h**beta * (y + far)


def _marchaud_grid(w_vals: np.ndarray, h: float, beta: float) -> np.ndarray:
    """Y on ``j*h`` for linearly interpolated W given at the same nodes.

    Equals the Stieltjes sum ``W_0 u^beta + sum_k dW_k h^beta g(j-k)`` with
    ``g(m) = ((m+1)^(beta+1) - m^(beta+1)) / (beta+1)``.
    """
    n = w_vals.size
    j = np.arange(n, dtype=float)
    dw = np.diff(w_vals)
    g = ((j[:-1] + 1) ** (beta + 1) - j[:-1] ** (beta + 1)) / (beta + 1)
    y = np.zeros(n)
    y[1:] = h**beta * fftconvolve(dw, g)[: n - 1] + w_vals[0] * (h * j[1:]) ** beta
    return y


@dataclass
class DivergenceScan:
    params: FiissParams
    interval: tuple
    ladder: list
    t_steps: list
    maxima: np.ndarray  # (n_paths, levels)
    medians: np.ndarray
    fixed_u: float
    fixed_values: np.ndarray  # Y(fixed_u) per path at the finest level

    def ratios(self) -> np.ndarray:
        return self.medians[1:] / self.medians[:-1]

    def as_dict(self) -> dict:
        return {
            "params": self.params.as_dict(),
            "interval": list(self.interval),
            "ladder": list(self.ladder),
            "t_steps": list(self.t_steps),
            "medians": self.medians.tolist(),
            "ratios": self.ratios().tolist(),
            "fixed_u": self.fixed_u,
            "fixed_u_all_finite": bool(np.all(np.isfinite(self.fixed_values))),
        }


def _scan_one_path(src: RandomSource, params: FiissParams, interval, ladder, t_step):
    a, b = interval
    n_max = max(ladder)
    fine_step = t_step * ladder[0] / n_max
    strides = [n_max // n for n in ladder]
    d = simulate_subordinator_until(params.alpha, b, fine_step, src, multiple_of=max(strides))
    beta = params.beta
    maxima, fixed = [], None
    for n, stride in zip(ladder, strides):
        nodes = d.values[::stride]
        step = fine_step * stride
        h = (b - a) / n
        lo = int(round(a / h))
        top = int(round(b / h))
        if -params.alpha < beta < 0:
            w = step * np.searchsorted(nodes, h * np.arange(top + 1), side="right")
            y = _marchaud_grid(w, h, beta)
        else:
            y = _time_integral_grid(nodes, step, h, top, beta)
        maxima.append(float(np.max(y[lo + 1 : top + 1])))
        fixed = float(y[(lo + top) // 2])
    return maxima, fixed


def divergence_scan(params: FiissParams, interval=(0.25, 0.75), ladder=(2**10, 2**11, 2**12, 2**13, 2**14),
                    n_paths: int = 50, src: RandomSource | None = None, t_step: float = DEFAULT_T_STEP) -> DivergenceScan:
    """Grid maxima of Y over ``interval`` along a resolution ladder.

    Level ``N`` uses the ``N``-point grid ``a + k (b-a)/N`` and the time step
    ``t_step * N_0 / N``; coarser levels are strided sub-grids of one fine D
    path, so every level sees the same trajectory.  For ``-alpha < beta < 0``
    Y is evaluated through the Marchaud form, otherwise through the time
    integral.
    """
    src = src or RandomSource()
    a, b = map(float, interval)
    ladder = [int(n) for n in ladder]
    if not 0 <= a < b:
        raise DomainError("interval must satisfy 0 <= a < b")
    n_max = max(ladder)
    for n in ladder:
        if n_max % n or ((a * n / (b - a)) % 1) > 1e-9:
            raise DomainError(f"ladder level {n} does not nest with {n_max} or align with the interval")
    maxima = np.zeros((n_paths, len(ladder)))
    fixed = np.zeros(n_paths)
    for i in range(n_paths):
        m, f = _scan_one_path(src.substream(i), params, (a, b), ladder, t_step)
        maxima[i] = m
        fixed[i] = f
    return DivergenceScan(
        params, (a, b), ladder, [t_step * ladder[0] / n for n in ladder],
        maxima, np.median(maxima, axis=0), (a + b) / 2, fixed,
    )
