"""Seeded random sources and the random variates the simulators need."""
from __future__ import annotations

import csv
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .analytic import _check_alpha, nu_tail
from .errors import DomainError


class RandomSource:
    """A PCG64 stream addressed by ``(seed, stream_id)``.

    The pair fully determines the output sequence.  Distinct stream ids (and
    distinct :meth:`substream` indices) map to distinct ``SeedSequence`` spawn
    keys and are statistically independent.  A source must be owned by one
    worker at a time.
    """

    def __init__(self, seed: int = 0, stream_id: int = 0, _path: tuple = ()):
        if seed < 0 or stream_id < 0:
            raise DomainError("seed and stream_id must be nonnegative")
        self.seed = int(seed)
        self.stream_id = int(stream_id)
        self.path = tuple(int(p) for p in _path)
        seq = np.random.SeedSequence(self.seed, spawn_key=(self.stream_id, *self.path))
        self.generator = np.random.Generator(np.random.PCG64(seq))

    def substream(self, index: int) -> "RandomSource":
        return RandomSource(self.seed, self.stream_id, (*self.path, int(index)))

    def __repr__(self):
        return f"RandomSource(seed={self.seed}, stream_id={self.stream_id}, path={self.path})"

    def __reduce__(self):
        # rebuild from the address so a pickled copy restarts the stream
        return (RandomSource, (self.seed, self.stream_id, self.path))

    def uniform(self, size=None):
        """Uniform draws on the open interval (0, 1)."""
        g = self.generator
        if size is None:
            u = g.random()
            while u == 0.0:
                u = g.random()
            return u
        u = g.random(size)
        bad = u == 0.0
        while bad.any():
            u[bad] = g.random(int(bad.sum()))
            bad = u == 0.0
        return u

    def standard_exponential(self, size=None):
        g = self.generator
        if size is None:
            e = g.standard_exponential()
            while e == 0.0:
                e = g.standard_exponential()
            return e
        e = g.standard_exponential(size)
        bad = e == 0.0
        while bad.any():
            e[bad] = g.standard_exponential(int(bad.sum()))
            bad = e == 0.0
        return e


@dataclass(frozen=True)
class EmpiricalSample:
    """Sorted i.i.d. Monte Carlo draws of a scalar, with generating metadata."""

    values: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        v = np.sort(np.asarray(self.values, dtype=float).ravel())
        if v.size < 1:
            raise DomainError("an EmpiricalSample needs at least one value")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @classmethod
    def from_draws(cls, draws, **meta) -> "EmpiricalSample":
        return cls(np.asarray(draws, dtype=float), dict(meta))

    @property
    def n(self) -> int:
        return int(self.values.size)

    def mean(self) -> float:
        return float(self.values.mean())

    def scaled(self, factor: float) -> "EmpiricalSample":
        return EmpiricalSample(self.values * factor, {**self.meta, "scaled_by": factor})

    def to_csv(self, path, header: str = "value", meta: dict | None = None) -> None:
        write_csv(path, [header], [self.values], meta={**self.meta, **(meta or {})})


def format_number(x: float) -> str:
    return format(float(x), ".17g")


def write_csv(path, header, columns, meta: dict | None = None) -> None:
    """Comma-separated, ``\\n`` line endings, 17 significant digits.

    Metadata goes on leading ``#`` lines so every file is self-describing.
    """
    with open(path, "w", newline="") as fh:
        if meta:
            fh.write("# " + json.dumps(meta, sort_keys=True, default=_json_default) + "\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in zip(*columns):
            w.writerow([format_number(x) for x in row])


def _json_default(obj):
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if hasattr(obj, "as_dict"):
        return obj.as_dict()
    raise TypeError(f"not JSON serializable: {type(obj).__name__}")


# --- variates -------------------------------------------------------------


def kanter_transform(alpha: float, theta, e):
    """Kanter's representation of the standard positive stable law.

    With ``theta`` uniform on (0, pi) and ``e`` unit exponential,
    ``(A(theta) / e)^((1-alpha)/alpha)`` has Laplace transform
    ``exp(-s^alpha)``, where
    ``A(t) = sin(alpha t)^(alpha/(1-alpha)) sin((1-alpha) t) / sin(t)^(1/(1-alpha))``.
    """
    a = alpha
    log_a = (
        (a / (1 - a)) * np.log(np.sin(a * theta))
        + np.log(np.sin((1 - a) * theta))
        - (1 / (1 - a)) * np.log(np.sin(theta))
    )
    return np.exp(((1 - a) / a) * (log_a - np.log(e)))


def sample_positive_stable(alpha: float, src: RandomSource, size=None):
    """Draw(s) with ``E exp(-s S) = exp(-s^alpha)``."""
    _check_alpha(alpha)
    theta = math.pi * src.uniform(size)
    e = src.standard_exponential(size)
    out = kanter_transform(alpha, theta, e)
    return float(out) if size is None else out


def pareto_from_uniform(alpha: float, u):
    return np.power(u, -1.0 / alpha)


def sample_pareto(alpha: float, src: RandomSource, size=None):
    """Inter-shot times with ``P{xi > t} = t^(-alpha)`` for ``t >= 1``."""
    _check_alpha(alpha)
    out = pareto_from_uniform(alpha, src.uniform(size))
    return float(out) if size is None else out


def exponential_from_uniform(rate: float, u):
    return -np.log(u) / rate


def sample_exponential(rate: float, src: RandomSource, size=None):
    if rate <= 0:
        raise DomainError(f"rate must be positive, got {rate!r}")
    out = exponential_from_uniform(rate, src.uniform(size))
    return float(out) if size is None else out


def nu_jump_from_uniform(alpha: float, eps: float, v):
    """Inverse-CDF map for the Levy measure restricted to ``(eps, inf)``.

    In ``y = 1 - exp(-x/alpha)`` the normalized law has survival
    ``(y^(-alpha) - 1) / nu_tail(eps)``; ``v`` plays the survival value.
    """
    tail = nu_tail(alpha, eps)
    log_y = -np.log1p(np.asarray(v, dtype=float) * tail) / alpha
    # x = -alpha log(1 - y), with 1 - y = -expm1(log y)
    return -alpha * np.log(-np.expm1(log_y))


def sample_nu_jump(alpha: float, eps: float, src: RandomSource, size=None):
    _check_alpha(alpha)
    if eps <= 0:
        raise DomainError(f"eps must be positive, got {eps!r}")
    out = nu_jump_from_uniform(alpha, eps, src.uniform(size))
    return float(out) if size is None else out


# --- chunked Monte Carlo ----------------------------------------------------


def chunk_sizes(n: int, chunk: int) -> list[int]:
    if n < 1:
        raise DomainError(f"replicate count must be positive, got {n}")
    full, rest = divmod(int(n), int(chunk))
    return [int(chunk)] * full + ([rest] if rest else [])


def map_chunks(func: Callable, n: int, src: RandomSource, chunk: int = 10_000, workers: int = 1) -> np.ndarray:
    """Run ``func(count, substream)`` over fixed-size chunks and concatenate.

    Chunk ``i`` always receives ``src.substream(i)``, so the result depends on
    ``(src, n, chunk)`` only and not on the number of workers.
    """
    sizes = chunk_sizes(n, chunk)
    subs = [src.substream(i) for i in range(len(sizes))]
    if workers <= 1 or len(sizes) == 1:
        parts = [func(k, s) for k, s in zip(sizes, subs)]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(func, sizes, subs))
    return np.concatenate([np.asarray(p) for p in parts], axis=0)
