"""Verification checks shared by the command line and the acceptance tests.

Each ``check_*`` function runs one family of checks and returns a list of
:class:`ReportEntry`.  Thresholds are fixed here and nowhere else.  Every
check draws from its own stream id so that checks are independent and can
be run in any order.
"""
from __future__ import annotations

import math

import numpy as np

from . import __version__
from .analytic import (
    FiissParams, fiiss_moment, inverse_lil_constant, laplace_exponent_phi, lil_constant,
    mittag_leffler_moment, psi_exponent,
)
from .lamperti import DEFAULT_EPS, exp_functional_coupled, fiiss_identity_check, mittag_leffler_sample, tail_fit
from .paths import DEFAULT_T_STEP, divergence_scan, fiiss_marginal, fiiss_values_at
from .sampling import RandomSource
from .shotnoise import scaled_marginal, undershoot_sample
from .stats import (
    ReportEntry, VerificationReport, dynkin_lamperti_cdf, ks_one_sample, ks_two_sample,
    lil_ratio_scan, loglog_slope, moment_estimate,
)

DEFAULT_SEED = 20240601

# stream ids, one per check family
S_MOMENTS, S_LADDER, S_SIMIL, S_LAMPERTI, S_TAIL, S_HOLDER, S_DL, S_DIVERGE, S_LIL = range(1, 10)


def check_analytic(alphas=(0.3, 0.5, 0.75), orders=(1, 2, 3, 4)) -> list[ReportEntry]:
    worst = 0.0
    for a in alphas:
        for n in orders:
            prod = math.prod(laplace_exponent_phi(a, k) for k in range(1, n + 1))
            worst = max(worst, abs(mittag_leffler_moment(a, n) * prod / math.factorial(n) - 1.0))
    psi_worst = 0.0
    for a in alphas:
        for b in (-0.2, 0.0, 0.5):
            p = FiissParams(a, b)
            for s in (0.5, 1.0, 2.0, 3.0):
                psi_worst = max(psi_worst, abs(psi_exponent(p, s) / laplace_exponent_phi(a, p.c * s) - 1.0))
    lil_worst = max(abs(lil_constant(FiissParams(a, 0.0)) - inverse_lil_constant(a)) / inverse_lil_constant(a) for a in alphas)
    params = {"alphas": list(alphas), "orders": list(orders)}
    return [
        ReportEntry("moment_phi_identity", worst, 1e-8, "<", params=params),
        ReportEntry("psi_phi_identity", psi_worst, 1e-10, "<", params=params),
        ReportEntry("lil_constant_beta0", lil_worst, 1e-12, "<", params=params),
    ]


def check_moments(params: FiissParams, n: int = 100_000, seed: int = DEFAULT_SEED, t_step: float = DEFAULT_T_STEP,
                  orders=(1, 2), tol: float = 0.03, workers: int = 1) -> list[ReportEntry]:
    """Monte Carlo moments of Y(1) against the closed form (Mittag-Leffler when beta = 0)."""
    src = RandomSource(seed, S_MOMENTS).substream(int(round(params.alpha * 1000))).substream(int(round((params.beta + 10) * 1000)))
    if params.beta == 0:
        sample = mittag_leffler_sample(params.alpha, n, 1.0, t_step, src, workers)
        exact = lambda k: mittag_leffler_moment(params.alpha, k)
        label = "mittag_leffler_moment"
    else:
        sample = fiiss_marginal(params, 1.0, n, src, t_step, workers)
        exact = lambda k: fiiss_moment(params, k)
        label = "fiiss_moment"
    out = []
    for k in orders:
        m, se = moment_estimate(sample, k)
        out.append(ReportEntry(
            f"{label}(alpha={params.alpha}, beta={params.beta}, n={k})", abs(m / exact(k) - 1.0), tol, "<",
            n=n, seed=seed, params=params.as_dict(),
            meta={"estimate": m, "stderr": se, "exact": exact(k), "t_step": t_step},
        ))
    return out


def check_convergence_ladder(params: FiissParams = FiissParams(0.75, -0.5), t_ladder=(1e2, 1e3, 1e4), n: int = 5_000,
                             u: float = 1.0, seed: int = DEFAULT_SEED, final_tol: float = 0.1,
                             t_step: float = DEFAULT_T_STEP, workers: int = 1) -> list[ReportEntry]:
    """KS distance between scaled shot noise and grid draws of Y(u) along ``t_ladder``."""
    src = RandomSource(seed, S_LADDER)
    ref = fiiss_marginal(params, u, n, src.substream(0), t_step, workers)
    ks = []
    for i, t in enumerate(t_ladder):
        s = scaled_marginal(params.alpha, params.beta, u, float(t), n, src.substream(1 + i), workers=workers)
        ks.append(ks_two_sample(s, ref).statistic)
    monotone = all(b <= a for a, b in zip(ks, ks[1:]))
    meta = {"t_ladder": list(map(float, t_ladder)), "ks": ks, "u": u, "t_step": t_step}
    return [
        ReportEntry("ladder_nonincreasing", float(monotone), True, "true", n=n, seed=seed, params=params.as_dict(), meta=meta),
        ReportEntry(f"ladder_ks_at_t={float(t_ladder[-1]):g}", ks[-1], final_tol, "<", n=n, seed=seed,
                    params=params.as_dict(), meta=meta),
    ]


def check_self_similarity(params: FiissParams, n: int = 10_000, scale: float = 2.0, seed: int = DEFAULT_SEED,
                          t_step: float = DEFAULT_T_STEP, level: float = 0.01, workers: int = 1) -> list[ReportEntry]:
    src = RandomSource(seed, S_SIMIL).substream(int(round(params.alpha * 1000))).substream(int(round((params.beta + 10) * 1000)))
    y1 = fiiss_marginal(params, 1.0, n, src.substream(0), t_step, workers)
    yc = fiiss_marginal(params, scale, n, src.substream(1), t_step, workers).scaled(scale ** -params.index)
    ks = ks_two_sample(yc, y1)
    return [ReportEntry(
        f"self_similarity(alpha={params.alpha}, beta={params.beta}, c={scale:g})", ks.p_value, level, ">",
        n=n, seed=seed, params=params.as_dict(), meta={"ks": ks.statistic, "t_step": t_step},
    )]


def check_lamperti(params: FiissParams, n: int = 10_000, seed: int = DEFAULT_SEED, eps: float = DEFAULT_EPS,
                   t_step: float = DEFAULT_T_STEP, workers: int = 1) -> list[ReportEntry]:
    """Identity KS plus the effect of halving eps on the mean (common jump field)."""
    src = RandomSource(seed, S_LAMPERTI).substream(int(round((params.beta + 10) * 1000)))
    entry = fiiss_identity_check(params, n, src, eps, t_step, workers=workers)
    pair = exp_functional_coupled(params.alpha, params.c, n, src.substream(2), [eps, eps / 2], workers=workers)
    m0, m1 = pair.mean(axis=0)
    se = float(pair[:, 0].std(ddof=1) / math.sqrt(n))
    diff_se = float((pair[:, 0] - pair[:, 1]).std(ddof=1) / math.sqrt(n))
    halving = ReportEntry(
        f"eps_halving(alpha={params.alpha}, beta={params.beta})", abs(m0 - m1) / se, 1.0, "<",
        n=n, seed=seed, params=params.as_dict(),
        meta={"mean_eps": m0, "mean_half_eps": m1, "stderr": se, "paired_diff_stderr": diff_se, "eps": eps},
    )
    return [entry, halving]


def check_tail(params: FiissParams = FiissParams(0.5, 0.0), n: int = 1_000_000, window=(2.0, 3.5),
               seed: int = DEFAULT_SEED, rel_tol: float = 0.15, t_step: float = DEFAULT_T_STEP,
               min_tail_count: int = 5, workers: int = 1) -> list[ReportEntry]:
    src = RandomSource(seed, S_TAIL)
    sample = fiiss_marginal(params, 1.0, n, src, t_step, workers)
    fit = tail_fit(sample, params, window, min_tail_count=min_tail_count)
    target = fit["target"]
    return [ReportEntry(
        f"tail_slope(alpha={params.alpha}, beta={params.beta})", fit["slope"],
        [target * (1 - rel_tol), target * (1 + rel_tol)], "in", n=n, seed=seed, params=params.as_dict(),
        meta={**fit, "t_step": t_step},
    )]


def holder_t_step(params: FiissParams, h_min: float) -> float:
    """Time step resolving ``W(h_min)`` with about 200 steps on average."""
    return float(h_min**params.alpha * mittag_leffler_moment(params.alpha, 1) / 200.0)


def check_holder(params: FiissParams, n: int = 10_000, exponents=range(4, 11), seed: int = DEFAULT_SEED,
                 tol: float = 0.1, t_step: float | None = None, workers: int = 1) -> list[ReportEntry]:
    src = RandomSource(seed, S_HOLDER).substream(int(round(params.alpha * 1000))).substream(int(round((params.beta + 10) * 1000)))
    hs = np.array(sorted(2.0 ** -np.asarray(list(exponents), dtype=float)))
    step = t_step or holder_t_step(params, float(hs[0]))
    vals = fiiss_values_at(params, hs, n, src, step, workers)
    means = np.abs(vals).mean(axis=0)
    fit = loglog_slope(hs, means)
    return [ReportEntry(
        f"holder_slope(alpha={params.alpha}, beta={params.beta})", fit.slope,
        [params.index - tol, params.index + tol], "in", n=n, seed=seed, params=params.as_dict(),
        meta={"h": hs.tolist(), "mean_abs": means.tolist(), "r2": fit.r2, "t_step": step},
    )]


def check_dynkin_lamperti(alpha: float = 0.5, t: float = 1e4, n: int = 10_000, seed: int = DEFAULT_SEED,
                          tol: float = 0.02, workers: int = 1) -> list[ReportEntry]:
    src = RandomSource(seed, S_DL)
    sample = undershoot_sample(alpha, t, n, src, workers=workers)
    ks = ks_one_sample(sample, lambda x: dynkin_lamperti_cdf(alpha, x))
    return [ReportEntry(
        f"dynkin_lamperti(alpha={alpha}, t={t:g})", ks.statistic, tol, "<", n=n, seed=seed,
        params={"alpha": alpha, "t": t}, meta={"p_value": ks.p_value, "mean": sample.mean(), "target_mean": 1 - alpha},
    )]


def check_divergence(alpha: float = 0.75, beta_div: float = -1.5, beta_reg: float = -0.5, interval=(0.25, 0.75),
                     ladder=(2**10, 2**11, 2**12, 2**13, 2**14), n_paths: int = 50, seed: int = DEFAULT_SEED,
                     ratio_tol: float = 0.1, t_step: float = DEFAULT_T_STEP) -> list[ReportEntry]:
    src = RandomSource(seed, S_DIVERGE)
    div = divergence_scan(FiissParams(alpha, beta_div), interval, ladder, n_paths, src.substream(0), t_step)
    reg = divergence_scan(FiissParams(alpha, beta_reg), interval, ladder, n_paths, src.substream(1), t_step)
    r_div = div.ratios()
    r_reg = reg.ratios()
    return [
        ReportEntry(f"divergence_increasing(beta={beta_div})", float(r_div.min()), 1.0, ">", n=n_paths, seed=seed,
                    params=div.params.as_dict(), meta=div.as_dict()),
        ReportEntry(f"divergence_fixed_u_finite(beta={beta_div})", float(np.all(np.isfinite(div.fixed_values))), True,
                    "true", n=n_paths, seed=seed, params=div.params.as_dict(), meta={"fixed_u": div.fixed_u}),
        ReportEntry(f"regular_stabilizes(beta={beta_reg})", float(np.max(np.abs(r_reg - 1.0))), ratio_tol, "<",
                    n=n_paths, seed=seed, params=reg.params.as_dict(), meta=reg.as_dict()),
    ]


def check_lil(params: FiissParams = FiissParams(0.75, 0.5), n_paths: int = 100, u_range=(10.0, 1e4), n_u: int = 200,
              seed: int = DEFAULT_SEED, envelope=(0.3, 3.0), t_step: float = 0.02) -> list[ReportEntry]:
    src = RandomSource(seed, S_LIL)
    scan = lil_ratio_scan(params, np.geomspace(*u_range, n_u), n_paths, src, t_step)
    return [ReportEntry(
        f"lil_envelope(alpha={params.alpha}, beta={params.beta})", scan.max_ratio / scan.constant, list(envelope), "in",
        n=n_paths, seed=seed, params=params.as_dict(), meta={**scan.as_dict(), "t_step": t_step},
    )]


def parameter_suite(params: FiissParams, n: int, seed: int = DEFAULT_SEED, workers: int = 1) -> VerificationReport:
    """Checks that apply to a single (alpha, beta)."""
    report = VerificationReport(meta={"suite": "parameters", "seed": seed, "streams": workers,
                                      "params": params.as_dict(), "n": n, "version": __version__})
    for e in check_analytic(alphas=(params.alpha,)):
        report.add(e)
    if params.continuous:
        for e in check_moments(params, n, seed, workers=workers):
            report.add(e)
        for e in check_self_similarity(params, min(n, 10_000), seed=seed, workers=workers):
            report.add(e)
        for e in check_lamperti(params, min(n, 10_000), seed, workers=workers):
            report.add(e)
    else:
        for e in check_divergence(params.alpha, params.beta, seed=seed):
            report.add(e)
    return report


def acceptance_suite(seed: int = DEFAULT_SEED, workers: int = 1, progress=None) -> VerificationReport:
    """All numbered acceptance checks except determinism, which needs the CLI."""
    report = VerificationReport(meta={"suite": "acceptance", "seed": seed, "streams": workers, "version": __version__})
    groups = [
        ("1", lambda: check_analytic()),
        ("2", lambda: [e for a in (0.3, 0.5, 0.75) for e in check_moments(FiissParams(a, 0.0), seed=seed, workers=workers)]),
        ("3", lambda: check_convergence_ladder(seed=seed, workers=workers)),
        ("4", lambda: [e for p in (FiissParams(0.5, 0.25), FiissParams(0.75, -0.5))
                       for e in check_self_similarity(p, seed=seed, workers=workers)]),
        ("5", lambda: [e for b in (0.0, 0.5, -0.5) for e in check_lamperti(FiissParams(0.75, b), seed=seed, workers=workers)]),
        ("6", lambda: check_tail(seed=seed, workers=workers)),
        ("7", lambda: [e for p in (FiissParams(0.75, -0.5), FiissParams(0.5, 0.25))
                       for e in check_holder(p, seed=seed, workers=workers)]),
        ("8", lambda: check_dynkin_lamperti(seed=seed, workers=workers)),
        ("9", lambda: check_divergence(seed=seed)),
        ("10", lambda: check_lil(seed=seed)),
    ]
    for label, run in groups:
        for e in run():
            e.meta = {**e.meta, "criterion": label}
            report.add(e)
            if progress:
                progress(e)
    return report
