"""Numbered acceptance criteria, each at its stated tolerance.

Every test records one PASS/FAIL line; the lines are printed in the pytest
terminal summary and when this file is run as a script.
"""
import json
import time

import numpy as np
import pytest

from fiiss import suite
from fiiss.analytic import FiissParams
from fiiss.cli import main

from conftest import CRITERION_LINES

SEED = suite.DEFAULT_SEED


def _record(number: int, title: str, entries, started: float) -> None:
    ok = all(e.passed for e in entries)
    detail = "; ".join(f"{e.name}={e.statistic:.6g} ({e.relation} {e.threshold})" for e in entries)
    line = f"criterion {number:>2} {'PASS' if ok else 'FAIL'} {title}: {detail} [{time.time() - started:.1f}s]"
    CRITERION_LINES.append(line)
    print(line)
    assert ok, line


def test_criterion_01_analytic_identities():
    t = time.time()
    entries = suite.check_analytic()
    assert time.time() - t < 1.0
    _record(1, "analytic identities", entries, t)


def test_criterion_02_mittag_leffler_moments():
    t = time.time()
    entries = [e for a in (0.3, 0.5, 0.75) for e in suite.check_moments(FiissParams(a, 0.0), 100_000, SEED)]
    _record(2, "Mittag-Leffler moments within 3%", entries, t)


def test_criterion_03_convergence_ladder():
    t = time.time()
    _record(3, "shot-noise ladder", suite.check_convergence_ladder(seed=SEED), t)


def test_criterion_04_self_similarity():
    t = time.time()
    entries = [e for p in (FiissParams(0.5, 0.25), FiissParams(0.75, -0.5))
               for e in suite.check_self_similarity(p, 10_000, seed=SEED)]
    _record(4, "self-similarity KS p > 0.01", entries, t)


def test_criterion_05_lamperti_identity():
    t = time.time()
    entries = [e for b in (0.0, 0.5, -0.5) for e in suite.check_lamperti(FiissParams(0.75, b), 10_000, SEED, eps=1e-4)]
    _record(5, "exponential functional vs Y(1)", entries, t)


def test_criterion_06_tail_slope():
    t = time.time()
    _record(6, "tail slope 1/(1-alpha) +- 15%", suite.check_tail(FiissParams(0.5, 0.0), 1_000_000, (2.0, 3.5), SEED), t)


def test_criterion_07_holder_scaling():
    t = time.time()
    entries = [e for p in (FiissParams(0.75, -0.5), FiissParams(0.5, 0.25)) for e in suite.check_holder(p, seed=SEED)]
    _record(7, "mean |Y(h)| slope alpha+beta +- 0.1", entries, t)


def test_criterion_08_dynkin_lamperti():
    t = time.time()
    _record(8, "undershoot KS < 0.02", suite.check_dynkin_lamperti(0.5, 1e4, 10_000, SEED), t)


def test_criterion_09_divergence():
    t = time.time()
    _record(9, "divergence along refinements", suite.check_divergence(seed=SEED), t)


def test_criterion_10_lil_envelope():
    t = time.time()
    _record(10, "LIL envelope in [0.3, 3] c", suite.check_lil(FiissParams(0.75, 0.5), 100, seed=SEED), t)


def test_criterion_11_determinism(tmp_path):
    t = time.time()
    runs = [
        ["figure1", "--seed", "7"],
        ["simulate", "--alpha", "0.6", "--beta", "-0.3", "--seed", "7"],
        ["converge", "--n", "1000", "--t-ladder", "10,100", "--seed", "7"],
        ["diverge", "--n", "5", "--steps", "256,512", "--seed", "7"],
        ["tail", "--n", "20000", "--window", "0.5,1.5", "--seed", "7"],
    ]
    identical = True
    for i, args in enumerate(runs):
        blobs = []
        for rep in range(2):
            out = tmp_path / f"{i}_{rep}"
            code = main(args + ["-o", str(out if args[0] == "figure1" else out.with_suffix(".out"))])
            assert code in (0, 1)
            if args[0] == "figure1":
                blobs.append({p.name: p.read_bytes() for p in sorted(out.iterdir())})
            else:
                blobs.append(out.with_suffix(".out").read_bytes())
        identical &= blobs[0] == blobs[1]
    from fiiss.stats import ReportEntry
    _record(11, "bit-identical reruns", [ReportEntry("identical_artifacts", float(identical), True, "true")], t)


if __name__ == "__main__":
    import sys
    sys.exit(pytest.main([__file__, "-q", "-s"]))
