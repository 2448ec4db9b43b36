"""Acceptance suite: one test (and one pass/fail line) per criterion.

Run ``pytest tests/test_acceptance.py -v -s`` to see each criterion's
verdict line with the measured deviations; plain ``pytest -v`` shows the
per-criterion pass/fail through the test names.
"""

import math
import time

import numpy as np
import pytest

from l2torsion.cellular import (
    circle_complex,
    circle_regular_representation,
    circle_unit_representation,
    cochain_complex,
    combinatorial_torsion,
    cyclic_character_representation,
    lens_complex,
    subdivision_invariance_check,
)
from l2torsion.harness import (
    family_multiplication_map,
    random_complex_with_cohomology,
    suite_cones,
    suite_epsilon_independence,
    suite_exact_sequences,
    suite_family_density,
    suite_fk_laws,
    suite_torsion_formulas,
)
from l2torsion.spectral import ns_exponent, singular_density
from l2torsion.torsion import torsion
from l2torsion.extcoh import ChainComplexC
from l2torsion.backends import family_object, uniform_interval_samples, family_backend, Morphism


def _verdict(number: int, label: str, ok: bool, detail: str) -> None:
    status = "PASS" if ok else "FAIL"
    print(f"{status} | criterion {number}: {label} ({detail})")
    assert ok, f"criterion {number}: {label}: {detail}"


def test_criterion_1_fk_determinant_laws():
    t0 = time.perf_counter()
    res = suite_fk_laws(pairs=200)
    elapsed = time.perf_counter() - t0
    ok = (
        res["multiplicativity"] < 1e-8
        and res["scalar_law"] < 1e-10
        and res["block_triangular"] < 1e-8
        and res["scale_law"] < 1e-10
        and elapsed < 10.0
    )
    _verdict(
        1,
        "determinant laws on 200 random invertible pairs per backend",
        ok,
        f"mult {res['multiplicativity']:.2e}, scalar {res['scalar_law']:.2e}, "
        f"triangular {res['block_triangular']:.2e}, scale {res['scale_law']:.2e}, "
        f"{elapsed:.1f}s",
    )


def test_criterion_2_spectral_density_oracle():
    t0 = time.perf_counter()
    res = suite_family_density(grid=10_000)
    elapsed = time.perf_counter() - t0
    ok = (
        abs(res["xi_log_det"] + 1.0) < 1e-3
        and res["xi_status"] == "Convergent"
        and res["decay_status"] == "Divergent"
        and res["decay_ladder_monotone"]
        and elapsed < 5.0
    )
    _verdict(
        2,
        "family density oracles on the unit interval",
        ok,
        f"log det {res['xi_log_det']:.6f} (target -1), decay {res['decay_status']}, "
        f"ladder monotone {res['decay_ladder_monotone']}, {elapsed:.1f}s",
    )


def test_criterion_3_torsion_formulas():
    res = suite_torsion_formulas(trials=100)
    ok = res["formula_agreement"] < 1e-8 and abs(res["two_term_rho"] - 0.5) < 1e-12
    _verdict(
        3,
        "Laplacian vs restricted-differential torsion on 100 acyclic complexes",
        ok,
        f"agreement {res['formula_agreement']:.2e}, two-term rho {res['two_term_rho']}",
    )


def test_criterion_4_epsilon_independence():
    res = suite_epsilon_independence(trials=50)
    ok = res["max_deviation"] < 1e-8
    _verdict(
        4,
        "epsilon independence on 50 complexes with cohomology",
        ok,
        f"max log deviation {res['max_deviation']:.2e}",
    )


def test_criterion_5_exact_sequences_and_cones():
    seq = suite_exact_sequences(trials=100)
    cones = suite_cones(trials=100)
    ok = seq["max_deviation"] < 1e-6 and cones["max_deviation"] < 1e-6
    _verdict(
        5,
        "multiplicativity: 100 exact triples and 100 mapping cones",
        ok,
        f"sequences {seq['max_deviation']:.2e}, cones {cones['max_deviation']:.2e}",
    )


def test_criterion_6_circle_oracles():
    scalar = combinatorial_torsion(
        circle_complex(), circle_unit_representation(-1.0 + 0.0j)
    )
    rep = circle_regular_representation(4096)
    regular = combinatorial_torsion(circle_complex(), rep)
    alpha = ns_exponent(
        singular_density(cochain_complex(circle_complex(), rep).diffs[0])
    )
    ok = (
        abs(scalar.scalar_value - 0.5) < 1e-10
        and abs(regular.scalar_value - 1.0) < 1e-3
        and regular.determinant_class
        and alpha is not None
        and abs(alpha - 1.0) < 0.1
    )
    _verdict(
        6,
        "circle: unit character 1/2, regular representation 1, growth exponent 1",
        ok,
        f"scalar {scalar.scalar_value}, regular {regular.scalar_value:.6f}, "
        f"exponent {alpha:.3f}",
    )


def _lens_brute_force(p: int, q: int, k: int = 1) -> float:
    """Independent evaluation: raw numpy on the four 1x1 differentials."""
    zeta = np.exp(2j * np.pi * k / p)
    qstar = pow(q, -1, p)
    d = [
        np.array([[zeta - 1.0]]),
        np.array([[sum(zeta**j for j in range(p))]]),
        np.array([[zeta**qstar - 1.0]]),
    ]
    log_rho = 0.0
    for i in range(4):
        lap = np.zeros((1, 1), complex)
        if i > 0:
            lap += d[i - 1] @ d[i - 1].conj().T
        if i < 3:
            lap += d[i].conj().T @ d[i]
        ev = np.linalg.eigvalsh(lap)
        log_rho += 0.5 * (-1) ** i * i * math.log(float(ev[0]))
    return math.exp(log_rho)


def test_criterion_7_lens_space():
    report = combinatorial_torsion(lens_complex(5, 1), cyclic_character_representation(5, 1))
    brute = _lens_brute_force(5, 1)
    zeta = np.exp(2j * np.pi / 5)
    closed = abs(zeta - 1.0) ** -2
    ok = (
        report.scalar_value is not None
        and abs(report.scalar_value - brute) < 1e-8
        and abs(report.scalar_value - closed) < 1e-8
    )
    _verdict(
        7,
        "lens space L(5,1) against the independent brute-force evaluation",
        ok,
        f"pipeline {report.scalar_value!r}, brute force {brute!r}",
    )


def test_criterion_8_subdivision_invariance():
    circle_m = subdivision_invariance_check(
        circle_complex(), circle_unit_representation(-1.0 + 0.0j),
        depth=3, agree_tol=1e-9,
    )
    lens_m = subdivision_invariance_check(
        lens_complex(5, 1), cyclic_character_representation(5, 1),
        depth=3, agree_tol=1e-9,
    )
    circle_f = subdivision_invariance_check(
        circle_complex(), circle_regular_representation(1024),
        depth=3, agree_tol=1e-6,
    )
    ok = circle_m.passed and lens_m.passed and circle_f.passed
    _verdict(
        8,
        "3 rounds of subdivision: circle and L(5,1)",
        ok,
        f"circle {circle_m.max_deviation:.2e}, lens {lens_m.max_deviation:.2e}, "
        f"circle/family {circle_f.max_deviation:.2e}",
    )


def test_criterion_9_divergent_torsion_without_scalar():
    xs = uniform_interval_samples(2000)[:, 0]
    with np.errstate(over="ignore", under="ignore"):
        diff = family_multiplication_map(np.exp(-1.0 / xs))
    c = ChainComplexC((diff.source, diff.target), (diff,))
    report = torsion(c)
    word_ok = bool(report.combined.word) and all(
        isinstance(frame.label, str) and exp in (-1, 1)
        for frame, exp in report.combined.word
    )
    ok = (
        report.scalar_value is None
        and word_ok
        and any(v.status == "Divergent" for v in report.detclass)
        and math.isfinite(report.combined.log_coeff)
    )
    _verdict(
        9,
        "divergent family complex: element without a scalar",
        ok,
        f"scalar {report.scalar_value}, word length {len(report.combined.word)}, "
        f"verdicts {[v.status for v in report.detclass]}",
    )
