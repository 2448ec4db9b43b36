"""Spectral densities, Fuglede-Kadison determinants, and verdicts."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from l2torsion.backends import (
    adjoint,
    compose,
    family_backend,
    family_morphism,
    family_object,
    identity_morphism,
    matrix_backend,
    matrix_morphism,
    matrix_object,
    scalar_morphism,
    uniform_interval_samples,
)
from l2torsion.errors import NotSelfAdjointError
from l2torsion.harness import (
    family_multiplication_map,
    random_invertible_morphism,
    standard_backends,
)
from l2torsion.spectral import (
    classify_determinant,
    fk_det,
    fk_det_extended,
    log_fk_det,
    ns_exponent,
    singular_density,
    spectral_density,
    tau_isomorphism_test,
)


class TestDensities:
    def test_diagonal_eigenvalues(self):
        obj = matrix_object(matrix_backend(), 3)
        f = matrix_morphism(obj, obj, np.diag([0.0, 1.0, 4.0]))
        d = spectral_density(f)
        assert d.zero_mass == pytest.approx(1.0)
        assert list(d.values) == pytest.approx([1.0, 4.0])

    def test_non_self_adjoint_rejected(self):
        obj = matrix_object(matrix_backend(), 2)
        f = matrix_morphism(obj, obj, [[0.0, 1.0], [0.0, 0.0]])
        with pytest.raises(NotSelfAdjointError):
            spectral_density(f)

    def test_singular_density_matches_laplacian(self, rng):
        backend = standard_backends()["Family"]
        f = random_invertible_morphism(rng, backend, 3)
        sing = singular_density(f)
        lap = spectral_density(compose(adjoint(f), f))
        # singular values squared are the eigenvalues of f* f
        assert np.allclose(np.sort(sing.values) ** 2, np.sort(lap.values))

    def test_total_mass(self, backend, rng):
        f = random_invertible_morphism(rng, backend, 3)
        d = singular_density(f)
        assert d.total_mass == pytest.approx(f.source.dim_tau)


class TestFKDeterminant:
    def test_det_of_scalar(self, backend, rng):
        obj = random_invertible_morphism(rng, backend, 2).source
        f = scalar_morphism(obj, 3.0)
        assert fk_det(f) == pytest.approx(3.0 ** obj.dim_tau, rel=1e-10)

    def test_multiplicativity(self, backend, rng):
        for _ in range(10):
            f = random_invertible_morphism(rng, backend, 3)
            g = random_invertible_morphism(rng, backend, 3)
            lhs = log_fk_det(compose(f, g))
            assert lhs == pytest.approx(log_fk_det(f) + log_fk_det(g), abs=1e-8)

    def test_group_ring_example(self):
        """Det of (3 + t) on l2(Z/2) is sqrt((3+1)(3-1)) = sqrt(8)."""
        from l2torsion.backends import (
            cyclic_group_table,
            group_backend,
            group_object,
            group_ring_morphism,
        )

        backend = group_backend(cyclic_group_table(2))
        obj = group_object(backend, 1)
        f = group_ring_morphism(obj, obj, [[[3.0, 1.0]]])
        assert fk_det(f) == pytest.approx(math.sqrt(8.0), rel=1e-12)

    def test_mahler_identity_on_circle_grid(self):
        """The averaged log of |z - 1| over the circle vanishes."""
        from l2torsion.backends import circle_samples

        backend = family_backend(circle_samples(4096))
        obj = family_object(backend, 1)
        blocks = [np.array([[np.exp(1j * t) - 1.0]]) for t in backend.sample_points[:, 0]]
        f = family_morphism(obj, obj, blocks)
        assert log_fk_det(f) == pytest.approx(0.0, abs=1e-3)


class TestVerdicts:
    def test_linear_fibers_convergent(self):
        f = family_multiplication_map(uniform_interval_samples(10_000)[:, 0])
        log_val, verdict = fk_det_extended(f)
        assert verdict.status == "Convergent"
        assert log_val == pytest.approx(-1.0, abs=1e-3)

    def test_exponential_decay_divergent(self):
        xs = uniform_interval_samples(10_000)[:, 0]
        with np.errstate(under="ignore"):
            f = family_multiplication_map(np.exp(-1.0 / xs))
        _, verdict = fk_det_extended(f)
        assert verdict.status == "Divergent"
        drops = [v for _, v in verdict.ladder]
        assert all(a >= b for a, b in zip(drops, drops[1:]))

    def test_non_injective_divergent_with_flags(self):
        obj = matrix_object(matrix_backend(), 2)
        f = matrix_morphism(obj, obj, np.diag([1.0, 0.0]))
        verdict = tau_isomorphism_test(f)
        assert verdict.status == "Divergent"
        assert not verdict.injective
        assert not verdict.dense_image

    def test_invertible_convergent(self, backend, rng):
        f = random_invertible_morphism(rng, backend, 3)
        verdict = tau_isomorphism_test(f)
        assert verdict.status == "Convergent"
        assert verdict.injective and verdict.dense_image


class TestNSExponent:
    def test_linear_density_exponent(self):
        """Fibers alpha(xi) = xi give density lambda near 0, exponent 1."""
        f = family_multiplication_map(uniform_interval_samples(20_000)[:, 0])
        d = singular_density(f)
        est = ns_exponent(d)
        assert est is not None
        assert est == pytest.approx(1.0, abs=0.1)

    def test_sqrt_density_exponent(self):
        xs = uniform_interval_samples(20_000)[:, 0]
        f = family_multiplication_map(np.sqrt(xs))
        est = ns_exponent(singular_density(f))
        assert est is not None
        assert est == pytest.approx(2.0, abs=0.2)

    def test_gapped_spectrum_has_no_exponent(self, rng):
        backend = standard_backends()["Matrix"]
        f = random_invertible_morphism(rng, backend, 3)
        assert ns_exponent(singular_density(f)) is None


@given(lam=st.floats(min_value=0.1, max_value=20.0))
@settings(max_examples=40, deadline=None)
def test_det_scalar_law(lam):
    obj = matrix_object(matrix_backend(), 3)
    f = scalar_morphism(obj, lam)
    assert log_fk_det(f) == pytest.approx(3 * math.log(lam), abs=1e-10)
