"""Determinant-line elements: rebasing, push-forward, exact sequences."""

import math

import numpy as np
import pytest

from l2torsion.backends import (
    compose,
    matrix_backend,
    matrix_morphism,
    matrix_object,
    zero_morphism,
)
from l2torsion.detline import (
    DetLineElement,
    Frame,
    canonical_element,
    check_exactness,
    exact_sequence_iso,
    orthogonal_section,
    push_forward,
    rebase_products,
    standard_element,
    unit_element,
)
from l2torsion.errors import NotAnIsomorphismError, NotExactError
from l2torsion.harness import random_invertible_morphism
from l2torsion.spectral import log_fk_det


def _mat(n, data=None, product=None):
    backend = matrix_backend()
    obj = matrix_object(backend, n, product=product)
    return obj


class TestElements:
    def test_tensor_and_dual_cancel(self):
        obj = _mat(3)
        x = standard_element(obj, "a")
        y = x.tensor(x.dual()).simplify()
        assert y.is_scalar
        assert y.scalar_log() == pytest.approx(0.0)

    def test_unit_element_is_scalar_one(self):
        assert unit_element().scalar_value() == pytest.approx(1.0)

    def test_scaled_accumulates(self):
        obj = _mat(2)
        x = standard_element(obj, "a").scaled(0.5).scaled(-0.2)
        assert x.log_coeff == pytest.approx(0.3)


class TestRebase:
    def test_rebase_against_known_determinant(self):
        """Switching to a product P rescales by det(P)^(-e/2)."""
        backend = matrix_backend()
        plain = matrix_object(backend, 2)
        scaled = matrix_object(backend, 2, product=np.diag([4.0, 9.0]))
        x = standard_element(plain, "a")
        y = rebase_products(x, "a", scaled)
        # the P-orthonormal generator is det(P)^(-1/2) times the plain one,
        # so the same element gains the factor det(P)^(1/2) = sqrt(36)
        assert y.log_coeff == pytest.approx(0.5 * math.log(36.0))

    def test_rebase_round_trip(self, rng):
        backend = matrix_backend()
        p = rng.normal(size=(3, 3))
        p = p @ p.T + 3 * np.eye(3)
        plain = matrix_object(backend, 3)
        other = matrix_object(backend, 3, product=p)
        x = standard_element(plain, "a")
        back = rebase_products(rebase_products(x, "a", other), "a", plain)
        assert back.log_coeff == pytest.approx(0.0, abs=1e-12)


class TestPushForward:
    def test_push_forward_multiplies_by_det(self, backend, rng):
        f = random_invertible_morphism(rng, backend, 3)
        x = standard_element(f.source, "src")
        y = push_forward(x, f, new_label="dst")
        assert y.log_coeff == pytest.approx(log_fk_det(f), abs=1e-10)

    def test_push_forward_respects_exponent(self, rng):
        backend = matrix_backend()
        f = random_invertible_morphism(rng, backend, 2)
        x = DetLineElement(((Frame(f.source, "s"), -1),), 0.0)
        y = push_forward(x, f, new_label="t")
        assert y.log_coeff == pytest.approx(-log_fk_det(f), abs=1e-10)

    def test_push_forward_rejects_kernel(self):
        obj = _mat(2)
        f = matrix_morphism(obj, obj, np.diag([1.0, 0.0]))
        x = standard_element(obj, "s")
        with pytest.raises(NotAnIsomorphismError):
            push_forward(x, f, new_label="t")

    def test_canonical_element_of_invertible(self, backend, rng):
        f = random_invertible_morphism(rng, backend, 3)
        x = canonical_element(f)
        assert x.log_coeff == pytest.approx(log_fk_det(f), abs=1e-10)


def _split_triple(rng, k=2, m=5):
    """A random short exact sequence 0 -> C^k -> C^m -> C^(m-k) -> 0."""
    backend = matrix_backend()
    sub = matrix_object(backend, k)
    mid = matrix_object(backend, m)
    quo = matrix_object(backend, m - k)
    g = rng.normal(size=(m, m)) + 0.5 * np.eye(m)
    alpha = matrix_morphism(sub, mid, g[:, :k])
    # beta kills the image of alpha
    q = np.linalg.qr(g[:, :k])[0]
    proj = np.eye(m) - q @ q.conj().T
    basis = np.linalg.qr(proj @ rng.normal(size=(m, m - k)))[0]
    beta = matrix_morphism(mid, quo, basis.conj().T)
    return alpha, beta


class TestExactSequences:
    def test_check_exactness_accepts_split(self, rng):
        alpha, beta = _split_triple(rng)
        check_exactness(alpha, beta)

    def test_check_exactness_rejects_nonexact(self, rng):
        backend = matrix_backend()
        a = matrix_object(backend, 2)
        b = matrix_object(backend, 3)
        alpha = matrix_morphism(a, b, rng.normal(size=(3, 2)))
        beta = matrix_morphism(b, a, rng.normal(size=(2, 3)))
        with pytest.raises(NotExactError):
            check_exactness(alpha, beta)

    def test_orthogonal_section_is_right_inverse(self, rng):
        alpha, beta = _split_triple(rng)
        gamma = orthogonal_section(beta)
        comp = compose(beta, gamma)
        assert np.allclose(comp.blocks[0], np.eye(3), atol=1e-10)

    def test_iso_keeps_coefficient(self, rng):
        alpha, beta = _split_triple(rng)
        x = standard_element(alpha.target, "total")
        y = exact_sequence_iso(alpha, beta, x)
        assert y.log_coeff == pytest.approx(x.log_coeff)
        labels = sorted(fr.label for fr, _ in y.word)
        assert labels == ["quot", "sub"]

    def test_iso_rebased_to_native_measures_base_change(self, rng):
        """Rebasing the split to native frames recovers det of [alpha, gamma]."""
        alpha, beta = _split_triple(rng)
        gamma = orthogonal_section(beta)
        x = standard_element(alpha.target, "total")
        y = exact_sequence_iso(alpha, beta, x)
        y = rebase_products(y, "sub", alpha.source)
        y = rebase_products(y, "quot", beta.target)
        t = np.hstack([alpha.blocks[0], gamma.blocks[0]])
        expected = -math.log(abs(np.linalg.det(t)))
        assert y.log_coeff == pytest.approx(expected, abs=1e-10)
