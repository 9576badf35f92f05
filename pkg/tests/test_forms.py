import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from srharmonic import corpus
from srharmonic.algebra import abelian_structure, group_multiply, heisenberg_algebra
from srharmonic.domain import GridDomain, frame_derivative, l2_inner, l2_norm
from srharmonic.errors import HorizontalityError, InputError
from srharmonic.forms import (
    AlgebraValuedForm,
    L_alpha,
    L_alpha_star,
    darboux_derivative,
    energy,
    exterior_derivative,
    form_bracket,
    horizontality_residual,
    maurer_cartan_residual,
    restrict,
    variation,
)

H1, ST1 = heisenberg_algebra(1)
P = 2 * np.pi
A, B, C = np.eye(3)


def smooth_map(dom):
    x, y = dom.coordinates
    return np.stack(corpus.MC_MAPS["mc_mixed"](x, y), -1)


class TestFormBracket:
    def test_interval_self_bracket(self):
        dom = GridDomain.interval(10)
        a = np.broadcast_to(A, (10, 1, 3))
        assert form_bracket(H1, a, a, 1, 1).shape == (10, 0, 3)

    def test_contact_example(self):
        a = np.zeros((4, 4, 2, 3))
        a[..., 0, :] = A
        a[..., 1, :] = B
        out = form_bracket(H1, a, a, 1, 1)
        assert np.allclose(out[..., 0, :], 2 * C)

    def test_zero_function(self):
        a = np.random.default_rng(0).standard_normal((4, 4, 2, 3))
        assert np.allclose(form_bracket(H1, a, np.zeros((4, 4, 3)), 1, 0), 0)

    @given(st.integers(0, 10_000))
    def test_graded_symmetry(self, seed):
        rng = np.random.default_rng(seed)
        a, b = rng.standard_normal((2, 3, 3, 3, 5))
        alg = heisenberg_algebra(2)[0]
        assert np.array_equal(form_bracket(alg, a, b, 1, 1), form_bracket(alg, b, a, 1, 1))
        F = rng.standard_normal((3, 3, 5))
        assert np.allclose(form_bracket(alg, a, F, 1, 0), form_bracket(alg, F, a, 0, 1) * -1)

    def test_degree_guard(self):
        with pytest.raises(InputError):
            form_bracket(H1, np.zeros(3), np.zeros(3), 2, 1)


class TestExteriorDerivative:
    def test_constant(self):
        dom = GridDomain.torus((8, 8))
        assert np.allclose(exterior_derivative(dom, np.ones((8, 8, 3)), 0), 0)

    def test_dd_zero(self):
        dom = GridDomain.torus((16, 12))
        F = np.random.default_rng(1).standard_normal((16, 12, 3))
        assert np.abs(exterior_derivative(dom, exterior_derivative(dom, F, 0), 1)).max() < 1e-12

    def test_x_dy(self):
        dom = GridDomain.box((11, 11))
        x, _ = dom.coordinates
        a = np.zeros((11, 11, 2, 3))
        a[..., 1, 0] = x
        da = exterior_derivative(dom, a, 1)
        assert np.allclose(da[dom.interior_mask][:, 0], A)

    def test_rejects_restricted(self):
        dom = GridDomain.torus((4, 4))
        with pytest.raises(InputError):
            exterior_derivative(dom, AlgebraValuedForm(1, np.zeros((4, 4, 2, 3)), restricted=True), 1)


class TestDarboux:
    def test_constant(self):
        dom = GridDomain.box((6, 6))
        assert np.allclose(darboux_derivative(dom, H1, np.full((6, 6, 3), 0.7)), 0)

    def test_one_parameter_subgroup(self):
        dom = GridDomain.interval(21)
        t = dom.coordinates[0]
        X = np.array([0.3, -1.2, 0.5])
        a = darboux_derivative(dom, H1, t[:, None] * X)
        assert np.allclose(a[:, 0, :], X, atol=1e-13)

    def test_plane_example(self):
        dom = GridDomain.box((9, 9))
        x, y = dom.coordinates
        f = np.stack([x, y, np.zeros_like(x)], -1)
        a = darboux_derivative(dom, H1, f)
        assert np.allclose(a[..., 0, :], np.stack([np.ones_like(x), 0 * x, y / 2], -1), atol=1e-12)
        assert np.allclose(a[..., 1, :], np.stack([0 * x, np.ones_like(x), -x / 2], -1), atol=1e-12)
        res = horizontality_residual(dom, ST1, a, restricted=False)
        assert np.allclose(res[..., 0, 0], y / 2) and np.allclose(res[..., 1, 0], -x / 2)

    def test_constant_translation_invariance(self):
        dom = GridDomain.torus((16, 16))
        f = smooth_map(dom)
        g = np.array([0.4, -0.3, 1.1])
        a1 = darboux_derivative(dom, H1, f)
        a2 = darboux_derivative(dom, H1, group_multiply(H1, g, f))
        # multiplying f on the left by a constant leaves f^{-1} df unchanged
        assert np.allclose(a1, a2, atol=1e-12)


class TestMaurerCartan:
    def test_zero_and_interval(self):
        dom = GridDomain.interval(10)
        assert np.allclose(maurer_cartan_residual(dom, H1, np.zeros((10, 1, 3))), 0)

    @pytest.mark.parametrize("name", sorted(corpus.MC_MAPS))
    def test_order_two(self, name):
        res = []
        for n in (32, 64):
            entry = corpus.build(name, n)
            a = darboux_derivative(entry.domain, H1, entry.f)
            res.append(l2_norm(entry.domain, maurer_cartan_residual(entry.domain, H1, a)))
        assert 3.2 < res[0] / res[1] < 4.8


class TestLAlpha:
    def test_constants(self):
        dom = GridDomain.torus((6, 6))
        a = np.zeros((6, 6, 2, 3))
        a[...] = A
        F = np.broadcast_to(B, (6, 6, 3))
        assert np.allclose(L_alpha(dom, H1, a, F), C)
        assert np.allclose(L_alpha(dom, H1, np.zeros_like(a), F), 0)

    def test_abelian(self):
        alg = abelian_structure(3, [0, 1]).algebra
        dom = GridDomain.torus((8, 8))
        rng = np.random.default_rng(0)
        a, F = rng.standard_normal((8, 8, 2, 3)), rng.standard_normal((8, 8, 3))
        expected = np.stack([frame_derivative(dom, F, i) for i in range(2)], 2)
        assert np.allclose(L_alpha(dom, alg, a, F), expected)

    def test_star_interval_example(self):
        dom = GridDomain.interval(12)
        a = np.broadcast_to(A, (12, 1, 3))
        eta = np.broadcast_to(C, (12, 1, 3))
        assert np.allclose(L_alpha_star(dom, H1, a, eta)[dom.interior_mask], [0, 1, 0])

    def test_star_constant(self):
        dom = GridDomain.torus((6, 6))
        eta = np.broadcast_to(np.array([1.0, 2, 3]), (6, 6, 2, 3))
        assert np.allclose(L_alpha_star(dom, H1, np.zeros((6, 6, 2, 3)), eta), 0, atol=1e-12)

    @pytest.mark.parametrize("dom", [GridDomain.torus((12, 10)), GridDomain.box((9, 11)),
                                     GridDomain.interval(30, density=lambda t: 1 + t)],
                             ids=["torus", "box", "interval"])
    def test_adjoint(self, dom):
        rng = np.random.default_rng(7)
        alg = heisenberg_algebra(2)[0]
        a = rng.standard_normal(dom.shape + (dom.rank_k, 5))
        eta = rng.standard_normal(dom.shape + (dom.rank_k, 5))
        F = rng.standard_normal(dom.shape + (5,))
        lhs = l2_inner(dom, eta, L_alpha(dom, alg, a, F))
        rhs = l2_inner(dom, L_alpha_star(dom, alg, a, eta), F)
        assert abs(lhs - rhs) <= 1e-12 * max(1.0, abs(lhs))

    def test_lemma_linearization(self):
        """d/ds of the Darboux derivative along f.exp(sF) is L_alpha F up to O(s^2 + h^2)."""
        errs = []
        for n in (32, 64):
            dom = GridDomain.torus((n, n))
            x, y = dom.coordinates
            f = smooth_map(dom)
            F = np.stack([np.cos(P * y), np.sin(P * (x + y)), np.cos(P * x)], -1)
            s = 1e-4
            plus = restrict(dom, darboux_derivative(dom, H1, variation(H1, f, F, s)))
            minus = restrict(dom, darboux_derivative(dom, H1, variation(H1, f, F, -s)))
            fd = (plus - minus) / (2 * s)
            a = restrict(dom, darboux_derivative(dom, H1, f))
            errs.append(np.abs(fd - L_alpha(dom, H1, a, F)).max())
        assert errs[0] / errs[1] > 3.5


class TestVariation:
    def test_zero(self):
        f = np.random.default_rng(0).standard_normal((5, 3))
        assert np.array_equal(variation(H1, f, np.ones((5, 3)), 0.0), f)

    def test_from_identity(self):
        out = variation(H1, np.zeros((4, 3)), np.broadcast_to(A, (4, 3)), 0.3)
        assert np.allclose(out, 0.3 * A)


class TestEnergy:
    def test_zero(self):
        dom = GridDomain.torus((4, 4))
        assert energy(dom, ST1, np.zeros((4, 4, 2, 3))) == 0.0

    def test_interval_unit_speed(self):
        dom = GridDomain.interval(11)
        assert np.isclose(energy(dom, ST1, np.broadcast_to(A, (11, 1, 3))), 0.5)

    def test_torus_frame(self):
        dom = GridDomain.torus((8, 8))
        a = np.zeros((8, 8, 2, 3))
        a[..., 0, :] = A
        a[..., 1, :] = B
        assert np.isclose(energy(dom, ST1, a), 1.0)

    def test_rejects_vertical(self):
        dom = GridDomain.torus((4, 4))
        a = np.zeros((4, 4, 2, 3))
        a[1, 2, 0, 2] = 0.25
        with pytest.raises(HorizontalityError) as info:
            energy(dom, ST1, a)
        assert info.value.max_component == 0.25

    def test_horizontality_residual_vertical(self):
        dom = GridDomain.torus((4, 4))
        a = np.zeros((4, 4, 2, 3))
        a[..., 0, :] = C
        res = horizontality_residual(dom, ST1, a)
        assert np.allclose(np.abs(res[..., 0, 0]), 1) and np.allclose(res[..., 1, :], 0)
