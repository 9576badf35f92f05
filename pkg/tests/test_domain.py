import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from srharmonic.domain import (
    GridDomain,
    apply_vector_field,
    delta_D,
    divergence,
    frame_derivative,
    l2_inner,
    l2_norm,
    sub_laplacian,
    taming_metric,
    vector_field_divergence,
    vector_to_frame,
)
from srharmonic.errors import InputError

P = 2 * np.pi


def rotating_frame(x, y):
    """Orthonormal frame rotating with angle 0.3 sin(2 pi y), periodic."""
    th = 0.3 * np.sin(P * y)
    c, s = np.cos(th), np.sin(th)
    return np.stack([np.stack([c, s], -1), np.stack([-s, c], -1)])


def bumpy_density(x, y):
    return 1.0 + 0.3 * np.cos(P * x) * np.sin(P * y)


def domains():
    return [
        GridDomain.torus((24, 20)),
        GridDomain.torus((24, 20), lengths=(1.0, 2.0), frames=rotating_frame, density=bumpy_density),
        GridDomain.box((15, 13), frames=rotating_frame, density=bumpy_density),
        GridDomain.interval(40, density=lambda t: 1 + t ** 2),
        GridDomain.torus((12, 10, 8), frames=np.array([[1.0, 0, 0], [0, 1, 0]])),
    ]


class TestConstruction:
    def test_basic(self):
        dom = GridDomain.torus((8, 4))
        assert dom.dim_m == 2 and dom.rank_k == 2 and dom.spacing == (0.125, 0.25)
        assert np.isclose(dom.weights.sum(), 1.0)

    def test_box_trapezoid_volume(self):
        dom = GridDomain.box((11, 21), lengths=(2.0, 3.0))
        assert np.isclose(dom.weights.sum(), 6.0)

    def test_rejects_bad_density(self):
        with pytest.raises(InputError):
            GridDomain.torus((8, 8), density=lambda x, y: np.cos(P * x))

    def test_rejects_dependent_frames(self):
        with pytest.raises(InputError):
            GridDomain.torus((8, 8), frames=np.array([[1.0, 1.0], [2.0, 2.0]]))

    def test_rejects_too_many_frames(self):
        with pytest.raises(InputError):
            GridDomain.interval(8, frames=np.array([[1.0], [2.0]]))

    def test_interior_mask(self):
        assert GridDomain.torus((6, 6)).interior_mask.all()
        mask = GridDomain.box((10, 10)).interior_mask
        assert mask.sum() == 16 and not mask[2].any() and mask[3, 3:7].all()


class TestFrameDerivative:
    def test_fourier_mode_order_two(self):
        errs = []
        for n in (32, 64):
            dom = GridDomain.torus((n,))
            x = dom.coordinates[0]
            errs.append(np.abs(frame_derivative(dom, np.sin(P * x), 0) - P * np.cos(P * x)).max())
        assert errs[1] < 2e-2 and 3.7 < errs[0] / errs[1] < 4.3

    def test_constant(self):
        for dom in domains():
            for i in range(dom.rank_k):
                assert np.allclose(frame_derivative(dom, np.full(dom.shape, 3.0), i), 0, atol=1e-10)

    def test_affine_exact_on_box(self):
        dom = GridDomain.box((9, 7))
        x, y = dom.coordinates
        assert np.allclose(frame_derivative(dom, x, 0), 1.0, atol=1e-12)
        assert np.allclose(frame_derivative(dom, 2 * x - 3 * y, 1), -3.0, atol=1e-12)

    def test_trailing_axes(self):
        dom = GridDomain.torus((16, 16))
        x, y = dom.coordinates
        F = np.stack([np.sin(P * x), np.cos(P * y)], -1)
        out = frame_derivative(dom, F, 1)
        assert out.shape == F.shape
        assert np.allclose(out[..., 0], 0, atol=1e-12)

    def test_bad_index(self):
        with pytest.raises(InputError):
            frame_derivative(GridDomain.torus((8, 8)), np.zeros((8, 8)), 2)


class TestAdjointness:
    @pytest.mark.parametrize("idx", range(5))
    def test_delta_D_is_adjoint(self, idx):
        dom = domains()[idx]
        rng = np.random.default_rng(idx)
        F = rng.standard_normal(dom.shape + (3,))
        eta = rng.standard_normal(dom.shape + (dom.rank_k, 3))
        dF = np.stack([frame_derivative(dom, F, i) for i in range(dom.rank_k)], axis=dom.dim_m)
        lhs = l2_inner(dom, dF, eta)
        rhs = l2_inner(dom, F, delta_D(dom, eta))
        assert abs(lhs - rhs) <= 1e-12 * max(1.0, abs(lhs))

    @pytest.mark.parametrize("idx", range(5))
    def test_divergence_identity(self, idx):
        dom = domains()[idx]
        phi = np.random.default_rng(idx).standard_normal(dom.shape)
        for i in range(dom.rank_k):
            lhs = l2_inner(dom, frame_derivative(dom, phi, i), np.ones(dom.shape))
            assert abs(lhs + l2_inner(dom, phi, divergence(dom, i))) < 1e-11

    @pytest.mark.parametrize("idx", range(5))
    def test_sub_laplacian_self_adjoint(self, idx):
        dom = domains()[idx]
        rng = np.random.default_rng(idx + 10)
        a, b = rng.standard_normal((2,) + dom.shape)
        lhs = l2_inner(dom, sub_laplacian(dom, a), b)
        rhs = l2_inner(dom, a, sub_laplacian(dom, b))
        assert abs(lhs - rhs) <= 1e-12 * max(1.0, abs(lhs))
        assert l2_inner(dom, sub_laplacian(dom, a), a) <= 1e-12


class TestDivergence:
    def test_constant_frame_zero(self):
        dom = GridDomain.torus((16, 16), frames=np.array([[0.6, 0.8], [-0.8, 0.6]]))
        for i in range(2):
            assert np.allclose(divergence(dom, i), 0, atol=1e-10)

    def test_variable_coefficient(self):
        errs = []
        for n in (32, 64):
            dom = GridDomain.torus((n,), frames=lambda x: (1.5 + np.sin(P * x))[None, :, None])
            x = dom.coordinates[0]
            errs.append(np.abs(divergence(dom, 0) - P * np.cos(P * x)).max())
        assert errs[0] / errs[1] > 3.5

    def test_interval_interior(self):
        dom = GridDomain.interval(30)
        assert np.allclose(divergence(dom, 0)[dom.interior_mask], 0, atol=1e-10)

    def test_vector_field_product_rule(self):
        errs = []
        for n in (32, 64):
            dom = GridDomain.torus((n, n), frames=rotating_frame, density=bumpy_density)
            x, y = dom.coordinates
            Y = np.stack([np.sin(P * x), np.cos(P * (x + y))], -1)
            expected = sum(frame_derivative(dom, Y[..., i], i) + Y[..., i] * divergence(dom, i) for i in range(2))
            errs.append(np.abs(vector_field_divergence(dom, Y) - expected).max())
        assert errs[0] / errs[1] > 3.0


class TestSubLaplacian:
    @pytest.mark.parametrize("n", [32, 64])
    def test_fourier_modes(self, n):
        dom = GridDomain.torus((n, n))
        x, y = dom.coordinates
        h = 1.0 / n
        phi = np.cos(P * x)
        assert np.abs(sub_laplacian(dom, phi) + P ** 2 * phi).max() < 100 * h ** 2 * P ** 2
        psi = np.cos(P * x) * np.cos(P * y)
        assert np.abs(sub_laplacian(dom, psi) + 2 * P ** 2 * psi).max() < 200 * h ** 2 * P ** 2

    def test_affine_interior(self):
        dom = GridDomain.box((12, 12))
        x, y = dom.coordinates
        assert np.allclose(sub_laplacian(dom, 2 * x - y + 1)[dom.interior_mask], 0, atol=1e-9)

    def test_matches_sum_of_squares_constant_frames(self):
        dom = GridDomain.torus((20, 20), frames=np.array([[0.6, 0.8], [-0.8, 0.6]]))
        phi = np.random.default_rng(3).standard_normal(dom.shape)
        # with constant frames the adjoint of central differences is minus itself
        expected = sum(frame_derivative(dom, frame_derivative(dom, phi, i), i) for i in range(2))
        assert np.allclose(sub_laplacian(dom, phi), expected, atol=1e-9)


class TestDeltaD:
    def test_constant(self):
        dom = GridDomain.torus((10, 10))
        assert np.allclose(delta_D(dom, np.ones((10, 10, 2))), 0, atol=1e-10)

    def test_interval_minus_derivative(self):
        errs = []
        for n in (201, 401):
            dom = GridDomain.interval(n)
            t = dom.coordinates[0]
            out = delta_D(dom, (np.sin(np.pi * t) ** 4)[:, None])
            expected = -4 * np.pi * np.sin(np.pi * t) ** 3 * np.cos(np.pi * t)
            errs.append(np.abs(out - expected)[dom.interior_mask].max())
        assert errs[1] < 5e-4 and 3.5 < errs[0] / errs[1] < 4.5

    def test_shape_check(self):
        with pytest.raises(InputError):
            delta_D(GridDomain.torus((4, 4)), np.zeros((4, 4, 3)))


class TestL2:
    def test_examples(self):
        dom = GridDomain.torus((16, 16))
        x, _ = dom.coordinates
        assert np.isclose(l2_inner(dom, np.ones(dom.shape), np.ones(dom.shape)), 1.0)
        assert abs(l2_inner(dom, np.sin(P * x), np.cos(P * x))) < 1e-15
        assert np.isclose(l2_inner(dom, np.sin(P * x), np.sin(P * x)), 0.5, atol=1e-15)
        assert np.isclose(l2_norm(dom, np.sin(P * x)) ** 2, 0.5)

    def test_shape_mismatch(self):
        dom = GridDomain.torus((4, 4))
        with pytest.raises(InputError):
            l2_inner(dom, np.zeros((4, 4)), np.zeros((4, 4, 2)))

    @given(st.integers(0, 1000))
    def test_symmetric_positive(self, seed):
        dom = domains()[1]
        a, b = np.random.default_rng(seed).standard_normal((2,) + dom.shape)
        assert np.isclose(l2_inner(dom, a, b), l2_inner(dom, b, a))
        assert l2_inner(dom, a, a) > 0


class TestVectorFields:
    def test_vector_to_frame_roundtrip(self):
        dom = GridDomain.torus((8, 8), frames=rotating_frame)
        Y = np.random.default_rng(0).standard_normal((8, 8, 2))
        V = np.einsum("k...m,...k->...m", dom.frames, Y)
        assert np.allclose(vector_to_frame(dom, V), Y)

    def test_not_tangent(self):
        dom = GridDomain.torus((4, 4, 4), frames=np.array([[1.0, 0, 0], [0, 1, 0]]))
        V = np.zeros((4, 4, 4, 3))
        V[..., 2] = 1
        with pytest.raises(InputError):
            vector_to_frame(dom, V)

    def test_apply(self):
        dom = GridDomain.box((9, 9))
        x, y = dom.coordinates
        Y = np.stack([np.ones_like(x), 2 * np.ones_like(x)], -1)
        assert np.allclose(apply_vector_field(dom, Y, x + y), 3.0)


class TestTaming:
    def test_k_equals_m(self):
        g = np.array([[2.0, 0.5], [0.5, 1.0]])
        assert np.allclose(taming_metric(np.eye(2), np.eye(2), g, 1.0), g)

    @given(st.integers(0, 10_000), st.floats(0.1, 5.0))
    def test_restriction_and_density(self, seed, rho):
        rng = np.random.default_rng(seed)
        m, k = 4, 2
        A = rng.standard_normal((m, m))
        g0 = A @ A.T + m * np.eye(m)
        D = rng.standard_normal((m, k))
        B = rng.standard_normal((k, k))
        g = B @ B.T + np.eye(k)
        gb = taming_metric(g0, D, g, rho)
        assert np.allclose(D.T @ gb @ D, g, atol=1e-10)
        assert np.isclose(np.sqrt(np.linalg.det(gb)), rho, rtol=1e-10)
        assert np.linalg.eigvalsh(gb)[0] > 0

    def test_unit_example(self):
        gb = taming_metric(np.eye(3), np.eye(3)[:, :2], np.eye(2), 1.0)
        assert np.isclose(np.linalg.det(gb), 1.0)

    def test_rejects_non_spd(self):
        with pytest.raises(InputError):
            taming_metric(-np.eye(3), np.eye(3)[:, :2], np.eye(2), 1.0)
