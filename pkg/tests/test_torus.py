"""Spectral calculus on the torus: transforms, operators, projection, shifts."""

import numpy as np
import pytest

from meanflow import presets
from meanflow.torus import (
    GridError,
    TorusGrid,
    advect,
    curl2d,
    divergence,
    evaluate_at,
    gradient,
    l2_inner,
    l2_norm,
    laplacian,
    leray_project,
    max_divergence,
    shift_by,
    to_real,
    to_spectral,
    velocity_from_stream,
)

EPS_SPEC = 1e-10


def grid1d(n=64):
    return TorusGrid((n,))


def grid2d(n=64):
    return TorusGrid((n, n))


class TestGrid:
    def test_rejects_bad_sizes(self):
        for sizes in [(7,), (48,), (4,), (12, 16)]:
            with pytest.raises(GridError):
                TorusGrid(sizes)
        with pytest.raises(GridError):
            TorusGrid((8, 8, 8))

    def test_points_have_no_duplicated_endpoint(self):
        g = grid1d(8)
        x = g.coords[0]
        assert x[0] == 0.0
        assert x[-1] == pytest.approx(7.0 / 8.0)

    def test_dealias_mask_keeps_two_thirds(self):
        g = grid2d(64)
        k = g.wavevectors
        assert g.dealias_mask[(np.abs(k[0]) <= 21) & (np.abs(k[1]) <= 21)].all()
        assert not g.dealias_mask[np.abs(k[0]) > 21].any()


class TestTransformPair:
    def test_constant_field_spectrum(self):
        g = grid1d()
        fh = to_spectral(g, np.full(g.sizes, 3.25))
        assert fh[0] == pytest.approx(3.25)
        assert np.max(np.abs(fh[1:])) < 1e-15

    def test_single_mode_spectrum(self):
        g = grid1d()
        x = g.coords[0]
        fh = to_spectral(g, np.sin(2 * np.pi * x))
        # coefficients only at k = +-1 with magnitude 1/2 (rfft keeps +1)
        assert abs(fh[1]) == pytest.approx(0.5, abs=1e-14)
        mags = np.abs(fh)
        mags[1] = 0.0
        assert mags.max() < 1e-15

    def test_white_noise_roundtrip(self):
        g = grid1d(64)
        f = np.random.default_rng(7).standard_normal(g.sizes)
        assert np.max(np.abs(to_real(g, to_spectral(g, f)) - f)) < 1e-12

    def test_roundtrip_2d_batched(self):
        g = grid2d(32)
        f = np.random.default_rng(1).standard_normal((3, 2) + g.sizes)
        assert np.max(np.abs(to_real(g, to_spectral(g, f)) - f)) < 1e-12

    def test_parseval(self):
        # oracle: plain full-spectrum FFT, independent of the rfft layout
        g = grid1d(64)
        f = np.random.default_rng(3).standard_normal(g.sizes)
        full = np.fft.fft(f) / 64
        assert l2_inner(g, f, f) == pytest.approx(float(np.sum(np.abs(full) ** 2)), abs=1e-12)

    def test_non_power_of_two_rejected(self):
        with pytest.raises(GridError):
            TorusGrid((96,))


class TestDifferentiate:
    def test_gradient_single_mode(self):
        g = grid1d()
        x = g.coords[0]
        df = gradient(g, np.sin(2 * np.pi * x))[0]
        assert np.max(np.abs(df - 2 * np.pi * np.cos(2 * np.pi * x))) < EPS_SPEC

    def test_divergence_of_constant_is_zero(self):
        g = grid2d(32)
        u = presets.constant_field(g, [1.3, -0.4])
        assert max_divergence(g, u) < 1e-14

    def test_laplacian_eigenfunction(self):
        g = grid1d()
        x = g.coords[0]
        f = np.sin(2 * np.pi * x)
        assert np.max(np.abs(laplacian(g, f) + 4 * np.pi**2 * f)) < EPS_SPEC

    def test_gradient_2d_product_mode(self):
        g = grid2d()
        x, y = g.coords
        f = np.sin(2 * np.pi * x) * np.cos(4 * np.pi * y)
        gx, gy = gradient(g, f)
        assert np.max(np.abs(gx - 2 * np.pi * np.cos(2 * np.pi * x) * np.cos(4 * np.pi * y))) < EPS_SPEC
        assert np.max(np.abs(gy + 4 * np.pi * np.sin(2 * np.pi * x) * np.sin(4 * np.pi * y))) < EPS_SPEC


class TestLeray:
    def test_pure_gradient_projects_to_zero(self):
        g = grid2d()
        x, y = g.coords
        p_exact = np.sin(2 * np.pi * x) * np.sin(2 * np.pi * y)
        X, p = leray_project(g, gradient(g, p_exact))
        assert np.max(np.abs(X)) < EPS_SPEC
        assert np.max(np.abs(p - p_exact)) < EPS_SPEC

    def test_stream_function_field_is_fixed(self):
        g = grid2d()
        x, y = g.coords
        psi = np.sin(2 * np.pi * x) * np.cos(2 * np.pi * y) + 0.3 * np.sin(4 * np.pi * y)
        u = velocity_from_stream(g, psi)
        X, p = leray_project(g, u)
        assert np.max(np.abs(X - u)) < EPS_SPEC
        assert np.max(np.abs(p)) < EPS_SPEC

    def test_componentwise_divfree_field_is_fixed(self):
        # Y = (sin 2 pi y, sin 2 pi x): each component independent of its own
        # coordinate, so div Y = 0 and the projector is the identity.
        g = grid2d()
        x, y = g.coords
        Y = np.stack([np.sin(2 * np.pi * y), np.sin(2 * np.pi * x)])
        assert max_divergence(g, Y) < 1e-13
        X, p = leray_project(g, Y)
        assert np.max(np.abs(X - Y)) < EPS_SPEC
        assert np.max(np.abs(p)) < EPS_SPEC

    def test_idempotence_and_orthogonality_random(self):
        g = grid2d()
        Y = presets.random_band(g, kmax=8, seed=11, divfree=False)
        X, p = leray_project(g, Y)
        X2, p2 = leray_project(g, X)
        assert np.max(np.abs(X2 - X)) < EPS_SPEC
        assert max_divergence(g, X) < EPS_SPEC
        gp = gradient(g, p)
        hodge = abs(l2_inner(g, X, gp))
        assert hodge <= EPS_SPEC * l2_norm(g, X) * l2_norm(g, gp)

    def test_mean_mode_passes_through(self):
        g = grid2d(32)
        Y = presets.constant_field(g, [0.7, -0.2]) + presets.random_band(g, 4, 5, divfree=False)
        X, _ = leray_project(g, Y)
        assert np.mean(X[0]) == pytest.approx(np.mean(Y[0]), abs=1e-13)
        assert np.mean(X[1]) == pytest.approx(np.mean(Y[1]), abs=1e-13)

    def test_pressure_zero_mean(self):
        g = grid2d(32)
        Y = presets.random_band(g, 6, 2, divfree=False)
        _, p = leray_project(g, Y)
        assert abs(np.mean(p)) < 1e-14


class TestShift:
    def test_quarter_period(self):
        g = grid1d()
        x = g.coords[0]
        shifted = shift_by(g, np.sin(2 * np.pi * x), [0.25])
        assert np.max(np.abs(shifted - np.cos(2 * np.pi * x))) < EPS_SPEC

    def test_lattice_shift_is_identity(self):
        g = grid2d(32)
        f = np.random.default_rng(0).standard_normal(g.sizes)
        assert np.max(np.abs(shift_by(g, f, [2.0, -1.0]) - f)) < 1e-12

    def test_non_grid_shift_matches_analytic(self):
        g = grid1d()
        x = g.coords[0]
        shifted = shift_by(g, np.sin(2 * np.pi * x), [1.0 / 3.0])
        assert np.max(np.abs(shifted - np.sin(2 * np.pi * (x + 1.0 / 3.0)))) < 1e-12

    @pytest.mark.parametrize("seed", [0, 1, 2])
    def test_group_law(self, seed):
        g = grid2d()
        f = presets.random_band(g, 8, seed, divfree=False)[0]
        rng = np.random.default_rng(seed + 100)
        a, b = rng.uniform(-1, 1, size=(2, 2))
        lhs = shift_by(g, shift_by(g, f, a), b)
        rhs = shift_by(g, f, a + b)
        assert np.max(np.abs(lhs - rhs)) < EPS_SPEC

    def test_commutes_with_derivatives_and_projection(self):
        g = grid2d()
        Y = presets.random_band(g, 8, 3, divfree=False)
        a = [0.137, -0.52]
        lhs = shift_by(g, laplacian(g, Y), a)
        rhs = laplacian(g, shift_by(g, Y, a))
        assert np.max(np.abs(lhs - rhs)) < EPS_SPEC
        lhs_p = shift_by(g, leray_project(g, Y).solenoidal, a)
        rhs_p = leray_project(g, shift_by(g, Y, a)).solenoidal
        assert np.max(np.abs(lhs_p - rhs_p)) < EPS_SPEC

    def test_preserves_divergence_free(self):
        g = grid2d()
        u = presets.random_band(g, 8, 4)
        assert max_divergence(g, shift_by(g, u, [0.31, 0.77])) < EPS_SPEC


class TestAdvect:
    def test_constant_velocity(self):
        g = grid2d()
        x, y = g.coords
        Z = np.sin(2 * np.pi * x) * np.cos(2 * np.pi * y)
        u = presets.constant_field(g, [2.0, -1.0])
        expected = 2.0 * gradient(g, Z)[0] - 1.0 * gradient(g, Z)[1]
        assert np.max(np.abs(advect(g, u, Z) - expected)) < EPS_SPEC

    def test_1d_product_identity(self):
        # u = Z = sin(2 pi x): u Z' = pi sin(4 pi x)
        g = grid1d()
        x = g.coords[0]
        s = np.sin(2 * np.pi * x)
        out = advect(g, s[None], s)
        assert np.max(np.abs(out - np.pi * np.sin(4 * np.pi * x))) < EPS_SPEC

    def test_taylor_green_advects_own_vorticity_to_zero(self):
        # omega is a function of psi, so u . grad omega = 0; the product terms
        # are O(500), so the spectral tolerance is scaled by their size
        g = grid2d()
        u = presets.taylor_green(g)
        w = curl2d(g, u)
        scale = np.max(np.abs(u)) * np.max(np.abs(gradient(g, w)))
        assert np.max(np.abs(advect(g, u, w))) < EPS_SPEC * scale

    def test_grid_mismatch_raises(self):
        with pytest.raises(GridError):
            advect(grid2d(32), presets.taylor_green(grid2d(32)),
                   np.zeros(grid2d(64).sizes))

    def test_product_spectrum_is_dealiased(self):
        g = grid1d(64)
        x = g.coords[0]
        f = np.sin(2 * np.pi * 20 * x)
        out_h = to_spectral(g, advect(g, f[None], f))
        assert np.max(np.abs(out_h[~g.dealias_mask])) < 1e-15


class TestInner:
    def test_sine_norms(self):
        g = grid1d()
        x = g.coords[0]
        s, c = np.sin(2 * np.pi * x), np.cos(2 * np.pi * x)
        assert l2_inner(g, s, s) == pytest.approx(0.5, abs=1e-14)
        assert l2_inner(g, s, c) == pytest.approx(0.0, abs=1e-14)


class TestTailFraction:
    def test_band_limited_field_has_empty_tail(self):
        from meanflow.torus import spectral_tail_fraction

        g = grid2d(64)
        u = presets.random_band(g, kmax=8, seed=1)
        assert spectral_tail_fraction(g, u) < 1e-25

    def test_high_mode_field_flags(self):
        from meanflow.torus import spectral_tail_fraction

        g = grid1d(64)
        x = g.coords[0]
        f = np.sin(2 * np.pi * 30 * x)  # above N/3 = 21
        assert spectral_tail_fraction(g, f) > 0.99


class TestEvaluator:
    def test_matches_shift(self):
        g = grid2d()
        f = presets.random_band(g, 6, 9, divfree=False)[0]
        pts = np.random.default_rng(2).uniform(0, 1, size=(50, 2))
        direct = evaluate_at(g, f, pts)
        # oracle: sample a spectrally shifted copy at a grid point
        for p, v in zip(pts[:5], direct[:5]):
            shifted = shift_by(g, f, p)
            assert v == pytest.approx(shifted[0, 0], abs=1e-11)

    def test_jacobian_matches_gradient_on_grid(self):
        from meanflow.torus import FieldEvaluator

        g = grid1d()
        x = g.coords[0]
        f = 0.5 * np.sin(2 * np.pi * x)
        ev = FieldEvaluator(g, f)
        grads = ev.jacobian(x[:, None])[0]
        assert np.max(np.abs(grads - np.pi * np.cos(2 * np.pi * x))) < 1e-11
