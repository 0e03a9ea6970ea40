import math

import numpy as np
import pytest

from delayquant import transforms as tr
from delayquant.kernels import SeriesTruncation, build_tables

from conftest import random_smooth_pair


class TestNorms:
    def test_l2_trivial(self):
        f = tr.Field(np.zeros(201), tr.L2)
        assert tr.l2_norm(f) == 0.0
        one = tr.Field(np.ones(201), tr.L2)
        assert math.isclose(tr.l2_norm(one), 1.0, rel_tol=1e-14)

    def test_l2_eigenfunction(self):
        x = np.linspace(0, 1, 201)
        f = tr.Field(np.sin(np.pi * x), tr.L2)
        assert math.isclose(tr.l2_norm(f), 1.0 / math.sqrt(2.0), abs_tol=1e-4)

    def test_sup(self):
        x = np.linspace(0, 1, 201)
        assert tr.sup_norm(tr.Field(x, tr.SUP)) == 1.0
        assert math.isclose(tr.sup_norm(tr.Field(np.sin(2 * np.pi * x), tr.SUP)),
                            1.0, abs_tol=1e-3)
        assert tr.sup_norm(tr.Field(np.zeros(11), tr.SUP)) == 0.0

    def test_role_enforced(self):
        f = tr.Field(np.ones(11), tr.SUP)
        with pytest.raises(ValueError):
            tr.l2_norm(f)
        with pytest.raises(ValueError):
            tr.sup_norm(tr.Field(np.ones(11), tr.L2))

    def test_joint_norm(self):
        pair = tr.CascadePair.from_arrays(np.ones(201), 2 * np.ones(201))
        assert math.isclose(tr.joint_norm(pair), 3.0, rel_tol=1e-14)

    def test_nonfinite_rejected(self):
        with pytest.raises(ValueError):
            tr.Field(np.array([1.0, np.nan]), tr.L2)


class TestFieldTypes:
    def test_pair_roles(self):
        with pytest.raises(ValueError):
            tr.CascadePair(tr.Field(np.ones(5), tr.SUP), tr.Field(np.ones(5), tr.SUP))

    def test_pair_grid_mismatch(self):
        with pytest.raises(tr.GridMismatchError):
            tr.CascadePair.from_arrays(np.ones(5), np.ones(6))


class TestTransforms:
    def test_zero_maps_to_zero(self, ref_ops):
        pair = tr.CascadePair.from_arrays(np.zeros(201), np.zeros(201))
        w, z = tr.direct_transform(pair, ref_ops)
        assert np.all(w.samples == 0.0) and np.all(z.samples == 0.0)
        back = tr.inverse_transform((w, z), ref_ops)
        assert np.all(back.u.samples == 0.0) and np.all(back.v.samples == 0.0)

    def test_grid_mismatch(self, ref_ops):
        pair = tr.CascadePair.from_arrays(np.zeros(101), np.zeros(101))
        with pytest.raises(tr.GridMismatchError):
            tr.direct_transform(pair, ref_ops)

    def test_linearity(self, ref_ops):
        rng = np.random.default_rng(5)
        x = ref_ops.x
        u1, v1 = random_smooth_pair(rng, x)
        u2, v2 = random_smooth_pair(rng, x)
        a, b = 1.7, -0.4
        w1, z1 = tr.direct_transform(tr.CascadePair.from_arrays(u1, v1), ref_ops)
        w2, z2 = tr.direct_transform(tr.CascadePair.from_arrays(u2, v2), ref_ops)
        w3, z3 = tr.direct_transform(
            tr.CascadePair.from_arrays(a * u1 + b * u2, a * v1 + b * v2), ref_ops)
        np.testing.assert_allclose(w3.samples, a * w1.samples + b * w2.samples,
                                   rtol=1e-12, atol=1e-13)
        np.testing.assert_allclose(z3.samples, a * z1.samples + b * z2.samples,
                                   rtol=1e-12, atol=1e-13)

    def test_boundary_relay(self, ref_ops):
        # fields with u(1) = v(0) map to w(1) = z(0) within quadrature tolerance
        x = ref_ops.x
        u = x * (1 - x) + 0.3 * x
        v = 0.3 + 0.1 * np.sin(np.pi * x)
        w, z = tr.direct_transform(tr.CascadePair.from_arrays(u, v), ref_ops)
        assert abs(w.samples[-1] - z.samples[0]) < 1e-2

    def test_u_component_roundtrip(self, ref_ops):
        # the Bessel pair k/l is mutually inverse to quadrature accuracy
        rng = np.random.default_rng(11)
        x = ref_ops.x
        for _ in range(5):
            u, _ = random_smooth_pair(rng, x)
            w = u - ref_ops.op_k @ u
            back = w + ref_ops.op_l @ w
            err = np.sqrt(np.sum(ref_ops.weights * (back - u) ** 2))
            ref = np.sqrt(np.sum(ref_ops.weights * u * u))
            assert err <= 1e-3 * ref

    def test_full_roundtrip_reference_level(self, ref_ops):
        # the series pair is consistent only as N -> infinity; at N = 60 the
        # inverse reproduces the pair to a few percent (see decisions ledger)
        rng = np.random.default_rng(12)
        x = ref_ops.x
        worst = 0.0
        for _ in range(5):
            u, v = random_smooth_pair(rng, x)
            pair = tr.CascadePair.from_arrays(u, v)
            back = tr.inverse_transform(tr.direct_transform(pair, ref_ops), ref_ops)
            dpair = tr.CascadePair.from_arrays(back.u.samples - u, back.v.samples - v)
            worst = max(worst, tr.joint_norm(dpair) / tr.joint_norm(pair))
        assert worst < 0.1

    def test_roundtrip_improves_with_modes(self):
        rng = np.random.default_rng(13)
        errs = []
        for n_modes in (30, 60, 120):
            tab = build_tables(200, 11.0, 0.1, SeriesTruncation(n_modes, 20 * n_modes))
            ops = tr.build_operators(tab)
            u, v = random_smooth_pair(np.random.default_rng(13), ops.x)
            pair = tr.CascadePair.from_arrays(u, v)
            back = tr.inverse_transform(tr.direct_transform(pair, ops), ops)
            diff = tr.CascadePair.from_arrays(back.u.samples - u, back.v.samples - v)
            errs.append(tr.joint_norm(diff) / tr.joint_norm(pair))
        assert errs[2] < errs[1] < errs[0]

    def test_identity_when_kernels_vanish(self, ref_ops):
        # zeroed operators give the identity map
        import dataclasses
        zeros = np.zeros_like(ref_ops.op_k)
        ops0 = dataclasses.replace(ref_ops, op_k=zeros, op_l=zeros, op_g=zeros,
                                   op_p=zeros, op_gamma=zeros, op_delta=zeros)
        rng = np.random.default_rng(3)
        u, v = random_smooth_pair(rng, ref_ops.x)
        pair = tr.CascadePair.from_arrays(u, v)
        w, z = tr.direct_transform(pair, ops0)
        np.testing.assert_array_equal(w.samples, u)
        np.testing.assert_array_equal(z.samples, v)
        back = tr.inverse_transform((w, z), ops0)
        np.testing.assert_array_equal(back.u.samples, u)
        np.testing.assert_array_equal(back.v.samples, v)


class TestOperatorQuadrature:
    def test_volterra_rows_integrate_constants(self, ref_tables, ref_ops):
        # row i of the k-operator integrates k(x_i, .) over [0, x_i]:
        # feeding the constant field 1 reproduces the trapezoid integral
        ones = np.ones(201)
        got = ref_ops.op_k @ ones
        h = ref_tables.h
        for i in (3, 50, 117, 200):
            w = np.full(i + 1, h)
            w[0] = w[-1] = h / 2
            want = float(np.sum(w * ref_tables.k_grid[i, :i + 1]))
            assert math.isclose(got[i], want, rel_tol=1e-12, abs_tol=1e-15)

    def test_exp_hat_volterra_matches_fine_trapezoid(self):
        # per-mode exact weights agree with very fine nodal quadrature
        from delayquant.transforms import _exp_hat_volterra
        x = np.linspace(0, 1, 101)
        rates = np.array([-3.0, 0.5])
        amps = np.array([2.0, -1.0])
        W = _exp_hat_volterra(x, rates, amps)
        v = np.cos(2.3 * x)
        got = W @ v
        xf = np.linspace(0, 1, 20001)
        vf = np.cos(2.3 * xf)
        for i in (10, 50, 100):
            mask = xf <= x[i] + 1e-15
            kern = sum(a * np.exp(r * (x[i] - xf[mask])) for r, a in zip(rates, amps))
            want = np.trapezoid(kern * vf[mask], xf[mask])
            assert math.isclose(got[i], want, rel_tol=5e-4, abs_tol=1e-10)

    def test_sin_hat_weights_integrate_smooth(self):
        from delayquant.transforms import _sin_hat_weights
        x = np.linspace(0, 1, 201)
        sig = _sin_hat_weights(x, 8)
        v = x * x * (1 - x)
        got = sig @ v
        xf = np.linspace(0, 1, 40001)
        vf = xf * xf * (1 - xf)
        # absolute accuracy: the weights integrate the hat interpolant of v
        # exactly, so the only error is the O(h^2) interpolation of v itself
        for n in (1, 4, 8):
            want = np.trapezoid(np.sin(n * np.pi * xf) * vf, xf)
            assert abs(got[n - 1] - want) < 2e-6
