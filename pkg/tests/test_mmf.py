import dataclasses

import numpy as np
import pytest

from immtsf import GruParams, InputError, MmfConfig, grad_check, gru_forward
from immtsf.kernels import sigmoid, softmax
from immtsf.mmf import (
    GrAddParams,
    XAttnAddParams,
    gr_add_backward,
    gr_add_forward,
    init_gr_add,
    init_xattn_add,
    xattn_add_backward,
    xattn_add_forward,
)


def oracle_xattn_add(y_ts, e, p: XAttnAddParams, kappa):
    q = y_ts @ p.w_q
    k = e @ p.w_k
    v = e @ p.w_v
    logits = q @ k.T / np.sqrt(q.shape[1])
    attended = softmax(logits, axis=-1) @ v
    delta = attended @ p.w_res + p.b_res
    return (y_ts + kappa * delta) / (1.0 + kappa)


def gr_add_flat(params: GrAddParams):
    flat = {f"gru.{k}": v for k, v in vars(params.gru).items()}
    for name in ("w_delta", "b_delta", "w_g", "b_g"):
        flat[name] = getattr(params, name)
    return flat


def gr_add_from_flat(flat):
    gru = GruParams(**{k[4:]: v for k, v in flat.items() if k.startswith("gru.")})
    return GrAddParams(
        gru=gru, w_delta=flat["w_delta"], b_delta=flat["b_delta"],
        w_g=flat["w_g"], b_g=flat["b_g"],
    )


class TestGrAdd:
    def test_gate_one_passthrough(self, rng):
        p = init_gr_add(2, 3, 4, rng)
        p.w_g = np.zeros_like(p.w_g)
        p.b_g = np.full_like(p.b_g, 20.0)
        y = rng.normal(size=(5, 2))
        fused, _ = gr_add_forward(y, rng.normal(size=(5, 3)), p)
        np.testing.assert_allclose(fused, y, atol=1e-9)

    def test_gate_zero_full_correction(self, rng):
        p = init_gr_add(2, 3, 4, rng)
        p.b_g = np.full_like(p.b_g, -20.0)
        p.w_g = np.zeros_like(p.w_g)
        y = rng.normal(size=(5, 2))
        e = rng.normal(size=(5, 3))
        fused, cache = gr_add_forward(y, e, p)
        delta = cache[5]
        np.testing.assert_allclose(fused, y + delta, atol=2e-9)

    def test_scalar_manual_unroll(self):
        gru = GruParams(
            w_z=np.array([[0.2, -0.4]]), u_z=np.array([[0.1]]), b_z=np.array([0.05]),
            w_r=np.array([[-0.3, 0.6]]), u_r=np.array([[0.2]]), b_r=np.array([-0.1]),
            w_h=np.array([[0.7, 0.3]]), u_h=np.array([[-0.5]]), b_h=np.array([0.0]),
        )
        p = GrAddParams(
            gru=gru,
            w_delta=np.array([[1.5]]), b_delta=np.array([0.25]),
            w_g=np.array([[0.4, -0.8]]), b_g=np.array([0.3]),
        )
        y = np.array([[1.0], [-0.5]])
        e = np.array([[0.2], [0.7]])
        fused, _ = gr_add_forward(y, e, p)

        h = 0.0
        for t in range(2):
            x = np.array([y[t, 0], e[t, 0]])
            z_g = sigmoid(gru.w_z @ x + gru.u_z @ np.array([h]) + gru.b_z)[0]
            r_g = sigmoid(gru.w_r @ x + gru.u_r @ np.array([h]) + gru.b_r)[0]
            c = np.tanh(gru.w_h @ x + gru.u_h @ np.array([r_g * h]) + gru.b_h)[0]
            h = (1 - z_g) * h + z_g * c
            delta = 1.5 * h + 0.25
            gate = sigmoid(np.array([0.4 * y[t, 0] - 0.8 * e[t, 0] + 0.3]))[0]
            expected = y[t, 0] + (1 - gate) * delta
            assert fused[t, 0] == pytest.approx(expected, abs=1e-14)

    def test_both_gate_forms_equal(self, rng):
        p = init_gr_add(3, 2, 4, rng)
        y = rng.normal(size=(6, 3))
        e = rng.normal(size=(6, 2))
        fused, cache = gr_add_forward(y, e, p)
        _, _, _, _, _, delta, gate, _ = cache
        unsimplified = gate * y + (1.0 - gate) * (y + delta)
        np.testing.assert_allclose(fused, unsimplified, atol=1e-14)

    def test_gate_in_open_interval_and_between(self, rng):
        p = init_gr_add(2, 3, 4, rng)
        y = rng.normal(size=(8, 2))
        fused, cache = gr_add_forward(y, rng.normal(size=(8, 3)), p)
        _, _, _, _, _, delta, gate, _ = cache
        assert np.all(gate > 0) and np.all(gate < 1)
        lo = np.minimum(y, y + delta)
        hi = np.maximum(y, y + delta)
        assert np.all(fused >= lo - 1e-12) and np.all(fused <= hi + 1e-12)

    def test_zero_text_columns_ignored(self, rng):
        # with E = 0 the parameter columns that multiply the text half of
        # the stacked input cannot influence the output
        n, d, h = 2, 3, 4
        p = init_gr_add(n, d, h, rng)
        y = rng.normal(size=(5, n))
        zero_e = np.zeros((5, d))
        base, _ = gr_add_forward(y, zero_e, p)
        mutated = dataclasses.replace(
            p,
            gru=dataclasses.replace(
                p.gru,
                w_z=_bump_text_cols(p.gru.w_z, n, rng),
                w_r=_bump_text_cols(p.gru.w_r, n, rng),
                w_h=_bump_text_cols(p.gru.w_h, n, rng),
            ),
            w_g=_bump_text_cols(p.w_g, n, rng),
        )
        after, _ = gr_add_forward(y, zero_e, mutated)
        np.testing.assert_array_equal(base, after)

    def test_bypass(self, rng):
        p = init_gr_add(2, 3, 4, rng)
        y = rng.normal(size=(4, 2))
        e = rng.normal(size=(4, 3))
        fused, cache = gr_add_forward(y, e, p, empty_text=True)
        np.testing.assert_array_equal(fused, y)
        dfused = rng.normal(size=(4, 2))
        grads, dy, de = gr_add_backward(dfused, cache)
        np.testing.assert_array_equal(dy, dfused)
        np.testing.assert_array_equal(de, np.zeros_like(e))
        assert all(not g.any() for g in grads.values())

    def test_shape_mismatch(self, rng):
        p = init_gr_add(2, 3, 4, rng)
        with pytest.raises(InputError):
            gr_add_forward(rng.normal(size=(4, 2)), rng.normal(size=(3, 3)), p)

    def test_gradcheck(self, rng):
        y = rng.normal(size=(3, 2))
        e = rng.normal(size=(3, 2))
        dfused = rng.normal(size=(3, 2))

        def f(flat):
            fused, cache = gr_add_forward(y, e, gr_add_from_flat(flat))
            grads, _, _ = gr_add_backward(dfused, cache)
            return float(np.sum(fused * dfused)), grads

        assert grad_check(f, gr_add_flat(init_gr_add(2, 2, 3, rng))) < 1e-4

    def test_gradcheck_inputs(self, rng):
        p = init_gr_add(2, 2, 3, rng)
        dfused = rng.normal(size=(3, 2))

        def f(point):
            fused, cache = gr_add_forward(point["y"], point["e"], p)
            _, dy, de = gr_add_backward(dfused, cache)
            return float(np.sum(fused * dfused)), {"y": dy, "e": de}

        point = {"y": rng.normal(size=(3, 2)), "e": rng.normal(size=(3, 2))}
        assert grad_check(f, point) < 1e-4


def _bump_text_cols(w, n, rng):
    out = w.copy()
    out[:, n:] += rng.normal(size=out[:, n:].shape)
    return out


class TestXAttnAdd:
    def test_kappa_zero_identity(self, rng):
        p = init_xattn_add(2, 3, rng)
        y = rng.normal(size=(4, 2))
        fused, _ = xattn_add_forward(y, rng.normal(size=(4, 3)), p, kappa=0.0)
        np.testing.assert_array_equal(fused, y)

    def test_kappa_one_average(self, rng):
        p = init_xattn_add(2, 3, rng)
        y = rng.normal(size=(4, 2))
        e = rng.normal(size=(4, 3))
        fused, cache = xattn_add_forward(y, e, p, kappa=1.0)
        attended = cache[3]
        delta = attended @ p.w_res + p.b_res
        np.testing.assert_allclose(fused, (y + delta) / 2.0, atol=1e-14)

    def test_matches_oracle(self, rng):
        p = init_xattn_add(1, 2, rng)
        y = rng.normal(size=(2, 1))
        e = rng.normal(size=(2, 2))
        fused, _ = xattn_add_forward(y, e, p, kappa=0.5)
        np.testing.assert_allclose(fused, oracle_xattn_add(y, e, p, 0.5), atol=1e-10)

    def test_affine_in_delta(self, rng):
        p = init_xattn_add(2, 3, rng)
        doubled = dataclasses.replace(p, w_res=2.0 * p.w_res, b_res=2.0 * p.b_res)
        y = rng.normal(size=(4, 2))
        e = rng.normal(size=(4, 3))
        kappa = 0.5
        f1, _ = xattn_add_forward(y, e, p, kappa=kappa)
        f2, _ = xattn_add_forward(y, e, doubled, kappa=kappa)
        base = y / (1.0 + kappa)
        np.testing.assert_allclose(f2 - base, 2.0 * (f1 - base), atol=1e-12)

    def test_bypass(self, rng):
        p = init_xattn_add(2, 3, rng)
        y = rng.normal(size=(4, 2))
        e = rng.normal(size=(4, 3))
        fused, cache = xattn_add_forward(y, e, p, empty_text=True)
        np.testing.assert_array_equal(fused, y)
        dfused = rng.normal(size=(4, 2))
        grads, dy, de = xattn_add_backward(dfused, cache)
        np.testing.assert_array_equal(dy, dfused)
        np.testing.assert_array_equal(de, np.zeros_like(e))
        assert all(not g.any() for g in grads.values())

    def test_gradcheck(self, rng):
        y = rng.normal(size=(3, 2))
        e = rng.normal(size=(3, 3))
        dfused = rng.normal(size=(3, 2))

        def f(flat):
            p = XAttnAddParams(**flat)
            fused, cache = xattn_add_forward(y, e, p, kappa=0.5)
            grads, _, _ = xattn_add_backward(dfused, cache)
            return float(np.sum(fused * dfused)), grads

        template = init_xattn_add(2, 3, rng)
        assert grad_check(f, dict(vars(template))) < 1e-4

    def test_gradcheck_inputs(self, rng):
        p = init_xattn_add(2, 3, rng)
        dfused = rng.normal(size=(3, 2))

        def f(point):
            fused, cache = xattn_add_forward(point["y"], point["e"], p, kappa=0.7)
            _, dy, de = xattn_add_backward(dfused, cache)
            return float(np.sum(fused * dfused)), {"y": dy, "e": de}

        point = {"y": rng.normal(size=(3, 2)), "e": rng.normal(size=(3, 3))}
        assert grad_check(f, point) < 1e-4


class TestConfig:
    def test_defaults(self):
        cfg = MmfConfig()
        assert cfg.variant == "gr_add"
        assert cfg.hidden == 16
        assert cfg.kappa == 0.5

    def test_validation(self):
        with pytest.raises(InputError):
            MmfConfig(variant="bogus")
        with pytest.raises(InputError):
            MmfConfig(hidden=0)
        with pytest.raises(InputError):
            MmfConfig(kappa=-0.1)
        with pytest.raises(InputError):
            MmfConfig(kappa=float("inf"))
