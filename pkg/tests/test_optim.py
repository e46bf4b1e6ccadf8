import math

import numpy as np
import pytest

from oracles import quad_grad, scratch_adam
from recolordetect.classifier.optim import AdamState, adam_step, lr_schedule


@pytest.mark.parametrize(
    "wd,mask,decoupled",
    [(0.0, None, False), (0.01, [True, False], False), (0.3, None, False), (0.01, [True, False], True), (0.3, None, True)],
)
def test_adam_matches_scratch(wd, mask, decoupled):
    x0 = [4.0, -3.0]
    oracle = scratch_adam(quad_grad, x0, 0.05, 150, wd=wd, mask=mask, decoupled=decoupled)
    x = np.array(x0)
    st = AdamState.zeros(2)
    for want in oracle:
        m = None if mask is None else np.array(mask)
        x, st = adam_step(x, np.array(quad_grad(list(x))), st, 0.05, wd, m, decoupled)
        assert np.max(np.abs(x - np.array(want))) <= 1e-12
    assert st.step == 150


def test_adam_first_step_is_lr_sized():
    x, _ = adam_step(np.array([1.0, -1.0]), np.array([0.3, -7.0]), AdamState.zeros(2), 0.1)
    assert np.allclose(x, [0.9, -0.9], atol=1e-7)


def test_adam_does_not_mutate_inputs():
    p = np.array([1.0, 2.0])
    st = AdamState.zeros(2)
    adam_step(p, np.array([1.0, 1.0]), st, 0.1, 0.5)
    assert p.tolist() == [1.0, 2.0] and st.step == 0 and not st.m.any()


def test_decay_only_where_masked():
    p = np.array([2.0, 2.0])
    out, _ = adam_step(p, np.zeros(2), AdamState.zeros(2), 0.1, 0.5, np.array([True, False]), decoupled=True)
    assert out.tolist() == [2.0 - 0.1 * 0.5 * 2.0, 2.0]
    # As an L2 penalty the decay is a gradient, so the first step is lr-sized.
    out, st = adam_step(p, np.zeros(2), AdamState.zeros(2), 0.1, 0.5, np.array([True, False]))
    assert out[0] == pytest.approx(1.9, abs=1e-7) and out[1] == 2.0 and st.m[1] == 0.0


def test_adam_shape_mismatch():
    with pytest.raises(ValueError):
        adam_step(np.zeros(2), np.zeros(3), AdamState.zeros(2), 0.1)


@pytest.mark.parametrize("lr_max,lr_min,T", [(1e-4, 0.0, 64), (0.3, 0.01, 10), (1.0, 0.5, 8)])
def test_schedule_closed_form(lr_max, lr_min, T):
    assert lr_schedule(0, T, lr_max, lr_min) == lr_max
    assert lr_schedule(T // 2, T, lr_max, lr_min) == pytest.approx((lr_max + lr_min) / 2, abs=1e-15)
    assert lr_schedule(T, T, lr_max, lr_min) == lr_max
    if T % 4 == 0:
        want = lr_min + 0.5 * (lr_max - lr_min) * (1 + math.sqrt(0.5))
        assert lr_schedule(T // 4, T, lr_max, lr_min) == pytest.approx(want, abs=1e-15)
    for step in range(3 * T):
        want = lr_min + 0.5 * (lr_max - lr_min) * (1 + math.cos(math.pi * (step % T) / T))
        assert lr_schedule(step, T, lr_max, lr_min) == want
        assert lr_min <= lr_schedule(step, T, lr_max, lr_min) <= lr_max


def test_schedule_bad_cycle():
    with pytest.raises(ValueError):
        lr_schedule(0, 0, 1.0)
