import numpy as np
import pytest

from arn import kernels

pytestmark = pytest.mark.skipif(kernels.NUMBA_IMPL is None, reason="numba path disabled")


@pytest.fixture
def rng():
    return np.random.default_rng(11)


def test_lstm_forward_paths_agree(rng):
    pre = rng.standard_normal((5, 16))
    c = rng.standard_normal((5, 4))
    hc_np, saved_np = kernels.NUMPY_IMPL["lstm_cell_forward"](pre, c)
    hc_nb, saved_nb = kernels.NUMBA_IMPL["lstm_cell_forward"](pre, c)
    np.testing.assert_allclose(hc_np, hc_nb, atol=1e-15)
    for a, b in zip(saved_np, saved_nb):
        np.testing.assert_allclose(a, b, atol=1e-15)


def test_lstm_backward_paths_agree(rng):
    pre = rng.standard_normal((5, 16))
    c = rng.standard_normal((5, 4))
    d_hc = rng.standard_normal((5, 8))
    _, saved = kernels.NUMPY_IMPL["lstm_cell_forward"](pre, c)
    dp_np, dc_np = kernels.NUMPY_IMPL["lstm_cell_backward"](d_hc, c, *saved)
    dp_nb, dc_nb = kernels.NUMBA_IMPL["lstm_cell_backward"](d_hc, c, *saved)
    np.testing.assert_allclose(dp_np, dp_nb, atol=1e-15)
    np.testing.assert_allclose(dc_np, dc_nb, atol=1e-15)


def test_softmax_paths_agree(rng):
    x = rng.standard_normal((7, 9)) * 10
    np.testing.assert_allclose(
        kernels.NUMPY_IMPL["softmax_rows"](x), kernels.NUMBA_IMPL["softmax_rows"](x), atol=1e-15
    )
    np.testing.assert_allclose(
        kernels.NUMPY_IMPL["log_softmax_rows"](x),
        kernels.NUMBA_IMPL["log_softmax_rows"](x),
        atol=1e-14,
    )


def test_adam_paths_agree(rng):
    param = rng.standard_normal(64)
    grad = rng.standard_normal(64)
    p1, m1, v1 = param.copy(), np.zeros(64), np.zeros(64)
    p2, m2, v2 = param.copy(), np.zeros(64), np.zeros(64)
    for step in range(1, 4):
        kernels.NUMPY_IMPL["adam_update"](p1, grad, m1, v1, step, 1e-3, 0.9, 0.999, 1e-8)
        kernels.NUMBA_IMPL["adam_update"](p2, grad, m2, v2, step, 1e-3, 0.9, 0.999, 1e-8)
    np.testing.assert_allclose(p1, p2, atol=1e-15)
    np.testing.assert_allclose(m1, m2, atol=1e-15)
    np.testing.assert_allclose(v1, v2, atol=1e-15)
