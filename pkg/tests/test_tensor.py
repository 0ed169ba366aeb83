import numpy as np
import pytest

from arn.errors import DomainError, RankError, ShapeError
from arn.tensor import Tensor, concat, gather_rows, grad_check, lstm_cell, no_grad, pick


def t(data, grad=True):
    return Tensor(np.asarray(data, dtype=np.float64), requires_grad=grad)


class TestForward:
    def test_softmax_symmetry(self):
        out = Tensor([0.0, 0.0, 0.0]).softmax()
        np.testing.assert_allclose(out.data, np.full(3, 1 / 3))

    def test_matmul_identity(self):
        a = np.random.default_rng(0).standard_normal((3, 5))
        out = Tensor(np.eye(3)) @ Tensor(a)
        np.testing.assert_array_equal(out.data, a)

    def test_sigmoid_reference(self):
        out = Tensor([0.5]).sigmoid()
        assert abs(out.data[0] - 1.0 / (1.0 + np.exp(-0.5))) < 1e-15

    def test_shape_mismatch(self):
        with pytest.raises(ShapeError):
            Tensor(np.ones((2, 3))) @ Tensor(np.ones((2, 3)))

    def test_log_domain(self):
        with pytest.raises(DomainError):
            Tensor([1.0, -1.0]).log()

    def test_log_softmax_matches_log_of_softmax(self):
        x = np.random.default_rng(1).standard_normal((4, 6))
        np.testing.assert_allclose(
            Tensor(x).log_softmax().data, np.log(Tensor(x).softmax().data), atol=1e-12
        )


class TestBackward:
    def test_identity_root(self):
        x = t([3.0])
        x.backward()
        np.testing.assert_array_equal(x.grad, [1.0])

    def test_sum_of_squares(self):
        x = t([1.0, 2.0, 3.0])
        (x * x).sum().backward()
        np.testing.assert_allclose(x.grad, [2.0, 4.0, 6.0])

    def test_log_softmax_closed_form(self):
        rng = np.random.default_rng(2)
        logits = rng.standard_normal(5)
        k = 3
        x = t(logits)
        x.log_softmax()[k].backward()
        soft = np.exp(logits - logits.max())
        soft /= soft.sum()
        expected = -soft
        expected[k] += 1.0
        np.testing.assert_allclose(x.grad, expected, atol=1e-12)

    def test_multiple_uses_sum(self):
        x = t([2.0])
        y = x * x + x * 3.0
        y.sum().backward()
        np.testing.assert_allclose(x.grad, [2 * 2.0 + 3.0])

    def test_nonscalar_root(self):
        with pytest.raises(RankError):
            t([1.0, 2.0]).backward()

    def test_chain_rule_linearity(self):
        rng = np.random.default_rng(3)
        data = rng.standard_normal(6)
        a, b = 2.7, -1.3

        def f(x):
            return (x * x).sum()

        def g(x):
            return x.exp().sum()

        x1 = t(data)
        (a * f(x1) + b * g(x1)).backward()
        x2, x3 = t(data), t(data)
        f(x2).backward()
        g(x3).backward()
        np.testing.assert_allclose(x1.grad, a * x2.grad + b * x3.grad, atol=1e-12)

    def test_determinism(self):
        rng = np.random.default_rng(4)
        data = rng.standard_normal((3, 4))

        def run():
            x = t(data)
            y = ((x @ x.reshape(4, 3)).tanh().softmax() * 2.0).sum()
            y.backward()
            return y.data.copy(), x.grad.copy()

        v1, g1 = run()
        v2, g2 = run()
        assert np.array_equal(v1, v2) and np.array_equal(g1, g2)


OPS = {
    "add": lambda x: (x + x.exp()).sum(),
    "sub": lambda x: (x - x.tanh()).sum(),
    "mul": lambda x: (x * x.sigmoid()).sum(),
    "matmul": lambda x: (x.reshape(3, 4) @ x.reshape(4, 3)).sum(),
    "concat": lambda x: concat([x.reshape(3, 4), x.reshape(3, 4) * 2.0], axis=1).tanh().sum(),
    "slice": lambda x: x.reshape(3, 4)[1:, :2].sum(),
    "sum_axis": lambda x: (x.reshape(3, 4).sum(axis=0)[:3] * x.reshape(3, 4).sum(axis=1)).sum(),
    "mean": lambda x: x.reshape(3, 4).mean(axis=1).sum(),
    "exp": lambda x: x.exp().sum(),
    "log": lambda x: (x.exp() + 1.0).log().sum(),
    "tanh": lambda x: x.tanh().sum(),
    "sigmoid": lambda x: x.sigmoid().sum(),
    "log_sigmoid": lambda x: x.log_sigmoid().sum(),
    "softmax": lambda x: (x.reshape(3, 4).softmax() * x.reshape(3, 4)).sum(),
    "log_softmax": lambda x: (x.reshape(3, 4).log_softmax() * x.reshape(3, 4)).sum(),
    "gather": lambda x: gather_rows(x.reshape(4, 3), np.array([0, 2, 2, 1])).sum(),
    "pick": lambda x: pick(x.reshape(3, 4), np.array([1, 0, 3])).sum(),
    "bias_broadcast": lambda x: (x.reshape(3, 4) + x.reshape(3, 4).sum(axis=0)).tanh().sum(),
    "lstm_cell": lambda x: lstm_cell(x.reshape(1, 8), Tensor(np.r_[0.3, -0.4].reshape(1, 2))).sum(),
}


@pytest.mark.parametrize("name", sorted(OPS))
def test_grad_check_closed_op_set(name):
    rng = np.random.default_rng(hash(name) % 2**32)
    size = 8 if name == "lstm_cell" else 12
    x = Tensor(rng.standard_normal(size) * 0.7)
    assert grad_check(OPS[name], x) <= 1e-6


def test_grad_check_constant_gradient():
    x = Tensor(np.random.default_rng(5).standard_normal(7))
    assert grad_check(lambda v: v.sum(), x) < 1e-10


def test_no_grad_blocks_recording():
    x = t([1.0, 2.0])
    with no_grad():
        y = (x * x).sum()
    assert not y.requires_grad and y._backward is None
