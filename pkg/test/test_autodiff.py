import unittest

import numpy as np

from pathcaps import autodiff, exceptions
from pathcaps.autodiff import Graph, Tensor

def _rng(seed=0):
    return np.random.default_rng(seed)

class TestGraph(unittest.TestCase):
    def test_backward_populates_grads(self):
        x = Tensor([1.0, -2.0, 3.0], requires_grad=True)
        with Graph() as graph:
            loss = (x * x * 2.0).sum()
            graph.backward(loss)
        self.assertEqual(x.grad.tolist(), [4.0, -8.0, 12.0])

    def test_repeated_backward(self):
        x = Tensor([1.0], requires_grad=True)
        with Graph() as graph:
            loss = (x * 3.0).sum()
            graph.backward(loss)
            self.assertRaises(exceptions.ContractError, graph.backward, loss)

    def test_non_scalar_loss(self):
        x = Tensor([1.0, 2.0], requires_grad=True)
        with Graph() as graph:
            y = x * 2.0
            self.assertRaises(exceptions.ContractError, graph.backward, y)

    def test_foreign_loss(self):
        x = Tensor([1.0], requires_grad=True)
        with Graph():
            loss = x.sum()
        with Graph() as other:
            self.assertRaises(exceptions.ContractError, other.backward, loss)

    def test_mixing_graphs(self):
        x = Tensor([1.0], requires_grad=True)
        with Graph():
            y = x * 2.0
        with Graph():
            self.assertRaises(exceptions.ContractError, lambda: y + x)

    def test_no_recording_outside_graph(self):
        x = Tensor([1.0], requires_grad=True)
        y = (x * 2.0).sum()
        self.assertIsNone(y.graph)
        self.assertRaises(exceptions.ContractError, autodiff.backward, y)
        with Graph() as graph:
            with autodiff.no_graph():
                (x * 2.0).sum()
            self.assertEqual(len(graph), 0)

    def test_constants_not_recorded(self):
        with Graph() as graph:
            Tensor([1.0]) * 2.0
        self.assertEqual(len(graph), 0)

    def test_numpy_left_operand(self):
        x = Tensor([1.0, 2.0], requires_grad=True)
        with Graph() as graph:
            y = np.array([3.0, 4.0]) * x
            self.assertIsInstance(y, Tensor)
            graph.backward(y.sum())
        self.assertEqual(x.grad.tolist(), [3.0, 4.0])

    def test_broadcast_grad(self):
        x = Tensor(np.ones((2, 3)), requires_grad=True)
        b = Tensor(np.ones(3), requires_grad=True)
        with Graph() as graph:
            graph.backward((x + b).sum())
        self.assertEqual(b.grad.tolist(), [2.0, 2.0, 2.0])

class TestFiniteDiff(unittest.TestCase):
    def check(self, f, x, tol=1e-7):
        self.assertLess(autodiff.finite_diff_check(f, x), tol)

    def test_elementwise(self):
        x = Tensor(_rng().uniform(0.5, 2.0, size=(3, 4)))
        self.check(lambda t: (t ** 3 / (t + 1.0) - t.sqrt() * t.exp()).sum(), x)

    def test_reductions(self):
        x = Tensor(_rng(1).standard_normal((2, 3, 4)))
        self.check(lambda t: (t.mean(axis=1) * t.sum(axis=1)).sum(), x)
        self.check(lambda t: (t.transpose(2, 0, 1).reshape(4, 6) ** 2).sum(axis=0, keepdims=True).sum(), x)

    def test_relu_sigmoid(self):
        x = Tensor(_rng(2).standard_normal((5, 3)))
        self.check(lambda t: (autodiff.relu(t) * autodiff.sigmoid(t)).sum(), x)

    def test_softmax(self):
        x = Tensor(_rng(3).standard_normal((2, 3, 4)))
        w = _rng(4).standard_normal((2, 3, 4))
        for axis in (1, 2):
            self.check(lambda t: (autodiff.softmax_axis(t, axis) * w).sum(), x)

    def test_norm(self):
        x = Tensor(_rng(5).standard_normal((3, 4)))
        self.check(lambda t: autodiff.norm(t, axis=-1).sum(), x)

    def test_norm_zero(self):
        x = Tensor(np.zeros((1, 2)), requires_grad=True)
        with Graph() as graph:
            graph.backward(autodiff.norm(x).sum())
        self.assertEqual(x.grad.tolist(), [[0.0, 0.0]])

    def test_dense(self):
        rng = _rng(6)
        x = Tensor(rng.standard_normal((2, 5)))
        w = Tensor(rng.standard_normal((3, 5)))
        b = Tensor(rng.standard_normal(3))
        f = lambda _: (autodiff.dense(x, w, b) ** 2).sum()
        for t in (x, w, b):
            self.check(f, t)

    def test_einsum(self):
        rng = _rng(7)
        w = Tensor(rng.standard_normal((3, 2, 4, 5)))
        u = Tensor(rng.standard_normal((2, 3, 5)))
        f = lambda _: (autodiff.einsum('ndij,bnj->bndi', w, u) ** 2).sum()
        self.check(f, w)
        self.check(f, u)

    def test_einsum_subscripts(self):
        a = Tensor(np.ones((2, 2)))
        self.assertRaises(exceptions.ContractError, autodiff.einsum, 'ij,jk', a, a)
        self.assertRaises(exceptions.ContractError, autodiff.einsum, 'ij,kl->i', a, a)

    def test_concat(self):
        rng = _rng(8)
        a = Tensor(rng.standard_normal((2, 3, 2)))
        b = Tensor(rng.standard_normal((2, 1, 2)))
        w = rng.standard_normal((2, 4, 2))
        f = lambda _: (autodiff.concat([a, b], axis=1) * w).sum()
        self.check(f, a)
        self.check(f, b)

    def test_conv2d(self):
        rng = _rng(9)
        x = Tensor(rng.standard_normal((2, 2, 7, 7)))
        k = Tensor(rng.standard_normal((3, 2, 3, 3)))
        b = Tensor(rng.standard_normal(3))
        w = rng.standard_normal((2, 3, 4, 4))
        f = lambda _: (autodiff.conv2d(x, k, b, padding=1, stride=2) * w).sum()
        for t in (x, k, b):
            self.check(f, t)

    def test_conv2d_matches_loops(self):
        rng = _rng(10)
        x = rng.standard_normal((1, 2, 5, 5))
        k = rng.standard_normal((3, 2, 3, 3))
        out = autodiff.conv2d(Tensor(x), Tensor(k), Tensor(np.zeros(3)), padding=1).data
        xp = np.pad(x, ((0, 0), (0, 0), (1, 1), (1, 1)))
        for o in range(3):
            for r in range(5):
                for c in range(5):
                    expected = (xp[0, :, r:r + 3, c:c + 3] * k[o]).sum()
                    self.assertAlmostEqual(out[0, o, r, c], expected, places=12)

    def test_maxpool(self):
        x = Tensor(_rng(11).standard_normal((2, 3, 6, 6)))
        w = _rng(12).standard_normal((2, 3, 3, 3))
        self.check(lambda t: (autodiff.maxpool2d(t, 2, 2)[0] * w).sum(), x)

    def test_maxpool_ties(self):
        x = Tensor(np.ones((1, 1, 2, 2)), requires_grad=True)
        with Graph() as graph:
            out, idx = autodiff.maxpool2d(x, 2, 2)
            graph.backward(out.sum())
        self.assertEqual(idx.tolist(), [[[[0]]]])
        self.assertEqual(x.grad.tolist(), [[[[1.0, 0.0], [0.0, 0.0]]]])

    def test_shape_errors(self):
        x = Tensor(np.ones((1, 2, 4, 4)))
        self.assertRaises(exceptions.ShapeError, autodiff.conv2d, x,
                Tensor(np.ones((1, 3, 3, 3))), Tensor(np.zeros(1)))
        self.assertRaises(exceptions.ShapeError, autodiff.maxpool2d, x, 5, 1)
        self.assertRaises(exceptions.ShapeError, autodiff.dense, Tensor(np.ones((2, 3))),
                Tensor(np.ones((2, 4))), Tensor(np.zeros(2)))

    def test_eps_range(self):
        x = Tensor([1.0])
        self.assertRaises(exceptions.ContractError, autodiff.finite_diff_check,
                lambda t: t.sum(), x, 1e-3)

    def test_restores_input(self):
        x = Tensor([1.0, 2.0])
        autodiff.finite_diff_check(lambda t: (t * t).sum(), x)
        self.assertEqual(x.data.tolist(), [1.0, 2.0])
        self.assertIsNone(x.grad)
        self.assertFalse(x.requires_grad)

    def test_returns_plain_float(self):
        x = Tensor([1.0, -2.0])
        self.assertIs(type(autodiff.finite_diff_check(lambda t: (t * t).sum(), x)), float)
        self.assertIs(type(autodiff.finite_diff_check(lambda t: t.sum(), x, coords=[])), float)

    def test_corrupted_rule_detected(self):
        x = Tensor(_rng(13).uniform(1.0, 2.0, size=4))
        f = lambda t: (autodiff.sigmoid(t) * 3.0).sum()
        self.assertLess(autodiff.finite_diff_check(f, x), 1e-7)
        with autodiff.corrupt_backward('sigmoid', 1.5):
            self.assertGreater(autodiff.finite_diff_check(f, x), 1e-4)
        self.assertLess(autodiff.finite_diff_check(f, x), 1e-7)

test_cases = (TestGraph, TestFiniteDiff)

def load_tests(loader, tests, pattern):
    suite = unittest.TestSuite()
    for test_class in test_cases:
        tests = loader.loadTestsFromTestCase(test_class)
        suite.addTests(tests)
    return suite

if __name__ == '__main__':
    unittest.main()
