import unittest

import numpy as np

from pathcaps import autodiff, exceptions, model, paths, streams
from pathcaps.autodiff import Graph, Tensor
from pathcaps.paths import Conv, DropCircuitConfig, Maxpool, PathMask, PathSpec

from . import fixtures

class TestPathSpec(unittest.TestCase):
    def test_parameter_counts(self):
        self.assertEqual(paths.default_path_spec(paths.TABLE1).parameter_count(), 53192)
        self.assertEqual(paths.default_path_spec(paths.TABLE2).parameter_count(), 73944)

    def test_output_shape(self):
        for variant in paths.VARIANTS:
            spec = paths.default_path_spec(variant)
            self.assertEqual(spec.output_shape(), paths.OUTPUT_SHAPE)
            self.assertEqual(spec.shape_trace()[-1], paths.OUTPUT_SHAPE)

    def test_unknown_variant(self):
        self.assertRaises(exceptions.ConfigError, paths.default_path_spec, 'table3')

    def test_list_form(self):
        spec = PathSpec([Conv(3, 1, 1, 4), Maxpool(2, 2), Conv(3, 1, 1, 8), Maxpool(2, 2)])
        self.assertEqual(PathSpec.from_list(spec.to_list()), spec)
        self.assertRaises(exceptions.ConfigError, PathSpec.from_list, [{'type': 'dense'}])

    def test_forward_shape(self):
        spec = paths.default_path_spec(paths.TABLE2)
        net = model.NetworkSpec(num_paths=1)
        params = model.init_params(net, streams.stream(0, 'init'))
        out = paths.path_forward(spec, params, Tensor(np.zeros((2, 1, 28, 28))))
        self.assertEqual(out.shape, (2, 8, 7, 7))

    def test_wrong_input(self):
        net = fixtures.tiny_spec()
        params = model.init_params(net, streams.stream(0, 'init'))
        self.assertRaises(exceptions.ShapeError, paths.path_forward, net.path_spec, params,
                Tensor(np.zeros((1, 1, 27, 28))))

class TestAssembly(unittest.TestCase):
    def test_order(self):
        rng = np.random.default_rng(0)
        a = Tensor(rng.standard_normal((1, 8, 7, 7)))
        b = Tensor(rng.standard_normal((1, 8, 7, 7)))
        caps = paths.assemble_primary([a, b])
        self.assertEqual(caps.shape, (1, 98, 8))
        # unit 10 of path 0 is row 1, column 3
        self.assertTrue(np.allclose(caps.tensor.data[0, 10], _squash(a.data[0, :, 1, 3])))
        self.assertTrue(np.allclose(caps.tensor.data[0, 49], _squash(b.data[0, :, 0, 0])))

    def test_mismatch(self):
        a = Tensor(np.ones((1, 8, 7, 7)))
        b = Tensor(np.ones((1, 8, 6, 6)))
        self.assertRaises(exceptions.ShapeError, paths.assemble_primary, [a, b])
        self.assertRaises(exceptions.ShapeError, paths.assemble_primary, [])

    def test_workers(self):
        net = fixtures.tiny_spec(num_paths=3)
        params = model.init_params(net, streams.stream(1, 'init'))
        image = Tensor(fixtures.dataset(2).images)
        serial = paths.run_paths(net.path_spec, params, image, 3)
        threaded = paths.run_paths(net.path_spec, params, image, 3, workers=3)
        for a, b in zip(serial, threaded):
            self.assertTrue((a.data == b.data).all())

    def test_workers_gradients(self):
        net = fixtures.tiny_spec(num_paths=3)
        image = fixtures.dataset(2).images
        grads = []
        for workers in (1, 3):
            params = model.init_params(net, streams.stream(1, 'init'))
            with Graph() as graph:
                out = model.forward(net, params, image, workers=workers)
                graph.backward(model.margin_loss(out.lengths, [0, 1]))
            grads.append(params.grads())
        for name in grads[0]:
            self.assertTrue((grads[0][name] == grads[1][name]).all(), name)

def _squash(vector):
    sq = (vector * vector).sum()
    return vector * sq / (1.0 + sq) / np.sqrt(sq + 1e-12)

class TestDropCircuit(unittest.TestCase):
    def test_config(self):
        self.assertRaises(exceptions.ConfigError, DropCircuitConfig, True, 1.0)
        self.assertRaises(exceptions.ConfigError, DropCircuitConfig, True, -0.1)
        self.assertRaises(exceptions.ConfigError, DropCircuitConfig, True, 0.5, 'path')
        self.assertEqual(DropCircuitConfig(True, 0.5).scale, 2.0)

    def test_mask_statistics(self):
        cfg = DropCircuitConfig(True, 0.5)
        rng = streams.stream(0, 'mask')
        masks = np.array([paths.sample_mask(10, cfg, rng).flags for _ in range(10000)])
        self.assertTrue(masks.any(axis=1).all())
        expected = 0.5 / (1.0 - 0.5 ** 10)
        self.assertLess(abs(masks.mean() - expected), 0.02)

    def test_single_path_always_kept(self):
        cfg = DropCircuitConfig(True, 0.9)
        rng = streams.stream(0, 'mask')
        for _ in range(100):
            self.assertTrue(paths.sample_mask(1, cfg, rng).flags.all())

    def test_per_sample(self):
        cfg = DropCircuitConfig(True, 0.5, 'sample')
        mask = paths.sample_mask(4, cfg, streams.stream(0, 'mask'), batch=6)
        self.assertEqual(mask.flags.shape, (6, 4))
        self.assertTrue(mask.flags.any(axis=1).all())
        self.assertRaises(exceptions.ContractError, paths.sample_mask, 4, cfg,
                streams.stream(0, 'mask'))

    def test_all_dropped_rejected(self):
        self.assertRaises(exceptions.ContractError, PathMask, [False, False])

    def test_apply(self):
        cfg = DropCircuitConfig(True, 0.5)
        outs = [Tensor(np.ones((1, 8, 7, 7))), Tensor(np.ones((1, 8, 7, 7)))]
        mask = PathMask([True, False])
        dropped = paths.apply_drop(outs, mask, True, cfg)
        self.assertEqual(dropped[0].data.max(), 2.0)
        self.assertEqual(np.count_nonzero(dropped[1].data), 0)
        same = paths.apply_drop(outs, mask, False, cfg)
        self.assertTrue(all(a is b for a, b in zip(same, outs)))

    def test_dropped_path_zero_gradient(self):
        net = fixtures.tiny_spec(drop=DropCircuitConfig(True, 0.5))
        params = model.init_params(net, streams.stream(2, 'init'))
        with Graph() as graph:
            out = model.forward(net, params, fixtures.dataset(2).images, training=True,
                    mask=PathMask([True, False]))
            graph.backward(model.margin_loss(out.lengths, [0, 1]))
        grads = params.grads()
        for name, grad in grads.items():
            if name.startswith('path1.'):
                self.assertEqual(np.count_nonzero(grad), 0, name)
            elif name.startswith('path0.') and name.endswith('weight'):
                self.assertGreater(np.count_nonzero(grad), 0, name)

    def test_eval_ignores_drop(self):
        net = fixtures.tiny_spec(drop=DropCircuitConfig(True, 0.5))
        plain = net.replace(drop=DropCircuitConfig())
        params = model.init_params(net, streams.stream(3, 'init'))
        image = fixtures.dataset(2).images
        with autodiff.no_graph():
            a = model.forward(net, params, image).lengths.data
            b = model.forward(plain, params, image).lengths.data
        self.assertTrue((a == b).all())

test_cases = (TestPathSpec, TestAssembly, TestDropCircuit)

def load_tests(loader, tests, pattern):
    suite = unittest.TestSuite()
    for test_class in test_cases:
        tests = loader.loadTestsFromTestCase(test_class)
        suite.addTests(tests)
    return suite

if __name__ == '__main__':
    unittest.main()
