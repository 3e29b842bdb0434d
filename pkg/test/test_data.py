import os
import struct
import tempfile
import unittest

import numpy as np

from pathcaps import data, exceptions, streams

from . import fixtures

class IdxFileMixin(object):
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.dir = self.tmp.name

    def tearDown(self):
        self.tmp.cleanup()

    def path(self, name):
        return os.path.join(self.dir, name)

    def write(self, name, payload):
        with open(self.path(name), 'wb') as stream:
            stream.write(payload)
        return self.path(name)

class TestIdx(IdxFileMixin, unittest.TestCase):
    def test_round_trip(self):
        labels = fixtures.balanced_labels(12)
        pixels = fixtures.digit_images(labels)
        data.write_idx_images(self.path('img'), pixels)
        data.write_idx_labels(self.path('lbl'), labels)
        images = data.load_idx_images(self.path('img'))
        self.assertEqual(images.shape, (12, 28, 28))
        self.assertTrue(np.allclose(images * 255.0, pixels))
        self.assertEqual(data.load_idx_labels(self.path('lbl')).tolist(), labels.tolist())

    def test_wrong_magic(self):
        path = self.write('lbl', struct.pack('>2I', data.IMAGE_MAGIC, 1) + b'\x01')
        with self.assertRaises(exceptions.MagicError) as cm:
            data.load_idx_labels(path)
        self.assertIn(path, str(cm.exception))

    def test_label_out_of_range(self):
        path = self.write('lbl', struct.pack('>2I', data.LABEL_MAGIC, 3) + b'\x01\x0a\x02')
        with self.assertRaises(exceptions.FormatError) as cm:
            data.load_idx_labels(path)
        self.assertIn('label 1', str(cm.exception))

    def test_truncated(self):
        header = struct.pack('>4I', data.IMAGE_MAGIC, 2, 28, 28)
        path = self.write('img', header + bytes(28 * 28 + 5))
        self.assertRaises(exceptions.EndOfFileError, data.load_idx_images, path)
        path = self.write('img', header[:10])
        self.assertRaises(exceptions.EndOfFileError, data.load_idx_images, path)

    def test_trailing_bytes(self):
        path = self.write('lbl', struct.pack('>2I', data.LABEL_MAGIC, 1) + b'\x01\x02')
        self.assertRaises(exceptions.IncorrectDataSize, data.load_idx_labels, path)

    def test_image_size(self):
        path = self.write('img', struct.pack('>4I', data.IMAGE_MAGIC, 1, 32, 32) + bytes(1024))
        self.assertRaises(exceptions.IncorrectDataSize, data.load_idx_images, path)

    def test_missing_file(self):
        with self.assertRaises(FileNotFoundError) as cm:
            data.load_mnist(self.dir, 'train')
        self.assertTrue(cm.exception.filename.startswith(self.dir))

    def test_load_mnist(self):
        fixtures.write_mnist(self.dir, 30, 10)
        train = data.load_mnist(self.dir, 'train')
        self.assertEqual(train.images.shape, (30, 1, 28, 28))
        self.assertEqual(sorted(train.provenance),
                ['train-images-idx3-ubyte', 'train-labels-idx1-ubyte'])
        self.assertEqual(len(data.load_mnist(self.dir, 'test').limit(4)), 4)

class TestDataset(unittest.TestCase):
    def test_mismatch(self):
        self.assertRaises(exceptions.ShapeError, data.Dataset, np.zeros((2, 28, 28)), [1])
        self.assertRaises(exceptions.ShapeError, data.Dataset, np.zeros((2, 27, 28)), [1, 2])

    def test_split(self):
        dataset = fixtures.dataset(50)
        train, val = data.split(dataset, data.SplitConfig(0.2, 3))
        self.assertEqual((len(train), len(val)), (40, 10))
        again, _ = data.split(dataset, data.SplitConfig(0.2, 3))
        self.assertTrue((train.labels == again.labels).all())
        self.assertTrue((train.images == again.images).all())
        self.assertRaises(exceptions.ConfigError, data.SplitConfig, 1.0)

    def test_split_disjoint(self):
        dataset = data.Dataset(np.zeros((20, 28, 28)), np.arange(20) % 10)
        dataset.images[:, 0, 0, 0] = np.arange(20)
        train, val = data.split(dataset, data.SplitConfig(0.25, 0))
        seen = np.concatenate([train.images[:, 0, 0, 0], val.images[:, 0, 0, 0]])
        self.assertEqual(sorted(seen.tolist()), list(range(20)))

    def test_batches(self):
        dataset = fixtures.dataset(10)
        sizes = [len(labels) for _, labels in data.batches(dataset, 4)]
        self.assertEqual(sizes, [4, 4, 2])
        order = np.concatenate([labels for _, labels in
                data.batches(dataset, 3, streams.seed_sequence(0, 'shuffle', 1))])
        self.assertEqual(sorted(order.tolist()), sorted(dataset.labels.tolist()))
        self.assertRaises(exceptions.ContractError, list, data.batches(dataset, 0))

class TestAugment(unittest.TestCase):
    def test_identity_offset(self):
        image = fixtures.dataset(1).images[0]
        self.assertTrue((data.shift_crop(image, 2, 2) == image).all())

    def test_shift(self):
        image = np.zeros((1, 28, 28))
        image[0, 10, 10] = 1.0
        shifted = data.shift_crop(image, 0, 4)
        self.assertEqual(shifted[0, 12, 8], 1.0)
        self.assertEqual(shifted.sum(), 1.0)

    def test_augment(self):
        image = fixtures.dataset(1).images[0]
        rng = streams.stream(0, 'augment', 1)
        for _ in range(20):
            out = data.augment(image, rng)
            self.assertEqual(out.shape, (1, 28, 28))
            self.assertLessEqual(out.sum(), image.sum() + 1e-9)

test_cases = (TestIdx, TestDataset, TestAugment)

def load_tests(loader, tests, pattern):
    suite = unittest.TestSuite()
    for test_class in test_cases:
        tests = loader.loadTestsFromTestCase(test_class)
        suite.addTests(tests)
    return suite

if __name__ == '__main__':
    unittest.main()
