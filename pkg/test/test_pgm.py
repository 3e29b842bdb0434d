import os
import tempfile
import unittest

import numpy as np

from pathcaps import exceptions, model, pgm

class TestPgm(unittest.TestCase):
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.path = os.path.join(self.tmp.name, 'image.pgm')

    def tearDown(self):
        self.tmp.cleanup()

    def write(self, payload):
        with open(self.path, 'wb') as stream:
            stream.write(payload)

    def test_write_read(self):
        pixels = np.arange(12, dtype=np.uint8).reshape(3, 4) * 20
        pgm.write_pgm(self.path, pixels)
        with open(self.path, 'rb') as stream:
            self.assertTrue(stream.read().startswith(b'P5\n4 3\n255\n'))
        self.assertTrue((pgm.read_pgm(self.path) == pixels).all())

    def test_comments(self):
        self.write(b'P5 # made by hand\n2 # width\n1\n255\n\x01\x02')
        self.assertEqual(pgm.read_pgm(self.path).tolist(), [[1, 2]])

    def test_bad_magic(self):
        self.write(b'P2\n1 1\n255\n\x00')
        self.assertRaises(exceptions.MagicError, pgm.read_pgm, self.path)

    def test_maxval(self):
        self.write(b'P5\n1 1\n65535\n\x00\x00')
        self.assertRaises(exceptions.FormatError, pgm.read_pgm, self.path)

    def test_size(self):
        self.write(b'P5\n2 2\n255\n\x00\x00\x00')
        with self.assertRaises(exceptions.IncorrectDataSize) as cm:
            pgm.read_pgm(self.path)
        self.assertIn(self.path, str(cm.exception))

    def test_write_checks(self):
        self.assertRaises(exceptions.ShapeError, pgm.write_pgm, self.path,
                np.zeros((2, 2, 2), dtype=np.uint8))
        self.assertRaises(exceptions.ContractError, pgm.write_pgm, self.path,
                np.zeros((2, 2)))

class TestGrid(unittest.TestCase):
    def test_to_bytes(self):
        self.assertEqual(pgm.to_bytes([0.0, 1.0 / 255, 0.999, 1.5]).tolist(), [0, 1, 255, 255])

    def test_tile_grid(self):
        tiles = np.arange(6, dtype=np.uint8).reshape(2, 3, 1, 1) + 1
        out = pgm.tile_grid(tiles, gap=1, fill=200)
        self.assertEqual(out.tolist(), [
            [1, 200, 2, 200, 3],
            [200, 200, 200, 200, 200],
            [4, 200, 5, 200, 6],
        ])

    def test_perturbation_grid(self):
        grid = model.PerturbationGrid(np.zeros((28, 28)), np.ones((28, 28)),
                np.full((3, 11, 28, 28), 0.5), [0, 1, 2], np.linspace(-0.25, 0.25, 11), 4)
        image = pgm.perturbation_grid(grid, gap=2)
        self.assertEqual(image.shape, (3 * 28 + 2 * 2, 13 * 28 + 12 * 2))
        self.assertEqual(image[0, 0], 0)
        self.assertEqual(image[0, 30], 255)
        self.assertEqual(image[0, 60], 128)
        self.assertEqual(image[28, 0], 0)

test_cases = (TestPgm, TestGrid)

def load_tests(loader, tests, pattern):
    suite = unittest.TestSuite()
    for test_class in test_cases:
        tests = loader.loadTestsFromTestCase(test_class)
        suite.addTests(tests)
    return suite

if __name__ == '__main__':
    unittest.main()
