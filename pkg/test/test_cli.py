import contextlib
import io
import os
import tempfile
import unittest

from pathcaps import checkpoint, cli, model, pgm, streams

from . import fixtures

class CliMixin(object):
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.data_dir = os.path.join(self.tmp.name, 'mnist')
        os.mkdir(self.data_dir)

    def tearDown(self):
        self.tmp.cleanup()

    def path(self, *parts):
        return os.path.join(self.tmp.name, *parts)

    def run_cli(self, *argv, **environ):
        out, err = io.StringIO(), io.StringIO()
        with contextlib.redirect_stderr(err):
            status = cli.main(list(argv), environ, out)
        return status, out.getvalue(), err.getvalue()

    def read(self, *parts):
        with open(self.path(*parts), 'rb') as stream:
            return stream.read()

class TestParams(CliMixin, unittest.TestCase):
    def test_pathcaps(self):
        status, out, _ = self.run_cli('params', '--paths', '10', '--recon')
        self.assertEqual(status, cli.EXIT_OK)
        lines = out.splitlines()
        self.assertEqual(lines[0], 'pathcaps, 10 paths (table2), reconstruction')
        self.assertIn('739,440', lines[1])
        self.assertIn('627,200', lines[2])
        self.assertIn('1,411,344', lines[3])
        self.assertEqual(lines[4].split(), ['total', '2,777,984'])

    def test_capsnet(self):
        status, out, _ = self.run_cli('params', '--arch', 'capsnet')
        self.assertEqual(status, cli.EXIT_OK)
        self.assertEqual(out.splitlines()[-1].split(), ['total', '6,804,224'])

    def test_explicit_variant(self):
        status, out, _ = self.run_cli('params', '--arch', 'pathcaps', '--paths', '10',
                '--recon', '--variant', 'table2')
        self.assertEqual(status, cli.EXIT_OK)
        self.assertEqual(out.splitlines()[4].split(), ['total', '2,777,984'])

    def test_table1_note(self):
        status, out, _ = self.run_cli('params', '--variant', 'table1', '--paths', '5')
        self.assertEqual(status, cli.EXIT_OK)
        lines = out.splitlines()
        self.assertIn(['total', '579,560'], [line.split() for line in lines])
        self.assertTrue(lines[-1].startswith('note: '))

    def test_bad_value(self):
        status, _, err = self.run_cli('params', '--paths', '0')
        self.assertEqual(status, cli.EXIT_USAGE)
        self.assertIn('architecture.paths', err)

    def test_bad_config_file(self):
        with open(self.path('bad.json'), 'w') as stream:
            stream.write('{"routing": {"mode": "sideways"}}')
        status, _, err = self.run_cli('params', '--config', self.path('bad.json'))
        self.assertEqual(status, cli.EXIT_USAGE)
        self.assertIn('routing.mode', err)

class TestTrainEval(CliMixin, unittest.TestCase):
    def train_args(self, out_dir):
        return ('train', '--data-dir', self.data_dir, '--out-dir', out_dir, '--paths', '1',
                '--epochs', '1', '--batch-size', '10', '--train-limit', '20',
                '--test-limit', '10', '--no-augment')

    def test_missing_data(self):
        status, _, err = self.run_cli(*self.train_args(self.path('run')))
        self.assertEqual(status, cli.EXIT_USAGE)
        self.assertIn(self.data_dir, err)

    def test_no_data_dir(self):
        status, _, err = self.run_cli('train', '--out-dir', self.path('run'))
        self.assertEqual(status, cli.EXIT_USAGE)
        self.assertIn('data.dir', err)

    def test_data_dir_from_environment(self):
        status, _, err = self.run_cli('eval', self.path('absent.pcap'),
                PATHCAPS_DATA_DIR=self.data_dir)
        self.assertEqual(status, cli.EXIT_USAGE)
        self.assertIn('absent.pcap', err)

    def test_train_eval(self):
        fixtures.write_mnist(self.data_dir, 20, 10)
        for name in ('a', 'b'):
            status, out, _ = self.run_cli(*self.train_args(self.path(name)))
            self.assertEqual(status, cli.EXIT_OK)
            self.assertTrue(out.startswith('trial 0 (seed 0): best epoch 1'))
        for filename in ('metrics.csv', 'best.pcap', 'data.json'):
            self.assertEqual(self.read('a', filename), self.read('b', filename), filename)

        ckpt = self.path('a', 'best.pcap')
        results = []
        for name in ('e1', 'e2'):
            status, out, _ = self.run_cli('eval', ckpt, '--data-dir', self.data_dir,
                    '--out-dir', self.path(name), '--test-limit', '10')
            self.assertEqual(status, cli.EXIT_OK)
            self.assertRegex(out, r'^test error: \d+\.\d{4}% on 10 samples$')
            results.append(self.read(name, 'eval.csv'))
        self.assertEqual(results[0], results[1])

        with open(self.path('broken.pcap'), 'wb') as stream:
            stream.write(self.read('a', 'best.pcap')[:-100])
        status, _, err = self.run_cli('eval', self.path('broken.pcap'),
                '--data-dir', self.data_dir, '--out-dir', self.path('e3'))
        self.assertEqual(status, cli.EXIT_FAILURE)
        self.assertIn('broken.pcap', err)

    def test_trials(self):
        fixtures.write_mnist(self.data_dir, 20, 10)
        args = self.train_args(self.path('trials'))
        status, out, _ = self.run_cli(*(args + ('--trials', '2')))
        self.assertEqual(status, cli.EXIT_OK)
        self.assertIn('2 trials: val ', out)
        for trial in (0, 1):
            self.assertTrue(os.path.isfile(self.path('trials', 'trial-%d' % trial, 'best.pcap')))
        lines = self.read('trials', 'trials.csv').decode().splitlines()
        self.assertEqual(len(lines), 3)

class TestPerturb(CliMixin, unittest.TestCase):
    def save(self, reconstruction):
        spec = fixtures.tiny_spec(reconstruction=reconstruction)
        params = model.init_params(spec, streams.stream(0, 'init'))
        path = self.path('recon.pcap' if reconstruction else 'plain.pcap')
        checkpoint.save_checkpoint(params, spec, None, path)
        return path

    def test_grid(self):
        fixtures.write_mnist(self.data_dir, 10, 10)
        status, out, _ = self.run_cli('perturb', self.save(True), '--data-dir', self.data_dir,
                '--out-dir', self.path('out'), '--index', '3')
        self.assertEqual(status, cli.EXIT_OK)
        self.assertIn('11 values', out)
        image = pgm.read_pgm(self.path('out', 'perturb.pgm'))
        self.assertEqual(image.shape, (3 * 28 + 2 * 2, 13 * 28 + 12 * 2))
        magic, size, maxval, pixels = self.read('out', 'perturb.pgm').split(b'\n', 3)
        width, height = map(int, size.split())
        self.assertEqual((magic, maxval), (b'P5', b'255'))
        self.assertEqual(len(pixels), width * height)

    def test_without_decoder(self):
        fixtures.write_mnist(self.data_dir, 10, 10)
        status, _, err = self.run_cli('perturb', self.save(False), '--data-dir', self.data_dir,
                '--out-dir', self.path('out'))
        self.assertEqual(status, cli.EXIT_FAILURE)
        self.assertIn('decoder', err)

    def test_index_out_of_range(self):
        fixtures.write_mnist(self.data_dir, 10, 10)
        status, _, err = self.run_cli('perturb', self.save(True), '--data-dir', self.data_dir,
                '--out-dir', self.path('out'), '--index', '10')
        self.assertEqual(status, cli.EXIT_USAGE)
        self.assertIn('perturb.index', err)

    def test_zero_step(self):
        fixtures.write_mnist(self.data_dir, 10, 10)
        status, _, err = self.run_cli('perturb', self.save(True), '--data-dir', self.data_dir,
                '--out-dir', self.path('out'), '--step', '0')
        self.assertEqual(status, cli.EXIT_USAGE)
        self.assertIn('perturb.step', err)

class TestGradcheck(CliMixin, unittest.TestCase):
    def test_pass(self):
        status, out, _ = self.run_cli('gradcheck', '--samples', '2')
        self.assertEqual(status, cli.EXIT_OK)
        self.assertEqual(out.count('PASS'), 2)

    def test_corrupted(self):
        status, out, _ = self.run_cli('gradcheck', '--samples', '2', '--corrupt', 'einsum')
        self.assertEqual(status, cli.EXIT_FAILURE)
        self.assertIn('FAIL', out)

test_cases = (TestParams, TestTrainEval, TestPerturb, TestGradcheck)

def load_tests(loader, tests, pattern):
    suite = unittest.TestSuite()
    for test_class in test_cases:
        tests = loader.loadTestsFromTestCase(test_class)
        suite.addTests(tests)
    return suite

if __name__ == '__main__':
    unittest.main()
