# -*- coding: utf-8 -*-
#
#   Copyright © 2026 pathcaps developers
#
#   This program is free software: you can redistribute it and/or modify
#   it under the terms of the GNU Lesser General Public License as published by
#   the Free Software Foundation, either version 3 of the License, or
#   (at your option) any later version.
#
#   This program is distributed in the hope that it will be useful,
#   but WITHOUT ANY WARRANTY; without even the implied warranty of
#   MERCHANTABILITY or FITNESS FOR A PARTICULAR PURPOSE.  See the
#   GNU Lesser General Public License for more details.
#
#   You should have received a copy of the GNU Lesser General Public License
#   along with this program.  If not, see <http://www.gnu.org/licenses/>.
"""
:mod:`pathcaps.config` --- run configuration
============================================

A :class:`RunConfig` is a flat set of values, each declared once with its
dotted key in the JSON document and its command line flag. Values are
resolved in this order, later sources winning:

#. built-in defaults,
#. the JSON file given with ``--config``,
#. command line flags,
#. ``PATHCAPS_DATA_DIR`` for ``data.dir`` when still unset.

The resolved configuration is written back as sorted, indented JSON, and
feeding that file to ``--config`` reproduces the run.

Example::

    >>> cfg = RunConfig(paths=10, drop_circuit=True)
    >>> cfg.to_tree()['architecture']
    {'kind': 'pathcaps', 'paths': 10, 'variant': 'table2'}
    >>> cfg.to_network_spec().num_paths
    10
    >>> RunConfig(epochs=0)
    Traceback (most recent call last):
        ...
    ConfigError: training.epochs: expected an integer >= 1, got 0
"""
import json
import logging
import os

from . import _fields, data, exceptions, model, paths
from .capsules import RoutingMode

__all__ = ('RunConfig', 'DATA_DIR_ENV', 'resolve')

logger = logging.getLogger(__name__)

DATA_DIR_ENV = 'PATHCAPS_DATA_DIR'

LOG_LEVELS = ('DEBUG', 'INFO', 'WARNING', 'ERROR')

class RunConfig(object):
    """
    Everything a run needs. Keyword arguments override the defaults and are
    validated like config file values.
    """
    _fields = (
        _fields.ChoiceField('arch', 'architecture.kind', model.PATHCAPS, model.ARCHITECTURES,
                flag='--arch', help='network family'),
        _fields.IntField('paths', 'architecture.paths', 5, minimum=1,
                help='number of paths'),
        _fields.ChoiceField('variant', 'architecture.variant', paths.TABLE2, paths.VARIANTS,
                help='path layout'),
        _fields.ChoiceField('routing', 'routing.mode', RoutingMode.FAN_IN.value,
                [m.value for m in RoutingMode], flag='--routing', help='coupling normalization'),
        _fields.IntField('iterations', 'routing.iterations', 3, minimum=1,
                help='routing iterations'),
        _fields.BoolField('drop_circuit', 'drop_circuit.enabled', False,
                flag='--drop-circuit', help='drop whole paths while training'),
        _fields.FloatField('drop_prob', 'drop_circuit.prob', 0.5, low=0.0, high=1.0,
                flag='--drop-prob', help='path drop probability'),
        _fields.ChoiceField('drop_granularity', 'drop_circuit.granularity', 'minibatch',
                ('minibatch', 'sample'), flag='--drop-granularity',
                help='one mask per minibatch or per sample'),
        _fields.BoolField('recon', 'reconstruction.enabled', False, flag='--recon',
                help='reconstruction decoder and loss'),
        _fields.IntField('epochs', 'training.epochs', 300, minimum=1),
        _fields.IntField('batch_size', 'training.batch_size', 128, minimum=1),
        _fields.IntField('seed', 'training.seed', 0, minimum=0, help='base seed'),
        _fields.IntField('trials', 'training.trials', 1, minimum=1,
                help='independent runs with seeds seed, seed+1, ...'),
        _fields.FloatField('val_fraction', 'training.val_fraction', 0.1, low=0.0, high=1.0,
                help='share of the training file held out for validation'),
        _fields.BoolField('augment', 'training.augment', True,
                help='random shifts of up to 2 pixels'),
        _fields.IntField('workers', 'training.workers', 1, minimum=1,
                help='threads running the paths'),
        _fields.BoolField('record_wall_time', 'training.record_wall_time', False,
                help='write epoch wall time to the metrics CSV'),
        _fields.PathField('data_dir', 'data.dir', None, flag='--data-dir',
                help='directory holding the MNIST files'),
        _fields.OptionalIntField('train_limit', 'data.train_limit', None, minimum=1,
                help='use the first N training images'),
        _fields.OptionalIntField('test_limit', 'data.test_limit', None, minimum=1,
                help='use the first N test images'),
        _fields.PathField('out_dir', 'output.dir', 'runs', flag='--out-dir',
                help='output directory'),
        _fields.ChoiceField('log_level', 'output.log_level', 'INFO', LOG_LEVELS),
        _fields.IntField('index', 'perturb.index', 0, minimum=0,
                help='test image to perturb'),
        _fields.OptionalIntField('digit', 'perturb.digit', None, minimum=0,
                help='digit capsule to perturb, the longest by default'),
        _fields.IntListField('dims', 'perturb.dims', [0, 1, 2],
                help='capsule dimensions to sweep'),
        _fields.FloatField('lo', 'perturb.lo', -0.25, help='sweep start'),
        _fields.FloatField('hi', 'perturb.hi', 0.25, help='sweep end'),
        _fields.FloatField('step', 'perturb.step', 0.05, low=0.0, help='sweep step'),
        _fields.IntField('gap', 'perturb.gap', 2, minimum=0, help='pixels between tiles'),
        _fields.PathField('image', 'perturb.image', None,
                help='PGM output, <out_dir>/perturb.pgm by default'),
        _fields.IntField('samples', 'gradcheck.samples', 4, minimum=1,
                help='coordinates checked per parameter tensor'),
        _fields.FloatField('eps', 'gradcheck.eps', 1e-5, low=1e-7, high=1e-4, closed=True,
                help='central difference step'),
    )

    def __init__(self, **values):
        for field in self._fields:
            value = field.default
            setattr(self, field.variable, list(value) if isinstance(value, list) else value)
        for name, value in values.items():
            setattr(self, name, self._field(name).check(value))
        self.validate()

    @classmethod
    def _field(cls, variable):
        for field in cls._fields:
            if field.variable == variable:
                return field
        raise exceptions.ConfigError('unknown setting %r' % variable)

    @classmethod
    def add_arguments(cls, parser):
        """Add one flag per field to :class:`argparse.ArgumentParser` `parser`."""
        for field in cls._fields:
            field.add_argument(parser)

    def update(self, tree):
        """Apply a parsed JSON document."""
        if not isinstance(tree, dict):
            raise exceptions.ConfigError('config: expected an object at the top level')
        known = set(f.key for f in self._fields)
        for section, values in tree.items():
            if not isinstance(values, dict):
                raise exceptions.ConfigError('%s: expected an object' % section)
            for name in values:
                if '%s.%s' % (section, name) not in known:
                    raise exceptions.ConfigError('%s.%s: unknown key' % (section, name))
        for field in self._fields:
            field.read(self, tree)
        self.validate()

    def apply_args(self, namespace):
        """Apply parsed command line flags; unset flags are ``None``."""
        for field in self._fields:
            value = getattr(namespace, field.variable, None)
            if value is not None:
                setattr(self, field.variable, field.check(value))
        self.validate()

    def apply_environment(self, environ=None):
        environ = os.environ if environ is None else environ
        if self.data_dir is None and environ.get(DATA_DIR_ENV):
            self.data_dir = environ[DATA_DIR_ENV]
            logger.debug('data.dir from %s: %s', DATA_DIR_ENV, self.data_dir)

    def validate(self):
        """
        Check cross-field constraints.

        :raises: :exc:`ConfigError` naming the offending key
        """
        if self.val_fraction <= 0.0:
            raise exceptions.ConfigError('training.val_fraction: expected a value in (0, 1), got %g'
                    % self.val_fraction)
        if self.hi < self.lo:
            raise exceptions.ConfigError('perturb.hi: %g is below perturb.lo %g'
                    % (self.hi, self.lo))
        if self.hi > self.lo and self.step <= 0.0:
            raise exceptions.ConfigError('perturb.step: expected a positive step for the sweep '
                    'from %g to %g, got %g' % (self.lo, self.hi, self.step))
        self.to_network_spec()

    def to_network_spec(self, seed=None):
        """:class:`~pathcaps.model.NetworkSpec` of this run, with `seed`
        replacing ``training.seed`` if given."""
        return model.NetworkSpec(
                architecture=self.arch,
                num_paths=self.paths,
                variant=self.variant,
                routing=RoutingMode(self.routing),
                iterations=self.iterations,
                drop=paths.DropCircuitConfig(self.drop_circuit, self.drop_prob,
                        self.drop_granularity),
                reconstruction=self.recon,
                seed=self.seed if seed is None else seed)

    def split_config(self, seed=None):
        return data.SplitConfig(self.val_fraction, self.seed if seed is None else seed)

    def to_tree(self):
        tree = {}
        for field in self._fields:
            field.save(self, tree)
        return tree

    def dumps(self):
        return json.dumps(self.to_tree(), sort_keys=True, indent=2) + '\n'

    def save(self, path):
        with open(path, 'w', encoding='utf-8') as stream:
            stream.write(self.dumps())
        logger.debug('wrote resolved config to %s', path)

    @classmethod
    def load(cls, path):
        """
        Defaults updated from the JSON file at `path`.

        :raises: :exc:`ConfigError` for malformed documents
        :raises: :exc:`FileNotFoundError` if `path` does not exist
        """
        with open(path, encoding='utf-8') as stream:
            try:
                tree = json.load(stream)
            except ValueError as exc:
                raise exceptions.ConfigError('%s: not valid JSON: %s' % (path, exc))
        self = cls()
        try:
            self.update(tree)
        except exceptions.ConfigError as exc:
            raise exceptions.ConfigError('%s: %s' % (path, exc))
        return self

    def __eq__(self, other):
        return isinstance(other, RunConfig) and self.to_tree() == other.to_tree()

    def __repr__(self):
        return '<RunConfig: %s>' % json.dumps(self.to_tree(), sort_keys=True)

def resolve(namespace, environ=None):
    """
    Build the :class:`RunConfig` of a command: defaults, then the file named
    by ``namespace.config``, then flags, then the environment.
    """
    path = getattr(namespace, 'config', None)
    cfg = RunConfig.load(path) if path else RunConfig()
    cfg.apply_args(namespace)
    cfg.apply_environment(environ)
    return cfg
