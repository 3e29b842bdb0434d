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
:mod:`pathcaps.paths` --- convolutional paths and DropCircuit
=============================================================

This module contains the per-path CNN that produces a block of primary
capsules, the assembly of path outputs into routing units and DropCircuit,
which removes whole paths during training.

A path is described by a :class:`PathSpec`, an ordered list of layers:

    .. productionlist::
        path: `layer`+
        layer: Conv(kernel, padding, stride, out_channels) |
             : Maxpool(kernel, stride)

Every conv layer is followed by the path activation (ReLU). Both shipped
variants turn a 1×28×28 image into an 8×7×7 block; every spatial cell of the
block is one 8-D routing unit.

.. moduleauthor:: pathcaps developers
"""
import collections
import concurrent.futures
import dataclasses
import logging

import numpy as np

from . import autodiff, capsules, exceptions

__all__ = (
    'Conv',
    'Maxpool',
    'PathSpec',
    'DropCircuitConfig',
    'PathMask',
    'default_path_spec',
    'path_forward',
    'run_paths',
    'assemble_primary',
    'sample_mask',
    'apply_drop',
)

logger = logging.getLogger(__name__)

TABLE1 = 'table1'
TABLE2 = 'table2'
VARIANTS = (TABLE1, TABLE2)

INPUT_SHAPE = (1, 28, 28)
OUTPUT_SHAPE = (capsules.PRIMARY_DIM, 7, 7)

Conv = collections.namedtuple('Conv', 'kernel padding stride out_channels')
Maxpool = collections.namedtuple('Maxpool', 'kernel stride')

_ACTIVATIONS = {
    'relu': autodiff.relu,
}

class PathSpec(object):
    """
    Layer list of one path.

        >>> spec = default_path_spec(TABLE1)
        >>> spec.shape_trace()
        [(1, 28, 28), (16, 28, 28), (16, 28, 28), (16, 14, 14), (16, 14, 14), (8, 14, 14), (8, 7, 7)]
        >>> spec.parameter_count()
        53192
    """
    __slots__ = ('layers', 'activation')

    def __init__(self, layers, activation='relu'):
        if activation not in _ACTIVATIONS:
            raise exceptions.ConfigError('path activation: unknown %r' % (activation,))
        self.layers = tuple(layers)
        self.activation = activation

    def __eq__(self, other):
        return isinstance(other, PathSpec) and self.layers == other.layers \
                and self.activation == other.activation

    def __repr__(self):
        return '<PathSpec: %d layers>' % len(self.layers)

    def shape_trace(self, in_shape=INPUT_SHAPE):
        """Shapes (channels, height, width) before and after every layer."""
        shapes = [tuple(in_shape)]
        channels, h, w = in_shape
        for layer in self.layers:
            if isinstance(layer, Conv):
                k, pad = layer.kernel, layer.padding
                if k > h + 2 * pad or k > w + 2 * pad:
                    raise exceptions.ShapeError('conv kernel %d does not fit %dx%d' % (k, h, w))
                h = (h + 2 * pad - k) // layer.stride + 1
                w = (w + 2 * pad - k) // layer.stride + 1
                channels = layer.out_channels
            else:
                if layer.kernel > h or layer.kernel > w:
                    raise exceptions.ShapeError('pool window %d does not fit %dx%d'
                            % (layer.kernel, h, w))
                h = (h - layer.kernel) // layer.stride + 1
                w = (w - layer.kernel) // layer.stride + 1
            shapes.append((channels, h, w))
        return shapes

    def output_shape(self, in_shape=INPUT_SHAPE):
        return self.shape_trace(in_shape)[-1]

    def parameter_shapes(self, in_channels=INPUT_SHAPE[0]):
        """Yield ``(layer index, kernel shape, bias shape)`` for conv layers."""
        channels = in_channels
        for index, layer in enumerate(self.layers):
            if isinstance(layer, Conv):
                yield (index, (layer.out_channels, channels, layer.kernel, layer.kernel),
                        (layer.out_channels,))
                channels = layer.out_channels

    def parameter_count(self, in_channels=INPUT_SHAPE[0]):
        """Closed-form sum of ``k*k*c_in*c_out + c_out`` over conv layers."""
        total = 0
        channels = in_channels
        for layer in self.layers:
            if isinstance(layer, Conv):
                total += layer.kernel ** 2 * channels * layer.out_channels + layer.out_channels
                channels = layer.out_channels
        return total

    def to_list(self):
        """Plain representation used in configs and checkpoints."""
        result = []
        for layer in self.layers:
            entry = {'type': type(layer).__name__.lower()}
            entry.update(layer._asdict())
            result.append(entry)
        return result

    @classmethod
    def from_list(cls, entries, activation='relu'):
        layers = []
        for number, entry in enumerate(entries):
            entry = dict(entry)
            kind = entry.pop('type', None)
            layer_class = {'conv': Conv, 'maxpool': Maxpool}.get(kind)
            if layer_class is None:
                raise exceptions.ConfigError('layers[%d].type: unknown %r' % (number, kind))
            try:
                layers.append(layer_class(**entry))
            except TypeError as exc:
                raise exceptions.ConfigError('layers[%d]: %s' % (number, exc))
        return cls(layers, activation)

def default_path_spec(variant=TABLE2):
    """
    Return one of the shipped path layouts.

    ``'table1'`` is the six-layer path: four 9×9 convs and two 2×2 pools.
    ``'table2'`` is the seven-layer path, with one more 16→16 conv before
    the 16→8 conv, which gives 73,944 parameters per path.

        >>> default_path_spec(TABLE2).parameter_count()
        73944
    """
    conv16 = Conv(9, 4, 1, 16)
    pool = Maxpool(2, 2)
    if variant == TABLE1:
        layers = [conv16, conv16, pool, conv16, Conv(9, 4, 1, 8), pool]
    elif variant == TABLE2:
        layers = [conv16, conv16, pool, conv16, conv16, Conv(9, 4, 1, 8), pool]
    else:
        raise exceptions.ConfigError('architecture.variant: unknown %r' % (variant,))
    return PathSpec(layers)

def parameter_name(path, layer, kind):
    """
    Name of a path parameter.

        >>> parameter_name(3, 0, 'weight')
        'path3.conv0.weight'
    """
    return 'path%d.conv%d.%s' % (path, layer, kind)

def path_forward(spec, params, image, path=0):
    """
    Run path number `path` on `image` (batch, 1, 28, 28).

    :param spec: :class:`PathSpec`
    :param params: mapping of parameter names to tensors
    :returns: :class:`Tensor` (batch, 8, 7, 7) for the shipped variants
    :raises: :exc:`ShapeError` on a wrong input shape
    """
    if image.ndim != 4 or image.shape[1:] != INPUT_SHAPE:
        raise exceptions.ShapeError('path input must be (batch, %d, %d, %d), got %s'
                % (INPUT_SHAPE + (image.shape,)))
    activation = _ACTIVATIONS[spec.activation]
    x = image
    for index, layer in enumerate(spec.layers):
        if isinstance(layer, Conv):
            x = autodiff.conv2d(x, params[parameter_name(path, index, 'weight')],
                    params[parameter_name(path, index, 'bias')],
                    padding=layer.padding, stride=layer.stride)
            x = activation(x)
        else:
            x, _ = autodiff.maxpool2d(x, layer.kernel, layer.stride)
    return x

def run_paths(spec, params, image, num_paths, workers=1):
    """
    Run all paths on the same input. With `workers` > 1 the paths run on a
    thread pool; the result is always in path order.
    """
    if workers <= 1 or num_paths == 1:
        return [path_forward(spec, params, image, p) for p in range(num_paths)]

    graph = autodiff.Graph.current()

    def _job(path):
        with autodiff.scope(graph):
            return path_forward(spec, params, image, path)

    with concurrent.futures.ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_job, range(num_paths)))

def assemble_primary(paths_out):
    """
    Turn path outputs (batch, C, H, W) into one squashed primary
    :class:`CapsuleSet` (batch, P*H*W, C). Units are ordered path-major,
    then row-major over the spatial cells.
    """
    paths_out = list(paths_out)
    if not paths_out:
        raise exceptions.ShapeError('at least one path output is needed')
    shape = paths_out[0].shape
    for number, out in enumerate(paths_out):
        if out.ndim != 4 or out.shape != shape:
            raise exceptions.ShapeError('path %d output %s differs from %s'
                    % (number, out.shape, shape))
    batch, channels, h, w = shape
    units = [out.transpose(0, 2, 3, 1).reshape(batch, h * w, channels)
            for out in paths_out]
    stacked = units[0] if len(units) == 1 else autodiff.concat(units, axis=1)
    return capsules.squash(capsules.CapsuleSet(stacked, capsules.PRIMARY))

@dataclasses.dataclass(frozen=True)
class DropCircuitConfig(object):
    """DropCircuit settings. One mask per minibatch unless `granularity` is
    ``'sample'``."""
    enabled: bool = False
    drop_prob: float = 0.5
    granularity: str = 'minibatch'

    def __post_init__(self):
        self.validate()

    def validate(self):
        if not 0.0 <= self.drop_prob < 1.0:
            raise exceptions.ConfigError('drop_circuit.prob: expected a value in [0, 1), got %r'
                    % (self.drop_prob,))
        if self.granularity not in ('minibatch', 'sample'):
            raise exceptions.ConfigError('drop_circuit.granularity: unknown %r'
                    % (self.granularity,))

    @property
    def scale(self):
        """Factor applied to kept paths during training."""
        return 1.0 / (1.0 - self.drop_prob)

class PathMask(object):
    """
    Keep flags, shape (P,) for a minibatch mask or (batch, P) for per-sample
    masks. `attempts` counts the draws, rejected all-dropped ones included.
    """
    __slots__ = ('flags', 'attempts')

    def __init__(self, flags, attempts=1):
        flags = np.asarray(flags, dtype=bool)
        if not flags.any(axis=-1).all():
            raise exceptions.ContractError('a path mask must keep at least one path')
        self.flags = flags
        self.attempts = attempts

    @property
    def num_paths(self):
        return self.flags.shape[-1]

    def __repr__(self):
        return '<PathMask %s>' % ''.join('1' if f else '0' for f in self.flags.reshape(-1))

def sample_mask(num_paths, cfg, rng, batch=None):
    """
    Draw keep flags, each true with probability ``1 - cfg.drop_prob``. Masks
    that drop every path are rejected and drawn again.

    :param rng: :class:`numpy.random.Generator`, normally the ``mask`` stream
    :param batch: number of samples, needed for per-sample masks
    """
    if num_paths < 1:
        raise exceptions.ContractError('at least one path is needed, got %d' % num_paths)
    cfg.validate()
    keep_prob = 1.0 - cfg.drop_prob
    rows = 1
    if cfg.granularity == 'sample':
        if batch is None:
            raise exceptions.ContractError('per-sample masks need the batch size')
        rows = batch

    flags = np.empty((rows, num_paths), dtype=bool)
    attempts = 0
    for row in range(rows):
        while True:
            attempts += 1
            draw = rng.random(num_paths) < keep_prob
            if draw.any():
                break
        flags[row] = draw
    if cfg.granularity == 'minibatch':
        flags = flags[0]
    return PathMask(flags, attempts)

def apply_drop(paths_out, mask, training, cfg):
    """
    Zero dropped paths and scale kept ones by ``1 / (1 - drop_prob)`` while
    training; identity at evaluation or with DropCircuit disabled.
    """
    paths_out = list(paths_out)
    if not training or not cfg.enabled:
        return paths_out
    if mask.num_paths != len(paths_out):
        raise exceptions.ContractError('mask has %d flags for %d paths'
                % (mask.num_paths, len(paths_out)))
    scale = cfg.scale
    if mask.flags.ndim == 1:
        return [out * (scale if keep else 0.0) for out, keep in zip(paths_out, mask.flags)]
    result = []
    for path, out in enumerate(paths_out):
        factors = np.where(mask.flags[:, path], scale, 0.0)
        result.append(out * factors.reshape((-1,) + (1,) * (out.ndim - 1)))
    return result
