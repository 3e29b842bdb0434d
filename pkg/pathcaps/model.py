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
:mod:`pathcaps.model` --- PathCapsNet and the CapsNet baseline
==============================================================

This module assembles the full networks, their losses, exact parameter
counts and the digit capsule perturbation used to inspect what the
reconstruction decoder learned.

Data flow of :func:`forward`:

    .. productionlist::
        pathcaps: paths -> [DropCircuit] -> primary capsules
        capsnet: conv 9x9x256 -> primary conv 9x9 stride 2 -> primary capsules
        common: predict -> route -> lengths -> [decoder]

Parameter names, in allocation order:

   +---------------------------+------------------------------------+
   | Name                      | Shape                              |
   +===========================+====================================+
   | ``path<p>.conv<l>.weight``| (c_out, c_in, k, k)                |
   +---------------------------+------------------------------------+
   | ``path<p>.conv<l>.bias``  | (c_out,)                           |
   +---------------------------+------------------------------------+
   | ``stem.conv.*``           | baseline only                      |
   +---------------------------+------------------------------------+
   | ``primary.conv.*``        | baseline only                      |
   +---------------------------+------------------------------------+
   | ``routing.W``             | (n_primary, 10, 16, 8)             |
   +---------------------------+------------------------------------+
   | ``decoder.fc<n>.*``       | with reconstruction only           |
   +---------------------------+------------------------------------+

.. moduleauthor:: pathcaps developers
"""
import dataclasses
import logging

import numpy as np

from . import autodiff, capsules, exceptions, paths
from .autodiff import Tensor
from .capsules import RoutingMode

__all__ = (
    'NetworkSpec',
    'ModelParams',
    'ForwardOutput',
    'ParameterCount',
    'PerturbationGrid',
    'parameter_shapes',
    'init_params',
    'forward',
    'decode',
    'margin_loss',
    'reconstruction_loss',
    'count_parameters',
    'sweep_values',
    'perturb_digitcaps',
)

logger = logging.getLogger(__name__)

PATHCAPS = 'pathcaps'
CAPSNET = 'capsnet'
ARCHITECTURES = (PATHCAPS, CAPSNET)

M_PLUS = 0.9
M_MINUS = 0.1
ABSENT_WEIGHT = 0.5
RECON_SCALE = 0.0005

FAN_OUT_W_STD = 0.2

IMAGE_PIXELS = 28 * 28
DECODER_LAYERS = ((capsules.NUM_DIGITS * capsules.DIGIT_DIM, 512), (512, 1024),
        (1024, IMAGE_PIXELS))

# CapsNet baseline
STEM_CHANNELS = 256
BASELINE_KERNEL = 9
BASELINE_CAPSULE_TYPES = 32
BASELINE_GRID = 6

@dataclasses.dataclass(frozen=True)
class NetworkSpec(object):
    """
    Declarative description of a network. `layers` overrides the path
    layout given by `variant` with a custom :class:`~pathcaps.paths.PathSpec`.
    """
    architecture: str = PATHCAPS
    num_paths: int = 5
    variant: str = paths.TABLE2
    routing: RoutingMode = RoutingMode.FAN_IN
    iterations: int = 3
    drop: paths.DropCircuitConfig = dataclasses.field(
            default_factory=paths.DropCircuitConfig)
    reconstruction: bool = False
    seed: int = 0
    layers: paths.PathSpec = None

    def __post_init__(self):
        try:
            object.__setattr__(self, 'routing', RoutingMode(self.routing))
        except ValueError:
            raise exceptions.ConfigError('routing.mode: unknown %r' % (self.routing,))
        self.validate()

    def validate(self):
        if self.architecture not in ARCHITECTURES:
            raise exceptions.ConfigError('architecture.kind: unknown %r' % (self.architecture,))
        if int(self.num_paths) != self.num_paths or self.num_paths < 1:
            raise exceptions.ConfigError('architecture.paths: expected an integer >= 1, got %r'
                    % (self.num_paths,))
        if int(self.iterations) != self.iterations or self.iterations < 1:
            raise exceptions.ConfigError('routing.iterations: expected an integer >= 1, got %r'
                    % (self.iterations,))
        if int(self.seed) != self.seed or self.seed < 0:
            raise exceptions.ConfigError('training.seed: expected an unsigned integer, got %r'
                    % (self.seed,))
        if self.layers is None and self.variant not in paths.VARIANTS:
            raise exceptions.ConfigError('architecture.variant: unknown %r' % (self.variant,))
        self.drop.validate()
        if self.architecture == PATHCAPS:
            shape = self.path_spec.output_shape()
            if shape[0] != capsules.PRIMARY_DIM:
                raise exceptions.ConfigError('architecture.layers: paths must end with %d channels, got %s'
                        % (capsules.PRIMARY_DIM, shape))

    @property
    def path_spec(self):
        if self.layers is not None:
            return self.layers
        return paths.default_path_spec(self.variant)

    @property
    def num_primary(self):
        """Number of 8-D routing units feeding the digit capsules."""
        if self.architecture == CAPSNET:
            return BASELINE_CAPSULE_TYPES * BASELINE_GRID ** 2
        _, h, w = self.path_spec.output_shape()
        return self.num_paths * h * w

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)

    def to_dict(self):
        """Plain, JSON-ready representation."""
        result = {
            'architecture': self.architecture,
            'num_paths': self.num_paths,
            'variant': self.variant,
            'routing': self.routing.value,
            'iterations': self.iterations,
            'drop': dataclasses.asdict(self.drop),
            'reconstruction': self.reconstruction,
            'seed': self.seed,
        }
        if self.layers is not None:
            result['layers'] = self.layers.to_list()
        return result

    @classmethod
    def from_dict(cls, data):
        data = dict(data)
        try:
            drop = paths.DropCircuitConfig(**data.pop('drop', {}))
            layers = data.pop('layers', None)
            if layers is not None:
                layers = paths.PathSpec.from_list(layers)
            return cls(drop=drop, layers=layers, **data)
        except TypeError as exc:
            raise exceptions.ConfigError('network spec: %s' % exc)

class ModelParams(dict):
    """
    Named parameter tensors, in allocation order. This class is derived from
    :class:`dict`.
    """

    def size(self):
        """Number of scalars allocated."""
        return sum(t.size for t in self.values())

    def zero_grad(self):
        for tensor in self.values():
            tensor.grad = None

    def grads(self):
        """
        Gradient arrays by name.

        :raises: :exc:`ContractError` if a parameter has no gradient
        """
        missing = [name for name, t in self.items() if t.grad is None]
        if missing:
            raise exceptions.ContractError('missing gradients for: %s' % ', '.join(missing))
        return dict((name, t.grad) for name, t in self.items())

    def arrays(self):
        return dict((name, t.data) for name, t in self.items())

    @classmethod
    def from_arrays(cls, arrays):
        self = cls()
        for name, data in arrays.items():
            self[name] = Tensor(np.array(data, dtype=np.float64), requires_grad=True, name=name)
        return self

    def has_decoder(self):
        return all('decoder.fc%d.%s' % (n, kind) in self
                for n in range(1, len(DECODER_LAYERS) + 1) for kind in ('weight', 'bias'))

class ForwardOutput(object):
    """Result of :func:`forward`."""
    __slots__ = ('digit_caps', 'lengths', 'routing_state', 'reconstruction', 'mask')

    def __init__(self, digit_caps, lengths, routing_state, reconstruction=None, mask=None):
        self.digit_caps = digit_caps
        self.lengths = lengths
        self.routing_state = routing_state
        self.reconstruction = reconstruction
        self.mask = mask

def parameter_shapes(spec):
    """List of ``(name, shape)`` for every parameter of `spec`."""
    shapes = []
    if spec.architecture == CAPSNET:
        k = BASELINE_KERNEL
        shapes += [
            ('stem.conv.weight', (STEM_CHANNELS, 1, k, k)),
            ('stem.conv.bias', (STEM_CHANNELS,)),
            ('primary.conv.weight', (STEM_CHANNELS, STEM_CHANNELS, k, k)),
            ('primary.conv.bias', (STEM_CHANNELS,)),
        ]
    else:
        layout = list(spec.path_spec.parameter_shapes())
        for path in range(spec.num_paths):
            for index, weight, bias in layout:
                shapes.append((paths.parameter_name(path, index, 'weight'), weight))
                shapes.append((paths.parameter_name(path, index, 'bias'), bias))
    shapes.append(('routing.W', (spec.num_primary, capsules.NUM_DIGITS,
            capsules.DIGIT_DIM, capsules.PRIMARY_DIM)))
    if spec.reconstruction:
        for number, (n_in, n_out) in enumerate(DECODER_LAYERS, 1):
            shapes.append(('decoder.fc%d.weight' % number, (n_out, n_in)))
            shapes.append(('decoder.fc%d.bias' % number, (n_out,)))
    return shapes

def init_params(spec, rng):
    """
    Allocate and initialize parameters in :func:`parameter_shapes` order.

    ``routing.W`` is drawn from N(0, 1) under fan-in routing and from
    N(0, 0.2^2) under fan-out routing. Other weights are uniform within
    ``±1/sqrt(fan_in)``; biases are zero.
    """
    params = ModelParams()
    for name, shape in parameter_shapes(spec):
        if name == 'routing.W':
            std = 1.0 if spec.routing is RoutingMode.FAN_IN else FAN_OUT_W_STD
            data = rng.standard_normal(shape) * std
        elif name.endswith('.bias'):
            data = np.zeros(shape)
        else:
            bound = 1.0 / np.sqrt(np.prod(shape[1:]))
            data = rng.uniform(-bound, bound, size=shape)
        params[name] = Tensor(data, requires_grad=True, name=name)
    logger.debug('initialized %d tensors, %d scalars', len(params), params.size())
    return params

def _baseline_primary(params, images):
    batch = images.shape[0]
    x = autodiff.relu(autodiff.conv2d(images, params['stem.conv.weight'],
            params['stem.conv.bias']))
    x = autodiff.conv2d(x, params['primary.conv.weight'], params['primary.conv.bias'],
            stride=2)
    grid, dim = BASELINE_GRID, capsules.PRIMARY_DIM
    x = x.reshape(batch, BASELINE_CAPSULE_TYPES, dim, grid, grid) \
            .transpose(0, 1, 3, 4, 2) \
            .reshape(batch, BASELINE_CAPSULE_TYPES * grid * grid, dim)
    return capsules.squash(capsules.CapsuleSet(x, capsules.PRIMARY))

def _one_hot(labels, batch):
    labels = np.asarray(labels, dtype=np.int64).reshape(-1)
    if labels.shape != (batch,):
        raise exceptions.ShapeError('expected %d labels, got %d' % (batch, labels.size))
    if labels.size and (labels.min() < 0 or labels.max() >= capsules.NUM_DIGITS):
        raise exceptions.ContractError('labels must be within 0..%d' % (capsules.NUM_DIGITS - 1))
    return np.eye(capsules.NUM_DIGITS)[labels]

def decode(params, flat):
    """Reconstruction decoder: 160 -> 512 -> 1024 -> 784, sigmoid output."""
    if not params.has_decoder():
        raise exceptions.ContractError('model has no reconstruction decoder')
    x = flat
    last = len(DECODER_LAYERS)
    for number in range(1, last + 1):
        x = autodiff.dense(x, params['decoder.fc%d.weight' % number],
                params['decoder.fc%d.bias' % number])
        x = autodiff.sigmoid(x) if number == last else autodiff.relu(x)
    return x

def forward(spec, params, images, training=False, rng=None, labels=None, mask=None,
        workers=1):
    """
    Run the network on `images` (batch, 1, 28, 28).

    :param training: enables DropCircuit and label-selected reconstruction
    :param rng: mask stream, needed while training with DropCircuit unless
                `mask` is given
    :param labels: true labels, needed while training with reconstruction
    :param mask: a fixed :class:`~pathcaps.paths.PathMask`
    :param workers: threads used to run the paths
    :returns: :class:`ForwardOutput`
    """
    if not isinstance(images, Tensor):
        images = Tensor(images)
    batch = images.shape[0]

    if spec.architecture == CAPSNET:
        primary = _baseline_primary(params, images)
    else:
        outs = paths.run_paths(spec.path_spec, params, images, spec.num_paths, workers)
        if training and spec.drop.enabled:
            if mask is None:
                if rng is None:
                    raise exceptions.ContractError('DropCircuit needs a random stream')
                mask = paths.sample_mask(spec.num_paths, spec.drop, rng, batch=batch)
            outs = paths.apply_drop(outs, mask, training, spec.drop)
        primary = paths.assemble_primary(outs)

    u_hat = capsules.predict(primary, params['routing.W'])
    digit, state = capsules.route(u_hat, spec.routing, spec.iterations)
    lengths = capsules.capsule_lengths(digit)

    recon = None
    if spec.reconstruction:
        if training:
            if labels is None:
                raise exceptions.ContractError('training with reconstruction needs labels')
            selected = np.asarray(labels)
        else:
            selected = lengths.data.argmax(axis=1)
        keep = _one_hot(selected, batch)[:, :, None]
        masked = digit.tensor * keep
        recon = decode(params, masked.reshape(batch, capsules.NUM_DIGITS * capsules.DIGIT_DIM))
    return ForwardOutput(digit, lengths, state, recon, mask)

def margin_loss(lengths, labels):
    """
    Batch mean of the per-class hinge-squared loss on capsule lengths.

        >>> float(margin_loss(Tensor(np.full((1, 10), 0.5)), [3]).data.round(12))
        0.88
    """
    batch = lengths.shape[0]
    target = _one_hot(labels, batch)
    present = autodiff.relu(M_PLUS - lengths) ** 2
    absent = autodiff.relu(lengths - M_MINUS) ** 2
    total = (present * target + absent * (ABSENT_WEIGHT * (1.0 - target))).sum()
    return total * (1.0 / batch)

def reconstruction_loss(recon, images):
    """
    Batch mean of the summed squared pixel error, scaled by 0.0005.

        >>> float(reconstruction_loss(Tensor(np.full((1, 784), 0.6)), np.full((1, 784), 0.5)).data.round(12))
        0.00392
    """
    batch = recon.shape[0]
    target = images.data if isinstance(images, Tensor) else np.asarray(images, dtype=np.float64)
    diff = recon - target.reshape(batch, IMAGE_PIXELS)
    return (diff * diff).sum() * (RECON_SCALE / batch)

class ParameterCount(object):
    """Exact parameter count, split into named components."""
    __slots__ = ('components', 'note')

    def __init__(self, components, note=None):
        self.components = components
        self.note = note

    @property
    def total(self):
        return sum(count for _, count in self.components)

    def __int__(self):
        return self.total

    def __repr__(self):
        return '<ParameterCount: %d>' % self.total

def _conv_count(k, c_in, c_out):
    return k * k * c_in * c_out + c_out

def count_parameters(spec):
    """
    Closed-form parameter count of `spec`.

        >>> count_parameters(NetworkSpec(architecture=CAPSNET)).total
        6804224
        >>> count_parameters(NetworkSpec(num_paths=5)).total
        683320
    """
    routing = spec.num_primary * capsules.NUM_DIGITS * capsules.DIGIT_DIM * capsules.PRIMARY_DIM
    note = None
    if spec.architecture == CAPSNET:
        components = [
            ('conv stem', _conv_count(BASELINE_KERNEL, 1, STEM_CHANNELS)),
            ('primary conv', _conv_count(BASELINE_KERNEL, STEM_CHANNELS, STEM_CHANNELS)),
            ('routing weights', routing),
        ]
    else:
        components = [
            ('paths', spec.num_paths * spec.path_spec.parameter_count()),
            ('routing weights', routing),
        ]
        if spec.layers is None and spec.variant == paths.TABLE1:
            note = ('the table1 path layout gives 53,192 parameters per path, not '
                    'the 73,944 of table2')
    if spec.reconstruction:
        components.append(('decoder', sum(n_in * n_out + n_out
                for n_in, n_out in DECODER_LAYERS)))
    return ParameterCount(components, note)

class PerturbationGrid(object):
    """
    Reconstructions with one digit capsule coordinate swept over `values`.
    `images` has shape (len(dims), len(values), 28, 28).
    """
    __slots__ = ('input', 'reconstruction', 'images', 'dims', 'values', 'digit')

    def __init__(self, input, reconstruction, images, dims, values, digit):
        self.input = input
        self.reconstruction = reconstruction
        self.images = images
        self.dims = dims
        self.values = values
        self.digit = digit

def sweep_values(lo, hi, step):
    """
    Values from `lo` to `hi` inclusive, `step` apart.

        >>> len(sweep_values(-0.25, 0.25, 0.05))
        11
        >>> sweep_values(0.3, 0.3, 0.05).tolist()
        [0.3]
    """
    if hi < lo:
        raise exceptions.ContractError('sweep end %g below start %g' % (hi, lo))
    if hi == lo:
        return np.array([lo], dtype=np.float64)
    if step <= 0:
        raise exceptions.ContractError('sweep step must be positive, got %g' % step)
    count = int(np.floor((hi - lo) / step + 1e-9)) + 1
    return lo + step * np.arange(count)

def _decode_capsule(params, caps, digit):
    masked = np.zeros_like(caps)
    masked[digit] = caps[digit]
    flat = Tensor(masked.reshape(1, -1))
    return decode(params, flat).data.reshape(28, 28)

def perturb_digitcaps(spec, params, image, digit=None, dims=(0, 1, 2), lo=-0.25, hi=0.25,
        step=0.05):
    """
    Sweep coordinates `dims` of digit capsule `digit` (the longest capsule
    by default) over ``sweep_values(lo, hi, step)`` and decode each variant.

    :raises: :exc:`ContractError` if the model has no decoder or `digit` /
             `dims` are out of range
    """
    if not spec.reconstruction or not params.has_decoder():
        raise exceptions.ContractError('perturbation needs a model with a reconstruction decoder')
    dims = list(dims)
    for d in dims:
        if not 0 <= d < capsules.DIGIT_DIM:
            raise exceptions.ContractError('capsule dimension %d out of range 0..%d'
                    % (d, capsules.DIGIT_DIM - 1))
    values = sweep_values(lo, hi, step)
    pixels = np.asarray(image.data if isinstance(image, Tensor) else image,
            dtype=np.float64).reshape(1, 1, 28, 28)

    with autodiff.no_graph():
        out = forward(spec, params, Tensor(pixels), training=False)
        if digit is None:
            digit = int(out.lengths.data[0].argmax())
        if not 0 <= digit < capsules.NUM_DIGITS:
            raise exceptions.ContractError('digit %d out of range' % digit)
        caps = out.digit_caps.tensor.data[0].copy()
        base = _decode_capsule(params, caps, digit)
        grid = np.empty((len(dims), len(values), 28, 28))
        for row, d in enumerate(dims):
            for col, value in enumerate(values):
                tweaked = caps.copy()
                tweaked[digit, d] = value
                grid[row, col] = _decode_capsule(params, tweaked, digit)
    logger.debug('perturbed digit %d over dims %s, %d values', digit, dims, len(values))
    return PerturbationGrid(pixels[0, 0], base, grid, dims, values, digit)
