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
:mod:`pathcaps.gradcheck` --- whole-model gradient checks
=========================================================

Central-difference checks of every parameter tensor of a small two-path
network trained on one sample, with reconstruction and a fixed DropCircuit
mask switched on, so the check runs through maxpool, the path masks,
routing and the decoder.
"""
import logging

import numpy as np

from . import autodiff, capsules, model, paths, streams

__all__ = ('TINY_PATH', 'GradcheckReport', 'gradcheck_spec', 'check_model_gradients')

logger = logging.getLogger(__name__)

THRESHOLD = 1e-4

TINY_PATH = paths.PathSpec([
    paths.Conv(3, 1, 1, 4),
    paths.Maxpool(2, 2),
    paths.Conv(3, 1, 1, capsules.PRIMARY_DIM),
    paths.Maxpool(2, 2),
])

# keeps path 0 (scaled) and drops path 1
FIXED_MASK = (True, False)

class GradcheckReport(object):
    """Worst relative error per parameter tensor."""
    __slots__ = ('routing', 'iterations', 'errors', 'threshold')

    def __init__(self, routing, iterations, errors, threshold=THRESHOLD):
        self.routing = routing
        self.iterations = iterations
        self.errors = errors
        self.threshold = threshold

    @property
    def max_error(self):
        return max(self.errors.values()) if self.errors else 0.0

    @property
    def passed(self):
        return self.max_error < self.threshold

    def lines(self):
        yield '%s routing, %d iterations' % (self.routing.value, self.iterations)
        for name, error in self.errors.items():
            yield '  %-24s %.3e' % (name, error)
        yield '%s: max relative error %.3e (threshold %.0e)' % (
                'PASS' if self.passed else 'FAIL', self.max_error, self.threshold)

def gradcheck_spec(routing, iterations=3, seed=0):
    """The two-path network checked by :func:`check_model_gradients`."""
    return model.NetworkSpec(num_paths=2, routing=routing, iterations=iterations,
            drop=paths.DropCircuitConfig(enabled=True),
            reconstruction=True, seed=seed, layers=TINY_PATH)

def check_model_gradients(routing, iterations=3, seed=0, samples=4, eps=1e-5):
    """
    Check `samples` random coordinates of every parameter tensor.

    Biases get small random values so no unit starts at a ReLU kink.

    :returns: :class:`GradcheckReport`
    """
    spec = gradcheck_spec(routing, iterations, seed)
    rng = streams.stream(seed, 'gradcheck')
    params = model.init_params(spec, rng)
    for name, tensor in params.items():
        if name.endswith('.bias'):
            tensor.data[...] = rng.uniform(-0.1, 0.1, size=tensor.shape)
    image = autodiff.Tensor(rng.uniform(0.0, 1.0, size=(1, 1, 28, 28)))
    label = np.array([int(rng.integers(capsules.NUM_DIGITS))])
    mask = paths.PathMask(FIXED_MASK)

    def loss(_):
        out = model.forward(spec, params, image, training=True, labels=label, mask=mask)
        return model.margin_loss(out.lengths, label) + \
                model.reconstruction_loss(out.reconstruction, image)

    errors = {}
    for name, tensor in params.items():
        params.zero_grad()
        coords = rng.choice(tensor.size, size=min(samples, tensor.size), replace=False)
        errors[name] = autodiff.finite_diff_check(loss, tensor, eps, sorted(coords.tolist()))
        logger.debug('%s: %.3e', name, errors[name])
    params.zero_grad()
    report = GradcheckReport(spec.routing, iterations, errors)
    logger.info('gradcheck %s: max relative error %.3e', spec.routing.value, report.max_error)
    return report
