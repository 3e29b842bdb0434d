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
:mod:`pathcaps.optim` --- Adam
==============================

Adam with bias correction, updating :class:`~pathcaps.model.ModelParams`
in place.
"""
import numpy as np

from . import exceptions

__all__ = ('AdamState', 'adam_step')

class AdamState(object):
    """
    Moment buffers by parameter name, the step counter `t` and the
    hyperparameters.
    """
    __slots__ = ('lr', 'beta1', 'beta2', 'eps', 't', 'm', 'v')

    def __init__(self, lr=0.001, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = {}
        self.v = {}

    @classmethod
    def for_params(cls, params, **hyper):
        """State with zero moments shaped like `params`."""
        self = cls(**hyper)
        for name, tensor in params.items():
            self.m[name] = np.zeros_like(tensor.data)
            self.v[name] = np.zeros_like(tensor.data)
        return self

    def hyperparameters(self):
        return {'lr': self.lr, 'beta1': self.beta1, 'beta2': self.beta2,
                'eps': self.eps, 't': self.t}

def adam_step(params, grads, state):
    """
    One Adam update of every parameter in `params`.

    :param grads: gradient arrays by name, see
                  :meth:`~pathcaps.model.ModelParams.grads`
    :raises: :exc:`ContractError` if a parameter has no gradient

        >>> from pathcaps.model import ModelParams
        >>> params = ModelParams.from_arrays({'x': [0.0]})
        >>> state = AdamState.for_params(params)
        >>> adam_step(params, {'x': np.ones(1)}, state)
        >>> float(params['x'].data[0].round(6))
        -0.001
    """
    missing = [name for name in params if name not in grads or grads[name] is None]
    if missing:
        raise exceptions.ContractError('missing gradients for: %s' % ', '.join(missing))
    state.t += 1
    bc1 = 1.0 - state.beta1 ** state.t
    bc2 = 1.0 - state.beta2 ** state.t
    for name, tensor in params.items():
        g = grads[name]
        if name not in state.m:
            state.m[name] = np.zeros_like(tensor.data)
            state.v[name] = np.zeros_like(tensor.data)
        m = state.m[name]
        v = state.v[name]
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * (g * g)
        tensor.data -= state.lr * (m / bc1) / (np.sqrt(v / bc2) + state.eps)
