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
:mod:`pathcaps.capsules` --- capsules and routing by agreement
==============================================================

This module contains the squash nonlinearity, prediction vectors and the
iterative routing procedure that couples primary capsules to digit capsules.

Two routing modes differ only in the direction of the coupling softmax:

* :attr:`RoutingMode.FAN_OUT` -- couplings of every primary capsule sum to
  one over the digit capsules;
* :attr:`RoutingMode.FAN_IN` -- couplings into every digit capsule sum to
  one over the primary capsules.

Routing logits start at zero on every forward pass and gradients flow
through every unrolled iteration.

.. moduleauthor:: pathcaps developers
"""
import enum

import numpy as np

from . import autodiff, exceptions

__all__ = (
    'RoutingMode',
    'CapsuleSet',
    'RoutingState',
    'squash',
    'predict',
    'couplings',
    'route',
    'capsule_lengths',
)

PRIMARY = 'primary'
DIGIT = 'digit'

PRIMARY_DIM = 8
DIGIT_DIM = 16
NUM_DIGITS = 10

SQUASH_EPS = 1e-12

class RoutingMode(enum.Enum):
    """
    Softmax direction of the coupling coefficients.

        >>> RoutingMode('fan-in')
        <RoutingMode.FAN_IN: 'fan-in'>
        >>> RoutingMode.FAN_OUT.axis, RoutingMode.FAN_IN.axis
        (2, 1)
    """
    FAN_OUT = 'fan-out'
    FAN_IN = 'fan-in'

    @property
    def axis(self):
        """Axis of the (batch, primary, digit) logits normalized by softmax."""
        return 2 if self is RoutingMode.FAN_OUT else 1

def _mode(mode):
    try:
        return RoutingMode(mode)
    except ValueError:
        raise exceptions.ContractError('unknown routing mode: %r' % (mode,))

class CapsuleSet(object):
    """
    A batch of capsule vectors of shape (batch, num_capsules, capsule_dim)
    with a role tag, ``'primary'`` or ``'digit'``.
    """
    __slots__ = ('tensor', 'role')

    def __init__(self, tensor, role):
        if tensor.ndim != 3:
            raise exceptions.ShapeError('capsules must be (batch, n_caps, dim), got %s'
                    % (tensor.shape,))
        self.tensor = tensor
        self.role = role

    @property
    def shape(self):
        return self.tensor.shape

    @property
    def num_capsules(self):
        return self.tensor.shape[1]

    @property
    def dim(self):
        return self.tensor.shape[2]

    def __repr__(self):
        return '<CapsuleSet %s %s>' % (self.role, self.shape)

class RoutingState(object):
    """
    Final routing logits and couplings of one forward pass, plus a copy of
    the couplings used in every iteration (``history``).
    """
    __slots__ = ('logits', 'couplings', 'iterations', 'history')

    def __init__(self, logits, couplings, iterations, history):
        self.logits = logits
        self.couplings = couplings
        self.iterations = iterations
        self.history = history

def squash(s, eps=SQUASH_EPS):
    """
    Shrink capsule vectors along the last axis into the open unit ball:
    ``|s|^2 / (1 + |s|^2) * s / |s|`` with ``|s| = sqrt(|s|^2 + eps)``.
    Accepts a :class:`CapsuleSet` or a bare :class:`Tensor` and returns the
    same kind.

        >>> squash(autodiff.Tensor([[[3.0, 4.0]]])).data.round(6).tolist()
        [[[0.576923, 0.769231]]]
        >>> squash(autodiff.Tensor([[[0.0, 0.0]]])).data.tolist()
        [[[0.0, 0.0]]]
    """
    tensor = s.tensor if isinstance(s, CapsuleSet) else s
    sq = (tensor * tensor).sum(axis=-1, keepdims=True)
    out = tensor * (sq / (sq + 1.0) / (sq + eps).sqrt())
    if isinstance(s, CapsuleSet):
        return CapsuleSet(out, s.role)
    return out

def predict(u, weights):
    """
    Prediction vectors ``u_hat[b, i, j] = W[i, j] @ u[b, i]``.

    :param u: primary :class:`CapsuleSet` (batch, n_primary, d_in)
    :param weights: :class:`Tensor` (n_primary, n_digit, d_out, d_in), one
                    matrix per (primary unit, digit) pair
    :returns: :class:`Tensor` (batch, n_primary, n_digit, d_out)
    """
    t = u.tensor if isinstance(u, CapsuleSet) else u
    if weights.ndim != 4 or t.ndim != 3 or weights.shape[0] != t.shape[1] \
            or weights.shape[3] != t.shape[2]:
        raise exceptions.ShapeError('transform weights %s do not fit capsules %s'
                % (weights.shape, t.shape))
    return autodiff.einsum('ndij,bnj->bndi', weights, t)

def couplings(logits, mode):
    """
    Coupling coefficients from routing logits (batch, n_primary, n_digit).

        >>> c = couplings(autodiff.Tensor(np.zeros((1, 3, 10))), RoutingMode.FAN_OUT)
        >>> float(c.data[0, 0, 0])
        0.1
    """
    mode = _mode(mode)
    if logits.ndim != 3:
        raise exceptions.ShapeError('routing logits must be (batch, n_primary, n_digit), got %s'
                % (logits.shape,))
    return autodiff.softmax_axis(logits, mode.axis)

def route(u_hat, mode, iterations):
    """
    Dynamic routing by agreement over prediction vectors `u_hat`
    (batch, n_primary, n_digit, dim).

    Every iteration weights the votes by the couplings, squashes their sum
    into the digit capsules and, except after the last iteration, adds the
    dot-product agreement of each vote with its digit capsule to the logits.

    :returns: ``(digit CapsuleSet, RoutingState)``
    :raises: :exc:`ContractError` if `iterations` < 1 or `mode` is unknown
    """
    mode = _mode(mode)
    if iterations < 1:
        raise exceptions.ContractError('routing needs at least one iteration, got %d'
                % iterations)
    if u_hat.ndim != 4:
        raise exceptions.ShapeError('prediction vectors must be 4-D, got %s'
                % (u_hat.shape,))
    batch, n_primary, n_digit, _ = u_hat.shape

    logits = autodiff.Tensor(np.zeros((batch, n_primary, n_digit)))
    history = []
    for iteration in range(iterations):
        c = couplings(logits, mode)
        history.append(c.data.copy())
        v = squash(autodiff.einsum('bnd,bndk->bdk', c, u_hat))
        if iteration < iterations - 1:
            logits = logits + autodiff.einsum('bndk,bdk->bnd', u_hat, v)
    return CapsuleSet(v, DIGIT), RoutingState(logits, c, iterations, history)

def capsule_lengths(v):
    """
    Euclidean length of every capsule.

        >>> capsule_lengths(CapsuleSet(autodiff.Tensor([[[3.0, 4.0], [0.0, 0.0]]]), DIGIT)).data.tolist()
        [[5.0, 0.0]]
    """
    t = v.tensor if isinstance(v, CapsuleSet) else v
    return autodiff.norm(t, axis=-1)
