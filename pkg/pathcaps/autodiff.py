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
:mod:`pathcaps.autodiff` --- dense tensors with reverse-mode differentiation
============================================================================

This module contains a small tensor engine built on :mod:`numpy`. Every
:class:`Tensor` holds a 64-bit float array. Operations applied while a
:class:`Graph` is active are recorded on that graph, and
:meth:`Graph.backward` walks the records in reverse construction order.
Outside of a graph the same operations just compute values, which is how
evaluation and finite differences run.

Example::

    >>> x = Tensor([1.0, 2.0], requires_grad=True)
    >>> with Graph() as graph:
    ...     loss = (x * x).sum()
    ...     graph.backward(loss)
    >>> x.grad.tolist()
    [2.0, 4.0]

.. moduleauthor:: pathcaps developers
"""
import contextlib
import logging
import threading

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from . import exceptions

__all__ = (
    'Tensor',
    'Graph',
    'scope',
    'no_graph',
    'backward',
    'conv2d',
    'maxpool2d',
    'dense',
    'softmax_axis',
    'einsum',
    'concat',
    'norm',
    'relu',
    'sigmoid',
    'finite_diff_check',
    'corrupt_backward',
)

logger = logging.getLogger(__name__)

_local = threading.local()

# op name -> factor applied to the gradients it sends to its parents
_CORRUPTED = {}

def _graph_stack():
    stack = getattr(_local, 'stack', None)
    if stack is None:
        stack = _local.stack = []
    return stack

class _Node(object):
    """One recorded operation."""
    __slots__ = ('op', 'output', 'parents', 'backward')

    def __init__(self, op, output, parents, backward):
        self.op = op
        self.output = output
        self.parents = parents
        self.backward = backward

class Graph(object):
    """
    Append-only record of operations. Use as a context manager to make it
    the active graph of the calling thread::

        with Graph() as graph:
            loss = model_loss(...)
            graph.backward(loss)

    A graph can be differentiated once; its records are dropped afterwards.
    """

    def __init__(self):
        self.nodes = []
        self.consumed = False
        self._lock = threading.Lock()

    @staticmethod
    def current():
        """Return the graph active in the calling thread or ``None``."""
        stack = _graph_stack()
        return stack[-1] if stack else None

    def __enter__(self):
        _graph_stack().append(self)
        return self

    def __exit__(self, *exc_info):
        _graph_stack().pop()

    def __len__(self):
        return len(self.nodes)

    def record(self, op, output, parents, backward_fn):
        """Append an operation producing `output` from `parents`."""
        if self.consumed:
            raise exceptions.ContractError('graph was already differentiated')
        with self._lock:
            output.graph = self
            output.node_id = len(self.nodes)
            self.nodes.append(_Node(op, output, parents, backward_fn))

    def backward(self, loss):
        """
        Populate ``grad`` of every tensor reachable from `loss`.

        :param loss: scalar :class:`Tensor` recorded on this graph
        :raises: :exc:`ContractError` if `loss` is not a scalar, was not
                 recorded here, or the graph was already differentiated
        """
        if self.consumed:
            raise exceptions.ContractError('graph was already differentiated')
        if loss.data.shape != ():
            raise exceptions.ContractError('loss must be a scalar, got shape %s'
                    % (loss.data.shape,))
        if loss.graph is not self:
            raise exceptions.ContractError('loss was not recorded on this graph')

        loss.grad = np.ones_like(loss.data)
        for node in reversed(self.nodes):
            grad = node.output.grad
            if grad is None:
                continue
            factor = _CORRUPTED.get(node.op)
            for parent, parent_grad in zip(node.parents, node.backward(grad)):
                if parent_grad is None or not parent.requires_grad:
                    continue
                if factor is not None:
                    parent_grad = parent_grad * factor
                if parent.grad is None:
                    parent.grad = np.array(parent_grad, dtype=np.float64)
                else:
                    parent.grad = parent.grad + parent_grad
        logger.debug('backward over %d nodes', len(self.nodes))
        self.consumed = True
        self.nodes = []

@contextlib.contextmanager
def scope(graph):
    """
    Make `graph` (possibly ``None``) the active graph of the calling thread.
    Used to hand a graph over to worker threads.
    """
    stack = _graph_stack()
    stack.append(graph)
    try:
        yield graph
    finally:
        stack.pop()

def no_graph():
    """Suspend recording in the calling thread."""
    return scope(None)

@contextlib.contextmanager
def corrupt_backward(op, factor):
    """
    Scale every gradient the backward rule of `op` produces by `factor`.
    Negative control for gradient checks.
    """
    _CORRUPTED[op] = factor
    try:
        yield
    finally:
        del _CORRUPTED[op]

def _unbroadcast(grad, shape):
    """
    Sum `grad` down to `shape`, undoing numpy broadcasting.

        >>> _unbroadcast(np.ones((2, 3)), (3,)).tolist()
        [2.0, 2.0, 2.0]
        >>> _unbroadcast(np.ones((2, 3)), (2, 1)).tolist()
        [[3.0], [3.0]]
    """
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, extent in enumerate(shape):
        if extent == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad

def _as_tensor(value):
    if isinstance(value, Tensor):
        return value
    return Tensor(value)

def _make(op, data, parents, backward_fn):
    """Wrap `data` in a tensor and record it when a graph is active."""
    out = Tensor(data)
    if any(parent.requires_grad for parent in parents):
        graph = Graph.current()
        if graph is not None:
            for parent in parents:
                if parent.graph is not None and parent.graph is not graph:
                    raise exceptions.ContractError(
                            'tensor belongs to another differentiation graph')
            out.requires_grad = True
            graph.record(op, out, parents, backward_fn)
    return out

class Tensor(object):
    """
    Dense 64-bit float array taking part in reverse-mode differentiation.

        >>> t = Tensor([[1, 2], [3, 4]])
        >>> t.shape
        (2, 2)
        >>> t.data.dtype
        dtype('float64')
    """
    __slots__ = ('data', 'grad', 'requires_grad', 'graph', 'node_id', 'name')
    # numpy operands defer to the reflected Tensor operators
    __array_ufunc__ = None

    def __init__(self, data, requires_grad=False, name=None):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad = None
        self.requires_grad = requires_grad
        self.graph = None
        self.node_id = None
        self.name = name

    @property
    def shape(self):
        return self.data.shape

    @property
    def size(self):
        return self.data.size

    @property
    def ndim(self):
        return self.data.ndim

    def item(self):
        return float(self.data)

    def numpy(self):
        return self.data

    def __repr__(self):
        if self.name:
            return '<Tensor %s %s>' % (self.name, self.shape)
        return '<Tensor %s>' % (self.shape,)

    # elementwise arithmetic, with numpy broadcasting

    def __add__(self, other):
        other = _as_tensor(other)
        a, b = self.data, other.data
        return _make('add', a + b, (self, other), lambda g: (
                _unbroadcast(g, a.shape), _unbroadcast(g, b.shape)))

    __radd__ = __add__

    def __sub__(self, other):
        other = _as_tensor(other)
        a, b = self.data, other.data
        return _make('sub', a - b, (self, other), lambda g: (
                _unbroadcast(g, a.shape), _unbroadcast(-g, b.shape)))

    def __rsub__(self, other):
        return _as_tensor(other) - self

    def __mul__(self, other):
        other = _as_tensor(other)
        a, b = self.data, other.data
        return _make('mul', a * b, (self, other), lambda g: (
                _unbroadcast(g * b, a.shape), _unbroadcast(g * a, b.shape)))

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = _as_tensor(other)
        a, b = self.data, other.data
        return _make('div', a / b, (self, other), lambda g: (
                _unbroadcast(g / b, a.shape),
                _unbroadcast(-g * a / (b * b), b.shape)))

    def __rtruediv__(self, other):
        return _as_tensor(other) / self

    def __neg__(self):
        return _make('neg', -self.data, (self,), lambda g: (-g,))

    def __pow__(self, exponent):
        a = self.data
        return _make('pow', a ** exponent, (self,), lambda g: (
                g * exponent * a ** (exponent - 1),))

    def sqrt(self):
        out = np.sqrt(self.data)
        return _make('sqrt', out, (self,), lambda g: (g * 0.5 / out,))

    def exp(self):
        out = np.exp(self.data)
        return _make('exp', out, (self,), lambda g: (g * out,))

    # reductions and shape changes

    def sum(self, axis=None, keepdims=False):
        shape = self.data.shape
        out = self.data.sum(axis=axis, keepdims=keepdims)

        def _backward(g):
            if axis is not None and not keepdims:
                g = np.expand_dims(g, axis)
            return (np.broadcast_to(g, shape),)
        return _make('sum', out, (self,), _backward)

    def mean(self, axis=None, keepdims=False):
        count = self.data.size if axis is None else np.prod(
                [self.data.shape[a] for a in np.atleast_1d(axis)])
        return self.sum(axis=axis, keepdims=keepdims) * (1.0 / count)

    def reshape(self, *shape):
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        old = self.data.shape
        return _make('reshape', self.data.reshape(shape), (self,),
                lambda g: (g.reshape(old),))

    def transpose(self, *axes):
        if len(axes) == 1 and isinstance(axes[0], (tuple, list)):
            axes = tuple(axes[0])
        inverse = tuple(np.argsort(axes))
        return _make('transpose', self.data.transpose(axes), (self,),
                lambda g: (g.transpose(inverse),))

def backward(loss):
    """
    Differentiate scalar `loss` on the graph it was recorded on.

    :raises: :exc:`ContractError` if `loss` is not part of a graph, is not a
             scalar, or its graph was already differentiated
    """
    if loss.graph is None:
        raise exceptions.ContractError('loss is not part of a differentiation graph')
    loss.graph.backward(loss)

def relu(x):
    mask = x.data > 0
    return _make('relu', np.where(mask, x.data, 0.0), (x,), lambda g: (g * mask,))

def sigmoid(x):
    out = 0.5 * (1.0 + np.tanh(0.5 * x.data))
    return _make('sigmoid', out, (x,), lambda g: (g * out * (1.0 - out),))

def norm(x, axis=-1):
    """
    Euclidean norm along `axis`. The gradient at a zero vector is zero.

        >>> norm(Tensor([[3.0, 4.0], [0.0, 0.0]])).data.tolist()
        [5.0, 0.0]
    """
    out = np.sqrt((x.data * x.data).sum(axis=axis))

    def _backward(g):
        n = np.expand_dims(out, axis)
        safe = np.where(n > 0, n, 1.0)
        return (np.where(n > 0, x.data / safe, 0.0) * np.expand_dims(g, axis),)
    return _make('norm', out, (x,), _backward)

def concat(tensors, axis=0):
    """Concatenate tensors along `axis`."""
    tensors = tuple(tensors)
    bounds = np.cumsum([t.data.shape[axis] for t in tensors])[:-1]
    out = np.concatenate([t.data for t in tensors], axis=axis)
    return _make('concat', out, tensors,
            lambda g: tuple(np.split(g, bounds, axis=axis)))

def softmax_axis(x, axis):
    """
    Softmax along `axis`, computed on max-shifted logits.

        >>> softmax_axis(Tensor([0.0, np.log(3.0)]), 0).data.round(12).tolist()
        [0.25, 0.75]
    """
    if not -x.ndim <= axis < x.ndim:
        raise exceptions.ShapeError('axis %d out of range for shape %s'
                % (axis, x.shape))
    shifted = x.data - x.data.max(axis=axis, keepdims=True)
    e = np.exp(shifted)
    out = e / e.sum(axis=axis, keepdims=True)

    def _backward(g):
        gy = g * out
        return (gy - out * gy.sum(axis=axis, keepdims=True),)
    return _make('softmax', out, (x,), _backward)

def dense(x, weight, bias):
    """
    Affine map ``x @ weight.T + bias`` for `x` of shape (b, n), `weight`
    of shape (m, n) and `bias` of shape (m,).

        >>> dense(Tensor([[1, 2]]), Tensor([[1, 1], [1, -1]]), Tensor([0, 0])).data.tolist()
        [[3.0, -1.0]]
    """
    if x.ndim != 2 or weight.ndim != 2 or weight.shape[1] != x.shape[1]:
        raise exceptions.ShapeError('dense: input %s does not fit weight %s'
                % (x.shape, weight.shape))
    if bias.shape != (weight.shape[0],):
        raise exceptions.ShapeError('dense: bias %s does not fit weight %s'
                % (bias.shape, weight.shape))
    a, w = x.data, weight.data
    out = a @ w.T + bias.data
    return _make('dense', out, (x, weight, bias), lambda g: (
            g @ w, g.T @ a, g.sum(axis=0)))

def einsum(subscripts, a, b):
    """
    Two-operand :func:`numpy.einsum` with an explicit output. Each operand
    index must also appear in the other operand or in the output.

        >>> einsum('ij,j->i', Tensor([[1, 2], [3, 4]]), Tensor([1, 1])).data.tolist()
        [3.0, 7.0]
    """
    if '->' not in subscripts:
        raise exceptions.ContractError('einsum needs an explicit output')
    inputs, _, output = subscripts.replace(' ', '').partition('->')
    sub_a, sub_b = inputs.split(',')
    for sub, other in ((sub_a, sub_b + output), (sub_b, sub_a + output)):
        if len(set(sub)) != len(sub) or not set(sub) <= set(other):
            raise exceptions.ContractError('unsupported einsum subscripts %r'
                    % subscripts)
    try:
        out = np.einsum(subscripts, a.data, b.data)
    except ValueError as exc:
        raise exceptions.ShapeError('einsum %r: %s' % (subscripts, exc))
    da, db = a.data, b.data
    return _make('einsum', out, (a, b), lambda g: (
            np.einsum('%s,%s->%s' % (output, sub_b, sub_a), g, db),
            np.einsum('%s,%s->%s' % (output, sub_a, sub_b), g, da)))

def conv2d(x, kernel, bias, padding=0, stride=1):
    """
    2-D cross-correlation of `x` (b, c_in, h, w) with `kernel`
    (c_out, c_in, k, k) plus a per-channel `bias`.

        >>> conv2d(Tensor([[[[1, 2], [3, 4]]]]), Tensor([[[[1, 0], [0, 1]]]]), Tensor([0])).data.tolist()
        [[[[5.0]]]]
    """
    if x.ndim != 4 or kernel.ndim != 4:
        raise exceptions.ShapeError('conv2d expects 4-D input and kernel, got %s and %s'
                % (x.shape, kernel.shape))
    batch, c_in, h, w = x.shape
    c_out, k_in, k, k2 = kernel.shape
    if k_in != c_in:
        raise exceptions.ShapeError('kernel expects %d input channels, input has %d'
                % (k_in, c_in))
    if k != k2:
        raise exceptions.ShapeError('kernel must be square, got %dx%d' % (k, k2))
    if bias.shape != (c_out,):
        raise exceptions.ShapeError('bias %s does not fit %d output channels'
                % (bias.shape, c_out))
    if stride < 1:
        raise exceptions.ShapeError('stride must be >= 1, got %d' % stride)
    if k > h + 2 * padding or k > w + 2 * padding:
        raise exceptions.ShapeError('kernel %d larger than padded input %dx%d'
                % (k, h + 2 * padding, w + 2 * padding))

    out_h = (h + 2 * padding - k) // stride + 1
    out_w = (w + 2 * padding - k) // stride + 1
    span_h = stride * (out_h - 1) + 1
    span_w = stride * (out_w - 1) + 1
    pad = ((0, 0), (0, 0), (padding, padding), (padding, padding))
    # channels-last so every kernel tap is one matmul
    xp = np.ascontiguousarray(np.pad(x.data, pad).transpose(0, 2, 3, 1))
    kd = kernel.data

    out = np.zeros((batch, out_h, out_w, c_out))
    for i in range(k):
        for j in range(k):
            out += xp[:, i:i + span_h:stride, j:j + span_w:stride, :] @ kd[:, :, i, j].T
    out = out.transpose(0, 3, 1, 2) + bias.data[None, :, None, None]

    def _backward(g):
        gl = np.ascontiguousarray(g.transpose(0, 2, 3, 1))
        grad_k = np.empty_like(kd)
        grad_xp = np.zeros_like(xp) if x.requires_grad else None
        for i in range(k):
            for j in range(k):
                patch = xp[:, i:i + span_h:stride, j:j + span_w:stride, :]
                grad_k[:, :, i, j] = np.tensordot(gl, patch, axes=([0, 1, 2], [0, 1, 2]))
                if grad_xp is not None:
                    grad_xp[:, i:i + span_h:stride, j:j + span_w:stride, :] += gl @ kd[:, :, i, j]
        grad_x = None
        if grad_xp is not None:
            grad_x = grad_xp[:, padding:padding + h, padding:padding + w, :].transpose(0, 3, 1, 2)
        return grad_x, grad_k, g.sum(axis=(0, 2, 3))
    return _make('conv2d', out, (x, kernel, bias), _backward)

def maxpool2d(x, k, stride):
    """
    Max pooling over k×k windows of `x` (b, c, h, w). Returns the pooled
    tensor and the flat row-major argmax of every window; ties go to the
    first element of the window.

        >>> out, idx = maxpool2d(Tensor([[[[1, 2], [3, 4]]]]), 2, 2)
        >>> out.data.tolist(), idx.tolist()
        ([[[[4.0]]]], [[[[3]]]])
    """
    if x.ndim != 4:
        raise exceptions.ShapeError('maxpool2d expects 4-D input, got %s' % (x.shape,))
    batch, channels, h, w = x.shape
    if k > h or k > w:
        raise exceptions.ShapeError('pool window %d larger than input %dx%d' % (k, h, w))
    if stride < 1:
        raise exceptions.ShapeError('stride must be >= 1, got %d' % stride)

    windows = sliding_window_view(x.data, (k, k), axis=(2, 3))[:, :, ::stride, ::stride]
    flat = windows.reshape(windows.shape[:4] + (k * k,))
    argmax = flat.argmax(axis=-1)
    out = np.take_along_axis(flat, argmax[..., None], axis=-1)[..., 0]
    out_h, out_w = out.shape[2:]

    def _backward(g):
        rows = argmax // k + (np.arange(out_h) * stride)[:, None]
        cols = argmax % k + np.arange(out_w) * stride
        bi, ci = np.indices(argmax.shape)[:2]
        grad = np.zeros_like(x.data)
        np.add.at(grad, (bi, ci, rows, cols), g)
        return (grad,)
    return _make('maxpool2d', out, (x,), _backward), argmax

def _scalar(value):
    if value.data.size != 1:
        raise exceptions.ContractError('function must be scalar-valued, got shape %s'
                % (value.shape,))
    return float(value.data.reshape(()))

def finite_diff_check(f, x, eps=1e-5, coords=None):
    """
    Compare the reverse-mode gradient of scalar function `f` at `x` with
    central differences.

    :param f: callable taking `x` and returning a scalar :class:`Tensor`
    :param x: the :class:`Tensor` to perturb, modified in place and restored
    :param eps: step, within [1e-7, 1e-4]
    :param coords: flat indices to check, all by default
    :returns: max over coordinates of
              ``|analytic - numeric| / max(1, |analytic|)``
    :raises: :exc:`ContractError` for non-scalar `f` or `eps` out of range

        >>> finite_diff_check(lambda t: (t * t).sum(), Tensor([1.0, -2.0])) < 1e-8
        True
    """
    if not 1e-7 <= eps <= 1e-4:
        raise exceptions.ContractError('eps must be within [1e-7, 1e-4], got %g' % eps)
    saved_grad, saved_flag = x.grad, x.requires_grad
    x.grad, x.requires_grad = None, True
    try:
        with Graph() as graph:
            y = f(x)
            _scalar(y)
            if y.graph is graph:
                graph.backward(y.reshape(()))
        analytic = x.grad if x.grad is not None else np.zeros_like(x.data)
    finally:
        x.grad, x.requires_grad = saved_grad, saved_flag

    if coords is None:
        coords = range(x.data.size)
    worst = 0.0
    with no_graph():
        for flat in coords:
            pos = np.unravel_index(flat, x.data.shape)
            orig = x.data[pos]
            try:
                x.data[pos] = orig + eps
                plus = _scalar(f(x))
                x.data[pos] = orig - eps
                minus = _scalar(f(x))
            finally:
                x.data[pos] = orig
            numeric = (plus - minus) / (2.0 * eps)
            a = analytic[pos]
            worst = max(worst, abs(a - numeric) / max(1.0, abs(a)))
    return float(worst)
