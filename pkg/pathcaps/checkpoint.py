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
:mod:`pathcaps.checkpoint` --- checkpoint I/O
=============================================

This module contains the versioned binary container for trained models.
All integers are little-endian.

    .. productionlist::
        checkpoint: "PCAP"
                  : version (u32)
                  : header length (u64)
                  : header (canonical JSON, UTF-8)
                  : `entry`*
        entry: name length (u64)
             : name (UTF-8)
             : rank (u64)
             : extent (u64)*
             : data (float64)*

The header holds the network spec, the Adam hyperparameters and step
counter, run metadata and the number of entries. Parameter entries come
first, in allocation order, followed by ``adam.m.<name>`` and
``adam.v.<name>`` moment buffers when an optimizer state was saved.

.. moduleauthor:: pathcaps developers
"""
import json
import logging
import os
import struct

import numpy as np

from . import exceptions, model, optim

__all__ = [
    'Entry',
    'Checkpoint',
    'save_checkpoint',
    'load_checkpoint',
]

logger = logging.getLogger(__name__)

MAGIC = b'PCAP'
VERSION = 1

_U32 = struct.Struct('<I')
_U64 = struct.Struct('<Q')

MAX_NAME = 1024
MAX_RANK = 8

def _remaining(stream):
    pos = stream.tell()
    end = stream.seek(0, os.SEEK_END)
    stream.seek(pos)
    return end - pos

def _read(stream, size, what):
    if size > _remaining(stream):
        raise exceptions.EndOfFileError('%s: truncated' % what)
    return stream.read(size)

def _parse_u64(data):
    """
    Parse little-endian u64 values.

        >>> _parse_u64(b'\\x02' + b'\\x00' * 7)
        (2,)
        >>> _parse_u64(b'abc')
        Traceback (most recent call last):
            ...
        IncorrectDataSize: u64
    """
    if not data or len(data) % 8:
        raise exceptions.IncorrectDataSize('u64')
    return struct.unpack('<%dQ' % (len(data) // 8), data)

def _pack_u64(values):
    """
    Pack little-endian u64 values.

        >>> _pack_u64([1, 2]) == struct.pack('<2Q', 1, 2)
        True
        >>> _pack_u64([])
        b''
    """
    return struct.pack('<%dQ' % len(values), *values)

def _pack_header(header):
    """
    Canonical JSON text: sorted keys, no whitespace.

        >>> _pack_header({'b': 1, 'a': [1.5, None]})
        b'{"a":[1.5,null],"b":1}'
    """
    return json.dumps(header, sort_keys=True, separators=(',', ':'),
            allow_nan=False).encode('utf-8')

_ADAM_KEYS = ('beta1', 'beta2', 'eps', 'lr', 't')

def _parse_adam(hyper):
    """
    Build an empty :class:`~pathcaps.optim.AdamState` from the ``adam``
    header section.

        >>> _parse_adam({'lr': 0.001, 'beta1': 0.9, 'beta2': 0.999, 'eps': 1e-8, 't': 3}).t
        3
        >>> _parse_adam({'lr': 0.001, 'beta1': 0.9, 'beta2': 0.999, 'eps': 1e-8})
        Traceback (most recent call last):
            ...
        FormatError: header: adam: expected keys beta1, beta2, eps, lr, t, got beta1, beta2, eps, lr
    """
    if not isinstance(hyper, dict):
        raise exceptions.FormatError('header: adam: expected an object, got %s'
                % type(hyper).__name__)
    if tuple(sorted(hyper)) != _ADAM_KEYS:
        raise exceptions.FormatError('header: adam: expected keys %s, got %s'
                % (', '.join(_ADAM_KEYS), ', '.join(sorted(hyper))))
    t = hyper['t']
    if isinstance(t, bool) or not isinstance(t, int) or t < 0:
        raise exceptions.FormatError('header: adam.t: expected a non-negative integer, got %r'
                % (t,))
    for key in ('lr', 'beta1', 'beta2', 'eps'):
        value = hyper[key]
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise exceptions.FormatError('header: adam.%s: expected a number, got %r'
                    % (key, value))
    adam = optim.AdamState(hyper['lr'], hyper['beta1'], hyper['beta2'], hyper['eps'])
    adam.t = t
    return adam

class Entry(object):
    """
    One named array of a checkpoint. Example::

        >>> e = Entry('routing.W', np.zeros((2, 3)))
        >>> e.name, e.array.shape
        ('routing.W', (2, 3))
    """
    __slots__ = ['name', 'array']

    def __init__(self, name, array):
        self.name = name
        self.array = np.asarray(array, dtype=np.float64)

    @classmethod
    def read(cls, stream, number=0):
        """
        Read an entry.

        :param stream: checkpoint opened for reading in binary mode
        :param number: position of the entry, used in messages until the
                       name is known
        :raises: :exc:`EndOfFileError` on truncated data
        :raises: :exc:`IncorrectDataSize` on implausible size fields
        """
        what = 'entry %d' % number
        (name_len,) = _parse_u64(_read(stream, 8, what))
        if name_len > MAX_NAME:
            raise exceptions.IncorrectDataSize('%s: name length %d' % (what, name_len))
        try:
            name = _read(stream, name_len, what).decode('utf-8')
        except UnicodeDecodeError:
            raise exceptions.FormatError('%s: name is not UTF-8' % what)
        what = 'entry %r' % name
        (rank,) = _parse_u64(_read(stream, 8, what))
        if rank > MAX_RANK:
            raise exceptions.IncorrectDataSize('%s: rank %d' % (what, rank))
        extents = _parse_u64(_read(stream, 8 * rank, what)) if rank else ()
        count = 1
        for extent in extents:
            count *= extent
        data = _read(stream, 8 * count, what + ' data')
        array = np.frombuffer(data, dtype='<f8').astype(np.float64).reshape(extents)
        return cls(name, array)

    def save(self, stream):
        """Write the entry to a stream opened for writing in binary mode."""
        name = self.name.encode('utf-8')
        stream.write(_pack_u64([len(name)]))
        stream.write(name)
        stream.write(_pack_u64([self.array.ndim] + list(self.array.shape)))
        stream.write(np.ascontiguousarray(self.array, dtype='<f8').tobytes())

    @classmethod
    def iterate(cls, stream, count):
        """Generator yielding `count` entries from `stream`."""
        for number in range(count):
            yield cls.read(stream, number)

class Checkpoint(object):
    """
    A trained model: spec, parameters, optional optimizer state and
    metadata (epoch, validation error, random stream record).
    """
    __slots__ = ('spec', 'params', 'adam', 'meta')

    def __init__(self, spec, params, adam=None, meta=None):
        self.spec = spec
        self.params = params
        self.adam = adam
        self.meta = dict(meta or {})

    def entries(self):
        for name, tensor in self.params.items():
            yield Entry(name, tensor.data)
        if self.adam is not None:
            for name in self.params:
                yield Entry('adam.m.' + name, self.adam.m[name])
            for name in self.params:
                yield Entry('adam.v.' + name, self.adam.v[name])

    def header(self, count):
        return {
            'spec': self.spec.to_dict(),
            'adam': self.adam.hyperparameters() if self.adam is not None else None,
            'meta': self.meta,
            'entries': count,
        }

    def save(self, stream):
        entries = list(self.entries())
        header = _pack_header(self.header(len(entries)))
        stream.write(MAGIC)
        stream.write(_U32.pack(VERSION))
        stream.write(_pack_u64([len(header)]))
        stream.write(header)
        for entry in entries:
            entry.save(stream)

    @classmethod
    def load(cls, stream):
        magic = stream.read(len(MAGIC))
        if magic != MAGIC:
            raise exceptions.MagicError('magic: expected %r, got %r' % (MAGIC, magic))
        (version,) = _U32.unpack(_read(stream, 4, 'version'))
        if version != VERSION:
            raise exceptions.MagicError('version: unsupported %d' % version)
        (size,) = _parse_u64(_read(stream, 8, 'header length'))
        try:
            header = json.loads(_read(stream, size, 'header').decode('utf-8'))
            spec = model.NetworkSpec.from_dict(header['spec'])
            count = int(header['entries'])
        except (ValueError, KeyError, TypeError, exceptions.ConfigError) as exc:
            raise exceptions.FormatError('header: %s' % exc)

        entries = dict((e.name, e.array) for e in Entry.iterate(stream, count))
        if len(entries) != count:
            raise exceptions.FormatError('entries: duplicate names')
        extra = _remaining(stream)
        if extra:
            raise exceptions.IncorrectDataSize('%d bytes after the last entry' % extra)

        arrays = {}
        for name, shape in model.parameter_shapes(spec):
            if name not in entries:
                raise exceptions.FormatError('entry %r: missing' % name)
            if entries[name].shape != tuple(shape):
                raise exceptions.IncorrectDataSize('entry %r: expected shape %s, got %s'
                        % (name, tuple(shape), entries[name].shape))
            arrays[name] = entries.pop(name)
        params = model.ModelParams.from_arrays(arrays)

        adam = None
        if header.get('adam') is not None:
            adam = _parse_adam(header['adam'])
            for prefix, buffers in (('adam.m.', adam.m), ('adam.v.', adam.v)):
                for name in params:
                    key = prefix + name
                    if key not in entries:
                        raise exceptions.FormatError('entry %r: missing' % key)
                    if entries[key].shape != params[name].shape:
                        raise exceptions.IncorrectDataSize('entry %r: expected shape %s, got %s'
                                % (key, params[name].shape, entries[key].shape))
                    buffers[name] = entries.pop(key)
        if entries:
            raise exceptions.FormatError('entry %r: unexpected' % sorted(entries)[0])
        return cls(spec, params, adam, header.get('meta'))

def save_checkpoint(params, spec, adam_state, path, meta=None):
    """
    Write a checkpoint to `path`. The file is written next to `path` and
    renamed into place, so readers never see a partial file.
    """
    tmp = path + '.tmp'
    with open(tmp, 'wb') as stream:
        Checkpoint(spec, params, adam_state, meta).save(stream)
    os.replace(tmp, path)
    logger.debug('saved checkpoint %s (%d scalars)', path, params.size())

def load_checkpoint(path):
    """
    Read a checkpoint from `path`.

    :returns: :class:`Checkpoint`
    :raises: :exc:`FormatError` naming the offending field or entry
    """
    with open(path, 'rb') as stream:
        try:
            checkpoint = Checkpoint.load(stream)
        except exceptions.FormatError as exc:
            raise type(exc)('%s: %s' % (path, exc))
    logger.debug('loaded checkpoint %s', path)
    return checkpoint
