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
:mod:`pathcaps.data` --- MNIST ingestion
========================================

This module reads and writes MNIST IDX files, splits the training set into
training and validation parts and implements the pad-and-crop augmentation.

IDX layout (all integers big-endian):

    .. productionlist::
        idx: magic
           : dimension+
           : data
        magic: 0x00000803 (images) | 0x00000801 (labels)
        dimension: 32-bit unsigned extent, one per axis
        data: unsigned bytes, row-major

.. moduleauthor:: pathcaps developers
"""
import dataclasses
import hashlib
import logging
import os
import struct

import numpy as np

from . import exceptions, streams

__all__ = (
    'Dataset',
    'SplitConfig',
    'load_idx_images',
    'load_idx_labels',
    'write_idx_images',
    'write_idx_labels',
    'load_dataset',
    'load_mnist',
    'split',
    'shift_crop',
    'augment',
    'batches',
)

logger = logging.getLogger(__name__)

IMAGE_MAGIC = 0x00000803
LABEL_MAGIC = 0x00000801
IMAGE_SIZE = 28
NUM_CLASSES = 10
PAD = 2

MNIST_FILES = {
    'train': ('train-images-idx3-ubyte', 'train-labels-idx1-ubyte'),
    'test': ('t10k-images-idx3-ubyte', 't10k-labels-idx1-ubyte'),
}

_U32 = struct.Struct('>I')

def _read_exact(stream, size, field):
    data = stream.read(size)
    if len(data) != size:
        raise exceptions.EndOfFileError('%s: truncated, %d of %d bytes' % (field, len(data), size))
    return data

def _read_header(stream, magic, ndims):
    """
    Check the magic and return the dimension sizes.

        >>> import io
        >>> _read_header(io.BytesIO(struct.pack('>4I', IMAGE_MAGIC, 2, 28, 28)), IMAGE_MAGIC, 3)
        (2, 28, 28)
        >>> _read_header(io.BytesIO(struct.pack('>2I', LABEL_MAGIC, 2)), IMAGE_MAGIC, 3)
        Traceback (most recent call last):
            ...
        MagicError: magic: expected 0x00000803, got 0x00000801
    """
    (found,) = _U32.unpack(_read_exact(stream, 4, 'magic'))
    if found != magic:
        raise exceptions.MagicError('magic: expected 0x%08x, got 0x%08x' % (magic, found))
    return struct.unpack('>%dI' % ndims, _read_exact(stream, 4 * ndims, 'dimensions'))

def _read_payload(stream, size):
    payload = _read_exact(stream, size, 'data')
    extra = len(stream.read())
    if extra:
        raise exceptions.IncorrectDataSize('data: %d bytes beyond the declared dimensions' % extra)
    return payload

def _in_file(path, func, *args):
    """Run a reader on `path`, prefixing format errors with the file name."""
    with open(path, 'rb') as stream:
        try:
            return func(stream, *args)
        except exceptions.FormatError as exc:
            raise type(exc)('%s: %s' % (path, exc))

def _parse_images(stream):
    count, rows, cols = _read_header(stream, IMAGE_MAGIC, 3)
    if (rows, cols) != (IMAGE_SIZE, IMAGE_SIZE):
        raise exceptions.IncorrectDataSize('dimensions: expected %dx%d images, got %dx%d'
                % (IMAGE_SIZE, IMAGE_SIZE, rows, cols))
    payload = _read_payload(stream, count * rows * cols)
    return np.frombuffer(payload, dtype=np.uint8).reshape(count, rows, cols)

def _parse_labels(stream):
    (count,) = _read_header(stream, LABEL_MAGIC, 1)
    labels = np.frombuffer(_read_payload(stream, count), dtype=np.uint8)
    if count and labels.max() >= NUM_CLASSES:
        bad = int(np.argmax(labels >= NUM_CLASSES))
        raise exceptions.IncorrectDataSize('label %d: value %d out of range 0..%d'
                % (bad, labels[bad], NUM_CLASSES - 1))
    return labels

def load_idx_images(path):
    """
    Read an IDX image file.

    :returns: float64 array (n, 28, 28) scaled to [0, 1]
    :raises: :exc:`FormatError` naming the offending field
    """
    pixels = _in_file(path, _parse_images)
    logger.debug('read %d images from %s', len(pixels), path)
    return pixels / 255.0

def load_idx_labels(path):
    """
    Read an IDX label file.

    :returns: int64 array (n,)
    :raises: :exc:`FormatError` naming the offending field
    """
    labels = _in_file(path, _parse_labels)
    logger.debug('read %d labels from %s', len(labels), path)
    return labels.astype(np.int64)

def write_idx_images(path, pixels):
    """Write uint8 `pixels` (n, 28, 28) as an IDX image file."""
    pixels = np.asarray(pixels, dtype=np.uint8)
    with open(path, 'wb') as stream:
        stream.write(struct.pack('>4I', IMAGE_MAGIC, *pixels.shape))
        stream.write(pixels.tobytes())

def write_idx_labels(path, labels):
    """Write `labels` (n,) as an IDX label file."""
    labels = np.asarray(labels, dtype=np.uint8)
    with open(path, 'wb') as stream:
        stream.write(struct.pack('>2I', LABEL_MAGIC, len(labels)))
        stream.write(labels.tobytes())

def _digest(path):
    sha = hashlib.sha256()
    with open(path, 'rb') as stream:
        for chunk in iter(lambda: stream.read(1 << 20), b''):
            sha.update(chunk)
    return sha.hexdigest()

class Dataset(object):
    """
    Images (n, 1, 28, 28) in [0, 1] with their labels. `provenance` maps
    source file names to SHA-256 digests.
    """
    __slots__ = ('images', 'labels', 'provenance')

    def __init__(self, images, labels, provenance=None):
        images = np.asarray(images, dtype=np.float64)
        if images.ndim == 3:
            images = images[:, None]
        labels = np.asarray(labels, dtype=np.int64)
        if len(images) != len(labels):
            raise exceptions.ShapeError('%d images but %d labels' % (len(images), len(labels)))
        if images.shape[1:] != (1, IMAGE_SIZE, IMAGE_SIZE):
            raise exceptions.ShapeError('images must be (n, 1, 28, 28), got %s' % (images.shape,))
        self.images = images
        self.labels = labels
        self.provenance = dict(provenance or {})

    def __len__(self):
        return len(self.labels)

    def __repr__(self):
        return '<Dataset: %d images>' % len(self)

    def subset(self, indices):
        return Dataset(self.images[indices], self.labels[indices], self.provenance)

    def limit(self, count):
        """First `count` samples, or everything when `count` is ``None``."""
        if count is None or count >= len(self):
            return self
        return self.subset(np.arange(count))

def load_dataset(images_path, labels_path):
    """Read an image file and its label file into a :class:`Dataset`."""
    dataset = Dataset(load_idx_images(images_path), load_idx_labels(labels_path), {
        os.path.basename(images_path): _digest(images_path),
        os.path.basename(labels_path): _digest(labels_path),
    })
    logger.info('loaded %d samples from %s', len(dataset), os.path.dirname(images_path) or '.')
    return dataset

def mnist_paths(data_dir, part):
    """Paths of the image and label files of `part` (``'train'``/``'test'``)."""
    return tuple(os.path.join(data_dir, name) for name in MNIST_FILES[part])

def load_mnist(data_dir, part):
    """
    Load the ``'train'`` or ``'test'`` part of MNIST from `data_dir`.

    :raises: :exc:`FileNotFoundError` naming the missing file
    """
    paths = mnist_paths(data_dir, part)
    for path in paths:
        if not os.path.isfile(path):
            raise FileNotFoundError(2, 'MNIST file not found', path)
    return load_dataset(*paths)

@dataclasses.dataclass(frozen=True)
class SplitConfig(object):
    val_fraction: float = 0.1
    split_seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.val_fraction < 1.0:
            raise exceptions.ConfigError('training.val_fraction: expected a value in [0, 1), got %r'
                    % (self.val_fraction,))

def split(dataset, cfg):
    """
    Seeded split into ``(train, validation)``; the validation part holds
    ``round(n * val_fraction)`` samples.
    """
    n = len(dataset)
    order = streams.stream(cfg.split_seed, 'split').permutation(n)
    n_val = int(round(n * cfg.val_fraction))
    return dataset.subset(order[:n - n_val]), dataset.subset(order[n - n_val:])

def shift_crop(image, dy, dx):
    """
    Zero-pad `image` (1, 28, 28) by 2 and crop 28×28 at offset (`dy`, `dx`).
    Offset (2, 2) returns the image unchanged.
    """
    padded = np.pad(image, ((0, 0), (PAD, PAD), (PAD, PAD)))
    return padded[:, dy:dy + IMAGE_SIZE, dx:dx + IMAGE_SIZE]

def augment(image, rng):
    """Random shift of up to 2 pixels in each direction, zero fill."""
    dy, dx = rng.integers(0, 2 * PAD + 1, size=2)
    return shift_crop(image, dy, dx)

def batches(dataset, batch_size, shuffle_seed=None):
    """
    Yield ``(images, labels)`` minibatches covering every sample once. The
    order is shuffled by `shuffle_seed` (anything
    :func:`numpy.random.default_rng` accepts); ``None`` keeps file order.
    The last batch may be short.
    """
    if batch_size < 1:
        raise exceptions.ContractError('batch size must be >= 1, got %d' % batch_size)
    n = len(dataset)
    if shuffle_seed is None:
        order = np.arange(n)
    else:
        order = np.random.default_rng(shuffle_seed).permutation(n)
    for start in range(0, n, batch_size):
        chunk = order[start:start + batch_size]
        yield dataset.images[chunk], dataset.labels[chunk]
