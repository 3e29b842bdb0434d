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
:mod:`pathcaps.pgm` --- grayscale image grids
=============================================

Binary PGM (``P5``, maxval 255) reader and writer, and the tile grid used
for perturbation images.

    .. productionlist::
        pgm: "P5" whitespace width whitespace height whitespace "255"
           : single whitespace
           : pixel{width*height}
        pixel: unsigned byte, row-major

Comments (``#`` to end of line) are accepted in the header when reading.
"""
import logging

import numpy as np

from . import exceptions

__all__ = ('to_bytes', 'write_pgm', 'read_pgm', 'tile_grid', 'perturbation_grid')

logger = logging.getLogger(__name__)

MAXVAL = 255

def to_bytes(values):
    """
    Map intensities in [0, 1] to bytes; values outside are clipped.

        >>> to_bytes([0.0, 0.5, 1.0, 2.0, -1.0]).tolist()
        [0, 128, 255, 255, 0]
    """
    values = np.clip(np.asarray(values, dtype=np.float64), 0.0, 1.0)
    return np.floor(values * MAXVAL + 0.5).astype(np.uint8)

def write_pgm(path, pixels):
    """Write uint8 `pixels` (height, width) as a P5 file."""
    pixels = np.asarray(pixels)
    if pixels.ndim != 2:
        raise exceptions.ShapeError('PGM image must be 2-D, got shape %s' % (pixels.shape,))
    if pixels.dtype != np.uint8:
        raise exceptions.ContractError('PGM pixels must be uint8, got %s' % pixels.dtype)
    height, width = pixels.shape
    with open(path, 'wb') as stream:
        stream.write(b'P5\n%d %d\n%d\n' % (width, height, MAXVAL))
        stream.write(np.ascontiguousarray(pixels).tobytes())
    logger.debug('wrote %dx%d PGM to %s', width, height, path)

def _header_tokens(data):
    """
    Split the first four header tokens off `data`, skipping comments.
    Returns the tokens and the offset of the pixel data.

        >>> _header_tokens(b'P5\\n# note\\n3 2\\n255\\nabcdef')
        ([b'P5', b'3', b'2', b'255'], 18)
    """
    tokens = []
    pos = 0
    while len(tokens) < 4:
        while pos < len(data) and data[pos:pos + 1].isspace():
            pos += 1
        if pos >= len(data):
            raise exceptions.EndOfFileError('header: truncated')
        if data[pos:pos + 1] == b'#':
            end = data.find(b'\n', pos)
            pos = len(data) if end < 0 else end + 1
            continue
        start = pos
        while pos < len(data) and not data[pos:pos + 1].isspace() and data[pos:pos + 1] != b'#':
            pos += 1
        tokens.append(data[start:pos])
    if pos >= len(data) or not data[pos:pos + 1].isspace():
        raise exceptions.EndOfFileError('header: missing separator before pixel data')
    return tokens, pos + 1

def read_pgm(path):
    """
    Read a P5 file with maxval 255.

    :returns: uint8 array (height, width)
    :raises: :exc:`FormatError` naming the offending field
    """
    with open(path, 'rb') as stream:
        data = stream.read()
    try:
        (magic, width, height, maxval), offset = _header_tokens(data)
        if magic != b'P5':
            raise exceptions.MagicError('magic: expected P5, got %r' % magic)
        try:
            width, height, maxval = int(width), int(height), int(maxval)
        except ValueError:
            raise exceptions.FormatError('header: non-numeric field')
        if maxval != MAXVAL:
            raise exceptions.FormatError('maxval: expected %d, got %d' % (MAXVAL, maxval))
        payload = data[offset:]
        if len(payload) != width * height:
            raise exceptions.IncorrectDataSize('data: expected %d bytes, got %d'
                    % (width * height, len(payload)))
    except exceptions.FormatError as exc:
        raise type(exc)('%s: %s' % (path, exc))
    return np.frombuffer(payload, dtype=np.uint8).reshape(height, width).copy()

def tile_grid(tiles, gap=2, fill=0):
    """
    Arrange `tiles` (rows, cols, h, w) of uint8 into one image with `gap`
    pixels of `fill` between neighbouring tiles.

        >>> tile_grid(np.full((1, 2, 1, 1), 9, dtype=np.uint8), gap=1).tolist()
        [[9, 0, 9]]
    """
    tiles = np.asarray(tiles, dtype=np.uint8)
    rows, cols, h, w = tiles.shape
    out = np.full((rows * h + (rows - 1) * gap, cols * w + (cols - 1) * gap), fill,
            dtype=np.uint8)
    for r in range(rows):
        for c in range(cols):
            top = r * (h + gap)
            left = c * (w + gap)
            out[top:top + h, left:left + w] = tiles[r, c]
    return out

def perturbation_grid(grid, gap=2, fill=0):
    """
    Image of a :class:`~pathcaps.model.PerturbationGrid`: one row per swept
    dimension, each starting with the input and the unperturbed
    reconstruction, followed by the sweep.
    """
    rows = len(grid.dims)
    tiles = np.empty((rows, len(grid.values) + 2) + grid.input.shape, dtype=np.uint8)
    tiles[:, 0] = to_bytes(grid.input)
    tiles[:, 1] = to_bytes(grid.reconstruction)
    tiles[:, 2:] = to_bytes(grid.images)
    return tile_grid(tiles, gap, fill)
