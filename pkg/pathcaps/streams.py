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
:mod:`pathcaps.streams` --- named random streams
================================================

Every random draw in `pathcaps` comes from a stream named after its purpose
(``init``, ``split``, ``shuffle``, ``augment``, ``mask``, ``gradcheck``), so
results never depend on the order in which unrelated consumers draw.

    >>> a = stream(7, 'init').standard_normal(3)
    >>> b = stream(7, 'init').standard_normal(3)
    >>> bool((a == b).all())
    True
    >>> bool((stream(7, 'mask').standard_normal(3) == a).all())
    False
"""
import zlib

import numpy as np

__all__ = ('seed_sequence', 'stream')

def seed_sequence(seed, name, *extra):
    """Seed sequence for stream `name` of run `seed`; `extra` are integers."""
    return np.random.SeedSequence([int(seed), zlib.crc32(name.encode('ascii'))]
            + [int(e) for e in extra])

def stream(seed, name, *extra):
    """Return a fresh :class:`numpy.random.Generator` for stream `name`."""
    return np.random.default_rng(seed_sequence(seed, name, *extra))
