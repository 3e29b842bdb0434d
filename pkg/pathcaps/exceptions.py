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
:mod:`pathcaps.exceptions` --- pathcaps exceptions
==================================================

This module contains exception classes used in `pathcaps`.
"""
__all__ = ('PathCapsError', 'ShapeError', 'ContractError', 'ConfigError',
        'FormatError', 'EndOfFileError', 'IncorrectDataSize', 'MagicError',
        'NonFiniteLossError')

class PathCapsError(Exception):
    """Base class for all pathcaps exceptions."""

class ShapeError(PathCapsError, ValueError):
    """Raised when tensor shapes do not fit an operation."""

class ContractError(PathCapsError):
    """Raised when a precondition of an operation is violated."""

class ConfigError(PathCapsError, ValueError):
    """Raised on invalid configuration values. The message names the field."""

class FormatError(PathCapsError):
    """Base class for file format errors."""

class EndOfFileError(FormatError):
    """Raised on unexpected end of file."""

class IncorrectDataSize(FormatError):
    """Raised if a size field disagrees with the data."""

class MagicError(FormatError):
    """Raised on wrong magic number or unsupported format version."""

class NonFiniteLossError(PathCapsError, ArithmeticError):
    """Raised when training produces a NaN or infinite loss."""

    def __init__(self, epoch, batch, losses):
        PathCapsError.__init__(self,
                'non-finite loss at epoch %d, batch %d: %s' % (epoch, batch,
                    ', '.join('%s=%r' % item for item in sorted(losses.items()))))
        self.epoch = epoch
        self.batch = batch
        self.losses = losses
