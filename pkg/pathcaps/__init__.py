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
:mod:`pathcaps` --- multipath capsule networks
==============================================

Capsule networks whose primary capsules come from several independent
convolutional paths, with fan-in and fan-out routing by agreement,
DropCircuit path dropping, and the tooling to train them on MNIST.
"""
__version__ = '0.1.0'
