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
import argparse

from . import exceptions

class AbstractField(object):
    """
    One configuration value: attribute `variable` of the instance, stored
    under the dotted `key` of the JSON tree and set by command line `flag`.
    """
    def __init__(self, variable, key, default=None, flag=None, help=None):
        self.variable = variable
        self.key = key
        self.section, self.name = key.split('.')
        self.default = default
        self.flag = flag or '--' + self.name.replace('_', '-')
        self.help = help

    def convert(self, value):
        raise NotImplementedError

    def check(self, value):
        """Convert and validate `value`, raising :exc:`ConfigError`."""
        try:
            return self.convert(value)
        except exceptions.ConfigError:
            raise
        except (TypeError, ValueError):
            raise exceptions.ConfigError('%s: invalid value %r' % (self.key, value))

    def read(self, instance, tree):
        section = tree.get(self.section, {})
        if self.name in section:
            setattr(instance, self.variable, self.check(section[self.name]))

    def save(self, instance, tree):
        tree.setdefault(self.section, {})[self.name] = getattr(instance, self.variable)

    def add_argument(self, parser):
        parser.add_argument(self.flag, dest=self.variable, default=None,
                help='%s (config: %s)' % (self.help or self.name, self.key))

    def __repr__(self):
        return '<field: %s>' % self.key

class IntField(AbstractField):
    def __init__(self, variable, key, default, minimum=None, **kwargs):
        AbstractField.__init__(self, variable, key, default, **kwargs)
        self.minimum = minimum

    def convert(self, value):
        if isinstance(value, (bool, str)) or isinstance(value, float) and not value.is_integer():
            raise ValueError(value)
        value = int(value)
        if self.minimum is not None and value < self.minimum:
            raise exceptions.ConfigError('%s: expected an integer >= %d, got %d'
                    % (self.key, self.minimum, value))
        return value

    def add_argument(self, parser):
        parser.add_argument(self.flag, dest=self.variable, default=None, type=int,
                metavar='N', help='%s (config: %s)' % (self.help or self.name, self.key))

class OptionalIntField(IntField):
    def convert(self, value):
        if value is None:
            return None
        return IntField.convert(self, value)

class FloatField(AbstractField):
    def __init__(self, variable, key, default, low=None, high=None, closed=False, **kwargs):
        AbstractField.__init__(self, variable, key, default, **kwargs)
        self.low = low
        self.high = high
        self.closed = closed

    def convert(self, value):
        if isinstance(value, (bool, str)):
            raise ValueError(value)
        value = float(value)
        if self.low is not None and value < self.low or \
                self.high is not None and (value > self.high if self.closed else value >= self.high):
            raise exceptions.ConfigError('%s: expected a value in [%s, %s%s, got %g'
                    % (self.key, '-inf' if self.low is None else '%g' % self.low,
                    'inf' if self.high is None else '%g' % self.high,
                    ']' if self.closed else ')', value))
        return value

    def add_argument(self, parser):
        parser.add_argument(self.flag, dest=self.variable, default=None, type=float,
                metavar='X', help='%s (config: %s)' % (self.help or self.name, self.key))

class BoolField(AbstractField):
    def convert(self, value):
        if not isinstance(value, bool):
            raise ValueError(value)
        return value

    def add_argument(self, parser):
        parser.add_argument(self.flag, dest=self.variable, default=None,
                action=argparse.BooleanOptionalAction,
                help='%s (config: %s)' % (self.help or self.name, self.key))

class ChoiceField(AbstractField):
    def __init__(self, variable, key, default, choices, **kwargs):
        AbstractField.__init__(self, variable, key, default, **kwargs)
        self.choices = tuple(choices)

    def convert(self, value):
        if value not in self.choices:
            raise exceptions.ConfigError('%s: expected one of %s, got %r'
                    % (self.key, '|'.join(self.choices), value))
        return value

    def add_argument(self, parser):
        parser.add_argument(self.flag, dest=self.variable, default=None,
                choices=self.choices,
                help='%s (config: %s)' % (self.help or self.name, self.key))

class PathField(AbstractField):
    """A file system path; ``None`` allowed."""
    def convert(self, value):
        if value is None:
            return None
        if not isinstance(value, str) or not value:
            raise ValueError(value)
        return value

class IntListField(AbstractField):
    """List of integers, given on the command line as ``0,1,2``."""
    def convert(self, value):
        if isinstance(value, str):
            value = [v for v in value.split(',') if v.strip()]
        if not value:
            raise ValueError(value)
        result = []
        for item in value:
            if isinstance(item, bool) or isinstance(item, float):
                raise ValueError(item)
            result.append(int(item))
        return result

    def add_argument(self, parser):
        parser.add_argument(self.flag, dest=self.variable, default=None,
                metavar='N,N,...', help='%s (config: %s)' % (self.help or self.name, self.key))
