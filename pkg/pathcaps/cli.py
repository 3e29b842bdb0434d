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
:mod:`pathcaps.cli` --- command line interface
==============================================

Commands:

``train``
    train one model per trial and keep the best checkpoint of each
``eval``
    test error of a checkpoint
``params``
    exact parameter count with its breakdown
``gradcheck``
    finite difference check of a small model under both routing modes
``perturb``
    PGM grid of reconstructions with swept digit capsule dimensions

Every command accepts all configuration flags, see :mod:`pathcaps.config`.
Exit status is 0 on success, 1 on runtime failures and 2 on usage or
configuration errors.
"""
import argparse
import csv
import json
import logging
import os
import sys

from . import autodiff, checkpoint, config, data, exceptions, gradcheck, model, pgm, train
from .capsules import RoutingMode

__all__ = ('build_parser', 'main', 'cmd_train', 'cmd_eval', 'cmd_params',
        'cmd_gradcheck', 'cmd_perturb')

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2

CONFIG_FILE = 'config.json'
DATA_FILE = 'data.json'
TRIALS_FILE = 'trials.csv'
EVAL_FILE = 'eval.csv'
PERTURB_FILE = 'perturb.pgm'

def _data_dir(cfg):
    if cfg.data_dir is None:
        raise exceptions.ConfigError('data.dir: not set, use --data-dir or %s'
                % config.DATA_DIR_ENV)
    return cfg.data_dir

def _load_part(cfg, part):
    limit = cfg.train_limit if part == 'train' else cfg.test_limit
    return data.load_mnist(_data_dir(cfg), part).limit(limit)

def _write_csv(path, header, rows):
    with open(path, 'w', newline='') as stream:
        writer = csv.writer(stream, lineterminator='\n')
        writer.writerow(header)
        writer.writerows(rows)

def cmd_train(cfg, args, out):
    train_all = _load_part(cfg, 'train')
    test = _load_part(cfg, 'test')
    os.makedirs(cfg.out_dir, exist_ok=True)
    cfg.save(os.path.join(cfg.out_dir, CONFIG_FILE))
    provenance = dict(train_all.provenance, **test.provenance)
    with open(os.path.join(cfg.out_dir, DATA_FILE), 'w') as stream:
        json.dump(provenance, stream, sort_keys=True, indent=2)
        stream.write('\n')

    train_part, val_part = data.split(train_all, cfg.split_config())
    datasets = train.Datasets(train_part, val_part, test)
    rows = []
    for trial in range(cfg.trials):
        seed = cfg.seed + trial
        out_dir = cfg.out_dir
        if cfg.trials > 1:
            out_dir = os.path.join(cfg.out_dir, 'trial-%d' % trial)
        result = train.train(cfg.to_network_spec(seed), datasets, cfg.epochs,
                cfg.batch_size, out_dir, cfg.workers, cfg.augment, cfg.record_wall_time)
        best = result.best
        rows.append((trial, seed, best.epoch, best.val_error_pct, best.test_error_pct))
        print('trial %d (seed %d): best epoch %d, val %.2f%%, test %.2f%%'
                % rows[-1], file=out)

    if cfg.trials > 1:
        _write_csv(os.path.join(cfg.out_dir, TRIALS_FILE),
                ('trial', 'seed', 'best_epoch', 'val_error_pct', 'test_error_pct'),
                [(t, s, e, '%.4f' % v, '%.4f' % x) for t, s, e, v, x in rows])
        val_mean, val_std = train.summarize([r[3] for r in rows])
        test_mean, test_std = train.summarize([r[4] for r in rows])
        print('%d trials: val %.2f ± %.2f%%, test %.2f ± %.2f%%'
                % (cfg.trials, val_mean, val_std, test_mean, test_std), file=out)
    return EXIT_OK

def cmd_eval(cfg, args, out):
    ckpt = checkpoint.load_checkpoint(args.checkpoint)
    test = _load_part(cfg, 'test')
    result = train.evaluate(ckpt.spec, ckpt.params, test, cfg.batch_size, cfg.workers)
    print('test error: %.4f%% on %d samples' % (result.error_pct, len(test)), file=out)
    os.makedirs(cfg.out_dir, exist_ok=True)
    _write_csv(os.path.join(cfg.out_dir, EVAL_FILE),
            ('checkpoint', 'samples', 'error_pct', 'margin_loss', 'recon_loss'),
            [(args.checkpoint, len(test), '%.4f' % result.error_pct,
                '%.10f' % result.margin_loss, '%.10f' % result.recon_loss)])
    return EXIT_OK

def cmd_params(cfg, args, out):
    spec = cfg.to_network_spec()
    count = model.count_parameters(spec)
    if spec.architecture == model.CAPSNET:
        title = 'capsnet'
    else:
        title = 'pathcaps, %d paths (%s)' % (spec.num_paths, spec.variant)
    if spec.reconstruction:
        title += ', reconstruction'
    print(title, file=out)
    for name, value in count.components:
        print('  %-16s %12s' % (name, '{:,}'.format(value)), file=out)
    print('  %-16s %12s' % ('total', '{:,}'.format(count.total)), file=out)
    if count.note:
        print('note: %s' % count.note, file=out)
    return EXIT_OK

def cmd_gradcheck(cfg, args, out):
    reports = []
    for mode in RoutingMode:
        if args.corrupt:
            with autodiff.corrupt_backward(args.corrupt, args.corrupt_factor):
                report = gradcheck.check_model_gradients(mode, cfg.iterations, cfg.seed,
                        cfg.samples, cfg.eps)
        else:
            report = gradcheck.check_model_gradients(mode, cfg.iterations, cfg.seed,
                    cfg.samples, cfg.eps)
        reports.append(report)
        for line in report.lines():
            print(line, file=out)
    return EXIT_OK if all(r.passed for r in reports) else EXIT_FAILURE

def cmd_perturb(cfg, args, out):
    ckpt = checkpoint.load_checkpoint(args.checkpoint)
    if not ckpt.spec.reconstruction:
        raise exceptions.ContractError('%s: checkpoint has no reconstruction decoder'
                % args.checkpoint)
    test = _load_part(cfg, 'test')
    if cfg.index >= len(test):
        raise exceptions.ConfigError('perturb.index: %d out of range, %d test images'
                % (cfg.index, len(test)))
    grid = model.perturb_digitcaps(ckpt.spec, ckpt.params, test.images[cfg.index],
            cfg.digit, cfg.dims, cfg.lo, cfg.hi, cfg.step)
    path = cfg.image or os.path.join(cfg.out_dir, PERTURB_FILE)
    if os.path.dirname(path):
        os.makedirs(os.path.dirname(path), exist_ok=True)
    pgm.write_pgm(path, pgm.perturbation_grid(grid, cfg.gap))
    print('digit %d, dims %s, %d values: %s' % (grid.digit,
            ','.join(str(d) for d in grid.dims), len(grid.values), path), file=out)
    return EXIT_OK

COMMANDS = {
    'train': (cmd_train, 'train and keep the best checkpoint'),
    'eval': (cmd_eval, 'test error of a checkpoint'),
    'params': (cmd_params, 'exact parameter count'),
    'gradcheck': (cmd_gradcheck, 'finite difference gradient check'),
    'perturb': (cmd_perturb, 'perturbation grid of a reconstruction checkpoint'),
}

def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--config', metavar='FILE', help='JSON run configuration')
    config.RunConfig.add_arguments(common)

    parser = argparse.ArgumentParser(prog='pathcaps',
            description='Multipath capsule networks on MNIST.')
    sub = parser.add_subparsers(dest='command', metavar='COMMAND')
    sub.required = True
    for name, (_, text) in COMMANDS.items():
        cmd = sub.add_parser(name, parents=[common], help=text)
        if name in ('eval', 'perturb'):
            cmd.add_argument('checkpoint', help='checkpoint file')
        if name == 'gradcheck':
            # negative control for the checker itself
            cmd.add_argument('--corrupt', metavar='OP', help=argparse.SUPPRESS)
            cmd.add_argument('--corrupt-factor', type=float, default=2.0,
                    help=argparse.SUPPRESS)
    return parser

def main(argv=None, environ=None, out=None):
    """Run the command line; returns the exit status."""
    out = sys.stdout if out is None else out
    args = build_parser().parse_args(argv)
    try:
        cfg = config.resolve(args, environ)
    except (exceptions.ConfigError, OSError) as exc:
        print('pathcaps: error: %s' % exc, file=sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(level=cfg.log_level,
            format='%(asctime)s %(name)s %(levelname)s: %(message)s')

    command = COMMANDS[args.command][0]
    try:
        return command(cfg, args, out)
    except (exceptions.ConfigError, FileNotFoundError) as exc:
        print('pathcaps: error: %s' % exc, file=sys.stderr)
        return EXIT_USAGE
    except (exceptions.PathCapsError, OSError) as exc:
        print('pathcaps: error: %s' % exc, file=sys.stderr)
        return EXIT_FAILURE
