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
:mod:`pathcaps.train` --- training and evaluation
=================================================

One epoch is a shuffled pass over the training part: augmentation,
forward pass (with DropCircuit when enabled), margin loss plus the scaled
reconstruction loss, backward pass and one Adam step per minibatch. The
validation error then decides whether the epoch's parameters become the
best checkpoint; ties keep the earlier epoch.

Files written to the output directory:

``metrics.csv``
    one row per epoch, see :data:`CSV_HEADER`
``best.pcap``
    checkpoint of the epoch with the lowest validation error

.. moduleauthor:: pathcaps developers
"""
import collections
import csv
import logging
import math
import os
import time

import numpy as np

from . import autodiff, checkpoint, data, exceptions, model, streams
from .optim import AdamState, adam_step

__all__ = (
    'AdamState',
    'adam_step',
    'Datasets',
    'TrainRecord',
    'Evaluation',
    'TrainResult',
    'evaluate',
    'train',
    'select_best',
    'summarize',
)

logger = logging.getLogger(__name__)

CSV_HEADER = ('epoch', 'train_margin_loss', 'train_recon_loss', 'val_error_pct',
        'test_error_pct', 'seconds')
METRICS_FILE = 'metrics.csv'
BEST_FILE = 'best.pcap'

DEFAULT_BATCH_SIZE = 128

Datasets = collections.namedtuple('Datasets', 'train val test', defaults=(None,))

class TrainRecord(collections.namedtuple('TrainRecord', CSV_HEADER)):
    """One epoch of training. `test_error_pct` is ``None`` without a test
    set, `seconds` is the epoch wall time."""
    __slots__ = ()

    def row(self, with_time):
        """CSV cells; wall time only when `with_time`."""
        return [
            '%d' % self.epoch,
            '%.10f' % self.train_margin_loss,
            '%.10f' % self.train_recon_loss,
            '%.4f' % self.val_error_pct,
            '' if self.test_error_pct is None else '%.4f' % self.test_error_pct,
            '%.3f' % self.seconds if with_time else '',
        ]

class Evaluation(object):
    """Result of :func:`evaluate`."""
    __slots__ = ('error_pct', 'margin_loss', 'recon_loss', 'predictions')

    def __init__(self, error_pct, margin_loss, recon_loss, predictions):
        self.error_pct = error_pct
        self.margin_loss = margin_loss
        self.recon_loss = recon_loss
        self.predictions = predictions

    def __repr__(self):
        return '<Evaluation: %.4f%% error>' % self.error_pct

class TrainResult(object):
    __slots__ = ('records', 'best_epoch', 'checkpoint', 'out_dir')

    def __init__(self, records, best_epoch, checkpoint, out_dir):
        self.records = records
        self.best_epoch = best_epoch
        self.checkpoint = checkpoint
        self.out_dir = out_dir

    @property
    def best(self):
        return self.records[self.best_epoch - 1]

def evaluate(spec, params, dataset, batch_size=DEFAULT_BATCH_SIZE, workers=1):
    """
    Error rate and mean losses on `dataset`, without augmentation or
    DropCircuit. The prediction is the digit with the longest capsule.

    :returns: :class:`Evaluation`
    """
    if len(dataset) == 0:
        raise exceptions.ContractError('cannot evaluate on an empty dataset')
    predictions = []
    margin = recon = 0.0
    with autodiff.no_graph():
        for images, labels in data.batches(dataset, batch_size):
            out = model.forward(spec, params, images, training=False, workers=workers)
            predictions.append(out.lengths.data.argmax(axis=1))
            margin += model.margin_loss(out.lengths, labels).item() * len(labels)
            if out.reconstruction is not None:
                recon += model.reconstruction_loss(out.reconstruction, images).item() * len(labels)
    predictions = np.concatenate(predictions)
    n = len(dataset)
    error = 100.0 * np.count_nonzero(predictions != dataset.labels) / n
    return Evaluation(error, margin / n, recon / n, predictions)

def _augment_batch(images, rng):
    return np.stack([data.augment(image, rng) for image in images])

def _train_epoch(spec, params, adam, dataset, batch_size, epoch, augment, workers):
    shuffle = streams.seed_sequence(spec.seed, 'shuffle', epoch)
    aug_rng = streams.stream(spec.seed, 'augment', epoch)
    mask_rng = streams.stream(spec.seed, 'mask', epoch)
    margin_sum = recon_sum = 0.0
    for number, (images, labels) in enumerate(data.batches(dataset, batch_size, shuffle), 1):
        if augment:
            images = _augment_batch(images, aug_rng)
        params.zero_grad()
        with autodiff.Graph() as graph:
            out = model.forward(spec, params, images, training=True, rng=mask_rng,
                    labels=labels, workers=workers)
            margin = model.margin_loss(out.lengths, labels)
            loss = margin
            recon_value = 0.0
            if out.reconstruction is not None:
                recon = model.reconstruction_loss(out.reconstruction, images)
                recon_value = recon.item()
                loss = margin + recon
            if not math.isfinite(loss.item()):
                raise exceptions.NonFiniteLossError(epoch, number,
                        {'margin': margin.item(), 'recon': recon_value})
            graph.backward(loss)
        adam_step(params, params.grads(), adam)
        margin_sum += margin.item() * len(labels)
        recon_sum += recon_value * len(labels)
        logger.debug('epoch %d batch %d: margin %.6f recon %.6f', epoch, number,
                margin.item(), recon_value)
    n = len(dataset)
    return margin_sum / n, recon_sum / n

def train(spec, datasets, epochs, batch_size, out_dir, workers=1, augment=True,
        record_wall_time=False):
    """
    Train a freshly initialized network.

    :param datasets: :class:`Datasets`; `test` may be ``None``
    :param out_dir: created if missing
    :param record_wall_time: write epoch wall time to the CSV; otherwise the
                             ``seconds`` column stays empty so reruns produce
                             identical files
    :returns: :class:`TrainResult` holding the best
              :class:`~pathcaps.checkpoint.Checkpoint`
    :raises: :exc:`NonFiniteLossError` if a loss turns NaN or infinite
    """
    if epochs < 1:
        raise exceptions.ContractError('epochs must be >= 1, got %d' % epochs)
    if len(datasets.train) == 0 or len(datasets.val) == 0:
        raise exceptions.ContractError('training and validation sets must not be empty')
    os.makedirs(out_dir, exist_ok=True)
    params = model.init_params(spec, streams.stream(spec.seed, 'init'))
    adam = AdamState.for_params(params)
    logger.info('training %s: %d paths, %s routing, %d parameters, %d/%d samples',
            spec.architecture, spec.num_paths, spec.routing.value, params.size(),
            len(datasets.train), len(datasets.val))

    metrics_path = os.path.join(out_dir, METRICS_FILE)
    best_path = os.path.join(out_dir, BEST_FILE)
    records = []
    best_epoch, best_error = None, None
    with open(metrics_path, 'w', newline='') as stream:
        writer = csv.writer(stream, lineterminator='\n')
        writer.writerow(CSV_HEADER)
        for epoch in range(1, epochs + 1):
            start = time.perf_counter()
            margin, recon = _train_epoch(spec, params, adam, datasets.train, batch_size,
                    epoch, augment, workers)
            val = evaluate(spec, params, datasets.val, batch_size, workers)
            test = None
            if datasets.test is not None and len(datasets.test):
                test = evaluate(spec, params, datasets.test, batch_size, workers).error_pct
            record = TrainRecord(epoch, margin, recon, val.error_pct, test,
                    time.perf_counter() - start)
            records.append(record)
            writer.writerow(record.row(record_wall_time))
            stream.flush()

            if best_error is None or val.error_pct < best_error:
                best_epoch, best_error = epoch, val.error_pct
                checkpoint.save_checkpoint(params, spec, adam, best_path, meta={
                    'epoch': epoch,
                    'val_error_pct': val.error_pct,
                    'test_error_pct': test,
                    'rng': {'seed': spec.seed, 'epoch': epoch},
                })
            logger.info('epoch %d: margin %.6f recon %.6f val %.2f%% test %s (%.1fs)%s',
                    epoch, margin, recon, val.error_pct,
                    '-' if test is None else '%.2f%%' % test, record.seconds,
                    ' *' if best_epoch == epoch else '')
    logger.info('best epoch %d: val %.2f%%', best_epoch, best_error)
    return TrainResult(records, best_epoch, checkpoint.load_checkpoint(best_path), out_dir)

def select_best(val_errors):
    """
    1-based epoch with the lowest validation error; the earliest on ties.

        >>> select_best([2.0, 1.0, 1.5])
        2
        >>> select_best([1.0, 3.0, 1.0])
        1
    """
    if not len(val_errors):
        raise exceptions.ContractError('no epochs to select from')
    return int(np.argmin(val_errors)) + 1

def summarize(values):
    """
    Mean and sample standard deviation.

        >>> summarize([1.0, 2.0, 3.0])
        (2.0, 1.0)
        >>> summarize([0.5])
        (0.5, 0.0)
    """
    values = np.asarray(values, dtype=np.float64)
    if values.size < 2:
        return float(values.mean()), 0.0
    return float(values.mean()), float(values.std(ddof=1))
