"""Synthetic MNIST-like data written as IDX files."""
import os

import numpy as np

from pathcaps import data, gradcheck, model
from pathcaps.capsules import RoutingMode

def digit_images(labels, seed=0):
    """One bright 6x6 block per class at a class-specific position, plus
    faint noise; uint8 (n, 28, 28)."""
    rng = np.random.default_rng(seed)
    labels = np.asarray(labels)
    images = (rng.random((len(labels), 28, 28)) * 30).astype(np.uint8)
    for n, label in enumerate(labels):
        row, col = divmod(int(label), 4)
        top, left = 2 + 8 * row, 2 + 6 * col
        images[n, top:top + 6, left:left + 6] = 255
    return images

def balanced_labels(count):
    return np.arange(count) % 10

def write_mnist(directory, train_count=40, test_count=20, seed=0):
    """Write the four MNIST files into `directory`."""
    for part, count in (('train', train_count), ('test', test_count)):
        labels = balanced_labels(count)
        images_path, labels_path = data.mnist_paths(directory, part)
        data.write_idx_images(images_path, digit_images(labels, seed))
        data.write_idx_labels(labels_path, labels)
    return directory

def dataset(count, seed=0):
    labels = balanced_labels(count)
    return data.Dataset(digit_images(labels, seed) / 255.0, labels)

def tiny_spec(**changes):
    """Two small paths, fast enough for unit tests."""
    spec = model.NetworkSpec(num_paths=2, layers=gradcheck.TINY_PATH,
            routing=RoutingMode.FAN_IN)
    return spec.replace(**changes) if changes else spec
