from setuptools import setup

long_desc = """
pathcaps is a library and command line tool for multipath capsule networks
on MNIST. Several independent convolutional paths produce the primary
capsules, dynamic routing runs in fan-in or fan-out mode, and DropCircuit
drops whole paths while training.

The `pathcaps` script trains models, evaluates checkpoints, prints exact
parameter counts, checks gradients against finite differences and renders
perturbation grids of the reconstruction decoder as PGM images.
"""

setup(
    name = 'pathcaps',
    version = '0.1.0',
    description = 'Multipath capsule networks on MNIST',
    long_description = long_desc,
    author = 'pathcaps developers',
    packages = ['pathcaps'],
    scripts = [
        'scripts/pathcaps',
    ],
    install_requires = [
        'numpy>=1.20',
    ],
    python_requires = '>=3.9',
    test_suite = 'test',
    classifiers = [
        'Development Status :: 3 - Alpha',
        'Environment :: Console',
        'Intended Audience :: Science/Research',
        'License :: OSI Approved :: GNU Lesser General Public License v3 or later (LGPLv3+)',
        'Programming Language :: Python :: 3',
        'Topic :: Scientific/Engineering :: Artificial Intelligence',
    ],
    license = 'LGPL-3+',
    platforms = 'any'
)
