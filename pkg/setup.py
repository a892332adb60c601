#!/usr/bin/env python
# coding: utf-8

r"""midam's setup.py."""

from setuptools import setup

import midam


setup(name=midam.__project_name__,
      version=midam.__version__,
      description=midam.__description__,
      long_description='Multi-instance deep AUC maximization with variance-reduced stochastic pooling',
      url=midam.__url__,
      download_url=midam.__download_url__,
      author=midam.__author__,
      author_email=midam.__author_email__,
      license=midam.__license__,
      classifiers=[
          'Development Status :: 3 - Alpha',
          'Intended Audience :: Science/Research',
          'Topic :: Scientific/Engineering :: Artificial Intelligence',
          'License :: OSI Approved :: GNU General Public License v3 (GPLv3)',
          'Programming Language :: Python :: 3.7'],
      keywords='multiple instance learning AUC maximization pooling',
      packages=['midam'],
      install_requires=['numpy', 'scipy', 'scikit-learn'],
      entry_points={'console_scripts': ['midam=midam.cli:main']})
