# coding: utf-8

r"""midam __init__.py."""

__project_name__ = "midam"
__description__ = "Multi-instance deep AUC maximization with variance-reduced stochastic pooling"

__version__ = "2026.10.19"
__author__ = "Guillaume Florent"
__author_email__ = "florentsailing@gmail.com"
__license__ = 'GPL v3'
__url__ = "https://github.com/ydeos/midam"
__download_url__ = "https://github.com/ydeos/midam/releases/tag/" + __version__
