# coding: utf-8

r"""Errors raised across the library."""

from typing import Optional


class ParseError(ValueError):
    r"""A malformed line in a dataset file."""
    def __init__(self, msg: str, line_number: Optional[int] = None):
        super().__init__(msg)
        self.line_number = line_number


class IntegrityError(ValueError):
    r"""Data that parses but violates a dataset invariant (e.g. mixed labels in a bag)."""


class EmptyDatasetError(ValueError):
    r"""A dataset without any bag."""


class ShapeError(ValueError):
    r"""Array dimensions that do not match the model or the dataset."""


class SplitError(ValueError):
    r"""A class too small for the requested train / validation / test partition."""


class NumericError(ArithmeticError):
    r"""A non-finite value or a value outside the domain of a function."""
    def __init__(self, msg: str, name: Optional[str] = None):
        super().__init__(msg)
        self.name = name


class UsageError(Exception):
    r"""Invalid command line usage."""
