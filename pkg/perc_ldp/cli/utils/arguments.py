# Copyright 2024 The perc_ldp Developers & Contributors

# This Source Code Form is subject to the terms of the Mozilla Public
# License, v. 2.0. If a copy of the MPL was not distributed with this
# file, You can obtain one at https://mozilla.org/MPL/2.0/.

"""Argument types shared by the `perc_ldp` sub-commands."""

import argparse
import math
from typing import Optional

import numpy as np


def parse_number(text: str) -> float:
    """Parse a float, accepting scientific notation (``2e-4``).

    Raises:
        argparse.ArgumentTypeError: If ``text`` is not a finite number.
    """
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid number: {text!r}")
    if not math.isfinite(value):
        raise argparse.ArgumentTypeError(f"number must be finite: {text!r}")
    return value


def parse_int_number(text: str) -> int:
    """Parse an integer that may be written in scientific notation (``1e6``)."""
    value = parse_number(text)
    if value != int(value):
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}")
    return int(value)


def parse_grid(text: str) -> list[float]:
    """Parse ``start:stop:step`` (both ends included) or a comma separated list.

    Examples:
        ``0.3:1.0:0.05`` gives ``0.3, 0.35, ..., 1.0``; ``0.1,0.5`` gives
        ``0.1, 0.5``.
    """
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise argparse.ArgumentTypeError(f"grid must read start:stop:step, got {text!r}")
        start, stop, step = (parse_number(part) for part in parts)
        if step <= 0 or stop < start:
            raise argparse.ArgumentTypeError(f"empty grid {text!r}")
        count = int(math.floor((stop - start) / step + 1e-9)) + 1
        # rounding removes the float noise of start + i * step
        return [float(v) for v in np.round(start + step * np.arange(count), 12)]
    values = [parse_number(part) for part in text.split(",") if part.strip()]
    if not values:
        raise argparse.ArgumentTypeError(f"empty grid {text!r}")
    return values


def parse_int_list(text: str) -> list[int]:
    """Parse a comma separated list of integers (``1e4,1e5,1e6``)."""
    values = [parse_int_number(part) for part in text.split(",") if part.strip()]
    if not values:
        raise argparse.ArgumentTypeError(f"empty list {text!r}")
    return values


def parse_endpoint(text: str) -> Optional[float]:
    """Parse ``free`` (returns ``None``) or ``fixed:<value>``."""
    if text == "free":
        return None
    if text.startswith("fixed:"):
        return parse_number(text[len("fixed:") :])
    raise argparse.ArgumentTypeError(f"endpoint must be 'free' or 'fixed:<value>', got {text!r}")
