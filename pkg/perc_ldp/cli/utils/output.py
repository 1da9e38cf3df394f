# Copyright 2024 The perc_ldp Developers & Contributors

# This Source Code Form is subject to the terms of the Mozilla Public
# License, v. 2.0. If a copy of the MPL was not distributed with this
# file, You can obtain one at https://mozilla.org/MPL/2.0/.

"""Writers for the CSV and JSON files produced by `perc_ldp`."""

import sys
from typing import Optional

import pandas as pd

FLOAT_FORMAT = "%.17g"


def write_frame(frame: pd.DataFrame, path: Optional[str] = None) -> None:
    """Write ``frame`` as CSV at full double precision.

    Args:
        frame (pandas.DataFrame): Table to write.
        path (str): Output file; ``None`` or ``-`` writes to stdout.
    """
    if path is None or path == "-":
        frame.to_csv(sys.stdout, index=False, float_format=FLOAT_FORMAT)
    else:
        frame.to_csv(path, index=False, float_format=FLOAT_FORMAT)


def write_text(text: str, path: Optional[str] = None) -> None:
    """Write a JSON document (or any text) to ``path`` or stdout."""
    if path is None or path == "-":
        sys.stdout.write(text + "\n")
    else:
        with open(path, "w") as f:
            f.write(text + "\n")
