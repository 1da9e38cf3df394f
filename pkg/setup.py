#!/usr/bin/env python

# Copyright 2024 The perc_ldp Developers & Contributors

# This Source Code Form is subject to the terms of the Mozilla Public
# License, v. 2.0. If a copy of the MPL was not distributed with this
# file, You can obtain one at https://mozilla.org/MPL/2.0/.

"""`Setup.py` for perc_ldp."""

from os import path as op
from setuptools import setup

from perc_ldp.info import (
    __version__,
    __packagename__
)


def main():
    """Main function of perc_ldp ``setup.py``"""
    root_dir = op.abspath(op.dirname(__file__))

    version = None
    if op.isfile(op.join(root_dir, __packagename__, "VERSION")):
        with open(op.join(root_dir, __packagename__, "VERSION")) as vfile:
            version = vfile.readline().strip()

    if version is None:
        version = __version__

    setup(
        name="perc_ldp",
        version=version,
    )


if __name__ == "__main__":
    main()
