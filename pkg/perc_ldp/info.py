# Copyright 2024 The perc_ldp Developers & Contributors

# This Source Code Form is subject to the terms of the Mozilla Public
# License, v. 2.0. If a copy of the MPL was not distributed with this
# file, You can obtain one at https://mozilla.org/MPL/2.0/.

"""Module for storing package metadata."""


__version__ = "0.3.0"
__packagename__ = "perc_ldp"
__author__ = "The perc_ldp Developers and Contributors"
