# Copyright 2024 The perc_ldp Developers & Contributors

# This Source Code Form is subject to the terms of the Mozilla Public
# License, v. 2.0. If a copy of the MPL was not distributed with this
# file, You can obtain one at https://mozilla.org/MPL/2.0/.

"""Large deviations of r-neighbour bootstrap percolation on G(n, p)."""

from perc_ldp.info import __version__
