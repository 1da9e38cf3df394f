# Copyright 2024 The perc_ldp Developers & Contributors

# This Source Code Form is subject to the terms of the Mozilla Public
# License, v. 2.0. If a copy of the MPL was not distributed with this
# file, You can obtain one at https://mozilla.org/MPL/2.0/.

"""Exceptions raised by perc_ldp."""


class PercLdpError(Exception):
    """Base class of the errors raised by numerical guards."""


class StateSpaceTooLargeError(PercLdpError):
    """The exact dynamic program would exceed its state budget.

    Args:
        states (int): Number of (step, S) states requested.
        limit (int): Configured budget.
        suggested_cap (int): Largest S cap that fits the budget for the
            requested horizon.
    """

    def __init__(self, states: int, limit: int, suggested_cap: int):
        self.states = states
        self.limit = limit
        self.suggested_cap = suggested_cap
        # results computed before the guard tripped, if any
        self.partial: list = []
        super().__init__(
            f"Exact DP needs {states} states which exceeds the limit of {limit}; "
            f"try a cap of at most {suggested_cap}"
        )


class EnumerationLimitError(PercLdpError):
    """The brute force search would enumerate too many subsets."""

    def __init__(self, subsets: int, limit: int):
        self.subsets = subsets
        self.limit = limit
        super().__init__(
            f"Brute force search needs {subsets} subsets which exceeds the limit of {limit}"
        )


class InfeasibleProblemError(ValueError):
    """The constraints of a trajectory problem admit no solution."""
