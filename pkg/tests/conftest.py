# Copyright 2024 The perc_ldp Developers & Contributors

# This Source Code Form is subject to the terms of the Mozilla Public
# License, v. 2.0. If a copy of the MPL was not distributed with this
# file, You can obtain one at https://mozilla.org/MPL/2.0/.

"""Main conftest.py file which defines some fixtures and configuration for the tests."""

import os

import pytest

from perc_ldp.model_analytics import ModelParams


@pytest.fixture(scope="session")
def test_dir():
    """Return the path to the tests directory."""
    return os.path.dirname(__file__)


@pytest.fixture(scope="session")
def data_dir(test_dir):
    """Return the path to the data directory."""
    return os.path.join(test_dir, "data")


@pytest.fixture(scope="session")
def model_tc100():
    """Model with ``t_c = 100`` and ``a_c = 50`` (n=1e6, p=1e-4, r=2)."""
    return ModelParams(n=10**6, p=1e-4, r=2)


@pytest.fixture(scope="session")
def model_tc25():
    """Model with ``t_c = 25`` (n=1e6, p=2e-4, r=2)."""
    return ModelParams(n=10**6, p=2e-4, r=2)


@pytest.fixture(autouse=True)
def clean_env(monkeypatch):
    """Run every test without user overrides of the numerical settings."""
    for name in list(os.environ):
        if name.startswith("PERC_LDP_"):
            monkeypatch.delenv(name)
