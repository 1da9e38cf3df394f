# Copyright 2024 The perc_ldp Developers & Contributors

# This Source Code Form is subject to the terms of the Mozilla Public
# License, v. 2.0. If a copy of the MPL was not distributed with this
# file, You can obtain one at https://mozilla.org/MPL/2.0/.

"""Define tests for the argument types and the writers of the CLI."""

import argparse
import io
import json
import os

import pandas as pd
import pytest

from perc_ldp.cli.utils.arguments import (
    parse_endpoint,
    parse_grid,
    parse_int_list,
    parse_int_number,
    parse_number,
)
from perc_ldp.cli.utils.output import write_frame, write_text


def test_parse_number():
    assert parse_number("2e-4") == 2e-4
    assert parse_number("0.5") == 0.5
    for text in ("abc", "inf", "nan", ""):
        with pytest.raises(argparse.ArgumentTypeError):
            parse_number(text)


def test_parse_int_number():
    assert parse_int_number("1e6") == 10**6
    assert isinstance(parse_int_number("1e6"), int)
    assert parse_int_number("42") == 42
    with pytest.raises(argparse.ArgumentTypeError, match="integer"):
        parse_int_number("1.5")


def test_parse_grid_range():
    grid = parse_grid("0.3:1.0:0.05")
    assert len(grid) == 15
    assert grid[0] == 0.3
    assert grid[1] == 0.35
    assert grid[-1] == 1.0
    assert parse_grid("0:0.9:0.1")[3] == 0.3
    assert parse_grid("0.5:0.5:0.1") == [0.5]


def test_parse_grid_list():
    assert parse_grid("0.1,0.5") == [0.1, 0.5]
    assert parse_grid("0.7") == [0.7]


@pytest.mark.parametrize("text", ["0:1", "1:0:0.1", "0:1:0", "0:1:-0.1", "", ",", "a:b:c"])
def test_parse_grid_errors(text):
    with pytest.raises(argparse.ArgumentTypeError):
        parse_grid(text)


def test_parse_int_list():
    assert parse_int_list("1e4,1e5,1e6") == [10**4, 10**5, 10**6]
    with pytest.raises(argparse.ArgumentTypeError):
        parse_int_list("")
    with pytest.raises(argparse.ArgumentTypeError):
        parse_int_list("1e4,2.5")


def test_parse_endpoint():
    assert parse_endpoint("free") is None
    assert parse_endpoint("fixed:1.2") == 1.2
    for text in ("fixed", "fixed:", "open"):
        with pytest.raises(argparse.ArgumentTypeError):
            parse_endpoint(text)


def test_write_frame_keeps_full_precision(capsys, tmp_path):
    frame = pd.DataFrame({"x": [1.0 / 3.0], "k": [7]})
    write_frame(frame)
    out = capsys.readouterr().out
    assert pd.read_csv(io.StringIO(out))["x"][0] == 1.0 / 3.0

    path = os.path.join(tmp_path, "frame.csv")
    write_frame(frame, path)
    with open(path, "r") as f:
        assert f.read() == out


def test_write_text(capsys, tmp_path):
    write_text(json.dumps({"a": 1}), "-")
    assert json.loads(capsys.readouterr().out) == {"a": 1}

    path = os.path.join(tmp_path, "report.json")
    write_text("{}", path)
    with open(path, "r") as f:
        assert f.read() == "{}\n"
