# Copyright 2024 The perc_ldp Developers & Contributors

# This Source Code Form is subject to the terms of the Mozilla Public
# License, v. 2.0. If a copy of the MPL was not distributed with this
# file, You can obtain one at https://mozilla.org/MPL/2.0/.

"""Define tests for the perc_ldp CLI script."""

import io
import json
import os

import numpy as np
import pandas as pd
import pytest

from perc_ldp.info import __version__


def _read_csv(text):
    return pd.read_csv(io.StringIO(text))


def test_version(script_runner):
    ret = script_runner.run(["perc_ldp", "--version"])
    assert ret.success
    assert ret.stdout.strip() == __version__


def test_rate_single_point(script_runner):
    ret = script_runner.run(["perc_ldp", "rate", "--r", "2", "--alpha", "0", "--beta", "1"])
    assert ret.success
    assert ret.stderr == ""
    frame = _read_csv(ret.stdout)
    assert list(frame.columns) == ["alpha", "beta", "r", "phi", "xi", "branch", "valid"]
    assert frame.loc[0, "xi"] == pytest.approx(-0.5)
    assert frame.loc[0, "branch"] == "AboveAlpha"
    assert bool(frame.loc[0, "valid"])


def test_rate_grid(script_runner, tmp_path):
    output = os.path.join(tmp_path, "rate.csv")
    cmd = [
        "perc_ldp",
        "rate",
        "--alpha-grid",
        "0:0.9:0.1",
        "--beta-grid",
        "0.3:1:0.05",
        "-o",
        output,
    ]
    ret = script_runner.run(cmd)
    assert ret.success
    assert ret.stderr == ""
    frame = pd.read_csv(output)
    assert len(frame) == 10 * 15
    valid = frame["valid"].astype(bool)
    assert valid.any() and not valid.all()
    assert (frame.loc[valid, "xi"] <= 0).all()
    assert frame.loc[~valid, "xi"].isna().all()
    assert (frame.loc[~valid, "beta"] <= frame.loc[~valid, "phi"]).all()


@pytest.mark.parametrize(
    "arguments",
    [
        ["rate", "--alpha-grid", "0:1", "--beta", "1"],
        ["rate", "--alpha", "0.5"],
        ["rate", "--alpha", "abc", "--beta", "1"],
        ["rate", "--alpha", "1.2", "--beta", "1"],
        ["trajectory", "--alpha", "0.5"],
        ["trajectory", "--alpha", "0.5", "--beta", "0.9", "--cap", "0.8"],
        ["chain", "--n", "1e4", "--p", "1e-3"],
        ["dp", "--n", "1e4", "--p", "1.5", "--a", "3"],
    ],
)
def test_usage_errors(script_runner, arguments):
    ret = script_runner.run(["perc_ldp", *arguments])
    assert not ret.success
    assert ret.returncode == 2
    assert ret.stderr != ""


def test_trajectory(script_runner):
    cmd = [
        "perc_ldp",
        "trajectory",
        "--alpha",
        "0.8",
        "--beta",
        "0.6",
        "--m",
        "64",
        "--resolution",
        "5e-4",
    ]
    ret = script_runner.run(cmd)
    assert ret.success
    assert ret.stderr == ""
    frame = _read_csv(ret.stdout)
    assert list(frame.columns) == ["x", "f_star", "f_opt", "gap", "sigma"]
    assert len(frame) == 65
    assert frame["f_opt"].iloc[0] == pytest.approx(0.4)
    assert frame["gap"].iloc[0] == pytest.approx(0.0, abs=1e-12)
    assert np.allclose(frame["gap"], (frame["f_opt"] - frame["f_star"]).abs())
    assert frame["f_opt"].is_monotonic_increasing
    assert frame["f_opt"].iloc[-1] >= 0.6 - 1e-9
    assert pd.isna(frame["sigma"].iloc[-1])


@pytest.mark.parametrize(
    "alpha, beta, r", [("0.8", "0.6", "2"), ("0.5", "1", "2"), ("0.6", "0.9", "3")]
)
def test_trajectory_defaults_meet_tolerance(script_runner, alpha, beta, r):
    cmd = ["perc_ldp", "trajectory", "--alpha", alpha, "--beta", beta, "--r", r]
    ret = script_runner.run(cmd)
    assert ret.success
    frame = _read_csv(ret.stdout)
    assert len(frame) == 257
    assert frame["gap"].max() <= 5e-3


def test_bound(script_runner):
    ret = script_runner.run(["perc_ldp", "bound", "--r", "2", "--n", "1e6", "--vartheta", "100"])
    assert ret.success
    assert ret.stderr == ""
    report = json.loads(ret.stdout)
    assert report["bound"] == pytest.approx(21.715, abs=1e-3)
    assert report["t_c"] == pytest.approx(400.0)


def test_bound_first_moment(script_runner):
    cmd = [
        "perc_ldp",
        "bound",
        "--n",
        "1e5",
        "--vartheta",
        "60",
        "--delta",
        "0.3",
        "--first-moment",
    ]
    ret = script_runner.run(cmd)
    assert ret.success
    report = json.loads(ret.stdout)
    assert report["k"] == 11
    assert report["log_bound"] < 0


def test_bound_sanity(script_runner):
    cmd = ["perc_ldp", "bound", "--n", "30", "--vartheta", "1.5"]
    cmd += ["--sanity", "4", "--size-limit", "2"]
    ret = script_runner.run(cmd + ["--seed", "3"])
    assert ret.success
    report = json.loads(ret.stdout)
    assert len(report["sizes"]) == 4
    assert report["seed"] == 3
    assert report["reference"] == 2
    assert report["below_reference"] == 0
    again = script_runner.run(cmd + ["--seed", "3"])
    assert json.loads(again.stdout)["sizes"] == report["sizes"]


def test_simulate_is_reproducible(script_runner, tmp_path):
    outputs = []
    for threads in ("1", "2"):
        output = os.path.join(tmp_path, f"sizes_{threads}.csv")
        cmd = [
            "perc_ldp",
            "simulate",
            "--n",
            "200",
            "--p",
            "0.02",
            "--a",
            "3",
            "--runs",
            "50",
            "--seed",
            "7",
            "--threads",
            threads,
            "-o",
            output,
        ]
        ret = script_runner.run(cmd)
        assert ret.success
        assert ret.stderr == ""
        with open(output, "rb") as f:
            outputs.append(f.read())
    assert outputs[0] == outputs[1]
    frame = pd.read_csv(io.BytesIO(outputs[0]))
    assert list(frame.columns) == ["final_size"]
    assert len(frame) == 50
    assert (frame["final_size"] >= 3).all()


def test_simulate_seed_from_environment(script_runner, monkeypatch):
    monkeypatch.setenv("PERC_LDP_SEED", "13")
    cmd = ["perc_ldp", "simulate", "--n", "100", "--p", "0.04", "--a", "4", "--runs", "20"]
    first = script_runner.run(cmd)
    second = script_runner.run(cmd)
    assert first.success and second.success
    assert first.stdout == second.stdout


def test_chain_from_config(script_runner, data_dir, tmp_path):
    output = os.path.join(tmp_path, "chain.json")
    cmd = ["perc_ldp", "chain", "--config", os.path.join(data_dir, "chain_config.json"), "-o", output]
    ret = script_runner.run(cmd)
    assert ret.success
    assert ret.stderr == ""
    with open(output, "r") as f:
        report = json.load(f)
    assert report["seed"] == 11
    assert report["runs"] == 200
    assert report["params"]["n"] == 100000
    assert report["params"]["a"] == 10
    assert report["moments"]["runs"] == 200


def test_chain_config_seed_is_overridden(script_runner, data_dir):
    config = os.path.join(data_dir, "chain_config.json")
    ret = script_runner.run(["perc_ldp", "chain", "--config", config, "--seed", "5"])
    assert ret.success
    assert json.loads(ret.stdout)["seed"] == 5


def test_chain_config_for_other_command(script_runner, data_dir):
    config = os.path.join(data_dir, "chain_config.json")
    ret = script_runner.run(["perc_ldp", "rate", "--config", config])
    assert ret.returncode == 2


def test_chain_saved_config_replays(script_runner, tmp_path):
    saved = os.path.join(tmp_path, "saved.json")
    first = os.path.join(tmp_path, "first.json")
    second = os.path.join(tmp_path, "second.json")
    cmd = [
        "perc_ldp",
        "chain",
        "--n",
        "1e4",
        "--p",
        "1e-3",
        "--a",
        "20",
        "--runs",
        "100",
        "--seed",
        "3",
        "--save-config",
        saved,
        "-o",
        first,
    ]
    assert script_runner.run(cmd).success
    assert script_runner.run(["perc_ldp", "chain", "--config", saved, "-o", second]).success
    with open(first, "r") as f1, open(second, "r") as f2:
        assert f1.read() == f2.read()
    with open(saved, "r") as f:
        config = json.load(f)
    assert config["command"] == "chain"
    assert config["seed"] == 3
    assert config["params"]["a"] == 20


def test_chain_alpha_reports_clt(script_runner):
    cmd = [
        "perc_ldp",
        "chain",
        "--n",
        "1e6",
        "--p",
        "1e-4",
        "--alpha",
        "0.5",
        "--runs",
        "500",
        "--seed",
        "1",
    ]
    ret = script_runner.run(cmd)
    assert ret.success
    report = json.loads(ret.stdout)
    assert report["params"]["a"] == 25
    assert report["clt"]["mean"] == pytest.approx(29.289, abs=1e-3)
    assert report["moments"]["mean"] == pytest.approx(report["clt"]["mean"], rel=0.1)


def test_chain_survival(script_runner):
    cmd = [
        "perc_ldp",
        "chain",
        "--n",
        "1e6",
        "--p",
        "2e-4",
        "--a",
        "6",
        "--t-target",
        "25",
        "--runs",
        "2000",
        "--seed",
        "4",
    ]
    ret = script_runner.run(cmd)
    assert ret.success
    report = json.loads(ret.stdout)
    assert report["survival"]["t"] == 25
    assert 0 < report["survival"]["p_hat"] < 1
    assert "moments" not in report


def test_chain_fraction(script_runner):
    cmd = [
        "perc_ldp",
        "chain",
        "--n",
        "1e4",
        "--p",
        "1e-3",
        "--alpha",
        "1.5",
        "--runs",
        "100",
        "--fraction",
        "0.5",
        "--seed",
        "2",
    ]
    ret = script_runner.run(cmd)
    assert ret.success
    report = json.loads(ret.stdout)
    assert report["fraction_at_least"]["threshold"] == 5000
    assert report["fraction_at_least"]["p_hat"] >= 0.9
    assert "clt" not in report


def test_chain_trace(script_runner):
    cmd = ["perc_ldp", "chain", "--n", "1e6", "--p", "1e-4", "--a", "25", "--trace", "--seed", "8"]
    ret = script_runner.run(cmd)
    assert ret.success
    frame = _read_csv(ret.stdout)
    assert list(frame.columns) == ["t", "S_t"]
    assert frame["S_t"].iloc[0] == 0
    assert frame["S_t"].is_monotonic_increasing


def test_dp(script_runner):
    cmd = ["perc_ldp", "dp", "--n", "2000", "--p", "0.005", "--a", "8", "--horizon", "60"]
    ret = script_runner.run(cmd)
    assert ret.success
    assert ret.stderr == ""
    frame = _read_csv(ret.stdout)
    assert list(frame.columns) == ["t", "survival", "log_survival", "dist"]
    assert len(frame) == 62
    assert (frame["survival"].iloc[:9] == 1.0).all()

    ret = script_runner.run([*cmd, "--json"])
    assert ret.success
    record = json.loads(ret.stdout)
    assert record["params"]["horizon"] == 60
    assert sum(record["dist"]) + record["mass_censored"] == pytest.approx(1.0, abs=1e-10)


def test_dp_state_guard(script_runner, monkeypatch):
    monkeypatch.setenv("PERC_LDP_DP_STATE_LIMIT", "1000")
    ret = script_runner.run(["perc_ldp", "dp", "--n", "1e6", "--p", "1e-4", "--a", "10"])
    assert ret.returncode == 1
    assert "ERROR" in ret.stderr
    assert "cap" in ret.stderr


def test_exponent(script_runner):
    cmd = ["perc_ldp", "exponent", "--alpha", "0.5", "--beta", "1", "--n-sequence", "1e4"]
    ret = script_runner.run(cmd)
    assert ret.success
    assert ret.stderr == ""
    frame = _read_csv(ret.stdout)
    assert frame["n"].tolist() == [10**4]
    assert frame.loc[0, "exponent"] < 0
    assert frame.loc[0, "xi"] == pytest.approx(-0.0767, abs=1e-4)


def test_exponent_guard_writes_partial_results(script_runner, monkeypatch, tmp_path):
    monkeypatch.setenv("PERC_LDP_DP_STATE_LIMIT", "1e5")
    output = os.path.join(tmp_path, "exponent.csv")
    cmd = [
        "perc_ldp",
        "exponent",
        "--alpha",
        "0.5",
        "--beta",
        "1",
        "--n-sequence",
        "1e4,1e5",
        "-o",
        output,
    ]
    ret = script_runner.run(cmd)
    assert ret.returncode == 1
    assert "WARNING" in ret.stderr
    frame = pd.read_csv(output)
    assert frame["n"].tolist() == [10**4]


def test_claims(script_runner):
    cmd = ["perc_ldp", "claims", "--alpha-grid", "0.3,0.6", "--beta-grid", "0.5,0.8,1"]
    ret = script_runner.run(cmd)
    assert ret.success
    assert ret.stderr == ""
    report = json.loads(ret.stdout)
    assert report["all_hold"] is True
    assert report["r"] == 2
