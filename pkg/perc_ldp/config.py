# Copyright 2024 The perc_ldp Developers & Contributors

# This Source Code Form is subject to the terms of the Mozilla Public
# License, v. 2.0. If a copy of the MPL was not distributed with this
# file, You can obtain one at https://mozilla.org/MPL/2.0/.

"""Library-wide defaults and experiment configuration records.

Defaults live in :class:`Settings`. Every field can be overridden through an
environment variable named ``PERC_LDP_<FIELD>`` (upper case), e.g.
``PERC_LDP_CAP=4``. The seed fallback used by the command line is read from
``PERC_LDP_SEED``.
"""

import dataclasses
import json
import os
from dataclasses import dataclass, field
from typing import Any, Optional


ENV_PREFIX = "PERC_LDP_"
SEED_ENV_VAR = "PERC_LDP_SEED"


@dataclass(frozen=True)
class Settings:
    """Numerical defaults shared by the modules.

    Attributes:
        cap: Trajectory cap C, in units of t_c. Used for the chain horizon,
            the exact DP truncation and the variational value lattice.
        phi_xtol: Absolute tolerance of the bisection solving for phi.
        phi_maxiter: Iteration budget of that bisection.
        pmf_cutoff: Binomial tail mass dropped per DP transition.
        dp_state_limit: Largest horizon x cap product the exact DP accepts.
        subset_limit: Largest number of subsets the brute force enumerates.
        block_size: Monte Carlo runs per independently seeded block.
        lattice_divisor: The default lattice step of the maximizer is 1 / lattice_divisor.
        slope_factor: Default slope cap of the maximizer, in multiples of r.
    """

    cap: float = 3.0
    phi_xtol: float = 1e-14
    phi_maxiter: int = 200
    pmf_cutoff: float = 1e-18
    dp_state_limit: int = 10**8
    subset_limit: int = 10**8
    block_size: int = 1024
    lattice_divisor: int = 2000
    slope_factor: float = 2.0


def get_settings(environ: Optional[dict] = None) -> Settings:
    """Return the default settings, overridden by ``PERC_LDP_*`` variables.

    Args:
        environ (dict): Mapping to read overrides from (default: ``os.environ``).

    Returns:
        Settings: The effective settings.

    Raises:
        ValueError: If an override cannot be converted to the field type.
    """
    environ = os.environ if environ is None else environ
    overrides = {}
    for f in dataclasses.fields(Settings):
        raw = environ.get(f"{ENV_PREFIX}{f.name.upper()}")
        if raw is None:
            continue
        try:
            # Integers may be given in scientific notation (1e8)
            overrides[f.name] = int(float(raw)) if f.type in (int, "int") else float(raw)
        except ValueError:
            raise ValueError(f"Invalid value {raw!r} for {ENV_PREFIX}{f.name.upper()}")
    return dataclasses.replace(Settings(), **overrides)


def seed_from_env(environ: Optional[dict] = None) -> Optional[int]:
    """Return the integer seed stored in ``PERC_LDP_SEED``, if any."""
    environ = os.environ if environ is None else environ
    raw = environ.get(SEED_ENV_VAR)
    if raw is None or raw.strip() == "":
        return None
    try:
        return int(raw)
    except ValueError:
        raise ValueError(f"{SEED_ENV_VAR} must be an integer, got {raw!r}")


@dataclass
class ExperimentConfig:
    """Parameters of one command-line experiment.

    A run is fully determined by ``(command, params, seed)``. The record
    round-trips through JSON without loss: parameter values must be JSON
    scalars or lists of them.

    Attributes:
        command: Name of the sub-command (``rate``, ``chain``, ...).
        params: Mapping from parameter name to value.
        seed: Master seed, or ``None`` for deterministic commands.
    """

    command: str
    params: dict[str, Any] = field(default_factory=dict)
    seed: Optional[int] = None

    def to_json(self) -> str:
        return json.dumps(dataclasses.asdict(self), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "ExperimentConfig":
        data = json.loads(text)
        if "command" not in data:
            raise ValueError("Experiment configuration lacks a 'command' entry")
        return cls(
            command=data["command"],
            params=dict(data.get("params", {})),
            seed=data.get("seed"),
        )

    def save(self, path: str) -> None:
        with open(path, "w") as f:
            f.write(self.to_json())

    @classmethod
    def load(cls, path: str) -> "ExperimentConfig":
        with open(path, "r") as f:
            return cls.from_json(f.read())
