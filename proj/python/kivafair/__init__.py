"""Python bindings for the kivafair C++ library."""

import json
import os

from ._core import (
    KivafairError,
    PosteriorDraws,
    SpikeSlabHyper,
    ate_dre,
    ate_naive,
    fit_logistic,
    fit_ols,
    generate_causal,
    generate_regression,
    group_gap,
    read_draws_csv,
    run_fair_gibbs,
    run_gibbs,
    sectors,
    synth,
)
from . import _core

__all__ = [
    "KivafairError",
    "PosteriorDraws",
    "SpikeSlabHyper",
    "ate",
    "ate_dre",
    "ate_naive",
    "fair",
    "fit_logistic",
    "fit_ols",
    "generate_causal",
    "generate_regression",
    "group_gap",
    "ingest",
    "ols",
    "read_draws_csv",
    "run_fair_gibbs",
    "run_gibbs",
    "sectors",
    "synth",
]


def _config(config, overrides):
    """Accepts a path to a JSON config file or a dict; relative paths in a
    file resolve against its directory."""
    base_dir = ""
    if isinstance(config, (str, os.PathLike)):
        base_dir = os.path.dirname(os.path.abspath(config))
        with open(config) as fh:
            config = json.load(fh)
    config = {**config, **overrides}
    return json.dumps(config), base_dir


def ingest(config, **overrides):
    return _core.ingest(*_config(config, overrides))


def ols(config, model="M1", **overrides):
    return _core.ols(*_config(config, overrides), model)


def ate(config, **overrides):
    return _core.ate(*_config(config, overrides))


def fair(config, **overrides):
    return _core.fair(*_config(config, overrides))
