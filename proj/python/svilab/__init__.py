"""Stochastic forward-backward solver, asymptotic covariance and diagnostics."""

from __future__ import annotations

import json
import os
from typing import Any, Mapping, Sequence

import numpy as np

from . import _core
from ._core import ConfigError, InsufficientSurvivors, OutOfChart, SvilabError

__all__ = [
    "ConfigError",
    "InsufficientSurvivors",
    "OutOfChart",
    "SvilabError",
    "canonical_config",
    "clt",
    "decay",
    "kkt",
    "ks_statistic",
    "project_feasible",
    "project_manifold",
    "regularity",
    "run",
    "saa",
    "saa_solve",
    "sfb",
    "shadow",
    "version",
]


def version() -> str:
    return _core.version()


def _text(config: str | os.PathLike | None) -> str:
    if config is None:
        return ""
    with open(config, encoding="utf-8") as fh:
        return fh.read()


def canonical_config(config=None, overrides: Mapping[str, Any] | None = None) -> str:
    return _core.canonical_config(_text(config), dict(overrides or {}))


def run(
    config: str | os.PathLike | None = None,
    overrides: Mapping[str, Any] | None = None,
    *,
    out: str | os.PathLike | None = None,
    threads: int = 0,
) -> dict:
    """Run the pipeline. Files are written only when ``out`` is given.

    ``overrides`` uses the config file keys, e.g. ``{"schedule.gamma": 0.8}``.
    """
    raw = _core.run(_text(config), dict(overrides or {}), os.fspath(out) if out else "", threads)
    return json.loads(raw)


def _single(diagnostics: Sequence[str], config, overrides, **kw) -> dict:
    merged = dict(overrides or {})
    merged["diagnostics"] = list(diagnostics)
    return run(config, merged, **kw)


def kkt(instance: str = "two_ball") -> dict:
    return json.loads(_core.kkt(instance))


def clt(config=None, overrides=None, **kw) -> dict:
    return _single(["kkt", "clt"], config, overrides, **kw)


def saa(config=None, overrides=None, **kw) -> dict:
    return _single(["kkt", "saa"], config, overrides, **kw)


def decay(config=None, overrides=None, **kw) -> dict:
    return _single(["decay"], config, overrides, **kw)


def shadow(config=None, overrides=None, **kw) -> dict:
    return _single(["shadow"], config, overrides, **kw)


def regularity(config=None, overrides=None, **kw) -> dict:
    return _single(["regularity"], config, overrides, **kw)


def sfb(instance="two_ball", iterations=10000, seed=1, c=1.0, gamma=0.75):
    """Returns (averaged iterate, last iterate)."""
    return _core.sfb(instance, iterations, seed, c, gamma)


def saa_solve(instance="two_ball", samples=1000, seed=1):
    """Returns (solution, fixed-point residual)."""
    return _core.saa(instance, samples, seed)


def project_feasible(instance: str, x) -> np.ndarray:
    return _core.project_feasible(instance, np.asarray(x, dtype=float))


def project_manifold(instance: str, x) -> np.ndarray:
    return _core.project_manifold(instance, np.asarray(x, dtype=float))


def ks_statistic(samples, mean: float, variance: float) -> float:
    return _core.ks_statistic(list(map(float, samples)), mean, variance)
