"""Experiment config documents (YAML/JSON) with strict unknown-key rejection."""

from __future__ import annotations

from dataclasses import dataclass, field

import yaml

from .loss import ErrorKind
from .problems import problem_names
from .trainer import TrainConfig

__all__ = ["ConfigError", "ExperimentConfig", "load_config", "parse_config"]


class ConfigError(ValueError):
    pass


_RUN_KEYS = {
    "problem", "alpha", "iterations", "n_f", "n_u", "sampling", "seed",
    "log_every", "error_kind", "huber_delta", "gpinn_weight", "variance_eps",
    "learning_rate",
}
_TOP_KEYS = _RUN_KEYS | {"out_dir", "alphas", "variants", "seeds"}

_VARIANTS = ("variance", "mse", "huber", "gpinn")


@dataclass
class ExperimentConfig:
    """A parsed config document: one base run plus optional comparison lists."""

    base: TrainConfig
    out_dir: str = "runs"
    alphas: list = field(default_factory=list)
    variants: list = field(default_factory=list)
    seeds: list = field(default_factory=list)

    @property
    def is_sweep(self):
        return bool(self.alphas or self.variants or len(self.seeds) > 1)

    def overrides(self):
        """Non-default base settings reused across sweep cells."""
        out = {}
        for key in ("iterations", "n_f", "sampling", "log_every",
                    "variance_eps", "learning_rate"):
            v = getattr(self.base, key)
            if v != getattr(TrainConfig("poisson"), key):
                out[key] = v
        return out


def _error_kind(doc):
    variant = doc.get("error_kind", "squared")
    delta = doc.get("huber_delta", 1.0)
    if isinstance(variant, dict):
        extra = set(variant) - {"variant", "delta"}
        if extra:
            raise ConfigError(f"unknown error_kind keys: {sorted(extra)}")
        delta = variant.get("delta", delta)
        variant = variant.get("variant", "squared")
    try:
        return ErrorKind(variant, float(delta))
    except ValueError as err:
        raise ConfigError(str(err)) from None


def parse_config(doc):
    if not isinstance(doc, dict):
        raise ConfigError("config document must be a mapping")
    unknown = set(doc) - _TOP_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    if "problem" not in doc:
        raise ConfigError("config needs a 'problem' key")
    if doc["problem"] not in problem_names():
        raise ConfigError(
            f"unknown problem {doc['problem']!r}; choose from {problem_names()}")
    try:
        base = TrainConfig(
            problem=doc["problem"],
            alpha=float(doc.get("alpha", 0.8)),
            error_kind=_error_kind(doc),
            iterations=int(doc.get("iterations", 0)),
            n_f=int(doc.get("n_f", 0)),
            n_u=int(doc.get("n_u", 0)),
            sampling=str(doc.get("sampling", "")),
            seed=int(doc.get("seed", 0)),
            log_every=int(doc.get("log_every", 0)),
            gpinn_weight=float(doc.get("gpinn_weight", 0.0)),
            variance_eps=float(doc.get("variance_eps", 1e-12)),
            learning_rate=float(doc.get("learning_rate", 0.001)),
        )
    except (TypeError, ValueError) as err:
        raise ConfigError(f"invalid config value: {err}") from None
    if not 0.0 <= base.alpha <= 1.0:
        raise ConfigError(f"alpha must lie in [0, 1], got {base.alpha}")
    alphas = [float(a) for a in doc.get("alphas", [])]
    if any(not 0.0 <= a <= 1.0 for a in alphas):
        raise ConfigError("every alpha in 'alphas' must lie in [0, 1]")
    variants = [str(v) for v in doc.get("variants", [])]
    bad = [v for v in variants if v not in _VARIANTS]
    if bad:
        raise ConfigError(f"unknown variants {bad}; choose from {_VARIANTS}")
    seeds = [int(s) for s in doc.get("seeds", [])]
    return ExperimentConfig(
        base=base,
        out_dir=str(doc.get("out_dir", "runs")),
        alphas=alphas,
        variants=variants,
        seeds=seeds,
    )


def load_config(path):
    try:
        with open(path) as fh:
            doc = yaml.safe_load(fh)
    except yaml.YAMLError as err:
        raise ConfigError(f"cannot parse {path}: {err}") from None
    return parse_config(doc)
