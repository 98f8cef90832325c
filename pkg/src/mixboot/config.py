"""Flat key=value experiment configuration with dotted section names.

The format is line-oriented and diff-friendly: one `key = value` per
line, `#` comment lines, later duplicates win.  Canonical serialization
(sorted keys, repr floats) backs the config hash used for provenance.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, fields
from typing import get_args, get_origin, get_type_hints

from .errors import ConfigError
from .trainer import TrainConfig

ESTIMATOR_KINDS = ("single", "ensemble", "mc_dropout", "tta")
REPORT_FORMATS = ("csv", "json")
REQUIRED_KEYS = ("method",)


@dataclass(frozen=True)
class EstimatorConfig:
    """Which uncertainty estimator to run and its knobs."""

    kind: str = "single"
    ensemble_size: int = 5
    passes: int = 20
    repeats: int = 8
    tau_inv: float = 0.0
    policy_noise_sigma: float = 0.1
    policy_scale_jitter: float = 0.0

    def __post_init__(self):
        checks = [
            (self.kind in ESTIMATOR_KINDS,
             f"estimator.kind must be one of {ESTIMATOR_KINDS}"),
            (self.ensemble_size >= 1, "estimator.ensemble_size must be >= 1"),
            (self.passes >= 1, "estimator.passes must be >= 1"),
            (self.repeats >= 0, "estimator.repeats must be nonnegative"),
            (self.tau_inv >= 0.0, "estimator.tau_inv must be nonnegative"),
            (self.policy_noise_sigma >= 0.0,
             "estimator.policy.noise_sigma must be nonnegative"),
            (self.policy_scale_jitter >= 0.0,
             "estimator.policy.scale_jitter must be nonnegative"),
        ]
        for ok, msg in checks:
            if not ok:
                raise ConfigError(msg)


@dataclass(frozen=True)
class AnalysisConfig:
    bin_width: float = 0.1
    fractions: tuple[float, ...] = (0.0, 0.1, 0.2, 0.3, 0.4, 0.5)
    thresholds: tuple[float, ...] = (0.05, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7)

    def __post_init__(self):
        if not 0.0 < self.bin_width <= 1.0:
            raise ConfigError("analysis.bin_width must lie in (0, 1]")
        if len(self.fractions) == 0 or len(self.thresholds) == 0:
            raise ConfigError("analysis.fractions and analysis.thresholds must be nonempty")


@dataclass(frozen=True)
class ExperimentConfig:
    train: TrainConfig
    estimator: EstimatorConfig
    analysis: AnalysisConfig
    output_dir: str = "run"
    formats: tuple[str, ...] = ("csv", "json")

    def __post_init__(self):
        if len(self.formats) == 0:
            raise ConfigError("output.formats must be nonempty")
        for f in self.formats:
            if f not in REPORT_FORMATS:
                raise ConfigError(f"output.formats entry {f!r} not in {REPORT_FORMATS}")


def _registry() -> dict[str, tuple[str, str, type]]:
    """Maps dotted config key -> (section, dataclass field, python type)."""
    reg = {}
    train_hints = get_type_hints(TrainConfig)
    for f in fields(TrainConfig):
        reg[f.name] = ("train", f.name, train_hints[f.name])
    est_hints = get_type_hints(EstimatorConfig)
    for f in fields(EstimatorConfig):
        key = f.name
        if key.startswith("policy_"):
            key = "policy." + key[len("policy_"):]
        reg["estimator." + key] = ("estimator", f.name, est_hints[f.name])
    ana_hints = get_type_hints(AnalysisConfig)
    for f in fields(AnalysisConfig):
        reg["analysis." + f.name] = ("analysis", f.name, ana_hints[f.name])
    reg["output.dir"] = ("output", "output_dir", str)
    reg["output.formats"] = ("output", "formats", tuple[str, ...])
    return reg


_REGISTRY = _registry()
_TRUE_WORDS = ("true", "1", "yes", "on")
_FALSE_WORDS = ("false", "0", "no", "off")


def _convert(key: str, raw: str, typ):
    if typ is str:
        return raw
    if typ is bool:
        low = raw.lower()
        if low in _TRUE_WORDS:
            return True
        if low in _FALSE_WORDS:
            return False
        raise ConfigError(f"{key}: expected a boolean, got {raw!r}")
    if typ is int:
        try:
            return int(raw)
        except ValueError:
            raise ConfigError(f"{key}: expected an integer, got {raw!r}") from None
    if typ is float:
        try:
            return float(raw)
        except ValueError:
            raise ConfigError(f"{key}: expected a number, got {raw!r}") from None
    if get_origin(typ) is tuple:
        item = get_args(typ)[0]
        parts = [p.strip() for p in raw.split(",") if p.strip() != ""]
        if not parts:
            raise ConfigError(f"{key}: expected a comma-separated list, got {raw!r}")
        return tuple(_convert(key, p, item) for p in parts)
    raise ConfigError(f"{key}: unsupported value type")


def parse_pairs(text: str) -> dict[str, str]:
    """Raw key -> value strings from config text; later duplicates win."""
    pairs = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ConfigError(f"line {lineno}: expected `key = value`, got {line!r}")
        key, _, value = stripped.partition("=")
        key, value = key.strip(), value.strip()
        if not key:
            raise ConfigError(f"line {lineno}: empty key")
        pairs[key] = value
    return pairs


def config_from_pairs(pairs: dict[str, str]) -> ExperimentConfig:
    for required in REQUIRED_KEYS:
        if required not in pairs:
            raise ConfigError(f"missing required key {required!r}")
    sections: dict[str, dict] = {"train": {}, "estimator": {}, "analysis": {}, "output": {}}
    for key, raw in pairs.items():
        if key not in _REGISTRY:
            raise ConfigError(f"unknown config key {key!r}")
        section, field_name, typ = _REGISTRY[key]
        sections[section][field_name] = _convert(key, raw, typ)
    return ExperimentConfig(
        train=TrainConfig(**sections["train"]),
        estimator=EstimatorConfig(**sections["estimator"]),
        analysis=AnalysisConfig(**sections["analysis"]),
        **sections["output"],
    )


def parse_config(text: str, overrides: list[str] | None = None) -> ExperimentConfig:
    """Parse config text plus optional `key=value` override strings."""
    pairs = parse_pairs(text)
    for item in overrides or []:
        pairs.update(parse_pairs(item))
    return config_from_pairs(pairs)


def load_config(path, overrides: list[str] | None = None) -> ExperimentConfig:
    with open(path) as fh:
        return parse_config(fh.read(), overrides)


def _serialize_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, tuple):
        return ",".join(_serialize_value(v) for v in value)
    return str(value)


def config_to_pairs(config: ExperimentConfig) -> dict[str, str]:
    """Every key materialized (defaults included), canonical value strings."""
    out = {}
    for key, (section, field_name, _) in _REGISTRY.items():
        if section == "train":
            value = getattr(config.train, field_name)
        elif section == "estimator":
            value = getattr(config.estimator, field_name)
        elif section == "analysis":
            value = getattr(config.analysis, field_name)
        else:
            value = getattr(config, field_name)
        out[key] = _serialize_value(value)
    return out


def canonical_text(config: ExperimentConfig) -> str:
    pairs = config_to_pairs(config)
    return "".join(f"{k} = {pairs[k]}\n" for k in sorted(pairs))


def config_hash(config: ExperimentConfig) -> str:
    return hashlib.sha256(canonical_text(config).encode()).hexdigest()[:12]
