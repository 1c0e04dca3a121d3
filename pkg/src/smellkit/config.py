"""Dataclass configs for detectors and system-relative thresholds."""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace

# Case-insensitive tokens that mark a class name as controller-like.
DEFAULT_CONTROLLER_LEXICON = frozenset(
    {
        "controller",
        "control",
        "manager",
        "manage",
        "process",
        "processor",
        "command",
        "handler",
        "driver",
        "scheduler",
    }
)


@dataclass(frozen=True)
class ThresholdPolicy:
    """System-relative threshold: mean + `stddev_multiplier` * population stddev,
    never below `floor`."""

    stddev_multiplier: float = 1.5
    floor: float = 1.0


@dataclass(frozen=True)
class DetectorConfig:
    """Knobs for the three detector families and the feature extractors.

    The `hist_*` and `t_*` values are the ones the tuning harness overrides
    per fold; everything else stays fixed for a run.
    """

    controller_lexicon: frozenset[str] = DEFAULT_CONTROLLER_LEXICON
    many_dataclass_threshold: int = 1
    merge_threshold: float = 0.5
    min_concept_size: int = 2
    hist_gc_alpha: float = 10.0  # percent of multi-class commits
    hist_fe_beta: float = 150.0  # "percent more" margin for method co-change
    t_atfd: int = 3
    t_laa: int = 3
    t_fdp: int = 3
    cochange_cap: float = 10.0  # zero-denominator multiplier for ratio features
    threshold_policy: ThresholdPolicy = field(default_factory=ThresholdPolicy)

    def with_updates(self, **kwargs) -> "DetectorConfig":
        return replace(self, **kwargs)

    @classmethod
    def from_dict(cls, data: dict) -> "DetectorConfig":
        kwargs = dict(data)
        if "controller_lexicon" in kwargs:
            kwargs["controller_lexicon"] = frozenset(
                token.lower() for token in kwargs["controller_lexicon"]
            )
        if "threshold_policy" in kwargs:
            kwargs["threshold_policy"] = ThresholdPolicy(**kwargs["threshold_policy"])
        return cls(**kwargs)

    @classmethod
    def from_file(cls, path) -> "DetectorConfig":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))
