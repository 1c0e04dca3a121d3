"""Candidate enumeration and the core-metric vectors fed to the learners.

God Class vectors have six components, Feature Envy vectors seven; the order
is frozen (see the *_FEATURE_NAMES tuples) so persisted models stay portable.
Instances serialize to CSV with a mandatory header row naming the schema's
feature columns.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from enum import Enum

from .code_model import (
    CandidatePair,
    SystemModel,
    enumerate_fe_candidates,
)
from .config import DetectorConfig
from .detectors import (
    ConceptCluster,
    MoveMethodReport,
    associated_data_class_count,
    data_classes,
    jdeodorant_extract_class,
    jdeodorant_move_method,
)
from .errors import UnknownEntityError
from .history import ChangeHistory, class_cochange_ratio, method_cochange_ratio
from .metrics import (
    ClassStructuralProfile,
    ThresholdSet,
    class_profile,
    compute_threshold_set,
    incode_metrics,
    jaccard_entity_class,
)

__all__ = [
    "FeatureSchema",
    "FeatureVector",
    "Instance",
    "NormStats",
    "SystemContext",
    "build_system_context",
    "enumerate_fe_candidates",
    "god_class_features",
    "feature_envy_features",
    "extract_god_class_instances",
    "extract_feature_envy_instances",
    "standardize_fit",
    "standardize_apply",
    "write_instances",
    "read_instances",
]


class FeatureSchema(str, Enum):
    GOD_CLASS_6 = "GOD_CLASS_6"
    FEATURE_ENVY_7 = "FEATURE_ENVY_7"


GOD_CLASS_FEATURE_NAMES = (
    "data_class_count",
    "is_controller",
    "nmd_nad_over_threshold",
    "lcom5_over_threshold",
    "class_cochange_ratio",
    "concept_count",
)

FEATURE_ENVY_FEATURE_NAMES = (
    "atfd",
    "laa",
    "fdp",
    "method_cochange_ratio",
    "access_ratio",
    "distance_ratio",
    "move_suggested",
)

_SCHEMA_NAMES = {
    FeatureSchema.GOD_CLASS_6: GOD_CLASS_FEATURE_NAMES,
    FeatureSchema.FEATURE_ENVY_7: FEATURE_ENVY_FEATURE_NAMES,
}

PAIR_SEPARATOR = "->"


def feature_names(schema: FeatureSchema) -> tuple[str, ...]:
    return _SCHEMA_NAMES[schema]


@dataclass(frozen=True)
class FeatureVector:
    values: tuple[float, ...]
    schema: FeatureSchema

    def __post_init__(self):
        expected = len(_SCHEMA_NAMES[self.schema])
        if len(self.values) != expected:
            raise ValueError(f"{self.schema.value} expects {expected} values, got {len(self.values)}")
        if not all(math.isfinite(v) for v in self.values):
            raise ValueError("feature values must be finite")


@dataclass(frozen=True)
class Instance:
    entity: str | CandidatePair
    features: FeatureVector
    label: int | None = None


def entity_key(entity: str | CandidatePair) -> str:
    if isinstance(entity, CandidatePair):
        return f"{entity.method_id}{PAIR_SEPARATOR}{entity.envied_class}"
    return entity


def parse_entity_key(key: str, schema: FeatureSchema) -> str | CandidatePair:
    if schema is FeatureSchema.FEATURE_ENVY_7:
        method_id, _, envied = key.rpartition(PAIR_SEPARATOR)
        return CandidatePair(method_id, envied)
    return key


# ---------------------------------------------------------------------------
# Shared per-system context
# ---------------------------------------------------------------------------


@dataclass
class SystemContext:
    """Everything the extractors need, computed once per system."""

    model: SystemModel
    history: ChangeHistory
    config: DetectorConfig
    profiles: dict[str, ClassStructuralProfile]
    thresholds: ThresholdSet
    data_class_names: set[str]
    concepts: dict[str, list[ConceptCluster]]
    candidates: list[CandidatePair]
    move_report: MoveMethodReport


def build_system_context(
    model: SystemModel, history: ChangeHistory, config: DetectorConfig = DetectorConfig()
) -> SystemContext:
    profiles = {name: class_profile(name, model, config.controller_lexicon) for name in model.classes}
    thresholds = compute_threshold_set(model, config.controller_lexicon, config.threshold_policy, profiles)
    candidates = enumerate_fe_candidates(model)
    return SystemContext(
        model=model,
        history=history,
        config=config,
        profiles=profiles,
        thresholds=thresholds,
        data_class_names=data_classes(profiles, thresholds),
        concepts=jdeodorant_extract_class(model, config.merge_threshold, config.min_concept_size),
        candidates=candidates,
        move_report=jdeodorant_move_method(model, candidates),
    )


def _kronecker(flag: bool) -> float:
    return 1.0 if flag else 0.0


def _capped_ratio(numerator: float, denominator: float, cap: float) -> float:
    if denominator == 0:
        return numerator * cap
    return numerator / denominator


def _god_class_vector(class_name: str, ctx: SystemContext) -> FeatureVector:
    profile = ctx.profiles[class_name]
    return FeatureVector(
        values=(
            float(associated_data_class_count(class_name, ctx.model, ctx.data_class_names)),
            _kronecker(profile.is_controller),
            (profile.nmd + profile.nad) / ctx.thresholds.nmd_nad_threshold,
            profile.lcom5 / ctx.thresholds.lcom_threshold,
            class_cochange_ratio(class_name, ctx.history),
            float(len(ctx.concepts[class_name])),
        ),
        schema=FeatureSchema.GOD_CLASS_6,
    )


def _feature_envy_vector(pair: CandidatePair, ctx: SystemContext) -> FeatureVector:
    model = ctx.model
    method = model.method(pair.method_id)
    atfd, laa, fdp = incode_metrics(pair.method_id, pair.envied_class, model)
    envied_accesses = 0
    own_accesses = 0
    for access in method.resolved_accesses():
        cls = access.target.partition("#")[0]
        if cls == pair.envied_class:
            envied_accesses += access.count
        elif cls == method.owner:
            own_accesses += access.count
    for call in method.resolved_calls():
        cls = call.target.partition("#")[0]
        if cls == pair.envied_class:
            envied_accesses += call.count
        elif cls == method.owner:
            own_accesses += call.count
    dist_envied = jaccard_entity_class(pair.method_id, pair.envied_class, model)
    dist_own = jaccard_entity_class(pair.method_id, method.owner, model)
    cap = ctx.config.cochange_cap
    return FeatureVector(
        values=(
            float(atfd),
            laa,
            float(fdp),
            method_cochange_ratio(pair.method_id, pair.envied_class, ctx.history, cap),
            _capped_ratio(envied_accesses, own_accesses, cap),
            _capped_ratio(dist_envied, dist_own, cap),
            _kronecker(ctx.move_report.suggested(pair)),
        ),
        schema=FeatureSchema.FEATURE_ENVY_7,
    )


def god_class_features(
    class_name: str,
    model: SystemModel,
    history: ChangeHistory,
    config: DetectorConfig = DetectorConfig(),
    ctx: SystemContext | None = None,
) -> FeatureVector:
    """Six core metrics: DataClass associations, controller flag, normalized
    size and cohesion, class co-change rate, extractable concept count."""
    if ctx is None:
        ctx = build_system_context(model, history, config)
    if class_name not in ctx.profiles:
        raise UnknownEntityError(f"unknown class: {class_name!r}")
    return _god_class_vector(class_name, ctx)


def feature_envy_features(
    pair: CandidatePair,
    model: SystemModel,
    history: ChangeHistory,
    config: DetectorConfig = DetectorConfig(),
    ctx: SystemContext | None = None,
) -> FeatureVector:
    """Seven core metrics: ATFD/LAA/FDP, method co-change ratio, envied-over-own
    access and distance ratios, and the move-suggested kronecker."""
    if ctx is None:
        ctx = build_system_context(model, history, config)
    if pair not in set(ctx.candidates):
        raise ValueError(f"not a filtered candidate pair: {pair}")
    return _feature_envy_vector(pair, ctx)


def extract_god_class_instances(ctx: SystemContext, labels: set[str] | None = None) -> list[Instance]:
    instances = []
    for class_name in sorted(ctx.model.classes):
        label = None if labels is None else int(class_name in labels)
        instances.append(Instance(class_name, _god_class_vector(class_name, ctx), label))
    return instances


def extract_feature_envy_instances(
    ctx: SystemContext, labels: set[CandidatePair] | None = None
) -> list[Instance]:
    instances = []
    for pair in ctx.candidates:
        label = None if labels is None else int(pair in labels)
        instances.append(Instance(pair, _feature_envy_vector(pair, ctx), label))
    return instances


# ---------------------------------------------------------------------------
# Standardization
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class NormStats:
    """Per-dimension z-score statistics; a stored std of 0 marks a constant
    column that is only centered."""

    schema: FeatureSchema
    means: tuple[float, ...]
    stds: tuple[float, ...]

    @classmethod
    def identity(cls, schema: FeatureSchema) -> "NormStats":
        width = len(_SCHEMA_NAMES[schema])
        return cls(schema=schema, means=(0.0,) * width, stds=(1.0,) * width)


def standardize_fit(train: list[FeatureVector]) -> NormStats:
    if not train:
        raise ValueError("cannot fit normalization on an empty training set")
    schema = train[0].schema
    if any(fv.schema is not schema for fv in train):
        raise ValueError("mixed feature schemas in training set")
    n = len(train)
    width = len(train[0].values)
    means = []
    stds = []
    for j in range(width):
        column = [fv.values[j] for fv in train]
        mean = sum(column) / n
        variance = sum((v - mean) ** 2 for v in column) / n
        means.append(mean)
        stds.append(variance**0.5)
    return NormStats(schema=schema, means=tuple(means), stds=tuple(stds))


def standardize_apply(stats: NormStats, vector: FeatureVector) -> FeatureVector:
    if vector.schema is not stats.schema:
        raise ValueError(f"schema mismatch: {vector.schema} vs {stats.schema}")
    values = tuple(
        (v - mean) / std if std > 0 else (v - mean)
        for v, mean, std in zip(vector.values, stats.means, stats.stds)
    )
    return FeatureVector(values=values, schema=stats.schema)


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------


def write_instances(instances: list[Instance], schema: FeatureSchema) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(("entity", "label") + _SCHEMA_NAMES[schema])
    for inst in instances:
        if inst.features.schema is not schema:
            raise ValueError("instance schema does not match the requested schema")
        label = "" if inst.label is None else str(inst.label)
        writer.writerow([entity_key(inst.entity), label] + [repr(v) for v in inst.features.values])
    return buf.getvalue()


def read_instances(text: str) -> tuple[FeatureSchema, list[Instance]]:
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if header is None or len(header) < 3 or header[:2] != ["entity", "label"]:
        raise ValueError("instance file must start with an entity,label,... header row")
    columns = tuple(header[2:])
    for schema, names in _SCHEMA_NAMES.items():
        if columns == names:
            break
    else:
        raise ValueError(f"unknown feature columns: {columns}")
    instances = []
    for row in reader:
        if not row:
            continue
        entity = parse_entity_key(row[0], schema)
        label = None if row[1] == "" else int(row[1])
        values = tuple(float(v) for v in row[2:])
        instances.append(Instance(entity, FeatureVector(values, schema), label))
    return schema, instances
