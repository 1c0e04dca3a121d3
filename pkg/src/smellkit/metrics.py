"""Structural metrics feeding the detectors and the feature vectors.

Covers the two Jaccard distances over entity sets, the class profile
(NMD/NAD, LCOM5, accessor count, controller naming), the per-method foreign
data metrics (ATFD/LAA/FDP), and the system-relative threshold rule.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .code_model import SystemModel, entity_set, owner_of
from .config import DEFAULT_CONTROLLER_LEXICON, ThresholdPolicy
from .errors import UnknownEntityError


@dataclass(frozen=True)
class ClassStructuralProfile:
    nmd: int
    nad: int
    lcom5: float  # clamped to [0, 1]
    accessor_count: int
    is_controller: bool


@dataclass(frozen=True)
class ThresholdSet:
    """System-derived thresholds for the rule-card God Class detector."""

    nmd_nad_threshold: float
    lcom_threshold: float
    data_class_accessor_threshold: float

    def __post_init__(self):
        for name in ("nmd_nad_threshold", "lcom_threshold", "data_class_accessor_threshold"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be strictly positive")


def jaccard_entity(entity_i: str, entity_j: str, model: SystemModel) -> float:
    """Jaccard distance 1 - |Si & Sj| / |Si | Sj| between two entity sets.

    Two empty sets are maximally distant (1.0) by convention.
    """
    s_i = entity_set(entity_i, model)
    s_j = entity_set(entity_j, model)
    union = len(s_i | s_j)
    if union == 0:
        return 1.0
    return 1.0 - len(s_i & s_j) / union


def jaccard_entity_class(entity_id: str, class_name: str, model: SystemModel) -> float:
    """Jaccard distance between an entity's set and the set of the class's own
    attributes and methods (the class membership set, not a union of entity sets)."""
    s_e = entity_set(entity_id, model)
    s_c = frozenset(model.class_decl(class_name).member_ids())
    union = len(s_e | s_c)
    if union == 0:
        return 1.0
    return 1.0 - len(s_e & s_c) / union


_NAME_TOKEN_RE = re.compile(r"[A-Z]+(?![a-z])|[A-Z][a-z0-9]*|[a-z0-9]+")


def name_tokens(qualified_name: str) -> list[str]:
    """Lowercased camel-case/underscore tokens of the class's simple name."""
    simple = qualified_name.rsplit(".", 1)[-1]
    return [t.lower() for t in _NAME_TOKEN_RE.findall(simple)]


def lcom5(class_name: str, model: SystemModel) -> float:
    """Henderson-Sellers lack-of-cohesion, clamped to [0, 1].

    ((1/a) * sum_j mu(A_j) - m) / (1 - m), with mu(A_j) the number of the
    class's own methods accessing attribute j. Defined 0 when m <= 1 or a == 0.
    """
    cls = model.class_decl(class_name)
    m = len(cls.methods)
    a = len(cls.attributes)
    if m <= 1 or a == 0:
        return 0.0
    method_ids = {method.entity_id for method in cls.methods}
    mu_sum = 0
    for attr in cls.attributes:
        mu_sum += len(model.accessing_methods(attr.entity_id) & method_ids)
    value = ((mu_sum / a) - m) / (1 - m)
    return min(1.0, max(0.0, value))


def class_profile(
    class_name: str,
    model: SystemModel,
    lexicon: frozenset[str] = DEFAULT_CONTROLLER_LEXICON,
) -> ClassStructuralProfile:
    """Structural profile of one class. Expects accessor flags to be derived."""
    cls = model.class_decl(class_name)
    tokens = set(name_tokens(class_name))
    return ClassStructuralProfile(
        nmd=len(cls.methods),
        nad=len(cls.attributes),
        lcom5=lcom5(class_name, model),
        accessor_count=sum(1 for m in cls.methods if m.is_accessor),
        is_controller=bool(tokens & lexicon),
    )


def incode_metrics(method_id: str, target_class: str, model: SystemModel) -> tuple[int, float, int]:
    """(ATFD, LAA, FDP) of a method relative to a foreign target class.

    ATFD: distinct attributes of the target class the method accesses.
    LAA: accesses (with multiplicity) to target attributes over accesses to
    target plus own attributes; 0 when the method touches neither.
    FDP: distinct foreign classes providing accessed attributes; independent
    of the target argument.
    """
    method = model.method(method_id)
    if target_class == method.owner:
        raise ValueError(f"target class equals owner class: {target_class!r}")
    model.class_decl(target_class)  # raises UnknownEntityError if absent
    target_attrs: set[str] = set()
    target_count = 0
    own_count = 0
    foreign_classes: set[str] = set()
    for access in method.resolved_accesses():
        attr_owner = owner_of(access.target)
        if attr_owner == target_class:
            target_attrs.add(access.target)
            target_count += access.count
        elif attr_owner == method.owner:
            own_count += access.count
        if attr_owner != method.owner:
            foreign_classes.add(attr_owner)
    total = target_count + own_count
    laa = target_count / total if total else 0.0
    return len(target_attrs), laa, len(foreign_classes)


def system_threshold(values: list[float], policy: ThresholdPolicy = ThresholdPolicy()) -> float:
    """mean + multiplier * population stddev over the per-class values, floored."""
    if not values:
        raise ValueError("system_threshold needs at least one value")
    n = len(values)
    mean = sum(values) / n
    variance = sum((v - mean) ** 2 for v in values) / n
    return max(policy.floor, mean + policy.stddev_multiplier * variance**0.5)


def compute_threshold_set(
    model: SystemModel,
    lexicon: frozenset[str] = DEFAULT_CONTROLLER_LEXICON,
    policy: ThresholdPolicy = ThresholdPolicy(),
    profiles: dict[str, ClassStructuralProfile] | None = None,
) -> ThresholdSet:
    """Derive the rule-card thresholds from the model's own class population."""
    if profiles is None:
        profiles = {name: class_profile(name, model, lexicon) for name in model.classes}
    if not profiles:
        raise UnknownEntityError("model has no classes")
    values = list(profiles.values())
    return ThresholdSet(
        nmd_nad_threshold=system_threshold([p.nmd + p.nad for p in values], policy),
        lcom_threshold=system_threshold([p.lcom5 for p in values], policy),
        data_class_accessor_threshold=system_threshold(
            [float(p.accessor_count) for p in values], policy
        ),
    )
