"""The three standalone detector families for God Class and Feature Envy.

God Class: rule card (size/cohesion/lexicon + DataClass associations),
co-change rate over the commit history, and extract-class concept counting.
Feature Envy: foreign-data thresholds with envied-class attribution,
method-level co-change, and move-method suggestion.

All detectors are pure functions of (model, history, config).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

from .code_model import (
    WRITE,
    CandidatePair,
    MethodDecl,
    SystemModel,
    enumerate_fe_candidates,
    foreign_classes_touched,
    owner_of,
)
from .config import DetectorConfig
from .history import ChangeHistory, class_cochange_ratio, method_cochange_ratio
from .metrics import (
    ClassStructuralProfile,
    ThresholdSet,
    class_profile,
    compute_threshold_set,
    jaccard_entity,
    jaccard_entity_class,
)


class DetectorTool(str, Enum):
    RULE_CARD = "RULE_CARD"
    HIST = "HIST"
    JDEODORANT = "JDEODORANT"


DETECTOR_ORDER = (DetectorTool.RULE_CARD, DetectorTool.HIST, DetectorTool.JDEODORANT)


@dataclass(frozen=True)
class Verdict:
    tool: DetectorTool
    anti_pattern: str  # "god_class" | "feature_envy"
    entity: str | CandidatePair
    flagged: bool


# ---------------------------------------------------------------------------
# God Class
# ---------------------------------------------------------------------------


def data_classes(profiles: dict[str, ClassStructuralProfile], thresholds: ThresholdSet) -> set[str]:
    """Classes exposing state chiefly through accessors: accessor count at or
    above the system threshold and covering at least half the methods."""
    found = set()
    for name, profile in profiles.items():
        if profile.accessor_count >= thresholds.data_class_accessor_threshold and (
            profile.accessor_count >= math.ceil(profile.nmd / 2)
        ):
            found.add(name)
    return found


def associated_data_class_count(class_name: str, model: SystemModel, dataclass_names: set[str]) -> int:
    """DataClasses among the types of the class's declared attributes."""
    return len(model.class_decl(class_name).referenced_class_types & dataclass_names)


def decor_god_class(
    model: SystemModel,
    config: DetectorConfig = DetectorConfig(),
    profiles: dict[str, ClassStructuralProfile] | None = None,
    thresholds: ThresholdSet | None = None,
) -> set[str]:
    """Rule-card detection: associated to many DataClass AND
    (controller OR large OR low cohesion), thresholds system-relative."""
    if profiles is None:
        profiles = {name: class_profile(name, model, config.controller_lexicon) for name in model.classes}
    if thresholds is None:
        thresholds = compute_threshold_set(model, config.controller_lexicon, config.threshold_policy, profiles)
    dataclass_names = data_classes(profiles, thresholds)
    flagged = set()
    for name, profile in profiles.items():
        if associated_data_class_count(name, model, dataclass_names) < config.many_dataclass_threshold:
            continue
        large = (profile.nmd + profile.nad) / thresholds.nmd_nad_threshold >= 1.0
        low_cohesion = profile.lcom5 / thresholds.lcom_threshold >= 1.0
        if profile.is_controller or large or low_cohesion:
            flagged.add(name)
    return flagged


def hist_god_class(model: SystemModel, history: ChangeHistory, alpha: float) -> set[str]:
    """Classes present in more than alpha% of the multi-class commits."""
    return {
        name
        for name in model.classes
        if class_cochange_ratio(name, history) > alpha / 100.0
    }


@dataclass(frozen=True)
class ConceptCluster:
    """A cohesive group of one class's members that could be extracted."""

    members: frozenset[str]


def _cluster_members(entity_ids: list[str], distance: list[list[float]], merge_threshold: float) -> list[tuple[int, ...]]:
    """Average-linkage agglomeration over a fixed distance matrix.

    Contract (shared with the brute-force test oracle so that float results
    are bit-identical): cross-cluster distance sums start from the pairwise
    matrix and are merged additively (sum(A+B, C) = sum(A, C) + sum(B, C));
    the linkage is sum / (|A|*|B|); among minimal pairs the one with the
    lexicographically smallest (min member index, min member index) wins;
    merging stops when the minimum linkage exceeds merge_threshold.
    """
    n = len(entity_ids)
    clusters: dict[int, list[int]] = {i: [i] for i in range(n)}  # key = min member index
    sums: dict[tuple[int, int], float] = {}
    for i in range(n):
        row = distance[i]
        for j in range(i + 1, n):
            sums[(i, j)] = row[j]
    while len(clusters) > 1:
        keys = sorted(clusters)
        best = None
        for ai in range(len(keys)):
            a = keys[ai]
            size_a = len(clusters[a])
            for b in keys[ai + 1 :]:
                d = sums[(a, b)] / (size_a * len(clusters[b]))
                if best is None or d < best[0]:
                    best = (d, a, b)
        d, a, b = best
        if d > merge_threshold:
            break
        for c in keys:
            if c == a or c == b:
                continue
            key_ac = (min(a, c), max(a, c))
            key_bc = (min(b, c), max(b, c))
            sums[key_ac] = sums.pop(key_ac) + sums.pop(key_bc)
        del sums[(a, b)]
        clusters[a] = sorted(clusters[a] + clusters.pop(b))
    return [tuple(members) for _, members in sorted(clusters.items())]


def jdeodorant_extract_class(
    model: SystemModel,
    merge_threshold: float = 0.5,
    min_concept_size: int = 2,
) -> dict[str, list[ConceptCluster]]:
    """Extractable concepts per class: agglomerative clusters of the class's
    methods and attributes under the entity-to-entity Jaccard distance.

    Clusters must reach min_concept_size and must not be the whole class.
    The standalone God Class verdict is `len(concepts) >= 1`.
    """
    result: dict[str, list[ConceptCluster]] = {}
    for name, cls in model.classes.items():
        entity_ids = sorted(cls.member_ids())
        n = len(entity_ids)
        distance = [[0.0] * n for _ in range(n)]
        for i in range(n):
            for j in range(i + 1, n):
                d = jaccard_entity(entity_ids[i], entity_ids[j], model)
                distance[i][j] = d
                distance[j][i] = d
        concepts = []
        for members in _cluster_members(entity_ids, distance, merge_threshold):
            if len(members) >= min_concept_size and len(members) < n:
                concepts.append(ConceptCluster(frozenset(entity_ids[i] for i in members)))
        result[name] = concepts
    return result


# ---------------------------------------------------------------------------
# Feature Envy
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ForeignDataStats:
    """Method-level foreign attribute usage backing the threshold rule."""

    foreign_atfd: int  # distinct foreign attributes accessed
    own_share: float  # own attribute accesses / all attribute accesses
    fdp: int  # distinct foreign classes providing attributes
    envied_class: str | None  # foreign class providing the most distinct attributes


def foreign_data_stats(method: MethodDecl) -> ForeignDataStats:
    per_class_attrs: dict[str, set[str]] = {}
    own_count = 0
    foreign_count = 0
    for access in method.resolved_accesses():
        attr_owner = owner_of(access.target)
        if attr_owner == method.owner:
            own_count += access.count
        else:
            foreign_count += access.count
            per_class_attrs.setdefault(attr_owner, set()).add(access.target)
    total = own_count + foreign_count
    own_share = own_count / total if total else 1.0
    envied = None
    if per_class_attrs:
        envied = min(per_class_attrs, key=lambda c: (-len(per_class_attrs[c]), c))
    atfd = sum(len(attrs) for attrs in per_class_attrs.values())
    return ForeignDataStats(
        foreign_atfd=atfd, own_share=own_share, fdp=len(per_class_attrs), envied_class=envied
    )


def incode_feature_envy(
    model: SystemModel,
    t_atfd: int,
    t_laa: int,
    t_fdp: int,
    candidates: list[CandidatePair] | None = None,
) -> set[CandidatePair]:
    """Foreign-data rule: ATFD > T_ATFD, own attribute share < 1/T_LAA, and
    FDP <= T_FDP; the envied class is the foreign class providing the most
    distinct accessed attributes (ties to the lowest qualified name)."""
    if candidates is None:
        candidates = enumerate_fe_candidates(model)
    candidate_set = set(candidates)
    flagged = set()
    for method_id in {pair.method_id for pair in candidates}:
        stats = foreign_data_stats(model.method(method_id))
        if stats.envied_class is None:
            continue
        if (
            stats.foreign_atfd > t_atfd
            and stats.own_share < 1.0 / t_laa
            and stats.fdp <= t_fdp
        ):
            pair = CandidatePair(method_id, stats.envied_class)
            if pair in candidate_set:
                flagged.add(pair)
    return flagged


def hist_feature_envy(
    model: SystemModel,
    history: ChangeHistory,
    beta: float,
    candidates: list[CandidatePair] | None = None,
    cap: float = 10.0,
) -> set[CandidatePair]:
    """Pairs whose method-level co-change ratio exceeds 1 + beta/100."""
    if candidates is None:
        candidates = enumerate_fe_candidates(model)
    limit = 1.0 + beta / 100.0
    return {
        pair
        for pair in candidates
        if method_cochange_ratio(pair.method_id, pair.envied_class, history, cap) > limit
    }


@dataclass
class MoveMethodReport:
    """Suggestions plus the per-pair walk diagnostics."""

    suggestions: dict[str, str]  # method id -> target class
    rejected: dict[CandidatePair, str] = field(default_factory=dict)  # first failed precondition

    def suggested(self, pair: CandidatePair) -> bool:
        return self.suggestions.get(pair.method_id) == pair.envied_class


def _accessed_entity_counts(method: MethodDecl) -> dict[str, int]:
    """Distinct entities the method accesses, grouped by owning class."""
    per_class: dict[str, set[str]] = {}
    for access in method.resolved_accesses():
        per_class.setdefault(owner_of(access.target), set()).add(access.target)
    for call in method.resolved_calls():
        per_class.setdefault(owner_of(call.target), set()).add(call.target)
    return {cls: len(entities) for cls, entities in per_class.items()}


def _modifies_target(method: MethodDecl, target: str, model: SystemModel) -> bool:
    for access in method.resolved_accesses():
        if access.kind == WRITE and owner_of(access.target) == target:
            return True
    for call in method.resolved_calls():
        if owner_of(call.target) == target and not model.method(call.target).is_accessor:
            return True
    return False


def jdeodorant_move_method(
    model: SystemModel, candidates: list[CandidatePair] | None = None
) -> MoveMethodReport:
    """Walk each candidate method's target classes by (accessed entities desc,
    Jaccard distance asc, name asc) and suggest the first one that the method
    modifies and is closer to than its own class. At most one suggestion per
    method; candidate methods are already non-static and non-accessor."""
    if candidates is None:
        candidates = enumerate_fe_candidates(model)
    report = MoveMethodReport(suggestions={})
    for method_id in sorted({pair.method_id for pair in candidates}):
        method = model.method(method_id)
        counts = _accessed_entity_counts(method)
        targets = sorted(foreign_classes_touched(method))
        if not targets:
            continue
        own_distance = jaccard_entity_class(method_id, method.owner, model)
        ranked = sorted(
            targets,
            key=lambda cls: (-counts.get(cls, 0), jaccard_entity_class(method_id, cls, model), cls),
        )
        for target in ranked:
            if not _modifies_target(method, target, model):
                report.rejected[CandidatePair(method_id, target)] = "no data structure modified"
                continue
            if not jaccard_entity_class(method_id, target, model) < own_distance:
                report.rejected[CandidatePair(method_id, target)] = "not closer than owner"
                continue
            report.suggestions[method_id] = target
            break
    return report
