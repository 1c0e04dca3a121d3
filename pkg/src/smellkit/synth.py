"""Deterministic synthetic corpora with injected God Classes and Feature Envy.

Baseline classes are small and cohesive; data classes expose attributes
through accessor pairs. God Classes get inflated size, disjoint member
groups (low cohesion, extractable concepts), data-class typed attributes
and heavy co-change. Feature Envy methods concentrate their accesses,
writes, calls and co-change on one foreign class.

Every smell is injected with independent blind spots (no history trace,
stealth size, read-only envy, ...) so that no single detector family sees
everything; the corpus manifest records every rate used.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .code_model import (
    CandidatePair,
    SystemModel,
    derive_accessor_flags,
    enumerate_fe_candidates,
    load_code_facts,
)
from .history import ChangeHistory, load_history

_NOUNS = (
    "Order", "Invoice", "Account", "Customer", "Payment", "Report", "Session",
    "Token", "Cache", "Index", "Parser", "Widget", "Layout", "Stream", "Buffer",
    "Packet", "Route", "Query", "Record", "Schema", "Ledger", "Catalog", "Basket",
    "Profile", "Ticket", "Journal", "Matrix", "Vector", "Cursor", "Bundle",
    "Segment", "Channel", "Cluster", "Folder", "Archive", "Billing", "Shipment",
    "Inventory", "Contract", "License",
)
_PLAIN_SUFFIXES = (
    "Service", "Model", "Store", "Util", "Builder", "Adapter", "Reader",
    "Writer", "View", "Entry", "Node", "Task", "Job", "Info", "Mapper",
)
_CONTROLLER_SUFFIXES = ("Manager", "Controller", "Handler", "Processor", "Scheduler")
_PACKAGES = ("core", "io", "net", "ui", "data")


@dataclass(frozen=True)
class SynthParams:
    n_classes: int = 200
    god_class_rate: float = 0.05
    feature_envy_rate: float = 0.05
    n_commits: int = 250
    data_class_fraction: float = 0.15

    def validate(self):
        if self.n_classes <= 0:
            raise ValueError("n_classes must be positive")
        if self.n_commits < 0:
            raise ValueError("n_commits must be non-negative")
        for name in ("god_class_rate", "feature_envy_rate"):
            rate = getattr(self, name)
            if not 0.0 <= rate <= 0.2:
                raise ValueError(f"{name} must lie in [0, 0.2], got {rate}")
        if not 0.0 <= self.data_class_fraction <= 0.5:
            raise ValueError("data_class_fraction must lie in [0, 0.5]")


@dataclass
class GroundTruth:
    god_classes: set[str] = field(default_factory=set)
    feature_envy: set[CandidatePair] = field(default_factory=set)


@dataclass
class SyntheticSystem:
    system_id: str
    model: SystemModel
    history: ChangeHistory
    truth: GroundTruth
    facts_document: str
    history_document: str
    manifest: dict


class _ClassPlan:
    __slots__ = ("name", "kind", "attrs", "methods", "attr_types", "traits")

    def __init__(self, name, kind):
        self.name = name
        self.kind = kind  # "normal" | "data" | "god"
        self.attrs: list[str] = []
        self.attr_types: dict[str, str] = {}
        self.methods: list[dict] = []
        self.traits: set[str] = set()

    def attr_id(self, attr):
        return f"{self.name}#{attr}"

    def add_method(self, name, accesses=(), calls=(), static=False):
        self.methods.append(
            {"name": name, "static": static, "accesses": list(accesses), "calls": list(calls)}
        )


def _make_names(rng, n, n_controllerish):
    """Unique qualified names; the first n_controllerish get controller suffixes."""
    names = []
    used = set()
    for i in range(n):
        while True:
            pkg = _PACKAGES[rng.integers(len(_PACKAGES))]
            noun = _NOUNS[rng.integers(len(_NOUNS))]
            if i < n_controllerish:
                suffix = _CONTROLLER_SUFFIXES[rng.integers(len(_CONTROLLER_SUFFIXES))]
            else:
                suffix = _PLAIN_SUFFIXES[rng.integers(len(_PLAIN_SUFFIXES))]
            candidate = f"{pkg}.{noun}{suffix}"
            if candidate in used:
                candidate = f"{candidate}{len(used)}"
            if candidate not in used:
                used.add(candidate)
                names.append(candidate)
                break
    return names


def _access(target, kind, count):
    return {"target": target, "kind": kind, "count": int(count)}


def _call(target, count=1):
    return {"target": target, "count": int(count)}


def _plan_data_class(plan: _ClassPlan, rng):
    n_attrs = int(rng.integers(4, 7))
    for i in range(n_attrs):
        attr = f"f{i}"
        plan.attrs.append(attr)
        plan.attr_types[attr] = "primitive"
        cap = attr[0].upper() + attr[1:]
        plan.add_method(f"get{cap}()", accesses=[_access(plan.attr_id(attr), "read", 1)])
        plan.add_method(f"set{cap}()", accesses=[_access(plan.attr_id(attr), "write", 1)])


def _plan_normal_class(plan: _ClassPlan, rng):
    n_attrs = int(rng.integers(2, 7))
    for i in range(n_attrs):
        attr = f"f{i}"
        plan.attrs.append(attr)
        plan.attr_types[attr] = "primitive"
    n_methods = int(rng.integers(3, 11))
    for i in range(n_methods):
        # biased toward the first attribute so members stay cohesive
        k = min(n_attrs, 1 + int(rng.integers(0, 3)))
        chosen = {0} if rng.random() < 0.7 else set()
        while len(chosen) < k:
            chosen.add(int(rng.integers(n_attrs)))
        accesses = [
            _access(plan.attr_id(f"f{j}"), "write" if rng.random() < 0.3 else "read", rng.integers(1, 3))
            for j in sorted(chosen)
        ]
        plan.add_method(f"m{i}()", accesses=accesses)
    # a few internal calls
    for i in range(n_methods):
        if rng.random() < 0.3 and n_methods > 1:
            j = int(rng.integers(n_methods))
            if j != i:
                plan.methods[i]["calls"].append(_call(f"{plan.name}#m{j}()"))


def _plan_god_class(plan: _ClassPlan, rng):
    cohesive = rng.random() < 0.25
    plan.traits.add("cohesive" if cohesive else "fragmented")
    n_groups = 1 if cohesive else int(rng.integers(2, 5))
    if rng.random() < 0.3:
        plan.traits.add("stealth_size")
        methods_per_group, attrs_per_group = (2, 3), (2, 3)
    else:
        methods_per_group, attrs_per_group = (3, 7), (2, 5)
    attr_index = 0
    method_index = 0
    for g in range(n_groups):
        group_attrs = []
        for _ in range(int(rng.integers(*attrs_per_group))):
            attr = f"f{attr_index}"
            attr_index += 1
            plan.attrs.append(attr)
            plan.attr_types[attr] = "primitive"
            group_attrs.append(attr)
        group_methods = []
        for _ in range(int(rng.integers(*methods_per_group))):
            name = f"m{method_index}()"
            method_index += 1
            k = max(2, min(len(group_attrs), 2 + int(rng.integers(0, 3))))
            chosen = sorted(rng.choice(len(group_attrs), size=k, replace=False).tolist())
            accesses = [
                _access(plan.attr_id(group_attrs[j]), "write" if rng.random() < 0.3 else "read", rng.integers(1, 4))
                for j in chosen
            ]
            plan.add_method(name, accesses=accesses)
            group_methods.append(name)
        if len(group_methods) > 1:
            plan.methods[-1]["calls"].append(_call(f"{plan.name}#{group_methods[0]}"))


def _add_texture(plans, rng, foreign_touch_rate=0.15):
    """Light cross-class reads/calls on normal-class methods; creates the
    candidate-pair universe without injecting real envy."""
    by_name = {p.name: p for p in plans}
    names = [p.name for p in plans]
    for plan in plans:
        if plan.kind != "normal":
            continue
        for method in plan.methods:
            if rng.random() >= foreign_touch_rate:
                continue
            target = by_name[names[rng.integers(len(names))]]
            if target.name == plan.name or not target.attrs:
                continue
            n_touch = 1 + int(rng.random() < 0.35)
            chosen = rng.choice(len(target.attrs), size=min(n_touch, len(target.attrs)), replace=False)
            for j in sorted(chosen.tolist()):
                kind = "write" if rng.random() < 0.1 else "read"
                method["accesses"].append(_access(target.attr_id(target.attrs[j]), kind, 1))
            if target.methods and rng.random() < 0.3:
                callee = target.methods[rng.integers(len(target.methods))]
                method["calls"].append(_call(f"{target.name}#{callee['name']}"))


def _inject_feature_envy(plans, rng, n_envy, truth: GroundTruth):
    """Three envy shapes: `plain` carries every signal, `subtle` is read-only
    with no calls (move-method blind), `local_heavy` mixes in enough own-class
    accesses to defeat the LAA conjunct (foreign-data blind). A separate coin
    decides whether the pair leaves a co-change trace."""
    hosts = [p for p in plans if p.kind == "normal"]
    targets = [p for p in plans if p.attrs and len(p.attrs) >= 3]
    pairs = []
    for i in range(n_envy):
        host = hosts[rng.integers(len(hosts))]
        target = targets[rng.integers(len(targets))]
        while target.name == host.name:
            target = targets[rng.integers(len(targets))]
        roll = rng.random()
        variant = "subtle" if roll < 0.25 else ("local_heavy" if roll < 0.5 else "plain")
        name = f"envy{i}()"
        n_foreign = int(rng.integers(3, min(6, len(target.attrs)) + 1))
        chosen = sorted(rng.choice(len(target.attrs), size=n_foreign, replace=False).tolist())
        accesses = []
        for rank, j in enumerate(chosen):
            kind = "write" if (variant != "subtle" and rank == 0) else "read"
            accesses.append(_access(target.attr_id(target.attrs[j]), kind, rng.integers(1, 4)))
        if variant == "local_heavy" and host.attrs:
            own = rng.choice(len(host.attrs), size=min(3, len(host.attrs)), replace=False)
            for j in sorted(own.tolist()):
                accesses.append(_access(host.attr_id(host.attrs[j]), "read", rng.integers(1, 3)))
        elif host.attrs and rng.random() < 0.5:
            accesses.append(_access(host.attr_id(host.attrs[0]), "read", 1))
        calls = []
        if variant != "subtle" and target.methods and rng.random() < 0.7:
            non_accessors = [m for m in target.methods if not m["name"].startswith(("get", "set"))]
            pool = non_accessors or target.methods
            callee = pool[rng.integers(len(pool))]
            calls.append(_call(f"{target.name}#{callee['name']}"))
        host.add_method(name, accesses=accesses, calls=calls)
        pair = CandidatePair(f"{host.name}#{name}", target.name)
        truth.feature_envy.add(pair)
        pairs.append((pair, variant, rng.random() < 0.3))  # third: no_history
    return pairs


def _inject_envy_bait(plans, rng, bait_rate=0.15):
    """Unlabeled utility methods that read a few distinct foreign attributes
    with barely any own-class use: structurally envy-like for the foreign-data
    rule, but with no writes, no calls and no co-change trace."""
    normals = [p for p in plans if p.kind == "normal"]
    targets = [p for p in plans if p.attrs and len(p.attrs) >= 2]
    count = 0
    for plan in normals:
        if rng.random() >= bait_rate:
            continue
        target = targets[rng.integers(len(targets))]
        if target.name == plan.name:
            continue
        n_foreign = int(rng.integers(2, min(4, len(target.attrs)) + 1))
        chosen = sorted(rng.choice(len(target.attrs), size=n_foreign, replace=False).tolist())
        accesses = [
            _access(target.attr_id(target.attrs[j]), "read", 1) for j in chosen
        ]
        if plan.attrs and rng.random() < 0.6:
            accesses.append(_access(plan.attr_id(plan.attrs[0]), "read", 1))
        plan.add_method(f"peek{count}()", accesses=accesses)
        count += 1


def _wire_god_associations(plans, rng, truth: GroundTruth):
    data_names = [p.name for p in plans if p.kind == "data"]
    normals = [p for p in plans if p.kind == "normal"]
    for plan in plans:
        if plan.kind == "god":
            if data_names and rng.random() < 0.85:
                n_assoc = int(rng.integers(1, min(3, len(data_names)) + 1))
                for j in sorted(rng.choice(len(data_names), size=n_assoc, replace=False).tolist()):
                    attr = f"ref{j}"
                    plan.attrs.append(attr)
                    plan.attr_types[attr] = data_names[j]
            else:
                plan.traits.add("no_association")
    # bait: a few normal classes referencing a data class (rule-card false alarms)
    for plan in normals:
        if data_names and rng.random() < 0.06:
            j = int(rng.integers(len(data_names)))
            attr = "ref0"
            if attr not in plan.attr_types:
                plan.attrs.append(attr)
                plan.attr_types[attr] = data_names[j]
                plan.traits.add("decor_bait")


def _assemble_document(system_id, plans) -> str:
    classes = []
    for plan in plans:
        line = 1
        methods = []
        for method in plan.methods:
            span = int(3 + len(method["accesses"]) + len(method["calls"]))
            methods.append(
                {
                    "name": method["name"],
                    "static": method["static"],
                    "line_start": line,
                    "line_end": line + span,
                    "accesses": method["accesses"],
                    "calls": method["calls"],
                }
            )
            line += span + 1
        classes.append(
            {
                "name": plan.name,
                "attributes": [
                    {"name": attr, "type": plan.attr_types[attr]} for attr in plan.attrs
                ],
                "methods": methods,
            }
        )
    return json.dumps({"system_id": system_id, "classes": classes})


def _build_history(system_id, plans, rng, params, truth, envy_info):
    """Background commits plus co-change injection for smelly entities."""
    names = [p.name for p in plans]
    commits = []

    def new_commit(classes=(), methods=()):
        commits.append({"id": f"c{len(commits):05d}", "classes": sorted(set(classes)), "methods": sorted(set(methods))})

    multi_commits = []
    for _ in range(params.n_commits):
        if rng.random() < 0.35:
            new_commit(classes=[names[rng.integers(len(names))]])
        else:
            size = int(rng.integers(2, 5))
            chosen = rng.choice(len(names), size=min(size, len(names)), replace=False)
            new_commit(classes=[names[j] for j in sorted(chosen.tolist())])
            multi_commits.append(len(commits) - 1)

    # God classes: join a personal share of the multi-class commits.
    for plan in plans:
        if plan.kind != "god":
            continue
        if rng.random() < 0.25:
            plan.traits.add("no_history")
            continue
        share = rng.uniform(0.3, 0.6)
        for idx in multi_commits:
            if rng.random() < share:
                commits[idx]["classes"] = sorted(set(commits[idx]["classes"]) | {plan.name})
    # a couple of noisy normal classes look historically god-like
    normals = [p for p in plans if p.kind == "normal"]
    for plan in normals:
        if rng.random() < 0.04:
            plan.traits.add("hist_bait")
            share = rng.uniform(0.25, 0.45)
            for idx in multi_commits:
                if rng.random() < share:
                    commits[idx]["classes"] = sorted(set(commits[idx]["classes"]) | {plan.name})

    by_name = {p.name: p for p in plans}
    for pair, _kind, no_history in envy_info:
        host_name = pair.method_id.split("#", 1)[0]
        target = by_name[pair.envied_class]
        host = by_name[host_name]
        if not no_history:
            for _ in range(int(rng.integers(2, 6))):
                callee = target.methods[rng.integers(len(target.methods))]["name"]
                new_commit(methods=[pair.method_id, f"{target.name}#{callee}"])
        n_own = int(rng.integers(0, 3))
        own_methods = [m["name"] for m in host.methods if f"{host_name}#{m['name']}" != pair.method_id]
        for _ in range(min(n_own, len(own_methods))):
            own = own_methods[rng.integers(len(own_methods))]
            new_commit(methods=[pair.method_id, f"{host_name}#{own}"])

    # sprinkle method-level co-change noise on ordinary methods
    for plan in normals:
        for method in plan.methods:
            if rng.random() < 0.01:
                other = plans[rng.integers(len(plans))]
                if other.name != plan.name and other.methods:
                    callee = other.methods[rng.integers(len(other.methods))]["name"]
                    new_commit(methods=[f"{plan.name}#{method['name']}", f"{other.name}#{callee}"])

    order = rng.permutation(len(commits))
    ordered = [commits[i] for i in order]
    for i, commit in enumerate(ordered):
        commit["id"] = f"c{i:05d}"
    return json.dumps({"system_id": system_id, "commits": ordered})


def synth_generate(seed, params: SynthParams = SynthParams(), system_id: str | None = None) -> SyntheticSystem:
    """Generate one labeled system; identical output for identical inputs."""
    params.validate()
    rng = np.random.default_rng(seed)
    system_id = system_id or f"synth-{seed}"

    n_god = round(params.god_class_rate * params.n_classes)
    remaining = params.n_classes - n_god
    n_data = round(params.data_class_fraction * remaining)
    n_normal = remaining - n_data
    n_envy = round(params.feature_envy_rate * params.n_classes)

    # controller-ish names: roughly half the god classes plus light noise
    n_controllerish = round(0.5 * n_god) + round(0.04 * n_normal)
    names = _make_names(rng, params.n_classes, n_controllerish)
    rng.shuffle(names)

    truth = GroundTruth()
    plans = []
    cursor = 0
    for _ in range(n_god):
        plan = _ClassPlan(names[cursor], "god")
        cursor += 1
        _plan_god_class(plan, rng)
        truth.god_classes.add(plan.name)
        plans.append(plan)
    for _ in range(n_data):
        plan = _ClassPlan(names[cursor], "data")
        cursor += 1
        _plan_data_class(plan, rng)
        plans.append(plan)
    for _ in range(n_normal):
        plan = _ClassPlan(names[cursor], "normal")
        cursor += 1
        _plan_normal_class(plan, rng)
        plans.append(plan)

    _wire_god_associations(plans, rng, truth)
    _add_texture(plans, rng)
    _inject_envy_bait(plans, rng)
    envy_info = _inject_feature_envy(plans, rng, n_envy, truth)

    facts_document = _assemble_document(system_id, plans)
    history_document = _build_history(system_id, plans, rng, params, truth, envy_info)

    model = derive_accessor_flags(load_code_facts(facts_document))
    history = load_history(history_document)
    candidates = set(enumerate_fe_candidates(model))
    missing = truth.feature_envy - candidates
    if missing:
        raise AssertionError(f"injected envy outside the candidate universe: {missing}")

    manifest = {
        "seed": _seed_repr(seed),
        "system_id": system_id,
        "params": asdict(params),
        "counts": {
            "classes": params.n_classes,
            "god_classes": n_god,
            "data_classes": n_data,
            "feature_envy": n_envy,
            "commits": len(history.commits),
            "candidate_pairs": len(candidates),
        },
    }
    return SyntheticSystem(
        system_id=system_id,
        model=model,
        history=history,
        truth=truth,
        facts_document=facts_document,
        history_document=history_document,
        manifest=manifest,
    )


def _seed_repr(seed):
    return list(seed) if isinstance(seed, tuple) else seed


def generate_corpus(seed, n_systems: int, params: SynthParams = SynthParams()) -> list[SyntheticSystem]:
    """n_systems independent systems with per-system seeds (seed, index)."""
    return [
        synth_generate((seed, index), params, system_id=f"synth-{_seed_repr(seed)}-{index}")
        for index in range(n_systems)
    ]


# ---------------------------------------------------------------------------
# Corpus directories
# ---------------------------------------------------------------------------


def write_corpus(corpus: list[SyntheticSystem], out_dir):
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    manifest = {"systems": [], "generator": [s.manifest for s in corpus]}
    for system in corpus:
        (out / f"{system.system_id}.facts.json").write_text(system.facts_document, encoding="utf-8")
        (out / f"{system.system_id}.history.json").write_text(system.history_document, encoding="utf-8")
        labels = {
            "system_id": system.system_id,
            "god_classes": sorted(system.truth.god_classes),
            "feature_envy": sorted([m, c] for m, c in system.truth.feature_envy),
        }
        (out / f"{system.system_id}.labels.json").write_text(json.dumps(labels, indent=1), encoding="utf-8")
        manifest["systems"].append(system.system_id)
    (out / "manifest.json").write_text(json.dumps(manifest, indent=1), encoding="utf-8")


@dataclass
class LabeledSystem:
    system_id: str
    model: SystemModel
    history: ChangeHistory
    god_classes: set[str]
    feature_envy: set[CandidatePair]


def as_labeled(system: SyntheticSystem) -> LabeledSystem:
    return LabeledSystem(
        system_id=system.system_id,
        model=system.model,
        history=system.history,
        god_classes=set(system.truth.god_classes),
        feature_envy=set(system.truth.feature_envy),
    )


def read_corpus(corpus_dir) -> list[LabeledSystem]:
    root = Path(corpus_dir)
    manifest = json.loads((root / "manifest.json").read_text(encoding="utf-8"))
    systems = []
    for system_id in manifest["systems"]:
        model = derive_accessor_flags(
            load_code_facts((root / f"{system_id}.facts.json").read_text(encoding="utf-8"))
        )
        history = load_history((root / f"{system_id}.history.json").read_text(encoding="utf-8"))
        labels = json.loads((root / f"{system_id}.labels.json").read_text(encoding="utf-8"))
        systems.append(
            LabeledSystem(
                system_id=system_id,
                model=model,
                history=history,
                god_classes=set(labels["god_classes"]),
                feature_envy={CandidatePair(m, c) for m, c in labels["feature_envy"]},
            )
        )
    return systems
