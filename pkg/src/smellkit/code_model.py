"""Language-neutral snapshot of one system and the code-facts loader.

A code-facts document is a JSON object:

    {"system_id": ..., "classes": [
        {"name": ..., "attributes": [{"name": ..., "type": ...}],
         "methods": [{"name": ..., "static": ..., "accessor_hint": ...,
                      "line_start": ..., "line_end": ...,
                      "accesses": [{"target": "Class#attr", "kind": "read|write", "count": N}],
                      "calls": [{"target": "Class#method(sig)", "count": N}]}]}]}

Entity ids are `Class#member` strings. References that do not resolve inside
the model are kept but flagged external; external references never enter
metric computations.

The model is immutable after load; all lookups are safe for concurrent use.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from typing import Iterator, NamedTuple

from .errors import ParseError, UnknownEntityError, ValidationError

PRIMITIVE_TYPE = "primitive"

READ = "read"
WRITE = "write"


def owner_of(entity_id: str) -> str:
    """Owning class of a `Class#member` entity id."""
    cls, sep, member = entity_id.partition("#")
    if not sep or not cls or not member:
        raise ValidationError(f"malformed entity id: {entity_id!r}")
    return cls


@dataclass(frozen=True)
class Access:
    target: str  # attribute entity id
    kind: str  # READ or WRITE
    count: int
    external: bool = False


@dataclass(frozen=True)
class Call:
    target: str  # method entity id
    count: int
    external: bool = False


@dataclass(frozen=True)
class MethodDecl:
    entity_id: str
    owner: str
    is_static: bool
    is_accessor: bool
    accessed_attributes: tuple[Access, ...]
    called_methods: tuple[Call, ...]
    line_span: tuple[int, int]

    def resolved_accesses(self) -> Iterator[Access]:
        return (a for a in self.accessed_attributes if not a.external)

    def resolved_calls(self) -> Iterator[Call]:
        return (c for c in self.called_methods if not c.external)


@dataclass(frozen=True)
class AttributeDecl:
    entity_id: str
    owner: str
    declared_type: str  # qualified class name or PRIMITIVE_TYPE


@dataclass(frozen=True)
class ClassDecl:
    qualified_name: str
    attributes: tuple[AttributeDecl, ...]
    methods: tuple[MethodDecl, ...]

    @property
    def referenced_class_types(self) -> frozenset[str]:
        """Types of declared attributes, primitives excluded."""
        return frozenset(
            a.declared_type for a in self.attributes if a.declared_type != PRIMITIVE_TYPE
        )

    def member_ids(self) -> list[str]:
        return [a.entity_id for a in self.attributes] + [m.entity_id for m in self.methods]


@dataclass
class SystemModel:
    system_id: str
    classes: dict[str, ClassDecl]
    _methods: dict[str, MethodDecl] = field(init=False, repr=False, compare=False)
    _attributes: dict[str, AttributeDecl] = field(init=False, repr=False, compare=False)
    _attribute_accessors: dict[str, set[str]] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        self._reindex()

    def _reindex(self):
        self._methods = {}
        self._attributes = {}
        self._attribute_accessors = {}
        for cls in self.classes.values():
            for attr in cls.attributes:
                self._attributes[attr.entity_id] = attr
                self._attribute_accessors.setdefault(attr.entity_id, set())
            for method in cls.methods:
                self._methods[method.entity_id] = method
        for method in self._methods.values():
            for access in method.accessed_attributes:
                if access.target in self._attribute_accessors:
                    self._attribute_accessors[access.target].add(method.entity_id)

    def method(self, entity_id: str) -> MethodDecl:
        try:
            return self._methods[entity_id]
        except KeyError:
            raise UnknownEntityError(f"unknown method: {entity_id!r}") from None

    def attribute(self, entity_id: str) -> AttributeDecl:
        try:
            return self._attributes[entity_id]
        except KeyError:
            raise UnknownEntityError(f"unknown attribute: {entity_id!r}") from None

    def class_decl(self, qualified_name: str) -> ClassDecl:
        try:
            return self.classes[qualified_name]
        except KeyError:
            raise UnknownEntityError(f"unknown class: {qualified_name!r}") from None

    def is_method(self, entity_id: str) -> bool:
        return entity_id in self._methods

    def is_attribute(self, entity_id: str) -> bool:
        return entity_id in self._attributes

    def methods(self) -> Iterator[MethodDecl]:
        return iter(self._methods.values())

    def accessing_methods(self, attribute_id: str) -> frozenset[str]:
        """Distinct methods with a resolved access to the attribute."""
        if attribute_id not in self._attributes:
            raise UnknownEntityError(f"unknown attribute: {attribute_id!r}")
        return frozenset(self._attribute_accessors[attribute_id])


class CandidatePair(NamedTuple):
    """A potentially envious method paired with a potentially envied class."""

    method_id: str
    envied_class: str


# ---------------------------------------------------------------------------
# Loading / serialization
# ---------------------------------------------------------------------------


def _require(mapping: dict, key: str, context: str):
    if key not in mapping:
        raise ParseError(f"missing field {key!r} in {context}")
    return mapping[key]


def load_code_facts(document: str) -> SystemModel:
    """Parse and validate a code-facts document.

    Raises ParseError for malformed input (with line/column when available)
    and ValidationError for duplicate names/ids or broken line spans.
    Unresolved access/call targets are tagged external, never an error.
    """
    try:
        data = json.loads(document)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid code-facts document: {exc.msg}", exc.lineno, exc.colno) from exc
    if not isinstance(data, dict):
        raise ParseError("code-facts document must be a JSON object")

    system_id = _require(data, "system_id", "document")
    raw_classes = _require(data, "classes", "document")
    if not isinstance(raw_classes, list):
        raise ParseError("'classes' must be a list")

    classes: dict[str, ClassDecl] = {}
    seen_entities: set[str] = set()
    for raw_cls in raw_classes:
        name = _require(raw_cls, "name", "class")
        if name in classes:
            raise ValidationError(f"duplicate class name: {name!r}")
        attributes = []
        member_names: set[str] = set()
        for raw_attr in raw_cls.get("attributes", []):
            attr_name = _require(raw_attr, "name", f"attribute of {name}")
            if attr_name in member_names:
                raise ValidationError(f"duplicate attribute name {attr_name!r} in {name!r}")
            member_names.add(attr_name)
            entity_id = f"{name}#{attr_name}"
            if entity_id in seen_entities:
                raise ValidationError(f"duplicate entity id: {entity_id!r}")
            seen_entities.add(entity_id)
            attributes.append(
                AttributeDecl(
                    entity_id=entity_id,
                    owner=name,
                    declared_type=raw_attr.get("type", PRIMITIVE_TYPE),
                )
            )
        methods = []
        method_names: set[str] = set()
        for raw_method in raw_cls.get("methods", []):
            method_name = _require(raw_method, "name", f"method of {name}")
            if method_name in method_names:
                raise ValidationError(f"duplicate method name {method_name!r} in {name!r}")
            method_names.add(method_name)
            entity_id = f"{name}#{method_name}"
            if entity_id in seen_entities:
                raise ValidationError(f"duplicate entity id: {entity_id!r}")
            seen_entities.add(entity_id)
            line_start = int(_require(raw_method, "line_start", f"method {entity_id}"))
            line_end = int(_require(raw_method, "line_end", f"method {entity_id}"))
            if line_start > line_end:
                raise ValidationError(f"line_start > line_end for {entity_id!r}")
            accesses = []
            for raw_access in raw_method.get("accesses", []):
                kind = _require(raw_access, "kind", f"access in {entity_id}")
                if kind not in (READ, WRITE):
                    raise ParseError(f"access kind must be read|write, got {kind!r}")
                count = int(raw_access.get("count", 1))
                if count < 1:
                    raise ValidationError(f"access count must be >= 1 in {entity_id!r}")
                accesses.append(
                    Access(target=_require(raw_access, "target", "access"), kind=kind, count=count)
                )
            calls = []
            for raw_call in raw_method.get("calls", []):
                count = int(raw_call.get("count", 1))
                if count < 1:
                    raise ValidationError(f"call count must be >= 1 in {entity_id!r}")
                calls.append(Call(target=_require(raw_call, "target", "call"), count=count))
            is_static = bool(raw_method.get("static", False))
            hint = bool(raw_method.get("accessor_hint", False))
            methods.append(
                MethodDecl(
                    entity_id=entity_id,
                    owner=name,
                    is_static=is_static,
                    is_accessor=hint and not is_static,  # accessors are never static
                    accessed_attributes=tuple(accesses),
                    called_methods=tuple(calls),
                    line_span=(line_start, line_end),
                )
            )
        classes[name] = ClassDecl(qualified_name=name, attributes=tuple(attributes), methods=tuple(methods))

    return _resolve_references(SystemModel(system_id=system_id, classes=classes))


def _resolve_references(model: SystemModel) -> SystemModel:
    """Flag access/call targets that do not resolve inside the model as external."""
    attribute_ids = set(model._attributes)
    method_ids = set(model._methods)
    new_classes = {}
    for name, cls in model.classes.items():
        new_methods = []
        for method in cls.methods:
            accesses = tuple(
                replace(a, external=a.target not in attribute_ids) for a in method.accessed_attributes
            )
            calls = tuple(replace(c, external=c.target not in method_ids) for c in method.called_methods)
            new_methods.append(replace(method, accessed_attributes=accesses, called_methods=calls))
        new_classes[name] = replace(cls, methods=tuple(new_methods))
    return SystemModel(system_id=model.system_id, classes=new_classes)


def serialize_code_facts(model: SystemModel) -> str:
    """Inverse of load_code_facts; `load_code_facts(serialize_code_facts(m)) == m`."""
    data = {
        "system_id": model.system_id,
        "classes": [
            {
                "name": cls.qualified_name,
                "attributes": [
                    {"name": a.entity_id.split("#", 1)[1], "type": a.declared_type}
                    for a in cls.attributes
                ],
                "methods": [
                    {
                        "name": m.entity_id.split("#", 1)[1],
                        "static": m.is_static,
                        "accessor_hint": m.is_accessor,
                        "line_start": m.line_span[0],
                        "line_end": m.line_span[1],
                        "accesses": [
                            {"target": a.target, "kind": a.kind, "count": a.count}
                            for a in m.accessed_attributes
                        ],
                        "calls": [{"target": c.target, "count": c.count} for c in m.called_methods],
                    }
                    for m in cls.methods
                ],
            }
            for cls in model.classes.values()
        ],
    }
    return json.dumps(data, indent=1)


# ---------------------------------------------------------------------------
# Entity sets and derived flags
# ---------------------------------------------------------------------------


def entity_set(entity_id: str, model: SystemModel) -> frozenset[str]:
    """Accessed entities of a method, or accessing methods of an attribute.

    For a method: distinct internally resolved attribute targets plus called
    methods. For an attribute: distinct methods with a resolved access to it.
    """
    if model.is_method(entity_id):
        method = model.method(entity_id)
        members = {a.target for a in method.resolved_accesses()}
        members.update(c.target for c in method.resolved_calls())
        return frozenset(members)
    if model.is_attribute(entity_id):
        return model.accessing_methods(entity_id)
    raise UnknownEntityError(f"unknown entity: {entity_id!r}")


def _looks_like_accessor(method: MethodDecl) -> bool:
    # Getter/setter shape: exactly one distinct accessed attribute, owned by
    # the method's own class, resolved, and no calls of any kind.
    if method.is_static or method.called_methods:
        return False
    targets = {a.target for a in method.accessed_attributes}
    if len(targets) != 1:
        return False
    if any(a.external for a in method.accessed_attributes):
        return False
    return owner_of(next(iter(targets))) == method.owner


def derive_accessor_flags(model: SystemModel) -> SystemModel:
    """Return a copy with is_accessor set from the declared hint or the
    one-own-attribute/no-other-access shape rule."""
    new_classes = {}
    for name, cls in model.classes.items():
        new_methods = tuple(
            replace(m, is_accessor=(not m.is_static) and (m.is_accessor or _looks_like_accessor(m)))
            for m in cls.methods
        )
        new_classes[name] = replace(cls, methods=new_methods)
    return SystemModel(system_id=model.system_id, classes=new_classes)


def foreign_classes_touched(method: MethodDecl) -> frozenset[str]:
    """Foreign classes whose attributes or methods the method accesses (resolved only)."""
    touched = {owner_of(a.target) for a in method.resolved_accesses()}
    touched.update(owner_of(c.target) for c in method.resolved_calls())
    touched.discard(method.owner)
    return frozenset(touched)


def enumerate_fe_candidates(model: SystemModel) -> list[CandidatePair]:
    """Filtered Feature Envy candidate pairs in (method id, class name) order.

    Keeps non-static, non-accessor methods and, per method, only the foreign
    classes it actually accesses. Expects accessor flags to be derived.
    """
    pairs = []
    for method_id in sorted(model._methods):
        method = model._methods[method_id]
        if method.is_static or method.is_accessor:
            continue
        for cls_name in sorted(foreign_classes_touched(method)):
            pairs.append(CandidatePair(method_id, cls_name))
    return pairs
