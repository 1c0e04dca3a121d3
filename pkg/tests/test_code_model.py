import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from smellkit.code_model import (
    derive_accessor_flags,
    entity_set,
    enumerate_fe_candidates,
    load_code_facts,
    serialize_code_facts,
)
from smellkit.errors import ParseError, UnknownEntityError, ValidationError
from smellkit.synth import SynthParams, synth_generate

from conftest import access, attr, call, clazz, facts, load, method


def test_minimal_document_loads():
    model = load_code_facts(facts(classes=[clazz("A", methods=[method("m()")])]))
    assert len(model.classes) == 1
    assert len(model.classes["A"].methods) == 1


def test_unresolved_reference_is_external_not_error():
    model = load_code_facts(
        facts(classes=[clazz("A", methods=[method("m()", accesses=[access("X#a")])])])
    )
    (acc,) = model.classes["A"].methods[0].accessed_attributes
    assert acc.external


def test_duplicate_class_name_rejected():
    doc = facts(classes=[clazz("A"), clazz("A")])
    with pytest.raises(ValidationError):
        load_code_facts(doc)


def test_duplicate_member_rejected():
    doc = facts(classes=[clazz("A", attributes=[attr("x"), attr("x")])])
    with pytest.raises(ValidationError):
        load_code_facts(doc)


def test_malformed_json_reports_position():
    with pytest.raises(ParseError) as err:
        load_code_facts('{"system_id": "s", "classes": [}')
    assert err.value.line is not None


def test_line_span_validated():
    doc = facts(classes=[clazz("A", methods=[method("m()", line_start=9, line_end=3)])])
    with pytest.raises(ValidationError):
        load_code_facts(doc)


def test_entity_set_method_empty():
    model = load(facts(classes=[clazz("A", methods=[method("m()")])]))
    assert entity_set("A#m()", model) == frozenset()


def test_entity_set_method_distinct(two_class_model):
    # the repeated access to A#a counts once; the call to m2 joins the set
    assert entity_set("A#m()", two_class_model) == {"A#a", "A#m2()", "B#x"}


def test_entity_set_attribute_side(two_class_model):
    assert entity_set("A#a", two_class_model) == {"A#m()", "A#m2()"}


def test_entity_set_unknown_entity(two_class_model):
    with pytest.raises(UnknownEntityError):
        entity_set("A#nope", two_class_model)


def test_membership_symmetry(two_class_model):
    model = two_class_model
    for cls in model.classes.values():
        for m in cls.methods:
            for a in cls.attributes:
                assert (a.entity_id in entity_set(m.entity_id, model)) == (
                    m.entity_id in entity_set(a.entity_id, model)
                )


def test_accessor_shape_rule():
    doc = facts(
        classes=[
            clazz(
                "A",
                attributes=[attr("a")],
                methods=[
                    method("getA()", accesses=[access("A#a")]),
                    method("work()", accesses=[access("A#a")], calls=[call("A#getA()")]),
                    method("idle()"),
                ],
            )
        ]
    )
    model = derive_accessor_flags(load_code_facts(doc))
    methods = {m.entity_id: m for m in model.classes["A"].methods}
    assert methods["A#getA()"].is_accessor  # exactly one own attribute, no calls
    assert not methods["A#work()"].is_accessor  # has a call
    assert not methods["A#idle()"].is_accessor  # zero accesses


def test_accessor_hint_respected_but_never_static():
    doc = facts(
        classes=[
            clazz(
                "A",
                attributes=[attr("a")],
                methods=[
                    method("odd()", accesses=[access("A#a"), access("A#a", kind="write")], accessor_hint=True),
                    method("stat()", accesses=[access("A#a")], static=True, accessor_hint=True),
                ],
            )
        ]
    )
    model = derive_accessor_flags(load_code_facts(doc))
    methods = {m.entity_id: m for m in model.classes["A"].methods}
    assert methods["A#odd()"].is_accessor
    assert not methods["A#stat()"].is_accessor


def test_roundtrip_hand_model(two_class_model):
    assert load_code_facts(serialize_code_facts(two_class_model)) == two_class_model


@settings(max_examples=10, deadline=None)
@given(st.integers(min_value=0, max_value=10_000))
def test_roundtrip_synthetic(seed):
    system = synth_generate(seed, SynthParams(n_classes=12, n_commits=10))
    assert load_code_facts(serialize_code_facts(system.model)) == system.model


def test_candidate_filtering():
    doc = facts(
        classes=[
            clazz(
                "A",
                attributes=[attr("a")],
                methods=[
                    method("m()", accesses=[access("B#x"), access("C#y")]),
                    method("s()", accesses=[access("B#x")], static=True),
                ],
            ),
            clazz("B", attributes=[attr("x")]),
            clazz("C", attributes=[attr("y")]),
        ]
    )
    model = derive_accessor_flags(load_code_facts(doc))
    assert [tuple(p) for p in enumerate_fe_candidates(model)] == [("A#m()", "B"), ("A#m()", "C")]


def test_single_class_system_has_no_candidates():
    model = load(facts(classes=[clazz("A", attributes=[attr("a")], methods=[method("m()", accesses=[access("A#a")])])]))
    assert enumerate_fe_candidates(model) == []


def test_candidates_within_theoretical_bound():
    # the unfiltered pair space is n_m * (n_c - 1)
    system = synth_generate(3, SynthParams(n_classes=10, n_commits=5))
    model = system.model
    n_m = sum(len(c.methods) for c in model.classes.values())
    n_c = len(model.classes)
    pairs = enumerate_fe_candidates(model)
    assert len(pairs) <= n_m * (n_c - 1)
    assert len(set(pairs)) == len(pairs)
    assert pairs == sorted(pairs)
