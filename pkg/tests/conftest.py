import json

import pytest

from smellkit.code_model import derive_accessor_flags, load_code_facts
from smellkit.history import load_history


def facts(system_id="sys", classes=()):
    return json.dumps({"system_id": system_id, "classes": list(classes)})


def clazz(name, attributes=(), methods=()):
    return {"name": name, "attributes": list(attributes), "methods": list(methods)}


def attr(name, type="primitive"):
    return {"name": name, "type": type}


def method(name, accesses=(), calls=(), static=False, accessor_hint=None, line_start=1, line_end=5):
    entry = {
        "name": name,
        "static": static,
        "line_start": line_start,
        "line_end": line_end,
        "accesses": list(accesses),
        "calls": list(calls),
    }
    if accessor_hint is not None:
        entry["accessor_hint"] = accessor_hint
    return entry


def access(target, kind="read", count=1):
    return {"target": target, "kind": kind, "count": count}


def call(target, count=1):
    return {"target": target, "count": count}


def load(document):
    return derive_accessor_flags(load_code_facts(document))


def history_doc(commits, system_id="sys"):
    return json.dumps(
        {
            "system_id": system_id,
            "commits": [
                {"id": f"c{i}", "classes": sorted(classes), "methods": sorted(methods)}
                for i, (classes, methods) in enumerate(commits)
            ],
        }
    )


def load_commits(commits, system_id="sys"):
    """commits: list of (classes, methods) pairs."""
    return load_history(history_doc(commits, system_id))


@pytest.fixture
def two_class_model():
    """A, with one plain method and one accessor-shaped method, plus B."""
    doc = facts(
        classes=[
            clazz(
                "A",
                attributes=[attr("a")],
                methods=[
                    method(
                        "m()",
                        accesses=[access("A#a", count=2), access("B#x", kind="write")],
                        calls=[call("A#m2()")],
                    ),
                    method("m2()", accesses=[access("A#a")]),
                ],
            ),
            clazz(
                "B",
                attributes=[attr("x"), attr("y")],
                methods=[method("n()", accesses=[access("B#x", count=3)])],
            ),
        ]
    )
    return load(doc)
