"""Commit histories at class and method granularity, plus co-change ratios.

A history document is a JSON object:

    {"system_id": ..., "commits": [{"id": ..., "classes": [...], "methods": [...]}]}

Method entries reuse the `Class#member` id syntax; listing a method
automatically adds its owner class to the commit (invariant repair).
Commits are stored oldest first.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from .code_model import owner_of
from .errors import ParseError, ValidationError


@dataclass(frozen=True)
class Commit:
    commit_id: str
    changed_classes: frozenset[str]
    changed_methods: frozenset[str]


@dataclass(frozen=True)
class ChangeHistory:
    system_id: str
    commits: tuple[Commit, ...]


def load_history(document: str) -> ChangeHistory:
    try:
        data = json.loads(document)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid history document: {exc.msg}", exc.lineno, exc.colno) from exc
    if not isinstance(data, dict) or "system_id" not in data or "commits" not in data:
        raise ParseError("history document must carry 'system_id' and 'commits'")

    commits = []
    seen_ids = set()
    for raw in data["commits"]:
        if "id" not in raw:
            raise ParseError("commit without 'id'")
        commit_id = raw["id"]
        if commit_id in seen_ids:
            raise ValidationError(f"duplicate commit id: {commit_id!r}")
        seen_ids.add(commit_id)
        classes = set(raw.get("classes", []))
        methods = frozenset(raw.get("methods", []))
        classes.update(owner_of(m) for m in methods)
        commits.append(
            Commit(commit_id=commit_id, changed_classes=frozenset(classes), changed_methods=methods)
        )
    return ChangeHistory(system_id=data["system_id"], commits=tuple(commits))


def serialize_history(history: ChangeHistory) -> str:
    data = {
        "system_id": history.system_id,
        "commits": [
            {
                "id": c.commit_id,
                "classes": sorted(c.changed_classes),
                "methods": sorted(c.changed_methods),
            }
            for c in history.commits
        ],
    }
    return json.dumps(data, indent=1)


def class_cochange_ratio(class_name: str, history: ChangeHistory) -> float:
    """Share of multi-class commits that touch `class_name`.

    numerator / |commits touching >= 2 classes|; 0.0 when no multi-class
    commit exists. Classes never seen in the history get 0.0.
    """
    numerator = 0
    denominator = 0
    for commit in history.commits:
        if len(commit.changed_classes) < 2:
            continue
        denominator += 1
        if class_name in commit.changed_classes:
            numerator += 1
    return numerator / denominator if denominator else 0.0


def method_cochange_ratio(
    method_id: str, envied_class: str, history: ChangeHistory, cap: float = 10.0
) -> float:
    """Commits pairing the method with the envied class's methods, relative to
    commits pairing it with methods of its own class.

    When the method never co-changes with its own class the ratio is undefined;
    we return numerator * cap to keep the feature finite.
    """
    owner = owner_of(method_id)
    if envied_class == owner:
        raise ValueError(f"envied class equals owner class: {envied_class!r}")
    numerator = 0
    denominator = 0
    for commit in history.commits:
        if method_id not in commit.changed_methods:
            continue
        if any(owner_of(m) == envied_class for m in commit.changed_methods):
            numerator += 1
        if any(m != method_id and owner_of(m) == owner for m in commit.changed_methods):
            denominator += 1
    if denominator == 0:
        return numerator * cap
    return numerator / denominator


# ---------------------------------------------------------------------------
# git log conversion
# ---------------------------------------------------------------------------

_HEADER_PREFIXES = ("Author:", "Date:", "Merge:", "AuthorDate:", "Commit:", "CommitDate:")


def path_to_class(path: str) -> str:
    """Map a repository path to a qualified class name: strip the file
    extension, turn separators into dots ("src/app/Foo.java" -> "src.app.Foo")."""
    path = path.strip().replace("\\", "/").strip("/")
    head, _, base = path.rpartition("/")
    if "." in base:
        base = base.rsplit(".", 1)[0]
    parts = [p for p in head.split("/") if p] + [base]
    return ".".join(parts)


def convert_git_name_only_log(text: str, system_id: str) -> str:
    """Turn `git log --name-only` output into a history document (class level).

    git lists commits newest first; the output is reversed into ancestry
    order. Only unindented non-header lines are treated as file paths.
    """
    commits: list[dict] = []
    current: dict | None = None
    for line in text.splitlines():
        if line.startswith("commit "):
            if current is not None:
                commits.append(current)
            current = {"id": line.split()[1], "classes": [], "methods": []}
            continue
        if current is None or not line.strip():
            continue
        if line.startswith((" ", "\t")) or line.startswith(_HEADER_PREFIXES):
            continue
        cls = path_to_class(line)
        if cls and cls not in current["classes"]:
            current["classes"].append(cls)
    if current is not None:
        commits.append(current)
    commits.reverse()
    return json.dumps({"system_id": system_id, "commits": commits}, indent=1)
