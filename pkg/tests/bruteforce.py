"""Independent brute-force re-implementations used as test oracles.

Everything here enumerates the definitions directly over the loaded model
structures, with its own data layout, and never calls the production
implementations. The one shared convention is the clustering arithmetic:
cross-cluster distance sums merge additively and linkage is sum/(|A|*|B|),
with ties broken by the smallest (min member index) pair; production follows
the same documented contract so floating-point results are bit-identical.
"""

from __future__ import annotations

import math


def _owner(entity_id):
    return entity_id.split("#", 1)[0]


def bf_all_entity_sets(model):
    """All entity sets in one direct scan over the declarations."""
    sets = {}
    for cls in model.classes.values():
        for a in cls.attributes:
            sets[a.entity_id] = set()
    for cls in model.classes.values():
        for m in cls.methods:
            out = set()
            for a in m.accessed_attributes:
                if not a.external:
                    out.add(a.target)
                    sets[a.target].add(m.entity_id)
            for c in m.called_methods:
                if not c.external:
                    out.add(c.target)
            sets[m.entity_id] = out
    return sets


def bf_entity_set(model, entity_id, sets=None):
    sets = bf_all_entity_sets(model) if sets is None else sets
    return sets[entity_id]


def bf_jaccard_entity(model, e_i, e_j, sets=None):
    sets = bf_all_entity_sets(model) if sets is None else sets
    s_i = sets[e_i]
    s_j = sets[e_j]
    union = s_i | s_j
    if not union:
        return 1.0
    return 1.0 - len(s_i & s_j) / len(union)


def bf_jaccard_entity_class(model, entity_id, class_name, sets=None):
    sets = bf_all_entity_sets(model) if sets is None else sets
    s_e = sets[entity_id]
    cls = model.classes[class_name]
    s_c = {a.entity_id for a in cls.attributes} | {m.entity_id for m in cls.methods}
    union = s_e | s_c
    if not union:
        return 1.0
    return 1.0 - len(s_e & s_c) / len(union)


def bf_lcom5(model, class_name):
    cls = model.classes[class_name]
    m = len(cls.methods)
    a = len(cls.attributes)
    if m <= 1 or a == 0:
        return 0.0
    total = 0
    for attribute in cls.attributes:
        for meth in cls.methods:
            if any(
                (not acc.external) and acc.target == attribute.entity_id
                for acc in meth.accessed_attributes
            ):
                total += 1
    value = ((total / a) - m) / (1 - m)
    return min(1.0, max(0.0, value))


def bf_accessor_count(model, class_name):
    return sum(1 for m in model.classes[class_name].methods if m.is_accessor)


def bf_is_controller(class_name, lexicon):
    simple = class_name.rsplit(".", 1)[-1]
    tokens = []
    word = ""
    for ch in simple:
        if ch.isupper() and word and not word[-1].isupper():
            tokens.append(word)
            word = ch
        elif ch.isupper() and word and word[-1].isupper():
            word += ch
        elif not ch.isalnum():
            if word:
                tokens.append(word)
            word = ""
        else:
            if word and word[-1].isupper() and len(word) > 1 and ch.islower():
                tokens.append(word[:-1])
                word = word[-1] + ch
            else:
                word += ch
    if word:
        tokens.append(word)
    return any(t.lower() in lexicon for t in tokens)


def bf_system_threshold(values, multiplier=1.5, floor=1.0):
    n = len(values)
    mean = sum(values) / n
    var = sum((v - mean) ** 2 for v in values) / n
    return max(floor, mean + multiplier * math.sqrt(var))


def bf_incode_metrics(model, method_id, target_class):
    meth = None
    for cls in model.classes.values():
        for m in cls.methods:
            if m.entity_id == method_id:
                meth = m
    assert meth is not None
    target_attrs = set()
    target_count = 0
    own_count = 0
    providers = set()
    for acc in meth.accessed_attributes:
        if acc.external:
            continue
        cls = _owner(acc.target)
        if cls == target_class:
            target_attrs.add(acc.target)
            target_count += acc.count
        if cls == meth.owner:
            own_count += acc.count
        else:
            providers.add(cls)
    denom = target_count + own_count
    laa = target_count / denom if denom else 0.0
    return len(target_attrs), laa, len(providers)


def bf_class_cochange(history, class_name):
    multi = [c for c in history.commits if len(c.changed_classes) >= 2]
    if not multi:
        return 0.0
    hits = [c for c in multi if class_name in c.changed_classes]
    return len(hits) / len(multi)


def bf_method_cochange(history, method_id, envied_class, cap=10.0):
    num = 0
    den = 0
    for commit in history.commits:
        if method_id not in commit.changed_methods:
            continue
        others = commit.changed_methods - {method_id}
        if any(_owner(m) == envied_class for m in commit.changed_methods):
            num += 1
        if any(_owner(m) == _owner(method_id) for m in others):
            den += 1
    return num / den if den else num * cap


# ---------------------------------------------------------------------------
# Detectors
# ---------------------------------------------------------------------------


def bf_profiles(model, lexicon):
    out = {}
    for name, cls in model.classes.items():
        out[name] = {
            "nmd": len(cls.methods),
            "nad": len(cls.attributes),
            "lcom5": bf_lcom5(model, name),
            "accessors": bf_accessor_count(model, name),
            "controller": bf_is_controller(name, lexicon),
        }
    return out


def bf_decor(model, lexicon, many_threshold=1, multiplier=1.5, floor=1.0):
    profiles = bf_profiles(model, lexicon)
    values = list(profiles.values())
    t_size = bf_system_threshold([p["nmd"] + p["nad"] for p in values], multiplier, floor)
    t_lcom = bf_system_threshold([p["lcom5"] for p in values], multiplier, floor)
    t_acc = bf_system_threshold([float(p["accessors"]) for p in values], multiplier, floor)
    data_classes = {
        name
        for name, p in profiles.items()
        if p["accessors"] >= t_acc and p["accessors"] >= math.ceil(p["nmd"] / 2)
    }
    flagged = set()
    for name, p in profiles.items():
        cls = model.classes[name]
        referenced = {a.declared_type for a in cls.attributes if a.declared_type != "primitive"}
        if len(referenced & data_classes) < many_threshold:
            continue
        if (
            p["controller"]
            or (p["nmd"] + p["nad"]) / t_size >= 1.0
            or p["lcom5"] / t_lcom >= 1.0
        ):
            flagged.add(name)
    return flagged


def bf_hist_god_class(model, history, alpha):
    return {
        name for name in model.classes if bf_class_cochange(history, name) > alpha / 100.0
    }


def bf_candidates(model):
    pairs = []
    for cls in model.classes.values():
        for m in cls.methods:
            if m.is_static or m.is_accessor:
                continue
            touched = set()
            for acc in m.accessed_attributes:
                if not acc.external:
                    touched.add(_owner(acc.target))
            for c in m.called_methods:
                if not c.external:
                    touched.add(_owner(c.target))
            touched.discard(m.owner)
            for other in touched:
                pairs.append((m.entity_id, other))
    return sorted(pairs)


def bf_incode_fe(model, t_atfd, t_laa, t_fdp):
    candidates = set(bf_candidates(model))
    methods = {m.entity_id: m for cls in model.classes.values() for m in cls.methods}
    flagged = set()
    for method_id in {pair[0] for pair in candidates}:
        meth = methods[method_id]
        per_class = {}
        own = 0
        foreign = 0
        for acc in meth.accessed_attributes:
            if acc.external:
                continue
            cls_name = _owner(acc.target)
            if cls_name == meth.owner:
                own += acc.count
            else:
                foreign += acc.count
                per_class.setdefault(cls_name, set()).add(acc.target)
        if not per_class:
            continue
        total_atfd = sum(len(v) for v in per_class.values())
        share = own / (own + foreign) if own + foreign else 1.0
        fdp = len(per_class)
        best = sorted(per_class, key=lambda c: (-len(per_class[c]), c))[0]
        if total_atfd > t_atfd and share < 1.0 / t_laa and fdp <= t_fdp:
            if (method_id, best) in candidates:
                flagged.add((method_id, best))
    return flagged


def bf_hist_fe(model, history, beta, cap=10.0):
    return {
        pair
        for pair in bf_candidates(model)
        if bf_method_cochange(history, pair[0], pair[1], cap) > 1.0 + beta / 100.0
    }


def bf_extract_concepts(model, class_name, merge_threshold=0.5, min_size=2, sets=None):
    """Frozenset-based agglomeration following the shared arithmetic contract."""
    sets = bf_all_entity_sets(model) if sets is None else sets
    cls = model.classes[class_name]
    entities = sorted(
        [a.entity_id for a in cls.attributes] + [m.entity_id for m in cls.methods]
    )
    index = {e: i for i, e in enumerate(entities)}
    clusters = {frozenset({i}) for i in range(len(entities))}
    sums = {}
    for a in entities:
        for b in entities:
            if index[a] < index[b]:
                sums[(frozenset({index[a]}), frozenset({index[b]}))] = bf_jaccard_entity(
                    model, a, b, sets
                )

    def key_of(c):
        return min(c)

    while len(clusters) > 1:
        ordered = sorted(clusters, key=key_of)
        best = None
        for i, ca in enumerate(ordered):
            for cb in ordered[i + 1 :]:
                pair_sum = sums[(ca, cb)] if (ca, cb) in sums else sums[(cb, ca)]
                linkage = pair_sum / (len(ca) * len(cb))
                if best is None or linkage < best[0]:
                    best = (linkage, ca, cb)
        linkage, ca, cb = best
        if linkage > merge_threshold:
            break
        merged = ca | cb
        clusters.discard(ca)
        clusters.discard(cb)

        def lookup(x, y):
            return sums[(x, y)] if (x, y) in sums else sums[(y, x)]

        new_sums = {}
        for pair, value in sums.items():
            if ca not in pair and cb not in pair:
                new_sums[pair] = value
        # contract: the lower-keyed cluster's sum is the left addend
        for other in clusters:
            new_sums[(merged, other)] = lookup(ca, other) + lookup(cb, other)
        sums = new_sums
        clusters.add(merged)
    concepts = []
    for cluster in clusters:
        if min_size <= len(cluster) < len(entities):
            concepts.append(frozenset(entities[i] for i in cluster))
    return sorted(concepts, key=sorted)


def bf_move_method(model, sets=None):
    """Independent walk of the target-class ranking and preconditions."""
    sets = bf_all_entity_sets(model) if sets is None else sets
    suggestions = {}
    for cls in model.classes.values():
        for m in cls.methods:
            if m.is_static or m.is_accessor:
                continue
            per_class_entities = {}
            for acc in m.accessed_attributes:
                if not acc.external:
                    per_class_entities.setdefault(_owner(acc.target), set()).add(acc.target)
            for c in m.called_methods:
                if not c.external:
                    per_class_entities.setdefault(_owner(c.target), set()).add(c.target)
            targets = [t for t in per_class_entities if t != m.owner]
            if not targets:
                continue
            own_distance = bf_jaccard_entity_class(model, m.entity_id, m.owner, sets)
            ranked = sorted(
                targets,
                key=lambda t: (
                    -len(per_class_entities[t]),
                    bf_jaccard_entity_class(model, m.entity_id, t, sets),
                    t,
                ),
            )
            for target in ranked:
                writes = any(
                    (not acc.external)
                    and acc.kind == "write"
                    and _owner(acc.target) == target
                    for acc in m.accessed_attributes
                )
                calls_mutator = False
                for c in m.called_methods:
                    if c.external or _owner(c.target) != target:
                        continue
                    callee = next(
                        mm
                        for mm in model.classes[target].methods
                        if mm.entity_id == c.target
                    )
                    if not callee.is_accessor:
                        calls_mutator = True
                if not (writes or calls_mutator):
                    continue
                if not bf_jaccard_entity_class(model, m.entity_id, target, sets) < own_distance:
                    continue
                suggestions[m.entity_id] = target
                break
    return suggestions


def bf_scores(tp, fp, fn, tn):
    """Direct evaluation of the three formulas with the degenerate conventions."""
    n_pos = tp + fn
    n_neg = fp + tn
    m_pos = tp + fp
    m_neg = fn + tn
    n = n_pos + n_neg
    precision = tp / m_pos if m_pos else None
    recall = tp / n_pos if n_pos else None
    denominator = math.sqrt(n_pos * m_pos * n_neg * m_neg)
    mcc = (tp * n - n_pos * m_pos) / denominator if denominator else 0.0
    return precision, recall, mcc
