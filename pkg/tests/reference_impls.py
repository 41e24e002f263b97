"""Independent reference implementations used to cross-check the package.

Everything here is deliberately written with plain loops and stdlib math,
sharing no scoring or selection code with ntplab, so agreement is evidence
rather than tautology.
"""

from __future__ import annotations

import itertools
import math


def pair_dist(table, a, b):
    return math.sqrt(sum((float(x) - float(y)) ** 2 for x, y in zip(table[a], table[b])))


def exhaustive_proofs(goal, kb, rules, table, k_max=None):
    """Every proof of `goal` as (path_tag, pairs, worst_index, score), where
    path_tag is 'fact' or ('rule', i), mirroring the documented enumeration
    order and tie rules from first principles."""
    candidates = [f for f in kb.facts if f.args == goal.args and f.predicate != goal.predicate]
    out = []
    for fact in candidates:
        pairs = [(goal.predicate, fact.predicate)]
        pairs += [(g, a) for g, a in zip(goal.args, fact.args) if g != a]
        dists = [pair_dist(table, x, y) for x, y in pairs]
        worst = max(range(len(dists)), key=lambda i: (dists[i], -i))
        out.append(("fact", tuple(pairs), worst, math.exp(-max(dists))))
    for ri, rule in enumerate(rules):
        slots = []
        for body_pred in rule.body:
            scored = []
            for idx, fact in enumerate(candidates):
                pairs = [(body_pred, fact.predicate)]
                pairs += [(g, a) for g, a in zip(goal.args, fact.args) if g != a]
                dists = [pair_dist(table, x, y) for x, y in pairs]
                scored.append((max(dists), idx, tuple(pairs)))
            scored.sort(key=lambda t: (t[0], t[1]))
            if k_max is not None:
                scored = scored[: int(k_max)]
            scored.sort(key=lambda t: t[1])
            slots.append([p for _, _, p in scored])
        for combo in itertools.product(*slots):
            pairs = [(goal.predicate, rule.head)]
            for slot_pairs in combo:
                pairs.extend(slot_pairs)
            dists = [pair_dist(table, x, y) for x, y in pairs]
            worst = max(range(len(dists)), key=lambda i: (dists[i], -i))
            out.append((("rule", ri), tuple(pairs), worst, math.exp(-max(dists))))
    return out


def best_proof_score(goal, kb, rules, table, k_max=None):
    proofs = exhaustive_proofs(goal, kb, rules, table, k_max)
    return max((p[3] for p in proofs), default=0.0)


def select_oracle(scores_by_path, kind, k):
    """Brute-force proof selection over {path: [scores...]} in enumeration
    order; returns the multiset of selected (path, index) pairs."""
    entries = []
    for pi, (path, scores) in enumerate(scores_by_path):
        for j, s in enumerate(scores):
            entries.append((pi, j, s, path))
    ranked = sorted(entries, key=lambda e: (-e[2], e[0], e[1]))
    if kind == "best_only":
        chosen = ranked[:1]
    elif kind == "top_k":
        chosen = ranked[:k]
    elif kind == "all_path":
        seen = set()
        chosen = []
        for e in ranked:
            if e[0] not in seen:
                seen.add(e[0])
                chosen.append(e)
    elif kind == "top_k_all_path":
        per = {}
        chosen = []
        for e in ranked:
            if per.get(e[0], 0) < k:
                per[e[0]] = per.get(e[0], 0) + 1
                chosen.append(e)
    elif kind == "combined_alt":
        picked = set((e[0], e[1]) for e in ranked[:k])
        seen = set()
        for e in ranked:
            if e[0] not in seen:
                seen.add(e[0])
                picked.add((e[0], e[1]))
        chosen = [e for e in entries if (e[0], e[1]) in picked]
    else:
        raise ValueError(kind)
    return sorted((e[0], e[1]) for e in chosen)


def pr_auc_quadratic(scores, gold):
    """Average precision by counting, O(n^2): for each positive, precision
    at its rank under score-descending order with gold-1-first ties."""
    n = len(scores)
    positives = [i for i in range(n) if gold[i] == 1]
    if not positives:
        return float("nan")

    def rank_of(i):
        r = 0
        for j in range(n):
            if scores[j] > scores[i]:
                r += 1
            elif scores[j] == scores[i]:
                if gold[j] > gold[i]:
                    r += 1
                elif gold[j] == gold[i] and j <= i:
                    r += 1
        return r  # 1-based because j == i counts itself

    total = 0.0
    for i in positives:
        r = rank_of(i)
        hits = sum(
            1
            for j in positives
            if scores[j] > scores[i] or (scores[j] == scores[i] and j <= i)
        )
        total += hits / r
    return total / len(positives)


def roc_auc_quadratic(pos, neg):
    """P(pos > neg) + 0.5 P(tie) by direct pair counting."""
    wins = 0.0
    for p in pos:
        for q in neg:
            if p > q:
                wins += 1.0
            elif p == q:
                wins += 0.5
    return wins / (len(pos) * len(neg))


def mrr_reference(true_score, corruption_scores):
    greater = sum(1 for s in corruption_scores if s > true_score)
    ties = sum(1 for s in corruption_scores if s == true_score)
    return 1.0 / (1.0 + greater + ties / 2.0)


def nearest_predicate(table, slot, data_preds):
    best = None
    best_d = None
    for p in data_preds:
        d = pair_dist(table, slot, p)
        if best_d is None or d < best_d:
            best, best_d = p, d
    return best, best_d
