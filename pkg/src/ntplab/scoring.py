"""Vectorized proof scoring for the training loop and evaluators.

Semantically equal to prover.enumerate_proofs + trainer.select_proof_set
(property-tested), but never materializes proofs: it works in distance
space (proof score = exp(-max pair distance)). Because fact unification
binds constants exactly, a goal's candidate facts are the other predicates
true at its argument tuple, so per-batch work reduces to small
(goals x predicates) tables.

Body slots are pruned to min(k_max, k_selection) candidates: the top-k
proofs of the k_max-pruned cross product only ever use per-slot candidates
ranked <= k, so outcomes are identical while combo arrays shrink from
k_max^R to k^R.
"""

from __future__ import annotations

from typing import NamedTuple, Sequence

import numpy as np

from .logic import Fact, KnowledgeBase, RuleInstance
from .trainer import EmbeddingStore, Heuristic, SelectedBatch


def cross_dist(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Pairwise Euclidean distances, (n, m), via the quadratic expansion.

    The matmul form loses the exact 0.0 for identical rows to cancellation
    noise; callers that rely on exact zeros for identical-symbol pairs
    restore them explicitly.
    """
    sq = (a * a).sum(axis=1)[:, None] + (b * b).sum(axis=1)[None, :] - 2.0 * (a @ b.T)
    np.maximum(sq, 0.0, out=sq)
    return np.sqrt(sq)


class _FactIndex(NamedTuple):
    # per argument tuple: data-predicate positions true there, in kb
    # insertion order (the prover's candidate enumeration order)
    by_args: dict[tuple[int, ...], list[int]]


class BatchScorer:
    def __init__(
        self,
        kb: KnowledgeBase,
        rules: Sequence[RuleInstance],
        store: EmbeddingStore,
        k_max: int | None,
    ) -> None:
        self.kb = kb
        self.rules = list(rules)
        self.store = store
        self.k_max = None if k_max is None else int(k_max)

        self._pred_pos_of = {p: i for i, p in enumerate(kb.data_predicates)}
        self.pred_syms = np.asarray(kb.data_predicates, dtype=np.int64)

        self._index: dict[int, _FactIndex] = {}
        for order in sorted({f.order for f in kb.facts}):
            by_args: dict[tuple[int, ...], list[int]] = {}
            for f in kb.facts:
                if f.order == order:
                    by_args.setdefault(f.args, []).append(self._pred_pos_of[f.predicate])
            self._index[order] = _FactIndex(by_args)

        self.head_syms = np.array([r.head for r in self.rules], dtype=np.int64)
        self.body_syms = np.array([b for r in self.rules for b in r.body], dtype=np.int64)
        offsets = [0]
        for r in self.rules:
            offsets.append(offsets[-1] + r.template.size)
        self.slot_offset = offsets  # rule i owns flat slots [offsets[i], offsets[i+1])

    # -- shared per-batch pieces ------------------------------------------

    def _tables(self):
        table = self.store.table
        pred_emb = table[self.pred_syms]
        d_dd = cross_dist(pred_emb, pred_emb)
        np.fill_diagonal(d_dd, 0.0)  # identical predicate pairs are exactly 0
        d_dh = (
            cross_dist(table[self.head_syms], pred_emb)
            if len(self.rules)
            else np.zeros((0, len(self.pred_syms)))
        )
        d_bd = (
            cross_dist(table[self.body_syms], pred_emb)
            if len(self.body_syms)
            else np.zeros((0, len(self.pred_syms)))
        )
        return d_dd, d_dh, d_bd

    def _candidates(self, facts: Sequence[Fact], order: int):
        """Padded (G, C) candidate predicate positions plus validity mask;
        candidates keep kb insertion order within each goal."""
        index = self._index[order].by_args
        gp = np.empty(len(facts), dtype=np.int64)
        cands = []
        width = 1
        for g, f in enumerate(facts):
            p = self._pred_pos_of[f.predicate]
            gp[g] = p
            cc = [c for c in index.get(f.args, ()) if c != p]
            cands.append(cc)
            width = max(width, len(cc))
        cand_pp = np.zeros((len(facts), width), dtype=np.int64)
        valid = np.zeros((len(facts), width), dtype=bool)
        for g, cc in enumerate(cands):
            if cc:
                cand_pp[g, : len(cc)] = cc
                valid[g, : len(cc)] = True
        return gp, cand_pp, valid

    @staticmethod
    def _row_topk(dists: np.ndarray, k: int) -> tuple[np.ndarray, np.ndarray]:
        """Per-row k smallest entries of (G, n), distance-ascending, ties by
        column (candidate enumeration order)."""
        k = min(k, dists.shape[1])
        rows = np.arange(dists.shape[0])[:, None]
        idx = np.argsort(dists, axis=1, kind="stable")[:, :k]
        return idx, dists[rows, idx]

    # -- selection ---------------------------------------------------------

    def select_for_goals(
        self, goals: Sequence[tuple[Fact, int]], heuristic: Heuristic
    ) -> SelectedBatch:
        """Selected proofs for a batch of (goal, label) pairs, as flat
        arrays of (score, worst pair, worst distance)."""
        orders = {f.order for f, _ in goals}
        batches: list[SelectedBatch] = []
        for order in sorted(orders):
            members = [i for i, (f, _) in enumerate(goals) if f.order == order]
            self._select_group(
                [goals[i][0] for i in members],
                [goals[i][1] for i in members],
                members,
                order,
                heuristic,
                batches,
            )
        if not batches:
            return SelectedBatch.from_rows([])
        if len(batches) == 1:
            return batches[0]
        merged = {
            name: np.concatenate([getattr(b, name) for b in batches])
            for name in ("goal_index", "y", "scores", "a", "b", "dists")
        }
        order_ix = np.argsort(merged["goal_index"], kind="stable")
        return SelectedBatch(**{name: arr[order_ix] for name, arr in merged.items()})

    def _select_group(self, facts, ys, goal_ids, order, heuristic, out) -> None:
        for r in self.rules:
            if r.template.order != order:
                raise ValueError(
                    f"rule order {r.template.order} does not match goal order {order}"
                )
        if order not in self._index:
            return  # no same-arity training facts: no proofs at all

        G = len(facts)
        k_sel = heuristic.per_path_k
        grange = np.arange(G)[:, None]
        gp, cand_pp, valid = self._candidates(facts, order)
        d_dd, d_dh, d_bd = self._tables()

        # fact path: one proof per candidate predicate at the goal's args
        fd = np.where(valid, d_dd[gp[:, None], cand_pp], np.inf)
        fidx, fact_dists = self._row_topk(fd, k_sel)
        fact_cands = cand_pp[grange, fidx]

        # rule paths
        cap = k_sel if self.k_max is None else min(k_sel, self.k_max)
        rule_tops: list[tuple[np.ndarray, np.ndarray]] = []  # (dists, choices (G,m,R))
        for ri, rule in enumerate(self.rules):
            R = rule.template.size
            kept_pp = []
            kept_d = []
            for j in range(R):
                beta = d_bd[self.slot_offset[ri] + j]
                sd = np.where(valid, beta[cand_pp], np.inf)
                sidx, sv = self._row_topk(sd, cap)
                # order kept candidates by enumeration rank for combo order
                order_by_col = np.argsort(sidx, axis=1, kind="stable")
                scol = sidx[grange, order_by_col]
                sval = sv[grange, order_by_col]
                kept_pp.append(cand_pp[grange, scol])
                kept_d.append(sval)
            h = d_dh[ri, gp]
            c = kept_pp[0].shape[1]
            if R == 1:
                flat = np.maximum(kept_d[0], h[:, None])
            elif R == 2:
                flat = np.maximum(kept_d[0][:, :, None], kept_d[1][:, None, :])
                flat = np.maximum(flat, h[:, None, None]).reshape(G, c * c)
            else:
                flat = np.maximum(kept_d[0][:, :, None, None], kept_d[1][:, None, :, None])
                flat = np.maximum(flat, kept_d[2][:, None, None, :])
                flat = np.maximum(flat, h[:, None, None, None]).reshape(G, c**3)
            m = min(k_sel, flat.shape[1])
            top = np.argsort(flat, axis=1, kind="stable")[:, :m]
            top_d = flat[grange, top]
            comp = np.unravel_index(top, (c,) * R)
            choice = np.stack([kept_pp[j][grange, comp[j]] for j in range(R)], axis=2)
            rule_tops.append((top_d, choice))

        fact_mask, rule_masks = _select_masks(
            fact_dists, [top_d for top_d, _ in rule_tops], heuristic
        )

        parts = []
        if fact_mask.any():
            g, rk = np.nonzero(fact_mask)
            cand = fact_cands[g, rk]
            dist = d_dd[gp[g], cand]
            parts.append((g, dist, self.pred_syms[gp[g]], self.pred_syms[cand]))
        for ri in range(len(self.rules)):
            if rule_masks[ri].any():
                g, rk = np.nonzero(rule_masks[ri])
                parts.append(self._resolve_rule(g, ri, rule_tops[ri][1][g, rk], gp, d_dh, d_bd))
        if not parts:
            return
        g_all = np.concatenate([p[0] for p in parts])
        dist = np.concatenate([p[1] for p in parts])
        a = np.concatenate([p[2] for p in parts])
        b = np.concatenate([p[3] for p in parts])
        order_ix = np.argsort(g_all, kind="stable")  # goal order; fact block first within
        gids = np.asarray(goal_ids, dtype=np.int64)
        ysarr = np.asarray(ys, dtype=np.float64)
        out.append(
            SelectedBatch(
                goal_index=gids[g_all[order_ix]],
                y=ysarr[g_all[order_ix]],
                scores=np.exp(-dist[order_ix]),
                a=a[order_ix].astype(np.int64),
                b=b[order_ix].astype(np.int64),
                dists=dist[order_ix],
            )
        )

    def _resolve_rule(self, g, ri, choices, gp, d_dh, d_bd):
        """Worst unification pair per selected rule proof.

        Columns follow the unification list order (head pair, then one
        predicate pair per body slot; constant pairs are identical and
        omitted), so np.argmax's first-maximum matches the lowest-index
        tie rule.
        """
        R = self.rules[ri].template.size
        slot0 = self.slot_offset[ri]
        cols = [d_dh[ri, gp[g]]]
        a_syms = [self.pred_syms[gp[g]]]
        b_syms = [np.full(g.shape, self.head_syms[ri])]
        for j in range(R):
            pj = choices[:, j]
            cols.append(d_bd[slot0 + j, pj])
            a_syms.append(np.full(g.shape, self.body_syms[slot0 + j]))
            b_syms.append(self.pred_syms[pj])
        mat = np.stack(cols, axis=1)
        worst = np.argmax(mat, axis=1)
        rng = np.arange(len(g))
        return (
            g,
            mat[rng, worst],
            np.stack(a_syms, axis=1)[rng, worst],
            np.stack(b_syms, axis=1)[rng, worst],
        )

    # -- evaluation ----------------------------------------------------------

    def best_scores(self, goals: Sequence[Fact]) -> np.ndarray:
        """Best proof score per goal (0 when no proof exists)."""
        out = np.zeros(len(goals))
        for order in sorted({f.order for f in goals}):
            members = [i for i, f in enumerate(goals) if f.order == order]
            if order not in self._index:
                continue
            facts = [goals[i] for i in members]
            gp, cand_pp, valid = self._candidates(facts, order)
            d_dd, d_dh, d_bd = self._tables()
            fd = np.where(valid, d_dd[gp[:, None], cand_pp], np.inf)
            best = fd.min(axis=1)
            for ri, rule in enumerate(self.rules):
                if rule.template.order != order:
                    raise ValueError(
                        f"rule order {rule.template.order} does not match goal order {order}"
                    )
                rd = d_dh[ri, gp]
                for j in range(rule.template.size):
                    beta = d_bd[self.slot_offset[ri] + j]
                    sd = np.where(valid, beta[cand_pp], np.inf)
                    rd = np.maximum(rd, sd.min(axis=1))
                best = np.minimum(best, rd)
            scores = np.exp(-best)
            scores[~np.isfinite(best)] = 0.0
            for g, i in enumerate(members):
                out[i] = scores[g]
        return out


def _select_masks(
    fact_d: np.ndarray, rule_ds: list[np.ndarray], heuristic: Heuristic
) -> tuple[np.ndarray, list[np.ndarray]]:
    """Boolean selection masks over per-path distance-ascending tops.

    Entries at +inf are padding (fewer proofs than k exist) and are never
    selected. Path order (fact, then rules in instantiation order) breaks
    exact ties, matching proof enumeration order.
    """
    kind = heuristic.kind
    all_d = [fact_d] + rule_ds
    if kind == "all_path":
        masks = [np.zeros(d.shape, dtype=bool) for d in all_d]
        for d, m in zip(all_d, masks):
            if d.shape[1]:
                m[:, 0] = np.isfinite(d[:, 0])
    elif kind == "top_k_all_path":
        masks = [np.isfinite(d) for d in all_d]
    elif kind == "best_only":
        firsts = np.stack(
            [d[:, 0] if d.shape[1] else np.full(d.shape[0], np.inf) for d in all_d], axis=1
        )
        best_path = np.argmin(firsts, axis=1)  # first minimum = path order
        masks = [np.zeros(d.shape, dtype=bool) for d in all_d]
        g = np.arange(fact_d.shape[0])
        ok = np.isfinite(firsts[g, best_path])
        for pi, m in enumerate(masks):
            hit = (best_path == pi) & ok
            if m.shape[1]:
                m[hit, 0] = True
    elif kind in ("top_k", "combined_alt"):
        widths = [d.shape[1] for d in all_d]
        concat = np.concatenate(all_d, axis=1)
        k = min(heuristic.k, concat.shape[1])
        # stable sort: ties resolve to the lowest concat column = path order
        top = np.argsort(concat, axis=1, kind="stable")[:, :k]
        sel = np.zeros(concat.shape, dtype=bool)
        np.put_along_axis(sel, top, True, axis=1)
        sel &= np.isfinite(concat)
        masks = []
        start = 0
        for w in widths:
            masks.append(sel[:, start : start + w])
            start += w
        if kind == "combined_alt":
            for d, m in zip(all_d, masks):
                if d.shape[1]:
                    m[:, 0] |= np.isfinite(d[:, 0])
    else:  # pragma: no cover
        raise AssertionError(kind)
    return masks[0], masks[1:]
