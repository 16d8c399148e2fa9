"""Semantic-structure benchmark generator.

A property-inheritance hierarchy (10 isomorphic clones of a depth-4 category
tree with 110 entities each, by default) is rendered into multi-sentence
training documents. Four evaluation suites probe different ways of using
information that is implied but never stated: rephrasings, reversed
relations, two-premise syllogisms, and categories stripped of every fact but
their parent link. Each suite exists in a strong-cue variant (distractors
drawn graph-wide) and a reduced-cue variant (distractors drawn from the
answer's own clone branch).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

from .corpus import CONTEXT, CUE, Document, Segment
from .rng import SeededRng
from .vocab import Vocab, build_vocab

BRANCHING = (3, 3, 3)
N_ENTITIES_PER_CLONE = 110
PROPS_PER_CATEGORY = 2

EVAL_REPHRASE = "rephrase"
EVAL_REVERSAL = "reversal"
EVAL_SYLLOGISM = "syllogism"
EVAL_CATEGORY = "category_holdout"
EVAL_TYPES = (EVAL_REPHRASE, EVAL_REVERSAL, EVAL_SYLLOGISM, EVAL_CATEGORY)

VARIANT_STRONG = "strong"
VARIANT_REDUCED = "reduced"
CUE_VARIANTS = (VARIANT_STRONG, VARIANT_REDUCED)

MODIFIERS = ("truly", "really", "indeed")
FUNCTION_WORDS = ("every", "is", "a", "have", ".") + MODIFIERS

KIND_ISA_ENT = "isa_ent"
KIND_ISA_CAT = "isa_cat"
KIND_PROP_CAT = "prop_cat"
KIND_PROP_ENT = "prop_ent"
KIND_PROP_INHERITED = "prop_inherited"
KIND_REL_FWD = "rel_fwd"
KIND_REL_REV = "rel_rev"


class SemanticError(ValueError):
    pass


@dataclass(frozen=True)
class SemanticDatasetConfig:
    n_clones: int = 10
    n_docs: int = 11000
    statements_per_doc: tuple[int, int] = (8, 15)
    n_relations: int = 6
    pairs_per_relation: int = 30
    n_reversal_holdout_per_clone: int = 18
    n_syllogism_holdout_per_clone: int = 30
    stated_inherited_fraction: float = 0.25
    n_choices: int = 64
    suite_size: int = 512

    def __post_init__(self) -> None:
        if self.n_clones < 1:
            raise SemanticError("need at least one clone")
        if 2 * self.pairs_per_relation > N_ENTITIES_PER_CLONE:
            raise SemanticError("pairs_per_relation too large for 110 entities per clone")
        lo, hi = self.statements_per_doc
        if not (1 <= lo <= hi):
            raise SemanticError(f"bad statements_per_doc range: {self.statements_per_doc}")


@dataclass(frozen=True)
class Statement:
    sid: str
    kind: str
    clone: int
    subject: str
    obj: str
    verb: str = ""

    def base_tokens(self) -> list[str]:
        if self.kind in (KIND_ISA_ENT,):
            return [self.subject, "is", "a", self.obj, "."]
        if self.kind == KIND_ISA_CAT:
            return ["every", self.subject, "is", "a", self.obj, "."]
        if self.kind == KIND_PROP_CAT:
            return ["every", self.subject, "have", self.obj, "."]
        if self.kind in (KIND_PROP_ENT, KIND_PROP_INHERITED):
            return [self.subject, "have", self.obj, "."]
        if self.kind in (KIND_REL_FWD, KIND_REL_REV):
            return [self.subject, self.verb, self.obj, "."]
        raise SemanticError(f"unknown statement kind {self.kind!r}")

    def verb_position(self) -> int:
        tokens = self.base_tokens()
        for i, tok in enumerate(tokens):
            if tok in ("is", "have") or tok == self.verb:
                return i
        raise SemanticError(f"no verb in statement {self.sid}")

    def render(self, variant: int) -> list[str]:
        """Surface form `variant`: 0 is bare, others place one modifier."""
        tokens = self.base_tokens()
        if variant == 0:
            return tokens
        modifier = MODIFIERS[(variant - 1) % len(MODIFIERS)]
        if variant <= len(MODIFIERS):
            return [modifier] + tokens
        return tokens[: self.verb_position()] + [modifier] + tokens[self.verb_position():]

    def cue_tokens(self, variant: int) -> list[str]:
        # every template ends with "<object> ."
        return self.render(variant)[:-2]


N_VARIANTS = 1 + 2 * len(MODIFIERS)


def relation_verbs(config: SemanticDatasetConfig) -> list[tuple[str, str]]:
    return [(f"vrb{r}f", f"vrb{r}r") for r in range(config.n_relations)]


@dataclass
class Clone:
    index: int
    categories: list[list[str]]             # per level: [root], l1, l2, l3
    parent: dict[str, str]
    entities: list[str]
    entity_leaf: dict[str, str]
    cat_props: dict[str, list[str]]
    ent_prop: dict[str, str]
    relation_pairs: list[tuple[int, str, str]]   # (relation index, subject, object)

    def all_categories(self) -> list[str]:
        return [c for level in self.categories for c in level]

    def all_properties(self) -> list[str]:
        props = [p for plist in self.cat_props.values() for p in plist]
        props.extend(self.ent_prop[e] for e in self.entities)
        return props

    def ancestors(self, cat: str) -> list[str]:
        chain = []
        while cat in self.parent:
            cat = self.parent[cat]
            chain.append(cat)
        return chain

    def symbols(self) -> list[str]:
        return self.all_categories() + self.entities + self.all_properties()


@dataclass
class SemanticGraph:
    config: SemanticDatasetConfig
    clones: list[Clone]

    def clone_of_symbol(self) -> dict[str, int]:
        owner: dict[str, int] = {}
        for clone in self.clones:
            for sym in clone.symbols():
                owner[sym] = clone.index
        return owner


def _base_layout(config: SemanticDatasetConfig, rng: SeededRng) -> dict:
    """Index-level structure shared by every clone (keeps clones isomorphic)."""
    n_leaves = BRANCHING[0] * BRANCHING[1] * BRANCHING[2]
    leaf_of_entity = [i % n_leaves for i in range(n_leaves * 4)]
    leaf_of_entity += [0, 1][: N_ENTITIES_PER_CLONE - len(leaf_of_entity)]
    pairs: list[tuple[int, int, int]] = []
    for r in range(config.n_relations):
        gen = rng.child("relpattern", r).generator()
        chosen = gen.choice(N_ENTITIES_PER_CLONE, size=2 * config.pairs_per_relation, replace=False)
        for j in range(config.pairs_per_relation):
            pairs.append((r, int(chosen[2 * j]), int(chosen[2 * j + 1])))
    return {"leaf_of_entity": leaf_of_entity, "relation_pairs": pairs}


def generate_structure(config: SemanticDatasetConfig, rng: SeededRng) -> SemanticGraph:
    """n_clones isomorphic clones with disjoint entity/category/property names."""
    layout = _base_layout(config, rng)
    clones = []
    for c in range(config.n_clones):
        categories: list[list[str]] = [[f"c{c}_cat_root"]]
        parent: dict[str, str] = {}
        for level, fanout in enumerate(BRANCHING, start=1):
            next_level = []
            for p_idx, p in enumerate(categories[level - 1]):
                for k in range(fanout):
                    name = f"c{c}_cat{level}_{p_idx * fanout + k}"
                    parent[name] = p
                    next_level.append(name)
            categories.append(next_level)
        leaves = categories[-1]
        entities = [f"c{c}_ent{i:03d}" for i in range(N_ENTITIES_PER_CLONE)]
        entity_leaf = {
            e: leaves[layout["leaf_of_entity"][i]] for i, e in enumerate(entities)
        }
        prop_counter = 0
        cat_props: dict[str, list[str]] = {}
        for cat in (c2 for level in categories for c2 in level):
            cat_props[cat] = [
                f"c{c}_prop{prop_counter + k:03d}" for k in range(PROPS_PER_CATEGORY)
            ]
            prop_counter += PROPS_PER_CATEGORY
        ent_prop = {e: f"c{c}_eprop{i:03d}" for i, e in enumerate(entities)}
        relation_pairs = [
            (r, entities[a], entities[b]) for (r, a, b) in layout["relation_pairs"]
        ]
        clones.append(
            Clone(
                index=c,
                categories=categories,
                parent=parent,
                entities=entities,
                entity_leaf=entity_leaf,
                cat_props=cat_props,
                ent_prop=ent_prop,
                relation_pairs=relation_pairs,
            )
        )
    return SemanticGraph(config=config, clones=clones)


@dataclass
class HoldoutPlan:
    """Which statements train, which are reserved for each evaluation type."""

    trained: dict[str, Statement]
    reversal_items: list[tuple[Statement, Statement]]      # (trained fwd, held-out rev)
    syllogism_items: list[Statement]                       # held-out inherited props
    holdout_categories: list[tuple[int, str]]              # (clone, category)
    category_items: list[tuple[Statement, list[str]]]      # (held question, premise sids)

    def is_trained(self, sid: str) -> bool:
        return sid in self.trained


def _statement_universe(graph: SemanticGraph) -> dict[str, list[Statement]]:
    """All renderable statements grouped by kind (before any holdout)."""
    cfg = graph.config
    verbs = relation_verbs(cfg)
    by_kind: dict[str, list[Statement]] = {k: [] for k in (
        KIND_ISA_ENT, KIND_ISA_CAT, KIND_PROP_CAT, KIND_PROP_ENT,
        KIND_PROP_INHERITED, KIND_REL_FWD, KIND_REL_REV,
    )}
    for clone in graph.clones:
        c = clone.index
        for i, e in enumerate(clone.entities):
            by_kind[KIND_ISA_ENT].append(
                Statement(f"ie_{c}_{i}", KIND_ISA_ENT, c, e, clone.entity_leaf[e])
            )
            by_kind[KIND_PROP_ENT].append(
                Statement(f"pe_{c}_{i}", KIND_PROP_ENT, c, e, clone.ent_prop[e])
            )
            for anc in clone.ancestors(clone.entity_leaf[e]) + [clone.entity_leaf[e]]:
                for p in clone.cat_props[anc]:
                    by_kind[KIND_PROP_INHERITED].append(
                        Statement(f"ih_{c}_{i}_{p}", KIND_PROP_INHERITED, c, e, p)
                    )
        for cat, par in clone.parent.items():
            by_kind[KIND_ISA_CAT].append(
                Statement(f"ic_{c}_{cat}", KIND_ISA_CAT, c, cat, par)
            )
        for cat, props in clone.cat_props.items():
            for p in props:
                by_kind[KIND_PROP_CAT].append(
                    Statement(f"pc_{c}_{cat}_{p}", KIND_PROP_CAT, c, cat, p)
                )
        for j, (r, a, b) in enumerate(clone.relation_pairs):
            fwd_v, rev_v = verbs[r]
            by_kind[KIND_REL_FWD].append(
                Statement(f"rf_{c}_{r}_{j}", KIND_REL_FWD, c, a, b, verb=fwd_v)
            )
            by_kind[KIND_REL_REV].append(
                Statement(f"rr_{c}_{r}_{j}", KIND_REL_REV, c, b, a, verb=rev_v)
            )
    return by_kind


def build_holdout_plan(graph: SemanticGraph, rng: SeededRng) -> HoldoutPlan:
    cfg = graph.config
    universe = _statement_universe(graph)
    trained: dict[str, Statement] = {}
    for kind in (KIND_ISA_ENT, KIND_ISA_CAT, KIND_PROP_ENT):
        for st in universe[kind]:
            trained[st.sid] = st

    # category holdouts: one mid-level and two leaf categories per clone keep
    # only their parent link; their property statements are withheld
    holdout_cats: list[tuple[int, str]] = []
    for clone in graph.clones:
        gen = rng.child("cat-holdout", clone.index).generator()
        mid = clone.categories[2][int(gen.integers(0, len(clone.categories[2])))]
        leaves = gen.choice(len(clone.categories[3]), size=2, replace=False)
        holdout_cats.append((clone.index, mid))
        for li in leaves:
            holdout_cats.append((clone.index, clone.categories[3][int(li)]))
    holdout_cat_set = {cat for _, cat in holdout_cats}
    holdout_props = {
        p
        for clone in graph.clones
        for cat, props in clone.cat_props.items()
        if cat in holdout_cat_set
        for p in props
    }
    for st in universe[KIND_PROP_CAT]:
        if st.subject not in holdout_cat_set:
            trained[st.sid] = st

    # reversal holdouts: per clone, some relation facts train forward-only
    rev_by_fwd = {st.sid.replace("rr_", "rf_", 1): st for st in universe[KIND_REL_REV]}
    reversal_items: list[tuple[Statement, Statement]] = []
    for clone in graph.clones:
        fwd = [st for st in universe[KIND_REL_FWD] if st.clone == clone.index]
        gen = rng.child("rev-holdout", clone.index).generator()
        held_idx = set(
            int(i)
            for i in gen.choice(len(fwd), size=cfg.n_reversal_holdout_per_clone, replace=False)
        )
        for i, st in enumerate(fwd):
            trained[st.sid] = st
            if i in held_idx:
                reversal_items.append((st, rev_by_fwd[st.sid]))
            else:
                rev = rev_by_fwd[st.sid]
                trained[rev.sid] = rev

    # inherited entity properties: a sample is stated in training, a disjoint
    # sample (owned by lower-level, non-holdout categories) is the syllogism set
    syllogism_items: list[Statement] = []
    for clone in graph.clones:
        pool = [
            st
            for st in universe[KIND_PROP_INHERITED]
            if st.clone == clone.index and st.obj not in holdout_props
        ]
        deep = [st for st in pool if _prop_owner_level(clone, st.obj) >= 2]
        gen = rng.child("syllogism", clone.index).generator()
        syl_idx = gen.choice(len(deep), size=cfg.n_syllogism_holdout_per_clone, replace=False)
        chosen = {deep[int(i)].sid for i in syl_idx}
        syllogism_items.extend(st for st in deep if st.sid in chosen)
        rest = [st for st in pool if st.sid not in chosen]
        n_stated = int(len(rest) * cfg.stated_inherited_fraction)
        stated_idx = gen.choice(len(rest), size=n_stated, replace=False)
        for i in stated_idx:
            trained[rest[int(i)].sid] = rest[int(i)]

    # questions about the held-out categories that remain inferrable through
    # the kept parent link
    category_items: list[tuple[Statement, list[str]]] = []
    for c, cat in holdout_cats:
        clone = graph.clones[c]
        chain = clone.ancestors(cat)
        premises = [f"ic_{c}_{cat}"]
        for anc in chain:
            if anc in clone.parent:
                premises.append(f"ic_{c}_{anc}")
        for depth, anc in enumerate(chain):
            if anc in holdout_cat_set:
                continue
            link_premises = premises[: depth + 1]
            for p in clone.cat_props[anc]:
                q = Statement(f"ch_{c}_{cat}_{p}", KIND_PROP_CAT, c, cat, p)
                category_items.append((q, link_premises + [f"pc_{c}_{anc}_{p}"]))
            if depth >= 1:
                q = Statement(f"ca_{c}_{cat}_{anc}", KIND_ISA_CAT, c, cat, anc)
                category_items.append((q, link_premises))

    return HoldoutPlan(
        trained=trained,
        reversal_items=reversal_items,
        syllogism_items=syllogism_items,
        holdout_categories=holdout_cats,
        category_items=category_items,
    )


def _prop_owner_level(clone: Clone, prop: str) -> int:
    for level, cats in enumerate(clone.categories):
        for cat in cats:
            if prop in clone.cat_props.get(cat, ()):
                return level
    return -1


def build_semantic_vocab(graph: SemanticGraph) -> Vocab:
    inventory = list(FUNCTION_WORDS)
    for fwd_v, rev_v in relation_verbs(graph.config):
        inventory.extend((fwd_v, rev_v))
    for clone in graph.clones:
        inventory.extend(clone.symbols())
    return build_vocab(inventory)


class _Closure:
    """Entailment over the trained statements of one clone."""

    def __init__(self, clone: Clone, plan: HoldoutPlan):
        self.clone = clone
        self.cat_parents: dict[str, str] = {}
        self.cat_props_trained: dict[str, set[str]] = {}
        self.ent_leaf: dict[str, str] = {}
        self.ent_props_stated: dict[str, set[str]] = {}
        self.rel_pairs: dict[tuple[str, str], set[str]] = {}
        for st in plan.trained.values():
            if st.clone != clone.index:
                continue
            if st.kind == KIND_ISA_CAT:
                self.cat_parents[st.subject] = st.obj
            elif st.kind == KIND_ISA_ENT:
                self.ent_leaf[st.subject] = st.obj
            elif st.kind == KIND_PROP_CAT:
                self.cat_props_trained.setdefault(st.subject, set()).add(st.obj)
            elif st.kind in (KIND_PROP_ENT, KIND_PROP_INHERITED):
                self.ent_props_stated.setdefault(st.subject, set()).add(st.obj)
            elif st.kind in (KIND_REL_FWD, KIND_REL_REV):
                self.rel_pairs.setdefault((st.subject, st.verb), set()).add(st.obj)

    def cat_chain(self, cat: str) -> list[str]:
        chain = [cat]
        while chain[-1] in self.cat_parents:
            chain.append(self.cat_parents[chain[-1]])
        return chain

    def entailed_cats_of_entity(self, ent: str) -> set[str]:
        leaf = self.ent_leaf.get(ent)
        return set(self.cat_chain(leaf)) if leaf else set()

    def entailed_cats_of_cat(self, cat: str) -> set[str]:
        return set(self.cat_chain(cat)[1:])

    def entailed_props_of_entity(self, ent: str) -> set[str]:
        props = set(self.ent_props_stated.get(ent, ()))
        for cat in self.entailed_cats_of_entity(ent):
            props |= self.cat_props_trained.get(cat, set())
        return props

    def entailed_props_of_cat(self, cat: str) -> set[str]:
        props: set[str] = set()
        for anc in self.cat_chain(cat):
            props |= self.cat_props_trained.get(anc, set())
        return props

    def entailed_objects(self, statement: Statement) -> set[str]:
        """Every symbol that would make the statement's frame true."""
        kind, subj = statement.kind, statement.subject
        if kind == KIND_ISA_ENT:
            return self.entailed_cats_of_entity(subj)
        if kind == KIND_ISA_CAT:
            return self.entailed_cats_of_cat(subj)
        if kind in (KIND_PROP_ENT, KIND_PROP_INHERITED):
            return self.entailed_props_of_entity(subj)
        if kind == KIND_PROP_CAT:
            return self.entailed_props_of_cat(subj)
        if kind in (KIND_REL_FWD, KIND_REL_REV):
            return set(self.rel_pairs.get((subj, statement.verb), set()))
        raise SemanticError(f"unknown statement kind {kind!r}")

    def proves(self, statement: Statement) -> bool:
        return statement.obj in self.entailed_objects(statement)


def render_documents(
    graph: SemanticGraph,
    plan: HoldoutPlan,
    rng: SeededRng,
    vocab: Vocab,
) -> tuple[list[Document], dict[str, set[int]]]:
    """n_docs training passages; every trained statement appears at least once.

    Documents group 8-15 statements around an anchor entity or category of one
    clone, rendered one word per token, in shuffled order.
    """
    cfg = graph.config
    _check_premises(graph, plan)
    trained = list(plan.trained.values())
    by_subject: dict[str, list[Statement]] = {}
    by_clone: dict[int, list[Statement]] = {}
    for st in trained:
        by_subject.setdefault(st.subject, []).append(st)
        by_clone.setdefault(st.clone, []).append(st)

    anchors: list[tuple[int, str]] = []
    for clone in graph.clones:
        anchors.extend((clone.index, e) for e in clone.entities)
        anchors.extend((clone.index, c) for c in clone.all_categories())
    order = rng.child("anchor-order").generator().permutation(len(anchors))

    lo, hi = cfg.statements_per_doc
    chosen_per_doc: list[list[Statement]] = []
    emitted: set[str] = set()
    for d in range(cfg.n_docs):
        gen = rng.child("doc", d).generator()
        clone_idx, anchor = anchors[int(order[d % len(anchors)])]
        clone = graph.clones[clone_idx]
        neighborhood = list(by_subject.get(anchor, []))
        if anchor in clone.entity_leaf:
            neighborhood += by_subject.get(clone.entity_leaf[anchor], [])
            neighborhood += [
                st for st in by_clone[clone_idx]
                if st.kind in (KIND_REL_FWD, KIND_REL_REV) and st.obj == anchor
            ]
        elif anchor in clone.parent:
            neighborhood += by_subject.get(clone.parent[anchor], [])
        size = int(gen.integers(lo, hi + 1))
        picks: list[Statement] = []
        seen: set[str] = set()
        pools = [neighborhood, by_clone[clone_idx]]
        for pool in pools:
            if len(picks) >= size:
                break
            candidates = [st for st in pool if st.sid not in seen]
            take = min(size - len(picks), len(candidates))
            if take:
                for i in gen.choice(len(candidates), size=take, replace=False):
                    st = candidates[int(i)]
                    picks.append(st)
                    seen.add(st.sid)
        picks = [picks[int(i)] for i in gen.permutation(len(picks))]
        chosen_per_doc.append(picks)
        emitted.update(st.sid for st in picks)

    missing = [st for st in trained if st.sid not in emitted]
    occurrences: dict[str, int] = {}
    for doc_stmts in chosen_per_doc:
        for st in doc_stmts:
            occurrences[st.sid] = occurrences.get(st.sid, 0) + 1
    docs_of_clone: dict[int, list[int]] = {}
    for d, doc_stmts in enumerate(chosen_per_doc):
        if doc_stmts:
            docs_of_clone.setdefault(doc_stmts[0].clone, []).append(d)
    fix_gen = rng.child("coverage").generator()
    for st in missing:
        # swap the statement into a document of its own clone, replacing a
        # statement that already appears elsewhere
        placed = False
        doc_ids = docs_of_clone.get(st.clone, [])
        for di in fix_gen.permutation(len(doc_ids)):
            doc_stmts = chosen_per_doc[doc_ids[int(di)]]
            for i, cand in enumerate(doc_stmts):
                if occurrences.get(cand.sid, 0) > 1:
                    occurrences[cand.sid] -= 1
                    doc_stmts[i] = st
                    occurrences[st.sid] = 1
                    placed = True
                    break
            if placed:
                break
        if not placed:
            raise SemanticError(
                f"could not render trained statement {st.sid} (n_docs too small)"
            )

    docs: list[Document] = []
    variant_usage: dict[str, set[int]] = {}
    for d, picks in enumerate(chosen_per_doc):
        gen = rng.child("variants", d).generator()
        symbols: list[str] = []
        for st in picks:
            variant = int(gen.integers(0, N_VARIANTS))
            variant_usage.setdefault(st.sid, set()).add(variant)
            symbols.extend(st.render(variant))
        meta = {
            "benchmark": "semantic_structure",
            "split": "train",
            "doc_id": f"doc{d}",
            "clone": str(picks[0].clone),
            "provides": ";".join(f"stmt:{sid}" for sid in sorted({s.sid for s in picks})),
            "needs": ",".join(f"stmt:{st.sid}" for st in picks[:4]),
        }
        docs.append(
            Document(
                tokens=vocab.encode(symbols),
                segments=[Segment(0, len(symbols), CONTEXT)],
                meta=meta,
            )
        )
    return docs, variant_usage


def _check_premises(graph: SemanticGraph, plan: HoldoutPlan) -> None:
    """Every evaluation item must be provable from the trained statements."""
    closures = {clone.index: _Closure(clone, plan) for clone in graph.clones}
    for fwd, rev in plan.reversal_items:
        if rev.sid in plan.trained or fwd.sid not in plan.trained:
            raise SemanticError(f"reversal item {rev.sid} is not held out correctly")
        if fwd.obj != rev.subject or not closures[fwd.clone].proves(fwd):
            raise SemanticError(f"reversal item {rev.sid} lacks its forward premise")
    for st in plan.syllogism_items:
        if st.sid in plan.trained:
            raise SemanticError(f"syllogism item {st.sid} leaked into training")
        if not closures[st.clone].proves(st):
            raise SemanticError(f"syllogism item {st.sid} is not inferrable from training")
    for q, premises in plan.category_items:
        if not closures[q.clone].proves(q):
            raise SemanticError(f"category item {q.sid} is not inferrable from training")
        for sid in premises:
            if sid not in plan.trained:
                raise SemanticError(f"category item {q.sid} premise {sid} is not trained")


def _candidate_pools(graph: SemanticGraph) -> dict[str, dict[str, list[str]]]:
    pools: dict[str, dict[str, list[str]]] = {"global": {"cat": [], "ent": [], "prop": []}}
    for clone in graph.clones:
        key = f"clone{clone.index}"
        pools[key] = {
            "cat": clone.all_categories(),
            "ent": list(clone.entities),
            "prop": clone.all_properties(),
        }
        for t in ("cat", "ent", "prop"):
            pools["global"][t].extend(pools[key][t])
    return pools


def _answer_type(kind: str) -> str:
    if kind in (KIND_ISA_ENT, KIND_ISA_CAT):
        return "cat"
    if kind in (KIND_PROP_CAT, KIND_PROP_ENT, KIND_PROP_INHERITED):
        return "prop"
    return "ent"


def build_eval_suites(
    graph: SemanticGraph,
    plan: HoldoutPlan,
    rng: SeededRng,
    vocab: Vocab,
    variant_usage: dict[str, set[int]],
) -> dict[str, list[Document]]:
    """Multiple-choice suites for each eval type and cue variant.

    Items are stored as prompt documents; 64 candidate completions and the
    answer index ride along in the metadata. The strong and reduced variants
    of a suite share items and differ only in distractor sampling.
    """
    cfg = graph.config
    closures = {clone.index: _Closure(clone, plan) for clone in graph.clones}
    pools = _candidate_pools(graph)

    def distractors(statement: Statement, variant: str, gen) -> list[str]:
        entailed = closures[statement.clone].entailed_objects(statement)
        want = _answer_type(statement.kind)
        if variant == VARIANT_STRONG:
            source = [pools["global"][want]]
        else:
            clone_pool = pools[f"clone{statement.clone}"]
            source = [clone_pool[want]] + [
                clone_pool[t] for t in ("prop", "ent", "cat") if t != want
            ]
        picks: list[str] = []
        seen = set(entailed) | {statement.obj}
        for pool in source:
            candidates = [s for s in pool if s not in seen]
            take = min(cfg.n_choices - 1 - len(picks), len(candidates))
            if take:
                for i in gen.choice(len(candidates), size=take, replace=False):
                    picks.append(candidates[int(i)])
                    seen.add(candidates[int(i)])
            if len(picks) == cfg.n_choices - 1:
                return picks
        raise SemanticError(
            f"clone {statement.clone} has fewer than {cfg.n_choices - 1} valid "
            f"distractors for item {statement.sid}"
        )

    def make_item(
        statement: Statement,
        eval_type: str,
        variant: str,
        idx: int,
        premises: Sequence[str],
        cue_variant_id: int = 0,
    ) -> Document:
        gen = rng.child("item", eval_type, variant, idx).generator()
        wrong = distractors(statement, variant, gen)
        answer_pos = int(gen.integers(0, cfg.n_choices))
        choices = wrong[:answer_pos] + [statement.obj] + wrong[answer_pos:]
        cue = statement.cue_tokens(cue_variant_id)
        meta = {
            "benchmark": "semantic_structure",
            "split": f"{eval_type}_{variant}",
            "doc_id": f"{eval_type}_{variant}_{idx}",
            "eval_type": eval_type,
            "cue_variant": variant,
            "item": statement.sid,
            "choices": "|".join(f"{sym} ." for sym in choices),
            "answer_index": str(answer_pos),
            "needs": ";".join(f"stmt:{sid}" for sid in premises),
        }
        return Document(
            tokens=vocab.encode(cue),
            segments=[Segment(0, len(cue), CUE)],
            meta=meta,
        )

    suites: dict[str, list[Document]] = {}
    gen = rng.child("suite-sample").generator()

    rephrasable = [
        st
        for st in plan.trained.values()
        if variant_usage.get(st.sid) and len(variant_usage[st.sid]) < N_VARIANTS
        and st.kind != KIND_REL_REV
    ]
    rephrasable.sort(key=lambda st: st.sid)
    n = min(cfg.suite_size, len(rephrasable))
    chosen = [rephrasable[int(i)] for i in gen.choice(len(rephrasable), size=n, replace=False)]
    rephrase_specs = []
    for st in chosen:
        unseen = sorted(set(range(N_VARIANTS)) - variant_usage[st.sid])
        rephrase_specs.append((st, [st.sid], unseen[0]))

    reversal_specs = [
        (rev, [fwd.sid], 0) for (fwd, rev) in plan.reversal_items
    ][: cfg.suite_size]
    syllogism_specs = []
    for st in plan.syllogism_items[: cfg.suite_size]:
        clone = graph.clones[st.clone]
        leaf = clone.entity_leaf[st.subject]
        prems = [f"ie_{st.clone}_{clone.entities.index(st.subject)}"]
        chain = [leaf] + clone.ancestors(leaf)
        for cat in chain:
            if st.obj in clone.cat_props[cat]:
                prems.append(f"pc_{st.clone}_{cat}_{st.obj}")
                break
            prems.append(f"ic_{st.clone}_{cat}")
        syllogism_specs.append((st, prems, 0))
    category_specs = [
        (q, premises, 0) for (q, premises) in plan.category_items
    ][: cfg.suite_size]

    for eval_type, specs in (
        (EVAL_REPHRASE, rephrase_specs),
        (EVAL_REVERSAL, reversal_specs),
        (EVAL_SYLLOGISM, syllogism_specs),
        (EVAL_CATEGORY, category_specs),
    ):
        for variant in CUE_VARIANTS:
            suites[f"{eval_type}_{variant}"] = [
                make_item(st, eval_type, variant, i, prems, cue_variant_id=cv)
                for i, (st, prems, cv) in enumerate(specs)
            ]
    return suites


@dataclass
class SemanticDataset:
    config: SemanticDatasetConfig
    vocab: Vocab
    graph: SemanticGraph
    plan: HoldoutPlan
    train_docs: list[Document] = field(repr=False, default_factory=list)
    suites: dict[str, list[Document]] = field(repr=False, default_factory=dict)


def generate_dataset(config: SemanticDatasetConfig, rng: SeededRng) -> SemanticDataset:
    graph = generate_structure(config, rng)
    vocab = build_semantic_vocab(graph)
    plan = build_holdout_plan(graph, rng)
    docs, variant_usage = render_documents(graph, plan, rng, vocab)
    suites = build_eval_suites(graph, plan, rng, vocab, variant_usage)
    return SemanticDataset(
        config=config, vocab=vocab, graph=graph, plan=plan,
        train_docs=docs, suites=suites,
    )


def suite_chance_levels(config: SemanticDatasetConfig) -> dict[str, float]:
    return {
        f"{t}_{v}": 1.0 / config.n_choices for t in EVAL_TYPES for v in CUE_VARIANTS
    }
