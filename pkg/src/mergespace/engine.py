"""The Merge action on workspaces.

A single application picks a pair (S, S') out of a coproduct term, grafts
M(S, S'), and reassembles the workspace.  Depending on where S and S' come
from this is External Merge, Internal Merge, one of the three Sideward
Merge forms, or the identity reassembly.  Growth happens only at roots;
nothing in this module can insert material at an interior edge.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace


from mergespace.forest import (
    AccessibleTermRef,
    ForestError,
    Leaf,
    Node,
    SyntaxTree,
    Workspace,
    accessible_terms,
    quotient,
    subtree_at,
    workspace,
)

EM, IM, SM1, SM2, SM3, ID_SM = "EM", "IM", "SM1", "SM2", "SM3", "ID"


class MergeError(ValueError):
    pass


class ECViolation(MergeError):
    """Raised for any request that would grow structure at a non-root vertex."""


@dataclass(frozen=True)
class MergeConfig:
    mode: str = "d"  # coproduct flavor: "c" traces, "d" deletion
    allow_im: bool = True
    allow_sm: bool = True
    allow_identity_sm: bool = False
    allow_sibling_cut: bool = False  # non-root cuts of both edges below one vertex
    atomic_sm_only: bool = False  # SM extractions restricted to single leaves; no SM2

    def __post_init__(self):
        if self.mode not in ("c", "d"):
            raise MergeError(f"unknown coproduct mode {self.mode!r}")


@dataclass(frozen=True)
class MergeStep:
    """One application of a Merge operator.

    ``extractions`` holds (subtree, host component) for each accessible term
    pulled out; ``pair`` is the merged (S, S'); the classification tag is
    fixed by the provenance of S and S'.
    """

    input_ws: Workspace
    output_ws: Workspace
    tag: str
    mode: str
    pair: tuple
    extractions: tuple = ()
    sources: tuple = ()  # hashable signature for dedup / table lookups

    def __repr__(self):
        return f"<{self.tag} {self.input_ws!r} -> {self.output_ws!r}>"


def _rest(ws: Workspace, drop: set) -> tuple:
    return tuple(t for i, t in enumerate(ws.components) if i not in drop)


def _em_step(ws: Workspace, i: int, j: int, mode: str = "d") -> MergeStep:
    ti, tj = ws.components[i], ws.components[j]
    merged = Node(ti, tj)
    out = Workspace(_rest(ws, {i, j}) + (merged,))
    return MergeStep(
        ws, out, EM, mode, (ti, tj), sources=(("comp", i), ("comp", j))
    )


def _im_step(ws: Workspace, ref: AccessibleTermRef, mode: str) -> MergeStep:
    host = ws.components[ref.component]
    quot_ws = quotient(workspace(host), [replace(ref, component=0)], mode)
    if quot_ws.is_unit():
        raise MergeError("internal merge would leave an empty quotient")
    (quot,) = quot_ws.components
    merged = Node(ref.subtree, quot)
    out = Workspace(_rest(ws, {ref.component}) + (merged,))
    return MergeStep(
        ws,
        out,
        IM,
        mode,
        (ref.subtree, quot),
        extractions=((ref.subtree, host),),
        sources=(("term", ref.component, ref.path), ("quotient",)),
    )


def _sm1_step(ws: Workspace, ref: AccessibleTermRef, other: int, mode: str) -> MergeStep:
    host = ws.components[ref.component]
    t_other = ws.components[other]
    quot_ws = quotient(workspace(host), [replace(ref, component=0)], mode)
    merged = Node(ref.subtree, t_other)
    out = Workspace(_rest(ws, {ref.component, other}) + quot_ws.components + (merged,))
    return MergeStep(
        ws,
        out,
        SM1,
        mode,
        (ref.subtree, t_other),
        extractions=((ref.subtree, host),),
        sources=(("term", ref.component, ref.path), ("comp", other)),
    )


def _sm2_step(ws: Workspace, r1: AccessibleTermRef, r2: AccessibleTermRef, mode: str) -> MergeStep:
    h1, h2 = ws.components[r1.component], ws.components[r2.component]
    q1 = quotient(workspace(h1), [replace(r1, component=0)], mode)
    q2 = quotient(workspace(h2), [replace(r2, component=0)], mode)
    merged = Node(r1.subtree, r2.subtree)
    out = Workspace(
        _rest(ws, {r1.component, r2.component}) + q1.components + q2.components + (merged,)
    )
    return MergeStep(
        ws,
        out,
        SM2,
        mode,
        (r1.subtree, r2.subtree),
        extractions=((r1.subtree, h1), (r2.subtree, h2)),
        sources=tuple(sorted([("term", r1.component, r1.path), ("term", r2.component, r2.path)])),
    )


def _sm3_step(ws: Workspace, r1: AccessibleTermRef, r2: AccessibleTermRef, mode: str) -> MergeStep:
    host = ws.components[r1.component]
    quot = quotient(
        workspace(host), [replace(r1, component=0), replace(r2, component=0)], mode
    )
    merged = Node(r1.subtree, r2.subtree)
    out = Workspace(_rest(ws, {r1.component}) + quot.components + (merged,))
    return MergeStep(
        ws,
        out,
        SM3,
        mode,
        (r1.subtree, r2.subtree),
        extractions=((r1.subtree, host), (r2.subtree, host)),
        sources=tuple(sorted([("term", r1.component, r1.path), ("term", r2.component, r2.path)])),
    )


def _identity_step(ws: Workspace, ci: int, mode: str) -> MergeStep:
    comp = ws.components[ci]
    refs = [
        AccessibleTermRef(ci, (0,), comp.left),
        AccessibleTermRef(ci, (1,), comp.right),
    ]
    quot = quotient(workspace(comp), [replace(r, component=0) for r in refs], mode)
    merged = Node(comp.left, comp.right)
    out = Workspace(_rest(ws, {ci}) + quot.components + (merged,))
    return MergeStep(
        ws,
        out,
        ID_SM,
        mode,
        (comp.left, comp.right),
        extractions=((comp.left, comp), (comp.right, comp)),
        sources=(("identity", ci),),
    )


def _disjoint(r1: AccessibleTermRef, r2: AccessibleTermRef) -> bool:
    p1, p2 = r1.path, r2.path
    n = min(len(p1), len(p2))
    return p1[:n] != p2[:n]


def _siblings(r1: AccessibleTermRef, r2: AccessibleTermRef) -> bool:
    return len(r1.path) == len(r2.path) and r1.path[:-1] == r2.path[:-1]


def all_merge_successors(ws: Workspace, cfg: MergeConfig = MergeConfig()) -> list:
    """Every distinct one-step Merge application under the flags.

    EM merges two whole components; IM an accessible term with its own
    host's quotient (skipped in mode "d" when the term is a root child,
    where it is just the identity); SM1 an accessible term with another
    whole component; SM2 terms from two components; SM3 two disjoint terms
    from one component.  atomic_sm_only keeps only single-leaf SM
    extractions and drops SM2, the edge set of the atomic subgraph.
    """
    if ws.b0 < 1:
        raise MergeError("workspace has no components")
    steps: list = []
    n = ws.b0
    for i in range(n):
        for j in range(i + 1, n):
            steps.append(_em_step(ws, i, j, cfg.mode))
    terms = accessible_terms(ws)
    if cfg.allow_im:
        for ref in terms:
            if cfg.mode == "d" and len(ref.path) == 1:
                continue  # quotient re-merge reproduces the host exactly
            steps.append(_im_step(ws, ref, cfg.mode))
    if cfg.allow_sm:
        atomic = lambda r: isinstance(r.subtree, Leaf)
        for ref in terms:
            if cfg.atomic_sm_only and not atomic(ref):
                continue
            for other in range(n):
                if other != ref.component:
                    steps.append(_sm1_step(ws, ref, other, cfg.mode))
        if not cfg.atomic_sm_only:
            for a in range(len(terms)):
                for b in range(a + 1, len(terms)):
                    r1, r2 = terms[a], terms[b]
                    if r1.component != r2.component:
                        steps.append(_sm2_step(ws, r1, r2, cfg.mode))
        for a in range(len(terms)):
            for b in range(a + 1, len(terms)):
                r1, r2 = terms[a], terms[b]
                if r1.component != r2.component or not _disjoint(r1, r2):
                    continue
                if cfg.atomic_sm_only and not (atomic(r1) and atomic(r2)):
                    continue
                if _siblings(r1, r2):
                    if len(r1.path) == 1:
                        continue  # root sibling pair is the identity reassembly
                    if not cfg.allow_sibling_cut:
                        continue
                steps.append(_sm3_step(ws, r1, r2, cfg.mode))
    if cfg.allow_identity_sm:
        for ci, comp in enumerate(ws.components):
            if isinstance(comp, Node):
                steps.append(_identity_step(ws, ci, cfg.mode))
    # dedup by provenance signature
    seen = set()
    out = []
    for s in steps:
        sig = (s.tag,) + s.sources
        if sig not in seen:
            seen.add(sig)
            out.append(s)
    return out


def classify(step: MergeStep) -> str:
    """Re-derive the tag from provenance; raises on inconsistency."""
    kinds = tuple(s[0] for s in step.sources)
    expected = {
        ("comp", "comp"): EM,
        ("term", "quotient"): IM,
        ("term", "comp"): SM1,
        ("term", "term"): None,  # SM2 or SM3 by host
        ("identity",): ID_SM,
    }
    key = tuple("term" if k == "term" else k for k in kinds)
    if key == ("term", "term"):
        tag = SM2 if step.sources[0][1] != step.sources[1][1] else SM3
    elif key in expected:
        tag = expected[key]
    else:
        raise MergeError(f"inconsistent provenance {step.sources}")
    if tag != step.tag:
        raise MergeError(f"provenance says {tag}, step is tagged {step.tag}")
    return tag


# ---------------------------------------------------------------------------
# derivations

@dataclass
class Derivation:
    initial: Workspace
    steps: list = field(default_factory=list)

    @property
    def final(self) -> Workspace:
        return self.steps[-1].output_ws if self.steps else self.initial

    def __len__(self):
        return len(self.steps)


def _resolve_occurrence(ws: Workspace, key: str, n: int) -> AccessibleTermRef:
    hits = [r for r in accessible_terms(ws) if r.subtree.key == key]
    if not hits:
        raise MergeError(f"no accessible term with key {key!r}")
    if n >= len(hits):
        raise MergeError(f"occurrence {n} of {key!r} out of range ({len(hits)} found)")
    return hits[n]


def _resolve_component(ws: Workspace, ref: dict) -> int:
    if "component" in ref:
        i = ref["component"]
        if not 0 <= i < ws.b0:
            raise MergeError(f"component index {i} out of range")
        return i
    key = ref["key"]
    hits = [i for i, t in enumerate(ws.components) if t.key == key]
    if not hits:
        raise MergeError(f"no component with key {key!r}")
    return hits[ref.get("n", 0)]


def replay(initial: Workspace, script: list, cfg: MergeConfig = MergeConfig()) -> Derivation:
    """Execute a derivation script, verifying each step is a legal Merge
    application under cfg.  Steps name extraction targets by canonical key
    plus occurrence index; any step requesting interior-edge growth raises
    ECViolation."""
    deriv = Derivation(initial)
    ws = initial
    for k, raw in enumerate(script):
        op = raw.get("op")
        args = raw.get("args", [])
        if op in ("INSERT", "LATE_MERGE", "M_MERGE"):
            raise ECViolation(f"step {k}: {op} grows structure below a root")
        try:
            if op == "EM":
                i, j = (_resolve_component(ws, r) for r in args)
                if i == j:
                    raise MergeError("EM needs two distinct components")
                step = _em_step(ws, min(i, j), max(i, j), cfg.mode)
            elif op == "IM":
                (r,) = args
                ref = _resolve_occurrence(ws, r["key"], r.get("n", 0))
                step = _im_step(ws, ref, cfg.mode)
            elif op == "SM1":
                r, comp = args
                ref = _resolve_occurrence(ws, r["key"], r.get("n", 0))
                step = _sm1_step(ws, ref, _resolve_component(ws, comp), cfg.mode)
            elif op in ("SM2", "SM3"):
                r1, r2 = args
                ref1 = _resolve_occurrence(ws, r1["key"], r1.get("n", 0))
                ref2 = _resolve_occurrence(ws, r2["key"], r2.get("n", 0))
                same_host = ref1.component == ref2.component
                if op == "SM3" and not same_host:
                    raise MergeError("SM3 takes two terms of one component")
                if op == "SM2" and same_host:
                    raise MergeError("SM2 takes terms of two components")
                step = (
                    _sm2_step(ws, ref1, ref2, cfg.mode)
                    if op == "SM2"
                    else _sm3_step(ws, ref1, ref2, cfg.mode)
                )
            elif op == "ID":
                (comp,) = args
                step = _identity_step(ws, _resolve_component(ws, comp), cfg.mode)
            else:
                raise MergeError(f"unknown op {op!r}")
        except ForestError as exc:
            raise MergeError(f"step {k}: {exc}") from exc
        legal = {(s.tag,) + s.sources for s in all_merge_successors(ws, _permissive(cfg))}
        if (step.tag,) + step.sources not in legal:
            raise MergeError(f"step {k}: not a legal Merge application here")
        deriv.steps.append(step)
        ws = step.output_ws
    return deriv


def _permissive(cfg: MergeConfig) -> MergeConfig:
    # replay validates against the widest flag set for the chosen mode,
    # except sibling cuts, which stay an explicit opt-in
    return MergeConfig(
        mode=cfg.mode,
        allow_im=True,
        allow_sm=True,
        allow_identity_sm=True,
        allow_sibling_cut=cfg.allow_sibling_cut,
        atomic_sm_only=False,
    )


# ---------------------------------------------------------------------------
# FormCopy as a graph quotient

@dataclass
class QuotientGraph:
    """Tree vertices merged under FormCopy identifications; may have cycles."""

    classes: dict  # path -> class id
    edges: set  # frozenset pairs of class ids
    vertex_count: int
    leaf_count: int  # distinct non-trace leaf classes after identification
    initial_leaf_count: int
    history: list  # vertex_count after each identification, starting value first


def _all_paths(t: SyntaxTree, prefix=()):
    yield prefix, t
    if isinstance(t, Node):
        yield from _all_paths(t.left, prefix + (0,))
        yield from _all_paths(t.right, prefix + (1,))


def form_copy_quotient(tree: SyntaxTree, pairs: list) -> QuotientGraph:
    """Identify designated isomorphic subtree occurrences vertexwise.

    Each pair is (canonical key, occurrence index, occurrence index), indices
    into the pre-order list of positions carrying that key.  Identified
    occurrences must be distinct and disjoint.
    """
    positions = list(_all_paths(tree))
    parent: dict = {p: p for p, _ in positions}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def union(x, y):
        rx, ry = find(x), find(y)
        if rx != ry:
            parent[rx] = ry

    def count():
        return len({find(p) for p, _ in positions})

    history = [count()]
    for key, na, nb in pairs:
        occ = [p for p, t in positions if t.key == key]
        if na == nb:
            raise MergeError("identity pair: the two occurrences must differ")
        try:
            pa, pb = occ[na], occ[nb]
        except IndexError:
            raise MergeError(f"occurrence out of range for key {key!r}")
        la, lb = len(pa), len(pb)
        short, long_ = (pa, pb) if la <= lb else (pb, pa)
        if long_[: len(short)] == short:
            raise MergeError("occurrences must be disjoint")
        # same canonical key -> identical canonical shape -> positionwise map
        sub = subtree_at(tree, pa)
        for rel, _ in _all_paths(sub):
            union(pa + rel, pb + rel)
        history.append(count())
    classes = {p: find(p) for p, _ in positions}
    edges = set()
    for p, t in positions:
        if isinstance(t, Node):
            for step in (0, 1):
                edges.add(frozenset((classes[p], classes[p + (step,)])))
    leaf_positions = [p for p, t in positions if isinstance(t, Leaf) and not t.trace]
    leaf_classes = {classes[p] for p in leaf_positions}
    return QuotientGraph(
        classes=classes,
        edges=edges,
        vertex_count=history[-1],
        leaf_count=len(leaf_classes),
        initial_leaf_count=len(leaf_positions),
        history=history,
    )
