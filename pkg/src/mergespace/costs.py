"""Optimality accounting for Merge steps.

Three regimes: a bottom-up search cost (extraction of an accessible term
costs its share of the host's leaves, whole components cost 1, and a merge
costs the component count of its sources minus its arguments' costs), the
resource deltas (changes to component count b0, accessible-term count alpha,
and sigma = alpha + b0, per coproduct mode), and complexity loss (degree
stripped from a component's root).

External and Internal Merge are the zero-cost operations of the search
regime; type (1) Sideward Merge is resource-neutral under the deletion
quotient; only EM and IM avoid complexity loss.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from fractions import Fraction
from mergespace.engine import (
    EM,
    ID_SM,
    IM,
    SM1,
    SM2,
    SM3,
    Derivation,
    MergeStep,
)

# (db0, dalpha, dsigma) per tag and coproduct mode
RR_TABLE = {
    (EM, "c"): (-1, 2, 1),
    (EM, "d"): (-1, 2, 1),
    (IM, "c"): (0, 1, 1),
    (IM, "d"): (0, 0, 0),
    (SM1, "c"): (0, 1, 1),
    (SM1, "d"): (0, 0, 0),
    (SM2, "c"): (1, 0, 1),
    (SM2, "d"): (1, -2, -1),
    (SM3, "c"): (1, 0, 1),
    (SM3, "d"): (1, -2, -1),
}

# composite EM after SM, by the SM's tag
EM_AFTER_SM_TABLE = {
    (SM1, "c"): (-1, 3, 2),
    (SM1, "d"): (-1, 2, 1),
    (SM2, "c"): (0, 2, 2),
    (SM2, "d"): (0, 0, 0),
    (SM3, "c"): (0, 2, 2),
    (SM3, "d"): (0, 0, 0),
}

_B_COMPONENTS = {EM: 2, IM: 1, SM1: 2, SM2: 2, SM3: 1, ID_SM: 1}


class CostError(ValueError):
    pass


def _is_sibling_cut(step: MergeStep) -> bool:
    paths = [s[2] for s in step.sources if s[0] == "term"]
    return (
        step.tag == SM3
        and len(paths) == 2
        and len(paths[0]) == len(paths[1])
        and paths[0][:-1] == paths[1][:-1]
    )


def ms_cost(step: MergeStep) -> Fraction:
    """Search cost of one Merge application; 0 exactly for EM and IM."""
    b = Fraction(_B_COMPONENTS[step.tag])
    if step.tag == EM:
        return b - 1 - 1
    if step.tag == IM:
        return Fraction(0)  # b=1, extraction and quotient costs are complementary
    if step.tag == ID_SM:
        return Fraction(0)
    cost = b
    for sub, host in step.extractions:
        cost -= Fraction(sub.leaves, host.leaves)
    if step.tag == SM1:
        cost -= 1  # the whole-component argument
    return cost


def ms_cost_workspace_normalized(step: MergeStep) -> Fraction:
    """Variant accounting that charges extractions against the grading of the
    whole input workspace instead of the host component.  Agrees with
    ms_cost on single-component workspaces; used for side-by-side derivation
    comparisons."""
    if step.tag in (EM, IM, ID_SM):
        return ms_cost(step)
    total = step.input_ws.degree
    cost = Fraction(_B_COMPONENTS[step.tag])
    for sub, _host in step.extractions:
        cost -= Fraction(sub.leaves, total)
    if step.tag == SM1:
        cost -= 1
    return cost


def rr_delta(step: MergeStep) -> tuple:
    """(db0, dalpha, dsigma) from the actual workspaces; asserted against the
    table row for the tag and mode (a mismatch means an engine bug)."""
    before, after = step.input_ws, step.output_ws
    got = (after.b0 - before.b0, after.alpha - before.alpha, after.sigma - before.sigma)
    key = (step.tag, step.mode)
    if key in RR_TABLE and not (_is_sibling_cut(step) and step.mode == "c"):
        if got != RR_TABLE[key]:
            raise CostError(f"{step.tag}/{step.mode}: computed {got}, table {RR_TABLE[key]}")
    return got


def cl_cost(step: MergeStep) -> int:
    """Complexity loss: total extracted degree landing a host's root in a
    smaller component; 0 for EM, IM and identity reassembly."""
    if step.tag in (EM, IM, ID_SM):
        return 0
    return sum(sub.leaves for sub, _ in step.extractions)


def cl_cost_by_type(step: MergeStep) -> int:
    """Flat per-operation variant: 1 for SM1, 2 for SM2/SM3, else 0."""
    return {SM1: 1, SM2: 2, SM3: 2}.get(step.tag, 0)


class HierarchyClass(enum.Enum):
    HEAD_TO_HEAD = "head-to-head"
    HEAD_TO_PHRASE = "head-to-phrase"
    PHRASE_TO_HEAD = "phrase-to-head"
    PHRASE_TO_PHRASE = "phrase-to-phrase"


def classify_hierarchy(sm_step: MergeStep, em_step: MergeStep):
    """Class and violation profile of an EM-after-SM1 composite.

    The SM1 extracts T_v and merges it with a whole component T'; the EM must
    merge that result with the SM1 host's own quotient.  Profile is
    (complexity-loss violation deg(T_v), degree gap to a pure movement
    deg(T')).
    """
    if sm_step.tag != SM1 or em_step.tag != EM:
        raise CostError("composite must be an SM1 followed by an EM")
    if sm_step.output_ws != em_step.input_ws:
        raise CostError("EM input does not match SM1 output")
    t_v, t_prime = sm_step.pair
    merged = {t.key for t in em_step.pair}
    built_key = "(" + "|".join(sorted([t_v.key, t_prime.key])) + ")"
    (sub, host) = sm_step.extractions[0]
    if built_key not in merged:
        raise CostError("EM does not merge the SM1 output")
    quotient_keys = merged - {built_key}
    if not quotient_keys:
        raise CostError("EM must merge the SM1 output with the host quotient")
    deg_v, deg_p = t_v.leaves, t_prime.leaves
    cls = {
        (True, True): HierarchyClass.HEAD_TO_HEAD,
        (True, False): HierarchyClass.HEAD_TO_PHRASE,
        (False, True): HierarchyClass.PHRASE_TO_HEAD,
        (False, False): HierarchyClass.PHRASE_TO_PHRASE,
    }[(deg_v == 1, deg_p == 1)]
    return cls, (deg_v, deg_p)


@dataclass
class CostVector:
    tag: str
    ms: Fraction
    ms_ws: Fraction
    db0: int
    dalpha: int
    dsigma: int
    dsigma_hat: int
    cl: int
    cl_type: int

    def as_dict(self):
        return {
            "tag": self.tag,
            "ms": str(self.ms),
            "ms_ws": str(self.ms_ws),
            "db0": self.db0,
            "dalpha": self.dalpha,
            "dsigma": self.dsigma,
            "dsigma_hat": self.dsigma_hat,
            "cl": self.cl,
            "cl_type": self.cl_type,
        }


def step_costs(step: MergeStep) -> CostVector:
    db0, dalpha, dsigma = rr_delta(step)
    return CostVector(
        tag=step.tag,
        ms=ms_cost(step),
        ms_ws=ms_cost_workspace_normalized(step),
        db0=db0,
        dalpha=dalpha,
        dsigma=dsigma,
        dsigma_hat=2 * db0 + dalpha,  # sigma_hat = b0 + sigma
        cl=cl_cost(step),
        cl_type=cl_cost_by_type(step),
    )


def _table_my(tag: str, mode: str, fallback: int) -> int:
    row = RR_TABLE.get((tag, mode))
    return row[2] if row else fallback


def derivation_cost(deriv: Derivation) -> dict:
    """Per-step and total costs of a replayed derivation.

    Reports the search total under both the per-component and the
    workspace-grading accounting, the resource total under both coproduct
    modes (the off-mode value read from the tag table), and complexity loss
    both by extracted degree and by operation type.
    """
    steps = [step_costs(s) for s in deriv.steps]
    mode = deriv.steps[0].mode if deriv.steps else "d"
    my_actual = sum(v.dsigma for v in steps)
    my_d = sum(
        v.dsigma if mode == "d" else _table_my(v.tag, "d", v.dsigma) for v in steps
    )
    my_c = sum(
        v.dsigma if mode == "c" else _table_my(v.tag, "c", v.dsigma) for v in steps
    )
    totals = {
        "ms": sum((v.ms for v in steps), Fraction(0)),
        "ms_ws": sum((v.ms_ws for v in steps), Fraction(0)),
        "my": my_actual,
        "my_d": my_d,
        "my_c": my_c,
        "cl": sum(v.cl for v in steps),
        "cl_type": sum(v.cl_type for v in steps),
        "n_sm": sum(1 for v in steps if v.tag in (SM1, SM2, SM3)),
        "n_em": sum(1 for v in steps if v.tag == EM),
        "n_im": sum(1 for v in steps if v.tag == IM),
    }
    return {"mode": mode, "steps": steps, "totals": totals}


# ---------------------------------------------------------------------------
# quotient-graph costs (FormCopy with cancellation of copies)

def quotient_cost(v_before: int, v_after: int) -> Fraction:
    """Vertex-ratio cost of one graph identification; chained identifications
    sum their costs."""
    if v_before <= 0 or v_after <= 0:
        raise CostError("vertex counts must be positive")
    if v_after > v_before:
        raise CostError("a quotient cannot grow the vertex count")
    return Fraction(v_after, v_before)


def fc_cost_report(graph, n_em_steps: int = 0) -> dict:
    """Costs of a FormCopy quotient sequence.

    ``my_quotient`` is the accessible-term loss of the identifications
    (vertex classes removed); ``my_em`` charges +1 per structure-building EM
    that formed the tree.  The two are reported separately because summaries
    that mix them do not agree; downstream consumers pick explicitly.
    """
    history = graph.history
    ms = sum(
        (quotient_cost(history[i], history[i + 1]) for i in range(len(history) - 1)),
        Fraction(0),
    )
    return {
        "vertex_history": list(history),
        "ms": ms,
        "my_quotient": history[0] - history[-1],
        "my_em": n_em_steps,
        "cl": graph.initial_leaf_count - graph.leaf_count,
    }
