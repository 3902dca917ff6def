"""The Merge Markov chain on fixed-leaf state spaces.

Vertices are all forests over a leaf multiset with at least one edge; a
directed edge from F to F' counts the distinct one-step Merge applications
taking F to F'.  Entries can be cost-weighted by t^cost under one of four
regimes.  Perron-Frobenius data turns the nonnegative matrix into a
stochastic one whose stationary distribution describes the long-run
dynamics.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

import numpy as np

from mergespace.costs import cl_cost, ms_cost, rr_delta
from mergespace.engine import MergeConfig, all_merge_successors
from mergespace.forest import enumerate_forests

REGIMES = ("ms", "my", "cl", "total")

# sector exponents (SM3, SM1, EM) realized on the 3-leaf state space
REGIME_EXPONENTS = {
    "ms": (Fraction(1, 3), Fraction(1, 2), Fraction(0)),
    "my": (Fraction(-1), Fraction(0), Fraction(1)),
    "cl": (Fraction(2), Fraction(1), Fraction(0)),
    "total": (Fraction(4, 3), Fraction(3, 2), Fraction(1)),
}


class MarkovError(ValueError):
    pass


def step_cost(step, regime: str) -> Fraction:
    if regime == "ms":
        return ms_cost(step)
    if regime == "my":
        return Fraction(rr_delta(step)[2])
    if regime == "cl":
        return Fraction(cl_cost(step))
    if regime == "total":
        return ms_cost(step) + rr_delta(step)[2] + cl_cost(step)
    raise MarkovError(f"unknown regime {regime!r}")


@dataclass
class TransitionGraph:
    vertices: list
    index: dict
    K: np.ndarray
    edge_tags: dict  # (i, j) -> sorted list of step tags
    cfg: MergeConfig
    weights: Optional[dict] = None  # (i, j) -> list of Fraction exponents

    @property
    def n(self) -> int:
        return len(self.vertices)


def build_graph(
    leaves,
    cfg: MergeConfig = MergeConfig(),
    regime: Optional[str] = None,
    t: float = 1.0,
    collapse_01: bool = False,
) -> TransitionGraph:
    """State-space graph over all forests with the given leaves and >= 1 edge.

    Unweighted entries count distinct Merge steps (or clip to 0/1 with
    collapse_01); with a regime, each step contributes t^cost instead.
    Requires the deletion coproduct: contraction quotients leave traces and
    fall outside the state space.
    """
    labels = tuple(sorted(leaves))
    if not 2 <= len(labels) <= 6:
        raise MarkovError("leaf count outside the exhaustive-enumeration bound [2, 6]")
    if cfg.mode != "d":
        raise MarkovError("transition graphs need mode 'd'")
    if regime is not None and regime not in REGIMES:
        raise MarkovError(f"unknown regime {regime!r}")
    if t <= 0:
        raise MarkovError("weight parameter t must be positive")
    vertices = enumerate_forests(labels, require_edge=True)
    index = {w.key: i for i, w in enumerate(vertices)}
    n = len(vertices)
    K = np.zeros((n, n))
    edge_tags: dict = {}
    weights: dict = {}
    for i, ws in enumerate(vertices):
        for step in all_merge_successors(ws, cfg):
            j = index[step.output_ws.key]
            if regime is None:
                K[i, j] += 1.0
            else:
                expo = step_cost(step, regime)
                K[i, j] += t ** float(expo)
                weights.setdefault((i, j), []).append(expo)
            edge_tags.setdefault((i, j), []).append(step.tag)
    if collapse_01:
        K = (K > 0).astype(float)
    for key in edge_tags:
        edge_tags[key] = sorted(edge_tags[key])
    return TransitionGraph(
        vertices, index, K, edge_tags, cfg, weights=weights if regime else None
    )


def weighted_matrix(leaves, regime: str, t: float, cfg: MergeConfig = MergeConfig()) -> TransitionGraph:
    """Cost-weighted transition matrix; exponents come from the cost model on
    the actual steps, and on the 3-leaf space are checked against the known
    sector pattern."""
    g = build_graph(leaves, cfg, regime=regime, t=t)
    plain = (
        cfg.allow_sm
        and not cfg.allow_identity_sm
        and not cfg.allow_sibling_cut
        and not cfg.atomic_sm_only
    )
    if len(tuple(leaves)) == 3 and len(set(leaves)) == 3 and plain:
        _assert_three_leaf_pattern(g, regime, t)
    return g


def three_leaf_pattern(regime: str, t: float, with_im: bool = True) -> np.ndarray:
    """The expected 6x6 weighted matrix: IM block unweighted, SM3 block t^a,
    EM block t^c, SM1 block t^b, zero diagonals in each block."""
    a, b, c = (float(x) for x in REGIME_EXPONENTS[regime])
    K = np.zeros((6, 6))
    for i in range(3):
        for j in range(3):
            if i != j:
                if with_im:
                    K[i, j] = 1.0  # IM sector
                K[i, 3 + j] = t ** a  # SM3 sector
                K[3 + i, 3 + j] = t ** b  # SM1 sector
        K[3 + i, i] = t ** c  # EM sector
    return K


def _assert_three_leaf_pattern(g: TransitionGraph, regime: str, t: float) -> None:
    want = three_leaf_pattern(regime, t, with_im=g.cfg.allow_im)
    if not np.allclose(g.K, want, rtol=0, atol=1e-12):
        raise MarkovError(f"3-leaf {regime} matrix deviates from the sector pattern")


# ---------------------------------------------------------------------------
# strong connectivity (iterative Tarjan)

def strong_components(adj: list) -> list:
    n = len(adj)
    index = [-1] * n
    low = [0] * n
    on_stack = [False] * n
    stack: list = []
    sccs: list = []
    counter = 0
    for root in range(n):
        if index[root] != -1:
            continue
        work = [(root, 0)]
        while work:
            v, pi = work[-1]
            if pi == 0:
                index[v] = low[v] = counter
                counter += 1
                stack.append(v)
                on_stack[v] = True
            advanced = False
            for k in range(pi, len(adj[v])):
                w = adj[v][k]
                if index[w] == -1:
                    work[-1] = (v, k + 1)
                    work.append((w, 0))
                    advanced = True
                    break
                if on_stack[w]:
                    low[v] = min(low[v], index[w])
            if advanced:
                continue
            work.pop()
            if work:
                parent = work[-1][0]
                low[parent] = min(low[parent], low[v])
            if low[v] == index[v]:
                comp = []
                while True:
                    w = stack.pop()
                    on_stack[w] = False
                    comp.append(w)
                    if w == v:
                        break
                sccs.append(comp)
    return sccs


def strong_connectivity(g: TransitionGraph, witness: bool = True) -> dict:
    adj = [list(np.nonzero(g.K[i] > 0)[0]) for i in range(g.n)]
    sccs = strong_components(adj)
    connected = len(sccs) == 1
    out = {"strongly_connected": connected, "scc_count": len(sccs), "witness_paths": []}
    if connected and witness and g.n > 1:
        src, dst = 0, g.n - 1
        for pair in ((src, dst), (dst, src)):
            out["witness_paths"].append(_bfs_path(adj, *pair))
    return out


def _bfs_path(adj, src, dst):
    prev = {src: None}
    frontier = [src]
    while frontier and dst not in prev:
        nxt = []
        for v in frontier:
            for w in adj[v]:
                if w not in prev:
                    prev[w] = v
                    nxt.append(w)
        frontier = nxt
    if dst not in prev:
        return None
    path = [dst]
    while prev[path[-1]] is not None:
        path.append(prev[path[-1]])
    return path[::-1]


# ---------------------------------------------------------------------------
# Perron-Frobenius data

@dataclass
class PFData:
    lam: float
    eta: np.ndarray
    K_hat: np.ndarray
    xi: np.ndarray
    iterations: int
    residual: float


def perron_frobenius(K: np.ndarray, tol: float = 1e-12, max_iter: int = 2 ** 50) -> PFData:
    """Dominant eigendata by shifted power iteration.

    The identity shift removes periodicity (the unweighted chain has zero
    diagonal).  Iterations are batched by repeated squaring, so max_iter
    bounds the equivalent number of single power steps.  Errors out on
    matrices whose support is not strongly connected.
    """
    K = np.asarray(K, dtype=float)
    n = K.shape[0]
    if (K < 0).any():
        raise MarkovError("negative entries")
    adj = [list(np.nonzero(K[i] > 0)[0]) for i in range(n)]
    if len(strong_components(adj)) != 1:
        raise MarkovError("reducible support; Perron-Frobenius theory needs strong connectivity")
    M = K + np.eye(n)
    P = M / M.max()
    v = np.full(n, 1.0 / n)
    iters = 0
    lam = 0.0
    residual = math.inf
    loops = 0
    while iters < max_iter:
        v_new = P @ v
        v_new /= v_new.sum()
        loops += 1
        iters = 2 ** loops - 1  # equivalent single power steps applied so far
        ratios = (K @ v_new) / v_new
        lam = float(ratios.mean())
        residual = float(np.abs(K @ v_new - lam * v_new).max())
        v = v_new
        if residual <= tol * max(lam, 1.0):
            break
        P = P @ P
        P /= P.max()
    if residual > tol * max(lam, 1.0):
        raise MarkovError(f"power iteration stalled at residual {residual}")
    if lam <= 0:
        raise MarkovError("no positive dominant eigenvalue; some state has no successor")
    eta = v / v.max()
    K_hat = K * eta[None, :] / eta[:, None] / lam
    xi = _stationary(K_hat, tol)
    return PFData(lam=lam, eta=eta, K_hat=K_hat, xi=xi, iterations=iters, residual=residual)


def _stationary(K_hat: np.ndarray, tol: float) -> np.ndarray:
    n = K_hat.shape[0]
    # lazy chain: same stationary vector, guaranteed aperiodic
    Q = (K_hat + np.eye(n)) / 2.0
    P = Q / Q.max()
    x = np.full(n, 1.0 / n)
    for _ in range(200):
        x_new = x @ P
        x_new /= x_new.sum()
        if np.abs(x_new @ K_hat - x_new).max() <= tol:
            return x_new
        x = x_new
        P = P @ P
        P /= P.max()
    raise MarkovError("stationary distribution did not converge")


# ---------------------------------------------------------------------------
# closed forms for the 3-leaf weighted chain

def structured_closed_form(a, b, c, t: float) -> dict:
    """Exact Perron-Frobenius data of the 3x3-sector matrix with exponents
    (a, b, c) on the SM3 / SM1 / EM sectors: eigenvector (u,u,u,1,1,1),
    eigenvalue lam, and stationary distribution (v,v,v,1,1,1)/(3v+3).

    Solves t^c u^2 + 2(t^b - 1)u - 2t^a = 0, so the radicand couples the
    SM3 and EM sectors through t^(a+c).
    """
    return _sector_closed_form(a, b, c, t, coupling=float(a) + float(c))


def series_closed_form(a, b, c, t: float) -> dict:
    """Variant with the radicand coupling t^(a+b) instead of t^(a+c).

    Not an eigenvector of the weighted matrix unless b == c or t == 1; kept
    because the reference asymptotic series (small-t slopes 5/6, 3, 17/6 for
    the ms / cl / total regimes) are expansions of this expression.
    """
    return _sector_closed_form(a, b, c, t, coupling=float(a) + float(b))


def _sector_closed_form(a, b, c, t: float, coupling: float) -> dict:
    if t <= 0:
        raise MarkovError("t must be positive")
    a, b, c = float(a), float(b), float(c)
    A = 1.0 - t ** b
    disc = math.sqrt(A * A + 2.0 * t ** coupling)
    u = t ** (-c) * (A + disc)
    lam = 1.0 + t ** b + disc
    # lam - 2 = disc - A, rationalized to dodge cancellation at small t
    lam_minus_2 = 2.0 * t ** coupling / (A + disc)
    v = u * t ** c / lam_minus_2
    Z = 3.0 * v + 3.0
    xi = np.array([v, v, v, 1.0, 1.0, 1.0]) / Z
    return {"u": u, "lam": lam, "v": v, "xi": xi}


SERIES_T0_EXPONENT = {"ms": Fraction(5, 6), "cl": Fraction(3), "total": Fraction(17, 6)}
EXACT_T0_EXPONENT = {
    "ms": Fraction(1, 3),
    "cl": Fraction(2),
    "total": Fraction(7, 3),
}


def _fit_exponent(form, a, b, c, lo=1e-6, hi=1e-5) -> float:
    y_lo = form(a, b, c, lo)["xi"][3]
    y_hi = form(a, b, c, hi)["xi"][3]
    return math.log(y_hi / y_lo) / math.log(hi / lo)


def asymptotic_check(regime: str, t_grid=None) -> dict:
    """Behavior of the stationary distribution across t.

    Verifies the t->0 limit (uniform 1/3 on the connected structures) and
    the t->1 limit (uniform 1/6 overall), and fits the small-t exponent of
    the disconnected-sector probability.  The asserted slopes (5/6 for ms, 3
    for cl, 17/6 for total) belong to the series variant of the closed form;
    the exact-matrix slopes (1/3, 2, 7/3) are reported alongside.
    """
    if regime not in ("ms", "cl", "total"):
        raise MarkovError("asymptotics cover the ms / cl / total regimes")
    a, b, c = REGIME_EXPONENTS[regime]
    grid = list(t_grid) if t_grid is not None else list(np.linspace(0.05, 0.95, 10))
    xi_series = [(t, series_closed_form(a, b, c, t)["xi"]) for t in grid]
    t0 = series_closed_form(a, b, c, 1e-12)["xi"]
    t1 = series_closed_form(a, b, c, 1.0 - 1e-6)["xi"]
    slope_series = _fit_exponent(series_closed_form, a, b, c)
    slope_exact = _fit_exponent(structured_closed_form, a, b, c)
    want = float(SERIES_T0_EXPONENT[regime])
    report = {
        "regime": regime,
        "grid": [{"t": t, "xi": xi.tolist()} for t, xi in xi_series],
        "t0_limit": t0.tolist(),
        "t0_limit_ok": bool(
            np.allclose(t0[:3], 1 / 3, atol=1e-6) and np.allclose(t0[3:], 0.0, atol=1e-6)
        ),
        "t1_limit": t1.tolist(),
        "t1_limit_ok": bool(np.allclose(t1, 1 / 6, atol=1e-6)),
        "series_exponent": slope_series,
        "series_exponent_expected": want,
        "series_exponent_ok": bool(abs(slope_series - want) <= 0.05),
        "exact_exponent": slope_exact,
        "exact_exponent_expected": float(EXACT_T0_EXPONENT[regime]),
    }
    report["ok"] = report["t0_limit_ok"] and report["t1_limit_ok"] and report["series_exponent_ok"]
    return report


# ---------------------------------------------------------------------------
# exports

def matrix_csv(g: TransitionGraph) -> str:
    lines = ["," + ",".join(w.key for w in g.vertices)]
    for i, w in enumerate(g.vertices):
        cells = [w.key] + [format(x, ".12g") for x in g.K[i]]
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def graph_dot(g: TransitionGraph) -> str:
    out = ["digraph merge {"]
    for i, w in enumerate(g.vertices):
        out.append(f'  n{i} [label="{w.key}"];')
    for (i, j), tags in sorted(g.edge_tags.items()):
        label = "|".join(sorted(set(tags)))
        out.append(f'  n{i} -> n{j} [label="{label}"];')
    out.append("}")
    return "\n".join(out) + "\n"


def pf_to_json(pf: PFData) -> dict:
    col_sums = pf.K_hat.sum(axis=0)
    return {
        "lambda": pf.lam,
        "eta": pf.eta.tolist(),
        "xi": pf.xi.tolist(),
        "bistochastic": bool(np.allclose(col_sums, 1.0, atol=1e-10)),
        "iterations": pf.iterations,
        "residual": pf.residual,
    }
