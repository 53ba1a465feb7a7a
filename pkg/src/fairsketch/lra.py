"""Min-max fair low-rank approximation.

Three solvers share this module:

* ``svd_baseline`` -- the standard (group-blind) top-k right singular factor
  of the stacked data, the comparison point for everything else.
* ``bicriteria_fair_lra`` -- the randomized sketch-and-solve pipeline: embed
  the stacked matrix with scaled Gaussians on both sides, compress rows with
  an Lp Lewis-weight sampler, and read off the right factor from a small
  pseudoinverse. Polynomial time; the output rank is governed by the row
  sample count rather than k itself.
* ``binary_search_fair_lra`` -- a guess-and-verify driver that geometrically
  shrinks a feasibility threshold, backed by a heuristic feasibility oracle
  (``alternating_feasibility``). The oracle is a smoothed min-max heuristic,
  not a certified decision procedure, so the driver inherits no optimality
  guarantee; it never returns anything worse than its starting factor.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .grouped import GroupedMatrix, fair_lra_cost
from .linalg import as_matrix, best_rank_k, orthonormal_rows, pseudoinverse, svd
from .sampling import lewis_sampling_matrix, lewis_weights
from .sketch import dvoretzky_gaussian, dvoretzky_right_embedding


def minmax_softening_exponent(ell: int, eps: float, c: float = 2.0) -> int:
    """Smallest tested p with ||x||_inf <= ||x||_p <= (1+eps) ||x||_inf on R^ell.

    Uses p = ceil(c * log(ell) / eps); c = 2 guarantees the sandwich for all
    eps in (0, 1] since log(1+eps) >= eps/2 there.
    """
    if ell < 1:
        raise ValueError(f"ell must be >= 1, got {ell}")
    if eps <= 0:
        raise ValueError(f"eps must be positive, got {eps}")
    if ell == 1:
        return 1
    return max(1, math.ceil(c * math.log(ell) / eps))


@dataclass
class BicriteriaConfig:
    """Knobs for the sketching pipeline.

    ``lewis_samples`` is the row budget of the Lewis sampler and therefore
    the rank budget of the returned factor; it defaults to k so the output
    is directly comparable to the rank-k baseline. ``p`` overrides the
    default exponent max(1, round(c * log(ell))). ``column_mode`` chooses
    between using the full sketched matrix ("identity", the default) and
    subsampling its columns by column Lewis weights ("lewis-columns").
    ``repeats`` reruns the pipeline and keeps the cheapest solution.
    """

    k: int
    c: float = 0.5
    p: Optional[float] = None
    g_rows: int = 30
    h_cols: int = 30
    lewis_iterations: int = 10
    lewis_samples: Optional[int] = None
    column_mode: str = "identity"
    column_budget_const: float = 1.0
    seed: int = 0
    repeats: int = 1

    def __post_init__(self):
        if self.k < 1:
            raise ValueError(f"k must be >= 1, got {self.k}")
        if not 0.0 < self.c < 1.0:
            raise ValueError(f"c must be in (0, 1), got {self.c}")
        if self.p is not None and self.p < 1:
            raise ValueError(f"p override must be >= 1, got {self.p}")
        if min(self.g_rows, self.h_cols, self.lewis_iterations) < 1:
            raise ValueError("sketch dimensions and iteration counts must be >= 1")
        if self.lewis_samples is not None and self.lewis_samples < 1:
            raise ValueError(f"lewis_samples must be >= 1, got {self.lewis_samples}")
        if self.column_mode not in ("identity", "lewis-columns"):
            raise ValueError(f"unknown column_mode {self.column_mode!r}")
        if self.repeats < 1:
            raise ValueError(f"repeats must be >= 1, got {self.repeats}")

    def exponent(self, ell: int) -> float:
        if self.p is not None:
            return float(self.p)
        return float(max(1, round(self.c * math.log(max(ell, 2)))))

    def sample_count(self) -> int:
        return self.lewis_samples if self.lewis_samples is not None else self.k


@dataclass(frozen=True)
class FairLraSolution:
    """Right factor with diagnostics.

    ``v_tilde`` has orthonormal rows spanning the solution subspace (a single
    zero row for all-zero data); ``t`` is its rank. ``cost`` is the unsquared
    worst-group residual. Sketch dimensions record the pipeline shape
    actually used (zeros for solutions that bypassed the pipeline, e.g. the
    binary-search driver).
    """

    v_tilde: np.ndarray
    t: int
    cost: float
    seed: int
    g_rows: int
    h_cols: int
    t_rows: int
    s_cols: int
    p: float
    c: float
    baseline_fallback: bool = False


def svd_baseline(data: GroupedMatrix, k: int) -> np.ndarray:
    """Group-blind top-k right singular factor of the vertically stacked data."""
    if k > data.d:
        raise ValueError(f"k={k} exceeds feature count {data.d}")
    return best_rank_k(data.stacked(), k)


def _pipeline_once(data: GroupedMatrix, cfg: BicriteriaConfig, seed: int) -> tuple[np.ndarray, dict]:
    """One run of the sketch pipeline; returns the raw factor and phase info."""
    A = data.stacked()
    n, d = A.shape
    p = cfg.exponent(data.ell)
    child = np.random.SeedSequence(seed).spawn(4)
    seeds = [int(s.generate_state(1)[0]) for s in child]

    t0 = time.perf_counter()
    G = dvoretzky_gaussian(cfg.g_rows, n, p, seeds[0]).G
    H = dvoretzky_right_embedding(d, cfg.h_cols, p, seeds[1])
    GA = G @ A
    GAH = GA @ H
    if cfg.column_mode == "lewis-columns":
        budget = max(1, math.ceil(
            cfg.column_budget_const * cfg.k * math.log(math.log(cfg.k + 2.0)) * math.log(d + 1.0) ** 2
        ))
        col_w = lewis_weights(GAH.T, p, cfg.lewis_iterations)
        draw = lewis_sampling_matrix(col_w, budget, seeds[2])
        cols = np.unique(draw.indices)
        design = GAH[:, cols]
        s_cols = int(cols.size)
    else:
        design = GAH
        s_cols = GAH.shape[1]
    w = lewis_weights(design, p, cfg.lewis_iterations)
    sampler = lewis_sampling_matrix(w, cfg.sample_count(), seeds[3])
    sketched_design = sampler.apply(design)
    sketched_target = sampler.apply(GA)
    t1 = time.perf_counter()

    v_raw = pseudoinverse(sketched_design) @ sketched_target
    t2 = time.perf_counter()

    info = {
        "p": p,
        "g_rows": cfg.g_rows,
        "h_cols": cfg.h_cols,
        "t_rows": sampler.sample_count,
        "s_cols": s_cols,
        "time_total": t2 - t0,
        "time_extract": t2 - t1,
    }
    return v_raw, info


def bicriteria_fair_lra(data: GroupedMatrix, cfg: BicriteriaConfig) -> FairLraSolution:
    """Randomized bicriteria solver; see the module docstring for the pipeline."""
    sol, _ = bicriteria_fair_lra_timed(data, cfg)
    return sol


def bicriteria_fair_lra_timed(data: GroupedMatrix, cfg: BicriteriaConfig) -> tuple[FairLraSolution, dict]:
    """Like ``bicriteria_fair_lra`` but also reports phase wall times.

    The timing dict splits the run into the sketch-and-sampling phase and the
    factor-extraction phase; with repeats the times accumulate over runs.
    """
    A = data.stacked()
    if not np.any(A):
        zero = np.zeros((1, data.d))
        sol = FairLraSolution(
            v_tilde=zero, t=0, cost=0.0, seed=cfg.seed, g_rows=cfg.g_rows,
            h_cols=cfg.h_cols, t_rows=0, s_cols=0, p=cfg.exponent(data.ell), c=cfg.c,
        )
        return sol, {"time_total": 0.0, "time_extract": 0.0}

    run_seeds = [int(s.generate_state(1)[0]) for s in np.random.SeedSequence(cfg.seed).spawn(cfg.repeats)]
    best: Optional[FairLraSolution] = None
    total = {"time_total": 0.0, "time_extract": 0.0}
    for rs in run_seeds:
        v_raw, info = _pipeline_once(data, cfg, rs)
        v_tilde = orthonormal_rows(v_raw)
        if v_tilde.shape[0] == 0:
            v_tilde = np.zeros((1, data.d))
        cost = fair_lra_cost(data, v_tilde)
        total["time_total"] += info["time_total"]
        total["time_extract"] += info["time_extract"]
        if best is None or cost < best.cost:
            best = FairLraSolution(
                v_tilde=v_tilde, t=int(svd(v_tilde).rank), cost=cost, seed=cfg.seed,
                g_rows=info["g_rows"], h_cols=info["h_cols"], t_rows=info["t_rows"],
                s_cols=info["s_cols"], p=info["p"], c=cfg.c,
            )
    assert best is not None
    return best, total


def _orth_rows(M: np.ndarray) -> np.ndarray:
    Q, _ = np.linalg.qr(M.T)
    return Q.T


def alternating_feasibility(
    data: GroupedMatrix,
    k: int,
    alpha: float,
    iters: int = 200,
    seed: int = 0,
    squared: bool = False,
) -> Optional[np.ndarray]:
    """Heuristic feasibility oracle: find a rank-k factor with cost <= alpha.

    Starts from the stacked-SVD factor and alternates closed-form weighted
    truncated-SVD rounds, weighting each group by softmax(beta * cost) with
    beta = 10/alpha. Because the weighted closed-form step can only produce
    eigenspaces of group-covariance mixtures, it stalls on instances whose
    min-max optimum mixes directions across groups; the remaining budget is
    therefore spent on projected smoothed-max descent over the subspace with
    annealed random restarts. Returns the first factor meeting the threshold,
    or None if the budget is exhausted above it.

    ``alpha`` is read on the squared-cost scale when ``squared`` is set.
    """
    if iters < 1:
        raise ValueError(f"iters must be >= 1, got {iters}")
    if alpha < 0:
        return None
    alpha_sq = float(alpha) if squared else float(alpha) ** 2
    covs = [g.T @ g for g in data.groups]
    totals = np.array([float(np.sum(g * g)) for g in data.groups])
    scale = float(totals.max())
    beta = 10.0 / max(alpha_sq, 1e-12 * max(scale, 1.0))

    def costs_sq(Q: np.ndarray) -> np.ndarray:
        return totals - np.array([np.einsum("ij,jk,ik->", Q, C, Q) for C in covs])

    V = svd_baseline(data, k)
    best_V, best_cost = V, float(costs_sq(V).max())
    if best_cost <= alpha_sq + 1e-12 * max(scale, 1.0):
        return best_V

    budget = iters
    rounds = min(25, budget)
    budget -= rounds
    for _ in range(rounds):
        c = costs_sq(V)
        m = float(c.max())
        if m < best_cost:
            best_cost, best_V = m, V
        if best_cost <= alpha_sq:
            return best_V
        w = np.exp(beta * (c - m))
        w /= w.sum()
        weighted = np.vstack([math.sqrt(wi) * g for wi, g in zip(w, data.groups)])
        V_next = best_rank_k(weighted, k)
        if np.allclose(V_next @ V.T @ V @ V_next.T, np.eye(k), atol=1e-12):
            break  # same subspace; the closed-form step has stalled
        V = V_next

    rng = np.random.default_rng(seed)
    restarts = 4
    per = max(budget // restarts, 1) if budget > 0 else 0
    for r in range(restarts):
        if per == 0:
            break
        init = best_V + (0.05 * 3.0 ** r) * rng.standard_normal(best_V.shape)
        Q = _orth_rows(init)
        for t in range(per):
            c = costs_sq(Q)
            m = float(c.max())
            if m < best_cost:
                best_cost, best_V = m, Q
            if best_cost <= alpha_sq:
                return best_V
            w = np.exp(beta * (c - m))
            w /= w.sum()
            M = sum(wi * C for wi, C in zip(w, covs))
            G = Q @ M
            T = G - (G @ Q.T) @ Q
            nrm = float(np.linalg.norm(T))
            step = 0.4 / (1.0 + t / 30.0)
            noise = 0.05 * 0.93 ** t * rng.standard_normal(Q.shape)
            Q = _orth_rows(Q + (step * T / nrm if nrm > 1e-14 else 0.0) + noise)
        c_final = float(costs_sq(Q).max())
        if c_final < best_cost:
            best_cost, best_V = c_final, Q
    return best_V if best_cost <= alpha_sq else None


def binary_search_fair_lra(
    data: GroupedMatrix,
    k: int,
    eps: float,
    oracle: Optional[Callable[[float], Optional[np.ndarray]]] = None,
    alpha0: Optional[float] = None,
    squared: bool = False,
    oracle_iters: int = 200,
    seed: int = 0,
) -> FairLraSolution:
    """Shrink a feasibility threshold geometrically and keep the best factor.

    Starts from ``alpha0`` (default: the stacked-SVD baseline cost, which any
    shared factor can match) and divides by (1 + eps) while the oracle keeps
    producing factors; stops at the first failure or at the floor
    1e-9 * alpha0. The oracle maps a threshold to a factor or None; the
    default is ``alternating_feasibility`` with per-call derived seeds.
    Returns the baseline factor with ``baseline_fallback`` set if the oracle
    fails immediately.
    """
    if not 0.0 < eps < 1.0:
        raise ValueError(f"eps must be in (0, 1), got {eps}")
    V_base = svd_baseline(data, k)
    base_cost = fair_lra_cost(data, V_base)

    if alpha0 is None:
        alpha = base_cost
    else:
        alpha = math.sqrt(alpha0) if squared else float(alpha0)
        if alpha < 0:
            raise ValueError(f"alpha0 must be non-negative, got {alpha0}")

    def default_oracle(a: float, call: int) -> Optional[np.ndarray]:
        return alternating_feasibility(data, k, a, iters=oracle_iters, seed=seed + 7919 * call)

    def make_solution(V: np.ndarray, cost: float, fallback: bool) -> FairLraSolution:
        return FairLraSolution(
            v_tilde=V, t=int(svd(V).rank), cost=cost, seed=seed, g_rows=0, h_cols=0,
            t_rows=0, s_cols=0, p=0.0, c=0.0, baseline_fallback=fallback,
        )

    if alpha <= 0.0:
        return make_solution(V_base, base_cost, False)

    floor = 1e-9 * alpha
    max_calls = math.ceil(math.log(alpha / floor) / math.log1p(eps))
    best_V: Optional[np.ndarray] = None
    best_cost = math.inf
    current = alpha
    for call in range(max_calls):
        V = oracle(current) if oracle is not None else default_oracle(current, call)
        if V is None:
            break
        V = as_matrix(V, "oracle factor")
        cost = fair_lra_cost(data, V)
        if cost < best_cost:
            best_cost, best_V = cost, V
        current /= 1.0 + eps
        if current < floor:
            break
    if best_V is None:
        return make_solution(V_base, base_cost, True)
    if base_cost < best_cost:
        # keep the cheaper of oracle result and baseline
        return make_solution(V_base, base_cost, False)
    return make_solution(best_V, best_cost, False)


def eckart_young_lower_bound(data: GroupedMatrix, k: int, squared: bool = False) -> float:
    """max_i (group-i tail energy past rank k): a certified fair-cost lower bound.

    Any shared rank-k factor serves each group no better than that group's own
    optimal factor, so no fair solution can cost less.
    """
    worst = 0.0
    for g in data.groups:
        s = np.linalg.svd(g, compute_uv=False)
        worst = max(worst, float(np.sum(s[k:] ** 2)))
    return worst if squared else math.sqrt(worst)
