"""Greedy low-rank construction of parametric solution maps.

Two drivers are provided. ``basic_pgd`` grows the surrogate one
separable term at a time, alternating between the deterministic vector
and its parametric coefficient until the new term stagnates, then
freezes it. ``improved_pgd`` also grows rank greedily but re-optimizes
all terms at once: each sweep orthonormalizes one block and solves for
the other in full, which costs the same number of residual samples per
evaluation but reuses them across all r terms.

Everything the drivers learn about the problem flows through residual
evaluations at the quadrature points and preconditioner applications;
no Jacobians, no assembled operators. One evaluation of a projected
block residual costs exactly one black-box residual call per
quadrature point, independent of the current rank.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
import scipy.linalg

from . import lbfgs
from .bases import StochasticBasis, eval_matrix, gram
from .exceptions import DegeneratePreconditionerError
from .lowrank import LowRankTensor, orth_columns, orth_columns_metric, zero_tensor
from .problems import ParametricProblem, ResidualCounter, counted
from .quadrature import QuadratureRule

__all__ = [
    "PgdConfig",
    "RankResult",
    "residual_samples",
    "projected_residual_vectors",
    "projected_residual_coeffs",
    "make_vector_preconditioner",
    "make_coeff_preconditioner",
    "basic_pgd",
    "improved_pgd",
]


@dataclass
class PgdConfig:
    """Knobs shared by both drivers.

    ``anchor`` is the parameter point at which preconditioners are
    built; None means the midpoint of the problem's parameter box.
    ``coeff_precond`` selects the initial BFGS operator for the
    coefficient block: "scaled" (per-term curvature scaling from the
    problem preconditioner, the default) or "identity" (no problem
    knowledge; the solver's own rescaling recovers most of the gap).
    ``vector_precond`` is "anchor" (problem preconditioner frozen at
    the anchor) or "sampled" (quadrature-weighted per-point actions).
    """

    max_rank: int = 5
    bfgs_tol: float = 1e-10
    bfgs_max_iter: int = 500
    bfgs_memory: int = 20
    bfgs_policy: str = "fifo"
    basic_stagnation_tol: float = 1e-2
    basic_max_alt_iters: int = 10
    improved_max_alt_iters: int = 20
    improved_stagnation_floor: float = 1e-8
    outer_tol: float = 1e-8
    coeff_init_value: float = 1.0
    vector_init_value: float = 1e-8
    anchor: Optional[np.ndarray] = None
    vector_precond: str = "anchor"
    coeff_precond: str = "scaled"
    keep_sweep_history: bool = False

    def improved_stagnation_tol(self, rank: int) -> float:
        # loosest at rank 1, tightening one decade per added term
        return max(10.0 ** (-(rank + 1)), self.improved_stagnation_floor)


@dataclass
class RankResult:
    """Snapshot taken when one more term has been accepted."""

    rank: int
    tensor: LowRankTensor
    sweeps: int
    stagnation: float
    residual_calls: int            # cumulative over the whole run
    bfgs_iterations: int           # inner iterations spent on this rank
    unconverged_solves: int
    line_search_warnings: int
    sweep_tensors: Optional[list] = field(default=None, repr=False)


def residual_samples(problem: ParametricProblem, rule: QuadratureRule,
                     states: np.ndarray) -> np.ndarray:
    """Residuals at every quadrature point for prescribed states.

    ``states`` has one row per quadrature point; row z is the state at
    which R(., p_z) is evaluated. Exactly one residual call per point.
    """
    out = np.empty((rule.n_points, problem.n))
    for z in range(rule.n_points):
        out[z] = problem.residual(states[z], rule.points[z])
    return out


def projected_residual_vectors(problem, rule, psi, coeffs, vectors,
                               samples=None) -> np.ndarray:
    """Block residual driving the deterministic vectors, shape (n, r).

    Column k is the quadrature projection of the pointwise residual
    onto the k-th parametric coefficient. Pass ``samples`` to reuse
    residual evaluations already taken at the same iterate.
    """
    if samples is None:
        states = (psi @ coeffs) @ vectors.T
        samples = residual_samples(problem, rule, states)
    weighted_coeffs = rule.weights[:, None] * (psi @ coeffs)
    return samples.T @ weighted_coeffs


def projected_residual_coeffs(problem, rule, psi, coeffs, vectors,
                              samples=None) -> np.ndarray:
    """Block residual driving the parametric coefficients, shape (m, r).

    Column k is the basis expansion of p -> <R(u_r(p); p), v_k>. Pass
    ``samples`` to reuse residual evaluations already taken at the same
    iterate.
    """
    if samples is None:
        states = (psi @ coeffs) @ vectors.T
        samples = residual_samples(problem, rule, states)
    return psi.T @ (rule.weights[:, None] * (samples @ vectors))


def _as_columns(x: np.ndarray) -> np.ndarray:
    return x[:, None] if x.ndim == 1 else x


def make_vector_preconditioner(problem, anchor_p, anchor_state, mode="anchor",
                               rule=None, coeff_values=None, states=None):
    """Initial BFGS operator for the vector block.

    "anchor" freezes the problem preconditioner at (anchor_state,
    anchor_p) and applies it to each column independently. "sampled"
    instead sums per-point preconditioner actions weighted by the
    quadrature weights and the squared parametric coefficients; it
    needs ``rule``, ``coeff_values`` (coefficient values at the
    quadrature points, one column per term) and ``states`` (the
    per-point linearization states).
    """
    if mode == "anchor":
        def apply(x):
            cols = _as_columns(np.asarray(x, dtype=float))
            out = np.empty_like(cols)
            for k in range(cols.shape[1]):
                out[:, k] = problem.precond_apply(cols[:, k], anchor_p, anchor_state)
            return out.reshape(np.shape(x))
        return apply
    if mode == "sampled":
        if rule is None or coeff_values is None or states is None:
            raise ValueError("sampled mode needs rule, coeff_values and states")
        cv = _as_columns(np.asarray(coeff_values, dtype=float))
        weights = rule.weights

        def apply(x):
            cols = _as_columns(np.asarray(x, dtype=float))
            out = np.zeros_like(cols)
            for z in range(rule.n_points):
                scale = weights[z] * cv[z] ** 2
                for k in range(cols.shape[1]):
                    if scale[k] == 0.0:
                        continue
                    out[:, k] += scale[k] * problem.precond_apply(
                        cols[:, k], rule.points[z], states[z])
            return out.reshape(np.shape(x))
        return apply
    raise ValueError(f"unknown vector preconditioner mode {mode!r}")


def make_coeff_preconditioner(problem, anchor_p, anchor_state, vectors,
                              mode="identity"):
    """Initial BFGS operator for the coefficient block.

    "identity" returns the residual unchanged. "scaled" divides the
    k-th column by alpha_k = <P(anchor) v_k, v_k>, using the forward
    preconditioner action when the problem exposes one and the
    inverse-only quadratic form 1 / <P^{-1}(anchor) v_k, v_k>
    otherwise. Non-positive alpha means the operator is not SPD and is
    rejected.
    """
    if mode == "identity":
        return lambda x: np.asarray(x, dtype=float)
    if mode != "scaled":
        raise ValueError(f"unknown coefficient preconditioner mode {mode!r}")
    vectors = _as_columns(np.asarray(vectors, dtype=float))
    alphas = np.empty(vectors.shape[1])
    matvec = getattr(problem, "precond_matvec", None)
    for k in range(vectors.shape[1]):
        v = vectors[:, k]
        if matvec is not None:
            alphas[k] = float(v @ matvec(v, anchor_p, anchor_state))
        else:
            quad = float(v @ problem.precond_apply(v, anchor_p, anchor_state))
            if quad <= 0.0:
                raise DegeneratePreconditionerError(
                    f"inverse quadratic form non-positive for term {k}: {quad}")
            alphas[k] = 1.0 / quad
    if np.any(alphas <= 0.0):
        raise DegeneratePreconditionerError(
            f"non-positive curvature scaling, alphas={alphas}")

    def apply(x):
        cols = _as_columns(np.asarray(x, dtype=float))
        return (cols / alphas).reshape(np.shape(x))
    return apply


def _quadrature_gram_chol(basis, rule, psi):
    g = psi.T @ (rule.weights[:, None] * psi)
    g = 0.5 * (g + g.T)
    try:
        chol = np.linalg.cholesky(g)
    except np.linalg.LinAlgError:
        # defer to gram() for the descriptive error
        gram(basis, rule)
        raise
    return g, chol


def _tensor_cross(g, c1, v1, c2, v2) -> float:
    """<F(c1, v1), F(c2, v2)> in the quadrature-Gram x Euclidean metric."""
    if c1.shape[1] == 0 or c2.shape[1] == 0:
        return 0.0
    return float(np.sum((c1.T @ g @ c2) * (v1.T @ v2)))


def _tensor_norm(g, c, v) -> float:
    return float(np.sqrt(max(_tensor_cross(g, c, v, c, v), 0.0)))


def _relative_change(g, c_new, v_new, c_old, v_old) -> float:
    nn = _tensor_cross(g, c_new, v_new, c_new, v_new)
    oo = _tensor_cross(g, c_old, v_old, c_old, v_old)
    no = _tensor_cross(g, c_new, v_new, c_old, v_old)
    num = np.sqrt(max(nn - 2.0 * no + oo, 0.0))
    den = np.sqrt(max(nn, 0.0))
    if den == 0.0:
        return 0.0
    return float(num / den)


def _resolve_anchor(problem, config):
    if config.anchor is not None:
        return np.atleast_1d(np.asarray(config.anchor, dtype=float))
    return problem.anchor_point()


def _validate_config(cfg: PgdConfig):
    if cfg.vector_precond not in ("anchor", "sampled"):
        raise ValueError(f"unknown vector_precond {cfg.vector_precond!r}")
    if cfg.coeff_precond not in ("identity", "scaled"):
        raise ValueError(f"unknown coeff_precond {cfg.coeff_precond!r}")
    if cfg.max_rank < 1:
        raise ValueError(f"max_rank must be >= 1, got {cfg.max_rank}")


def basic_pgd(problem: ParametricProblem, rule: QuadratureRule,
              basis: StochasticBasis, config: Optional[PgdConfig] = None,
              counter: Optional[ResidualCounter] = None) -> list:
    """Greedy rank-one construction; returns one RankResult per term.

    Each new term (coeff, vector) starts from the configured
    initialization and alternates: normalize the coefficient in the
    quadrature norm, solve for the vector, normalize it, solve for the
    coefficient. The term is frozen once its relative change between
    sweeps falls under ``basic_stagnation_tol`` (or the sweep budget
    runs out) and is never revisited.
    """
    cfg = config or PgdConfig()
    _validate_config(cfg)
    if counter is None:
        counter = ResidualCounter()
    prob = counted(problem, counter)
    psi = eval_matrix(basis, rule)
    g, _ = _quadrature_gram_chol(basis, rule, psi)
    anchor = _resolve_anchor(problem, cfg)
    psi_anchor = basis.evaluate(anchor)
    w = rule.weights

    u = zero_tensor(basis.m, problem.n)
    results = []
    for rank in range(1, cfg.max_rank + 1):
        coeff = np.full(basis.m, cfg.coeff_init_value)
        vector = np.full(problem.n, cfg.vector_init_value)
        base_states = u.evaluate_many(psi)
        anchor_state = u.evaluate_at(psi_anchor)

        calls_before = counter.total
        iters = 0
        unconverged = 0
        ls_warnings = 0
        stagnation = np.inf
        sweeps = 0
        prev_coeff, prev_vector = None, None

        if cfg.vector_precond == "anchor":
            c0_vec = make_vector_preconditioner(prob, anchor, anchor_state, "anchor")

        for _ in range(cfg.basic_max_alt_iters):
            sweeps += 1
            coeff_norm = np.sqrt(max(float(coeff @ g @ coeff), 0.0))
            if coeff_norm == 0.0:
                break
            # rescalings are pushed into the partner factor so the
            # represented term never jumps; each solve then starts from
            # the tensor the previous solve produced
            coeff = coeff / coeff_norm
            vector = vector * coeff_norm
            coeff_vals = psi @ coeff

            if cfg.vector_precond == "sampled":
                states_now = base_states + coeff_vals[:, None] * vector[None, :]
                c0_vec = make_vector_preconditioner(
                    prob, anchor, anchor_state, "sampled",
                    rule=rule, coeff_values=coeff_vals, states=states_now)

            def vector_residual(v_trial):
                states = base_states + coeff_vals[:, None] * v_trial[None, :]
                samples = residual_samples(prob, rule, states)
                return samples.T @ (w * coeff_vals)

            sol = lbfgs.solve(vector_residual, vector, c0_vec,
                              tol=cfg.bfgs_tol, max_iter=cfg.bfgs_max_iter,
                              memory=cfg.bfgs_memory, policy=cfg.bfgs_policy)
            vector = sol.x
            iters += sol.iterations
            unconverged += 0 if sol.converged else 1
            ls_warnings += sol.line_search_warnings

            vector_norm = float(np.linalg.norm(vector))
            if vector_norm == 0.0:
                break
            vector = vector / vector_norm
            coeff = coeff * vector_norm

            c0_coeff = make_coeff_preconditioner(
                prob, anchor, anchor_state + float(psi_anchor @ coeff) * vector,
                vector, mode=cfg.coeff_precond)

            def coeff_residual(c_trial):
                vals = psi @ c_trial
                states = base_states + vals[:, None] * vector[None, :]
                samples = residual_samples(prob, rule, states)
                return psi.T @ (w * (samples @ vector))

            sol = lbfgs.solve(coeff_residual, coeff, c0_coeff,
                              tol=cfg.bfgs_tol, max_iter=cfg.bfgs_max_iter,
                              memory=cfg.bfgs_memory, policy=cfg.bfgs_policy)
            coeff = sol.x
            iters += sol.iterations
            unconverged += 0 if sol.converged else 1
            ls_warnings += sol.line_search_warnings

            if prev_coeff is not None:
                stagnation = _relative_change(g, coeff[:, None], vector[:, None],
                                              prev_coeff[:, None], prev_vector[:, None])
                if stagnation <= cfg.basic_stagnation_tol:
                    prev_coeff, prev_vector = coeff.copy(), vector.copy()
                    break
            prev_coeff, prev_vector = coeff.copy(), vector.copy()

        u = u.append_rank_one(coeff, vector)
        results.append(RankResult(
            rank=rank, tensor=u, sweeps=sweeps, stagnation=float(stagnation),
            residual_calls=counter.total, bfgs_iterations=iters,
            unconverged_solves=unconverged, line_search_warnings=ls_warnings))

        correction = _tensor_norm(g, coeff[:, None], vector[:, None])
        total = _tensor_norm(g, u.coeffs, u.vectors)
        if total > 0.0 and correction <= cfg.outer_tol * total:
            break
    return results


def improved_pgd(problem: ParametricProblem, rule: QuadratureRule,
                 basis: StochasticBasis, config: Optional[PgdConfig] = None,
                 counter: Optional[ResidualCounter] = None) -> list:
    """Rank-adaptive construction with full block re-optimization.

    After appending a fresh term, sweeps alternate over the two blocks:
    orthonormalize the coefficients (in the quadrature metric), solve
    for all vectors at once, orthonormalize the vectors, solve for all
    coefficients at once. The per-rank stagnation tolerance tightens
    with the rank, so early terms are cheap and late terms are resolved
    to the solver floor. Orthonormalization mixings are pushed into the
    opposite block, so the represented sum is unchanged and every block
    solve starts from the iterate the previous solve produced.
    """
    cfg = config or PgdConfig()
    _validate_config(cfg)
    if counter is None:
        counter = ResidualCounter()
    prob = counted(problem, counter)
    psi = eval_matrix(basis, rule)
    g, g_chol = _quadrature_gram_chol(basis, rule, psi)
    anchor = _resolve_anchor(problem, cfg)
    psi_anchor = basis.evaluate(anchor)
    w = rule.weights

    coeffs = np.zeros((basis.m, 0))
    vectors = np.zeros((problem.n, 0))
    prev_tensor = None
    results = []
    for rank in range(1, cfg.max_rank + 1):
        coeffs = np.hstack([coeffs, np.full((basis.m, 1), cfg.coeff_init_value)])
        vectors = np.hstack([vectors, np.full((problem.n, 1), cfg.vector_init_value)])
        anchor_state = vectors @ (coeffs.T @ psi_anchor)
        if cfg.vector_precond == "anchor":
            # one frozen tangent per accepted rank
            c0_vec = make_vector_preconditioner(prob, anchor, anchor_state, "anchor")

        iters = 0
        unconverged = 0
        ls_warnings = 0
        stagnation = np.inf
        sweeps = 0
        tol_r = cfg.improved_stagnation_tol(rank)
        sweep_tensors = [] if cfg.keep_sweep_history else None
        prev_c, prev_v = coeffs.copy(), vectors.copy()

        for _ in range(cfg.improved_max_alt_iters):
            sweeps += 1
            coeffs, mix = orth_columns_metric(coeffs, g_chol)
            vectors = vectors @ mix.T

            if cfg.vector_precond == "sampled":
                coeff_vals = psi @ coeffs
                states_now = coeff_vals @ vectors.T
                c0_vec = make_vector_preconditioner(
                    prob, anchor, anchor_state, "sampled",
                    rule=rule, coeff_values=coeff_vals, states=states_now)

            def vectors_residual(v_block):
                return projected_residual_vectors(prob, rule, psi, coeffs, v_block)

            sol = lbfgs.solve(vectors_residual, vectors, c0_vec,
                              tol=cfg.bfgs_tol, max_iter=cfg.bfgs_max_iter,
                              memory=cfg.bfgs_memory, policy=cfg.bfgs_policy)
            vectors = sol.x
            iters += sol.iterations
            unconverged += 0 if sol.converged else 1
            ls_warnings += sol.line_search_warnings

            vectors, mix = orth_columns(vectors)
            coeffs = coeffs @ mix.T

            c0_coeff = make_coeff_preconditioner(prob, anchor, anchor_state,
                                                 vectors, mode=cfg.coeff_precond)

            def coeffs_residual(c_block):
                return projected_residual_coeffs(prob, rule, psi, c_block, vectors)

            sol = lbfgs.solve(coeffs_residual, coeffs, c0_coeff,
                              tol=cfg.bfgs_tol, max_iter=cfg.bfgs_max_iter,
                              memory=cfg.bfgs_memory, policy=cfg.bfgs_policy)
            coeffs = sol.x
            iters += sol.iterations
            unconverged += 0 if sol.converged else 1
            ls_warnings += sol.line_search_warnings

            if sweep_tensors is not None:
                sweep_tensors.append(LowRankTensor(coeffs.copy(), vectors.copy()))

            stagnation = _relative_change(g, coeffs, vectors, prev_c, prev_v)
            prev_c, prev_v = coeffs.copy(), vectors.copy()
            if stagnation <= tol_r:
                break

        tensor = LowRankTensor(coeffs.copy(), vectors.copy())
        results.append(RankResult(
            rank=rank, tensor=tensor, sweeps=sweeps, stagnation=float(stagnation),
            residual_calls=counter.total, bfgs_iterations=iters,
            unconverged_solves=unconverged, line_search_warnings=ls_warnings,
            sweep_tensors=sweep_tensors))

        if prev_tensor is not None:
            nn = _tensor_cross(g, coeffs, vectors, coeffs, vectors)
            oo = _tensor_cross(g, prev_tensor.coeffs, prev_tensor.vectors,
                               prev_tensor.coeffs, prev_tensor.vectors)
            no = _tensor_cross(g, coeffs, vectors, prev_tensor.coeffs, prev_tensor.vectors)
            diff = np.sqrt(max(nn - 2.0 * no + oo, 0.0))
            if nn > 0.0 and diff <= cfg.outer_tol * np.sqrt(nn):
                prev_tensor = tensor
                break
        prev_tensor = tensor
    return results
