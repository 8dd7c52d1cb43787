"""Matrix-free limited-memory BFGS on residual form.

The solver sees a problem only through a residual map ``x -> R(x)``
(the negative gradient of an underlying energy) and the action of an
initial symmetric positive definite operator ``C0``. The inverse
Jacobian approximation is maintained as ``C0`` plus a bounded queue of
rank-two corrections

    C_{l+1} = C_l + ((zt + zs) / zt^2) (t ox t) - (1 / zt) (s ox t + t ox s)

with t the accepted step, z the residual decrease ``R_old - R_new``,
s = C_l z (applied before the new pair is inserted), zt = <z, t>,
zs = <z, s>, and ``(a ox b) x = <b, x> a``. Iterates live in any
inner-product space represented by ndarrays; inner products are the
sum of elementwise products, which is the Euclidean product for
vectors and the trace product for matrices.

Steps are chosen by a coarse scalar root search on
``sigma(rho) = <d, R(x + rho d)>``: regula falsi after bracketing by
doubling, accepted as soon as ``|sigma|`` drops below half its value
at rho = 0. Once the residual norm has decreased for a few consecutive
iterations the full quasi-Newton step rho = 1 is taken without any
extra residual evaluations.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .exceptions import DegeneratePreconditionerError, NonFiniteResidualError

__all__ = [
    "LimitedMemoryInverse",
    "LineSearchResult",
    "line_search",
    "BfgsResult",
    "solve",
]

# relative curvature floor below which an update pair is discarded
CURVATURE_TOL = 1e-12


def _inner(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.sum(a * b))


def _norm(a: np.ndarray) -> float:
    return float(np.sqrt(max(np.sum(a * a), 0.0)))


class LimitedMemoryInverse:
    """C0 plus a bounded queue of rank-two inverse-BFGS corrections.

    Parameters
    ----------
    c0_apply : callable
        Action of the initial SPD operator on an iterate-shaped array.
    memory : int
        Maximum number of stored update pairs. Zero keeps C = C0.
    policy : {"fifo", "restart"}
        What to do when the queue is full: drop the oldest pair, or
        forget all pairs and start over.
    auto_scale : bool
        Rescale C0 once, from the first stored pair, so that its
        curvature along z matches the observed <z, t> (the usual
        gamma = <z, t> / <z, C0 z> initial scaling). Without it a
        uniformly mis-scaled C0 (identity against c*I curvature) is
        corrected one direction per update, costing an iteration per
        dimension of the iterate space.
    """

    def __init__(self, c0_apply: Callable, memory: int = 20, policy: str = "fifo",
                 auto_scale: bool = True):
        if memory < 0:
            raise ValueError(f"memory must be >= 0, got {memory}")
        if policy not in ("fifo", "restart"):
            raise ValueError(f"unknown queue policy {policy!r}")
        self.c0_apply = c0_apply
        self.memory = int(memory)
        self.policy = policy
        self.auto_scale = bool(auto_scale)
        self.gamma = 1.0
        self.updates = []  # tuples (t, s, zt, zs), insertion order
        self.skipped = 0
        self._scaled = False

    def apply(self, x: np.ndarray) -> np.ndarray:
        """Action of the current inverse approximation on x."""
        y = np.asarray(self.c0_apply(x), dtype=float).copy()
        if self.gamma != 1.0:
            y *= self.gamma
        for t, s, zt, zs in self.updates:
            tx = _inner(t, x)
            sx = _inner(s, x)
            y += ((zt + zs) / zt**2 * tx) * t - (tx / zt) * s - (sx / zt) * t
        return y

    def clear(self) -> None:
        """Forget all stored pairs, reverting C to (the scaled) C0."""
        self.updates.clear()

    def record(self, t: np.ndarray, z: np.ndarray) -> bool:
        """Insert the pair for step t and residual decrease z.

        The secant factor s = C z is computed with the queue as it is
        before insertion. Pairs violating the curvature condition
        <z, t> > 0 (relative tolerance) are skipped so C stays SPD.
        Returns True if the pair was stored.
        """
        zt = _inner(z, t)
        if zt <= CURVATURE_TOL * _norm(z) * _norm(t):
            self.skipped += 1
            return False
        if self.memory == 0:
            self.skipped += 1
            return False
        if self.auto_scale and not self._scaled and not self.updates:
            c0z = np.asarray(self.c0_apply(z), dtype=float)
            den = _inner(z, c0z)
            if den > 0.0:
                self.gamma = zt / den
                self._scaled = True
                s = self.gamma * c0z
            else:
                s = self.apply(z)
        else:
            s = self.apply(z)
        zs = _inner(z, s)
        if len(self.updates) >= self.memory:
            if self.policy == "restart":
                self.updates.clear()
            else:
                self.updates.pop(0)
        self.updates.append((np.array(t, dtype=float, copy=True),
                             np.array(s, dtype=float, copy=True), zt, zs))
        return True


@dataclass(frozen=True)
class LineSearchResult:
    rho: float
    sigma: float
    evaluations: int
    satisfied: bool  # |sigma(rho)| fell below the coarse target
    warning: bool    # no sign change found; best sample returned


def line_search(
    sigma: Callable[[float], float],
    rho_init: float = 1.0,
    eta: float = 0.5,
    sigma0: float | None = None,
    max_expansions: int = 30,
    max_interp: int = 50,
) -> LineSearchResult:
    """Coarse root search for sigma(rho) = <d, R(x + rho d)>.

    Accepts the first rho with |sigma(rho)| < eta * |sigma(0)|. The
    root is bracketed by doubling from ``rho_init`` and then pinched by
    regula falsi (with bisection as a safeguard). If no sign change is
    found within ``max_expansions`` doublings the best sample seen is
    returned with ``warning=True``.

    Pass ``sigma0`` when sigma(0) is already known (it usually is: the
    caller has the residual at the current iterate), saving one
    evaluation.
    """
    evals = 0
    if sigma0 is None:
        sigma0 = float(sigma(0.0))
        evals += 1
    if sigma0 == 0.0:
        # direction orthogonal to the residual; nothing to improve along it
        return LineSearchResult(rho_init, 0.0, evals, False, True)
    target = eta * abs(sigma0)

    rho = float(rho_init)
    val = float(sigma(rho))
    evals += 1
    while not np.isfinite(val) and rho > 1e-300:
        # trial so long the residual overflowed; back off hard
        rho *= 0.25
        val = float(sigma(rho))
        evals += 1
    if not np.isfinite(val):
        raise NonFiniteResidualError("residual not finite for any trial step length")
    best_rho, best_val = rho, val
    if abs(val) < target:
        return LineSearchResult(rho, val, evals, True, False)

    a, fa = 0.0, sigma0
    b, fb = rho, val
    if np.sign(fb) == np.sign(fa):
        # Same side of the root: expand the trial step. When the secant
        # through the last two samples outruns plain doubling, follow it
        # (capped); sigma is exactly linear on a quadratic energy, so
        # this reaches the root in one evaluation even when C0
        # underestimates the curvature by many orders of magnitude.
        found = False
        for _ in range(max_expansions):
            trial = 2.0 * b
            denom = fb - fa
            if denom != 0.0:
                secant = b - fb * (b - a) / denom
                if np.isfinite(secant) and secant > trial:
                    trial = min(secant, 1e8 * b)
            ft = float(sigma(trial))
            evals += 1
            if not np.isfinite(ft):
                # overflow wall; settle for the best finite sample
                break
            a, fa = b, fb
            b, fb = trial, ft
            if abs(fb) < abs(best_val):
                best_rho, best_val = b, fb
            if abs(fb) < target:
                return LineSearchResult(b, fb, evals, True, False)
            if np.sign(fb) != np.sign(fa):
                found = True
                break
        if not found:
            return LineSearchResult(best_rho, best_val, evals, False, True)

    # Illinois variant: when the same bracket side survives twice in a
    # row, the opposite function value is halved. Plain regula falsi
    # creeps hopelessly when one endpoint is orders of magnitude
    # steeper than the other, which is the normal situation on badly
    # preconditioned first iterations.
    side = 0
    for _ in range(max_interp):
        denom = fb - fa
        if denom != 0.0:
            cand = b - fb * (b - a) / denom
        else:
            cand = 0.5 * (a + b)
        lo, hi = (a, b) if a < b else (b, a)
        if not (lo < cand < hi):
            cand = 0.5 * (a + b)
        if lo > 0.0 and (abs(fa) > 10.0 * abs(fb) or abs(fb) > 10.0 * abs(fa)):
            # endpoint slopes differ by orders of magnitude, so the secant
            # pins the candidate to one end; split the exponent range instead
            cand = float(np.sqrt(lo * hi))
        val = float(sigma(cand))
        evals += 1
        if not np.isfinite(val):
            # interior blow-up: retreat toward the short end of the bracket
            cand = 0.5 * (lo + cand)
            val = float(sigma(cand))
            evals += 1
            if not np.isfinite(val):
                return LineSearchResult(best_rho, best_val, evals, False, True)
        if abs(val) < abs(best_val):
            best_rho, best_val = cand, val
        if abs(val) < target:
            return LineSearchResult(cand, val, evals, True, False)
        if np.sign(val) == np.sign(fa):
            a, fa = cand, val
            if side == -1:
                fb *= 0.5
            side = -1
        else:
            b, fb = cand, val
            if side == +1:
                fa *= 0.5
            side = +1
    return LineSearchResult(best_rho, best_val, evals, False, True)


@dataclass(frozen=True)
class BfgsResult:
    x: np.ndarray
    iterations: int
    converged: bool
    residual_norm: float
    residual_evals: int
    updates_skipped: int
    line_search_warnings: int
    memory_resets: int = 0
    last_rho: float = 1.0


def solve(
    residual_fn: Callable[[np.ndarray], np.ndarray],
    x0: np.ndarray,
    c0_apply: Callable[[np.ndarray], np.ndarray],
    tol: float = 1e-10,
    max_iter: int = 500,
    memory: int = 20,
    policy: str = "fifo",
    eta: float = 0.5,
    unit_step_after: int = 2,
    rho_init: float = 1.0,
    auto_scale: bool = True,
    callback: Callable | None = None,
) -> BfgsResult:
    """Drive the residual to ``tol * max(1, |R(x0)|)``.

    Each iteration takes a coarse line-searched step along
    d = C R(x), then records the (step, residual decrease) pair.
    Every search starts from the previously accepted step length
    (``rho_init`` seeds the first one), which keeps the searches cheap
    when the preconditioner consistently over- or underestimates the
    curvature. After ``unit_step_after`` consecutive residual-norm
    decreases the line search is skipped in favor of the full step
    rho = 1; the skip is revoked whenever the norm goes back up, and is
    only armed once the searched step lengths themselves approach 1, so
    a run of heavily damped steps cannot trigger a wild full step.

    If rounding noise in the stored update pairs ever turns C
    indefinite (the computed direction stops being a descent
    direction), the pair queue is dropped and the iteration continues
    from the bare preconditioner.

    ``callback``, when given, is invoked after every accepted step as
    ``callback(iteration, x, residual_norm, rho, evals_so_far)``.
    """
    x = np.array(x0, dtype=float, copy=True)
    r = np.asarray(residual_fn(x), dtype=float)
    evals = 1
    if not np.all(np.isfinite(r)):
        raise NonFiniteResidualError("residual at the initial iterate is not finite",
                                     iterate=x)
    norm_r = _norm(r)
    threshold = tol * max(1.0, norm_r)
    ls_warnings = 0
    resets = 0
    inv = LimitedMemoryInverse(c0_apply, memory=memory, policy=policy,
                               auto_scale=auto_scale)
    if norm_r <= threshold:
        return BfgsResult(x, 0, True, norm_r, evals, 0, 0)

    d = inv.apply(r)
    streak = 0
    last_rho = 0.0
    rho_seed = float(rho_init)
    iterations = 0
    converged = False
    for _ in range(max_iter):
        iterations += 1
        sigma0 = _inner(d, r)
        if sigma0 <= 0.0 and inv.updates:
            inv.clear()
            resets += 1
            streak = 0
            d = inv.apply(r)
            sigma0 = _inner(d, r)
        if sigma0 <= 0.0:
            raise DegeneratePreconditionerError(
                "preconditioner direction is not a descent direction")
        trial_cache: dict[float, np.ndarray] = {}

        if streak >= unit_step_after and 0.5 <= last_rho <= 2.0:
            rho = 1.0
        else:
            def sigma(rho_trial: float) -> float:
                r_trial = np.asarray(residual_fn(x + rho_trial * d), dtype=float)
                trial_cache[rho_trial] = r_trial
                return _inner(d, r_trial)

            ls = line_search(sigma, rho_init=rho_seed, eta=eta, sigma0=sigma0)
            evals += ls.evaluations
            if ls.warning:
                ls_warnings += 1
            rho = ls.rho
            rho_seed = min(max(rho, 1e-12), 1e6)

        t = rho * d
        x_new = x + t
        if rho in trial_cache:
            r_new = trial_cache[rho]
        else:
            r_new = np.asarray(residual_fn(x_new), dtype=float)
            evals += 1
        if not np.all(np.isfinite(r_new)):
            raise NonFiniteResidualError(
                f"residual became non-finite at iteration {iterations}", iterate=x_new)

        gamma_before = inv.gamma
        inv.record(t, r - r_new)
        if inv.gamma != gamma_before:
            # C0 just got rescaled; step lengths live in a new unit system
            rho_seed = 1.0
        norm_new = _norm(r_new)
        streak = streak + 1 if norm_new < norm_r else 0
        last_rho = rho
        x, r, norm_r = x_new, r_new, norm_new
        if callback is not None:
            callback(iterations, x, norm_r, rho, evals)
        if norm_r <= threshold:
            converged = True
            break
        d = inv.apply(r)

    return BfgsResult(x, iterations, converged, norm_r, evals,
                      inv.skipped, ls_warnings, resets, last_rho if iterations else 1.0)
