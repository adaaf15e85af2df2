"""Static fairness optimization over the convex hull of rate vectors.

Proportional fairness maximizes the sum of log goodputs with a pairwise
Frank-Wolfe method whose linear oracle is a plain weighted-sum scan over the
atoms; hard fairness maximizes the minimum goodput as a linear program solved
by a small dense two-phase simplex with Bland's rule.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .rate_enum import RateAtom, atoms_matrix

PF = "pf"
HF = "hf"

_SUPPORT_FLOOR = 1e-8  # probability mass below this is cleaned away


class UnreachableUserError(ValueError):
    """Some user receives zero rate in every atom; fair utilities degenerate."""


@dataclass
class FairnessSolution:
    """Mixture over scheduling decisions and the goodput it induces."""

    objective: str
    probabilities: np.ndarray
    goodput: np.ndarray
    utility: float
    iterations: int
    converged: bool
    gap: float | None = None
    labels: tuple[tuple[int, int], ...] | None = None

    def support(self) -> list[tuple[int, int, float]]:
        """Nonzero-probability decisions as (pattern, index, probability)."""
        out = []
        for i, p in enumerate(self.probabilities):
            if p > 0:
                label = self.labels[i] if self.labels else (0, i + 1)
                out.append((label[0], label[1], float(p)))
        return out


def _atoms_input(atoms) -> tuple[np.ndarray, tuple[tuple[int, int], ...] | None]:
    if isinstance(atoms, np.ndarray):
        return np.asarray(atoms, dtype=float), None
    if atoms and isinstance(atoms[0], RateAtom):
        return atoms_matrix(atoms), tuple(a.decision.label for a in atoms)
    return np.asarray(atoms, dtype=float), None


def _check_reachable(matrix: np.ndarray) -> None:
    if matrix.size == 0:
        raise ValueError("no atoms to mix")
    dead = np.where(matrix.max(axis=0) <= 0)[0]
    if dead.size:
        raise UnreachableUserError(
            f"users {dead.tolist()} are served by no atom"
        )


def _cleanup(pi: np.ndarray) -> np.ndarray:
    pi = np.where(pi < _SUPPORT_FLOOR, 0.0, pi)
    return pi / pi.sum()


def pf_utility(goodput: np.ndarray) -> float:
    return float(np.sum(np.log(np.maximum(goodput, 1e-300))))


def _pf_line_search(r: np.ndarray, d: np.ndarray, step_max: float) -> float:
    """Maximize sum(log(r + s*d)) over s in [0, step_max]; derivative bisection."""
    hi = step_max
    neg = d < 0
    if neg.any():
        boundary = float(np.min(-r[neg] / d[neg]))
        hi = min(hi, boundary * (1.0 - 1e-12))
    if hi <= 0:
        return 0.0

    def slope(s: float) -> float:
        x = r + s * d
        return float(np.sum(d / np.maximum(x, 1e-300)))

    if slope(hi) >= 0:
        return min(hi, step_max)
    lo = 0.0
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if slope(mid) > 0:
            lo = mid
        else:
            hi = mid
    return lo


def solve_pf(atoms, *, tol: float = 1e-6, max_iter: int = 100_000) -> FairnessSolution:
    """Proportional fairness by pairwise Frank-Wolfe over the atom simplex.

    Starts from the uniform mixture (finite utility once every user is
    reachable) and stops when the Frank-Wolfe duality gap drops to ``tol``.
    The gap doubles as an optimality certificate: at the optimum no atom's
    weighted sum, with weights 1/goodput, exceeds the user count.
    """
    matrix, labels = _atoms_input(atoms)
    _check_reachable(matrix)
    n = matrix.shape[0]
    pi = np.full(n, 1.0 / n)
    r = pi @ matrix
    gap = math.inf
    converged = False
    iterations = 0
    for iterations in range(1, max_iter + 1):
        grad = 1.0 / np.maximum(r, 1e-12)
        scores = matrix @ grad
        fw = int(np.argmax(scores))
        gap = float(scores[fw] - scores @ pi)
        if gap <= tol:
            converged = True
            break
        support = np.where(pi > 0)[0]
        away = int(support[np.argmin(scores[support])])
        if fw == away:
            converged = True
            break
        d = matrix[fw] - matrix[away]
        step = _pf_line_search(r, d, float(pi[away]))
        if step <= 0:
            break
        pi[fw] += step
        pi[away] -= step
        if pi[away] < 1e-15:
            pi[away] = 0.0
        if iterations % 256 == 0:
            r = pi @ matrix  # shed accumulated float drift
        else:
            r = r + step * d
    pi = _cleanup(pi)
    r = pi @ matrix
    return FairnessSolution(
        objective=PF,
        probabilities=pi,
        goodput=r,
        utility=pf_utility(r),
        iterations=iterations,
        converged=converged,
        gap=gap,
        labels=labels,
    )


def solve_hf(atoms, *, feas_tol: float = 1e-6) -> FairnessSolution:
    """Hard (max-min) fairness as an exact linear program.

    max z  s.t.  sum_i pi_i * atom_i >= z per user, pi on the simplex.
    """
    matrix, labels = _atoms_input(atoms)
    _check_reachable(matrix)
    n, k = matrix.shape
    # variables x = (pi_1..pi_n, z); rows: z - A^T pi <= 0, sum pi = 1
    a_ub = np.hstack([-matrix.T, np.ones((k, 1))])
    b_ub = np.zeros(k)
    a_eq = np.hstack([np.ones((1, n)), np.zeros((1, 1))])
    b_eq = np.ones(1)
    c = np.zeros(n + 1)
    c[-1] = 1.0
    x, _ = _simplex_max(a_ub, b_ub, a_eq, b_eq, c)
    pi = _cleanup(x[:n])
    z = float(x[n])
    goodput = pi @ matrix
    if goodput.min() < z - feas_tol:
        raise RuntimeError("simplex returned an infeasible mixture")
    return FairnessSolution(
        objective=HF,
        probabilities=pi,
        goodput=goodput,
        utility=float(goodput.min()),
        iterations=0,
        converged=True,
        gap=None,
        labels=labels,
    )


def _simplex_max(a_ub, b_ub, a_eq, b_eq, c, tol: float = 1e-9):
    """Dense two-phase primal simplex with Bland's rule.

    Maximizes c.x subject to a_ub.x <= b_ub, a_eq.x = b_eq, x >= 0, with all
    right-hand sides nonnegative.  Sized for the small tableaux used here.
    """
    m1, n = a_ub.shape
    m2 = a_eq.shape[0]
    m = m1 + m2
    total = n + m1 + m2  # x, slacks, artificials
    tab = np.zeros((m, total + 1))
    tab[:m1, :n] = a_ub
    tab[m1:, :n] = a_eq
    tab[:m1, n:n + m1] = np.eye(m1)
    tab[m1:, n + m1:total] = np.eye(m2)
    tab[:m1, -1] = b_ub
    tab[m1:, -1] = b_eq
    basis = list(range(n, n + m1)) + list(range(n + m1, total))

    def pivot(row: int, col: int) -> None:
        tab[row] /= tab[row, col]
        for i in range(m):
            if i != row and abs(tab[i, col]) > 0:
                tab[i] -= tab[i, col] * tab[row]
        basis[row] = col

    def run(cost: np.ndarray, allowed: int) -> None:
        # minimizes cost.x over columns [0, allowed)
        while True:
            cb = cost[basis]
            reduced = cost[:allowed] - cb @ tab[:, :allowed]
            entering = -1
            for j in range(allowed):  # Bland: first improving column
                if j in basis:
                    continue
                if reduced[j] < -tol:
                    entering = j
                    break
            if entering < 0:
                return
            ratios = []
            for i in range(m):
                if tab[i, entering] > tol:
                    ratios.append((tab[i, -1] / tab[i, entering], basis[i], i))
            if not ratios:
                raise RuntimeError("LP is unbounded")
            ratios.sort()
            pivot(ratios[0][2], entering)

    # phase 1: drive the artificials to zero
    phase1 = np.zeros(total)
    phase1[n + m1:] = 1.0
    run(phase1, total)
    if float(phase1[basis] @ tab[:, -1]) > 1e-7:
        raise RuntimeError("LP is infeasible")
    for i in range(m):  # expel degenerate artificials from the basis
        if basis[i] >= n + m1:
            for j in range(n + m1):
                if abs(tab[i, j]) > tol:
                    pivot(i, j)
                    break

    phase2 = np.zeros(total)
    phase2[:n] = -np.asarray(c, dtype=float)
    run(phase2, n + m1)
    x = np.zeros(total)
    for i, b in enumerate(basis):
        x[b] = tab[i, -1]
    return x[:n], float(c @ x[:n])


def solve(atoms, objective: str, **kwargs) -> FairnessSolution:
    if objective == PF:
        return solve_pf(atoms, **kwargs)
    if objective == HF:
        return solve_hf(atoms, **kwargs)
    raise ValueError(f"unknown objective {objective!r}")


def metrics(goodput) -> dict:
    """Geometric mean, minimum, and CDF points of a goodput vector."""
    g = np.asarray(goodput, dtype=float)
    if (g < 0).any():
        raise ValueError("goodput must be nonnegative")
    if g.size == 0:
        return {"geometric_mean": 0.0, "min_rate": 0.0, "cdf": []}
    with np.errstate(divide="ignore"):
        geo = float(np.exp(np.mean(np.log(g)))) if (g > 0).all() else 0.0
    ranked = np.sort(g)
    cdf = [(float(v), (i + 1) / g.size) for i, v in enumerate(ranked)]
    return {"geometric_mean": geo, "min_rate": float(g.min()), "cdf": cdf}
