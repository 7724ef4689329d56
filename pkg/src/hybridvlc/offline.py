"""Exact and heuristic offline power minimisation.

* :func:`solve_p2` picks the cheapest set of VLC APs that lights every
  sample point.  Walls make the problem separate by room, so each connected
  group of luminaires is enumerated exhaustively.
* :func:`solve_p3` / :func:`solve_p1` are branch-and-bound over the AP on/off
  vector with an exact capacitated assignment at the leaves.
* :func:`greedy_heuristic` is the fallback for instances past
  :class:`SolveLimits`.

Every power comparison uses an absolute tolerance of ``TOL`` watts.  Among
equal-cost optima the solvers prefer fewer APs on, then the
lexicographically smallest sorted list of on-AP indices.
"""

from __future__ import annotations

import enum
import itertools
import time
from dataclasses import dataclass, field
from typing import Iterable, Optional

import numpy as np

from .instance import VLC, ProblemInstance

TOL = 1e-9


class SolverError(Exception):
    pass


class InfeasibleError(SolverError):
    pass


class SizeLimitError(SolverError):
    pass


class Scheme(str, enum.Enum):
    HYBRID = "hybrid"
    VLC_ONLY = "vlc"
    WIFI_ONLY = "wifi"


@dataclass(frozen=True)
class SolveLimits:
    max_exact_aps: int = 20
    max_exact_users: int = 24
    time_budget: Optional[float] = None  # seconds

    def __post_init__(self):
        if self.max_exact_aps <= 0 or self.max_exact_users <= 0:
            raise ValueError("limits must be positive")
        if self.time_budget is not None and self.time_budget <= 0:
            raise ValueError("time_budget must be positive")


DEFAULT_LIMITS = SolveLimits()


@dataclass(frozen=True)
class Assignment:
    """On/off vector ``x`` (M,), association ``y`` (M, N) and its power.

    ``baseline_power`` is the part of ``total_power`` already owed to
    illumination; ``extra_power`` is what the schemes report.
    """
    x: np.ndarray
    y: np.ndarray
    total_power: float
    per_ap_load: np.ndarray
    baseline_power: float = 0.0
    optimal: bool = True
    label: str = ""
    notes: dict = field(default_factory=dict, compare=False)

    @property
    def extra_power(self) -> float:
        return max(0.0, self.total_power - self.baseline_power)

    @property
    def association(self) -> np.ndarray:
        """Serving AP per user (first on the row), -1 if none."""
        if self.y.shape[1] == 0:
            return np.zeros(0, dtype=int)
        return np.where(self.y.any(axis=0), self.y.argmax(axis=0), -1)

    @property
    def aps_on(self) -> list[int]:
        return [int(m) for m in np.flatnonzero(self.x)]


def make_assignment(inst: ProblemInstance, x, assoc, *, baseline=0.0, optimal=True,
                    label="") -> Assignment:
    x = np.asarray(x, dtype=bool).copy()
    assoc = np.asarray(assoc, dtype=int)
    y = np.zeros((inst.n_aps, inst.n_users), dtype=bool)
    served = assoc >= 0  # -1 leaves a user unconnected
    y[assoc[served], np.flatnonzero(served)] = True
    load = np.where(y, inst.cost, 0.0).sum(axis=1) if inst.n_users else np.zeros(inst.n_aps)
    total = float(inst.p_on[x].sum() + load.sum())
    return Assignment(x=x, y=y, total_power=total, per_ap_load=load,
                      baseline_power=float(baseline), optimal=optimal, label=label)


# -- independent feasibility checker ------------------------------------------------

def check_assignment(inst: ProblemInstance, asg: Assignment, forced_on: Iterable[int] = (),
                     *, capacities: bool = True, illumination: bool = True,
                     tol: float = TOL) -> list[str]:
    """Re-verify an assignment against the raw instance; returns violations."""
    out = []
    x = np.asarray(asg.x, dtype=bool)
    y = np.asarray(asg.y, dtype=bool)
    M, N = inst.cost.shape
    if x.shape != (M,) or y.shape != (M, N):
        return [f"shape mismatch: x {x.shape}, y {y.shape}, instance ({M}, {N})"]
    for m in forced_on:
        if not x[m]:
            out.append(f"forced AP {m} is off")
    for m in range(M):
        for n in range(N):
            if y[m, n] and not x[m]:
                out.append(f"user {n} attached to AP {m} which is off")
            if y[m, n] and not np.isfinite(inst.cost[m, n]):
                out.append(f"user {n} attached over infeasible link to AP {m}")
    for n in range(N):
        if not y[:, n].any():
            out.append(f"user {n} not connected")
    load = np.zeros(M)
    for m in range(M):
        for n in range(N):
            if y[m, n]:
                load[m] += inst.cost[m, n]
    if capacities:
        for m in range(M):
            if load[m] > inst.p_max[m] * x[m] + tol:
                out.append(f"AP {m} load {load[m]:.6g} W exceeds P_max {inst.p_max[m]:.6g} W")
    if illumination:
        for w in range(inst.n_points):
            lux = sum(inst.illum_coeff[m, w] for m in range(M) if x[m])
            need = inst.illum_req[w]
            if lux < need - 1e-9 * max(1.0, need):
                out.append(f"point {w} gets {lux:.6g} lux < {need:.6g}")
    total = sum(inst.p_on[m] for m in range(M) if x[m]) + load.sum()
    if np.isfinite(total) and abs(total - asg.total_power) > 1e-6 * max(1.0, total):
        out.append(f"total power {asg.total_power:.9g} != recomputed {total:.9g}")
    return out


# -- P2: illumination ----------------------------------------------------------------

def _illum_ok(coeff_sum, req) -> np.ndarray:
    return coeff_sum >= req - 1e-9 * np.maximum(1.0, req)


def _illum_groups(inst: ProblemInstance):
    """Connected groups of (APs, points) linked by positive coefficients."""
    A = inst.illum_coeff
    need = np.flatnonzero(inst.illum_req > 0)
    parent = list(range(inst.n_aps))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for w in need:
        aps = np.flatnonzero(A[:, w] > 0)
        if len(aps) == 0:
            raise InfeasibleError(
                f"sample point {w} (room {inst.point_room[w]}) needs "
                f"{inst.illum_req[w]:.6g} lux but no luminaire reaches it")
        for m in aps[1:]:
            parent[find(m)] = find(aps[0])
    groups: dict[int, tuple[list, list]] = {}
    for w in need:
        root = find(int(np.flatnonzero(A[:, w] > 0)[0]))
        groups.setdefault(root, ([], []))[1].append(int(w))
    for m in range(inst.n_aps):
        if find(m) in groups and (A[m] > 0).any():
            groups[find(m)][0].append(m)
    return [(sorted(aps), pts) for aps, pts in groups.values()]


def _on_indices(bits) -> tuple:
    return tuple(i for i, b in enumerate(bits) if b)


def _better(key_a, key_b) -> bool:
    """Tie-break order: cost within TOL, then fewer APs on, then the
    lexicographically smallest list of on-AP indices (lowest index wins)."""
    ca, na, xa = key_a
    cb, nb, xb = key_b
    if ca < cb - TOL:
        return True
    if ca > cb + TOL:
        return False
    return (na, _on_indices(xa)) < (nb, _on_indices(xb))


def solve_p2(inst: ProblemInstance, max_group: int = 20) -> tuple[frozenset, float]:
    """Cheapest set of APs meeting every illumination requirement."""
    on: set[int] = set()
    for aps, pts in _illum_groups(inst):
        if len(aps) > max_group:
            raise SizeLimitError(f"illumination group of {len(aps)} APs exceeds {max_group}")
        A = inst.illum_coeff[np.ix_(aps, pts)]
        req = inst.illum_req[pts]
        if not _illum_ok(A.sum(axis=0), req).all():
            bad = pts[int(np.argmin(A.sum(axis=0) - req))]
            raise InfeasibleError(
                f"sample point {bad} (room {inst.point_room[bad]}) cannot reach "
                f"{inst.illum_req[bad]:.6g} lux even with all luminaires on")
        best = None
        for bits in itertools.product((0, 1), repeat=len(aps)):
            sel = np.array(bits, dtype=bool)
            if not _illum_ok(A[sel].sum(axis=0), req).all():
                continue
            key = (float(inst.p_on[aps][sel].sum()), int(sel.sum()), bits)
            if best is None or _better(key, best):
                best = key
        on.update(a for a, b in zip(aps, best[2]) if b)
    return frozenset(on), float(sum(inst.p_on[m] for m in on))


# -- exact assignment ----------------------------------------------------------------

def _assign_exact(cost: np.ndarray, on: np.ndarray, p_max: np.ndarray, deadline=None):
    """Minimum-cost capacitated assignment of every user to an on AP.

    Returns ``(value, assoc)`` or ``None`` when no feasible assignment exists.
    """
    M, N = cost.shape
    if N == 0:
        return 0.0, np.zeros(0, dtype=int)
    c = np.where(on[:, None], cost, np.inf)
    assoc = np.argmin(c, axis=0)
    best_c = c[assoc, np.arange(N)]
    if not np.isfinite(best_c).all():
        return None
    load = np.bincount(assoc, weights=best_c, minlength=M)
    if (load <= p_max + TOL).all():
        return float(best_c.sum()), assoc

    # Capacities bind: depth-first search, most constrained users first.
    if M > 1:
        srt = np.sort(c, axis=0)
        regret = np.where(np.isfinite(srt[1]), srt[1] - srt[0], np.inf)
    else:
        regret = np.full(N, np.inf)
    order = sorted(range(N), key=lambda n: (-regret[n], n))
    options = [[int(m) for m in np.argsort(c[:, n], kind="stable") if np.isfinite(c[m, n])]
               for n in order]
    mins = best_c[order]
    tail = np.concatenate([np.cumsum(mins[::-1])[::-1], [0.0]])
    load = np.zeros(M)
    cur = np.zeros(N, dtype=int)
    best = [np.inf, None]
    counter = [0]

    def dfs(i, acc):
        if acc + tail[i] >= best[0] - TOL:
            return
        if i == N:
            best[0] = acc
            best[1] = cur.copy()
            return
        counter[0] += 1
        if deadline is not None and counter[0] % 4096 == 0 and time.monotonic() > deadline:
            raise SizeLimitError("time budget exhausted in assignment search")
        n = order[i]
        for m in options[i]:
            cm = c[m, n]
            if load[m] + cm > p_max[m] + TOL:
                continue
            load[m] += cm
            cur[n] = m
            dfs(i + 1, acc + cm)
            load[m] -= cm

    dfs(0, 0.0)
    if best[1] is None:
        return None
    return float(best[0]), best[1]


def _check_limits(n_free: int, n_users: int, limits: SolveLimits):
    if n_free > limits.max_exact_aps or n_users > limits.max_exact_users:
        raise SizeLimitError(
            f"exact solve refused: {n_free} APs / {n_users} users exceeds limits "
            f"({limits.max_exact_aps} / {limits.max_exact_users}); use the heuristic")


def _branch_and_bound(inst: ProblemInstance, forced: np.ndarray, p_on_eff: np.ndarray,
                      illumination: bool, limits: SolveLimits, incumbent=None):
    """Minimise ``p_on_eff . x + assignment(x)`` subject to the constraints.

    APs that can neither serve a user nor light a needy point are never
    switched on (they could only add cost), so they are fixed off up front.
    """
    M, N = inst.cost.shape
    need = inst.illum_req > 0 if illumination else np.zeros(inst.n_points, dtype=bool)
    A = inst.illum_coeff[:, need]
    req = inst.illum_req[need]
    useful = np.isfinite(inst.cost).any(axis=1) | (A > 0).any(axis=1)
    free = [m for m in range(M) if useful[m] and not forced[m]]
    _check_limits(len(free), N, limits)
    deadline = None if limits.time_budget is None else time.monotonic() + limits.time_budget

    unserved = [n for n in range(N) if not np.isfinite(inst.cost[:, n]).any()]
    if unserved:
        raise InfeasibleError(f"user {unserved[0]} has no feasible AP")

    best = {"key": None, "assoc": None}
    if incumbent is not None:
        x0, assoc0 = incumbent
        val = float(p_on_eff[x0].sum() + inst.cost[assoc0, np.arange(N)].sum())
        best["key"] = (val, int(x0.sum()), tuple(int(b) for b in x0))
        best["assoc"] = assoc0

    x = forced.copy()
    decided_on_cost = float(p_on_eff[forced].sum())
    n_free = len(free)

    def bound(i, on_cost):
        avail = x.copy()
        for m in free[i:]:
            avail[m] = True
        if N:
            cmin = np.where(avail[:, None], inst.cost, np.inf).min(axis=0)
            if not np.isfinite(cmin).all():
                return np.inf, avail
            lb = on_cost + float(cmin.sum())
        else:
            lb = on_cost
        if len(req) and not _illum_ok(A[avail].sum(axis=0), req).all():
            return np.inf, avail
        return lb, avail

    def visit(i, on_cost):
        if deadline is not None and time.monotonic() > deadline:
            raise SizeLimitError("time budget exhausted in branch-and-bound")
        lb, _ = bound(i, on_cost)
        if best["key"] is not None and lb > best["key"][0] + TOL:
            return
        if not np.isfinite(lb):
            return
        if i == n_free:
            res = _assign_exact(inst.cost, x, inst.p_max, deadline)
            if res is None:
                return
            val, assoc = res
            key = (on_cost + val, int(x.sum()), tuple(int(b) for b in x))
            if best["key"] is None or _better(key, best["key"]):
                best["key"] = key
                best["assoc"] = assoc
            return
        m = free[i]
        # off branch first: fewer-AP optima turn up early and tighten pruning
        visit(i + 1, on_cost)
        x[m] = True
        visit(i + 1, on_cost + float(p_on_eff[m]))
        x[m] = False

    visit(0, decided_on_cost)
    if best["key"] is None:
        raise InfeasibleError("no assignment satisfies the constraints")
    x_best = np.array(best["key"][2], dtype=bool)
    return x_best, np.asarray(best["assoc"], dtype=int)


def _as_mask(inst, ids) -> np.ndarray:
    mask = np.zeros(inst.n_aps, dtype=bool)
    for m in ids:
        if not 0 <= m < inst.n_aps:
            raise SolverError(f"AP index {m} out of range")
        mask[m] = True
    return mask


def solve_p3(inst: ProblemInstance, forced_on: Iterable[int] = (),
             limits: SolveLimits = DEFAULT_LIMITS) -> Assignment:
    """Exact minimum power with ``forced_on`` APs on at no turn-on charge."""
    forced = _as_mask(inst, forced_on)
    p_on_eff = np.where(forced, 0.0, inst.p_on)
    inc = _incumbent(inst, forced, illumination=False)
    x, assoc = _branch_and_bound(inst, forced, p_on_eff, False, limits, inc)
    baseline = float(inst.p_on[forced].sum())
    return make_assignment(inst, x, assoc, baseline=baseline, label="p3")


def solve_p1(inst: ProblemInstance, limits: SolveLimits = DEFAULT_LIMITS) -> Assignment:
    """Exact joint optimum of turn-on, association and illumination."""
    forced = np.zeros(inst.n_aps, dtype=bool)
    inc = _incumbent(inst, forced, illumination=True)
    x, assoc = _branch_and_bound(inst, forced, inst.p_on.copy(), True, limits, inc)
    return make_assignment(inst, x, assoc, label="p1")


def _incumbent(inst, forced, illumination):
    try:
        extra = solve_p2(inst)[0] if illumination else ()
        g = greedy_heuristic(inst, set(np.flatnonzero(forced)) | set(extra))
    except SolverError:
        return None
    return g.x, g.association


# -- heuristic -----------------------------------------------------------------------

def greedy_heuristic(inst: ProblemInstance, forced_on: Iterable[int] = ()) -> Assignment:
    """Arrival-order greedy followed by an AP-closing local search.

    Not optimal; the result is labelled ``optimal=False``.
    """
    forced = _as_mask(inst, forced_on)
    if inst.n_points and not _illum_ok(inst.illum_coeff[forced].sum(axis=0),
                                       inst.illum_req).all():
        forced |= _as_mask(inst, solve_p2(inst)[0])
    M, N = inst.cost.shape
    on = forced.copy()
    load = np.zeros(M)
    assoc = np.full(N, -1)
    for n in range(N):
        c = inst.cost[:, n]
        ok = np.isfinite(c) & (load + c <= inst.p_max + TOL)
        if not ok.any():
            raise InfeasibleError(f"user {n} cannot be served by any AP within P_max")
        marginal = np.where(ok, c + np.where(on, 0.0, inst.p_on), np.inf)
        m = int(np.argmin(marginal))
        assoc[n] = m
        on[m] = True
        load[m] += c[m]

    improved = True
    while improved:
        improved = False
        for m in range(M):
            if not on[m] or forced[m]:
                continue
            users = np.flatnonzero(assoc == m)
            trial_load = load.copy()
            trial_load[m] = 0.0
            trial = assoc.copy()
            delta = -inst.p_on[m] - inst.cost[m, users].sum()
            ok = True
            for n in users:
                c = inst.cost[:, n]
                cand = on.copy()
                cand[m] = False
                fits = cand & np.isfinite(c) & (trial_load + c <= inst.p_max + TOL)
                if not fits.any():
                    ok = False
                    break
                k = int(np.argmin(np.where(fits, c, np.inf)))
                trial[n] = k
                trial_load[k] += c[k]
                delta += c[k]
            if ok and delta < -TOL:
                on[m] = False
                assoc, load = trial, trial_load
                improved = True
    baseline = float(inst.p_on[forced].sum())
    return make_assignment(inst, on, assoc, baseline=baseline, optimal=False, label="greedy")


# -- schemes -------------------------------------------------------------------------

def scheme_mask(inst: ProblemInstance, scheme: Scheme) -> np.ndarray:
    """APs allowed to carry traffic under a scheme."""
    scheme = Scheme(scheme)
    vlc = inst.vlc_mask
    if scheme is Scheme.VLC_ONLY:
        return vlc
    if scheme is Scheme.WIFI_ONLY:
        return ~vlc
    return np.ones(inst.n_aps, dtype=bool)


def _n_free(inst: ProblemInstance) -> int:
    need = inst.illum_req > 0
    useful = np.isfinite(inst.cost).any(axis=1) | (inst.illum_coeff[:, need] > 0).any(axis=1)
    return int(useful.sum())


def solve_scheme(inst: ProblemInstance, scheme: Scheme = Scheme.HYBRID, *,
                 mode: str = "exact", limits: SolveLimits = DEFAULT_LIMITS) -> Assignment:
    """Best assignment when only the scheme's APs may carry traffic.

    Illumination is always enforced; ``baseline_power`` is the P2 optimum so
    ``extra_power`` is the power beyond what lighting alone requires.
    ``mode`` is ``exact``, ``heuristic`` or ``auto``.
    """
    scheme = Scheme(scheme)
    if mode not in ("exact", "heuristic", "auto"):
        raise ValueError(f"unknown solver mode {mode!r}")
    sub = inst.restricted(scheme_mask(inst, scheme))
    if not sub.feasible:
        raise InfeasibleError(
            f"scheme {scheme.value}: user {sub.unservable_users[0]} has no usable AP")
    m_prime, p2_power = solve_p2(inst)
    if mode == "auto":
        ok = _n_free(sub) <= limits.max_exact_aps and sub.n_users <= limits.max_exact_users
        mode = "exact" if ok else "heuristic"

    if mode == "exact":
        if scheme is Scheme.WIFI_ONLY:
            # lights are fixed by P2 alone; only the radios remain
            asg = solve_p3(sub, m_prime, limits)
            asg = make_assignment(inst, asg.x, asg.association, baseline=p2_power,
                                  label="wifi/exact")
        else:
            asg = solve_p1(sub, limits)
            asg = make_assignment(inst, asg.x, asg.association, baseline=p2_power,
                                  label=f"{scheme.value}/exact")
        return asg

    candidates = [greedy_heuristic(sub, m_prime)]
    if scheme is Scheme.HYBRID:
        # restricted solutions are feasible here too
        for other in (Scheme.VLC_ONLY, Scheme.WIFI_ONLY):
            alt = inst.restricted(scheme_mask(inst, other))
            if alt.feasible:
                try:
                    candidates.append(greedy_heuristic(alt, m_prime))
                except InfeasibleError:
                    pass
    best = min(candidates, key=lambda a: a.total_power)
    return make_assignment(inst, best.x, best.association, baseline=p2_power,
                           optimal=False, label=f"{scheme.value}/heuristic")
