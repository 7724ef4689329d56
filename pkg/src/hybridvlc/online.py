"""Randomized online minimum-cost connectivity and its
instrumentation.

The flow graph has a virtual source ``S``, one node per AP and one node per
arrived user.  Source edges ``S -> m`` cost ``P_on`` (zero for APs already lit
for illumination); association edges ``m -> u`` cost the additive power.

Per arrival the algorithm

1. extends every edge's pool of uniform thresholds to
   ``ceil(2 * log2(n' + 1))`` draws (``gamma`` is the pool minimum),
2. sorts edges against the current guess ``alpha``: *cheap*
   (``c <= alpha/M``, weight forced to 1), *excluded* (``c > alpha``) and
   *middle* (normalised cost ``c / (alpha/M)``),
3. while the fractional max flow ``S -> u`` is below 1, multiplies the
   working weight of every middle edge on the minimum cut by
   ``1 + 1/c_norm``,
4. commits ``w = max(w, w_aug)``, rounds ``w >= gamma`` and doubles
   ``alpha`` (forgetting working weights) whenever the fractional cost
   exceeds ``2 alpha log2 M + alpha + 1``.

Committed weights and rounded bits are separate fields, so a rounded edge
stays rounded and ``w`` never decreases.

Thresholds come from a stateless SplitMix64 hash of ``(seed, edge, j)``:
the ``j``-th draw of an edge does not depend on how or when the graph was
built.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional

import numpy as np

from .flow import layered_min_cut
from .instance import ArrivalStream, ProblemInstance

SOURCE = "S"
ALPHA_FALLBACK = 1.0


class UnservableUser(ValueError):
    pass


# -- thresholds -------------------------------------------------------------------

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)


def _splitmix64(z):
    with np.errstate(over="ignore"):
        z = np.asarray(z, dtype=np.uint64) + _GOLDEN
        z = (z ^ (z >> np.uint64(30))) * _M1
        z = (z ^ (z >> np.uint64(27))) * _M2
        return z ^ (z >> np.uint64(31))


def edge_code(m: int, u: Optional[int] = None) -> int:
    """64-bit id: ``m`` for ``S -> m``, ``(u + 1) << 32 | m`` for ``m -> u``."""
    return int(m) if u is None else ((int(u) + 1) << 32) | int(m)


def hashed_uniforms(seed: int, codes: np.ndarray, j: int) -> np.ndarray:
    """The ``j``-th uniform in ``[0, 1)`` of each edge's threshold stream."""
    key = _splitmix64(np.uint64(seed & 0xFFFFFFFFFFFFFFFF))
    with np.errstate(over="ignore"):
        z = _splitmix64(key ^ _splitmix64(np.asarray(codes, dtype=np.uint64)))
        z = _splitmix64(z + np.uint64(j))
    return (z >> np.uint64(11)).astype(np.float64) * (1.0 / (1 << 53))


def pool_size(n_arrived: int) -> int:
    return math.ceil(2.0 * math.log2(n_arrived + 1))


# -- state -------------------------------------------------------------------------

@dataclass
class OnlineDecision:
    user: int
    ap: int
    newly_turned_on: frozenset
    repaired: bool = False


@dataclass
class OnlineState:
    """Single-owner mutable state of one run."""
    M: int
    p_on: np.ndarray
    m_prime: frozenset
    seed: int
    alpha: float
    alpha_fallback: bool
    # source edges
    s_cost: np.ndarray
    s_w: np.ndarray
    s_waug: np.ndarray
    s_gamma: np.ndarray
    s_rounded: np.ndarray
    # association edges, column k belongs to arrival k
    u_cost: np.ndarray
    u_w: np.ndarray
    u_waug: np.ndarray
    u_gamma: np.ndarray
    u_rounded: np.ndarray
    user_ids: list = field(default_factory=list)
    n_arrived: int = 0
    pool: int = 0
    c_tot_frac: float = 0.0
    c_tot: float = 0.0
    augmentation_count: int = 0
    repair_count: int = 0
    doublings: int = 0
    decisions: list = field(default_factory=list)
    trace: Optional[list] = None
    thresholds: Optional[Callable] = None

    @property
    def w_init(self) -> float:
        return 1.0 / self.M**2

    @property
    def budget(self) -> float:
        return 2.0 * self.alpha * math.log2(self.M) + self.alpha + 1.0

    def _emit(self, **event):
        if self.trace is not None:
            self.trace.append(event)

    def _draw(self, codes: np.ndarray, j: int) -> np.ndarray:
        if self.thresholds is not None:
            return np.asarray(self.thresholds(codes, j), dtype=float)
        return hashed_uniforms(self.seed, codes, j)

    def _cols(self) -> slice:
        return slice(0, self.n_arrived)

    def _grow(self):
        cap = self.u_cost.shape[1]
        if self.n_arrived < cap:
            return
        extra = max(4, cap)

        def pad(a, fill):
            return np.concatenate([a, np.full((self.M, extra), fill, dtype=a.dtype)], axis=1)

        self.u_cost = pad(self.u_cost, np.inf)
        self.u_w = pad(self.u_w, 0.0)
        self.u_waug = pad(self.u_waug, 0.0)
        self.u_gamma = pad(self.u_gamma, np.inf)
        self.u_rounded = pad(self.u_rounded, False)

    # -- categories under the current alpha --

    def _classes(self, cost: np.ndarray):
        unit = self.alpha / self.M
        cheap = cost <= unit
        excluded = ~(cost <= self.alpha)  # also catches inf (absent edges)
        middle = ~cheap & ~excluded
        with np.errstate(divide="ignore", invalid="ignore"):
            c_norm = np.where(excluded, np.inf, cost / unit)
        return cheap, middle, excluded, c_norm

    def _frac_cost(self, s_w, u_w) -> float:
        """``sum_e w_e c'_e`` over edges not excluded at the current alpha."""
        _, _, s_ex, s_cn = self._classes(self.s_cost)
        cols = self._cols()
        _, _, u_ex, u_cn = self._classes(self.u_cost[:, cols])
        return float(np.where(s_ex, 0.0, s_w * s_cn).sum()
                     + np.where(u_ex, 0.0, u_w[:, cols] * u_cn).sum())

    def _rounded_cost(self) -> float:
        _, _, s_ex, s_cn = self._classes(self.s_cost)
        cols = self._cols()
        _, _, u_ex, u_cn = self._classes(self.u_cost[:, cols])
        return float(np.where(s_ex | ~self.s_rounded, 0.0, s_cn).sum()
                     + np.where(u_ex | ~self.u_rounded[:, cols], 0.0, u_cn).sum())

    def _apply_cheap(self):
        cheap, _, _, _ = self._classes(self.s_cost)
        # weights above 1 from earlier augmentations are kept, w never drops
        self.s_w[cheap] = np.maximum(self.s_w[cheap], 1.0)
        self.s_waug[cheap] = np.maximum(self.s_waug[cheap], 1.0)
        cols = self._cols()
        ucheap, _, _, _ = self._classes(self.u_cost[:, cols])
        uw, uwa = self.u_w[:, cols], self.u_waug[:, cols]
        uw[ucheap] = np.maximum(uw[ucheap], 1.0)
        uwa[ucheap] = np.maximum(uwa[ucheap], 1.0)

    def _double(self, reason: str):
        old = self.alpha
        self.alpha *= 2.0
        self.doublings += 1
        # forget working weights of the (new) middle edges
        _, s_mid, _, _ = self._classes(self.s_cost)
        self.s_waug[s_mid] = self.w_init
        cols = self._cols()
        _, u_mid, _, _ = self._classes(self.u_cost[:, cols])
        self.u_waug[:, cols][u_mid] = self.w_init
        self._emit(event="doubling", alpha_old=old, alpha_new=self.alpha, reason=reason,
                   c_tot_frac=self.c_tot_frac)

    def _extend_pools(self, new_col: int):
        k_new = pool_size(self.n_arrived)
        k_old = self.pool
        s_codes = np.array([edge_code(m) for m in range(self.M)], dtype=np.uint64)
        u_codes = np.array([[edge_code(m, self.user_ids[k]) for k in range(self.n_arrived)]
                            for m in range(self.M)], dtype=np.uint64)
        for j in range(k_old, k_new):
            self.s_gamma = np.minimum(self.s_gamma, self._draw(s_codes, j))
            old = u_codes[:, :new_col]
            if old.size:
                self.u_gamma[:, :new_col] = np.minimum(self.u_gamma[:, :new_col],
                                                       self._draw(old, j))
        # a new user's edges draw the whole pool at once
        g = np.full(self.M, np.inf)
        for j in range(k_new):
            g = np.minimum(g, self._draw(u_codes[:, new_col], j))
        self.u_gamma[:, new_col] = g
        self.pool = k_new


def init(inst: ProblemInstance, m_prime: Iterable[int] = (), seed: int = 0,
         trace: bool = False, thresholds: Optional[Callable] = None) -> OnlineState:
    """Flow graph over ``S`` and the APs; users join on arrival.

    ``m_prime`` are the APs already on for illumination.  ``thresholds``
    replaces the hashed uniform draws (``f(codes, j) -> array``) and exists
    for testing.
    """
    M = inst.n_aps
    if M == 0:
        raise ValueError("instance has no APs")
    m_prime = frozenset(int(m) for m in m_prime)
    s_cost = np.array([0.0 if m in m_prime else float(inst.p_on[m]) for m in range(M)])
    positive = [c for m, c in enumerate(s_cost) if m not in m_prime and c > 0]
    alpha = float(min(positive)) if positive else ALPHA_FALLBACK
    w0 = 1.0 / M**2
    st = OnlineState(
        M=M, p_on=inst.p_on.copy(), m_prime=m_prime, seed=int(seed), alpha=alpha,
        alpha_fallback=not positive,
        s_cost=s_cost, s_w=np.full(M, w0), s_waug=np.full(M, w0), s_gamma=np.full(M, np.inf),
        s_rounded=np.zeros(M, dtype=bool),
        u_cost=np.full((M, 0), np.inf), u_w=np.zeros((M, 0)), u_waug=np.zeros((M, 0)),
        u_gamma=np.full((M, 0), np.inf), u_rounded=np.zeros((M, 0), dtype=bool),
        trace=[] if trace else None, thresholds=thresholds,
    )
    st._emit(event="init", M=M, alpha=alpha, m_prime=sorted(m_prime), seed=int(seed),
             w_init=w0)
    return st


def arrive(st: OnlineState, user: int, costs, repair: bool = True) -> OnlineDecision:
    """Serve one arriving user whose additive costs per AP are ``costs``."""
    costs = np.asarray(costs, dtype=float)
    if costs.shape != (st.M,):
        raise ValueError(f"expected {st.M} costs, got shape {costs.shape}")
    if user in st.user_ids:
        raise ValueError(f"user {user} already arrived")
    if not np.isfinite(costs).any():
        raise UnservableUser(f"user {user} has no finite-cost AP")

    st._grow()
    col = st.n_arrived
    st.user_ids.append(user)
    st.n_arrived += 1
    st.u_cost[:, col] = costs
    st.u_w[:, col] = st.w_init
    st.u_waug[:, col] = st.w_init
    st.u_gamma[:, col] = 1.0
    st.u_rounded[:, col] = False
    on_before = st.s_rounded.copy()

    if st.alpha_fallback:
        pos = costs[np.isfinite(costs) & (costs > 0)]
        if pos.size:
            st.alpha = min(st.alpha, float(pos.min()))
            st.alpha_fallback = False

    st._emit(event="arrival", user=int(user), n_arrived=st.n_arrived, alpha=st.alpha)
    st._extend_pools(col)

    while True:  # START
        st._apply_cheap()
        s_cheap, s_mid, s_ex, s_cn = st._classes(st.s_cost)
        u_cheap, u_mid, u_ex, u_cn = st._classes(st.u_cost[:, col])

        doubled = False
        while True:
            s_cap = np.where(s_ex, 0.0, np.minimum(st.s_waug, 1.0))
            u_cap = np.where(u_ex, 0.0, np.minimum(st.u_waug[:, col], 1.0))
            value, s_cut, u_cut = layered_min_cut(s_cap, u_cap)
            if value >= 1.0:
                break
            s_aug = s_cut & s_mid
            u_aug = u_cut & u_mid
            if not (s_aug.any() or u_aug.any()):
                # the cut runs through excluded edges only: alpha is too small
                st._double("unreachable")
                doubled = True
                break
            before = float(np.where(s_aug, st.s_waug, 0.0).sum()
                           + np.where(u_aug, st.u_waug[:, col], 0.0).sum())
            if st.trace is not None:
                cut = ([[SOURCE, int(m), float(s_cn[m]), float(st.s_waug[m])]
                        for m in np.flatnonzero(s_aug)]
                       + [[int(m), int(user), float(u_cn[m]), float(st.u_waug[m, col])]
                          for m in np.flatnonzero(u_aug)])
                st._emit(event="augmentation", user=int(user), alpha=st.alpha,
                         cut=cut, cut_value=value, increase=before)
            st.s_waug[s_aug] *= 1.0 + 1.0 / s_cn[s_aug]
            st.u_waug[u_aug, col] *= 1.0 + 1.0 / u_cn[u_aug]
            st.augmentation_count += 1
            running = st._frac_cost(np.maximum(st.s_w, st.s_waug),
                                    np.maximum(st.u_w, st.u_waug))
            if running > st.budget:
                st.c_tot_frac = running
                st._double("budget-in-loop")
                doubled = True
                break
        if doubled:
            continue

        keep_s = ~s_ex
        st.s_w = np.where(keep_s, np.maximum(st.s_w, st.s_waug), st.s_w)
        cols = st._cols()
        _, _, all_ex, _ = st._classes(st.u_cost[:, cols])
        st.u_w[:, cols] = np.where(all_ex, st.u_w[:, cols],
                                   np.maximum(st.u_w[:, cols], st.u_waug[:, cols]))
        st.c_tot_frac = st._frac_cost(st.s_w, st.u_w)

        newly_s = keep_s & ~st.s_rounded & (st.s_w >= st.s_gamma)
        newly_u = ~all_ex & ~st.u_rounded[:, cols] & (st.u_w[:, cols] >= st.u_gamma[:, cols])
        st.s_rounded |= newly_s
        st.u_rounded[:, cols] |= newly_u
        st.c_tot = st._rounded_cost()
        if st.trace is not None and (newly_s.any() or newly_u.any()):
            st._emit(event="rounding", user=int(user),
                     edges=[[SOURCE, int(m)] for m in np.flatnonzero(newly_s)]
                     + [[int(m), int(st.user_ids[k])] for m, k in zip(*np.nonzero(newly_u))])
        if st.c_tot_frac > st.budget:
            st._double("budget")
            continue
        break

    served = st.s_rounded & st.u_rounded[:, col] & np.isfinite(costs)
    repaired = False
    if not served.any():
        if not repair:
            st._emit(event="unserved", user=int(user))
            dec = OnlineDecision(int(user), -1, frozenset(), False)
            st.decisions.append(dec)
            return dec
        m = repair_path(st, col, costs)
        repaired = True
        served = st.s_rounded & st.u_rounded[:, col] & np.isfinite(costs)
    ap = int(np.argmin(np.where(served, costs, np.inf)))
    newly_on = frozenset(int(m) for m in np.flatnonzero(st.s_rounded & ~on_before)
                         if m not in st.m_prime)
    dec = OnlineDecision(int(user), ap, newly_on, repaired)
    st._emit(event="decision", user=int(user), ap=ap, newly_on=sorted(newly_on),
             repaired=repaired, alpha=st.alpha)
    st.decisions.append(dec)
    return dec


def repair_path(st: OnlineState, col: int, costs: np.ndarray) -> int:
    """Round up the cheapest real-cost path to the user in column ``col``."""
    turn_on = np.where(st.s_rounded, 0.0, st.s_cost)
    total = turn_on + costs
    if not np.isfinite(total).any():
        raise UnservableUser(f"user {st.user_ids[col]} has no finite-cost path")
    m = int(np.argmin(total))
    st.s_rounded[m] = True
    st.s_w[m] = max(st.s_w[m], 1.0)
    st.u_rounded[m, col] = True
    st.u_w[m, col] = max(st.u_w[m, col], 1.0)
    st.repair_count += 1
    st._emit(event="repair", user=int(st.user_ids[col]), ap=m, cost=float(total[m]))
    return m


def repair_if_unserved(st: OnlineState, user: int) -> OnlineDecision:
    """Repair an arrived user left without a rounded path, if needed."""
    col = st.user_ids.index(user)
    costs = st.u_cost[:, col]
    on_before = st.s_rounded.copy()
    served = st.s_rounded & st.u_rounded[:, col] & np.isfinite(costs)
    repaired = False
    if not served.any():
        repair_path(st, col, costs)
        repaired = True
        served = st.s_rounded & st.u_rounded[:, col] & np.isfinite(costs)
    ap = int(np.argmin(np.where(served, costs, np.inf)))
    newly_on = frozenset(int(m) for m in np.flatnonzero(st.s_rounded & ~on_before)
                         if m not in st.m_prime)
    return OnlineDecision(int(user), ap, newly_on, repaired)


# -- runs and accounting ---------------------------------------------------------------

@dataclass
class OnlineResult:
    state: OnlineState
    decisions: list
    assoc: np.ndarray  # serving AP per instance user, -1 if unserved
    power: float  # W beyond the illumination set
    aps_on: frozenset
    unserved_before_repair: list

    @property
    def failed(self) -> bool:
        return bool(self.unserved_before_repair)


def real_power(st: OnlineState, assoc_costs: Iterable[float]) -> float:
    on = [m for m in np.flatnonzero(st.s_rounded) if m not in st.m_prime]
    return float(sum(st.p_on[m] for m in on) + sum(assoc_costs))


def run_online(inst: ProblemInstance, m_prime: Iterable[int] = (), seed: int = 0,
               order: Optional[ArrivalStream] = None, trace: bool = False,
               repair: bool = True, thresholds: Optional[Callable] = None) -> OnlineResult:
    order = order or ArrivalStream.in_order(inst.n_users)
    st = init(inst, m_prime, seed=seed, trace=trace, thresholds=thresholds)
    assoc = np.full(inst.n_users, -1)
    unserved = []
    for n in order:
        before = st.repair_count
        dec = arrive(st, n, inst.cost[:, n], repair=repair)
        if dec.ap < 0 or st.repair_count > before:
            unserved.append(int(n))
        assoc[n] = dec.ap
    served = assoc >= 0
    power = real_power(st, inst.cost[assoc[served], np.flatnonzero(served)])
    aps_on = frozenset(int(m) for m in np.flatnonzero(st.s_rounded))
    return OnlineResult(st, list(st.decisions), assoc, power, aps_on, unserved)


def online_assignment(inst: ProblemInstance, res: OnlineResult):
    """The run as an offline-style :class:`~hybridvlc.offline.Assignment`."""
    from .offline import make_assignment

    x = np.zeros(inst.n_aps, dtype=bool)
    x[list(res.aps_on | res.state.m_prime)] = True
    baseline = float(sum(inst.p_on[m] for m in res.state.m_prime))
    return make_assignment(inst, x, res.assoc, baseline=baseline, optimal=False,
                           label="online")


def write_trace(events: Iterable[dict], path) -> None:
    with open(path, "w") as fh:
        for ev in events:
            fh.write(json.dumps(ev, sort_keys=True) + "\n")


def read_trace(path) -> list[dict]:
    with open(path) as fh:
        return [json.loads(line) for line in fh if line.strip()]


# -- potential-function verifier ---------------------------------------------------------

@dataclass
class PotentialReport:
    n_augmentations: int
    final_alpha: Optional[float]
    count_bound: Optional[float]
    min_delta_beta: Optional[float]
    max_increase: Optional[float]
    violations: list
    # unit-free bound from the potential range, see verify_potential
    potential_bound: Optional[float] = None

    @property
    def ok(self) -> bool:
        return not self.violations

    @property
    def invariants_ok(self) -> bool:
        """Everything except the alpha-denominated count bound."""
        return all(v.startswith("count:") for v in self.violations)


def optimal_edges(asg, m_prime: Iterable[int] = ()) -> set:
    """Edges an offline assignment uses, as trace-style ids.

    Source edges of APs already lit are free and therefore omitted.
    """
    m_prime = set(m_prime)
    edges = {(SOURCE, int(m)) for m in np.flatnonzero(asg.x) if int(m) not in m_prime}
    for m, n in zip(*np.nonzero(asg.y)):
        edges.add((int(m), int(n)))
    return edges


def verify_potential(trace: list, optimal, m_prime: Iterable[int] = (),
                     tol: float = 1e-9) -> PotentialReport:
    """Check the competitive-analysis invariants on the final alpha epoch.

    ``optimal`` is an offline assignment (or a set of edge ids) giving the
    reference weights ``w* = 1`` on the edges it uses.
    """
    if isinstance(optimal, set):
        w_star = optimal
    else:
        w_star = optimal_edges(optimal, m_prime)
    M = next((ev["M"] for ev in trace if ev.get("event") == "init"), None)
    last_doubling = max((i for i, ev in enumerate(trace) if ev.get("event") == "doubling"),
                        default=-1)
    augs = [ev for ev in trace[last_doubling + 1:] if ev.get("event") == "augmentation"]
    final_alpha = None
    for ev in trace:
        if ev.get("event") == "init":
            final_alpha = ev["alpha"]
        elif ev.get("event") == "doubling":
            final_alpha = ev["alpha_new"]
        elif ev.get("event") == "arrival":
            final_alpha = ev["alpha"]
    violations = []
    if not augs:
        return PotentialReport(0, final_alpha, None, None, None, [])

    bound = 2.0 * final_alpha * math.log2(M) + final_alpha + 1.0
    min_db, max_inc = math.inf, -math.inf
    star_cnorm = {}
    for k, ev in enumerate(augs):
        db = 0.0
        for tail, head, c_norm, _w in ev["cut"]:
            if (tail, head) in w_star:
                db += c_norm * math.log2(1.0 + 1.0 / c_norm)
                star_cnorm[(tail, head)] = c_norm
        inc = ev["increase"]
        min_db = min(min_db, db)
        max_inc = max(max_inc, inc)
        if db < 1.0 - tol:
            violations.append(f"augmentation {k} (user {ev['user']}): delta beta {db:.6g} < 1")
        if inc > 1.0 + tol:
            violations.append(f"augmentation {k} (user {ev['user']}): increase {inc:.6g} > 1")
    # Each w* edge in a cut starts the epoch at w >= 1/M^2 and ends below
    # 1 + 1/c', so beta rises by at most c'(2 log M + log(1 + 1/c')) per edge.
    pot = sum(c * (2.0 * math.log2(M) + math.log2(1.0 + 1.0 / c)) for c in star_cnorm.values())
    if len(augs) > pot + tol:
        violations.append(f"potential: {len(augs)} augmentations exceed {pot:.6g}")
    if len(augs) > bound + tol:
        violations.append(f"count: {len(augs)} augmentations exceed bound {bound:.6g}")
    return PotentialReport(len(augs), final_alpha, bound, min_db, max_inc, violations, pot)
