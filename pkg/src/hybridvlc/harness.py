"""Experiment harness: scheme runs, parameter sweeps, lower-bound trials and
verification runs, with deterministic CSV output.

Seeds
-----
Every row gets its own stream, ``mix_seed(base, scheme, eta_ac, value, i)``:
the first 8 bytes (little endian) of the BLAKE2b digest of the
``|``-joined decimal/repr fields.  User placement uses the same mix with the
scheme replaced by ``"instance"``, so all schemes of one
``(eta_ac, value, i)`` see the same users.
"""

from __future__ import annotations

import csv
import hashlib
import io
import math
import time
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import offline
from .instance import ProblemInstance, build_instance, lower_bound_instance
from .offline import (Assignment, InfeasibleError, Scheme, SolveLimits, check_assignment,
                      scheme_mask, solve_p2, solve_p3, solve_scheme)
from .online import UnservableUser, online_assignment, run_online, verify_potential
from .scenario import Scenario, rsun_at_hour

SWEEP_KINDS = ("throughput", "num_users", "hour")
OFFLINE_SCHEMES = ("hybrid", "vlc", "wifi")
ONLINE_SCHEMES = {"online": Scheme.HYBRID, "online_vlc": Scheme.VLC_ONLY,
                  "online_wifi": Scheme.WIFI_ONLY}
ALL_SCHEMES = OFFLINE_SCHEMES + tuple(ONLINE_SCHEMES)
COLUMNS = ("scheme", "eta_ac", "sweep_value", "run_index", "seed", "power_watts",
           "aps_on_vlc", "aps_on_wifi", "feasible", "repairs", "wall_time_ms", "error")


def mix_seed(*fields) -> int:
    text = "|".join(repr(float(f)) if isinstance(f, float) else str(f) for f in fields)
    return int.from_bytes(hashlib.blake2b(text.encode(), digest_size=8).digest(), "little")


@dataclass(frozen=True)
class SweepSpec:
    sweep_kind: str
    values: tuple
    schemes: tuple = ("hybrid", "vlc", "wifi", "online")
    eta_ac: tuple = (0.09,)
    runs: int = 1
    base_seed: int = 0
    solver_mode: str = "auto"
    r_sun: Optional[float] = None  # fixed radiation for non-hour sweeps
    hour: Optional[int] = None
    include_illumination: bool = False
    timing: bool = False  # wall times break byte-identical output
    limits: SolveLimits = SolveLimits()

    def __post_init__(self):
        if self.sweep_kind not in SWEEP_KINDS:
            raise ValueError(f"sweep_kind must be one of {SWEEP_KINDS}")
        if not self.values:
            raise ValueError("values must be non-empty")
        if self.runs < 1:
            raise ValueError("runs must be >= 1")
        bad = [s for s in self.schemes if s not in ALL_SCHEMES]
        if bad or not self.schemes:
            raise ValueError(f"unknown schemes {bad}; choose from {ALL_SCHEMES}")
        if self.solver_mode not in ("exact", "heuristic", "auto"):
            raise ValueError(f"unknown solver mode {self.solver_mode!r}")
        if not self.eta_ac:
            raise ValueError("eta_ac must be non-empty")


@dataclass
class SweepResult:
    scheme: str
    eta_ac: float
    sweep_value: float
    run_index: int
    seed: int
    power_watts: float
    aps_on_vlc: int
    aps_on_wifi: int
    feasible: bool
    repairs: int
    wall_time_ms: float
    error: str = ""


# -- single runs ---------------------------------------------------------------------

@dataclass
class SchemeOutcome:
    scheme: str
    power: float  # beyond the illumination minimum
    illumination_power: float
    aps_on: list
    repairs: int = 0
    assignment: Optional[Assignment] = None
    trace: Optional[list] = None


def run_scheme(inst: ProblemInstance, scheme: str, *, seed: int = 0, mode: str = "auto",
               limits: SolveLimits = SolveLimits(), trace: bool = False) -> SchemeOutcome:
    """Power of one scheme on one instance (offline or online)."""
    if scheme in OFFLINE_SCHEMES:
        asg = solve_scheme(inst, scheme, mode=mode, limits=limits)
        return SchemeOutcome(scheme, asg.extra_power, asg.baseline_power, asg.aps_on,
                             assignment=asg)
    if scheme not in ONLINE_SCHEMES:
        raise ValueError(f"unknown scheme {scheme!r}")
    sub = inst.restricted(scheme_mask(inst, ONLINE_SCHEMES[scheme]))
    if not sub.feasible:
        raise InfeasibleError(f"scheme {scheme}: user {sub.unservable_users[0]} has no usable AP")
    m_prime, p2 = solve_p2(inst)
    res = run_online(sub, m_prime, seed=seed, trace=trace)
    asg = online_assignment(sub, res)
    return SchemeOutcome(scheme, res.power, p2, asg.aps_on, res.state.repair_count,
                         assignment=asg, trace=res.state.trace)


def _sweep_instance(scn: Scenario, spec: SweepSpec, eta: float, value, run: int,
                    base_dir=None) -> ProblemInstance:
    patch = {"vlc_aps": {"eta_ac": eta}}
    r_sun = spec.r_sun
    if spec.sweep_kind == "throughput":
        patch["users"] = {"rate_bps": float(value) * 1e6}
    elif spec.sweep_kind == "num_users":
        if float(value) != int(value) or int(value) < 0:
            raise ValueError(f"user count must be a non-negative integer, got {value}")
        patch["users"] = {"count": int(value)}
    else:
        r_sun = rsun_at_hour(scn.solar_profile, int(value), base_dir)
    if r_sun is None:
        r_sun = rsun_at_hour(scn.solar_profile, spec.hour, base_dir) if spec.hour is not None else 0.0
    seed = mix_seed(spec.base_seed, "instance", float(eta), value, run)
    return build_instance(scn.with_updates(**patch), r_sun, seed)


def run_sweep(spec: SweepSpec, scn: Scenario, base_dir=None) -> list[SweepResult]:
    """One row per (scheme, eta_ac, value, run), sorted in that order.

    Infeasible rows carry ``feasible=False`` and an error tag; size-limit
    refusals propagate.
    """
    rows = []
    for eta in spec.eta_ac:
        for value in spec.values:
            for run in range(spec.runs):
                inst = _sweep_instance(scn, spec, float(eta), value, run, base_dir)
                for scheme in spec.schemes:
                    seed = mix_seed(spec.base_seed, scheme, float(eta), value, run)
                    t0 = time.perf_counter()
                    try:
                        out = run_scheme(inst, scheme, seed=seed, mode=spec.solver_mode,
                                         limits=spec.limits)
                    except (InfeasibleError, UnservableUser) as err:
                        rows.append(SweepResult(scheme, float(eta), float(value), run, seed,
                                                math.nan, 0, 0, False, 0, 0.0,
                                                f"infeasible: {err}"))
                        continue
                    ms = (time.perf_counter() - t0) * 1e3 if spec.timing else 0.0
                    power = out.power + (out.illumination_power if spec.include_illumination else 0.0)
                    vlc = inst.vlc_mask
                    on = np.zeros(inst.n_aps, dtype=bool)
                    on[out.aps_on] = True
                    rows.append(SweepResult(scheme, float(eta), float(value), run, seed, power,
                                            int((on & vlc).sum()), int((on & ~vlc).sum()),
                                            True, out.repairs, ms))
    order = {s: k for k, s in enumerate(ALL_SCHEMES)}
    rows.sort(key=lambda r: (order[r.scheme], r.eta_ac, r.sweep_value, r.run_index))
    return rows


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return "nan" if math.isnan(v) else repr(v)
    return str(v)


def rows_to_csv(rows: Sequence[SweepResult]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(COLUMNS)
    for r in rows:
        d = asdict(r)
        w.writerow([_fmt(d[c]) for c in COLUMNS])
    return buf.getvalue()


# -- lower bound -----------------------------------------------------------------------

@dataclass
class LowerBoundRow:
    M: int
    offline: float
    mean_online: float
    ratio: float
    stderr: float
    trials: int


def run_lower_bound(M_list: Sequence[int], f: float = 1.0, trials: int = 1000,
                    base_seed: int = 0) -> list[LowerBoundRow]:
    """Online cost on the nested adversary against the exact offline optimum."""
    out = []
    for M in M_list:
        inst, order = lower_bound_instance(int(M), f)
        opt = solve_p3(inst, limits=SolveLimits(max_exact_aps=max(20, int(M)))).total_power
        costs = np.array([run_online(inst, (), seed=mix_seed(base_seed, "lowerbound", M, t),
                                     order=order).power for t in range(trials)])
        se = float(costs.std(ddof=1) / math.sqrt(trials)) if trials > 1 else 0.0
        mean = float(costs.mean())
        out.append(LowerBoundRow(int(M), opt, mean, mean / opt, se, trials))
    return out


def lower_bound_csv(rows: Sequence[LowerBoundRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    cols = ("M", "offline", "mean_online", "ratio", "stderr", "trials")
    w.writerow(cols)
    for r in rows:
        d = asdict(r)
        w.writerow([_fmt(d[c]) for c in cols])
    return buf.getvalue()


# -- verification ----------------------------------------------------------------------

@dataclass
class VerifyReport:
    n_users: int
    online_power: float
    exact_power: float
    ratio: float
    repairs: int
    failed_before_repair: list
    feasibility_violations: list
    potential: object
    notes: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return not self.feasibility_violations and self.potential.ok

    def summary(self) -> dict:
        p = self.potential
        return {
            "ok": self.ok, "n_users": self.n_users, "online_power": self.online_power,
            "exact_power": self.exact_power, "ratio": self.ratio, "repairs": self.repairs,
            "failed_before_repair": self.failed_before_repair,
            "feasibility_violations": self.feasibility_violations,
            "augmentations_final_epoch": p.n_augmentations,
            "final_alpha": p.final_alpha, "count_bound": p.count_bound, "potential_bound": p.potential_bound,
            "min_delta_beta": p.min_delta_beta, "max_increase": p.max_increase,
            "potential_violations": p.violations,
        }


def verify_run(inst: ProblemInstance, seed: int = 0, m_prime=None,
               limits: SolveLimits = SolveLimits(), order=None) -> VerifyReport:
    """Online run checked against the exact optimum of the same problem.

    The online problem keeps ``m_prime`` lit at no charge and has no
    ``P_max``, so the reference is P3 without capacities.
    """
    if m_prime is None:
        m_prime = solve_p2(inst)[0] if inst.n_points else frozenset()
    m_prime = frozenset(m_prime)
    if inst.n_users == 0:
        from .online import PotentialReport
        return VerifyReport(0, 0.0, 0.0, 1.0, 0, [], [],
                            PotentialReport(0, None, None, None, None, []))
    relaxed = inst.without_capacities()
    opt = solve_p3(relaxed, m_prime, limits)
    res = run_online(inst, m_prime, seed=seed, trace=True, order=order)
    asg = online_assignment(inst, res)
    viol = check_assignment(relaxed, asg, m_prime, capacities=False)
    pot = verify_potential(res.state.trace, opt, m_prime)
    exact = opt.extra_power
    ratio = res.power / exact if exact > offline.TOL else (1.0 if res.power <= offline.TOL else math.inf)
    return VerifyReport(inst.n_users, res.power, exact, ratio, res.state.repair_count,
                        res.unserved_before_repair, viol, pot)
