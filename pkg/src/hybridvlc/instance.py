"""Problem instances: scenario -> cost/illumination matrices, plus the two
theory constructions (facility-location reduction, lower-bound adversary).

Conventions used throughout the package:

* APs are indexed ``m = 0..M-1``, users ``n = 0..N-1``, sample points
  ``w = 0..W-1``.
* ``cost[m, n]`` is the additive power of serving user ``n`` from AP ``m``;
  ``inf`` marks a link that cannot carry the user's rate.
* ``illum_coeff[m, w]`` is the lux AP ``m`` adds at point ``w`` when on
  (rows of RF APs are zero).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from . import linkmodel as lm
from . import photometry as ph
from .scenario import Scenario

VLC = "vlc"
RF = "rf"


class InstanceError(ValueError):
    pass


def _frozen(a, dtype=float):
    a = np.array(a, dtype=dtype, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class User:
    id: int
    position: tuple[float, float, float]
    rate: float
    room_id: Optional[str] = None


@dataclass(frozen=True)
class ProblemInstance:
    ap_ids: tuple[str, ...]
    ap_kind: tuple[str, ...]
    ap_room: tuple[Optional[str], ...]
    p_on: np.ndarray
    p_max: np.ndarray
    cost: np.ndarray  # (M, N)
    illum_coeff: np.ndarray  # (M, W)
    illum_req: np.ndarray  # (W,)
    users: tuple[User, ...] = ()
    point_room: tuple[Optional[str], ...] = ()
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        m = len(self.ap_ids)
        object.__setattr__(self, "p_on", _frozen(self.p_on))
        object.__setattr__(self, "p_max", _frozen(self.p_max))
        cost = np.array(self.cost, dtype=float).reshape(m, -1) if m else np.zeros((0, len(self.users)))
        object.__setattr__(self, "cost", _frozen(cost))
        ic = np.array(self.illum_coeff, dtype=float)
        if ic.size == 0:
            ic = np.zeros((m, len(self.illum_req)))
        object.__setattr__(self, "illum_coeff", _frozen(ic))
        object.__setattr__(self, "illum_req", _frozen(self.illum_req))
        if not self.point_room:
            object.__setattr__(self, "point_room", (None,) * len(self.illum_req))
        if not (len(self.ap_kind) == len(self.ap_room) == m == len(self.p_on) == len(self.p_max)):
            raise InstanceError("AP attribute lengths disagree")
        if self.cost.shape[0] != m:
            raise InstanceError(f"cost must have {m} rows")
        if self.users and self.cost.shape[1] != len(self.users):
            raise InstanceError("cost columns must match users")
        if self.illum_coeff.shape != (m, len(self.illum_req)):
            raise InstanceError("illum_coeff must be (M, W)")
        if np.isnan(self.cost).any() or (self.cost < 0).any():
            raise InstanceError("costs must be >= 0 (inf for infeasible links)")
        if (self.illum_coeff < 0).any() or (self.illum_req < 0).any():
            raise InstanceError("illumination data must be >= 0")
        if (self.p_on < 0).any() or (self.p_max < 0).any():
            raise InstanceError("powers must be >= 0")

    @property
    def n_aps(self) -> int:
        return len(self.ap_ids)

    @property
    def n_users(self) -> int:
        return self.cost.shape[1]

    @property
    def n_points(self) -> int:
        return len(self.illum_req)

    @property
    def vlc_mask(self) -> np.ndarray:
        return np.array([k == VLC for k in self.ap_kind], dtype=bool)

    @property
    def unservable_users(self) -> list[int]:
        return [int(n) for n in np.flatnonzero(~np.isfinite(self.cost).any(axis=0))]

    @property
    def feasible(self) -> bool:
        return not self.unservable_users

    def restricted(self, allowed: np.ndarray) -> "ProblemInstance":
        """Copy where only APs in ``allowed`` may serve users.

        Disallowed APs keep their illumination role.
        """
        allowed = np.asarray(allowed, dtype=bool)
        cost = np.where(allowed[:, None], self.cost, np.inf)
        return replace(self, cost=cost, meta=dict(self.meta))

    def without_capacities(self) -> "ProblemInstance":
        return replace(self, p_max=np.full(self.n_aps, np.inf), meta=dict(self.meta))

    def subset_users(self, users: Sequence[int]) -> "ProblemInstance":
        users = list(users)
        return replace(self, cost=self.cost[:, users],
                       users=tuple(self.users[n] for n in users) if self.users else (),
                       meta=dict(self.meta))


@dataclass(frozen=True)
class ArrivalStream:
    order: tuple[int, ...]

    def __post_init__(self):
        if sorted(self.order) != list(range(len(self.order))):
            raise InstanceError("arrival order must be a permutation of the users")

    def __iter__(self):
        return iter(self.order)

    def __len__(self):
        return len(self.order)

    @classmethod
    def in_order(cls, n: int) -> "ArrivalStream":
        return cls(tuple(range(n)))


# -- scenario geometry -----------------------------------------------------

@dataclass(frozen=True)
class Layout:
    """Scenario geometry resolved into physical objects."""
    luminaires: tuple[ph.Luminaire, ...]
    radios: tuple[lm.VlcApRadio, ...]
    wifi: tuple[lm.WifiAp, ...]
    points: tuple[ph.SamplePoint, ...]
    receiver: lm.VlcReceiver
    rooms: tuple  # RoomConfig


def _daylight_factor(room, pos, cfg) -> float:
    if room.kind == "internal":
        return 0.0
    if cfg.profile == "uniform":
        return cfg.external
    x, y = pos[0] - room.x, pos[1] - room.y
    dist, span = {
        "south": (y, room.depth),
        "north": (room.depth - y, room.depth),
        "west": (x, room.width),
        "east": (room.width - x, room.width),
    }[room.window]
    t = min(max(dist / span, 0.0), 1.0)
    return cfg.near_window + (cfg.far_wall - cfg.near_window) * t


def resolve_layout(scn: Scenario) -> Layout:
    fl, vc = scn.floor, scn.vlc_aps
    lums, radios, points = [], [], []
    for room in scn.rooms:
        centre = (room.x + room.width / 2, room.y + room.depth / 2)
        mount = (centre[0], centre[1], fl.height)
        if vc.per_room == 4:
            aims = [(room.x + fx * room.width, room.y + fy * room.depth, fl.desk_height)
                    for fy in (0.25, 0.75) for fx in (0.25, 0.75)]
        else:
            aims = [(centre[0], centre[1], fl.desk_height)]
        for ch, aim in enumerate(aims):
            lum = ph.Luminaire(position=mount, beam_axis=ph.aim_axis(mount, aim),
                               semi_angle_half_power=vc.semi_angle, efficacy_G=vc.efficacy,
                               p_on=vc.p_on, eta_dc=vc.eta_dc, room_id=room.id)
            lums.append(lum)
            radios.append(lm.VlcApRadio(lum, eta_ac=vc.eta_ac, bandwidth=vc.bandwidth,
                                        channel_id=ch))
        ill = scn.illumination
        for pos in ph.desk_grid(room.x, room.y, room.width, room.depth, fl.desk_height, ill.grid):
            points.append(ph.SamplePoint(position=pos, room_id=room.id,
                                         required_lux=ill.target_lux,
                                         daylight_factor=_daylight_factor(room, pos, ill.daylight)))
    wc = scn.wifi_aps
    wifi = tuple(lm.WifiAp(position=tuple(p), p_on=wc.p_on, p_max=wc.p_max,
                           bandwidth_per_user=wc.bandwidth_per_user,
                           carrier_wavelength=wc.wavelength,
                           floor_attenuation_db=wc.floor_attenuation_db,
                           noise_floor=lm.dbm_to_watts(wc.noise_dbm), eta_wifi=wc.eta)
                 for p in wc.positions)
    rx = lm.VlcReceiver(**scn.receiver.model_dump())
    return Layout(tuple(lums), tuple(radios), wifi, tuple(points), rx, tuple(scn.rooms))


def place_users(scn: Scenario, rng: np.random.Generator) -> list[User]:
    """Uniform over the union of room floor areas, at desk height."""
    rooms = scn.rooms
    areas = np.array([r.width * r.depth for r in rooms])
    users = []
    for n in range(scn.users.count):
        k = int(rng.choice(len(rooms), p=areas / areas.sum()))
        r = rooms[k]
        x = r.x + rng.random() * r.width
        y = r.y + rng.random() * r.depth
        users.append(User(n, (float(x), float(y), scn.floor.desk_height),
                          scn.users.rate_bps, r.id))
    return users


def link_costs(layout: Layout, users: Sequence[User]) -> np.ndarray:
    """``(M, N)`` additive-power matrix, VLC rows first then WiFi."""
    m_v = len(layout.radios)
    cost = np.full((m_v + len(layout.wifi), len(users)), np.inf)
    for n, u in enumerate(users):
        for m, radio in enumerate(layout.radios):
            if radio.luminaire.room_id != u.room_id:
                continue  # walls block light
            try:
                cost[m, n] = lm.vlc_additive_power(radio, layout.receiver, u.position, u.rate)
            except lm.InfeasibleLink:
                pass
        for k, ap in enumerate(layout.wifi):
            try:
                cost[m_v + k, n] = lm.wifi_additive_power(u.rate, ap, u.position)
            except lm.InfeasibleLink:
                pass
    return cost


def build_instance(scn: Scenario, r_sun: float, seed: int) -> ProblemInstance:
    """Deterministic in ``(scenario, r_sun, seed)``."""
    if r_sun < 0 or not math.isfinite(r_sun):
        raise InstanceError("r_sun must be finite and >= 0")
    layout = resolve_layout(scn)
    users = place_users(scn, np.random.default_rng(seed))
    m_v, m_w = len(layout.radios), len(layout.wifi)
    a_vlc = ph.illuminance_matrix(layout.luminaires, layout.points)
    coeff = np.vstack([a_vlc, np.zeros((m_w, len(layout.points)))])
    req = [ph.residual_requirement(p, r_sun) for p in layout.points]
    return ProblemInstance(
        ap_ids=tuple(f"vlc{m}" for m in range(m_v)) + tuple(f"wifi{k}" for k in range(m_w)),
        ap_kind=(VLC,) * m_v + (RF,) * m_w,
        ap_room=tuple(l.room_id for l in layout.luminaires) + (None,) * m_w,
        p_on=[r.p_on for r in layout.radios] + [w.p_on for w in layout.wifi],
        p_max=[r.p_max for r in layout.radios] + [w.p_max for w in layout.wifi],
        cost=link_costs(layout, users),
        illum_coeff=coeff,
        illum_req=req,
        users=tuple(users),
        point_room=tuple(p.room_id for p in layout.points),
        meta={"r_sun": r_sun, "seed": seed},
    )


# -- theory constructions ---------------------------------------------------

def from_facility_location(opening_costs, capacities, service_costs) -> ProblemInstance:
    """Capacitated facility location as a zero-illumination instance.

    ``service_costs[i, d]`` is the cost of serving client ``d`` from
    facility ``i``; capacities bound the summed service cost per facility.
    """
    q = np.asarray(opening_costs, dtype=float)
    c = np.asarray(capacities, dtype=float)
    r = np.asarray(service_costs, dtype=float)
    if r.ndim != 2 or q.ndim != 1 or c.shape != q.shape or r.shape[0] != q.shape[0]:
        raise InstanceError(
            f"dimension mismatch: opening {q.shape}, capacities {c.shape}, service {r.shape}")
    m, n = r.shape
    return ProblemInstance(
        ap_ids=tuple(f"f{i}" for i in range(m)),
        ap_kind=(RF,) * m,
        ap_room=(None,) * m,
        p_on=q, p_max=c, cost=r,
        illum_coeff=np.zeros((m, 0)), illum_req=np.zeros(0),
        users=tuple(User(d, (0.0, 0.0, 0.0), 1.0) for d in range(n)),
        meta={"source": "facility_location"},
    )


def lower_bound_instance(M: int, f: float = 1.0) -> tuple[ProblemInstance, ArrivalStream]:
    """Nested adversary: user ``n`` reaches only the first ``M / 2**n`` APs."""
    if M < 2 or M & (M - 1):
        raise InstanceError(f"M must be a power of two >= 2, got {M}")
    k = M.bit_length() - 1
    cost = np.full((M, k), np.inf)
    for n in range(k):
        cost[: M >> n, n] = 0.0
    inst = ProblemInstance(
        ap_ids=tuple(f"ap{m}" for m in range(M)),
        ap_kind=(RF,) * M,
        ap_room=(None,) * M,
        p_on=np.full(M, float(f)), p_max=np.full(M, np.inf), cost=cost,
        illum_coeff=np.zeros((M, 0)), illum_req=np.zeros(0),
        users=tuple(User(n, (0.0, 0.0, 0.0), 1.0) for n in range(k)),
        meta={"source": "lower_bound", "M": M, "f": f},
    )
    return inst, ArrivalStream.in_order(k)


# -- desk instances -----------------------------------------------------------

DESK_ETA_AC = (0.06, 0.07, 0.08, 0.09)
DESK_RATES = tuple(r * 1e6 for r in range(1, 11))
DESK_RSUN = (0.0, 110.0)


def random_desk_instance(seed: int, n_users: int = 8, n_rooms: int = 1,
                         n_wifi: int = 2) -> ProblemInstance:
    """Small randomized instance for exact-vs-online comparisons.

    The seed draws day or night, the AC efficiency, the per-user rate and
    the user positions.
    """
    from .scenario import desk_scenario

    rng = np.random.default_rng([seed, 0xDE5C])
    r_sun = DESK_RSUN[int(rng.integers(len(DESK_RSUN)))]
    eta_ac = DESK_ETA_AC[int(rng.integers(len(DESK_ETA_AC)))]
    rate = DESK_RATES[int(rng.integers(len(DESK_RATES)))]
    scn = desk_scenario(n_rooms=n_rooms, n_wifi=n_wifi, n_users=n_users,
                        rate_bps=rate, eta_ac=eta_ac)
    inst = build_instance(scn, r_sun, seed)
    inst.meta.update(eta_ac=eta_ac, rate_bps=rate, desk=True)
    return inst
