import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hybridvlc import offline as off
from hybridvlc.instance import RF, VLC, ProblemInstance, build_instance, random_desk_instance
from hybridvlc.scenario import desk_scenario, office_scenario
from oracles import brute_force, brute_p2, random_instance


def tiny(p_on, p_max, cost, kinds=None, coeff=None, req=()):
    M = len(p_on)
    return ProblemInstance(
        ap_ids=tuple(f"a{m}" for m in range(M)), ap_kind=kinds or (RF,) * M,
        ap_room=(None,) * M, p_on=p_on, p_max=p_max, cost=cost,
        illum_coeff=coeff if coeff is not None else np.zeros((M, len(req))), illum_req=req)


# -- P2 ----------------------------------------------------------------------

def test_p2_no_requirement():
    inst = tiny([5.0, 5.0], [9.0, 9.0], [[1.0], [1.0]], kinds=(VLC, VLC),
                coeff=np.array([[100.0], [100.0]]), req=[0.0])
    assert off.solve_p2(inst) == (frozenset(), 0.0)


def test_p2_forced_singleton():
    inst = tiny([5.0, 5.0, 5.0], [9.0] * 3, np.ones((3, 1)), kinds=(VLC,) * 3,
                coeff=np.array([[40.0], [300.0], [40.0]]), req=[250.0])
    assert off.solve_p2(inst) == (frozenset({1}), 5.0)


def test_p2_infeasible_names_point():
    inst = tiny([5.0, 5.0], [9.0, 9.0], np.ones((2, 1)), kinds=(VLC, VLC),
                coeff=np.array([[10.0, 100.0], [10.0, 100.0]]), req=[50.0, 10.0])
    with pytest.raises(off.InfeasibleError, match="sample point 0"):
        off.solve_p2(inst)


def test_p2_office_night_matches_per_room_enumeration():
    inst = build_instance(office_scenario(), 0.0, 0)
    m_prime, power = off.solve_p2(inst)
    rooms = sorted({r for r in inst.ap_room if r is not None})
    total = 0.0
    for room in rooms:
        aps = [m for m, r in enumerate(inst.ap_room) if r == room]
        pts = [w for w, r in enumerate(inst.point_room) if r == room]
        sub = tiny(inst.p_on[aps], inst.p_max[aps], np.zeros((len(aps), 0)), kinds=(VLC,) * len(aps),
                   coeff=inst.illum_coeff[np.ix_(aps, pts)], req=inst.illum_req[pts])
        total += brute_p2(sub)
    assert power == pytest.approx(total, abs=1e-9)
    # every luminaire of the floor is needed at night
    assert len(m_prime) == 80


def test_p2_decomposition_equals_monolithic():
    for n_rooms, r_sun in [(1, 0.0), (3, 0.0), (4, 110.0)]:
        scn = desk_scenario(n_rooms=n_rooms, n_wifi=1)
        scn = scn.with_updates(illumination={"daylight": {"profile": "linear"}})
        inst = build_instance(scn, r_sun, 1)
        assert off.solve_p2(inst)[1] == pytest.approx(brute_p2(inst), abs=1e-9)


# -- P3 / P1 exactness ---------------------------------------------------------------

def test_p3_single_ap_two_users():
    inst = tiny([8.0], [10.0], [[0.5, 1.5]])
    asg = off.solve_p3(inst)
    assert asg.total_power == pytest.approx(10.0)
    assert asg.extra_power == pytest.approx(10.0)


def test_p3_forced_cover_costs_nothing_extra():
    inst = tiny([8.0, 3.0], [10.0, 10.0], [[0.0, 0.0], [1.0, 1.0]])
    asg = off.solve_p3(inst, forced_on={0})
    assert asg.extra_power == 0.0 and asg.aps_on == [0]


@pytest.mark.parametrize("seed", range(100))
def test_p3_matches_brute_force(seed):
    rng = np.random.default_rng(seed)
    M, N = int(rng.integers(1, 7)), int(rng.integers(1, 9))
    inst = random_instance(rng, M, N, cap_scale=6.0)
    forced = {m for m in range(M) if rng.random() < 0.3}
    want, _ = brute_force(inst, forced, free_forced=True, illumination=False)
    if not np.isfinite(want):
        with pytest.raises(off.InfeasibleError):
            off.solve_p3(inst, forced)
        return
    asg = off.solve_p3(inst, forced)
    got = asg.total_power - asg.baseline_power
    assert got == pytest.approx(want, abs=1e-9)
    assert off.check_assignment(inst, asg, forced, illumination=False) == []


def test_p1_uses_no_vlc_when_wifi_is_cheaper():
    cost = np.array([[2.0, 2.0], [2.0, 2.0], [0.1, 0.1]])
    inst = tiny([5.0, 5.0, 1.0], [np.inf] * 3, cost, kinds=(VLC, VLC, RF),
                coeff=np.array([[100.0], [100.0], [0.0]]), req=[0.0])
    asg = off.solve_p1(inst)
    assert asg.aps_on == [2]


def test_p1_bounded_by_composition_at_night():
    for seed in range(5):
        scn = desk_scenario(n_rooms=2, n_wifi=2, n_users=10)
        inst = build_instance(scn, 0.0, seed)
        m_prime, p2 = off.solve_p2(inst)
        composed = off.solve_p3(inst, m_prime)
        joint = off.solve_p1(inst)
        assert joint.total_power <= composed.total_power + 1e-9
        # M' is every luminaire at night, so the joint optimum cannot do better
        assert joint.total_power == pytest.approx(composed.total_power, abs=1e-9)


def test_tie_break_prefers_lowest_index():
    inst = tiny([5.0, 5.0], [np.inf, np.inf], [[1.0], [1.0]])
    assert off.solve_p1(inst).aps_on == [0]
    inst = tiny([2.0, 2.0, 4.0], [np.inf] * 3, [[1.0, np.inf], [np.inf, 1.0], [1.0, 1.0]])
    # {0, 1} and {2} both cost 6; the single AP wins
    assert off.solve_p1(inst).aps_on == [2]


def test_solvers_are_deterministic():
    inst = random_desk_instance(11)
    a = off.solve_scheme(inst, "hybrid")
    b = off.solve_scheme(inst, "hybrid")
    assert np.array_equal(a.x, b.x) and np.array_equal(a.y, b.y)


def test_size_limit_refusal():
    inst = build_instance(office_scenario(), 0.0, 0)
    with pytest.raises(off.SizeLimitError):
        off.solve_p1(inst)
    with pytest.raises(off.SizeLimitError):
        off.solve_scheme(inst, "hybrid", mode="exact")
    with pytest.raises(ValueError):
        off.SolveLimits(max_exact_aps=0)


def test_unservable_user_is_infeasible():
    inst = tiny([1.0, 1.0], [np.inf] * 2, [[1.0, np.inf], [1.0, np.inf]])
    with pytest.raises(off.InfeasibleError, match="user 1"):
        off.solve_p3(inst)


# -- schemes and heuristic -------------------------------------------------------------

@pytest.mark.parametrize("seed", range(20))
def test_scheme_dominance_and_checker(seed):
    inst = random_desk_instance(seed)
    res = {s: off.solve_scheme(inst, s) for s in ("hybrid", "vlc", "wifi")}
    for s, asg in res.items():
        assert off.check_assignment(inst, asg) == []
    assert res["hybrid"].extra_power <= min(res["vlc"].extra_power, res["wifi"].extra_power) + 1e-9


def test_vlc_beats_wifi_at_night_on_desk():
    for seed in range(10):
        inst = build_instance(desk_scenario(n_users=8), 0.0, seed)
        vlc = off.solve_scheme(inst, "vlc")
        wifi = off.solve_scheme(inst, "wifi")
        assert vlc.extra_power <= wifi.extra_power


def test_wifi_only_infeasible_when_user_only_sees_vlc():
    cost = np.array([[1.0, 1.0], [np.inf, 1.0]])
    inst = tiny([5.0, 5.0], [np.inf, np.inf], cost, kinds=(VLC, RF),
                coeff=np.zeros((2, 0)), req=np.zeros(0))
    with pytest.raises(off.InfeasibleError, match="scheme wifi: user 0"):
        off.solve_scheme(inst, "wifi")


def test_heuristic_single_ap_is_exact():
    inst = tiny([8.0], [10.0], [[0.5, 1.5, 2.0]])
    assert off.greedy_heuristic(inst).total_power == off.solve_p1(inst).total_power
    assert not off.greedy_heuristic(inst).optimal


def test_heuristic_ratio_on_desk_instances():
    ratios = []
    for seed in range(100):
        inst = random_desk_instance(seed)
        exact = off.solve_scheme(inst, "hybrid", mode="exact")
        heur = off.solve_scheme(inst, "hybrid", mode="heuristic")
        assert heur.total_power >= exact.total_power - 1e-9
        assert off.check_assignment(inst, heur) == []
        ratios.append(heur.extra_power / exact.extra_power)
    print(f"mean heuristic/exact ratio over 100 desk instances: {np.mean(ratios):.4f}")
    assert np.mean(ratios) <= 2.0


@settings(max_examples=40)
@given(st.integers(0, 2**32 - 1), st.integers(1, 5), st.integers(0, 6), st.integers(0, 3))
def test_every_solution_passes_the_checker(seed, M, N, W):
    rng = np.random.default_rng(seed)
    inst = random_instance(rng, M, N, W, cap_scale=5.0)
    try:
        asg = off.solve_p1(inst)
    except off.InfeasibleError:
        want, _ = brute_force(inst)
        assert not np.isfinite(want)
        return
    assert off.check_assignment(inst, asg) == []
    heur = None
    try:
        heur = off.greedy_heuristic(inst)
    except off.InfeasibleError:
        pass
    if heur is not None:
        assert off.check_assignment(inst, heur) == []
        assert heur.total_power >= asg.total_power - 1e-9


def test_checker_catches_violations():
    inst = tiny([1.0, 1.0], [1.0, 1.0], [[0.8, 0.8], [np.inf, 0.1]])
    bad = off.make_assignment(inst, [True, False], [0, 0])
    msgs = off.check_assignment(inst, bad)
    assert any("exceeds P_max" in m for m in msgs)
    bad = off.make_assignment(inst, [True, False], [0, 1])
    assert any("which is off" in m for m in off.check_assignment(inst, bad))
