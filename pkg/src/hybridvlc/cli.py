"""Command line front-end.

Exit codes: 0 success, 2 configuration error, 3 infeasible, 4 size-limit
refusal of an exact solve.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import harness
from .instance import InstanceError, build_instance, lower_bound_instance
from .offline import InfeasibleError, SizeLimitError, solve_p1, solve_p2, solve_p3
from .online import UnservableUser, write_trace
from .scenario import ConfigError, hourly_profile, resolve_scenario, rsun_at_hour

EXIT_OK, EXIT_CONFIG, EXIT_INFEASIBLE, EXIT_SIZE = 0, 2, 3, 4


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _names(text: str) -> list[str]:
    return [v.strip() for v in text.split(",") if v.strip()]


def _r_sun(args, scn, base_dir):
    if args.rsun is not None and args.hour is not None:
        raise ConfigError("give --rsun or --hour, not both")
    if args.rsun is not None:
        if args.rsun < 0:
            raise ConfigError("--rsun must be >= 0")
        return args.rsun
    if args.hour is not None:
        return rsun_at_hour(scn.solar_profile, args.hour, base_dir)
    return 0.0


def _emit(text: str, out):
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def cmd_solve(args) -> int:
    scn, base = resolve_scenario(args.scenario)
    inst = build_instance(scn, _r_sun(args, scn, base), args.seed)
    out = harness.run_scheme(inst, args.scheme, seed=args.seed, mode=args.solver,
                             trace=bool(args.trace))
    report = {"scheme": args.scheme, "power_watts": out.power,
              "illumination_watts": out.illumination_power, "aps_on": out.aps_on,
              "repairs": out.repairs, "optimal": bool(out.assignment.optimal)}
    if args.scheme == "hybrid" and out.assignment.optimal:
        # fixing the lights first (P2 then P3) versus the joint optimum
        m_prime, p2 = solve_p2(inst)
        composed = solve_p3(inst, m_prime)
        report["composed_power_watts"] = composed.total_power - p2
        report["joint_power_watts"] = solve_p1(inst).total_power - p2
    if args.trace and out.trace is not None:
        write_trace(out.trace, args.trace)
    _emit(json.dumps(report, indent=2) + "\n", args.out)
    return EXIT_OK


def cmd_sweep(args) -> int:
    scn, base = resolve_scenario(args.scenario)
    if args.rsun is not None and args.hour is not None:
        raise ConfigError("give --rsun or --hour, not both")
    try:
        spec = harness.SweepSpec(
            sweep_kind=args.sweep, values=tuple(args.values), schemes=tuple(args.scheme),
            eta_ac=tuple(args.eta_ac), runs=args.runs, base_seed=args.seed,
            solver_mode=args.solver, r_sun=args.rsun, hour=args.hour,
            include_illumination=args.include_illumination, timing=args.timing)
    except ValueError as err:
        raise ConfigError(str(err)) from None
    rows = harness.run_sweep(spec, scn, base)
    _emit(harness.rows_to_csv(rows), args.out)
    return EXIT_OK


def cmd_lowerbound(args) -> int:
    Ms = [int(v) for v in args.values]
    rows = harness.run_lower_bound(Ms, args.f, args.runs, args.seed)
    _emit(harness.lower_bound_csv(rows), args.out)
    return EXIT_OK


def cmd_verify(args) -> int:
    if args.scenario == "lowerbound":
        inst, order = lower_bound_instance(args.M)
        rep = harness.verify_run(inst, args.seed, m_prime=(), order=order)
    else:
        scn, base = resolve_scenario(args.scenario)
        inst = build_instance(scn, _r_sun(args, scn, base), args.seed)
        rep = harness.verify_run(inst, args.seed)
    _emit(json.dumps(rep.summary(), indent=2, default=float) + "\n", args.out)
    return EXIT_OK if rep.ok else 1


def cmd_validate(args) -> int:
    scn, base = resolve_scenario(args.scenario)
    hourly_profile(scn.solar_profile, base)  # also validates an external CSV
    print(f"ok: {len(scn.rooms)} rooms, {len(scn.wifi_aps.positions)} WiFi APs, "
          f"{scn.users.count} users")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="hybridvlc", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, scenario_default="office"):
        sp.add_argument("--scenario", default=scenario_default,
                        help="JSON scenario file or built-in name (office, desk)")
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--rsun", type=float, help="solar radiation in W/m^2")
        sp.add_argument("--hour", type=int, help="hour of day, looked up in the solar profile")
        sp.add_argument("--out", help="write output here instead of stdout")

    sp = sub.add_parser("solve", help="one instance, one scheme")
    common(sp)
    sp.add_argument("--scheme", default="hybrid", choices=harness.ALL_SCHEMES)
    sp.add_argument("--solver", default="auto", choices=("exact", "heuristic", "auto"))
    sp.add_argument("--trace", help="JSON-lines trace of an online run")
    sp.set_defaults(func=cmd_solve)

    sp = sub.add_parser("sweep", help="parameter sweep to CSV")
    common(sp)
    sp.add_argument("--sweep", required=True, choices=harness.SWEEP_KINDS)
    sp.add_argument("--values", required=True, type=_floats)
    sp.add_argument("--scheme", type=_names, default=["hybrid", "vlc", "wifi", "online"])
    sp.add_argument("--eta-ac", type=_floats, default=[0.09])
    sp.add_argument("--runs", type=int, default=1)
    sp.add_argument("--solver", default="auto", choices=("exact", "heuristic", "auto"))
    sp.add_argument("--include-illumination", action="store_true",
                    help="report absolute power including the lighting minimum")
    sp.add_argument("--timing", action="store_true",
                    help="record wall times (output is then no longer reproducible)")
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("lowerbound", help="online cost on the nested adversary")
    sp.add_argument("--values", type=_floats, default=[4, 16, 64], help="AP counts M")
    sp.add_argument("--runs", type=int, default=1000, help="trials per M")
    sp.add_argument("--f", type=float, default=1.0, help="turn-on power")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_lowerbound)

    sp = sub.add_parser("verify", help="online run checked against the exact optimum")
    common(sp, scenario_default="desk")
    sp.add_argument("--M", type=int, default=16, help="AP count for --scenario lowerbound")
    sp.set_defaults(func=cmd_verify)

    sp = sub.add_parser("validate-config", help="check a scenario file")
    sp.add_argument("--scenario", required=True)
    sp.set_defaults(func=cmd_validate)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, InstanceError) as err:
        print(f"config error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except (InfeasibleError, UnservableUser) as err:
        print(f"infeasible: {err}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except SizeLimitError as err:
        print(f"size limit: {err}", file=sys.stderr)
        return EXIT_SIZE


if __name__ == "__main__":
    sys.exit(main())
