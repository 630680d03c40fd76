"""gasket-lab command line.

Exit codes: 0 success, 1 gate failure, 2 usage error, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import os
import sys

from . import reports
from .errors import GasketLabError, GuardExceeded, NumericalFailure, SpecError
from .geometry import Family, GasketSpec

EXIT_OK, EXIT_GATE, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2, 3

KERNEL_COLUMNS = ["t", "steps", "probe", "center", "radius", "mass", "density", "stderr",
                  "gasket_density"]
VICSEK_COLUMNS = ["family", "l", "N", "params", "rho", "residual", "iterations"]


class UsageError(GasketLabError):
    pass


def side_range(text: str) -> list[int]:
    try:
        if ".." in text:
            a, b = (int(x) for x in text.split(".."))
        else:
            a = b = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected A..B, got {text!r}") from None
    return list(range(a, b + 1))


def t_list(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated times, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--dim", type=int, default=2, help="ambient dimension d (default 2)")
    common.add_argument("--side", type=int, default=None, help="side l")
    common.add_argument("--side-range", type=side_range, default=None, metavar="A..B",
                        help="inclusive range of sides")
    common.add_argument("--level", type=int, default=1, help="approximation level m (default 1)")
    common.add_argument("--family", choices=["sg", "vs2d", "vs3d"], default="sg")
    common.add_argument("--t", type=t_list, default=[0.5], help="comma-separated times (default 0.5)")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--samples", type=int, default=10**5)
    common.add_argument("--mode", choices=["exact", "mc"], default="exact")
    common.add_argument("--probes", default=None, help="probe set JSON file (default k=4 grid)")
    common.add_argument("--out", default=None, help="output path (default stdout)")
    common.add_argument("--format", choices=["csv", "json"], default=None)
    common.add_argument("--cache", default=None, help="rho cache file; GASKET_LAB_CACHE overrides")
    common.add_argument("--threads", type=int, default=os.cpu_count() or 1,
                        help="worker threads (default: machine parallelism)")
    common.add_argument("--workers", type=int, default=8,
                        help="random streams for Monte Carlo; with --seed fixes the output")

    p = argparse.ArgumentParser(prog="gasket-lab", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("exponents", parents=[common], help="exponent table over a range of sides")
    r = sub.add_parser("resistance", parents=[common], help="rho by two routes, or the diameter")
    r.add_argument("--diameter", action="store_true", help="resistance diameter and uniform bound")
    sub.add_parser("simulate", parents=[common], help="crossing-time concentration (Monte Carlo)")
    sub.add_parser("kernel", parents=[common], help="probe densities of the heat kernel")
    sub.add_parser("vicsek", parents=[common], help="Vicsek renormalization fixed points")
    v = sub.add_parser("verify", parents=[common], help="run a named check suite")
    v.add_argument("suite", help="identities|decimation|cube|vicsek|kernels|exponents")
    return p


def _sides(args) -> list[int]:
    if args.side_range is not None:
        sides = args.side_range
    elif args.side is not None:
        sides = [args.side]
    else:
        raise UsageError("give --side or --side-range")
    if args.side_range is not None and args.family != "sg":
        # Vicsek sides are odd; a range steps over the even ones
        sides = [l for l in sides if l % 2 == 1]
    if not sides:
        raise UsageError("empty side range")
    return sides


def _cache(args):
    from .renormalization import RhoCache
    return RhoCache.from_env(args.cache)


def _emit(args, text: str):
    if args.out is None:
        sys.stdout.write(text)
    else:
        reports.write_text(args.out, text)


def _spec(args, side):
    fam = Family(args.family)
    dim = {Family.VS2D: 2, Family.VS3D: 3}.get(fam, args.dim)
    return GasketSpec(fam, dim, side, args.level)


def cmd_exponents(args) -> int:
    from .renormalization import exponents
    sides = _sides(args)
    fam = Family(args.family)
    cache = _cache(args)
    fmt = args.format or "csv"
    columns = reports.EXPONENT_COLUMNS + ["diagnostic", "status"]
    rows, failed = [], False
    out = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        if fmt == "csv":
            out.write(reports.to_csv([], columns))
        for l in sides:
            try:
                row = reports.exponent_row(exponents(args.dim, l, fam, cache=cache))
            except NumericalFailure as exc:
                row, failed = {"d": args.dim, "l": l, "family": fam.value, "status": f"error: {exc}"}, True
            rows.append(row)
            if fmt == "csv":
                # stream rows as they finish
                out.write(reports.to_csv([row], columns).split("\r\n", 1)[1])
                out.flush()
        if fmt == "json":
            out.write(reports.to_json({"command": "exponents", "rows": rows}))
    finally:
        if args.out:
            out.close()
    return EXIT_NUMERIC if failed else EXIT_OK


def cmd_resistance(args) -> int:
    from .renormalization import resistance_diameter, rho_by_resistance, rho_by_trace
    rows = []
    for l in _sides(args):
        spec = _spec(args, l)
        if spec.family is not Family.SG:
            raise UsageError("resistance supports --family sg")
        if args.diameter:
            rep = resistance_diameter(spec)
            rows.append({"spec": spec.as_dict(), "exact_at_level": rep.exact_at_level,
                         "upper_bound": rep.upper_bound, "sup_level_one": rep.sup_level_one})
        else:
            a, b = rho_by_resistance(spec.dimension, l), rho_by_trace(spec.dimension, l)
            rows.append({"spec": spec.as_dict(), "rho_resistance": a, "rho_trace": b,
                         "relative_gap": abs(a - b) / a})
    if (args.format or "json") == "csv":
        flat = [dict(r["spec"], **{k: v for k, v in r.items() if k != "spec"}) for r in rows]
        _emit(args, reports.to_csv(flat, list(flat[0])))
    else:
        _emit(args, reports.to_json({"command": "resistance", "rows": rows}))
    return EXIT_OK


def cmd_simulate(args) -> int:
    from .sampling import t1_concentration
    rows, ok = [], True
    for l in _sides(args):
        spec = _spec(args, l)
        if spec.family is not Family.SG:
            raise UsageError("simulate supports --family sg")
        for t in args.t:
            rep = t1_concentration(spec.dimension, l, spec.level, t, args.samples, args.seed)
            gate = rep.first_crossing_gate()
            ok = ok and gate["pass"]
            rows.append(dict(rep.as_dict(), first_crossing=gate))
    _emit(args, reports.to_json({"command": "simulate", "rows": rows}))
    return EXIT_OK if ok else EXIT_GATE


def _probes(args, d):
    from .kernels import ProbeSet
    if args.probes is None:
        return ProbeSet.grid(d)
    with open(args.probes) as fh:
        return ProbeSet.from_json(fh.read())


def cmd_kernel(args) -> int:
    from .kernels import kernel_estimate
    rows, docs = [], []
    for l in _sides(args):
        spec = _spec(args, l)
        probes = _probes(args, spec.dimension)
        for t in args.t:
            est = kernel_estimate(spec, t, probes, mode=args.mode, samples=args.samples,
                                  seed=args.seed, workers=args.workers, threads=args.threads)
            docs.append(est.as_dict())
            for i, c in enumerate(probes.centers):
                rows.append({"t": t, "steps": est.steps, "probe": i,
                             "center": " ".join(reports.fmt(x) for x in c), "radius": probes.radius,
                             "mass": est.mass[i], "density": est.density[i], "stderr": est.stderr[i],
                             "gasket_density": est.gasket_density[i]})
    if (args.format or "csv") == "csv":
        _emit(args, reports.to_csv(rows, KERNEL_COLUMNS))
    else:
        _emit(args, reports.to_json({"command": "kernel", "estimates": docs}))
    return EXIT_OK


def cmd_vicsek(args) -> int:
    from .geometry import count_vicsek_cells
    from .vicsek import vicsek_fixed_point
    fam = Family(args.family)
    if fam is Family.SG:
        raise UsageError("vicsek needs --family vs2d or vs3d")
    cache = _cache(args)
    rows = []
    for l in _sides(args):
        fp = vicsek_fixed_point(fam, l)
        if cache is not None:
            cache.put(fam, 2 if fam is Family.VS2D else 3, l, fp.rho, fp.residual, "fixed-point")
        rows.append({"family": fam.value, "l": l, "N": count_vicsek_cells(2 if fam is Family.VS2D else 3, l),
                     "params": " ".join(reports.fmt(x) for x in fp.params), "rho": fp.rho,
                     "residual": fp.residual, "iterations": fp.iterations})
    if (args.format or "csv") == "csv":
        _emit(args, reports.to_csv(rows, VICSEK_COLUMNS))
    else:
        _emit(args, reports.to_json({"command": "vicsek", "rows": rows}))
    return EXIT_OK


def cmd_verify(args) -> int:
    from .verify import SUITES, all_pass
    if args.suite not in SUITES:
        raise UsageError(f"unknown suite {args.suite!r}; choose from {', '.join(SUITES)}")
    gates = SUITES[args.suite]()
    _emit(args, reports.to_json({"command": "verify", "suite": args.suite, "gates": gates,
                                 "pass": all_pass(gates)}))
    return EXIT_OK if all_pass(gates) else EXIT_GATE


COMMANDS = {"exponents": cmd_exponents, "resistance": cmd_resistance, "simulate": cmd_simulate,
            "kernel": cmd_kernel, "vicsek": cmd_vicsek, "verify": cmd_verify}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.samples < 1 or args.threads < 1 or args.workers < 1:
        parser.error("--samples, --threads and --workers must be positive")
    try:
        return COMMANDS[args.command](args)
    except (UsageError, SpecError, GuardExceeded) as exc:
        print(f"gasket-lab: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NumericalFailure as exc:
        print(f"gasket-lab: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"gasket-lab: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
