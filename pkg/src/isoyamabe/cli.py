"""Command-line entry point: ``isoyamabe solve | table | diagnose``.

Every command writes plain CSV and JSON into ``--out``. Outputs depend only
on the flags, so repeated runs give byte-identical files; elapsed wall time
is kept apart in ``timing.json``.

Exit codes: 0 success, 1 invalid input, 2 no solution found, 3 budget
exhausted.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

from . import __version__
from .energy import c_n_value
from .errors import BudgetError, InvalidSpecError, IsoYamabeError, NotFoundError, RangeError
from .integrator import IntegratorConfig, write_trajectory_csv
from .limit import (
    LimitConfig,
    bubble_error,
    convergence_report,
    solve_limit,
    subcritical_check,
    write_limit_csv,
    write_report_json,
    zero_growth_check,
)
from .matcher import find_nodal
from .problem import make_problem
from .shooting import exit_times, geometric_grid, is_monotone, scan_curve, write_scan_csv

log = logging.getLogger("isoyamabe")

EXIT_OK, EXIT_INVALID, EXIT_NOT_FOUND, EXIT_BUDGET = 0, 1, 2, 3

# (n, k, m) rows of the reference energy table; the solution lives on
# S^n in R^k x R^m, i.e. multiplicities m1 = k - 1 and m2 = m - 1.
TABLE_ROWS = (
    (3, 2, 2),
    (4, 2, 3),
    (5, 2, 4),
    (5, 3, 3),
    (6, 2, 5),
    (6, 3, 4),
    (7, 2, 6),
    (7, 3, 5),
    (7, 4, 4),
)


@dataclass
class RunManifest:
    command: str
    spec: dict
    config: dict
    outputs: dict = field(default_factory=dict)
    results: dict = field(default_factory=dict)
    wall_time: Optional[float] = None
    tool_version: str = __version__

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "RunManifest":
        return cls(**data)

    def dumps(self) -> str:
        """Deterministic JSON; ``wall_time`` is left out (see :meth:`write`)."""
        body = self.to_dict()
        body.pop("wall_time")
        return json.dumps(body, indent=2, sort_keys=True) + "\n"

    def write(self, out_dir) -> Path:
        out = Path(out_dir)
        (out / "manifest.json").write_text(self.dumps())
        (out / "timing.json").write_text(json.dumps({"wall_time": self.wall_time}) + "\n")
        return out / "manifest.json"

    @classmethod
    def read(cls, out_dir) -> "RunManifest":
        out = Path(out_dir)
        data = json.loads((out / "manifest.json").read_text())
        timing = out / "timing.json"
        data["wall_time"] = json.loads(timing.read_text())["wall_time"] if timing.exists() else None
        return cls.from_dict(data)


def _workers() -> int:
    raw = os.environ.get("ISOYAMABE_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        raise InvalidSpecError(f"ISOYAMABE_THREADS must be an integer, got {raw!r}") from None


class _Pool:
    """Order-preserving map over at most ISOYAMABE_THREADS processes."""

    def __init__(self):
        self.n = _workers()
        self.ex = ProcessPoolExecutor(self.n) if self.n > 1 else None

    def __enter__(self):
        return self.ex

    def __exit__(self, *exc):
        if self.ex is not None:
            self.ex.shutdown()


def _config(args) -> IntegratorConfig:
    base = IntegratorConfig()
    return IntegratorConfig(
        eps0=args.eps0 if args.eps0 is not None else base.eps0,
        rtol=args.rtol if args.rtol is not None else base.rtol,
        atol=args.atol if args.atol is not None else base.atol,
    )


def _solution_record(sol) -> dict:
    return dict(
        k=sol.k,
        d=sol.d,
        c=sol.c,
        parity_sign=sol.parity_sign,
        residual=sol.match_residual,
        radius=sol.radius,
        energy=sol.energy,
        c_n=sol.c_n,
        ratio=None if sol.energy is None else sol.energy / sol.c_n,
        yamabe_value=sol.yamabe_value,
        zeroes=list(sol.zeroes),
        ode_defect=sol.defect,
    )


def cmd_solve(args) -> int:
    t0 = time.perf_counter()
    spec = make_problem(args.n, args.ell, args.m1, args.m2, strict=args.strict)
    config = _config(args)
    config.validate_for(spec)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    with _Pool() as ex:
        found = find_nodal(spec, config, args.k, scan_max=args.scan_max, all_seeds=args.all_seeds, executor=ex)
    sols = found if args.all_seeds else [found]
    outputs, records = {}, []
    for i, sol in enumerate(sols):
        name = "profile.csv" if i == 0 else f"profile_{i}.csv"
        write_trajectory_csv(sol.profile, out / name)
        outputs[f"profile_{i}"] = name
        records.append(_solution_record(sol))
    manifest = RunManifest(
        command="solve",
        spec={**spec.as_dict(), "strict": args.strict},
        config={**config.as_dict(), "scan_max": args.scan_max, "all_seeds": args.all_seeds},
        outputs=outputs,
        results={
            "solutions": records,
            "branch_assumption": "smallest-|d| seed among verified k-zero solutions",
        },
    )
    manifest.wall_time = time.perf_counter() - t0
    manifest.write(out)
    best = records[0]
    print(
        f"k={args.k}: d={best['d']:.12g} c={best['c']:.12g} residual={best['residual']:.3g}"
        + ("" if best["energy"] is None else f" energy={best['energy']:.6g}")
    )
    return EXIT_OK


def _table_row(task):
    n, k, m, cfg, scan_max = task
    cn = c_n_value(n)
    try:
        spec = make_problem(n, 2, k - 1, m - 1)
        sol = find_nodal(spec, cfg, 1, scan_max=scan_max)
        return {"n": n, "k": k, "m": m, "c_n": cn, "E": sol.energy, "ratio": sol.energy / cn, "error": None}
    except IsoYamabeError as exc:
        return {"n": n, "k": k, "m": m, "c_n": cn, "E": None, "ratio": None, "error": str(exc)}


def table_rows(config: IntegratorConfig, scan_max=None, executor=None) -> list:
    """Fresh k=1 solve for every reference row, in table order."""
    mapper = executor.map if executor is not None else map
    return list(mapper(_table_row, [(n, k, m, config, scan_max) for n, k, m in TABLE_ROWS]))


def write_table_csv(rows, path) -> None:
    """``n,k,m,c_n,E,ratio``; failed rows carry ``FAILED`` in E and ratio."""
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(["n", "k", "m", "c_n", "E", "ratio"])
        for r in rows:
            if r["error"] is None:
                out.writerow([r["n"], r["k"], r["m"], f"{r['c_n']:.17g}", f"{r['E']:.17g}", f"{r['ratio']:.17g}"])
            else:
                out.writerow([r["n"], r["k"], r["m"], f"{r['c_n']:.17g}", "FAILED", "FAILED"])


def read_table_csv(path) -> list:
    rows = []
    with open(path, newline="") as fh:
        for rec in csv.DictReader(fh):
            row = {"n": int(rec["n"]), "k": int(rec["k"]), "m": int(rec["m"]), "c_n": float(rec["c_n"])}
            for key in ("E", "ratio"):
                row[key] = None if rec[key] == "FAILED" else float(rec[key])
            rows.append(row)
    return rows


def cmd_table(args) -> int:
    t0 = time.perf_counter()
    config = _config(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    with _Pool() as ex:
        rows = table_rows(config, args.scan_max, ex)
    write_table_csv(rows, out / "table.csv")
    failed = [r for r in rows if r["error"] is not None]
    manifest = RunManifest(
        command="table",
        spec={"rows": [list(r) for r in TABLE_ROWS], "ell": 2, "k_zeroes": 1},
        config={**config.as_dict(), "scan_max": args.scan_max},
        outputs={"table": "table.csv"},
        results={"rows": rows, "failed": len(failed)},
    )
    manifest.wall_time = time.perf_counter() - t0
    manifest.write(out)
    for r in rows:
        if r["error"] is None:
            print(f"{r['n']} {r['k']} {r['m']}  c_n={r['c_n']:.4g}  E={r['E']:.5g}  E/c_n={r['ratio']:.3g}")
        else:
            print(f"{r['n']} {r['k']} {r['m']}  FAILED: {r['error']}", file=sys.stderr)
    return EXIT_NOT_FOUND if failed else EXIT_OK


def _exit_report(spec, config, scan, count):
    try:
        times, radii = exit_times(spec, config, scan, count)
    except RangeError as exc:
        return {"error": str(exc)}
    return {"times": times.tolist(), "radii": radii.tolist(), "monotone": is_monotone(radii)}


def cmd_diagnose(args) -> int:
    t0 = time.perf_counter()
    if not args.scan_max > 1 or args.scan_points < 2:
        raise InvalidSpecError("--scan-max must exceed 1 and --scan-points must be >= 2")
    spec = make_problem(args.n, args.ell, args.m1, args.m2, strict=args.strict)
    config = _config(args)
    config.validate_for(spec)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    grid = geometric_grid(1.0, args.scan_max, args.scan_points)
    with _Pool() as ex:
        scan_R = scan_curve(spec, config, "R", grid, max_samples=args.max_samples, executor=ex)
        scan_S = scan_curve(spec, config, "S", grid, max_samples=args.max_samples, executor=ex)
    write_scan_csv(scan_R, out / "scan_R.csv")
    write_scan_csv(scan_S, out / "scan_S.csv")
    outputs = {"scan_R": "scan_R.csv", "scan_S": "scan_S.csv"}

    H0 = spec.m1 if args.limit_H0 is None else args.limit_H0
    p = spec.p if args.limit_p is None else args.limit_p
    lcfg = LimitConfig(H0, p, args.limit_K)
    v0 = solve_limit(lcfg, config)
    write_limit_csv(v0, out / "limit.csv")
    outputs["limit"] = "limit.csv"
    limit = {
        "H0": H0,
        "p": p,
        "K": args.limit_K,
        "subcritical": subcritical_check(H0, p),
        "zeroes_within_K": len(v0.zeroes),
    }
    # critical exponent for dimension H0 + 1: the bubble is known in closed form
    nb = H0 + 1
    if nb >= 3 and float(nb).is_integer() and abs(p - (nb + 2) / (nb - 2)) < 1e-14:
        err = bubble_error(int(nb), config=config)
        limit["bubble_error"] = err
        limit["bubble_pass"] = err <= 1e-8

    report = {
        "spec": spec.as_dict(),
        "theta_min": float(scan_R.thetas.min()),
        "vartheta_max": float(scan_S.thetas.max()),
        "x": _exit_report(spec, config, scan_R, args.exit_count),
        "y": _exit_report(spec, config, scan_S, args.exit_count),
        "limit": limit,
    }
    if spec.nodal:
        report["convergence"] = convergence_report(spec, config, args.convergence_d, K=args.convergence_K)
        eps = spec.a0 / 2
        counts = zero_growth_check(spec, config, eps, args.ladder)
        report["zero_growth"] = {
            "eps": eps,
            "ladder": list(args.ladder),
            "counts": counts,
            "nondecreasing": all(b >= a for a, b in zip(counts, counts[1:])),
        }
    write_report_json(report, out / "diagnose.json")
    outputs["report"] = "diagnose.json"
    manifest = RunManifest(
        command="diagnose",
        spec=spec.as_dict(),
        config={**config.as_dict(), "scan_max": args.scan_max, "scan_points": args.scan_points},
        outputs=outputs,
        results={"theta_min": report["theta_min"], "vartheta_max": report["vartheta_max"]},
    )
    manifest.wall_time = time.perf_counter() - t0
    manifest.write(out)
    print(f"theta min {report['theta_min']:.6g}, vartheta max {report['vartheta_max']:.6g}")
    return EXIT_OK


def _positive_list(text):
    vals = [float(x) for x in text.split(",") if x.strip()]
    if not vals or any(v <= 0 for v in vals):
        raise argparse.ArgumentTypeError("expected a comma separated list of positive numbers")
    return vals


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="isoyamabe", description=__doc__.split("\n")[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, spec=True):
        if spec:
            p.add_argument("--n", type=int, required=True)
            p.add_argument("--ell", type=int, required=True)
            p.add_argument("--m1", type=int, required=True)
            p.add_argument("--m2", type=int, required=True)
            p.add_argument("--strict", action="store_true", help="restrict to known isoparametric families")
        p.add_argument("--eps0", type=float)
        p.add_argument("--rtol", type=float)
        p.add_argument("--atol", type=float)
        p.add_argument("--out", default="isoyamabe-out", help="output directory")

    ps = sub.add_parser("solve", help="find a solution with k zeroes")
    common(ps)
    ps.add_argument("--k", type=int, required=True)
    ps.add_argument("--scan-max", type=float, help="fixed scan range [1, scan_max] (default: adaptive)")
    ps.add_argument("--all-seeds", action="store_true", help="refine every seed, not only the smallest")
    ps.set_defaults(func=cmd_solve)

    pt = sub.add_parser("table", help="reproduce the ell=2 energy table")
    common(pt, spec=False)
    pt.add_argument("--scan-max", type=float)
    pt.set_defaults(func=cmd_table)

    pd = sub.add_parser("diagnose", help="shooting curves, exit times and limit checks")
    common(pd)
    pd.add_argument("--scan-max", type=float, default=50.0)
    pd.add_argument("--scan-points", type=int, default=64)
    pd.add_argument("--max-samples", type=int, default=4000)
    pd.add_argument("--exit-count", type=int, default=3)
    pd.add_argument("--limit-H0", type=float)
    pd.add_argument("--limit-p", type=float)
    pd.add_argument("--limit-K", type=float, default=100.0)
    pd.add_argument("--convergence-d", type=_positive_list, default=[10.0, 30.0, 100.0])
    pd.add_argument("--convergence-K", type=float, default=5.0)
    pd.add_argument("--ladder", type=_positive_list, default=[10.0, 100.0, 1000.0])
    pd.set_defaults(func=cmd_diagnose)
    return ap


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (InvalidSpecError, ValueError) as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except NotFoundError as exc:
        print(f"not found: {exc}", file=sys.stderr)
        return EXIT_NOT_FOUND
    except BudgetError as exc:
        print(f"budget exhausted: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except IsoYamabeError as exc:
        print(f"failed: {exc}", file=sys.stderr)
        return EXIT_NOT_FOUND


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
