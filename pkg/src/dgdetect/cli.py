"""Command-line front end: single runs, table sweeps, training, validation.

Configuration comes from an optional key=value text file plus flag
overrides (flags win).  Problem and indicator names are stable tokens; an
unknown token is a usage error that lists the valid ones.  Exit status: 0
on success, 1 when a run aborts on a nonphysical state, 2 for usage or
configuration errors.
"""

import argparse
import json
import os
import sys
import time as time_mod
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import ann
from .benchmarks import PROBLEM_NAMES, get_problem
from .discretization import (MAX_DEGREE, MIN_DEGREE, make_basis,
                             uniform_mesh_1d)
from .errors import DgError, NonphysicalStateError
from .indicators import KINDS, IndicatorConfig, make_detector
from .limiter import apply_weno_limiter
from .reporting import (RunReport, accumulate, recompute_summary,
                        write_history_csv, write_summary_json)
from .solver import CFL_DEFAULT, march, project_initial_condition

INDICATOR_TOKENS = KINDS + ("none", "all")
JOBS_ENV_VAR = "DGDETECT_JOBS"


def parse_cells(token):
    """'200' -> 200, '240x60' -> (240, 60)."""
    text = str(token).lower()
    if "x" in text:
        nx, ny = text.split("x", 1)
        return int(nx), int(ny)
    return int(text)


def cells_token(cells):
    if np.isscalar(cells):
        return str(int(cells))
    return f"{int(cells[0])}x{int(cells[1])}"


def read_config_file(path):
    """key=value lines; blank lines and # comments ignored."""
    values = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise DgError(f"{path}:{lineno}: expected key=value, got {raw!r}")
        key, val = line.split("=", 1)
        values[key.strip().replace("-", "_")] = val.strip()
    return values


def _indicator_config(indicator, order, variable, opts):
    kwargs = {"kind": indicator, "variable": variable}
    for key in ("pp_tau1", "pp_scale", "sj_threshold", "sj_exponent",
                "lpr_c1", "lpr_c2", "mh_fc", "rh_threshold"):
        if opts.get(key) is not None:
            kwargs[key] = float(opts[key])
    if opts.get("fs_threshold") is not None:
        config = IndicatorConfig(kind="fs1")
        table = dict(config.fs_thresholds)
        table[order] = float(opts["fs_threshold"])
        kwargs["fs_thresholds"] = table
    if opts.get("network") is not None:
        kwargs["network"] = ann.load_network(opts["network"])
    return IndicatorConfig(**kwargs)


def run_case(problem, indicator, order, cells, cfl=CFL_DEFAULT,
             limiter=True, out_dir=None, max_steps=None,
             contact_eta=None, options=None, label=None):
    """Execute one benchmark case and return its finished RunReport.

    Raises NonphysicalStateError if the run aborts; DgError subclasses for
    configuration problems.
    """
    options = options or {}
    if indicator not in INDICATOR_TOKENS:
        raise DgError(f"unknown indicator '{indicator}'; valid: "
                      + ", ".join(INDICATOR_TOKENS))
    eta_kwargs = {} if contact_eta is None else {"contact_eta": contact_eta}
    spec = get_problem(problem, **eta_kwargs)
    mesh = spec.make_mesh(cells)
    basis = make_basis(spec.dim, order)
    bcs = spec.make_bcs(mesh)
    field = spec.initialize(mesh, basis)
    config = _indicator_config(indicator, order, spec.detect_variable,
                               options)
    detector = make_detector(config, bcs, degree=order)
    limit = apply_weno_limiter if limiter else None

    echo = {"problem": problem, "indicator": indicator, "order": order,
            "cells": cells_token(cells), "cfl": cfl,
            "limiter": bool(limiter), "t_end": spec.t_end}
    echo.update({k: float(v) for k, v in options.items()
                 if v is not None and k != "network"})
    report = RunReport(config=echo, n_elements=mesh.n_elements)

    def on_step(step, t_before, flags):
        flags.step = step
        accumulate(report, flags, mesh.n_elements)

    start = time_mod.perf_counter()
    march(field, bcs, spec.t_end, cfl=cfl, detector=detector, limit=limit,
          on_step=on_step, max_steps=max_steps)
    report.wall_seconds = time_mod.perf_counter() - start

    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        stem = label or (f"{problem}_{indicator}_n{order}_"
                         f"{cells_token(cells)}")
        write_history_csv(report, out / f"{stem}.history.csv")
        write_summary_json(report, out / f"{stem}.summary.json")
    return report


# ----------------------------------------------------------------- commands

def _merge(args, file_config, key, default=None, convert=None):
    flag = getattr(args, key, None)
    if flag is not None:
        return flag
    if key in file_config:
        raw = file_config[key]
        return convert(raw) if convert else raw
    return default


def _bool_token(text):
    t = str(text).strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise DgError(f"expected a boolean, got {text!r}")


_OPTION_KEYS = ("pp_tau1", "pp_scale", "sj_threshold", "sj_exponent",
                "fs_threshold", "lpr_c1", "lpr_c2", "mh_fc", "rh_threshold",
                "network")


def _cmd_run(args):
    file_config = read_config_file(args.config) if args.config else {}
    problem = _merge(args, file_config, "problem")
    indicator = _merge(args, file_config, "indicator")
    if problem is None or indicator is None:
        raise DgError("run needs --problem and --indicator "
                      "(flags or config file)")
    order = int(_merge(args, file_config, "order", 1))
    cells = parse_cells(_merge(args, file_config, "cells", "200"))
    cfl = float(_merge(args, file_config, "cfl", CFL_DEFAULT))
    limiter = _merge(args, file_config, "limiter", True, _bool_token)
    max_steps = _merge(args, file_config, "max_steps", None)
    contact_eta = _merge(args, file_config, "contact_eta", None)
    options = {k: _merge(args, file_config, k) for k in _OPTION_KEYS}
    report = run_case(
        problem, indicator, order, cells, cfl=cfl, limiter=limiter,
        out_dir=args.out, max_steps=None if max_steps is None
        else int(max_steps),
        contact_eta=None if contact_eta is None else float(contact_eta),
        options=options)
    ave, mx = report.average_percent, report.max_percent
    print(f"{problem} {indicator} N={order} cells={cells_token(cells)} "
          f"steps={report.n_steps} "
          f"ave={0.0 if ave is None else ave:.4f}% "
          f"max={0.0 if mx is None else mx:.4f}% "
          f"wall={report.wall_seconds:.2f}s")
    return 0


def _cmd_sweep(args):
    problems = args.problem.split(",")
    indicators = list(KINDS) if args.indicators == "all" \
        else args.indicators.split(",")
    for token in indicators:
        if token not in INDICATOR_TOKENS:
            raise DgError(f"unknown indicator '{token}'; valid: "
                          + ", ".join(INDICATOR_TOKENS))
    orders = [int(t) for t in args.orders.split(",")]
    meshes = [parse_cells(t) for t in args.cells.split(",")]
    jobs = args.jobs or int(os.environ.get(JOBS_ENV_VAR, "1"))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    tasks = [(p, ind, n, cells) for p in problems for cells in meshes
             for ind in indicators for n in orders]

    def one(task):
        p, ind, n, cells = task
        try:
            rep = run_case(p, ind, n, cells, cfl=args.cfl, out_dir=out)
            return task, (rep.average_percent, rep.max_percent), None
        except DgError as err:
            return task, None, f"{type(err).__name__}: {err}"

    results = {}
    with ThreadPoolExecutor(max_workers=max(1, jobs)) as pool:
        for task, values, err in pool.map(one, tasks):
            results[task] = (values, err)
            p, ind, n, cells = task
            status = "error" if err else (
                f"ave={values[0]:.4f}% max={values[1]:.4f}%")
            print(f"{p} {ind} N={n} cells={cells_token(cells)} {status}")
            if err:
                print(f"  {err}", file=sys.stderr)

    for p in problems:
        for cells in meshes:
            lines = ["indicator," + ",".join(
                f"P{n}_ave,P{n}_max" for n in orders)]
            for ind in indicators:
                row = [ind]
                for n in orders:
                    values, err = results[(p, ind, n, cells)]
                    if err:
                        row += ["error", "error"]
                    else:
                        row += [f"{values[0]:.17g}", f"{values[1]:.17g}"]
                lines.append(",".join(row))
            table = out / f"{p}_{cells_token(cells)}_table.csv"
            table.write_text("\n".join(lines) + "\n")
            print(f"wrote {table}")
    return 0


def _cmd_train_ann(args):
    dim = {"1d": 1, "2d": 2}[args.family]
    make = (ann.synthetic_stencils_1d if dim == 1
            else ann.synthetic_stencils_2d)
    features, labels = make(args.count, seed=args.seed)
    from .indicators import normalize_features
    network, history = ann.train_network(
        normalize_features(features), labels, seed=args.seed,
        epochs=args.epochs, family=f"{args.family}", verbose=not args.quiet)
    out = Path(args.out) if args.out else \
        Path(__file__).parent / "data" / f"rh_{args.family}.net"
    out.parent.mkdir(parents=True, exist_ok=True)
    ann.save_network(network, out)
    print(f"wrote {out}  (validation accuracy "
          f"{network.metadata['val_accuracy']:.4f}, "
          f"{network.metadata['epochs']} epochs)")
    return 0


def _cmd_validate(args):
    """Fast self-checks of the numerical core; prints PASS/FAIL lines."""
    from . import discretization as disc
    from . import euler
    checks = []

    def check(name, fn):
        try:
            fn()
            checks.append((name, None))
            print(f"PASS {name}")
        except Exception as err:  # deliberate: report every failure
            checks.append((name, err))
            print(f"FAIL {name}: {err}")

    rng = np.random.default_rng(7)

    def quadrature():
        for n in range(2, 7):
            x, w = disc.gauss_legendre(n)
            for k in range(2 * n - 1):
                exact = (1.0 - (-1.0) ** (k + 1)) / (k + 1)
                assert abs(np.sum(w * x ** k) - exact) < 1e-13

    def orthonormal():
        for deg in range(MIN_DEGREE, MAX_DEGREE + 1):
            b = disc.make_basis(1, deg)
            gram = (b.phi * b.weights[:, None]).T @ b.phi
            assert np.max(np.abs(gram - np.eye(deg + 1))) < 1e-12

    def shift():
        for deg in range(MIN_DEGREE, MAX_DEGREE + 1):
            b = disc.make_basis(1, deg)
            coeffs = rng.normal(size=(deg + 1, 1))
            shifted = disc.shift_operator(b, (1,)) @ coeffs
            x, w = disc.gauss_legendre(deg + 3)
            own = disc.orthonormal_legendre(x + 2.0, deg) @ coeffs
            other = disc.orthonormal_legendre(x, deg) @ shifted
            assert np.max(np.abs(own - other)) < 1e-11

    def jacobian():
        q = euler.conservative_from_primitive(np.array([1.2, 0.4, 0.9]))
        a = euler.flux_jacobian(q, np.array([1.0]))
        eps = 1e-7
        for j in range(3):
            dq = np.zeros(3)
            dq[j] = eps
            fd = (euler.physical_flux(q + dq, 0)
                  - euler.physical_flux(q - dq, 0)) / (2 * eps)
            assert np.max(np.abs(a[:, j] - fd)) < 1e-5

    def riemann():
        from .benchmarks import _riemann_star
        ps, _ = _riemann_star((1.0, 0.0, 1.0), (0.125, 0.0, 0.1))
        assert abs(ps - 0.30313) < 5e-5

    def net_round_trip(tmp=Path(".dgdetect_validate.net")):
        net = ann.init_network(5, np.random.default_rng(3))
        net.metadata.update(seed=3, epochs=0, val_accuracy=0.5)
        try:
            ann.save_network(net, tmp)
            loaded = ann.load_network(tmp)
            for a, b in zip(net.weights, loaded.weights):
                assert np.array_equal(a, b)
        finally:
            tmp.unlink(missing_ok=True)

    def silence():
        mesh = uniform_mesh_1d(0.0, 1.0, 50)
        basis = make_basis(1, 1)
        field = project_initial_condition(
            mesh, basis, lambda pts: np.broadcast_to(
                euler.conservative_from_primitive(np.array([1.0, 0.3, 1.0])),
                pts.shape[:-1] + (3,)))
        spec = get_problem("sod")
        bcs = spec.make_bcs(mesh)
        for kind in ("pp", "sj", "fs1", "fs2", "lpr", "ppl", "mh"):
            det = make_detector(IndicatorConfig(kind=kind), bcs, degree=1)
            assert det(field).count == 0, kind

    check("gauss-quadrature-exactness", quadrature)
    check("basis-orthonormality", orthonormal)
    check("neighbor-shift-consistency", shift)
    check("flux-jacobian-fd", jacobian)
    check("shock-tube-star-pressure", riemann)
    check("network-file-round-trip", net_round_trip)
    check("uniform-state-silence", silence)
    failed = [name for name, err in checks if err is not None]
    print(f"{len(checks) - len(failed)}/{len(checks)} checks passed")
    return 1 if failed else 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="dgdetect",
        description="Troubled-cell indicator benchmarks for a modal "
                    "discontinuous Galerkin Euler solver.")
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="execute one benchmark case")
    run_p.add_argument("--config", help="key=value config file")
    run_p.add_argument("--problem", choices=PROBLEM_NAMES)
    run_p.add_argument("--indicator", choices=INDICATOR_TOKENS)
    run_p.add_argument("--order", type=int,
                       choices=range(MIN_DEGREE, MAX_DEGREE + 1))
    run_p.add_argument("--cells", help="cell count, e.g. 200 or 240x60")
    run_p.add_argument("--cfl", type=float)
    run_p.add_argument("--out", help="directory for CSV/JSON reports")
    run_p.add_argument("--max-steps", type=int, dest="max_steps")
    run_p.add_argument("--contact-eta", type=float, dest="contact_eta")
    run_p.add_argument("--limiter", type=_bool_token)
    for key in _OPTION_KEYS:
        run_p.add_argument("--" + key.replace("_", "-"), dest=key)
    run_p.set_defaults(fn=_cmd_run)

    sweep_p = sub.add_parser("sweep",
                             help="run a problem x indicator x order table")
    sweep_p.add_argument("--problem", required=True,
                         help="comma-separated problem tokens")
    sweep_p.add_argument("--indicators", default="all",
                         help="comma-separated indicator tokens or 'all'")
    sweep_p.add_argument("--orders", default="1,2,3,4")
    sweep_p.add_argument("--cells", required=True,
                         help="comma-separated cell counts")
    sweep_p.add_argument("--cfl", type=float, default=CFL_DEFAULT)
    sweep_p.add_argument("--out", default="sweep_out")
    sweep_p.add_argument("--jobs", type=int,
                         help=f"parallel runs (default ${JOBS_ENV_VAR} or 1)")
    sweep_p.set_defaults(fn=_cmd_sweep)

    train_p = sub.add_parser("train-ann",
                             help="train a detector network on synthetic "
                                  "stencils")
    train_p.add_argument("--family", choices=("1d", "2d"), required=True)
    train_p.add_argument("--count", type=int, default=120000)
    train_p.add_argument("--seed", type=int, default=0)
    train_p.add_argument("--epochs", type=int, default=60)
    train_p.add_argument("--out", help="output .net path (default: the "
                                       "shipped data file)")
    train_p.add_argument("--quiet", action="store_true")
    train_p.set_defaults(fn=_cmd_train_ann)

    val_p = sub.add_parser("validate", help="run fast numerical self-checks")
    val_p.set_defaults(fn=_cmd_validate)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except NonphysicalStateError as err:
        print(f"run aborted: {err}", file=sys.stderr)
        return 1
    except DgError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
