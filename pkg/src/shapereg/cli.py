"""Command-line front end.

Subcommands: ``project``, ``statdim``, ``risk``, ``rate``,
``oracle-check``, ``worst-case-design`` and ``experiment``. Exit codes:
0 on success, 2 for invalid input, 3 for numerical failures.
"""

import argparse
import csv
import datetime
import hashlib
import io
import json
import os
import sys
import tempfile
from importlib import resources

import numpy as np
from jsonschema import Draft202012Validator

from . import __version__
from .cones import DesignPoints, Unimodal
from .errors import ConvergenceFailure, InvalidArgument, UnsupportedOperation
from .experiments import (
    ExperimentConfig,
    build_cone,
    design_equispaced,
    design_geometric,
    design_uniform,
    make_truth,
    oracle_check,
    risk_mc,
    run_experiment,
    worst_case_design_for,
    worst_case_eps,
)
from .isotonic import project_unimodal
from .projections import project
from .statdim import statdim_isotonic_exact, statdim_mc

EXIT_OK, EXIT_INVALID, EXIT_NUMERIC = 0, 2, 3
CONES = ("isotonic", "antitonic", "unimodal", "convex")


class UsageError(Exception):
    """Bad command-line input; reported with exit code 2."""


def fmt(v):
    """17 significant digits, the round-trip precision of a double."""
    return "%.17g" % v


# ------------------------------------------------------------------ input


def read_columns(path):
    """Parse whitespace-separated numbers; returns a list of rows.

    Blank lines and ``#`` comments are skipped. Errors name the line.
    """
    text = sys.stdin.read() if path == "-" else _read_text(path)
    rows = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        try:
            rows.append([float(tok) for tok in line.split()])
        except ValueError:
            raise UsageError(f"{path}:{lineno}: cannot parse {line!r} as numbers") from None
        if not all(np.isfinite(rows[-1])):
            raise UsageError(f"{path}:{lineno}: non-finite value")
    if not rows:
        raise UsageError(f"{path}: no data")
    return rows


def _read_text(path):
    try:
        with open(path, encoding="utf-8") as fh:
            return fh.read()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None


def read_sequence(path):
    """All numbers of a file in reading order."""
    return np.array([v for row in read_columns(path) for v in row])


def read_designed(path):
    """``(x, y)`` from a two-column file, or ``(None, y)`` for one column."""
    rows = read_columns(path)
    widths = {len(r) for r in rows}
    if widths == {2}:
        arr = np.array(rows)
        return arr[:, 0], arr[:, 1]
    if widths == {1}:
        return None, np.array([r[0] for r in rows])
    return None, np.array([v for r in rows for v in r])


def design_from_flags(args, n):
    if args.design == "equispaced":
        return design_equispaced(n)
    if args.design == "geometric":
        if args.eps is None:
            raise UsageError("--design geometric needs --eps")
        return design_geometric(n, args.eps)
    if args.design == "uniform":
        return design_uniform(n, args.seed)
    raise UsageError(f"--design {args.design} needs the design column of an input file")


# ----------------------------------------------------------------- output


def write_atomic(path, data):
    """Write ``data`` (str) to ``path`` through a temporary file and rename."""
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def csv_text(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) if isinstance(v, float) else v for v in row])
    return buf.getvalue()


def emit(text, out):
    if out:
        write_atomic(out, text)
    else:
        sys.stdout.write(text)


# ----------------------------------------------------------------- config


def _schema():
    return json.loads(resources.files("shapereg").joinpath("configs/schema.json").read_text())


def config_errors(doc):
    """Every schema violation of ``doc`` as ``path: message`` strings."""
    errors = []
    for err in sorted(Draft202012Validator(_schema()).iter_errors(doc), key=lambda e: list(e.absolute_path)):
        where = "/".join(str(p) for p in err.absolute_path) or "<root>"
        errors.append(f"{where}: {err.message}")
    grid = doc.get("n_grid") if isinstance(doc, dict) else None
    if isinstance(grid, list) and all(isinstance(v, int) for v in grid):
        if any(b <= a for a, b in zip(grid, grid[1:])):
            errors.append("n_grid: must be strictly increasing")
    return errors


def bundled_configs():
    folder = resources.files("shapereg").joinpath("configs")
    return sorted(p.name[:-5] for p in folder.iterdir() if p.name.endswith(".json") and p.name != "schema.json")


def load_config(ref):
    """Config document from a path or the name of a bundled config."""
    if not os.path.exists(ref) and ref in bundled_configs():
        text = resources.files("shapereg").joinpath(f"configs/{ref}.json").read_text()
    else:
        text = _read_text(ref)
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise UsageError(f"{ref}: invalid JSON at line {exc.lineno}: {exc.msg}") from None
    errors = config_errors(doc)
    if errors:
        raise UsageError(f"{ref}: {len(errors)} validation error(s)\n  " + "\n  ".join(errors))
    doc.setdefault("seed", 0)
    doc.setdefault("design", {"kind": "equispaced"})
    doc.setdefault("name", os.path.splitext(os.path.basename(ref))[0])
    return doc


def config_hash(doc):
    canonical = json.dumps(doc, sort_keys=True, separators=(",", ":"), ensure_ascii=True)
    return hashlib.sha256(canonical.encode("ascii")).hexdigest()


def to_config(doc):
    return ExperimentConfig(
        estimator=doc["estimator"],
        truth=doc["truth"],
        sigma=doc["sigma"],
        n_grid=doc["n_grid"],
        reps=doc["reps"],
        seed=doc["seed"],
        design=doc["design"],
    )


# --------------------------------------------------------------- commands


def cmd_project(args):
    cone_name = args.cone
    split = None
    if cone_name == "convex":
        x, y = read_designed(args.input)
        n = y.size
        if args.design in (None, "file"):
            if x is None:
                raise UsageError("--cone convex needs a design column (x y per line) or --design")
            design = DesignPoints(x)
        else:
            design = design_from_flags(args, n)
        cone = build_cone("convex", n, design)
    else:
        if args.design is not None:
            raise UsageError(f"--design does not apply to --cone {cone_name}")
        y = read_sequence(args.input)
        cone = build_cone(cone_name, y.size)
    if cone_name == "unimodal":
        res, split = project_unimodal(y)
    else:
        res = project(y, cone)
    sys.stdout.write("".join(fmt(v) + "\n" for v in res.fit))
    if args.out:
        report = {
            "cone": cone_name,
            "fit": [float(v) for v in res.fit],
            "objective": res.objective,
            "blocks": [[int(a), int(b)] for a, b in res.blocks],
            "iterations": int(res.iterations),
            "kkt": {
                "stationarity": res.kkt.stationarity_residual,
                "feasibility": res.kkt.feasibility_residual,
                "complementarity": res.kkt.complementarity_residual,
                "polar_inner_product": res.kkt.polar_inner_product,
            },
        }
        if split is not None:
            report["split"] = int(split)
        write_atomic(args.out, json.dumps(report, indent=2) + "\n")
    return EXIT_OK


def _cone_for_flags(args, n):
    design = design_from_flags(args, n) if args.cone == "convex" else None
    return build_cone(args.cone, n, design)


def cmd_statdim(args):
    header = ["cone", "n", "reps", "seed", "mean", "std_error"]
    if args.exact:
        if args.cone not in ("isotonic", "antitonic"):
            raise UsageError("--exact is available for the monotone cones only")
        row = [args.cone, args.n, "exact", "", statdim_isotonic_exact(args.n), 0.0]
    else:
        est = statdim_mc(_cone_for_flags(args, args.n), args.reps, args.seed)
        row = [args.cone, args.n, est.reps, est.seed, est.mean, est.std_error]
    emit(csv_text(header, [row]), args.out)
    return EXIT_OK


def _truth_spec(args):
    spec = {"family": args.truth}
    for item in args.param or []:
        key, sep, value = item.partition("=")
        if not sep:
            raise UsageError(f"--param expects key=value, got {item!r}")
        try:
            spec[key] = int(value)
        except ValueError:
            try:
                spec[key] = float(value)
            except ValueError:
                raise UsageError(f"--param {key}: {value!r} is not a number") from None
    return spec


def cmd_risk(args):
    design = {"kind": args.design or "equispaced"}
    if design["kind"] == "geometric":
        design["eps"] = args.eps
    if design["kind"] == "file":
        raise UsageError("risk simulations need a generated design")
    try:
        config = ExperimentConfig(args.cone, _truth_spec(args), args.sigma, [args.n], args.reps, args.seed, design)
        est = risk_mc(config, args.n)
    except TypeError as exc:
        raise UsageError(f"bad truth parameters: {exc}") from None
    header = ["n", "mean_risk", "std_error", "reps", "seed", "failures"]
    emit(csv_text(header, [[est.n, est.mean_risk, est.std_error, est.reps, est.seed, est.failures]]), args.out)
    return EXIT_OK


def _experiment_outputs(doc, result, command):
    rows = [[r.n, r.mean_risk, r.std_error, r.reps, r.seed, r.failures] for r in result.risks]
    risks_csv = csv_text(["n", "mean_risk", "std_error", "reps", "seed", "failures"], rows)
    long_rows = []
    for r in result.risks:
        for metric, value in (("mean_risk", r.mean_risk), ("std_error", r.std_error)):
            long_rows.append([doc["name"], doc["estimator"], r.n, metric, value])
    long_csv = csv_text(["experiment", "estimator", "n", "metric", "value"], long_rows)
    rate_csv = None
    if result.rate is not None:
        rt = result.rate
        rate_csv = csv_text(
            ["slope", "intercept", "r_squared", "slope_stderr"],
            [[rt.slope, rt.intercept, rt.r_squared, rt.slope_stderr]],
        )
    return risks_csv, long_csv, rate_csv


def _write_results(args, doc, result, command):
    risks_csv, long_csv, rate_csv = _experiment_outputs(doc, result, command)
    if not args.out:
        sys.stdout.write(risks_csv)
        if rate_csv:
            sys.stdout.write(rate_csv)
        return
    files = {"risks.csv": risks_csv, "long.csv": long_csv}
    if rate_csv:
        files["rate.csv"] = rate_csv
    for name, text in files.items():
        write_atomic(os.path.join(args.out, name), text)
    manifest = {
        "command": command,
        "config_hash": config_hash(doc),
        "seed": doc["seed"],
        "code_version": __version__,
        "timestamp": datetime.datetime.now(datetime.timezone.utc).isoformat(timespec="seconds"),
        "outputs": sorted(files) + ["manifest.json"],
        "config": doc,
    }
    if result.rate is not None:
        manifest["slope"] = result.rate.slope
    write_atomic(os.path.join(args.out, "manifest.json"), json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    sys.stdout.write(f"wrote {', '.join(manifest['outputs'])} to {args.out}\n")


def cmd_experiment(args):
    doc = load_config(args.config)
    result = run_experiment(to_config(doc))
    _write_results(args, doc, result, "experiment")
    return EXIT_OK


def cmd_rate(args):
    doc = load_config(args.config)
    if len(doc["n_grid"]) < 4:
        raise UsageError("a rate fit needs at least four grid sizes")
    result = run_experiment(to_config(doc))
    if result.rate is None:
        raise InvalidArgument("zero risk at some grid size; no log-log fit")
    _write_results(args, doc, result, "rate")
    return EXIT_OK


def cmd_oracle_check(args):
    doc = load_config(args.config)
    config = to_config(doc)
    n = args.n if args.n is not None else config.n_grid[-1]
    cone, mu, _ = config.setting(n)
    if args.candidates:
        cands = [np.array(r) for r in read_columns(args.candidates)]
    else:
        cands = [mu]
        if isinstance(cone, Unimodal):
            cands.append(project_unimodal(mu)[0].fit)
        else:
            cands.append(project(mu, cone).fit)
    report = oracle_check(config, cands, n)
    rows = [
        [r["index"], "yes" if r["feasible"] else "no",
         r["rhs"] if r["rhs"] is not None else "", r["margin"] if r["margin"] is not None else "",
         "pass" if r["passes"] else "fail", r["reason"]]
        for r in report.rows
    ]
    text = csv_text(["candidate", "feasible", "rhs", "margin", "result", "reason"], rows)
    text += csv_text(
        ["n", "mean_risk", "std_error", "best_rhs", "result"],
        [[n, report.risk.mean_risk, report.risk.std_error,
          report.best_rhs if report.best_rhs is not None else "", "pass" if report.passes else "fail"]],
    )
    emit(text, args.out)
    return EXIT_OK


def cmd_worst_case_design(args):
    if args.input:
        mu = read_sequence(args.input)
    elif args.truth:
        if args.n is None:
            raise UsageError("--truth needs --n")
        mu = make_truth(_truth_spec(args), args.n)
    else:
        raise UsageError("give an input file of truth values or --truth")
    eps = worst_case_eps(mu)
    design = worst_case_design_for(mu)
    lg = np.concatenate([[np.nan], design.log_gaps])
    rows = [[i + 1, float(design.x[i]), "" if i == 0 else float(lg[i]), float(mu[i])] for i in range(design.n)]
    text = f"# eps={fmt(eps)}\n" + csv_text(["i", "x", "log_gap", "mu"], rows)
    emit(text, args.out)
    return EXIT_OK


# ----------------------------------------------------------------- parser


def _positive_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return v


def _reps(text):
    v = int(text)
    if v < 2:
        raise argparse.ArgumentTypeError("need at least 2 replications for a standard error")
    return v


def _seed(text):
    v = int(text)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must lie in [0, 2**64)")
    return v


def build_parser():
    parser = argparse.ArgumentParser(prog="shapereg", description="Shape-restricted least squares toolkit.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, design=True):
        p.add_argument("--cone", choices=CONES, default="isotonic")
        if design:
            p.add_argument("--design", choices=("equispaced", "geometric", "uniform", "file"))
            p.add_argument("--eps", type=float, help="ratio of the geometric design")
        p.add_argument("--out", help="output path")

    p = sub.add_parser("project", help="least-squares fit of a sequence over a cone")
    p.add_argument("input", help="file of numbers, one per line, or 'x y' pairs; '-' for stdin")
    common(p)
    p.add_argument("--seed", type=_seed, default=0)
    p.set_defaults(func=cmd_project)

    p = sub.add_parser("statdim", help="statistical dimension of a cone")
    common(p)
    p.add_argument("--n", type=_positive_int, required=True)
    p.add_argument("--reps", type=_reps, default=10**4)
    p.add_argument("--seed", type=_seed, default=0)
    p.add_argument("--exact", action="store_true", help="closed form (monotone cones)")
    p.set_defaults(func=cmd_statdim)

    p = sub.add_parser("risk", help="Monte-Carlo risk at one sample size")
    common(p)
    p.add_argument("--n", type=_positive_int, required=True)
    p.add_argument("--reps", type=_reps, default=400)
    p.add_argument("--seed", type=_seed, default=0)
    p.add_argument("--sigma", type=float, default=1.0)
    p.add_argument("--truth", default="constant", help="truth family")
    p.add_argument("--param", action="append", help="truth parameter key=value (repeatable)")
    p.set_defaults(func=cmd_risk)

    for name, func, text in (
        ("experiment", cmd_experiment, "run a config over its grid"),
        ("rate", cmd_rate, "log-log risk slope of a config"),
    ):
        p = sub.add_parser(name, help=text)
        p.add_argument("config", help="config path or bundled name: " + ", ".join(bundled_configs()))
        p.add_argument("--out", help="results directory")
        p.set_defaults(func=func)

    p = sub.add_parser("oracle-check", help="empirical risk against oracle bounds")
    p.add_argument("config", help="config path or bundled name")
    p.add_argument("--n", type=_positive_int)
    p.add_argument("--candidates", help="file with one candidate sequence per line")
    p.add_argument("--out")
    p.set_defaults(func=cmd_oracle_check)

    p = sub.add_parser("worst-case-design", help="geometric design making a truth hard for convex LS")
    p.add_argument("input", nargs="?", help="file of strictly increasing truth values")
    p.add_argument("--truth", help="truth family instead of a file")
    p.add_argument("--param", action="append")
    p.add_argument("--n", type=_positive_int)
    p.add_argument("--out")
    p.set_defaults(func=cmd_worst_case_design)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, InvalidArgument, UnsupportedOperation) as exc:
        print(f"shapereg {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except ConvergenceFailure as exc:
        print(f"shapereg {args.command}: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
