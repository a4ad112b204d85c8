"""Command-line entry point.

Every subcommand writes its payload files and a ``manifest.json`` into the
output directory (``--out``, else ``$CHAINLEVY_OUTPUT_DIR``, else
``./chainlevy_output``). Exit codes: 0 success, 2 configuration error,
3 numerical-tolerance failure, 4 simulation-budget error.
"""

import argparse
import configparser
import csv
import datetime
import hashlib
import io
import json
import os
import sys

import numpy as np

from . import __version__
from . import acceptance
from . import fractional_pde as fp
from . import levy_calculus as lc
from . import spectral as sp
from . import tail_analysis as ta
from .errors import (BudgetError, ChainLevyError, ConfigError, DegenerateInputError,
                     NonConvergenceError, QuadratureError, ToleranceFailure)
from .experiments import (ExperimentConfig, charfn_convergence, clock_convergence,
                          hydro_limit_f)
from .spectral import SpectralParams

OUTPUT_ENV = "CHAINLEVY_OUTPUT_DIR"
EXIT_OK, EXIT_CONFIG, EXIT_TOLERANCE, EXIT_BUDGET = 0, 2, 3, 4

# keys excluded from the config digest: they do not change numeric outputs
_PLUMBING = {"command", "out", "config", "threads"}


def _floats(text):
    return [float(v) for v in str(text).replace(",", " ").split()]


def _float_list(text):
    try:
        return _floats(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def _add_physics(p, delta=True, B=True):
    if B:
        p.add_argument("--B", type=float, help="magnetic field intensity (required)")
    p.add_argument("--gamma", type=float, help="noise strength (required)")
    if delta:
        p.add_argument("--delta", type=float, help="field scaling exponent (required)")


def _add_mc(p):
    p.add_argument("--N", type=_float_list, help="scaling parameter(s), comma separated")
    p.add_argument("--M", type=int, help="ensemble size")
    p.add_argument("--t", type=float, help="macroscopic time")
    p.add_argument("--normalization", choices=lc.NORMALIZATIONS)
    p.add_argument("--exact", action="store_true", default=None,
                   help="simulate every jump instead of aggregating bulk runs")
    p.add_argument("--flight-prefactor", dest="flight_prefactor", type=float,
                   help="factor in front of the velocity integral (default 1/(2 pi))")


def build_parser():
    parser = argparse.ArgumentParser(prog="chainlevy", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="INI file; section [common] and one per subcommand")
    common.add_argument("--out", help=f"output directory (default ${OUTPUT_ENV})")
    common.add_argument("--seed", type=int, help="master seed")
    common.add_argument("--threads", type=int, default=1,
                        help="worker count; results do not depend on it")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("spectral-table", parents=[common], help="dispersion and rates on a k grid")
    _add_physics(p, delta=False)
    p.add_argument("--n-k", dest="n_k", type=int, help="grid points in (0, 1/2)")

    p = sub.add_parser("tails", parents=[common], help="scaled flight tails and their limit")
    _add_physics(p)
    p.add_argument("--N", type=_float_list, help="increasing N values, comma separated")
    p.add_argument("--r", type=_float_list, help="levels r > 0")
    p.add_argument("--normalization", choices=lc.NORMALIZATIONS)

    p = sub.add_parser("levy-exponent", parents=[common], help="limit exponent on a theta grid")
    _add_physics(p)
    p.add_argument("--theta", type=_float_list, help="theta values")
    p.add_argument("--normalization", choices=lc.NORMALIZATIONS)

    p = sub.add_parser("pde-limit", parents=[common], help="B -> 0 or B -> inf limit study")
    _add_physics(p, delta=False, B=False)
    p.add_argument("--limit", choices=("zero", "infinity"))
    p.add_argument("--B-sequence", dest="B_sequence", type=_float_list)
    p.add_argument("--n-points", dest="n_points", type=int)
    p.add_argument("--L", type=float, help="half-width of the periodic domain")
    p.add_argument("--t-max", dest="t_max", type=float)
    p.add_argument("--n-t", dest="n_t", type=int)
    p.add_argument("--normalization", choices=lc.NORMALIZATIONS)

    p = sub.add_parser("mc-charfn", parents=[common], help="characteristic functions of the scaled process")
    _add_physics(p)
    _add_mc(p)
    p.add_argument("--theta", type=_float_list)

    p = sub.add_parser("mc-clock", parents=[common], help="law of large numbers for the clock")
    _add_physics(p)
    _add_mc(p)
    p.add_argument("--eps", type=float, help="exceedance threshold")

    p = sub.add_parser("mc-hydro", parents=[common], help="Dynkin estimate of the kinetic solution")
    _add_physics(p)
    _add_mc(p)
    p.add_argument("--u", type=float, help="macroscopic position")
    p.add_argument("--k-grid", dest="k_grid", type=int, help="odd k grid size for the discrepancy")

    p = sub.add_parser("verify-all", parents=[common], help="run every acceptance criterion")
    p.add_argument("--quick", action="store_true", default=None,
                   help="smaller Monte-Carlo ensembles (not the acceptance budget)")
    return parser


DEFAULTS = {
    "seed": 0,
    "n_k": 101,
    "r": [0.5, 1.0, 2.0],
    "normalization": "model",
    "theta": [0.5, 1.0, 2.0],
    "limit": "zero",
    "n_points": 2 ** 14,
    "L": 64.0,
    "t_max": 1.0,
    "n_t": 21,
    "M": 10_000,
    "t": 1.0,
    "exact": False,
    "eps": 0.1,
    "u": 0.0,
    "k_grid": 0,
    "quick": False,
    "flight_prefactor": 1.0 / (2.0 * np.pi),
}

_LIST_KEYS = {"N", "r", "theta", "B_sequence"}
_INT_KEYS = {"seed", "n_k", "n_points", "n_t", "M", "k_grid"}
_BOOL_KEYS = {"exact", "quick"}
_STR_KEYS = {"normalization", "limit"}


def _coerce(key, text):
    try:
        if key in _LIST_KEYS:
            return _floats(text)
        if key in _INT_KEYS:
            return int(float(text))
        if key in _BOOL_KEYS:
            return str(text).strip().lower() in ("1", "true", "yes", "on")
        if key in _STR_KEYS:
            return str(text).strip()
        return float(text)
    except ValueError as exc:
        raise ConfigError(f"bad value for {key!r}: {text!r}") from exc


def _load_config(path, command):
    if not os.path.isfile(path):
        raise ConfigError(f"config file not found: {path}")
    cp = configparser.ConfigParser()
    cp.optionxform = str
    try:
        cp.read(path)
    except configparser.Error as exc:
        raise ConfigError(f"unreadable config {path}: {exc}") from exc
    out = {}
    for section in ("common", command):
        if cp.has_section(section):
            for key, val in cp.items(section):
                out[key.replace("-", "_")] = _coerce(key.replace("-", "_"), val)
    return out


def resolve(args):
    """Merge command line, config file and defaults (in that priority)."""
    vals = dict(vars(args))
    if args.config:
        for key, val in _load_config(args.config, args.command).items():
            if key not in vals:
                raise ConfigError(f"unknown key {key!r} for {args.command}")
            if vals[key] is None:
                vals[key] = val
    for key, val in DEFAULTS.items():
        if key in vals and vals[key] is None:
            vals[key] = val
    for key in ("B", "gamma", "delta"):
        if key in vals and vals[key] is None:
            raise ConfigError(f"--{key} is required (no default for physical parameters)")
    if args.command in ("tails", "mc-charfn", "mc-clock", "mc-hydro") and not vals.get("N"):
        raise ConfigError("--N is required")
    if args.command == "pde-limit" and not vals.get("B_sequence"):
        vals["B_sequence"] = ([1.0, 1e-1, 1e-2, 1e-3, 1e-4] if vals["limit"] == "zero"
                              else [1.0, 1e1, 1e2, 1e3, 1e4])
    if vals.get("threads") is not None and vals["threads"] < 1:
        raise ConfigError("--threads must be >= 1")
    return vals


def digest(vals):
    """SHA-256 of the canonical JSON of every key that affects outputs."""
    keep = {k: v for k, v in vals.items() if k not in _PLUMBING}
    text = json.dumps(keep, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode()).hexdigest()


def _csv(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])
    return buf.getvalue()


def _json(obj):
    def default(o):
        if isinstance(o, (np.floating, np.integer, np.bool_)):
            return o.item()
        if isinstance(o, np.ndarray):
            return o.tolist()
        raise TypeError(f"cannot serialize {type(o)}")
    return json.dumps(obj, sort_keys=True, indent=1, default=default) + "\n"


# ------------------------------------------------------------------ commands

def cmd_spectral_table(v):
    P = SpectralParams(v["B"], v["gamma"])
    k = (np.arange(v["n_k"]) + 0.5) / (2.0 * v["n_k"])
    cols = [k, sp.omega(P, k, 1), sp.omega(P, k, 2), sp.theta_sq(P, k, 1), sp.theta_sq(P, k, 2),
            sp.group_velocity(P, k), sp.lambda_holding(P, k, 1), sp.lambda_holding(P, k, 2),
            sp.psi_flight(P, k, 1), sp.psi_flight(P, k, 2), sp.pi_density(P, k, 1),
            sp.pi_density(P, k, 2)]
    header = ("k", "omega1", "omega2", "theta1_sq", "theta2_sq", "v", "lambda1", "lambda2",
              "psi1", "psi2", "pi1", "pi2")
    rows = [[float(c[j]) for c in cols] for j in range(k.size)]
    return {"spectral_table.csv": _csv(header, rows)}, True


def cmd_tails(v):
    P = SpectralParams(v["B"], v["gamma"])
    rep = ta.scaled_tail_limit(P, v["delta"], v["r"], v["N"], v["normalization"])
    return {"tails.csv": rep.to_csv()}, True


def cmd_levy_exponent(v):
    spec = lc.levy_measure(lc.regime_of(v["delta"]), v["B"], v["gamma"], v["normalization"])
    ex = lc.levy_exponent(spec)
    th = np.asarray(v["theta"], dtype=float)
    rows = [(float(a), float(b)) for a, b in zip(th, ex.evaluate(th))]
    return {"levy_exponent.csv": _csv(("theta", "phi"), rows)}, True


def cmd_pde_limit(v):
    prof = fp.init_profile("mollifier", L=v["L"], n_points=v["n_points"])
    t = np.linspace(0.0, v["t_max"], v["n_t"])
    res = fp.interpolation_limit_study(v["B_sequence"], v["gamma"], prof, t, v["limit"],
                                       v["normalization"])
    rows = [(r["B"], r["l2"], r["l2_rel"], r["l1"], r["l1_rel"]) for r in res["rows"]]
    ok = res["monotone"] and res["rows"][-1]["l2_rel"] <= 0.02
    return {"pde_limit.csv": _csv(("B", "l2", "l2_rel", "l1", "l1_rel"), rows),
            "pde_limit.json": _json(res)}, ok


def _exp_config(v, **extra):
    return ExperimentConfig(v["B"], v["gamma"], v["delta"], v["N"], t=v["t"], M=v["M"],
                            seed=v["seed"], normalization=v["normalization"],
                            exact=v["exact"], flight_prefactor=v["flight_prefactor"], **extra)


def _report_files(stem, rep):
    return {f"{stem}.csv": rep.to_csv(), f"{stem}.json": rep.to_json() + "\n"}, rep.passed


def cmd_mc_charfn(v):
    return _report_files("mc_charfn", charfn_convergence(_exp_config(v, thetas=v["theta"])))


def cmd_mc_clock(v):
    return _report_files("mc_clock", clock_convergence(_exp_config(v, clock_eps=v["eps"])))


def cmd_mc_hydro(v):
    return _report_files("mc_hydro", hydro_limit_f(_exp_config(v, u=v["u"], k_grid=v["k_grid"])))


def cmd_verify_all(v):
    results = acceptance.run_all(seed=v["seed"], quick=v["quick"])
    files = {}
    for res in results:
        print(res.line(), flush=True)
        if res.number == 5:
            print("    informational, model constants: "
                  + json.dumps(res.info, default=float), flush=True)
        files[f"criterion_{res.number:02d}.json"] = _json({
            "number": res.number, "title": res.title, "passed": res.ok,
            "runtime": res.runtime, "budget": res.budget,
            "details": res.details, "info": res.info})
    summary = [(r.number, r.title, r.ok) for r in results]
    files["verify_all.csv"] = _csv(("criterion", "title", "passed"), summary)
    return files, all(r.ok for r in results)


COMMANDS = {
    "spectral-table": cmd_spectral_table,
    "tails": cmd_tails,
    "levy-exponent": cmd_levy_exponent,
    "pde-limit": cmd_pde_limit,
    "mc-charfn": cmd_mc_charfn,
    "mc-clock": cmd_mc_clock,
    "mc-hydro": cmd_mc_hydro,
    "verify-all": cmd_verify_all,
}


def _now():
    return datetime.datetime.now(datetime.timezone.utc).isoformat()


def _write_outputs(out_dir, command, vals, files, started, passed):
    os.makedirs(out_dir, exist_ok=True)
    listing = []
    for name in sorted(files):
        data = files[name].encode()
        with open(os.path.join(out_dir, name), "wb") as fh:
            fh.write(data)
        listing.append({"file": name, "sha256": hashlib.sha256(data).hexdigest()})
    manifest = {"subcommand": command, "config_digest": digest(vals), "seed": vals.get("seed"),
                "version": __version__, "started": started, "finished": _now(),
                "passed": bool(passed), "outputs": listing,
                "config": {k: v for k, v in vals.items() if k not in _PLUMBING}}
    with open(os.path.join(out_dir, "manifest.json"), "w") as fh:
        fh.write(_json(manifest))
    return manifest


def run(argv=None):
    """Parse ``argv``, run one subcommand and return its exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    started = _now()
    try:
        vals = resolve(args)
        files, passed = COMMANDS[args.command](vals)
        out_dir = vals.get("out") or os.environ.get(OUTPUT_ENV) or "chainlevy_output"
        _write_outputs(out_dir, args.command, vals, files, started, passed)
    except (ConfigError, DegenerateInputError, ValueError) as exc:
        print(f"chainlevy: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except BudgetError as exc:
        print(f"chainlevy: simulation budget exceeded: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except (ToleranceFailure, QuadratureError, NonConvergenceError, ChainLevyError) as exc:
        print(f"chainlevy: numerical failure: {exc}", file=sys.stderr)
        return EXIT_TOLERANCE
    if not passed:
        print(f"chainlevy: {args.command} finished but a tolerance check failed; "
              f"see {out_dir}", file=sys.stderr)
        return EXIT_TOLERANCE
    return EXIT_OK


def main():
    sys.exit(run())
