"""Command line interface: ``yuletree <command> [options]``.

Every command accepts ``--config FILE`` with ``key=value`` lines whose keys
are option names (``rate=2``, ``max_segments=1000``); options given on the
command line win over the file.
"""

import argparse
import csv
import sys
import warnings

import numpy as np

from . import acceptance, branch, experiments, fe, stats, tree


def _floats(text):
    return tuple(float(v) for v in text.split(",") if v.strip())


# option name -> (type, default); defaults are applied after the config file
COMMON = {
    "dim": (int, 2), "rate": (float, 1.0), "horizon": (float, 1.0), "trials": (int, 1000),
    "seed": (int, 0), "out": (str, "-"),
}

COMMANDS = {
    "simulate": ("grow one tree and write its segments",
                 {"max_segments": (int, tree.DEFAULT_MAX_SEGMENTS)}),
    "branch": ("sample one branch and write its breakpoints",
               {"sequential": (bool, False)}),
    "radius-survey": ("trial summaries over a grid of rates and horizons",
                      {"rates": (_floats, None), "horizons": (_floats, None),
                       "max_segments": (int, tree.DEFAULT_MAX_SEGMENTS)}),
    "connect-mc": ("Monte Carlo hit probability of a closed ball",
                   {"r": (float, 0.2), "d": (float, 0.3)}),
    "solve-fe": ("solve the planar miss-probability equation",
                 {"r": (float, 0.3), "tmax": (float, 2.0), "dmax": (float, None),
                  "dt": (float, 0.025), "dd": (float, None), "nalpha": (int, 32),
                  "ns": (int, 32), "sweeps": (int, 0)}),
    "run": ("run one experiment kind and write its CSVs",
            {"kind": (str, None)}),
    "check": ("run the acceptance suite; exit status 1 on any failure",
              {"scale": (float, 1.0), "only": (str, None)}),
}


def build_parser():
    p = argparse.ArgumentParser(prog="yuletree", description="Yule tree simulation toolkit.")
    sub = p.add_subparsers(dest="command", required=True)
    for name, (help_, extra) in COMMANDS.items():
        sp = sub.add_parser(name, help=help_, description=help_)
        sp.add_argument("--config", help="key=value file with option defaults")
        for opt, (typ, _) in {**COMMON, **extra}.items():
            flag = "--" + opt.replace("_", "-")
            if typ is bool:
                sp.add_argument(flag, dest=opt, action="store_const", const=True, default=None)
            else:
                sp.add_argument(flag, dest=opt, type=typ, default=None)
    return p


def resolve(args):
    """Fill unset options from ``--config`` and then from built-in defaults."""
    spec = {**COMMON, **COMMANDS[args.command][1]}
    cfg = experiments.load_config(args.config) if args.config else {}
    extra = {}
    for key, raw in cfg.items():
        opt = key.replace("-", "_")
        if opt not in spec:
            extra[opt] = raw
            continue
        if getattr(args, opt) is None:
            typ = spec[opt][0]
            val = raw.lower() in ("1", "true", "yes") if typ is bool else typ(raw)
            setattr(args, opt, val)
    for opt, (_, default) in spec.items():
        if getattr(args, opt) is None:
            setattr(args, opt, default)
    args.extra = extra
    return args


def _open_out(path):
    if path in ("-", ""):
        return sys.stdout, False
    try:
        return open(path, "w", newline=""), True
    except OSError as exc:
        raise SystemExit(f"cannot open {path}: {exc}") from exc


def _warn_budget(config):
    if config.over_budget():
        warnings.warn(f"expected segment count 2e^(rate*t) - 1 = {config.expected_segments:.3g} "
                      f"exceeds the cap {config.max_segments}; trials may fail", stacklevel=2)


def cmd_simulate(a):
    cfg = tree.SimConfig(a.dim, a.rate, a.horizon, a.seed, a.max_segments)
    _warn_budget(cfg)
    t = tree.grow(cfg, tree.trial_rng(a.seed, 0))
    t.to_csv(sys.stdout if a.out in ("-", "") else a.out)
    print(f"segments={len(t)} leaves={t.leaf_count} radius={t.radius:.6g} "
          f"length={t.total_length:.6g}", file=sys.stderr)
    return 0


def cmd_branch(a):
    rng = tree.trial_rng(a.seed, 0)
    grow_ = branch.grow_branch_sequential if a.sequential else branch.grow_branch
    path = grow_(a.rate, a.horizon, rng, a.dim)
    path.to_csv(sys.stdout if a.out in ("-", "") else a.out)
    print(f"turns={path.n_turns} max_displacement={branch.max_displacement(path):.6g}", file=sys.stderr)
    return 0


def cmd_radius_survey(a):
    rates = a.rates or (a.rate,)
    horizons = a.horizons or (a.horizon,)
    fh, close = _open_out(a.out)
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["rate", "horizon", "trial", "seed", "radius", "total_length", "leaf_count",
                    "branch_points"])
        for i, lam in enumerate(rates):
            for j, t in enumerate(horizons):
                seed = tree.child_seed(a.seed, i * len(horizons) + j)
                cfg = tree.SimConfig(a.dim, lam, t, seed, a.max_segments)
                _warn_budget(cfg)
                b = tree.run_trials(cfg, a.trials)
                for s in b.summaries:
                    w.writerow([repr(lam), repr(t), s.trial, s.seed, repr(s.radius),
                                repr(s.total_length), s.leaf_count, s.branch_point_count])
                if b.failed:
                    print(f"rate={lam:g} horizon={t:g}: {len(b.failed)} trials over budget",
                          file=sys.stderr)
    finally:
        if close:
            fh.close()
    return 0


def cmd_connect_mc(a):
    x = np.zeros(a.dim)
    x[0] = a.d
    cfg = tree.SimConfig(a.dim, a.rate, a.horizon, a.seed)
    _warn_budget(cfg)
    b = tree.run_trials(cfg, a.trials, [(x, a.r)])
    if a.out not in ("-", ""):
        b.to_csv(a.out)
    k = int(b.hits(0).sum())
    lo, hi = stats.wilson_interval(k, len(b))
    print(f"p_hit={k / len(b):.6f} wilson3sigma=[{lo:.6f}, {hi:.6f}] trials={len(b)} "
          f"failed={len(b.failed)}")
    return 0


def cmd_solve_fe(a):
    dd = a.dd or a.dt
    dmax = a.dmax or fe.default_d_max(a.tmax, a.r, dd)
    try:
        g = fe.solve(a.rate, a.r, a.tmax, dmax, a.dt, dd, a.nalpha, a.ns, a.sweeps)
    except fe.GridExtentError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    g.to_csv(sys.stdout if a.out in ("-", "") else a.out)
    return 0


def cmd_run(a):
    if not a.kind:
        raise SystemExit("run needs --kind or kind= in the config file")
    mapping = dict(a.extra)
    mapping.update(kind=a.kind, trials=a.trials, seed=a.seed,
                   out="" if a.out == "-" else a.out)
    for opt in ("dim", "rate", "horizon"):
        if opt in experiments.DEFAULTS[a.kind] and opt not in mapping:
            mapping[opt] = getattr(a, opt)
    cfg = experiments.ExperimentConfig.from_mapping(mapping)
    reports = experiments.run_experiment(cfg)
    for r in reports:
        print(r.line())
    return 0 if all(r.passed for r in reports) else 1


def cmd_check(a):
    out = "" if a.out == "-" else a.out
    if a.only:
        nums = [int(v) for v in a.only.split(",")]
        results = []
        for n in nums:
            res = acceptance.run_criterion(n, a.seed or 20240601, out, a.scale)
            for r in res.reports:
                print("    " + r.line())
            print(res.line())
            results.append(res)
    else:
        results = acceptance.run_all(a.seed or 20240601, out, a.scale)
    bad = [r.number for r in results if not r.passed]
    print(f"{len(results) - len(bad)}/{len(results)} criteria passed")
    return 1 if bad else 0


HANDLERS = {
    "simulate": cmd_simulate, "branch": cmd_branch, "radius-survey": cmd_radius_survey,
    "connect-mc": cmd_connect_mc, "solve-fe": cmd_solve_fe, "run": cmd_run, "check": cmd_check,
}


def main(argv=None):
    args = resolve(build_parser().parse_args(argv))
    try:
        return HANDLERS[args.command](args)
    except (ValueError, tree.BudgetExceeded) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
