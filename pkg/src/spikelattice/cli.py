"""Command-line entry point.

Subcommands cover extinction sampling, the exact finite-window oracle,
the three experiment studies, the analytic contour bound, and the
verification suites.  Runs are reproducible: the effective config
(flags over config file over defaults) is recorded in a JSON manifest
written before any computation starts and finalized with outcome
counts, and CSV payloads are byte-identical across replays of the same
config.

Config file grammar: one `key = value` pair per line, keys matching the
long flag names with dashes replaced by underscores; blank lines and
lines starting with `#` are ignored.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from . import ctmc, experiments, graphical
from .gillespie import SimSpec, sample_batch
from .model import Configuration, RateParams, Window, all_one

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_SUITE_FAILED = 2


class _Parser(argparse.ArgumentParser):
    """argparse exits 2 on bad usage; the contract here is exit 1."""

    def error(self, message):
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _comma_ints(text: str) -> list[int]:
    return [int(x) for x in text.split(",") if x]


def _comma_floats(text: str) -> list[float]:
    return [float(x) for x in text.split(",") if x]


def read_config(path: str) -> dict[str, str]:
    conf = {}
    with open(path) as f:
        for lineno, line in enumerate(f, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected key = value")
            key, _, val = line.partition("=")
            conf[key.strip().replace("-", "_")] = val.strip()
    return conf


def _apply_config(parser: argparse.ArgumentParser, conf: dict[str, str]):
    """Install config-file values as defaults, keeping flag precedence."""
    known = {a.dest: a for a in parser._actions}
    for key, raw in conf.items():
        if key not in known:
            raise ValueError(f"unknown config key {key!r}")
        action = known[key]
        action.default = action.type(raw) if action.type else raw
        action.required = False


def _outdir(args) -> str:
    os.makedirs(args.out, exist_ok=True)
    return args.out


def _manifest(args, extra=None, counts=None):
    config = {k: v for k, v in vars(args).items()
              if k not in ("func", "config") and not callable(v)}
    if extra:
        config.update(extra)
    experiments.write_manifest(os.path.join(args.out, "manifest.json"),
                               config, args.seed, counts)


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_simulate(args) -> int:
    win = Window.finite(-args.n, args.n)
    spec = SimSpec(all_one(win), RateParams(args.gamma), args.seed,
                   args.replicas, args.horizon)
    _outdir(args)
    _manifest(args)
    samples = sample_batch(spec, args.workers)
    rows = [(r, s.tau, int(s.censored), s.n_spikes, s.n_leaks)
            for r, s in enumerate(samples)]
    experiments.write_csv(
        os.path.join(args.out, "samples.csv"),
        ["replica", "tau", "censored", "n_spikes", "n_leaks"], rows)
    censored = sum(s.censored for s in samples)
    _manifest(args, counts={"replicas": args.replicas,
                            "censored": censored})
    print(f"wrote {len(rows)} samples ({censored} censored) "
          f"to {args.out}/samples.csv")
    return EXIT_OK


def cmd_exact(args) -> int:
    model = ctmc.build(args.n, RateParams(args.gamma))
    full = model.n_states - 1
    mean = ctmc.mean_extinction(model)[full]
    print(f"mean tau (all-one, N={args.n}, gamma={args.gamma:g}): "
          f"{mean:.12g}")
    for t in args.t:
        p, bound = ctmc.survival_detailed(model, full, t)
        print(f"P(tau > {t:g}) = {p:.12g}  (truncation bound {bound:.2e})")
    if args.beta:
        print(f"beta = {ctmc.beta_exact(model, full):.12g}")
    return EXIT_OK


def cmd_metastability(args) -> int:
    _outdir(args)
    _manifest(args)
    rows = experiments.metastability(args.gamma, args.n_list,
                                     args.replicas, args.seed,
                                     args.horizon, args.workers)
    experiments.write_csv(
        os.path.join(args.out, "metastability.csv"),
        ["N", "gamma", "replicas", "mean_tau", "se_mean", "beta_hat",
         "se_beta", "ks_d", "ks_p", "ratio", "censored"],
        [(r.N, r.gamma, r.replicas, r.mean_tau, r.se_mean, r.beta_hat,
          r.se_beta, r.ks_d, r.ks_p, r.ratio, r.censored) for r in rows])
    _manifest(args, counts={"censored": sum(r.censored for r in rows)})
    for r in rows:
        print(f"N={r.N} mean_tau={r.mean_tau:.6g} beta={r.beta_hat:.6g} "
              f"ks_d={r.ks_d:.4f} ks_p={r.ks_p:.4f} ratio={r.ratio:.4f} "
              f"max_memoryless_defect={r.max_defect:.4f}")
    return EXIT_OK


def cmd_density(args) -> int:
    _outdir(args)
    _manifest(args)
    d = experiments.density(args.gamma, args.t, args.m, args.replicas,
                            args.seed)
    experiments.write_csv(
        os.path.join(args.out, "density.csv"),
        ["gamma", "T", "M", "rho_dual", "se_dual", "rho_spatial",
         "se_spatial", "contamination"],
        [(d.gamma, d.T, d.M, d.rho_dual, d.se_dual, d.rho_spatial,
          d.se_spatial, d.contamination)])
    _manifest(args, counts={"reliable": int(d.reliable)})
    tag = "" if d.reliable else "  [UNRELIABLE: contamination > 1e-2]"
    print(f"rho_dual={d.rho_dual:.6g}+-{d.se_dual:.2g} "
          f"rho_spatial={d.rho_spatial:.6g}+-{d.se_spatial:.2g} "
          f"contamination={d.contamination:.3g}{tag}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    _outdir(args)
    _manifest(args)
    res = experiments.sweep(args.gammas, args.t, args.m, args.replicas,
                            args.seed)
    experiments.write_csv(
        os.path.join(args.out, "sweep.csv"),
        ["gamma", "survival_full", "se_full", "survival_half", "se_half"],
        [(r.gamma, r.survival_full, r.se_full, r.survival_half, r.se_half)
         for r in res.rows])
    _manifest(args, counts={"grid_points": len(res.rows)})
    for r in res.rows:
        print(f"gamma={r.gamma:g} full={r.survival_full:.4f} "
              f"half={r.survival_half:.4f}")
    if res.gamma_hat is not None:
        print(f"crossing estimate gamma_hat={res.gamma_hat:.4g} "
              "(descriptive diagnostic only)")
    return EXIT_OK


def cmd_bound(args) -> int:
    print(f"{experiments.contour_bound(args.gamma):.12g}")
    return EXIT_OK


def cmd_verify(args) -> int:
    if args.suite == "lemmas":
        rep = experiments.lemma_suite(args.gamma, args.sites, args.reps,
                                      args.seed)
        for o in rep.outcomes:
            status = "pass" if o.passed else "FAIL"
            print(f"{o.name}: {status} ({o.violations} violations / "
                  f"{o.checks} checks, {o.inconclusive} inconclusive)")
        return EXIT_OK if rep.all_passed else EXIT_SUITE_FAILED
    win = Window.finite(0, args.sites - 1)
    params = RateParams(args.gamma)
    t = args.horizon
    bad = 0
    for r in range(args.reps):
        g = graphical.generate(win, params, t,
                               experiments._subseed(args.seed, r))
        if args.suite == "duality":
            rg = graphical.reverse(g, t)
            for i in win.sites():
                fwd = graphical.evolve(
                    g, Configuration(frozenset([i]), win), t)
                for j in win.sites():
                    dual = graphical.evolve_dual(
                        rg, Configuration(frozenset([j]), win), t)
                    if (j in fwd) != (i in dual):
                        bad += 1
        else:  # graphical: sweep against the explicit path oracle
            for i in win.sites():
                fwd = graphical.evolve(
                    g, Configuration(frozenset([i]), win), t)
                for j in win.sites():
                    q = graphical.PathQuery(i, 0.0, j, t)
                    if graphical.reach(g, q, "forward") != (j in fwd):
                        bad += 1
    print(f"{args.suite} suite: {bad} violations over {args.reps} "
          "realizations")
    return EXIT_OK if bad == 0 else EXIT_SUITE_FAILED


# ---------------------------------------------------------------------------
# parser wiring
# ---------------------------------------------------------------------------

def build_parser() -> _Parser:
    parser = _Parser(prog="spikelattice",
                     description="Simulation toolkit for a spiking "
                                 "lattice particle system with leak "
                                 "rate gamma.")
    parser.add_argument("--config", help="key = value config file; "
                                         "flags take precedence")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, out=True):
        p.add_argument("--seed", type=int, default=0)
        if out:
            p.add_argument("--out", default="out",
                           help="output directory for CSV and manifest")

    p = sub.add_parser("simulate", help="extinction-time sampling")
    p.add_argument("--n", type=int, required=True,
                   help="window half-width: sites -n..n")
    p.add_argument("--gamma", type=float, required=True)
    p.add_argument("--replicas", type=int, default=1000)
    p.add_argument("--horizon", type=float, default=1e6)
    p.add_argument("--workers", type=int, default=None)
    common(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("exact", help="exact finite-window oracle")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--gamma", type=float, required=True)
    p.add_argument("--t", type=_comma_floats, default=[],
                   help="survival query times, comma separated")
    p.add_argument("--beta", action="store_true",
                   help="also solve for the e^{-1} survival time")
    p.set_defaults(func=cmd_exact)

    p = sub.add_parser("metastability", help="extinction-time scaling")
    p.add_argument("--gamma", type=float, required=True)
    p.add_argument("--n-list", type=_comma_ints, required=True,
                   help="window half-widths, comma separated")
    p.add_argument("--replicas", type=int, default=10000)
    p.add_argument("--horizon", type=float, default=1e6)
    p.add_argument("--workers", type=int, default=None)
    common(p)
    p.set_defaults(func=cmd_metastability)

    p = sub.add_parser("density", help="invariant-density estimators")
    p.add_argument("--gamma", type=float, required=True)
    p.add_argument("--t", type=float, default=50.0)
    p.add_argument("--m", type=int, default=400,
                   help="truncation half-width of the line proxy")
    p.add_argument("--replicas", type=int, default=10000)
    common(p)
    p.set_defaults(func=cmd_density)

    p = sub.add_parser("sweep", help="survival proxies along a gamma grid")
    p.add_argument("--gammas", type=_comma_floats,
                   default=[0.02, 0.05, 0.1, 0.2, 0.5, 1.0, 2.0])
    p.add_argument("--t", type=float, default=50.0)
    p.add_argument("--m", type=int, default=200)
    p.add_argument("--replicas", type=int, default=2000)
    common(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("bound", help="analytic contour bound")
    p.add_argument("--gamma", type=float, required=True)
    p.set_defaults(func=cmd_bound)

    p = sub.add_parser("verify", help="property verification suites")
    p.add_argument("--suite", choices=("duality", "graphical", "lemmas"),
                   required=True)
    p.add_argument("--sites", type=int, default=5)
    p.add_argument("--reps", type=int, default=1000)
    p.add_argument("--gamma", type=float, default=0.5)
    p.add_argument("--horizon", type=float, default=2.0)
    common(p, out=False)
    p.set_defaults(func=cmd_verify)

    return parser


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    # peel off --config first so its values become subcommand defaults
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    try:
        if known.config:
            conf = read_config(known.config)
            subs = parser._subparsers._group_actions[0].choices.values()
            all_dests = {a.dest for s in subs for a in s._actions}
            for key in conf:
                if key not in all_dests:
                    raise ValueError(f"unknown config key {key!r}")
            for action in subs:
                sub_conf = {k: v for k, v in conf.items()
                            if k in {a.dest for a in action._actions}}
                _apply_config(action, sub_conf)
        args = parser.parse_args(argv)
        return args.func(args)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    except (ValueError, OSError, ArithmeticError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
