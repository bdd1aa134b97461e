"""Command-line frontend.

Exit codes: 0 success or pass, 1 a check failed, 2 usage or config error.
The only environment variable read is EXTFOCK_REPORT_PATH (report path override).
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from fractions import Fraction

from . import altdress, sacheck
from .config import PRESETS, TABLE_PRESETS, ConfigError, Config, load_config, load_preset
from .renormalize import pullback_full
from .symgrammar import GrammarError

REPORT_ENV = "EXTFOCK_REPORT_PATH"

ORACLE_CHECKS = ("overlap", "pullthrough", "commutator", "pullback", "ibc", "glimm")

# per-check grid defaults: (modes, n_max, sigma, lambda)
ORACLE_GRIDS = {
    "overlap": (8, 10, 0.1, 2.0),
    "pullthrough": (4, 8, 0.1, 2.0),
    "commutator": (4, 5, 0.25, 1.25),
    "pullback": (4, 6, 0.5, 2.0),
    "ibc": (6, 8, 0.1, 2.0),
    "glimm": (6, 8, 0.1, 2.0),
}
ORACLE_MODELS = {"pullback": "nelson-cutoff", "ibc": "nelson-ibc", "glimm": "nelson-ibc"}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _fraction(text):
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a rational number: {text!r}")


def _span(text):
    try:
        lo, hi = text.split(":")
        return Fraction(lo), Fraction(hi)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected lo:hi, got {text!r}")


def build_parser():
    p = _Parser(prog="extfock", description="Extended Fock-space renormalization toolkit.")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    def out_opts(q, default_fmt):
        q.add_argument("--format", choices=("json", "csv"), default=None,
                       help=f"report format (default {default_fmt})")
        q.add_argument("--output", "-o", default=None, help="write the report here instead of stdout")

    q = sub.add_parser("classify", help="self-adjointness verdict of a model")
    q.add_argument("--model", required=True, help="config file or preset name")
    out_opts(q, "json")

    q = sub.add_parser("table", help="scaling-degree tables")
    q.add_argument("--presets", default="all", help="all, " + ", ".join(TABLE_PRESETS))
    out_opts(q, "csv")

    q = sub.add_parser("region", help="verdict over a (beta_V, m_V) grid")
    q.add_argument("--m-theta", type=int, choices=(1, 2), default=2)
    q.add_argument("--d", type=_span, default=(Fraction(1), Fraction(3)), help="lo:hi")
    q.add_argument("--resolution", type=_fraction, default=Fraction(1, 2))
    q.add_argument("--beta-range", type=_span, default=(Fraction(-4), Fraction(2)))
    q.add_argument("--m-range", type=_span, default=(Fraction(-4), Fraction(2)))
    out_opts(q, "csv")

    q = sub.add_parser("pullback", help="renormalized Hamiltonian and divergence ledger")
    q.add_argument("--model", required=True)
    q.add_argument("--ncheck", type=int, default=3, help="sector depth of the mass-term check")
    out_opts(q, "json")

    q = sub.add_parser("oracle", help="numerical checks on a truncated Fock space")
    q.add_argument("check", choices=ORACLE_CHECKS)
    q.add_argument("--model", default=None, help="config file or preset (pullback, ibc, glimm)")
    q.add_argument("--nmax", type=int, default=None, help="boson truncation N_max")
    q.add_argument("--modes", type=int, default=None, help="grid modes (even, d = 1)")
    q.add_argument("--sigma", type=float, default=None, help="IR end of the grid window")
    q.add_argument("--lambda", dest="lam", type=float, default=None, help="UV end of the grid window")
    q.add_argument("--M", type=int, choices=(1, 2), default=2, help="fermions (commutator check)")
    q.add_argument("--seed", type=int, default=0)
    q.add_argument("--pairs", type=int, default=20, help="random pairs (overlap check)")
    q.add_argument("--backend", choices=("cython", "python"), default=None,
                   help="kernel backend (default: compiled when built)")
    out_opts(q, "json")

    q = sub.add_parser("ibc", help="S*S + T decomposition for the IBC dressing")
    q.add_argument("--model", required=True)
    out_opts(q, "json")

    q = sub.add_parser("glimm", help="Glimm transform on symbolic sectors")
    q.add_argument("--model", required=True)
    q.add_argument("--nmax", type=int, default=3)
    out_opts(q, "json")
    return p


# ------------------------------------------------------------ helpers

def _config(name) -> Config:
    return load_config(name)


def _emit(args, cfg: Config | None, payload, default_fmt="json"):
    fmt = args.format or (cfg.output["format"] if cfg else default_fmt)
    if fmt == "csv" and not isinstance(payload, str):
        raise UsageError("this report is only available as json")
    text = payload if isinstance(payload, str) else json.dumps(payload, indent=2) + "\n"
    path = os.environ.get(REPORT_ENV) or args.output or (cfg.output.get("path") if cfg else "")
    if path:
        with open(path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _models(which):
    if which == "all":
        groups = list(TABLE_PRESETS.items())
    elif which in TABLE_PRESETS:
        groups = [(which, TABLE_PRESETS[which])]
    else:
        raise UsageError(f"--presets must be all or one of {', '.join(TABLE_PRESETS)}")
    return [(title, [load_preset(n).model for n in names]) for title, names in groups]


# ------------------------------------------------------------ commands

def cmd_classify(args):
    cfg = _config(args.model)
    v = sacheck.classify(cfg.model)
    out = {"model": cfg.model.to_dict(), **v.to_dict()}
    _emit(args, cfg, out)
    return 0


def cmd_table(args):
    tables = [(t, sacheck.model_table(ms)) for t, ms in _models(args.presets)]
    if (args.format or "csv") == "csv":
        _emit(args, None, sacheck.table_csv(tables), "csv")
    else:
        _emit(args, None, {t: [{"model": r.name, **{k: str(x) for k, x in r.as_dict().items()}}
                               for r in rows] for t, rows in tables})
    return 0


def cmd_region(args):
    rows = sacheck.region_grid(args.d, args.m_theta, args.resolution, args.beta_range, args.m_range)
    if (args.format or "csv") == "csv":
        _emit(args, None, sacheck.region_csv(rows), "csv")
    else:
        _emit(args, None, [{"d": d, "beta_V": str(b), "m_V": str(m), "verdict": v} for d, b, m, v in rows])
    return 0


def cmd_pullback(args):
    cfg = _config(args.model)
    res = pullback_full(cfg.model, N_check=args.ncheck)
    _emit(args, cfg, res.to_dict())
    return 0 if (res.residual_zero and res.ledger_closed and res.delta_m_ok) else 1


def _grid_for(args, check, cfg):
    from .oracle import GridSpec
    modes, nmax, sigma, lam = ORACLE_GRIDS[check]
    if cfg is not None:
        o, keys = cfg.oracle, cfg.oracle_keys
        modes = o["modes"] if "modes" in keys else modes
        nmax = o["n_max"] if "n_max" in keys else nmax
        sigma = o["sigma"] if "sigma" in keys else sigma
        lam = o["lambda"] if "lambda" in keys else lam
    modes = args.modes if args.modes is not None else modes
    nmax = args.nmax if args.nmax is not None else nmax
    sigma = args.sigma if args.sigma is not None else sigma
    lam = args.lam if args.lam is not None else lam
    return GridSpec.log_gauss(1, modes, sigma, lam, nmax)


def _fixed_symbols(grid):
    """A deterministic pair of windowed test symbols inside the grid window."""
    from .symgrammar import parse_symbol
    lo, hi = grid.sigma, grid.Lambda
    mid = lo + 0.6 * (hi - lo)
    phi = parse_symbol(f"0.3*pow(-1/2)*window({lo!r}, {hi!r})", 1)
    phip = parse_symbol(f"(0.2 + 0.1j)*pow(1)*window({lo!r}, {mid!r})", 1)
    return phi, phip


def cmd_oracle(args):
    from . import oracle
    if args.backend:
        oracle.use(args.backend)
    check = args.check
    cfg = _config(args.model) if args.model else None
    if cfg is None and check in ORACLE_MODELS:
        cfg = load_preset(ORACLE_MODELS[check])
    grid = _grid_for(args, check, cfg)
    tol_id = cfg.oracle["tol_identity"] if cfg else oracle.checks.TOL_IDENTITY
    if check == "overlap":
        rep = oracle.check_overlap_random(grid, args.pairs, args.seed, tol_id)
    elif check == "pullthrough":
        rep = oracle.check_pullthrough(*_fixed_symbols(grid), grid, tol_id)
    elif check == "commutator":
        lat = oracle.default_lattice(args.M, grid.N_max)
        phi, phip = _fixed_symbols(lat.grid)
        rep = oracle.check_commutatorV(phi, phip, lat, tol_id)
    elif check == "pullback":
        rep = oracle.check_pullback(cfg.model, grid, cfg.oracle["tol_pullback"])
    elif check == "ibc":
        rep = oracle.check_ibc(cfg.model, grid, args.seed, tol=cfg.oracle["tol_exact"])
    else:
        rep = oracle.check_glimm(cfg.model, grid, args.seed, cfg.oracle["tol_exact"])
    out = rep.to_dict()
    out["backend"] = oracle.current()
    _emit(args, cfg, out)
    return 0 if rep.passed else 1


def cmd_ibc(args):
    cfg = _config(args.model)
    _emit(args, cfg, altdress.ibc_decompose(cfg.model).to_dict())
    return 0


def cmd_glimm(args):
    cfg = _config(args.model)
    st = altdress.symbolic_input(range(args.nmax + 1), args.nmax)
    res = altdress.glimm_T_apply(st, cfg.model)
    back = altdress.glimm_T_inverse(res, cfg.model)
    ok = altdress.is_identity_symbolic(back, st)
    lam = altdress.glimm_lambda(cfg.model)
    _emit(args, cfg, {"model": cfg.model.to_dict(), "Lambda": lam.to_dict(),
                      "Lambda_class": altdress.classify(lam), **res.to_dict(), "inverse_identity": ok})
    return 0 if ok else 1


COMMANDS = {"classify": cmd_classify, "table": cmd_table, "region": cmd_region,
            "pullback": cmd_pullback, "oracle": cmd_oracle, "ibc": cmd_ibc, "glimm": cmd_glimm}


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError("missing subcommand (" + ", ".join(COMMANDS) + ")")
        return COMMANDS[args.command](args)
    except (UsageError, ConfigError, GrammarError, altdress.DomainError) as ex:
        sys.stderr.write(f"extfock: error: {ex}\n")
        return 2
    except OSError as ex:
        sys.stderr.write(f"extfock: error: {ex}\n")
        return 2


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
