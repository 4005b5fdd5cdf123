"""Command line entry point: iwf <subcommand> [options]."""

from __future__ import annotations

import argparse
import logging
import sys

from . import workbench as wb
from .abelian_fields import build_field, quadratic_field
from .kummer_engine import PrimeCache, default_cache_path

log = logging.getLogger("iwf")

S = argparse.SUPPRESS


def _global_parent() -> argparse.ArgumentParser:
    g = argparse.ArgumentParser(add_help=False)
    g.add_argument("--config", default=S, metavar="PATH", help="key=value config file")
    g.add_argument("--seed", type=int, default=S, help="auxiliary prime sampling seed")
    g.add_argument("--json", default=S, metavar="PATH", help="write the JSON report here")
    g.add_argument("--cache", default=S, metavar="PATH", help="prime cache file (default $IWF_CACHE)")
    g.add_argument("--prime-budget", type=int, default=S, dest="prime_budget")
    g.add_argument("--precision", type=int, default=S, metavar="A", help="working precision p^A")
    g.add_argument("--stop-rule", type=int, default=S, dest="stop_rule")
    g.add_argument("-v", "--verbose", action="store_true", default=S)
    return g


def build_parser() -> argparse.ArgumentParser:
    parent = _global_parent()
    ap = argparse.ArgumentParser(prog="iwf", description=__doc__, parents=[parent], allow_abbrev=False)
    sub = ap.add_subparsers(dest="command", metavar="COMMAND")

    def field_args(sp):
        sp.add_argument("--d", type=int, default=S, help="real quadratic field Q(sqrt(d))")
        sp.add_argument("--f", type=int, default=S, help="conductor of a general real abelian field")
        sp.add_argument("--h", type=wb.parse_int_list, default=S, help="kernel generators mod f, comma separated")

    sp = sub.add_parser("analyze", parents=[parent], allow_abbrev=False, help="D-ideal and structure of R/D at one level")
    field_args(sp)
    sp.add_argument("--p", type=int, default=S)
    sp.add_argument("--level", type=int, default=S)

    sp = sub.add_parser("gras-check", parents=[parent], allow_abbrev=False, help="compare |R_0/D_0| with the p-part of h(d)")
    sp.add_argument("--p", type=int, default=S)
    sp.add_argument("--d", type=wb.parse_int_list, default=S, dest="d_values", help="list or range, e.g. 2..100")

    sp = sub.add_parser("fitting-report", parents=[parent], allow_abbrev=False, help="computable factor of the twisted Fitting ideal over E")
    field_args(sp)
    sp.add_argument("--p", type=int, default=S)
    sp.add_argument("--level", type=int, default=S)
    sp.add_argument("--m", type=int, default=S)

    sp = sub.add_parser("stickelberg", parents=[parent], allow_abbrev=False, help="Stickelberger coefficients and exact checks")
    sp.add_argument("--f", type=int, default=S)
    sp.add_argument("--p", type=int, default=S)
    sp.add_argument("--level", type=int, default=S)
    sp.add_argument("--labeling", choices=("rec", "arithmetic"), default=S)

    sp = sub.add_parser("lp-check", parents=[parent], allow_abbrev=False, help="zeta projection versus generalized Bernoulli numbers")
    sp.add_argument("--p", type=int, default=S)
    sp.add_argument("--m", type=int, default=S)
    sp.add_argument("--level", type=int, default=S)
    sp.add_argument("--k", type=int, default=S)

    sp = sub.add_parser("cache", parents=[parent], allow_abbrev=False, help="inspect or compact the prime cache")
    sp.add_argument("action", choices=("inspect", "gc"))
    return ap


def load_config(ns: argparse.Namespace) -> wb.CampaignConfig:
    cfg = wb.CampaignConfig.from_file(ns.config) if hasattr(ns, "config") else wb.CampaignConfig()
    for key, value in vars(ns).items():
        if key in ("command", "config", "json", "verbose", "action"):
            continue
        if key == "d" and isinstance(value, int):
            cfg.d = value
        elif hasattr(cfg, key):
            setattr(cfg, key, value)
        else:
            raise ValueError(f"unhandled option {key}")
    if cfg.cache is None:
        cfg.cache = default_cache_path()
    return cfg


def _field(cfg: wb.CampaignConfig):
    if cfg.f is not None:
        return build_field(cfg.f, cfg.h)
    if cfg.d is not None:
        return quadratic_field(cfg.d)
    raise ValueError("a field is required: give --d or --f/--h")


def run(ns: argparse.Namespace, cfg: wb.CampaignConfig) -> dict:
    common = dict(stop_rule=cfg.stop_rule, prime_budget=cfg.prime_budget, seed=cfg.seed)
    cmd = ns.command
    if cmd == "analyze":
        return wb.analyze(_field(cfg), cfg.p, cfg.level, cfg.precision, cache_path=cfg.cache, **common)
    if cmd == "gras-check":
        d_values = cfg.d_values or ([cfg.d] if cfg.d is not None else [])
        if not d_values:
            raise ValueError("gras-check needs --d (list or range)")
        return wb.run_gras_check(cfg.p, d_values, cache_path=cfg.cache, **common)
    if cmd == "fitting-report":
        return wb.run_fitting_report(_field(cfg), cfg.p, cfg.level, cfg.m, cfg.precision, cache_path=cfg.cache, **common)
    if cmd == "stickelberg":
        if cfg.f is None:
            raise ValueError("stickelberg needs --f")
        return wb.stickelberg_report(cfg.f, cfg.p, cfg.level, cfg.labeling)
    if cmd == "lp-check":
        return wb.lp_report(cfg.p, cfg.m, cfg.level, cfg.k)
    if cmd == "cache":
        if not cfg.cache:
            raise ValueError("no cache path: give --cache or set IWF_CACHE")
        cache = PrimeCache(cfg.cache)
        info = cache.inspect() if ns.action == "inspect" else cache.gc()
        return {"schema": wb.SCHEMA_VERSION, "command": f"cache {ns.action}", "items": [], "cache": info}
    raise ValueError(f"unknown command {cmd}")


def main(argv=None) -> int:
    ap = build_parser()
    argv = sys.argv[1:] if argv is None else list(argv)
    if not argv:
        ap.print_usage(sys.stderr)
        return 2
    try:
        ns = ap.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if not getattr(ns, "command", None):
        ap.print_usage(sys.stderr)
        return 2
    logging.basicConfig(level=logging.DEBUG if getattr(ns, "verbose", False) else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(ns)
        report = run(ns, cfg)
    except (ValueError, OSError) as exc:
        print(f"iwf: error: {exc}", file=sys.stderr)
        ap.print_usage(sys.stderr)
        return 2
    text = wb.report_json(report)
    if hasattr(ns, "json"):
        with open(ns.json, "w", encoding="utf-8") as fh:
            fh.write(text)
        print(f"report written to {ns.json}: {report.get('summary', {})}")
    else:
        sys.stdout.write(text)
    return wb.exit_code(report)


if __name__ == "__main__":
    sys.exit(main())
