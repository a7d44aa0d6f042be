"""Command line entry point.

Exit codes: 0 when no check fails, 1 on a check failure, 2 on a
configuration or pipeline error.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys

from . import weyl
from .dynamics import ConfigError
from .harness import CHECKS, PipelineError, load_config, parse_theta, run, validate_config

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


def _parse_theta_arg(text: str | None) -> list[int]:
    if not text:
        return []
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError as exc:
        raise ConfigError(f"cannot parse theta {text!r}") from exc


def _print_report(report) -> None:
    for c in report.checks:
        line = f"{c.name:<18} {c.status}"
        if c.reason:
            line += f"  ({c.reason})"
        print(line)
    s = report.summary
    print(f"control sets: {len(s['control_sets'])}  chain sets: {len(s['chain_sets'])}  "
          f"theta_S: {s['theta_S']}  theta_phi: {s['theta_phi']}")


def _run_config(args, checks: list[str] | None) -> int:
    try:
        cfg = load_config(args.config)
        overrides = {}
        if getattr(args, "theta", None) is not None:
            overrides["theta"] = parse_theta(args.theta, cfg.system.n)
        if checks is not None:
            overrides["checks"] = tuple(checks)
        if overrides:
            cfg = dataclasses.replace(cfg, **overrides)
            validate_config(cfg)
        report = run(cfg, out=getattr(args, "out", None), csv_path=getattr(args, "csv", None))
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except PipelineError as exc:
        print(f"pipeline error in stage '{exc.stage}': {exc.message}", file=sys.stderr)
        return EXIT_CONFIG
    _print_report(report)
    return report.exit_code


def cmd_analyze(args) -> int:
    return _run_config(args, None)


def cmd_check(args) -> int:
    checks = [c.strip() for c in args.checks.split(",") if c.strip()]
    bad = [c for c in checks if c not in CHECKS]
    if bad or not checks:
        print(f"configuration error: unknown checks {bad}; registered: {', '.join(CHECKS)}", file=sys.stderr)
        return EXIT_CONFIG
    return _run_config(args, checks)


def cmd_weyl(args) -> int:
    n = args.n
    try:
        elements = weyl.all_elements(n)
        out: dict = {"n": n, "order": len(elements), "w0": list(weyl.longest_element(n).perm)}
        if args.cosets is not None:
            left_s, sep, right_s = args.cosets.partition(";")
            if not sep:
                raise ConfigError("--cosets expects 'L;R', e.g. '1;2' or ';'")
            left, right = _parse_theta_arg(left_s), _parse_theta_arg(right_s)
            blocks = weyl.double_cosets(n, left, right)
            out["cosets"] = {"left": left, "right": right, "count": len(blocks),
                             "representatives": [list(weyl.minimal_representative(b).perm) for b in blocks],
                             "sizes": [len(b) for b in blocks]}
        if args.word is not None:
            w = weyl.parse_perm(args.word)
            if w.n != n:
                raise ConfigError(f"permutation {args.word} is not in S_{n}")
            out["word"] = {"perm": list(w.perm), "length": w.length(), "reduced_word": weyl.reduced_word(w)}
    except (ConfigError, weyl.WeylError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    print(f"|W| = {out['order']}  w0 = {weyl.longest_element(n)}")
    if "cosets" in out:
        c = out["cosets"]
        print(f"double cosets W_{c['left']} \\ W / W_{c['right']}: {c['count']}")
        for rep, size in zip(c["representatives"], c["sizes"]):
            print(f"  {weyl.WeylElement(tuple(rep))}  size {size}")
    if "word" in out:
        wd = out["word"]
        print(f"{weyl.WeylElement(tuple(wd['perm']))}: length {wd['length']}, reduced word {wd['reduced_word']}")
    print(json.dumps(out))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="flagcontrol", description="Control sets and chain control sets on flag manifolds")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    a = sub.add_parser("analyze", help="run the pipeline and all configured checks")
    a.add_argument("--config", required=True)
    a.add_argument("--theta", help="override the flag type, e.g. 1,2")
    a.add_argument("--out", help="JSON report path")
    a.add_argument("--csv", help="per-cell CSV path")
    a.set_defaults(func=cmd_analyze)

    c = sub.add_parser("check", help="run selected checks")
    c.add_argument("--config", required=True)
    c.add_argument("--checks", required=True, help=f"comma separated subset of {','.join(CHECKS)}")
    c.add_argument("--out")
    c.set_defaults(func=cmd_check)

    w = sub.add_parser("weyl", help="Weyl group queries for S_n")
    w.add_argument("--n", type=int, required=True)
    w.add_argument("--cosets", help="'L;R' with comma separated simple-root indices")
    w.add_argument("--word", help="permutation such as [2,1,3]; prints a reduced word")
    w.set_defaults(func=cmd_weyl)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
