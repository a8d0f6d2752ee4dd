"""Command-line entry point: ``hexlimit <subcommand> ...``.

Exit codes: 0 success, 1 verification or self-test failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from . import _kernels as kern
from .lattice import QPoint
from .marking import FreeBitsError, Patch, generate_patch, parse_freebits
from .qadic import QadicParam, QSpecError, Verdict, classify, format_qspec, generic_to_depth, parse_qspec
from .triangulation import TriContext


class UsageError(Exception):
    pass


@dataclass(frozen=True)
class RunConfig:
    subcommand: str
    qspec: str | None
    R: int | None
    K: int | None
    freebits: str
    seed: int | None
    output: str | None

    def header(self) -> str:
        return "# run " + " ".join(f"{k}={v}" for k, v in asdict(self).items())


def _param(args) -> QadicParam:
    if args.q is not None:
        return parse_qspec(args.q)
    if getattr(args, "seed", None) is not None:
        from .acceptance import random_generic_q

        return random_generic_q(args.seed)
    raise UsageError("give --q or --seed")


def _config(args) -> RunConfig:
    q = getattr(args, "q", None)
    if q is None and getattr(args, "seed", None) is not None:
        q = format_qspec(_param(args))
    return RunConfig(args.command, q, getattr(args, "R", None), getattr(args, "K", None),
                     getattr(args, "freebits", "-") or "-", getattr(args, "seed", None),
                     getattr(args, "output", None))


def _emit(text: str, output: str | None) -> None:
    if output:
        Path(output).write_text(text, encoding="ascii")
    else:
        sys.stdout.write(text)


# ------------------------------------------------------------------ subcommands

def cmd_generate(args) -> int:
    q = _param(args)
    patch = generate_patch(q, args.R, args.K, parse_freebits(args.freebits))
    if args.parity_only:
        patch = patch.to_parity_only()
    header, meta, *records = patch.dumps().splitlines(keepends=True)
    _emit(header + meta + _config(args).header() + "\n" + "".join(records), args.output)
    return 0


def cmd_classify(args) -> int:
    q = _param(args)
    sing = classify(q) if q.is_exact else generic_to_depth(q)
    print(sing)
    return 0


def _symmetric_points(patch: Patch):
    from .qadic import nonorientable_point

    try:
        q = parse_qspec(patch.qspec)
    except QSpecError:
        return []
    if q.is_exact and classify(q).verdict is Verdict.ICWL:
        return [nonorientable_point(q)]
    return []


def cmd_verify(args) -> int:
    from .verify import CheckReport, check_all, check_aperiodicity, format_report

    patch = Patch.read(args.patch)
    if patch.parity_only:
        report = CheckReport()
    else:
        report = check_all(patch, _symmetric_points(patch))
    if args.aperiodicity:
        bits = np.where(patch.determined, patch.parity, -1)
        periodic, _ = check_aperiodicity(patch.points, bits, args.aperiodicity)
        report.violations += periodic.violations
        report.skipped += periodic.skipped
    _emit(format_report(report), args.output)
    return 0 if not report.violations else 1


def cmd_analyze(args) -> int:
    from . import analysis

    lines = []
    if args.index_series:
        s = analysis.total_index_series(args.kmax)
        for k, (t, p) in enumerate(zip(s.terms, s.partial_sums), start=1):
            lines.append(f"{k}\t{t}\t{p}")
        gap = 1 - s.partial_sums[-1]
        lines += [f"kmax={args.kmax}", f"partial_sum={s.partial_sums[-1]}",
                  f"delta={float(gap):.6e}", f"limit={s.limit}"]
    needs_q = args.density or args.window or args.fiber or args.cosets
    if needs_q:
        q = _param(args)
        if args.R is None:
            raise UsageError("--R is required")
        lines.append(f"q={format_qspec(q)}")
        ctx = TriContext.for_radius(q, args.R, args.K)
        if args.density:
            d = analysis.orientation_density(ctx, args.R)
            lines += [f"up_fraction={d.up_fraction:.6f}", f"down_fraction={d.down_fraction:.6f}",
                      f"unknown={d.unknown}", f"p_points={d.total}"]
        if args.window:
            w = analysis.window_accounting(ctx, args.R)
            lines += [f"white_measure={w.white}", f"gray_measure={w.gray}",
                      f"unresolved_measure={w.unresolved}", f"unresolved_float={float(w.unresolved):.6f}",
                      f"cosets={w.cosets}"]
        if args.fiber:
            comps = analysis.fiber_completions(q, args.R)
            lines += [f"fiber_count={len(comps)}", f"symmetric={sum(c.symmetric for c in comps)}"]
        if args.cosets:
            patch = generate_patch(q, args.R, ctx.K)
            verified = tested = 0
            for i in range(0, len(patch), max(1, len(patch) // args.cosets)):
                xq = QPoint(int(patch.points[i, 0]), int(patch.points[i, 1]))
                try:
                    rep = analysis.coset_period(ctx, xq, patch)
                except (analysis.InsufficientSamples, analysis.LevelUnresolved):
                    continue
                tested += 1
                verified += rep.verified
                lines.append(f"{xq.m}\t{xq.n}\t{rep.period_exponent}\t{rep.predicted_m}\t{rep.verified}\t{rep.sample_count}")
            lines += [f"coset_tested={tested}", f"coset_verified={verified}"]
    if not lines:
        raise UsageError("nothing to analyze; pick at least one report flag")
    lines.insert(0, _config(args).header())
    _emit("\n".join(lines) + "\n", args.output)
    return 0


def cmd_reconstruct(args) -> int:
    from .reconstruct import ParityPatch, mld_check, recover

    patch = Patch.read(args.patch)
    pp = ParityPatch(patch.points, np.where(patch.determined, patch.parity, -1), patch.R)
    rec = recover(pp, args.dmax)
    lines = [f"{k}\t{c.m}\t{c.n}" for k, c in enumerate(rec.residues, start=1)]
    lines += [f"depth={rec.depth}", f"reason={rec.reason}"]
    if rec.depth:
        c = rec.residues[-1]
        lines.append(f"q=res:K={rec.depth};u={c.m};v={c.n}")
    status = 0
    if args.mld:
        report = mld_check(pp, None if patch.parity_only else patch, margin=args.margin)
        lines += [f"mld={report.ok}", f"mld_compared={report.compared}", f"mld_diffs={len(report.diffs)}"]
        lines += [f"diff\t{x.m}\t{x.n}" for x in report.diffs[:20]]
        status = 0 if report.ok else 1
    _emit("\n".join(lines) + "\n", args.output)
    return status


def cmd_render(args) -> int:
    from fractions import Fraction

    from .render import Mode, RenderStyle, render_svg

    patch = Patch.read(args.patch)
    style = RenderStyle(mode=Mode(args.mode), epsilon=Fraction(args.epsilon), max_level=args.max_level)
    _emit(render_svg(patch, style), args.output)
    return 0


def cmd_selftest(args) -> int:
    from . import acceptance

    print(f"# backend={kern.backend()}")
    failed = 0
    for result in acceptance.run(args.only or None):
        print(result.line(), flush=True)
        failed += not result.passed
    return 1 if failed else 0


# ------------------------------------------------------------------ parser

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hexlimit", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def add_q(p, radius=True):
        p.add_argument("--q", help="q-spec: rat:u,v | res:K=k;u=a;v=b | cht:m,n | icwl:up|down[+m,n]")
        p.add_argument("--seed", type=int, help="draw a random residue-form q from this seed")
        if radius:
            p.add_argument("--R", type=int, help="hex radius of the patch")
            p.add_argument("--K", type=int, help="truncation depth (default from R)")

    p = sub.add_parser("generate", help="write a patch file")
    add_q(p)
    p.add_argument("--freebits", default="-", help="'-' or comma-separated choices")
    p.add_argument("--parity-only", action="store_true")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("classify", help="report the singular class of q")
    add_q(p, radius=False)
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("verify", help="check matching rules on a patch file")
    p.add_argument("patch")
    p.add_argument("--aperiodicity", type=int, metavar="RMAX", default=0)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("analyze", help="coset, window, density, fiber and index-series reports")
    add_q(p)
    p.add_argument("--index-series", action="store_true")
    p.add_argument("--kmax", type=int, default=20)
    p.add_argument("--density", action="store_true")
    p.add_argument("--window", action="store_true")
    p.add_argument("--fiber", action="store_true")
    p.add_argument("--cosets", type=int, default=0, metavar="N", help="sample about N tiles")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("reconstruct", help="recover q from a parity patch")
    p.add_argument("patch")
    p.add_argument("--dmax", type=int, default=64)
    p.add_argument("--mld", action="store_true", help="also rebuild the marks and compare")
    p.add_argument("--margin", type=int, default=16)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_reconstruct)

    p = sub.add_parser("render", help="draw a patch as SVG")
    p.add_argument("patch")
    p.add_argument("--mode", choices=["full", "parity", "overlay"], default="full")
    p.add_argument("--epsilon", default="1/8")
    p.add_argument("--max-level", type=int, default=2)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_render)

    p = sub.add_parser("selftest", help="run the acceptance suite")
    p.add_argument("--only", type=int, nargs="*", metavar="N")
    p.set_defaults(func=cmd_selftest)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (UsageError, QSpecError, FreeBitsError, ValueError, OSError, OverflowError) as exc:
        print(f"hexlimit: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
