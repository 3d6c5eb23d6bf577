"""Command-line surface.

Exit codes: 0 on success, 1 when a checked property is violated (the message
names the violated invariant), 2 on input errors.  All randomness flows from
the single ``--seed`` through numpy's PCG64 generator, so identical
invocations produce byte-identical output files.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from . import fm_script
from .errors import WiretapError, ParseError, ValidationError, IoError
from .fisher_lab import (
    debruijn_check,
    lemma_suite_check,
    random_gauss_pair,
    random_mixture,
    sufficiency_evidence_scalar,
)
from .info_core import ChannelSpec
from .io_files import (
    emit_region_csv,
    parse_aux_file,
    parse_channel_file,
    parse_split_file,
    pretty_text,
    region_csv_text,
)
from .polytope_fm import vertices
from .regions_discrete import (
    SweepConfig,
    eval_degraded_inner,
    eval_degraded_outer,
    eval_general_inner,
    sweep_inner_region,
)
from .regions_gaussian import (
    GaussChannel,
    HGaussChannel,
    check_degraded_H,
    check_degraded_order,
    dpc_identity_check,
    eval_gauss_inner,
    eval_gauss_outer,
    eval_general_gauss,
    random_psd_under,
    sweep_covariances,
)

OK, VIOLATION, INPUT_ERROR = 0, 1, 2


def _emit(obj, args) -> None:
    if getattr(args, "out", None):
        emit_region_csv(obj, args.out)
        print(f"wrote {args.out}")
    elif getattr(args, "format", "pretty") == "csv":
        sys.stdout.write(region_csv_text(obj))
    else:
        print(pretty_text(obj))


def _common(p, out=True):
    p.add_argument("--seed", type=int, default=0, help="PCG64 seed for all randomness")
    p.add_argument("--tol", type=float, default=1e-9)
    if out:
        p.add_argument("--out", help="write CSV here instead of stdout")
        p.add_argument("--format", choices=("csv", "pretty"), default="pretty")


def _load_discrete(path) -> ChannelSpec:
    ch = parse_channel_file(path)
    if not isinstance(ch, ChannelSpec):
        raise ValidationError("this command needs a discrete channel file")
    return ch


def _load_gauss(path) -> GaussChannel:
    ch = parse_channel_file(path)
    if not isinstance(ch, GaussChannel):
        raise ValidationError("this command needs a gauss channel file")
    return ch


def cmd_region_eval(args) -> int:
    ch = _load_discrete(args.channel)
    aux = parse_aux_file(args.aux)
    fn = {"eval-inner": eval_degraded_inner, "eval-outer": eval_degraded_outer,
          "eval-general": eval_general_inner}[args.cmd]
    sys_ = fn(aux, ch)
    _emit(vertices(sys_) if args.vertices else sys_, args)
    return OK


def cmd_region_sweep(args) -> int:
    ch = _load_discrete(args.channel)
    cfg = SweepConfig(budget=args.budget, seed=args.seed)
    res = sweep_inner_region(ch, cfg, mode=args.mode)
    _emit(res, args)
    return OK


def cmd_fm_verify(args) -> int:
    rep = fm_script.verify_builtin_chain(seed=args.seed, instantiations=args.instantiations,
                                         tol=max(args.tol, 1e-9), strict=False)
    lines = ["step,op,detail,expect,matched,extras_dropped,worst_drop_slack,message"]
    for s in rep.steps:
        print(f"step {s.index:2d}  {s.op:14s} {s.detail:24s} -> {s.expect or '-':7s} "
              f"{'ok' if s.matched else 'MISMATCH':9s} extras={s.extras_dropped} {s.message}")
        lines.append(f"{s.index},{s.op},{s.detail},{s.expect or ''},{int(s.matched)},"
                     f"{s.extras_dropped},{s.worst_drop_slack:.3e},{s.message}")
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write("\n".join(lines) + "\n")
    if not rep.ok:
        print("violated invariant: derivation chain reproduces every recorded system")
        return VIOLATION
    print("chain verified: every recorded system reproduced")
    return OK


def cmd_gauss_eval(args) -> int:
    ch = _load_gauss(args.channel)
    split = parse_split_file(args.split)
    if args.bound == "general":
        sys_ = eval_general_gauss(split, ch, order=args.order)
    elif args.bound == "outer":
        sys_ = eval_gauss_outer(split, ch)
    else:
        sys_ = eval_gauss_inner(split, ch)
    _emit(vertices(sys_) if args.vertices else sys_, args)
    return OK


def cmd_gauss_sweep(args) -> int:
    ch = _load_gauss(args.channel)
    res = sweep_covariances(ch, budget=args.budget, seed=args.seed, mode=args.mode,
                            trace_p=args.trace_p)
    _emit(res, args)
    return OK


def cmd_gauss_dpc(args) -> int:
    ch = _load_gauss(args.channel)
    rng = np.random.default_rng(args.seed)
    worst = 0.0
    if args.split:
        split = parse_split_file(args.split)
        if split.K is not None:
            raise ValidationError("dpc-check needs a triple split (K0, K1, K2)")
        worst = dpc_identity_check(split.K1, split.K2, split.K0, ch)
    else:
        for _ in range(args.budget):
            k0 = random_psd_under(rng, ch.S / 3.0)
            k1 = random_psd_under(rng, ch.S / 3.0)
            k2 = random_psd_under(rng, ch.S / 3.0)
            worst = max(worst, dpc_identity_check(k1, k2, k0, ch))
    print(f"max precoding-identity residual: {worst:.3e}")
    if worst > args.tol:
        print(f"violated invariant: precoding identity within {args.tol}")
        return VIOLATION
    return OK


def cmd_gauss_degraded(args) -> int:
    ch = parse_channel_file(args.channel)
    if isinstance(ch, GaussChannel):
        ok = check_degraded_order(ch)
        print(f"noise-covariance order holds: {ok}")
    elif isinstance(ch, HGaussChannel):
        ok, d21, dz2 = check_degraded_H(ch)
        print(f"gain-quotient degradedness holds: {ok}")
        print("D21:")
        for row in d21:
            print("  " + " ".join(f"{x: .6g}" for x in row))
        print("DZ2:")
        for row in dz2:
            print("  " + " ".join(f"{x: .6g}" for x in row))
    else:
        raise ValidationError("degraded-check needs a gauss or gauss_h channel")
    return OK if ok else VIOLATION


def cmd_fisher_debruijn(args) -> int:
    rng = np.random.default_rng(args.seed)
    rows = ["kind,instance,residual"]
    worst = 0.0
    for i in range(args.budget):
        d = 1 + i % args.dim
        pair = random_gauss_pair(rng, d)
        a = rng.normal(size=(d, d))
        sn = a @ a.T + 0.3 * np.eye(d)
        r = debruijn_check(pair, sn, step=args.step)
        rows.append(f"gauss,{i},{r:.6e}")
        worst = max(worst, r)
    for i in range(max(1, args.budget // 5)):
        mix = random_mixture(rng)
        r = debruijn_check(mix, [[0.5 + rng.uniform(0, 1)]], step=args.step)
        rows.append(f"mixture,{i},{r:.6e}")
        worst = max(worst, r)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write("\n".join(rows) + "\n")
    print(f"max entropy-gradient residual: {worst:.3e}")
    if worst > args.tol:
        print(f"violated invariant: entropy-gradient identity within {args.tol}")
        return VIOLATION
    return OK


def cmd_fisher_lemmas(args) -> int:
    rep = lemma_suite_check(seed=args.seed, count=args.budget,
                            include_mixtures=args.mixtures)
    lines = ["lemma,kind,instance,min_slack"]
    for lemma, kind, idx, slack in rep.rows:
        lines.append(f"{lemma},{kind},{idx},{slack:.6e}")
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write("\n".join(lines) + "\n")
        print(f"wrote {args.out}")
    for lemma, slack in sorted(rep.min_slack().items()):
        print(f"  {lemma:4s} min slack {slack: .3e}")
    if rep.worst < -args.tol:
        print(f"violated invariant: lemma slacks >= -{args.tol}")
        return VIOLATION
    return OK


def cmd_fisher_evidence(args) -> int:
    ch = _load_gauss(args.channel)
    if ch.dim != 1:
        raise ValidationError("the evidence harness is scalar only")
    rng = np.random.default_rng(args.seed)
    sweep = sweep_covariances(ch, budget=max(40, args.budget), seed=args.seed)
    worst = 0.0
    rows = ["mixture,max_slack,contained"]
    s_cap = float(ch.S[0, 0])
    for i in range(args.budget):
        mix = random_mixture(rng)
        scale = np.sqrt(0.98 * s_cap / max(mix.second_moment(), 1e-12))
        mix = type(mix)(mix.u_points, mix.x_points * min(1.0, scale), mix.weights)
        rep = sufficiency_evidence_scalar(mix, ch, sweep.points, slack_tol=args.tol)
        worst = max(worst, rep.max_slack)
        rows.append(f"{i},{rep.max_slack:.6e},{int(rep.contained)}")
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write("\n".join(rows) + "\n")
    print(f"max dominance slack over {args.budget} mixtures: {worst:.3e}")
    if worst > args.tol:
        print(f"violated invariant: mixture regions inside the Gaussian envelope "
              f"within {args.tol}")
        return VIOLATION
    return OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="wtr", description=__doc__)
    sub = p.add_subparsers(dest="group", required=True)

    region = sub.add_parser("region", help="discrete-channel regions").add_subparsers(
        dest="cmd", required=True)
    for name in ("eval-inner", "eval-outer", "eval-general"):
        q = region.add_parser(name)
        q.add_argument("--channel", required=True)
        q.add_argument("--aux", required=True)
        q.add_argument("--vertices", action="store_true", help="emit vertices, not constraints")
        _common(q)
        q.set_defaults(fn=cmd_region_eval)
    q = region.add_parser("sweep")
    q.add_argument("--channel", required=True)
    q.add_argument("--budget", type=int, required=True)
    q.add_argument("--mode", choices=("degraded", "general"), default="degraded")
    _common(q)
    q.set_defaults(fn=cmd_region_sweep)

    fm = sub.add_parser("fm", help="inequality-system machinery").add_subparsers(
        dest="cmd", required=True)
    q = fm.add_parser("verify-appendix", help="replay the bundled derivation chain")
    q.add_argument("--instantiations", "--budget", dest="instantiations", type=int, default=3,
                   help="random instantiations certifying each dropped row")
    q.add_argument("--out")
    _common(q, out=False)
    q.set_defaults(fn=cmd_fm_verify)

    gauss = sub.add_parser("gauss", help="Gaussian vector channels").add_subparsers(
        dest="cmd", required=True)
    q = gauss.add_parser("eval")
    q.add_argument("--channel", required=True)
    q.add_argument("--split", required=True)
    q.add_argument("--bound", choices=("inner", "outer", "general"), default="inner")
    q.add_argument("--order", choices=("21", "12"), default="21")
    q.add_argument("--vertices", action="store_true")
    _common(q)
    q.set_defaults(fn=cmd_gauss_eval)
    q = gauss.add_parser("sweep")
    q.add_argument("--channel", required=True)
    q.add_argument("--budget", type=int, required=True)
    q.add_argument("--mode", choices=("fixed_S", "trace_P"), default="fixed_S")
    q.add_argument("--trace-p", type=float, default=None)
    _common(q)
    q.set_defaults(fn=cmd_gauss_sweep)
    q = gauss.add_parser("dpc-check")
    q.add_argument("--channel", required=True)
    q.add_argument("--split")
    q.add_argument("--budget", type=int, default=100)
    _common(q, out=False)
    q.set_defaults(fn=cmd_gauss_dpc)
    q = gauss.add_parser("degraded-check")
    q.add_argument("--channel", required=True)
    _common(q, out=False)
    q.set_defaults(fn=cmd_gauss_degraded)

    fisher = sub.add_parser("fisher", help="Fisher-information lab").add_subparsers(
        dest="cmd", required=True)
    q = fisher.add_parser("debruijn")
    q.add_argument("--budget", type=int, default=20)
    q.add_argument("--dim", type=int, default=3)
    q.add_argument("--step", type=float, default=1e-4)
    q.add_argument("--out")
    _common(q, out=False)
    q.set_defaults(fn=cmd_fisher_debruijn)
    q = fisher.add_parser("lemmas")
    q.add_argument("--budget", type=int, default=200)
    q.add_argument("--mixtures", action="store_true")
    q.add_argument("--out")
    _common(q, out=False)
    q.set_defaults(fn=cmd_fisher_lemmas)
    q = fisher.add_parser("evidence")
    q.add_argument("--channel", required=True)
    q.add_argument("--budget", type=int, default=50)
    q.add_argument("--out")
    _common(q, out=False)
    q.set_defaults(fn=cmd_fisher_evidence)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    # per-command tolerance defaults where 1e-9 is too strict
    if args.fn is cmd_fisher_debruijn and args.tol == 1e-9:
        args.tol = 1e-4
    if args.fn is cmd_fisher_lemmas and args.tol == 1e-9:
        args.tol = 1e-8
    if args.fn is cmd_fisher_evidence and args.tol == 1e-9:
        args.tol = 1e-3
    if args.tol <= 0:
        print("input error: tolerances must be positive", file=sys.stderr)
        return INPUT_ERROR
    if getattr(args, "budget", 1) < 1:
        print("input error: budget must be at least 1", file=sys.stderr)
        return INPUT_ERROR
    try:
        return args.fn(args)
    except (ParseError, ValidationError, IoError, FileNotFoundError) as e:
        print(f"input error: {e}", file=sys.stderr)
        return INPUT_ERROR
    except WiretapError as e:
        print(f"violated invariant: {e}", file=sys.stderr)
        return VIOLATION


if __name__ == "__main__":
    sys.exit(main())
