"""Command line front end: ``seutrace check|campaign|oracle|diff|replay``.

Exit status: 0 success, 1 usage or configuration error, 2 internal error
(also a replay failure or an oracle contradiction), 3 partial result because
a budget ran out.
"""

from __future__ import annotations

import argparse
import os
import sys

from .. import oracle as O
from ..bmc.engine import BOUNDED, Checker
from ..bmc.trace import Trace, replay
from ..env import CONCRETE
from ..rv32 import isa
from .build import build_target
from .config import ConfigError, desk_config, load_config
from .diff import compare
from .report import read_bits_csv, summary_text, write_report
from .run import CampaignError, check_options, run_campaign

EXIT_OK, EXIT_USAGE, EXIT_INTERNAL, EXIT_PARTIAL = 0, 1, 2, 3

# Words the symbolic oracle answers fetches with unless --pool is given.
DEFAULT_POOL = (
    isa.NOP_WORD,
    isa.encode("ADDI", rd=1, rs1=1, imm=1),
    isa.encode("LW", rd=2, rs1=0, imm=0x400),
    isa.encode("SW", rs1=0, rs2=1, imm=0x400),
    isa.encode("BEQ", rs1=0, rs2=0, imm=8),
    isa.WFI_WORD,
)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _parser() -> argparse.ArgumentParser:
    p = _Parser(prog="seutrace", description="Backward tracing of single-bit upsets by model checking.")
    sub = p.add_subparsers(dest="cmd", required=True, parser_class=_Parser)

    def common(sp):
        sp.add_argument("--config", help="TOML campaign file (default: regfile-8 core running the loop program)")
        sp.add_argument("--k", type=int, help="unrolling depth / oracle horizon")
        sp.add_argument("--budget", type=float, help="seconds per check")
        sp.add_argument("--solver", choices=("auto", "internal", "pysat", "external"))

    c = sub.add_parser("check", help="one bit against one property")
    common(c)
    c.add_argument("--bit", required=True, help="register:bit or a census id")
    c.add_argument("--property", required=True)
    c.add_argument("--trace-out", help="write the witness here")

    c = sub.add_parser("campaign", help="classify every selected bit")
    common(c)
    c.add_argument("--families", help="comma separated, e.g. strobe,crash,hang")
    c.add_argument("--bits", help="regex over register:bit labels, or lo-hi")
    c.add_argument("--out", default="report", help="report directory")
    c.add_argument("--workers", type=int)
    c.add_argument("--mode", choices=("harvest", "pin"))
    c.add_argument("--cache", help="JSONL verdict cache for resuming")
    c.add_argument("--no-coi", action="store_true", help="skip the cone-of-influence pre-pass")

    c = sub.add_parser("oracle", help="exhaustive forward injection campaign")
    common(c)
    c.add_argument("--bits", help="regex over register:bit labels, or lo-hi")
    c.add_argument("--out", default="oracle.csv")
    c.add_argument("--pool", help="comma separated hex words for symbolic fetches")
    c.add_argument("--fetches", type=int, default=2)

    c = sub.add_parser("diff", help="agreement between a campaign report and an oracle CSV or run")
    common(c)
    c.add_argument("--report", required=True, help="campaign report directory (bits.csv inside)")
    c.add_argument("--oracle", help="oracle CSV; computed on the fly when omitted")
    c.add_argument("--families", help="families the report measured (limits compared effects)")

    c = sub.add_parser("replay", help="re-simulate a witness trace")
    common(c)
    c.add_argument("--trace", required=True)
    c.add_argument("--property", help="property to check at the target cycle (default: from the trace)")
    return p


def _config(args):
    cfg = load_config(args.config) if args.config else desk_config()
    kw = {}
    if getattr(args, "k", None) is not None:
        kw["k_max"] = args.k
    for name in ("budget", "solver", "bits", "workers", "mode", "cache"):
        v = getattr(args, name, None)
        if v is not None:
            kw[name] = v
    if getattr(args, "families", None):
        kw["families"] = tuple(f.strip() for f in args.families.split(",") if f.strip())
    if getattr(args, "no_coi", False):
        kw["coi_prepass"] = False
    return cfg.with_(**kw) if kw else cfg


def _out(msg=""):
    print(msg, flush=True)


def cmd_check(args) -> int:
    cfg = _config(args)
    target = build_target(cfg)
    try:
        entry = target.census.resolve(args.bit)
    except (KeyError, ValueError) as e:
        raise ConfigError(str(e).strip("'\"")) from None
    try:
        prop = target.property(args.property)
    except KeyError as e:
        raise ConfigError(str(e).strip("'\"")) from None
    ts = target.system_for(prop)
    port = target.port
    res = Checker(ts, prop, check_options(cfg)).check({port.enable: 1, port.location: entry.bit_id})
    _out(f"{entry.label} {prop.name}: {res.label} ({res.stats.method}, {res.stats.solver_calls} solver calls)")
    if res.witness is not None:
        rep = replay(ts, res.witness, [prop])
        _out(f"replay: {'ok' if rep.ok else 'MISMATCH ' + rep.message}")
        if args.trace_out:
            res.witness.save(args.trace_out)
            _out(f"trace written to {args.trace_out}")
        else:
            sys.stdout.write(res.witness.to_text())
        if not rep.ok:
            return EXIT_INTERNAL
    if res.stats.budget_exceeded and res.verdict == BOUNDED:
        return EXIT_PARTIAL
    return EXIT_OK


def cmd_campaign(args) -> int:
    cfg = _config(args)
    rep = run_campaign(cfg, progress=lambda m: print(m, file=sys.stderr, flush=True))
    paths = write_report(rep, args.out)
    _out(summary_text(rep))
    _out(f"report written to {os.path.dirname(paths['bits']) or '.'}")
    stats = rep.replay_stats()
    if stats["mismatches"]:
        return EXIT_INTERNAL
    return EXIT_PARTIAL if rep.partial else EXIT_OK


def _stimuli(target, args, horizon):
    if target.config.env.mode == CONCRETE:
        return [O.Stimulus()]
    pool = DEFAULT_POOL
    if args.pool:
        try:
            pool = tuple(int(w, 16) for w in args.pool.split(","))
        except ValueError:
            raise ConfigError(f"bad --pool {args.pool!r}; expected comma separated hex words") from None
    return O.enumerate_stimuli(target.golden, pool, args.fetches, horizon)


def _oracle_run(target, args, bits=None):
    horizon = target.config.k_max
    return O.exhaustive_campaign(target.golden, _stimuli(target, args, horizon), horizon, bits=bits,
                                 literal_valid=target.config.literal_valid)


def cmd_oracle(args) -> int:
    cfg = _config(args)
    target = build_target(cfg)
    res = _oracle_run(target, args, cfg.select_bits(target.census) if cfg.bits else None)
    res.write_csv(args.out)
    counts = {}
    for b in res.effects:
        for lab in res.labels(b):
            counts[lab] = counts.get(lab, 0) + 1
    _out(f"{len(res.effects)} bits, {res.runs} faulty runs in {res.wall_time:.1f}s")
    _out("  ".join(f"{k}={v}" for k, v in sorted(counts.items())))
    _out(f"written to {args.out}")
    return EXIT_PARTIAL if res.partial else EXIT_OK


def _read_oracle_csv(path):
    import csv

    out = {}
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            eff = frozenset(x for x in row["effects"].split("|") if x and x != O.NONE)
            out[int(row["bit_id"])] = eff
    return out


def cmd_diff(args) -> int:
    cfg = _config(args)
    bits_csv = os.path.join(args.report, "bits.csv")
    if not os.path.exists(bits_csv):
        raise ConfigError(f"no bits.csv in {args.report!r}")
    formal = read_bits_csv(bits_csv)
    if args.oracle:
        oracle = _read_oracle_csv(args.oracle)
    else:
        target = build_target(cfg)
        oracle = _oracle_run(target, args, sorted(formal)).effects
    measured = None
    if args.families:
        from .run import FAMILY_EFFECT

        measured = {FAMILY_EFFECT[f] for f in args.families.split(",") if f in FAMILY_EFFECT}
    ag = compare(formal, oracle, measured=measured)
    for line in ag.lines():
        _out(line)
    return EXIT_INTERNAL if ag.contradictions or ag.effect_mismatches else EXIT_OK


def cmd_replay(args) -> int:
    cfg = _config(args)
    try:
        tr = Trace.load(args.trace)
    except OSError as e:
        raise ConfigError(f"cannot read trace {args.trace!r}: {e}") from None
    target = build_target(cfg)
    name = args.property or tr.property_name
    if not name:
        raise ConfigError("trace names no property; pass --property")
    try:
        prop = target.property(name)
    except KeyError as e:
        raise ConfigError(str(e).strip("'\"")) from None
    rep = replay(target.system_for(prop), tr, [prop])
    if rep.ok:
        _out(f"PASS {name}: violation reproduced at cycle {tr.target if tr.target is not None else tr.length - 1}")
        return EXIT_OK
    _out(f"FAIL {name}: {rep.message}")
    return EXIT_INTERNAL


COMMANDS = {"check": cmd_check, "campaign": cmd_campaign, "oracle": cmd_oracle, "diff": cmd_diff,
            "replay": cmd_replay}


def main(argv=None) -> int:
    try:
        args = _parser().parse_args(argv)
    except UsageError as e:
        print(e, file=sys.stderr)
        return EXIT_USAGE
    try:
        return COMMANDS[args.cmd](args)
    except ConfigError as e:
        print(f"seutrace: {e}", file=sys.stderr)
        return EXIT_USAGE
    except CampaignError as e:
        print(f"seutrace: {e}", file=sys.stderr)
        return EXIT_INTERNAL
    except Exception as e:  # noqa: BLE001
        print(f"seutrace: internal error: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
