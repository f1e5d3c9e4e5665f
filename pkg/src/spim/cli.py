"""Command-line interface: ``spim <command> FILE ...``.

Every command prints a verdict; ``--json`` switches to a machine-readable
object.  The exit status is 0 whenever the command ran to completion,
whatever the verdict, and nonzero on parse, assembly or certification
errors.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

from .core import (
    ParseError,
    Presentation,
    format_word,
    load_presentation,
    paper_style,
    parse_word,
    print_presentation,
)

ANSWERS = ("true", "false", "equal", "unknown", "inconclusive", "not-applicable")


@dataclass
class Verdict:
    command: str
    query: dict
    answer: str
    trace: dict = field(default_factory=dict)
    seconds: float = 0.0

    def __post_init__(self):
        if self.answer not in ANSWERS:
            raise ValueError(f"answer {self.answer!r} outside the fixed vocabulary")

    def to_json(self) -> dict:
        return {"command": self.command, "query": self.query, "answer": self.answer,
                "trace": self.trace, "seconds": round(self.seconds, 4)}


def _tri(x) -> str:
    return "inconclusive" if x is None else ("true" if x else "false")


# ------------------------------------------------------------------ commands


def cmd_analyze(p: Presentation, args) -> Verdict:
    from .eunitary import CertificationError, certify_amalgam, certify_single_relator
    from .factorise import detect_alphabetically_disjoint, detect_uniquely_marked
    from .pmp import PipelineError, PrefixMembership, certified_units, trivial_factorisation

    q = {"file": p.source}
    if not p.relators:
        na = "not-applicable"
        return Verdict("analyze", q, na, {"uniquely_marked": na, "alphabetically_disjoint": na,
                                            "units": na, "eunitary": na, "pipeline": na})
    trace: dict = {"generators": list(p.generators), "relators": len(p.relators)}
    f = p.factorisation
    trace["factorisation"] = "declared" if f is not None else "trivial"
    f = f or trivial_factorisation(p)
    markers = detect_uniquely_marked(f)
    trace["uniquely_marked"] = markers is not None
    if markers is not None:
        trace["markers"] = {format_word(f.factors[j]): m for j, m in markers.items()}
    trace["alphabetically_disjoint"] = bool(detect_alphabetically_disjoint(f))

    certs = certified_units(p, f.factors, budget=args.budget * 2500, stephen_rounds=args.budget)
    trace["units"] = {format_word(u): (certs[tuple(u)].rule if tuple(u) in certs else None) for u in f.factors}

    if p.directive("hidden") is not None:
        from .structure import hidden_uml_rewrite, parse_hidden_data
        try:
            rq, _, _ = hidden_uml_rewrite(p, f, parse_hidden_data(p))
            trace["hidden_uml_rewrite"] = print_presentation(rq)
        except ValueError as e:
            trace["hidden_uml_rewrite"] = f"failed: {e}"

    eu, why = None, ""
    try:
        eu = certify_single_relator(p)
    except CertificationError as e:
        why = str(e)
    if eu is None and (p.directive("oracle") or "").startswith("amalgam-of"):
        from .assemble import amalgam_parts
        try:
            left, right, pairs = amalgam_parts(p)
            eu, _ = certify_amalgam(left, None, right, None, pairs, stephen_rounds=args.budget)
        except (CertificationError, ValueError) as e:
            why = str(e)
    trace["eunitary"] = eu.route if eu else "unknown"
    if eu is None:
        trace["eunitary_reason"] = why
    else:
        trace["eunitary_certificate"] = eu.to_json()

    try:
        pm = PrefixMembership.for_presentation(p, stephen_rounds=args.budget)
        trace["pipeline"] = pm.name
        trace["conservative"] = pm.conservative
    except (PipelineError, ValueError) as e:
        trace["pipeline"] = "not-applicable"
        trace["pipeline_reason"] = str(e)

    if args.dot:
        from .stephen import approximant
        Path(args.dot).write_text(approximant(p, (), args.budget).to_dot())
    return Verdict("analyze", q, "true" if eu else "unknown", trace)


def cmd_pmp(p: Presentation, args) -> Verdict:
    from .pmp import PipelineError, PrefixMembership
    from .products import Inconclusive

    w = parse_word(args.word, p.generators)
    q = {"file": p.source, "word": format_word(w)}
    try:
        pm = PrefixMembership.for_presentation(p, stephen_rounds=args.budget)
    except (PipelineError, ValueError) as e:
        return Verdict("pmp", q, "not-applicable", {"reason": str(e)})
    try:
        v = pm.decide(w)
    except Inconclusive as e:
        return Verdict("pmp", q, "inconclusive", {"pipeline": pm.name, "reason": str(e)})
    trace = v.to_json()
    trace["conservative"] = pm.conservative
    return Verdict("pmp", q, _tri(v.member), trace)


def cmd_wp(p: Presentation, args) -> Verdict:
    from .stephen import EQUAL, approximant, equal_semidecide

    u, v = (parse_word(x, p.generators) for x in args.eq)
    q = {"file": p.source, "u": format_word(u), "v": format_word(v)}
    reason = None
    try:
        from .meu import context_for
        ctx = context_for(p, stephen_rounds=args.budget)
        mv = ctx.equal(u, v)
    except Exception as e:  # any assembly failure hands over to Stephen
        reason = f"{type(e).__name__}: {e}"
        mv = None
    if mv is not None and mv.answer is not None:
        ans = "equal" if mv.answer else "false"
        return Verdict("wp", q, ans, {"engine": "meu", "pipeline": ctx.pipeline.name, **mv.to_json()})
    s = equal_semidecide(p, u, v, args.budget)
    trace = {"engine": "stephen", "budget": args.budget}
    if reason:
        trace["meu_unavailable"] = reason
    elif mv is not None:
        trace["meu"] = mv.to_json()
    if args.dot:
        Path(args.dot).write_text(approximant(p, u, args.budget).to_dot())
    return Verdict("wp", q, "equal" if s == EQUAL else "unknown", trace)


def cmd_stephen(p: Presentation, args) -> Verdict:
    from .stephen import approximant

    w = parse_word(args.word, p.generators) if args.word else ()
    a = approximant(p, w, args.budget)
    q = {"file": p.source, "word": format_word(w), "budget": args.budget}
    trace = {"vertices": a.num_vertices, "rounds": a.rounds, "status": a.status}
    if args.reads:
        r = parse_word(args.reads, p.generators)
        trace["reads"] = format_word(r)
        answer = "true" if a.reads(r) else "unknown"
    else:
        answer = "true" if a.status == "closed" else "unknown"
    if args.dot:
        Path(args.dot).write_text(a.to_dot())
    return Verdict("stephen", q, answer, trace)


def cmd_amalgamate(args) -> Verdict:
    from .eunitary import certify_amalgam

    p1, p2 = load_presentation(args.file1), load_presentation(args.file2)
    pairs = []
    for spec in args.pair:
        lhs, sep, rhs = spec.partition("=")
        if not sep:
            raise ValueError(f"pair {spec!r} is not of the form u=v")
        pairs.append((parse_word(lhs), parse_word(rhs)))
    out = Path(args.out) if args.out else None
    base = out.parent if out else Path.cwd()
    refs = []
    for f in (args.file1, args.file2):
        rel = os.path.relpath(Path(f).resolve(), base.resolve())
        refs.append(str(Path(f).resolve()) if rel.startswith("..") else rel)
    directives = [("oracle", "amalgam-of " + " ".join(refs))]
    for comp in (p1, p2):
        directives += [(k, v) for k, v in comp.directives if k in ("hidden", "witness", "order")]
    cert, q = certify_amalgam(p1, None, p2, None, pairs, stephen_rounds=args.budget, directives=directives)
    display = [paper_style(q, i) for i in range(len(q.relators))]
    trace = {"relators": display, "certificate": cert.to_json()}
    if out:
        out.write_text(print_presentation(q))
        cert_path = out.with_suffix(out.suffix + ".cert.json")
        cert_path.write_text(cert.dumps() + "\n")
        trace["written"] = [str(out), str(cert_path)]
    else:
        trace["presentation"] = print_presentation(q)
    query = {"files": [args.file1, args.file2], "pairs": args.pair}
    return Verdict("amalgamate", query, "true", trace)


def cmd_compare(p: Presentation, args) -> Verdict:
    from .oracleharness import EnumerationBudget, compare_presentation

    budget = EnumerationBudget(max_product_length=args.max_len, max_word_length=args.word_len,
                               samples=args.samples, seed=args.seed, node_budget=args.nodes)
    rep = compare_presentation(p, budget)
    ans = "false" if rep.disagreements else "true"
    return Verdict("compare", {"file": p.source}, ans, rep.to_json())


# ------------------------------------------------------------------ driver


def _render(v: Verdict) -> str:
    lines = [f"{v.command}: {v.answer}"]
    for k, val in v.query.items():
        lines.append(f"  {k}: {val}")
    for k, val in v.trace.items():
        if v.query.get(k) == val:
            continue
        if isinstance(val, str) and "\n" in val:
            lines.append(f"  {k}:")
            lines.extend("    " + ln for ln in val.rstrip().splitlines())
        elif isinstance(val, list) and val and all(isinstance(x, str) for x in val):
            lines.append(f"  {k}:")
            lines.extend("    " + x for x in val)
        elif isinstance(val, (dict, list)):
            text = json.dumps(val, default=str)
            if len(text) > 400:
                text = f"<{len(val)} entries; see --json>"
            lines.append(f"  {k}: {text}")
        else:
            lines.append(f"  {k}: {val}")
    lines.append(f"  seconds: {v.seconds:.3f}")
    return "\n".join(lines)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="spim", description="Special inverse monoid toolkit")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--json", action="store_true", help="print the verdict as JSON")
    common.add_argument("--dot", metavar="PATH", help="write a DOT graph where the command has one")
    common.add_argument("--budget", type=int, default=4, help="Stephen rounds and closure budget")
    common.add_argument("--max-len", type=int, default=10, help="maximum product length for brute force")
    sub = ap.add_subparsers(dest="command", required=True)

    a = sub.add_parser("analyze", parents=[common], help="factorisation classes, units, E-unitarity")
    a.add_argument("file")
    a = sub.add_parser("pmp", parents=[common], help="prefix membership of a word")
    a.add_argument("file")
    a.add_argument("--word", required=True)
    a = sub.add_parser("wp", parents=[common], help="word problem u = v")
    a.add_argument("file")
    a.add_argument("--eq", nargs=2, metavar=("U", "V"), required=True)
    a = sub.add_parser("stephen", parents=[common], help="Stephen approximant of a word")
    a.add_argument("file")
    a.add_argument("--word", default="")
    a.add_argument("--reads", help="check whether this word labels a start-to-end path")
    a = sub.add_parser("amalgamate", parents=[common], help="certify and write an amalgam over units")
    a.add_argument("file1")
    a.add_argument("file2")
    a.add_argument("--pair", action="append", required=True, metavar="U=V")
    a.add_argument("--out", "-o", help="output presentation path (certificate goes to PATH.cert.json)")
    a = sub.add_parser("compare", parents=[common], help="prefix membership against brute force")
    a.add_argument("file")
    a.add_argument("--samples", type=int, default=50)
    a.add_argument("--seed", type=int, default=0)
    a.add_argument("--word-len", type=int, default=8)
    a.add_argument("--nodes", type=int, default=250000, help="oracle evaluations for enumeration")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    t0 = time.perf_counter()
    try:
        if args.command == "amalgamate":
            v = cmd_amalgamate(args)
        else:
            p = load_presentation(args.file)
            handler = {"analyze": cmd_analyze, "pmp": cmd_pmp, "wp": cmd_wp,
                       "stephen": cmd_stephen, "compare": cmd_compare}[args.command]
            v = handler(p, args)
    except ParseError as e:
        print(f"parse error: {e}", file=sys.stderr)
        return 2
    except (OSError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    v.seconds = time.perf_counter() - t0
    print(json.dumps(v.to_json(), indent=2, default=str) if args.json else _render(v))
    return 0


if __name__ == "__main__":
    sys.exit(main())
