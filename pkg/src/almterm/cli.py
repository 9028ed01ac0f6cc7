"""Command-line front end: parse, decide, verify, project, sample.

Exit codes: 0 when every input is certified (alm-recurrent / sound-yes),
1 when any input is not certified (not-alm-recurrent / unknown), 2 on input
errors (missing file, parse error, bad flag combination).  With ``--json``
one JSON object is printed per input file, each on its own line.
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from . import __version__
from .decider import SKIP_FACT, SKIP_UNSAT, decide
from .derivation import check_length_bound
from .model import DOMAINS, AlmtermError, Domain, LevelMapping, Program
from .parser import ParseError, parse_program
from .verifier import VerifyReport, verify

SCHEMA_VERSION = 1

EXIT_CERTIFIED = 0
EXIT_NOT_CERTIFIED = 1
EXIT_INPUT_ERROR = 2


@dataclass
class Options:
    domain: Domain
    witness: bool
    project: bool
    verify: bool
    sample: int | None
    seed: int
    max_steps: int | None
    as_json: bool


def _witness_json(lm: LevelMapping) -> dict:
    return {pred: [str(c) for c in vec] for pred, vec in lm.coeffs.items()}


def _projection_json(verdict) -> list[dict]:
    sys = verdict.projection
    pool = verdict.alm.pool
    out = []
    for i in range(sys.num_rows):
        terms = {
            pool.name(v): str(c)
            for v, c in zip(sys.variables, sys.rows[i])
            if c
        }
        out.append(
            {
                "terms": terms,
                "rel": ">=",
                "rhs": str(sys.rhs[i]),
                "text": sys.row_constraint(i).render(pool),
            }
        )
    return out


def _rules_json(binary: Program, skipped: dict[str, str], report: VerifyReport | None) -> list[dict]:
    rows = []
    for rule in binary.rules:
        entry: dict = {
            "id": rule.rule_id,
            "origin": {"rule": rule.origin[0], "body_position": rule.origin[1]}
            if rule.origin
            else None,
        }
        if rule.rule_id in skipped:
            entry["status"] = skipped[rule.rule_id]
        else:
            entry["status"] = "analyzed"
        if report is not None:
            entry["checks"] = [
                {
                    "body_index": c.body_index,
                    "status": c.status,
                    "decrease_min": str(c.decrease.value)
                    if c.decrease and c.decrease.value is not None
                    else None,
                    "body_min": str(c.body_floor.value)
                    if c.body_floor and c.body_floor.value is not None
                    else None,
                    "note": c.note,
                }
                for c in report.for_rule(rule.rule_id)
            ]
        rows.append(entry)
    return rows


def analyze_file(path: str, opts: Options) -> tuple[dict, int]:
    """Produce the report dictionary and exit code for one input file."""
    report: dict = {
        "version": SCHEMA_VERSION,
        "file": path,
        "domain": opts.domain.tag,
        "verdict": None,
        "witness": None,
        "projection": None,
        "rules": None,
        "sampling": None,
        "notes": [],
        "error": None,
    }
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        report["error"] = f"cannot read {path}: {exc}"
        return report, EXIT_INPUT_ERROR
    try:
        program = parse_program(text, file=path)
    except ParseError as exc:
        report["error"] = str(exc)
        return report, EXIT_INPUT_ERROR
    try:
        verdict = decide(program, opts.domain, want_projection=opts.project)
    except AlmtermError as exc:
        report["error"] = str(exc)
        return report, EXIT_INPUT_ERROR

    report["verdict"] = verdict.kind
    if opts.domain.sound_only:
        report["notes"].append(
            "over the naturals this analysis is sound but not complete: "
            "'sound-yes' proves termination, 'unknown' proves nothing"
        )
    elif opts.domain.tag in ("r", "r+"):
        report["notes"].append(
            "rational-coefficient systems are decided identically over the "
            "rationals and the reals; the rational pipeline is exact for both"
        )

    if opts.witness and verdict.witness is not None:
        report["witness"] = _witness_json(verdict.witness)
        report["witness_pretty"] = [
            verdict.witness.render(pred) for pred in sorted(verdict.witness.coeffs)
        ]
    if opts.project and verdict.projection is not None:
        report["projection"] = _projection_json(verdict)

    vreport: VerifyReport | None = None
    if opts.verify and verdict.witness is not None:
        vreport = verify(verdict.binary, verdict.witness, opts.domain)
        report["epsilon"] = str(vreport.epsilon)
        if not vreport.passed:
            # cannot happen unless the decider and verifier disagree
            report["error"] = "internal: extracted mapping failed verification"
            return report, EXIT_INPUT_ERROR
    skipped = dict(verdict.alm.skipped)
    report["rules"] = _rules_json(verdict.binary, skipped, vreport)

    code = EXIT_CERTIFIED if verdict.affirmative else EXIT_NOT_CERTIFIED

    if opts.sample is not None:
        if verdict.witness is None:
            report["error"] = (
                "--sample needs a certified witness, but the verdict is "
                f"'{verdict.kind}'"
            )
            return report, EXIT_INPUT_ERROR
        bound = check_length_bound(
            verdict.binary,
            verdict.witness,
            samples=opts.sample,
            seed=opts.seed,
            domain=opts.domain,
            step_cap=opts.max_steps,
        )
        report["sampling"] = {
            "samples": len(bound.runs),
            "violations": len(bound.violations),
            "truncated": len(bound.truncated),
            "max_steps_observed": bound.max_steps_observed,
            "counting": bound.counting,
        }
        if not bound.passed:
            report["error"] = "internal: derivation exceeded its length bound"
            return report, EXIT_INPUT_ERROR

    return report, code


def _render_text(report: dict) -> str:
    lines = [f"{report['file']} [{report['domain']}]: {report['verdict'] or 'error'}"]
    if report.get("error"):
        lines.append(f"  error: {report['error']}")
    if report.get("witness"):
        for pred, vec in report["witness"].items():
            lines.append(f"  witness lm({pred}) = ({', '.join(vec)})")
        for pretty in report.get("witness_pretty", ()):
            lines.append(f"  measure {pretty}")
    if report.get("projection"):
        lines.append("  certificate space (projected):")
        for row in report["projection"]:
            lines.append(f"    {row['text']}")
    if report.get("rules"):
        lines.append("  rules:")
        for entry in report["rules"]:
            origin = (
                f" (from {entry['origin']['rule']}, body atom "
                f"{entry['origin']['body_position']})"
                if entry.get("origin")
                else ""
            )
            status = entry["status"]
            if status == SKIP_FACT:
                detail = "fact, no condition"
            elif status == SKIP_UNSAT:
                detail = "constraint unsatisfiable, ignored"
            else:
                checks = entry.get("checks")
                if checks is None:
                    detail = "analyzed"
                else:
                    parts = []
                    for c in checks:
                        if c["status"] == "pass":
                            parts.append(
                                f"pass (decrease min {c['decrease_min']}, "
                                f"body min {c['body_min']})"
                            )
                        else:
                            parts.append(f"{c['status']}: {c['note']}")
                    detail = "; ".join(parts) or "analyzed"
            lines.append(f"    {entry['id']}{origin}: {detail}")
    if report.get("sampling"):
        s = report["sampling"]
        lines.append(
            f"  sampling: {s['samples']} runs, max {s['max_steps_observed']} steps, "
            f"{s['violations']} bound violations, {s['truncated']} truncated"
        )
        lines.append(f"  step counting: {s['counting']}")
    for note in report.get("notes", ()):
        lines.append(f"  note: {note}")
    return "\n".join(lines)


def _read_config(path: str) -> dict[str, str]:
    values: dict[str, str] = {}
    for raw in Path(path).read_text(encoding="utf-8").splitlines():
        line = raw.strip()
        if not line or line.startswith("#") or line.startswith("%"):
            continue
        if "=" not in line:
            raise AlmtermError(f"bad config line (expected key = value): {raw!r}")
        key, value = line.split("=", 1)
        values[key.strip()] = value.strip()
    return values


_TRUE = ("1", "true", "yes", "on")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="almterm",
        description="Termination certificates for flat constraint logic programs.",
    )
    parser.add_argument("--version", action="version", version=f"almterm {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    check = sub.add_parser("check", help="analyze one or more .clp files")
    check.add_argument("files", nargs="+", help="flat programs (.clp)")
    check.add_argument(
        "--domain",
        choices=[d.tag for d in DOMAINS],
        default=None,
        help="numeric domain (default q)",
    )
    check.add_argument("--witness", action="store_true", default=None,
                       help="include the extracted level mapping in the report")
    check.add_argument("--project", action="store_true", default=None,
                       help="include the projected coefficient constraints")
    check.add_argument("--verify", dest="verify", action="store_true", default=None,
                       help="re-check the witness on the primal side (default)")
    check.add_argument("--no-verify", dest="verify", action="store_false",
                       help="skip the independent verification pass")
    check.add_argument("--sample", type=int, default=None, metavar="N",
                       help="run N seeded ground derivations against the length bound")
    check.add_argument("--seed", type=int, default=None, help="sampling seed (default 0)")
    check.add_argument("--max-steps", type=int, default=None, metavar="M",
                       help="hard cap per sampled derivation (default: bound + 1)")
    check.add_argument("--json", dest="as_json", action="store_true", default=None,
                       help="machine-readable output, one JSON object per file")
    check.add_argument("--config", default=None,
                       help="key = value file with defaults for the flags above")
    return parser


def _resolve_options(args: argparse.Namespace) -> Options:
    config: dict[str, str] = {}
    if args.config:
        config = _read_config(args.config)

    def flag(name: str, parsed, default, conv):
        if parsed is not None:
            return parsed
        if name in config:
            return conv(config[name])
        return default

    return Options(
        domain=Domain.parse(flag("domain", args.domain, "q", str)),
        witness=flag("witness", args.witness, False, lambda s: s.lower() in _TRUE),
        project=flag("project", args.project, False, lambda s: s.lower() in _TRUE),
        verify=flag("verify", args.verify, True, lambda s: s.lower() in _TRUE),
        sample=flag("sample", args.sample, None, int),
        seed=flag("seed", args.seed, 0, int),
        max_steps=flag("max-steps", args.max_steps, None, int),
        as_json=flag("json", args.as_json, False, lambda s: s.lower() in _TRUE),
    )


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        opts = _resolve_options(args)
    except (AlmtermError, OSError, ValueError) as exc:
        print(f"almterm: {exc}", file=sys.stderr)
        return EXIT_INPUT_ERROR

    files: list[str] = args.files
    # analyses are independent; the report stream stays in input order
    if len(files) > 1:
        with ThreadPoolExecutor(max_workers=min(4, len(files))) as pool:
            results = list(pool.map(lambda f: analyze_file(f, opts), files))
    else:
        results = [analyze_file(files[0], opts)]

    worst = EXIT_CERTIFIED
    for report, code in results:
        if opts.as_json:
            print(json.dumps(report))
        else:
            print(_render_text(report))
        worst = max(worst, code)
    return worst


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
