"""Command line entry point: ``cosym check | gallery | mutate``."""
from __future__ import annotations

import argparse
import json
import sys

from .gallery import ENTRIES, MUTATIONS, MutationError, mutate_and_expect_failure
from .manifest import SECTIONS, ManifestError, export_manifest, load_manifest, run_checks
from .report import Report
from .symbolic import SamplePolicy


def _policy(args, base: SamplePolicy) -> SamplePolicy:
    box = tuple(args.box) if args.box else base.box
    return SamplePolicy(args.samples if args.samples is not None else base.samples,
                        args.tol if args.tol is not None else base.tol,
                        args.seed if args.seed is not None else base.seed, box)


def _emit(report: Report, fmt: str, timing: bool = False) -> None:
    if fmt == "json":
        print(report.dumps(timing))
    else:
        print(report.to_text(timing))


def _policy_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--samples", type=int, help="sample points for numeric zero tests")
    p.add_argument("--tol", type=float, help="absolute tolerance for numeric zero tests")
    p.add_argument("--seed", type=int, help="sampling seed")
    p.add_argument("--box", type=float, nargs=2, metavar=("LO", "HI"), help="sampling box")
    p.add_argument("--format", choices=("json", "text"), default="text")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cosym", description="Verify cosymplectic constructions from JSON manifests.")
    sub = parser.add_subparsers(dest="command", required=True)

    check = sub.add_parser("check", help="run checks on a manifest")
    check.add_argument("manifest")
    check.add_argument("--select", nargs="+", default=["all"], choices=SECTIONS + ("all",))
    check.add_argument("--timing", action="store_true", help="include wall-clock timings (not deterministic)")
    _policy_flags(check)

    gallery = sub.add_parser("gallery", help="built-in fixtures")
    gsub = gallery.add_subparsers(dest="gallery_command", required=True)
    gsub.add_parser("list", help="list fixtures and named mutants")
    run = gsub.add_parser("run", help="run a fixture")
    run.add_argument("name")
    _policy_flags(run)
    export = gsub.add_parser("export", help="print a fixture as an explicit manifest")
    export.add_argument("name")

    mutate = sub.add_parser("mutate", help="edit a fixture and require the checks to catch it")
    mutate.add_argument("name", help="gallery fixture, or a named mutant when no --target is given")
    mutate.add_argument("--target", help="JSON pointer to the edited value, e.g. /actions/rot/rho/xi")
    mutate.add_argument("--replace", help="replacement expression (JSON for structured targets)")
    mutate.add_argument("--expect", nargs="*", default=[], help="check ids that must fail with a witness")
    _policy_flags(mutate)
    return parser


def _cmd_check(args) -> int:
    try:
        m = load_manifest(args.manifest)
    except FileNotFoundError:
        print(f"error: no such manifest {args.manifest!r}", file=sys.stderr)
        return 2
    except ManifestError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    report = run_checks(m, args.select, _policy(args, m.policy))
    _emit(report, args.format, args.timing)
    return 0 if report.status == "PASS" else 1


def _cmd_gallery(args) -> int:
    if args.gallery_command == "list":
        for name, e in ENTRIES.items():
            print(f"{name:<18} {e.description}")
        print("\nmutants:")
        for name, mt in MUTATIONS.items():
            print(f"{name:<18} on {mt.entry}: {', '.join(p for p, _ in mt.edits)}")
        return 0
    if args.name not in ENTRIES:
        print(f"error: unknown gallery entry {args.name!r}", file=sys.stderr)
        return 2
    entry = ENTRIES[args.name]
    if args.gallery_command == "export":
        print(json.dumps(export_manifest(entry.manifest()), indent=2))
        return 0
    m = entry.manifest()
    report = run_checks(m, list(entry.selection), _policy(args, m.policy))
    _emit(report, args.format)
    return 0 if report.status == "PASS" else 1


def _cmd_mutate(args) -> int:
    try:
        if args.target is None:
            if args.name not in MUTATIONS:
                raise MutationError(f"unknown mutant {args.name!r}; give --target and --replace for a fixture")
            mt = MUTATIONS[args.name]
            entry, edits, failed, skipped = ENTRIES[mt.entry], mt.edits, mt.expect_failed, mt.expect_skipped
        else:
            if args.name not in ENTRIES:
                raise MutationError(f"unknown gallery entry {args.name!r}")
            if args.replace is None:
                raise MutationError("--replace is required with --target")
            entry, edits, failed, skipped = ENTRIES[args.name], ((args.target, args.replace),), args.expect, ()
        policy = _policy(args, entry.manifest().policy)
        report, harness = mutate_and_expect_failure(entry, edits, failed, skipped, policy)
    except MutationError as exc:
        print(f"harness error: {exc}", file=sys.stderr)
        return 2
    _emit(report, args.format)
    print("--- harness", file=sys.stderr)
    print(harness.to_text(), file=sys.stderr)
    return 0 if harness.status == "PASS" else 1


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    handler = {"check": _cmd_check, "gallery": _cmd_gallery, "mutate": _cmd_mutate}[args.command]
    return handler(args)


if __name__ == "__main__":
    sys.exit(main())
