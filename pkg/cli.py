"""
Command line for the Whitehead lab.

Usage:
  python cli.py ball   -g groups/z2z2.grp -R 4
  python cli.py verify -g groups/z2z3.grp --suite local-contractibility
  python cli.py reduce -g groups/z2z2.grp --basis "ε; 1:1"
  python cli.py fixed  -g groups/z2z2z2.grp --count 3
  python cli.py trees  -n 3

Every flag has a WLAB_* environment default (see .env.example). Artifacts go
under --out and are listed with their sha256 in manifest.json.

Exit codes: 0 pass, 1 verification failure, 2 resource cap, 3 input error.
"""

import argparse
import hashlib
import json
import os
import sys
import tempfile
from pathlib import Path
from typing import Dict, List, Optional

import numpy as np
import pandas as pd

from basis_norms import basis_to_json, canonicalize_basis, norm_W
from complex_builder import (
    NoReductiveMoveError,
    VertexType,
    ball_to_dot,
    ball_to_jsonl,
    enumerate_ball,
    random_basis,
    reduce_to_minimal,
)
from config import NORMS, RunConfig, get_logger, load_run_config, setup_logging
from fixed_points import constructed_subgroups, fixed_subcomplex, standard_representative
from group_core import CapExceededError, FreeProduct, GroupSpecError, format_word, load_group_file, parse_word
from verification import run_suites, suite_names
from whitehead_poset import enumerate_pointed_trees, nuclear_tree, tree_to_dot, trees_to_jsonl

logger = get_logger("cli")

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_CAP = 2
EXIT_INPUT = 3


class ArtifactWriter:
    """Atomic writes under one output directory, remembered for the manifest."""

    def __init__(self, root):
        self.root = Path(root)
        self.entries: Dict[str, str] = {}

    def write(self, name: str, text: str) -> Path:
        target = self.root / name
        target.parent.mkdir(parents=True, exist_ok=True)
        data = text.encode("utf-8")
        fd, tmp = tempfile.mkstemp(dir=target.parent, prefix=f".{target.name}.")
        try:
            with os.fdopen(fd, "wb") as handle:
                handle.write(data)
            os.replace(tmp, target)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise
        self.entries[name] = hashlib.sha256(data).hexdigest()
        return target

    def write_json(self, name: str, payload) -> Path:
        return self.write(name, json.dumps(payload, indent=2, sort_keys=True, ensure_ascii=False) + "\n")

    def finish(self, config: RunConfig) -> Optional[Path]:
        if not self.entries:
            return None
        manifest = {
            "config_hash": config.config_hash(),
            "seed": config.seed,
            "artifacts": [{"path": name, "sha256": digest} for name, digest in sorted(self.entries.items())],
        }
        return self.write_json("manifest.json", manifest)


def _report_header(config: RunConfig, command: str) -> dict:
    return {"command": command, "config": config.to_dict(), "seed": config.seed}


def _load_group(config: RunConfig) -> FreeProduct:
    fp = load_group_file(config.group)
    print(f"✓ Group {fp.describe()} (n = {fp.n}) from {config.group}")
    return fp


def _basis_words(H) -> List[str]:
    return [format_word(w) for w in H.conjugators]


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def cmd_ball(config: RunConfig, args, writer: ArtifactWriter) -> int:
    fp = _load_group(config)
    ball = enumerate_ball(fp, radius=config.radius, cap=config.cap_ball)
    writer.write("ball.jsonl", ball_to_jsonl(ball))
    writer.write("ball.dot", ball_to_dot(ball))
    print(f"✅ Ball of radius {ball.radius}: {len(ball)} vertices, {len(ball.edges)} edges")
    return EXIT_OK


def cmd_verify(config: RunConfig, args, writer: ArtifactWriter) -> int:
    names = suite_names(config.suite)
    fp = _load_group(config)
    print("=" * 60)
    print(f"VERIFY {fp.describe()}  seed={config.seed}  norm={config.norm}")
    print("=" * 60)
    reports = run_suites(fp, config, names)
    rows = []
    for report in reports:
        status = "✅" if report.passed else "❌"
        print(f"{status} {report.name:<22} {report.checks:>6} checks  {report.seconds:8.2f}s")
        for message in report.warnings:
            print(f"   ⚠️ {message}")
        payload = _report_header(config, "verify")
        payload["group"] = fp.describe()
        payload.update(report.to_dict())
        writer.write_json(f"verify/{report.name}.json", payload)
        rows.append({
            "suite": report.name,
            "passed": report.passed,
            "checks": report.checks,
            "failures": len(report.failures),
            "warnings": len(report.warnings),
            "seconds": report.seconds,
        })
    summary = pd.DataFrame(rows, columns=["suite", "passed", "checks", "failures", "warnings", "seconds"])
    writer.write("verify/summary.csv", summary.to_csv(index=False))
    print("=" * 60)
    print(summary.to_string(index=False))
    failed = [r.name for r in reports if not r.passed]
    if failed:
        print(f"❌ {len(failed)} suite(s) failed: {', '.join(failed)}")
        return EXIT_FAILED
    print(f"✅ All {len(reports)} suite(s) passed")
    return EXIT_OK


def cmd_reduce(config: RunConfig, args, writer: ArtifactWriter) -> int:
    fp = _load_group(config)
    if args.basis is not None:
        words = [parse_word(fp, part) for part in args.basis.split(";")]
        H = canonicalize_basis(fp, words)
    else:
        H = random_basis(fp, args.random, np.random.default_rng(config.seed))
    W0 = fp.lambdas()
    start = VertexType(H, nuclear_tree(range(fp.n + 1)))
    print(f"Start: {'; '.join(_basis_words(H))}  (norm {norm_W(fp, H, W0)})")
    payload = _report_header(config, "reduce")
    payload["start"] = basis_to_json(H)
    try:
        path = reduce_to_minimal(fp, start, norm=config.norm, W0=W0, cutoff=config.cutoff)
    except NoReductiveMoveError as exc:
        payload["error"] = str(exc)
        writer.write_json("reduce.json", payload)
        print(f"❌ {exc}")
        return EXIT_FAILED
    steps = []
    for number, step in enumerate(path, start=1):
        words = _basis_words(step.vertex.basis)
        print(f"  {number:>3}. {step.move.describe(fp):<30} -> {'; '.join(words)}  (norm {step.norm})")
        steps.append({"move": step.move.describe(fp), "basis": words, "norm": step.norm})
    payload["steps"] = steps
    writer.write_json("reduce.json", payload)
    print(f"✅ Reached the standard basis in {len(path)} step(s)")
    return EXIT_OK


def cmd_fixed(config: RunConfig, args, writer: ArtifactWriter) -> int:
    fp = _load_group(config)
    ball = enumerate_ball(fp, radius=config.radius, cap=config.cap_ball)
    subgroups = constructed_subgroups(fp, args.count, cap=min(12, config.cap_order))
    if not subgroups:
        print("⚠️ No finite subgroup could be based at a reduced vertex")
    failures = 0
    for number, F in enumerate(subgroups, start=1):
        fixed = fixed_subcomplex(fp, ball, F)
        inside = [fv for fv in fixed.vertices if fv.within_margin]
        reduced = {fv.vertex for fv in inside if fv.reduced}
        standard = {fv.vertex for fv in inside if standard_representative(fp, fv.vertex, F) is not None}
        ok = reduced == standard
        failures += not ok
        payload = _report_header(config, "fixed")
        payload.update({
            "base_tree": F.tree.code(),
            "order": F.order,
            "generators": [
                {"y": [list(row) for row in y.y], "psi": [list(p.images) for p in y.psi]}
                for y in F.generator_factors()
            ],
            "circ": {f"{j},{k}": list(members) for (j, k), members in sorted(F.circ.pairs.items())},
            "fixed_vertices": len(fixed),
            "reduced_vertices": len(reduced),
            "standard_equals_reduced": ok,
            "witnesses": [v.to_json() for v in sorted(reduced ^ standard, key=VertexType.key)],
        })
        writer.write_json(f"fixed/F{number}.json", payload)
        status = "✅" if ok else "❌"
        print(f"{status} F{number}: |F| = {F.order}, base {F.tree.code()}, "
              f"{len(fixed)} fixed / {len(reduced)} reduced")
    return EXIT_FAILED if failures else EXIT_OK


def cmd_trees(config: RunConfig, args, writer: ArtifactWriter) -> int:
    trees = enumerate_pointed_trees(args.n)
    writer.write("trees.jsonl", trees_to_jsonl(trees))
    writer.write("trees.dot", "\n".join(tree_to_dot(T, f"tree{i}") for i, T in enumerate(trees)))
    print(f"✅ {len(trees)} pointed trees on {args.n} labels")
    return EXIT_OK


COMMANDS = {
    "ball": cmd_ball,
    "verify": cmd_verify,
    "reduce": cmd_reduce,
    "fixed": cmd_fixed,
    "trees": cmd_trees,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-g", "--group", help="group-spec file (WLAB_GROUP)")
    common.add_argument("-R", "--radius", type=int, help="W0 radius of the ball (default n + 4)")
    common.add_argument("--norm", choices=NORMS, help="norm used for reduction (WLAB_NORM)")
    common.add_argument("--cap-ball", type=int, help="maximum number of ball vertices")
    common.add_argument("--cap-order", type=int, help="maximum element order searched")
    common.add_argument("--cutoff", type=int, help="initial Z^G cutoff")
    common.add_argument("--seed", type=int, help="seed for randomised suites")
    common.add_argument("--out", help="output directory (WLAB_OUT)")
    common.add_argument("--suite", help="comma-separated suite names or 'all'")
    common.add_argument("--log-level", help="DEBUG, INFO, WARNING (WLAB_LOG_LEVEL)")

    parser = argparse.ArgumentParser(prog="wlab", description="Whitehead poset lab for free products of finite groups")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("ball", parents=[common], help="enumerate the nuclear ball")
    sub.add_parser("verify", parents=[common], help="run acceptance suites")
    reduce = sub.add_parser("reduce", parents=[common], help="peak-reduce a basis")
    source = reduce.add_mutually_exclusive_group(required=True)
    source.add_argument("--basis", help="conjugators separated by ';', e.g. \"ε; 1:1\"")
    source.add_argument("--random", type=int, metavar="MOVES", help="random basis from MOVES seeded moves")
    fixed = sub.add_parser("fixed", parents=[common], help="fixed subcomplexes of constructed finite subgroups")
    fixed.add_argument("--count", type=int, default=3, help="number of subgroups")
    trees = sub.add_parser("trees", parents=[common], help="export all pointed trees")
    trees.add_argument("-n", type=int, required=True, help="number of non-base labels")
    return parser


def config_from_args(args) -> RunConfig:
    return load_run_config(
        group=args.group,
        radius=args.radius,
        norm=args.norm,
        cap_ball=args.cap_ball,
        cap_order=args.cap_order,
        cutoff=args.cutoff,
        seed=args.seed,
        out=args.out,
        suite=args.suite,
    )


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    setup_logging(args.log_level)
    try:
        config = config_from_args(args)
        writer = ArtifactWriter(config.out)
        code = COMMANDS[args.command](config, args, writer)
        writer.finish(config)
        return code
    except CapExceededError as exc:
        print(f"❌ {exc}")
        return EXIT_CAP
    except (GroupSpecError, ValueError, OSError) as exc:
        print(f"❌ {exc}")
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
