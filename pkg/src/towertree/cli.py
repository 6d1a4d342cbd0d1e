"""Batch front door: profile loading, experiment commands, reports.

One subcommand per process.  Every command echoes its parameters into
a deterministic JSON envelope (``sequences`` emits a tab-separated
table instead) and exits 0 on success, 1 on a verified failure such as
a violated invariant or an impossible construction, 2 on usage errors
including malformed input files.  ``--figures DIR`` additionally
renders the command's matplotlib summary into DIR.
"""

from __future__ import annotations

import argparse
import json
import os
import random
import sys
from typing import List, Optional

from .conditions import condition_from_json, full_condition
from .errors import ConstructionError, TowerTreeError
from .growth import (
    parse_profile_arg,
    remark_certificate,
    richness_threshold,
    seq_E,
    seq_N,
    seq_P,
)
from .mastertree import format_path, indexer, parse_path
from .minimality import build_splitting_fusion
from .names import identity_set_name, name_from_json, value_on_branch
from .report import Stopwatch, make_report, render_json, render_tsv, write_output
from .rigidity import (
    build_bounding_fusion,
    counting_chain,
    make_counter_name,
    verify_phi,
)

_GUARD = 200_000


class UsageError(Exception):
    """Bad invocation or malformed input; the process exits with 2."""


# -- small input helpers -------------------------------------------------------


def _members_type(text: str):
    try:
        parts = [int(p) for p in text.split(",") if p.strip() != ""]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an index list: {text!r}")
    if not parts:
        raise argparse.ArgumentTypeError("the index list is empty")
    return tuple(parts)


def _path_type(text: str):
    try:
        return parse_path(text)
    except (TowerTreeError, ValueError) as exc:
        raise argparse.ArgumentTypeError(str(exc))


def _load_profile(text: str):
    try:
        return parse_profile_arg(text)
    except (TowerTreeError, OSError, ValueError) as exc:
        raise UsageError(f"--profile {text}: {exc}")


def _load_json(path: str) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise UsageError(f"{path}: {exc.strerror or exc}")
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path}:{exc.lineno}: {exc.msg}")


def _load_name(path: str, profile):
    obj = _load_json(path)
    try:
        return name_from_json(obj, profile)
    except TowerTreeError as exc:
        raise UsageError(f"{path}: {exc}")


def _figures_dir(args) -> Optional[str]:
    if getattr(args, "figures", None) is None:
        return None
    os.makedirs(args.figures, exist_ok=True)
    return args.figures


def _error_payload(exc: TowerTreeError) -> dict:
    out = {"type": type(exc).__name__, "message": str(exc)}
    for field in ("check", "clause", "level"):
        if hasattr(exc, field):
            out[field] = getattr(exc, field)
    return out


def _emit(args, report: dict) -> None:
    write_output(render_json(report), args.out)


# -- commands --------------------------------------------------------------------


def _cmd_sequences(args) -> int:
    profile = _load_profile(args.profile)
    rows = []
    try:
        for k in range(args.k + 1):
            rows.append(
                (
                    k,
                    seq_P(profile, k).brief(),
                    seq_N(profile, k).brief(),
                    seq_E(profile, k).brief(),
                )
            )
    except TowerTreeError as exc:
        raise UsageError(f"k = {k} is past this profile's bounds: {exc}")
    write_output(render_tsv(("k", "P_k", "N_k", "E_k"), rows), args.out)
    figures = _figures_dir(args)
    if figures is not None:
        from . import figures as figs

        figs.growth_figure(profile, args.k, os.path.join(figures, "growth.png"))
    return 0


def _cmd_check_remark(args) -> int:
    profile = _load_profile(args.profile)
    parameters = {"m": args.m, "window": args.window}
    with Stopwatch() as watch:
        if profile.profile_id == "canonical":
            cert = remark_certificate(profile, args.m, args.window)
            certified = (
                cert["K"] is not None
                and all(r["holds"] for r in cert["direct_window"])
                and all(r["holds"] for r in cert["inductive_window"])
            )
            payload = cert
            verdicts = {"found": cert["K"] is not None, "ok": certified}
        else:
            threshold = richness_threshold(profile, args.m)
            payload = {
                "m": args.m,
                "K": threshold,
                "note": "inductive certificates are canonical-profile only",
            }
            verdicts = {"found": threshold is not None, "ok": True}
    _emit(
        args,
        make_report(
            "check-remark",
            profile.profile_id,
            parameters,
            payload,
            verdicts,
            watch.seconds,
        ),
    )
    figures = _figures_dir(args)
    if figures is not None and "direct_window" in payload:
        from . import figures as figs

        figs.remark_figure(payload, os.path.join(figures, "remark.png"))
    return 0 if verdicts["ok"] else 1


def _cmd_ind(args) -> int:
    profile = _load_profile(args.profile)
    with Stopwatch() as watch:
        try:
            index = indexer(profile).ind(args.path)
        except TowerTreeError as exc:
            raise UsageError(f"{format_path(args.path)}: {exc}")
    _emit(
        args,
        make_report(
            "ind",
            profile.profile_id,
            {"path": format_path(args.path)},
            {"path": format_path(args.path), "ind": index},
            {"ok": True},
            watch.seconds,
        ),
    )
    return 0


def _cmd_path_of(args) -> int:
    profile = _load_profile(args.profile)
    with Stopwatch() as watch:
        try:
            node = indexer(profile).path_of(args.ind)
        except TowerTreeError as exc:
            raise UsageError(f"index {args.ind}: {exc}")
    _emit(
        args,
        make_report(
            "path-of",
            profile.profile_id,
            {"ind": args.ind},
            {"ind": args.ind, "path": format_path(node)},
            {"ok": True},
            watch.seconds,
        ),
    )
    return 0


def _cmd_check_condition(args) -> int:
    obj = _load_json(args.file)
    try:
        cond = condition_from_json(obj)
    except TowerTreeError as exc:
        raise UsageError(f"{args.file}: {exc}")
    parameters = {"file": args.file, "n_max": args.n_max}
    with Stopwatch() as watch:
        try:
            richness = cond.check_richness(args.n_max, args.guard)
        except TowerTreeError as exc:
            _emit(
                args,
                make_report(
                    "check-condition",
                    cond.profile.profile_id,
                    parameters,
                    {"error": _error_payload(exc)},
                    {"ok": False},
                    0.0,
                ),
            )
            return 1
        failures = richness.failures
        certified = args.n_max
        if failures:
            certified = min(n for _node, n in failures) - 1
        payload = {
            "explicit_nodes": len(cond.explicit_nodes()),
            "tails": len(cond.tails),
            "trunk": format_path(cond.trunk()),
            "fully_explicit": len(cond.tails) == 0,
            "richness": richness.to_json_dict(),
            "certified_up_to": certified,
        }
        verdicts = {"ok": richness.ok, "certified_up_to": certified}
    _emit(
        args,
        make_report(
            "check-condition",
            cond.profile.profile_id,
            parameters,
            payload,
            verdicts,
            watch.seconds,
        ),
    )
    figures = _figures_dir(args)
    if figures is not None:
        from . import figures as figs

        figs.condition_figure(cond, os.path.join(figures, "condition.png"))
    return 0 if richness.ok else 1


def _cmd_simulate_minimality(args) -> int:
    profile = _load_profile(args.profile)
    depth = args.depth if args.depth is not None else args.steps + 1
    if args.name is not None:
        name = _load_name(args.name, profile)
        name_id = args.name
    else:
        name = identity_set_name(profile, depth)
        name_id = f"identity(depth={depth})"
    start = full_condition(profile)
    if args.trunk:
        start = start.restrict(args.trunk)
    parameters = {
        "steps": args.steps,
        "name": name_id,
        "trunk": format_path(args.trunk),
    }
    with Stopwatch() as watch:
        try:
            fusion = build_splitting_fusion(start, name, args.steps, args.guard)
        except TowerTreeError as exc:
            _emit(
                args,
                make_report(
                    "simulate-minimality",
                    profile.profile_id,
                    parameters,
                    {"error": _error_payload(exc)},
                    {"ok": False, "completed": False},
                    0.0,
                ),
            )
            return 1
        payload = fusion.to_json_dict()
        round_trip = []
        good = 0
        expected_len = fusion.levels[-1]
        for branch in fusion.final.level_set(name.depth, args.guard):
            value = value_on_branch(name, branch)
            try:
                decoded = fusion.decode_branch(value)
            except TowerTreeError as exc:
                round_trip.append(
                    {
                        "branch": format_path(branch),
                        "decoded": None,
                        "ok": False,
                        "error": _error_payload(exc),
                    }
                )
                continue
            ok = decoded == branch[:expected_len]
            good += ok
            round_trip.append(
                {
                    "branch": format_path(branch),
                    "decoded": format_path(decoded),
                    "ok": ok,
                }
            )
        payload["round_trip"] = round_trip
        all_ok = good == len(round_trip)
        verdicts = {
            "completed": True,
            "round_trip": f"{good}/{len(round_trip)}",
            "ok": all_ok,
        }
    _emit(
        args,
        make_report(
            "simulate-minimality",
            profile.profile_id,
            parameters,
            payload,
            verdicts,
            watch.seconds,
        ),
    )
    figures = _figures_dir(args)
    if figures is not None:
        from . import figures as figs

        figs.minimality_figure(fusion, os.path.join(figures, "minimality.png"))
    return 0 if all_ok else 1


def _cmd_simulate_rigidity(args) -> int:
    profile = _load_profile(args.profile)
    members = args.A
    if args.name is not None:
        name = _load_name(args.name, profile)
        name_id = args.name
    else:
        try:
            name = make_counter_name(profile, members)
        except ConstructionError as exc:
            raise UsageError(str(exc))
        name_id = f"counter({','.join(str(k) for k in members)})"
    start = full_condition(profile)
    if args.trunk:
        start = start.restrict(args.trunk)
    parameters = {
        "steps": args.steps,
        "A": list(members),
        "name": name_id,
        "trunk": format_path(args.trunk),
    }
    with Stopwatch() as watch:
        try:
            fusion = build_bounding_fusion(
                start, members, name, args.steps, args.guard
            )
        except TowerTreeError as exc:
            _emit(
                args,
                make_report(
                    "simulate-rigidity",
                    profile.profile_id,
                    parameters,
                    {"error": _error_payload(exc)},
                    {"ok": False, "completed": False},
                    0.0,
                ),
            )
            return 1
        payload = fusion.to_json_dict()
        verdicts = {"completed": True}
        if payload["bound"] is None:
            payload["branches_inside_bound"] = None
            verdicts["ok"] = True
            verdicts["bound"] = "incomplete"
        else:
            bound = fusion.final_bound()
            branches = fusion.final.level_set(name.depth, args.guard)
            inside = sum(
                verify_phi(bound, value_on_branch(name, b)) for b in branches
            )
            payload["branches_inside_bound"] = f"{inside}/{len(branches)}"
            verdicts["ok"] = inside == len(branches)
            verdicts["bound"] = "complete"
    _emit(
        args,
        make_report(
            "simulate-rigidity",
            profile.profile_id,
            parameters,
            payload,
            verdicts,
            watch.seconds,
        ),
    )
    figures = _figures_dir(args)
    if figures is not None:
        from . import figures as figs

        figs.rigidity_figure(fusion, os.path.join(figures, "rigidity.png"))
    return 0 if verdicts["ok"] else 1


def _cmd_verify_counting(args) -> int:
    profile = _load_profile(args.profile)
    single = args.A is not None or args.m is not None
    if single and args.random is not None:
        raise UsageError("--random excludes --A/--m")
    if single and (args.A is None or args.m is None):
        raise UsageError("--A and --m go together")
    if not single and args.random is None:
        raise UsageError("pass either --A with --m, or --random N")
    with Stopwatch() as watch:
        if single:
            parameters = {"A": list(args.A), "m": args.m}
            try:
                payload = counting_chain(profile, args.A, args.m)
            except ConstructionError as exc:
                raise UsageError(str(exc))
            verdicts = {"ok": payload["ok"]}
        else:
            parameters = {
                "random": args.random,
                "seed": args.seed,
                "max_m": args.max_m,
            }
            rng = random.Random(args.seed)
            draws = []
            for _ in range(args.random):
                m = rng.randint(0, args.max_m)
                size = rng.randint(1, args.max_m + 1)
                members = sorted(rng.sample(range(args.max_m + 1), size))
                rec = counting_chain(profile, members, m)
                draws.append(
                    {
                        "A": members,
                        "m": m,
                        "ok": rec["ok"],
                        "product": rec["product"],
                    }
                )
            payload = {"draws": draws}
            verdicts = {
                "checked": len(draws),
                "ok": all(d["ok"] for d in draws),
            }
    _emit(
        args,
        make_report(
            "verify-counting",
            profile.profile_id,
            parameters,
            payload,
            verdicts,
            watch.seconds,
        ),
    )
    return 0 if verdicts["ok"] else 1


# -- parser ------------------------------------------------------------------------


def _add_common(sub, profile_default: str, figures: bool = True) -> None:
    sub.add_argument(
        "--profile",
        default=profile_default,
        help="profile: 'canonical', 'scaled:<cap>', or a JSON config path "
        f"(default: {profile_default})",
    )
    sub.add_argument("--out", default=None, help="write the report here")
    if figures:
        sub.add_argument(
            "--figures", default=None, help="also render figures into this directory"
        )


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="towertree",
        description="Exact simulations of tower-growth tree conditions.",
    )
    subs = parser.add_subparsers(dest="command", required=True)

    sub = subs.add_parser("sequences", help="tabulate P_k, N_k, E_k")
    sub.add_argument("--k", type=int, default=4, help="largest index (default 4)")
    _add_common(sub, "canonical")
    sub.set_defaults(handler=_cmd_sequences)

    sub = subs.add_parser(
        "check-remark", help="certify the branching-richness threshold"
    )
    sub.add_argument("--m", type=int, required=True, help="richness exponent")
    sub.add_argument(
        "--window", type=int, default=20, help="verification window (default 20)"
    )
    _add_common(sub, "canonical")
    sub.set_defaults(handler=_cmd_check_remark)

    sub = subs.add_parser("ind", help="index of a node path")
    sub.add_argument("path", type=_path_type, help='node path, e.g. "<0,1,255>"')
    _add_common(sub, "canonical", figures=False)
    sub.set_defaults(handler=_cmd_ind)

    sub = subs.add_parser("path-of", help="node path of an index")
    sub.add_argument("ind", type=int, help="node index")
    _add_common(sub, "canonical", figures=False)
    sub.set_defaults(handler=_cmd_path_of)

    sub = subs.add_parser(
        "check-condition", help="validate a condition file and its richness"
    )
    sub.add_argument("file", help="condition JSON file")
    sub.add_argument(
        "--n-max", type=int, default=2, help="largest richness exponent (default 2)"
    )
    sub.add_argument("--guard", type=int, default=_GUARD)
    sub.add_argument("--out", default=None, help="write the report here")
    sub.add_argument(
        "--figures", default=None, help="also render figures into this directory"
    )
    sub.set_defaults(handler=_cmd_check_condition)

    sub = subs.add_parser(
        "simulate-minimality", help="run the splitting construction"
    )
    sub.add_argument("--steps", type=int, default=2, help="steps (default 2)")
    sub.add_argument(
        "--name", default=None, help="name JSON file (default: identity name)"
    )
    sub.add_argument(
        "--depth",
        type=int,
        default=None,
        help="depth of the default identity name (default steps+1)",
    )
    sub.add_argument(
        "--trunk",
        type=_path_type,
        default=(),
        help='start below this node (default "<>")',
    )
    sub.add_argument("--guard", type=int, default=_GUARD)
    _add_common(sub, "scaled:4")
    sub.set_defaults(handler=_cmd_simulate_minimality)

    sub = subs.add_parser(
        "simulate-rigidity", help="run the bounding construction"
    )
    sub.add_argument("--steps", type=int, default=2, help="steps (default 2)")
    sub.add_argument(
        "--A",
        type=_members_type,
        default=(0, 1, 2),
        help='tracked indices, e.g. "0,1,2"',
    )
    sub.add_argument(
        "--name", default=None, help="name JSON file (default: counter name)"
    )
    sub.add_argument(
        "--trunk",
        type=_path_type,
        default=(0, 1),
        help='start below this node (default "<0,1>")',
    )
    sub.add_argument("--guard", type=int, default=_GUARD)
    _add_common(sub, "scaled:6")
    sub.set_defaults(handler=_cmd_simulate_rigidity)

    sub = subs.add_parser(
        "verify-counting", help="check counting chains, single or random"
    )
    sub.add_argument("--A", type=_members_type, default=None, help="tracked indices")
    sub.add_argument("--m", type=int, default=None, help="top index")
    sub.add_argument(
        "--random", type=int, default=None, help="number of random draws"
    )
    sub.add_argument("--seed", type=int, default=0, help="sweep seed (default 0)")
    sub.add_argument(
        "--max-m", type=int, default=8, help="largest index in draws (default 8)"
    )
    _add_common(sub, "canonical", figures=False)
    sub.set_defaults(handler=_cmd_verify_counting)

    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 2
    try:
        return args.handler(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
