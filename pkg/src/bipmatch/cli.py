"""Command-line front end.

Subcommands: ``gen`` (degree sampling plus uniform pairing, no matching),
``match`` (either construction, emitting run records), ``ode`` (fluid
integration and coverage estimate) and ``experiment`` (declarative studies
from a JSON spec, including the bundled ones).

Exit codes: 0 success, 1 environment or I/O failure, 2 domain error.
"""

from __future__ import annotations

import argparse
import json
import sys
from importlib import resources

from ._rand import child_seed
from .degrees import DistributionSpec, sample_conditioned
from .errors import BipmatchError
from .graphs import BipartiteMultigraph, pair_uniform
from .harness import ExperimentSpec, run_experiment, write_csv
from .hydro import HydroState, MatchKernel, integrate
from .matching import Criterion, explore_match, joint_construct
from ._rand import make_rng

MATCH_COLUMNS = ("replication", "criterion", "n", "coverage",
                 "matched_count", "isolated_count", "seed")


def _add_dist_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--dist", help="distribution for both sides, e.g. dirac:3")
    parser.add_argument("--dist-plus", help="plus-side distribution")
    parser.add_argument("--dist-minus", help="minus-side distribution")


def _resolve_dists(args) -> tuple[DistributionSpec, DistributionSpec]:
    plus = args.dist_plus or args.dist
    minus = args.dist_minus or args.dist
    if not plus or not minus:
        raise BipmatchError("specify --dist or both --dist-plus and --dist-minus")
    return DistributionSpec.parse(plus), DistributionSpec.parse(minus)


def _write_text(path, text: str) -> None:
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)


def cmd_gen(args) -> int:
    xi_plus, xi_minus = _resolve_dists(args)
    rng = make_rng(args.seed)
    sample = sample_conditioned(xi_plus, xi_minus, args.n, rng)
    graph = pair_uniform(sample, rng)
    _write_text(args.out, graph.dumps())
    return 0


def cmd_match(args) -> int:
    criterion = Criterion.parse(args.algo)
    records = []
    if args.graph:
        graph = BipartiteMultigraph.load(args.graph)
        for rep in range(args.reps):
            seed = child_seed(args.seed, "match", rep, args.algo)
            records.append(explore_match(graph, criterion, seed,
                                         record_trajectory=args.trajectory))
    else:
        if not args.joint:
            raise BipmatchError("either --graph FILE or --joint with --dist... is required")
        xi_plus, xi_minus = _resolve_dists(args)
        for rep in range(args.reps):
            seed = child_seed(args.seed, "match", rep, args.algo)
            rng = make_rng(child_seed(args.seed, "match", rep, "sample"))
            sample = sample_conditioned(xi_plus, xi_minus, args.n, rng)
            records.append(joint_construct(sample, criterion, seed,
                                           record_trajectory=args.trajectory))

    if args.format == "json":
        payload = {"records": [r.to_json() for r in records]}
        _write_text(args.out, json.dumps(payload, indent=2, sort_keys=True) + "\n")
    else:
        rows = [(rep, r.criterion, r.n, r.coverage, r.matched_count, r.isolated_count, r.seed)
                for rep, r in enumerate(records)]
        if args.out is None:
            sys.stdout.write(",".join(MATCH_COLUMNS) + "\n")
            for row in rows:
                sys.stdout.write(",".join(repr(x) if isinstance(x, float) else str(x)
                                          for x in row) + "\n")
        else:
            write_csv(args.out, f"match algo={args.algo} seed={args.seed}",
                      MATCH_COLUMNS, rows)
    return 0


def cmd_ode(args) -> int:
    xi_plus, xi_minus = _resolve_dists(args)
    kernel = MatchKernel.for_criterion(args.algo)
    result = integrate(HydroState.from_specs(xi_plus, xi_minus), kernel,
                       h=args.h, end_epsilon=args.epsilon)
    label = f"{xi_plus.label()}/{xi_minus.label()}"
    summary = json.dumps(result.summary(label), indent=2, sort_keys=True) + "\n"
    if args.out is None:
        sys.stdout.write(summary)
        return 0
    _write_text(f"{args.out}.json", summary)
    d = result.states[0].max_degree
    columns = ["s"] + [f"plus_{j}" for j in range(d + 1)] + [f"minus_{j}" for j in range(d + 1)]
    write_csv(f"{args.out}.csv", f"ode kernel={args.algo} initial={label} "
              f"h={args.h!r} epsilon={args.epsilon!r}",
              columns, result.trajectory_rows())
    return 0


def _load_spec(token: str) -> ExperimentSpec:
    import os

    if os.path.exists(token):
        with open(token, "r", encoding="utf-8") as fh:
            return ExperimentSpec.from_json(json.load(fh))
    name = token if token.endswith(".json") else token + ".json"
    bundled = resources.files("bipmatch.specs").joinpath(name)
    if bundled.is_file():
        return ExperimentSpec.from_json(json.loads(bundled.read_text(encoding="utf-8")))
    raise FileNotFoundError(f"no such experiment spec: {token}")


def cmd_experiment(args) -> int:
    spec = _load_spec(args.spec)
    if args.seed is not None:
        spec.seed = args.seed
    run_experiment(spec, out_dir=args.out_dir, workers=args.threads)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bipmatch",
        description="Online matching on bipartite random graphs: simulate and approximate.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_gen = sub.add_parser("gen", help="sample degrees and pair half-edges into a graph")
    _add_dist_flags(p_gen)
    p_gen.add_argument("--n", type=int, required=True)
    p_gen.add_argument("--seed", type=int, default=0)
    p_gen.add_argument("--out", help="edge-list path (default: stdout)")
    p_gen.set_defaults(func=cmd_gen)

    p_match = sub.add_parser("match", help="run a matching construction")
    p_match.add_argument("--graph", help="edge-list file to explore")
    p_match.add_argument("--joint", action="store_true",
                         help="joint construction from sampled degrees")
    _add_dist_flags(p_match)
    p_match.add_argument("--n", type=int, default=1000)
    p_match.add_argument("--algo", required=True, choices=("greedy", "minres"))
    p_match.add_argument("--reps", type=int, default=1)
    p_match.add_argument("--seed", type=int, default=0)
    p_match.add_argument("--trajectory", action="store_true",
                         help="record measure snapshots (json output only)")
    p_match.add_argument("--format", choices=("csv", "json"), default="csv")
    p_match.add_argument("--out")
    p_match.set_defaults(func=cmd_match)

    p_ode = sub.add_parser("ode", help="integrate the fluid system")
    _add_dist_flags(p_ode)
    p_ode.add_argument("--algo", required=True, choices=("greedy", "minres"))
    p_ode.add_argument("--h", type=float, default=1e-4)
    p_ode.add_argument("--epsilon", type=float, default=1e-3)
    p_ode.add_argument("--out", help="output prefix: writes <out>.json and <out>.csv")
    p_ode.set_defaults(func=cmd_ode)

    p_exp = sub.add_parser("experiment", help="run a declarative experiment spec")
    p_exp.add_argument("--spec", required=True,
                       help="spec file path or bundled name (table1, poisson_sweep, "
                            "regular_sweep, karp_triangular)")
    p_exp.add_argument("--out-dir", default=".")
    p_exp.add_argument("--seed", type=int, default=None,
                       help="override the seed embedded in the spec")
    p_exp.add_argument("--threads", type=int, default=1)
    p_exp.set_defaults(func=cmd_experiment)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "trajectory", False) and args.format != "json":
        parser.error("--trajectory requires --format json")
    try:
        return args.func(args)
    except BipmatchError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
