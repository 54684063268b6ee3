"""Command line entry point: ``snfcycles simulate | fit | analyze | selftest``.

Settings come from defaults, then ``--config`` (JSON, either flat or with
one section per command), then explicit flags. Exit status is 0 on success,
2 for configuration errors and 3 for runtime failures.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time

import numpy as np

from . import __version__
from .analysis import (
    classical_mds,
    common_cycles,
    eda_distance_profile,
    format_interval,
    friedman_rafsky,
    posterior_mode_centroid,
    trace_summary,
    write_cycle_table_csv,
    write_eda_csv,
    write_fr_csv,
    write_mds_csv,
)
from .cycles import CycleBudget, CycleCache, enumerate_cycles, write_cycle_report
from .errors import (
    BudgetExceeded,
    InvalidConfig,
    InvalidSpec,
    ParseError,
    SchemaMismatch,
    SnfError,
    SpaceTooLarge,
)
from .graphs import (
    GeneratorSpec,
    NetworkPopulation,
    concat_populations,
    default_spec,
    generate,
    make_graph,
    read_population,
    write_population,
)
from .inference import (
    ALPHA_CAP,
    CerPriors,
    IsConfig,
    MoveMixture,
    SnfPriors,
    fit_cer,
    fit_snf,
    fit_snf_auxvar,
    gamma_prior_from_cer,
    is_config_from_cer,
    medoid_network,
)
from .metrics import MetricSpec, distance_matrix, write_distance_matrix
from .models import CerParams, SnfParams, sample_cer, sample_snf
from .rng import substream
from .surrogate import SurrogateConfig

CONFIG_ERRORS = (InvalidConfig, InvalidSpec, SpaceTooLarge, ParseError, SchemaMismatch,
                 FileNotFoundError, IsADirectoryError, json.JSONDecodeError)


class _ConfigError(Exception):
    pass


# ---------------------------------------------------------------------------
# argument helpers


def _parse_edges(text, n):
    """``"1-2,2-3"`` (1-based) -> graph."""
    edges = []
    for tok in filter(None, (t.strip() for t in text.split(","))):
        try:
            a, b = tok.split("-")
            edges.append((int(a) - 1, int(b) - 1))
        except ValueError as exc:
            raise _ConfigError(f"cannot parse edge {tok!r}; use 1-based 'u-v' pairs") from exc
    return make_graph(n, edges)


def _load_graph(arg, n=None):
    """A graph from an edge string or from the first network of a dataset."""
    if arg is None:
        return None
    if os.path.exists(arg):
        return read_population(arg).graphs[0]
    if n is None:
        raise _ConfigError("--n is required when the centroid is given as an edge list")
    return _parse_edges(arg, n)


def _gamma_grid(text):
    """``"0.01,0.6,1.6"`` or ``"start:stop[:count]"``."""
    if ":" in text:
        parts = [float(x) for x in text.split(":")]
        if len(parts) == 2:
            parts.append(8)
        if len(parts) != 3:
            raise _ConfigError("gamma grid range must be start:stop[:count]")
        return list(np.linspace(parts[0], parts[1], int(parts[2])))
    return [float(x) for x in text.split(",") if x.strip()]


def _metric(args, lam=None):
    return MetricSpec(args.metric, args.lam if lam is None else lam, not args.raw_hamming)


def _out_path(args, name):
    os.makedirs(args.out, exist_ok=True)
    return os.path.join(args.out, name)


def _write_json(path, obj):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=1, sort_keys=True)
        fh.write("\n")


def _edges_1based(g):
    return [[i + 1, j + 1] for i, j in g.edges]


# ---------------------------------------------------------------------------
# simulate


def cmd_simulate(args):
    seed = args.seed
    if args.model in ("snf", "cer"):
        centroid = _load_graph(args.centroid, args.n)
        if centroid is None:
            raise _ConfigError("--centroid is required for snf/cer simulation")
        iters = args.burnin + args.count * args.thin
        rng = substream(seed, f"simulate:{args.model}")
        if args.model == "snf":
            if args.gamma is None:
                raise _ConfigError("--gamma is required for snf simulation")
            params = SnfParams(centroid, args.gamma, _metric(args))
            graphs = sample_snf(params, args.omega, iters, args.burnin, args.thin, seed=rng)
            prov = {"model": "snf", "gamma": args.gamma, "metric": params.metric.to_dict()}
        else:
            if args.alpha is None:
                raise _ConfigError("--alpha is required for cer simulation")
            graphs = sample_cer(CerParams(centroid, args.alpha), args.omega, iters, args.burnin,
                                args.thin, seed=rng)
            prov = {"model": "cer", "alpha": args.alpha}
        prov.update({"centroid": _edges_1based(centroid), "burnin": args.burnin,
                     "thin": args.thin})
        pop = NetworkPopulation(centroid.n, graphs)
    else:
        if args.n is None:
            raise _ConfigError("--n is required")
        parts = args.corpus or [f"{args.model}:{args.count}"]
        pops, groups, specs = [], [], []
        for k, part in enumerate(parts):
            variant, _, count = part.partition(":")
            count = int(count or args.count)
            spec = default_spec(variant, args.n, args.density, seed * 1000 + k + 1)
            if args.p is not None or args.power is not None or args.block_sizes or args.block_probs:
                spec = GeneratorSpec(
                    variant, args.n, p=spec.p if args.p is None else args.p,
                    power=spec.power if args.power is None else args.power,
                    block_sizes=tuple(args.block_sizes) if args.block_sizes else spec.block_sizes,
                    block_probs=(tuple(tuple(r) for r in json.loads(args.block_probs))
                                 if args.block_probs else spec.block_probs),
                    target_density=args.density, seed=spec.seed)
            pops.append(generate(spec, count))
            groups.append(variant)
            specs.append({"variant": variant, "count": count, "seed": spec.seed, "p": spec.p,
                          "power": spec.power, "block_sizes": list(spec.block_sizes),
                          "block_probs": [list(r) for r in spec.block_probs]})
        pop = concat_populations(pops, groups)
        prov = {"model": "corpus", "parts": specs, "density": args.density}
    path = _out_path(args, args.name)
    write_population(pop, path)
    prov.update({"seed": seed, "n": pop.n, "networks": len(pop), "version": __version__})
    _write_json(path[:-5] + ".provenance.json" if path.endswith(".json") else path + ".provenance.json", prov)
    print(f"wrote {len(pop)} networks to {path}")
    return 0


# ---------------------------------------------------------------------------
# fit


def _summary_block(trace, burn, credible):
    s = trace_summary(trace, burn, credible)
    out = s.to_dict()
    out["interval_text"] = format_interval(*s.interval)
    return out


def cmd_fit(args):
    pop = read_population(args.data)
    metric = _metric(args)
    seed = args.seed
    moves = MoveMixture(args.p_flip, args.p_bernoulli, args.p_gamma, args.omega)
    burn = args.iters // 5 if args.burn_in is None else args.burn_in
    t_start = time.perf_counter()
    summary = {"model": args.model, "iters": args.iters, "burn_in": burn, "seed": seed,
               "threads": args.threads}
    if args.model == "cer":
        g0 = medoid_network(pop, MetricSpec.hamming_raw())
        trace = fit_cer(pop, CerPriors(g0, args.alpha0_cer, args.alpha_a, args.alpha_b), moves,
                        args.iters, seed)
        summary["alpha"] = _summary_block(trace, burn, args.credible)
    else:
        z_mode = args.z_mode.replace("-", "_")
        if args.model == "snf" and z_mode == "exact" and pop.n > 6:
            raise SpaceTooLarge(pop.n, 6)
        g0 = medoid_network(pop, metric)
        cer_trace = fit_cer(pop, CerPriors(g0), iters=args.cer_iters, seed=seed)
        cer_burn = args.cer_iters // 5
        rate = args.gamma_rate
        if rate is None:
            _, rate = gamma_prior_from_cer(cer_trace, pop, metric, cer_burn, args.gamma_shape)
        priors = SnfPriors(g0, args.gamma0, args.gamma_shape, rate)
        is_cfg = is_config_from_cer(cer_trace, args.is_k, cer_burn, cap=args.alpha_cap,
                                    burnin=args.is_burnin, thin=args.is_thin, seed=seed)
        if args.alpha_tilde is not None:
            is_cfg = IsConfig(args.is_k, args.alpha_tilde, is_cfg.centroid_tilde, args.is_burnin,
                              args.is_thin, None, seed)
        summary["prior"] = {"gamma_shape": priors.gamma_shape, "gamma_rate": priors.gamma_rate,
                            "gamma0": priors.gamma0, "g0": _edges_1based(g0)}
        cache = CycleCache(budget=CycleBudget(args.max_cycles, args.max_millis))
        if args.model == "auxvar":
            aux = CerParams(is_cfg.centroid_tilde, is_cfg.alpha_tilde)
            trace = fit_snf_auxvar(pop, priors, metric, moves, aux, args.iters, seed, cache=cache)
        else:
            sur = SurrogateConfig(args.rounds, args.max_depth, args.shrinkage, args.min_leaf)
            trace = fit_snf(pop, priors, metric, moves, is_cfg if z_mode != "exact" else None,
                            z_mode, args.iters, seed, surrogate_cfg=sur, cache=cache)
            summary["z_mode"] = z_mode
        if args.model == "auxvar" or z_mode != "exact":
            summary["importance"] = {"K": is_cfg.K, "alpha_tilde": is_cfg.alpha_tilde,
                                     "centroid_tilde": _edges_1based(is_cfg.centroid_tilde)}
        summary["gamma"] = _summary_block(trace, burn, args.credible)
        summary["budget_rejections"] = trace.budget_rejections
        if metric.uses_cycles:
            rows = common_cycles(trace, pop, args.top_cycles, burn, cache)
            summary["cycle_table"] = [r.format() for r in rows]
            write_cycle_table_csv(rows, _out_path(args, "cycle_table.csv"))
    total = time.perf_counter() - t_start
    modes = posterior_mode_centroid(trace, args.top_centroids, burn)
    summary["modal_centroids"] = [{"fingerprint": g.fingerprint_hex, "mass": m,
                                   "edges": _edges_1based(g)} for g, m in modes]
    summary["acceptance"] = {m: trace.acceptance_rate(m) for m, k in trace.proposed_counts().items() if k}
    trace.write_csv(_out_path(args, "trace.csv"))
    trace.write_centroid_dictionary(_out_path(args, "centroids.json"))
    _write_json(_out_path(args, "summary.json"), summary)
    wall = np.asarray(trace.wall_ms)
    per_move = {m: float(np.mean([w for w, t in zip(wall, trace.move_type) if t == m]))
                for m, k in trace.proposed_counts().items() if k}
    _write_json(_out_path(args, "timing.json"), {
        "iterations": len(trace), "total_seconds": total,
        "mean_iteration_ms": float(wall.mean()), "median_iteration_ms": float(np.median(wall)),
        "per_move_mean_ms": per_move,
    })
    disp = summary.get("alpha") or summary.get("gamma")
    name = "alpha" if args.model == "cer" else "gamma"
    print(f"{name}: posterior mean {disp['mean']:.4g}, {int(args.credible * 100)}% interval "
          f"{disp['interval_text']}")
    print("modal centroid masses: " + ", ".join(f"{m:.3f}" for _, m in modes))
    print(f"mean iteration {wall.mean():.2f} ms; outputs in {args.out}")
    return 0


# ---------------------------------------------------------------------------
# analyze


def cmd_analyze(args):
    what = args.what
    if what == "eda":
        centroid = _load_graph(args.centroid or args.data, args.n)
        if centroid is None:
            raise _ConfigError("eda needs --centroid or a dataset")
        rows = eda_distance_profile(centroid, _metric(args), _gamma_grid(args.gamma_grid),
                                    args.draws, args.burnin, args.thin, args.omega, args.seed)
        write_eda_csv(rows, _out_path(args, "eda.csv"))
        for r in rows:
            print(f"gamma={r.gamma:.4g}: min {r.minimum:.4g} q1 {r.q1:.4g} median {r.median:.4g} "
                  f"q3 {r.q3:.4g} max {r.maximum:.4g}")
        return 0
    if args.data is None:
        raise _ConfigError(f"analyze {what} needs a dataset")
    pop = read_population(args.data)
    ids = [str(k + 1) for k in range(len(pop))]
    if what == "cycles":
        for k, g in enumerate(pop):
            write_cycle_report(enumerate_cycles(g), _out_path(args, f"cycles_{k + 1}.csv"))
        print(f"wrote cycle reports for {len(pop)} networks")
        return 0
    lams = args.lambdas or [args.lam]
    if what == "distances":
        D = distance_matrix(pop, _metric(args))
        write_distance_matrix(D, _out_path(args, "distances.csv"), ids)
        print(f"wrote {len(D)}x{len(D)} distance matrix")
        return 0
    if what == "mds":
        D = distance_matrix(pop, _metric(args))
        coords = classical_mds(D)
        write_mds_csv(coords, _out_path(args, "mds.csv"), ids, list(pop.groups) if pop.groups else None)
        print(f"wrote {len(coords)} MDS coordinates")
        return 0
    if what == "fr":
        if pop.groups is None and args.groups is None:
            raise _ConfigError("Friedman-Rafsky needs group tags in the dataset or --groups")
        groups = args.groups.split(",") if args.groups else list(pop.groups)
        results = []
        metrics = [(args.metric, lam) for lam in lams] if args.metric == "hs" else [(args.metric, args.lam)]
        for kind, lam in metrics:
            spec = MetricSpec(kind, lam, not args.raw_hamming)
            r = friedman_rafsky(distance_matrix(pop, spec), groups, args.perms, args.seed)
            label = f"hs(lambda={lam:g})" if kind == "hs" else kind
            results.append((label, r))
            print(f"{label}: statistic {r.statistic}, p = {r.p_value:.4g} ({r.permutations} permutations)")
        write_fr_csv(results, _out_path(args, "fr.csv"))
        return 0
    raise _ConfigError(f"unknown analysis {what!r}")


# ---------------------------------------------------------------------------
# selftest


def _selftest_checks():
    from itertools import combinations, permutations

    from .graphs import complete_graph, graph_space
    from .inference import draw_is_sample, estimate_log_z_is
    from .models import CerChain, cer_distribution, exact_log_z

    def brute_cycles(g):
        found = set()
        nodes = range(g.n)
        for k in range(3, g.n + 1):
            for subset in combinations(nodes, k):
                first = subset[0]
                for perm in permutations(subset[1:]):
                    seq = (first,) + perm
                    if seq[1] > seq[-1]:
                        continue
                    if all(g.has_edge(seq[i], seq[(i + 1) % k]) for i in range(k)):
                        found.add(seq)
        return found

    def cycle_oracle():
        return all(enumerate_cycles(g).cycles == brute_cycles(g) for g in graph_space(4)) and \
            [len(enumerate_cycles(complete_graph(n))) for n in (3, 4, 5)] == [1, 7, 37]

    def cer_normalization():
        return all(abs(cer_distribution(CerParams(make_graph(4, [(0, 1)]), a)).sum() - 1) < 1e-12
                   for a in (0.05, 0.2, 0.4))

    def exact_z():
        c = make_graph(5, [(0, 1), (1, 2), (0, 2), (2, 3), (3, 4)])
        metric = MetricSpec("hs")
        lz = exact_log_z(SnfParams(c, 0.6, metric))
        chain = CerChain(CerParams(c, 0.45), None, substream(0, "selftest"))
        est = [estimate_log_z_is(c, 0.6, metric, draw_is_sample(chain, 2000, 200, 10)) for _ in range(10)]
        return abs(float(np.median(est)) - lz) < 0.05

    return [("cycle oracle (graph_space(4), K3..K5)", cycle_oracle),
            ("CER normalisation (graph_space(4))", cer_normalization),
            ("exact-Z vs importance sampling (n=5)", exact_z)]


def cmd_selftest(args):
    ok = True
    for name, check in _selftest_checks():
        passed = bool(check())
        ok &= passed
        print(f"{'PASS' if passed else 'FAIL'}  {name}")
    return 0 if ok else 3


# ---------------------------------------------------------------------------
# parser


def _add_common(p):
    p.add_argument("--config", help="JSON file with default settings")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=1,
                   help="worker count; results do not depend on it")
    p.add_argument("--out", default="out", help="output directory")
    p.add_argument("--verbose", action="store_true")


def _add_metric(p, default="hs"):
    p.add_argument("--metric", default=default,
                   choices=["hamming", "jaccard", "centrality", "symmetric", "hs"])
    p.add_argument("--lambda", dest="lam", type=float, default=1.0)
    p.add_argument("--raw-hamming", action="store_true",
                   help="use the raw edge-disagreement count instead of the normalised one")


def build_parser():
    parser = argparse.ArgumentParser(prog="snfcycles", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="generate a dataset")
    _add_common(p)
    p.add_argument("--model", required=True, choices=["snf", "cer", "er", "pa", "sbm"])
    p.add_argument("--n", type=int)
    p.add_argument("--count", type=int, default=5)
    p.add_argument("--centroid", help="dataset file or 1-based edge list '1-2,2-3'")
    p.add_argument("--gamma", type=float)
    p.add_argument("--alpha", type=float)
    p.add_argument("--omega", type=float)
    p.add_argument("--burnin", type=int, default=10_000)
    p.add_argument("--thin", type=int, default=1000)
    p.add_argument("--corpus", nargs="+", help="variant:count parts, e.g. er:10 pa:10 sbm:10")
    p.add_argument("--p", type=float)
    p.add_argument("--power", type=float)
    p.add_argument("--block-sizes", type=int, nargs="+")
    p.add_argument("--block-probs", help="JSON matrix of block probabilities")
    p.add_argument("--density", type=float)
    p.add_argument("--name", default="data.json")
    _add_metric(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("fit", help="fit a CER or SNF model")
    _add_common(p)
    p.add_argument("data")
    p.add_argument("--model", default="snf", choices=["cer", "snf", "auxvar"])
    p.add_argument("--z-mode", default="is-surrogate",
                   choices=["exact", "is-exact-cycles", "is-surrogate"])
    p.add_argument("--iters", type=int, default=5000)
    p.add_argument("--burn-in", type=int)
    p.add_argument("--credible", type=float, default=0.95)
    p.add_argument("--is-k", type=int, default=2000)
    p.add_argument("--alpha-tilde", type=float)
    p.add_argument("--alpha-cap", type=float, default=ALPHA_CAP)
    p.add_argument("--is-burnin", type=int, default=200)
    p.add_argument("--is-thin", type=int, default=10)
    p.add_argument("--cer-iters", type=int, default=5000)
    p.add_argument("--gamma0", type=float, default=0.01)
    p.add_argument("--gamma-shape", type=float, default=1.0)
    p.add_argument("--gamma-rate", type=float)
    p.add_argument("--alpha0-cer", type=float, default=0.01)
    p.add_argument("--alpha-a", type=float, default=1.0)
    p.add_argument("--alpha-b", type=float, default=1.0)
    p.add_argument("--p-flip", type=float, default=0.4)
    p.add_argument("--p-bernoulli", type=float, default=0.1)
    p.add_argument("--p-gamma", type=float, default=0.5)
    p.add_argument("--omega", type=float)
    p.add_argument("--rounds", type=int, default=100)
    p.add_argument("--max-depth", type=int, default=4)
    p.add_argument("--shrinkage", type=float, default=0.1)
    p.add_argument("--min-leaf", type=int, default=5)
    p.add_argument("--max-cycles", type=int, default=500_000)
    p.add_argument("--max-millis", type=int, default=10_000)
    p.add_argument("--top-centroids", type=int, default=5)
    p.add_argument("--top-cycles", type=int, default=10)
    _add_metric(p)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("analyze", help="distances, MDS, Friedman-Rafsky, EDA, cycles")
    p.add_argument("what", choices=["fr", "mds", "eda", "distances", "cycles"])
    p.add_argument("data", nargs="?")
    _add_common(p)
    _add_metric(p)
    p.add_argument("--lambdas", type=float, nargs="+", help="several HS weights for fr")
    p.add_argument("--perms", type=int, default=50_000)
    p.add_argument("--groups", help="comma-separated group tags, overriding the dataset's")
    p.add_argument("--centroid")
    p.add_argument("--n", type=int)
    p.add_argument("--gamma-grid", default="0.01,0.6,1.1,1.6")
    p.add_argument("--draws", type=int, default=100)
    p.add_argument("--burnin", type=int, default=1000)
    p.add_argument("--thin", type=int, default=10)
    p.add_argument("--omega", type=float)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("selftest", help="run the small-graph oracle checks")
    _add_common(p)
    p.set_defaults(func=cmd_selftest)
    return parser


def _parse(parser, argv):
    # an optional positional that follows flags is left over by argparse
    args, extra = parser.parse_known_args(argv)
    if extra and getattr(args, "command", None) == "analyze" and args.data is None \
            and len(extra) == 1 and not extra[0].startswith("-"):
        args.data = extra[0]
    elif extra:
        parser.error(f"unrecognized arguments: {' '.join(extra)}")
    return args


def _apply_config(parser, argv):
    """Re-parse with defaults taken from the ``--config`` file."""
    args = _parse(parser, argv)
    if not getattr(args, "config", None):
        return args
    with open(args.config, encoding="utf-8") as fh:
        cfg = json.load(fh)
    if not isinstance(cfg, dict):
        raise _ConfigError("config file must hold a JSON object")
    section = cfg.get(args.command, cfg)
    flat = {k.replace("-", "_"): v for k, v in section.items() if not isinstance(v, dict)}
    sub = parser._subparsers._group_actions[0].choices[args.command]
    known = {a.dest for a in sub._actions}
    unknown = sorted(set(flat) - known)
    if unknown:
        raise _ConfigError(f"unknown config keys: {', '.join(unknown)}")
    sub.set_defaults(**flat)
    return _parse(parser, argv)


def main(argv=None):
    parser = build_parser()
    try:
        args = _apply_config(parser, argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    except (_ConfigError, *CONFIG_ERRORS) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.threads < 1:
        print("config error: --threads must be >= 1", file=sys.stderr)
        return 2
    try:
        return args.func(args)
    except (_ConfigError, *CONFIG_ERRORS) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (BudgetExceeded, SnfError, RuntimeError, OSError, ValueError, ArithmeticError) as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return 3
    except Exception as exc:  # anything unforeseen is still a runtime failure
        logging.getLogger(__name__).debug("unhandled", exc_info=True)
        print(f"runtime error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
