"""Command-line interface: ``latent-infection <command> ...``."""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

from latent_infection import rng as rngs
from latent_infection.cascade import Cascade, Observation, observe, simulate_si
from latent_infection.classifiers import fit, load_model, predict, save_model
from latent_infection.config import NetworkSource, RunConfig, load_network
from latent_infection.errors import LatentInfectionError
from latent_infection.evaluation import DEFAULT_FRACTIONS
from latent_infection.features import FEATURE_NAMES, FeatureMatrix, build_features, ib_probabilities
from latent_infection.graph import network_stats, write_edge_list
from latent_infection.reduction import reduce_property1


def _split(text: str) -> list[str]:
    from latent_infection.config import _names

    return list(_names(text))


def _open_out(path: str | None):
    if path is None or path == "-":
        return sys.stdout, False
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    return open(path, "w", encoding="utf-8", newline=""), True


def _network_name(source: str) -> str:
    if NetworkSource("", source).is_generated:
        return source.replace(":", "_").replace(",", "_")
    return Path(source).stem


def _load_observation(args, g):
    with open(args.observation, encoding="utf-8") as fh:
        return Observation.from_csv(fh, g)


# -- commands ------------------------------------------------------------------


def cmd_stats(args) -> int:
    fh, close = _open_out(args.out)
    status = 0
    fh.write("name,n,m,c,sigma,s,d\n")
    for src in args.networks:
        try:
            g = load_network(src, args.seed)
        except (OSError, LatentInfectionError, ValueError) as exc:
            print(f"error: {src}: {exc}", file=sys.stderr)
            status = 1
            continue
        st = network_stats(g)
        if not st.skew_defined:
            print(f"warning: {src}: constant degree sequence, skewness reported as 0", file=sys.stderr)
        fh.write(st.csv_row(_network_name(src)) + "\n")
    if close:
        fh.close()
    return status


def cmd_generate(args) -> int:
    g = load_network(args.model, args.seed)
    fh, close = _open_out(args.out)
    fh.write(f"# {args.model} seed={args.seed} n={g.n} m={g.m}\n")
    write_edge_list(g, fh)
    if close:
        fh.close()
    return 0


def cmd_simulate(args) -> int:
    g = load_network(args.network, args.graph_seed)
    c = simulate_si(g, args.lam, args.stop, rngs.stream(args.seed, rngs.MISC, 0, rngs.CASCADE))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "cascade.csv", "w", encoding="utf-8") as fh:
        c.to_csv(fh, g.labels)
    fraction = args.observed[0] if args.observed else 0.15
    obs = observe(c, g, fraction, rngs.stream(args.seed, rngs.MISC, 0, rngs.OBSERVE))
    with open(out / "observation.csv", "w", encoding="utf-8") as fh:
        obs.to_csv(fh, g.labels)
    print(f"infected {len(c.infected)} of {g.n}; observed {len(obs.observed_infected)} infected, "
          f"{len(obs.observed_susceptible)} susceptible", file=sys.stderr)
    return 0


def cmd_reduce(args) -> int:
    g = load_network(args.network, args.graph_seed)
    obs = _load_observation(args, g)
    red = reduce_property1(g, obs)
    fh, close = _open_out(args.out)
    red.to_csv(fh, obs, g.labels)
    if close:
        fh.close()
    return 0


def cmd_ib(args) -> int:
    g = load_network(args.network, args.graph_seed)
    obs = _load_observation(args, g)
    red = reduce_property1(g, obs)
    p = ib_probabilities(red, g.n, args.alpha)
    fh, close = _open_out(args.out)
    fh.write("node,probability\n")
    for v in sorted(obs.hidden):
        fh.write(f"{int(g.labels[v])},{float(p[v])!r}\n")
    if close:
        fh.close()
    return 0


def cmd_features(args) -> int:
    g = load_network(args.network, args.graph_seed)
    obs = _load_observation(args, g)
    red = reduce_property1(g, obs)
    cascade = None
    if args.cascade:
        with open(args.cascade, encoding="utf-8") as fh:
            cascade = Cascade.from_csv(fh, g)
    fm = build_features(g, obs, red, cascade=cascade, alpha=args.alpha, centrality_graph=args.centrality_graph)
    fh, close = _open_out(args.out)
    fm.to_csv(fh)
    if close:
        fh.close()
    return 0


def _read_features(paths, names) -> FeatureMatrix:
    parts = []
    for p in paths:
        with open(p, encoding="utf-8") as fh:
            parts.append(FeatureMatrix.from_csv(fh))
    fm = FeatureMatrix.concat(parts)
    return fm.select(names) if names else fm


def cmd_train(args) -> int:
    train = _read_features(args.features_csv, args.features)
    kind = args.classifier[0] if args.classifier else "c45"
    model = fit(kind, train, args.seed)
    fh, close = _open_out(args.out)
    save_model(model, fh)
    if close:
        fh.close()
    return 0


def cmd_predict(args) -> int:
    with open(args.model, encoding="utf-8") as fh:
        model = load_model(fh)
    rows = _read_features(args.features_csv, None).select(model.feature_names)
    preds = predict(model, rows, rngs.stream(args.seed, rngs.MISC, 0, rngs.PREDICT))
    fh, close = _open_out(args.out)
    fh.write("node,label,posterior\n")
    for p in preds:
        fh.write(f"{p.node},{p.label},{p.posterior_infected!r}\n")
    if close:
        fh.close()
    return 0


def _config_from_args(args) -> RunConfig:
    if args.config:
        with open(args.config, encoding="utf-8") as fh:
            cfg = RunConfig.from_ini(fh.read())
    else:
        cfg = RunConfig()
    over = {}
    if getattr(args, "network", None):
        nets = tuple(
            NetworkSource(_network_name(s), s, args.graph_seed)
            for s in args.network
        )
        over["networks"] = nets
    if args.seed is not None:
        over["master_seed"] = args.seed
    if args.out is not None:
        over["output"] = args.out
    if args.jobs is not None:
        over["jobs"] = args.jobs
    if args.alpha is not None:
        over["alpha"] = args.alpha
    if args.lam is not None:
        over["lam"] = args.lam
    if args.observed:
        over["observed_fractions"] = tuple(args.observed)
    if args.classifier:
        over["classifiers"] = tuple(args.classifier)
    if args.features:
        over["features"] = tuple(args.features)
    if getattr(args, "train_runs", None) is not None:
        over["n_train_runs"] = args.train_runs
    if getattr(args, "test_runs", None) is not None:
        over["n_test_runs"] = args.test_runs
    if getattr(args, "centrality_graph", None):
        over["centrality_graph"] = args.centrality_graph
    cfg = replace(cfg, **over)
    if not cfg.networks:
        raise LatentInfectionError("no network given (use a [network.NAME] config section or a positional source)")
    return cfg


def cmd_run(args) -> int:
    from latent_infection.runner import execute

    cfg = _config_from_args(args)
    ok, root = execute(cfg)
    print(f"wrote {root / 'results.csv'}, {root / 'summary.csv'}, {root / 'manifest.json'}", file=sys.stderr)
    if not ok:
        print("error: some cells failed; see manifest.json", file=sys.stderr)
    return 0 if ok else 1


def cmd_sweep(args) -> int:
    if not args.observed:
        args.observed = list(DEFAULT_FRACTIONS)
    return cmd_run(args)


# -- parser --------------------------------------------------------------------


def _floats(text: str) -> list[float]:
    return [float(x) for x in text.replace(",", " ").split()]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="latent-infection",
        description="Classify latent infection states in networks from partial observations.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, network=True, nargs=None):
        if network:
            p.add_argument("network", nargs=nargs, help="edge-list file or generator spec (er:N,P | ba:N,K | ws:N,K,BETA)")
            p.add_argument("--graph-seed", type=int, default=0, help="seed for generated networks")
        p.add_argument("--seed", type=int, default=None if p.prog.endswith(("run", "sweep")) else 0)
        p.add_argument("--out", default=None)
        p.add_argument("--config", default=None)
        p.add_argument("--jobs", type=int, default=None)
        p.add_argument("--alpha", type=float, default=None if p.prog.endswith(("run", "sweep")) else 0.01)
        p.add_argument("--lambda", dest="lam", type=float, default=None if p.prog.endswith(("run", "sweep")) else 0.5)
        p.add_argument("--observed", type=_floats, default=None, help="observed fraction(s), comma separated")
        p.add_argument("--classifier", type=_split, default=None, help="e.g. gnb,nbk,c45,random(0.1)")
        p.add_argument("--features", type=_split, default=None, help=f"subset of {','.join(FEATURE_NAMES)}")

    p = sub.add_parser("stats", help="network statistics as CSV")
    p.add_argument("networks", nargs="+")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("generate", help="write a synthetic graph as an edge list")
    p.add_argument("model")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("simulate", help="simulate one SI cascade and a random observation")
    common(p)
    p.add_argument("--stop", type=float, default=0.10, help="stop when this fraction of nodes is infected")
    p.set_defaults(func=cmd_simulate, out_default="sim")

    for name, fn, help_ in (
        ("reduce", cmd_reduce, "classify nodes as kept / pruned"),
        ("ib", cmd_ib, "Infection Betweenness probability of hidden nodes"),
        ("features", cmd_features, "feature CSV for hidden nodes"),
    ):
        p = sub.add_parser(name, help=help_)
        common(p)
        p.add_argument("--observation", required=True, help="CSV node,state with state I or S")
        if name == "features":
            p.add_argument("--cascade", default=None, help="cascade CSV used to attach labels")
            p.add_argument("--centrality-graph", choices=("original", "reduced"), default="original")
        p.set_defaults(func=fn)

    p = sub.add_parser("train", help="fit a classifier on feature CSVs")
    p.add_argument("features_csv", nargs="+")
    common(p, network=False)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", help="apply a saved model to a feature CSV")
    p.add_argument("model")
    p.add_argument("features_csv", nargs="+")
    common(p, network=False)
    p.set_defaults(func=cmd_predict)

    for name, fn, help_ in (
        ("run", cmd_run, "run the full protocol for every (network, observed fraction) cell"),
        ("sweep", cmd_sweep, "observed-fraction sweep on the given networks"),
    ):
        p = sub.add_parser(name, help=help_)
        common(p, nargs="*")
        p.add_argument("--train-runs", type=int, default=None)
        p.add_argument("--test-runs", type=int, default=None)
        p.add_argument("--centrality-graph", choices=("original", "reduced"), default=None)
        p.set_defaults(func=fn)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "simulate" and args.out is None:
        args.out = "sim"
    try:
        return args.func(args)
    except (LatentInfectionError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
