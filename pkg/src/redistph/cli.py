"""Batch command line interface.

Every subcommand accepts ``--config`` (JSON experiment config), ``--seed``,
``--out`` and ``--threads``; explicit flags override config values.  Errors
are reported as one JSON object on stderr; configuration problems exit with
status 2, other failures with status 1.
"""

from __future__ import annotations

import argparse
import json
import random
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import io
from .analysis import compare_biased, compare_elections, summarize_ensemble
from .chains import BiasConfig, ChainConfig, Ensemble, biased_chain, flip_step, recursive_tree_part, run_chain
from .errors import ConfigError, RedistError, ZeroTurnoutDistrict
from .frechet import default_seeds, frechet_mean
from .graph_core import DualGraph, Election, district_graph, republican_share, statewide_share
from .metrics import INF, distance_matrix, wasserstein
from .persistence import plan_diagram
from .plotting import diagram_svg
from .stability import (
    classify_perturbation,
    flip_trace,
    geo_stability_bound,
    mean_pairwise_bottleneck,
    recom_preservation_rate,
    vote_stability_check,
)
from .synth import synth_state


@dataclass
class ExperimentConfig:
    graph: str | None = None
    k: int | None = None
    epsilon: float = 0.02
    elections: list[Election] = field(default_factory=list)
    chain: dict = field(default_factory=dict)
    bias: dict | None = None
    analysis: dict = field(default_factory=dict)
    output: str = "out"
    seed: int = 0

    @classmethod
    def load(cls, path: str | None) -> "ExperimentConfig":
        if path is None:
            return cls()
        p = Path(path)
        try:
            doc = json.loads(p.read_text())
        except FileNotFoundError:
            raise ConfigError(f"config file {path} not found") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file {path} is not valid JSON: {exc}") from None
        base = p.parent
        cfg = cls()
        for key in ("k", "epsilon", "chain", "bias", "analysis", "seed"):
            if key in doc:
                setattr(cfg, key, doc[key])
        for key in ("graph", "output"):
            if doc.get(key) is not None:
                setattr(cfg, key, str((base / doc[key]) if not Path(doc[key]).is_absolute() else doc[key]))
        cfg.elections = [_election(e) for e in doc.get("elections", [])]
        return cfg


def _election(e) -> Election:
    if isinstance(e, dict):
        return Election(e["name"], e["republican"], e["democratic"])
    if isinstance(e, (list, tuple)) and len(e) == 3:
        return Election(*e)
    raise ConfigError(f"cannot read election {e!r}")


# ---------------------------------------------------------------- helpers


class _Run:
    """Resolved settings for one invocation."""

    def __init__(self, args):
        self.args = args
        self.cfg = ExperimentConfig.load(args.config)
        if args.seed is not None:
            self.cfg.seed = args.seed
        if not 0 <= self.cfg.seed < 2**64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        self.out = Path(args.out or self.cfg.output)
        self.threads = max(1, args.threads)
        self._graph: DualGraph | None = None

    def graph(self) -> DualGraph:
        if self._graph is None:
            path = getattr(self.args, "graph", None) or self.cfg.graph
            if path is None:
                raise ConfigError("no graph given (use --graph or the config's 'graph')")
            if not Path(path).exists():
                raise ConfigError(f"graph file {path} not found")
            self._graph = io.load_graph(path)
        return self._graph

    def elections(self) -> list[Election]:
        names = getattr(self.args, "election", None) or []
        known = {e.name: e for e in self.cfg.elections}
        if names:
            chosen = []
            for n in names:
                if n in known:
                    chosen.append(known[n])
                elif ":" in n:
                    name, rep, dem = (n.split(":") + ["", ""])[:3]
                    chosen.append(Election(name, rep, dem))
                else:
                    raise ConfigError(f"election {n!r} is not defined in the config")
        else:
            chosen = list(self.cfg.elections)
        if not chosen:
            raise ConfigError("no election given (use --election or the config's 'elections')")
        g = self.graph()
        for e in chosen:
            for attr in (e.republican, e.democratic):
                if attr not in g.attributes:
                    raise ConfigError(f"election {e.name!r} references missing attribute {attr!r}")
        return chosen

    def analysis(self, key, default):
        flag = getattr(self.args, key, None)
        if flag is not None:
            return flag
        return self.cfg.analysis.get(key, default)

    def progress(self, record: dict) -> None:
        sys.stderr.write(json.dumps({"event": "progress", **record}, sort_keys=True) + "\n")
        sys.stderr.flush()


_WORKER_GRAPH: DualGraph | None = None


def _init_worker(graph_doc):
    global _WORKER_GRAPH
    _WORKER_GRAPH = io.graph_from_dict(graph_doc)


def _diagram_job(args):
    labels, k, eps, election = args
    from .graph_core import _plan_unchecked

    plan = _plan_unchecked(_WORKER_GRAPH, labels, k, eps)
    try:
        return plan_diagram(_WORKER_GRAPH, plan, election), None
    except ZeroTurnoutDistrict as exc:
        return None, str(exc)


def _diagrams(run: _Run, ensemble: Ensemble, election: Election):
    g = run.graph()
    jobs = [(p.labels, p.k, p.epsilon, election) for p in ensemble.plans]
    if run.threads > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(run.threads, initializer=_init_worker, initargs=(io.graph_to_dict(g),)) as pool:
            return list(pool.map(_diagram_job, jobs, chunksize=16))
    out = []
    for p in ensemble.plans:
        try:
            out.append((plan_diagram(g, p, election), None))
        except ZeroTurnoutDistrict as exc:
            out.append((None, str(exc)))
    return out


def _read_diagram_dir(path) -> tuple[list[str], list]:
    d = Path(path)
    files = sorted(d.glob("plan_*.csv"))
    if not files:
        raise ConfigError(f"no plan_*.csv diagrams in {path}")
    return [f.stem for f in files], [io.read_diagram_csv(f) for f in files]


def _seeds(run: _Run, n: int):
    value = run.analysis("frechet_seeds", 20)
    if value == "all":
        return "all"
    return default_seeds(n, int(value))


def _ensemble_arg(run: _Run, attr: str = "ensemble") -> Ensemble:
    path = getattr(run.args, attr)
    if path is None:
        raise ConfigError(f"--{attr.replace('_', '-')} is required")
    if not (Path(path) / "manifest.json").exists():
        raise ConfigError(f"{path} is not an ensemble directory")
    return io.read_ensemble(run.graph(), path)


# ---------------------------------------------------------------- commands


def cmd_synth(run: _Run) -> None:
    a = run.args
    cities = []
    for spec in a.city or []:
        r, c, radius, intensity = (float(x) for x in spec.split(","))
        cities.append(((int(r), int(c)), radius, intensity))
    g = synth_state(a.rows, a.cols, cities, run.cfg.seed, base_dem_share=a.base_dem_share, noise=a.noise)
    run.out.mkdir(parents=True, exist_ok=True)
    io.save_graph(g, run.out / "graph.json")


def _chain_config(run: _Run) -> tuple[ChainConfig, str]:
    a = run.args
    c = dict(run.cfg.chain)
    steps = a.steps if a.steps is not None else c.get("steps")
    if steps is None:
        raise ConfigError("number of steps not given")
    cfg = ChainConfig(
        steps=int(steps),
        subsample_interval=int(a.subsample if a.subsample is not None else c.get("subsample_interval", 1)),
        epsilon=float(a.epsilon if a.epsilon is not None else run.cfg.epsilon),
        rng_seed=int(run.cfg.seed),
        max_resplit_attempts=int(c.get("max_resplit_attempts", 100)),
        max_step_attempts=int(c.get("max_step_attempts", 10_000)),
    )
    return cfg, a.kind or c.get("kind", "recom")


def _k(run: _Run) -> int:
    k = run.args.k if getattr(run.args, "k", None) is not None else run.cfg.k
    if k is None or int(k) < 2:
        raise ConfigError("k must be given and at least 2")
    return int(k)


def cmd_ensemble(run: _Run) -> None:
    g = run.graph()
    k = _k(run)
    cfg, kind = _chain_config(run)
    if run.args.initial:
        initial = io.read_plan_csv(g, run.args.initial, k, cfg.epsilon)
    else:
        initial = recursive_tree_part(g, k, cfg.epsilon, random.Random(f"{cfg.rng_seed}:initial"))
    bias_party = run.args.bias or (run.cfg.bias or {}).get("party")
    cadence = run.args.progress_every
    if bias_party:
        election = run.elections()[0]
        party = {
            "democratic": (election.democratic, election.republican),
            "republican": (election.republican, election.democratic),
        }.get(bias_party)
        if party is None:
            raise ConfigError(f"bias party must be 'democratic' or 'republican', got {bias_party!r}")
        b = run.cfg.bias or {}
        bias = BiasConfig(party, float(b.get("safe_threshold", 0.53)), float(b.get("beta", 2.0)))
        ens = biased_chain(g, initial, cfg, bias, progress=run.progress, progress_every=cadence)
        ens.metadata["bias_party"] = bias_party
    else:
        ens = run_chain(g, initial, cfg, kind, progress=run.progress, progress_every=cadence)
    io.write_ensemble(ens, run.out)


def cmd_persist(run: _Run) -> None:
    ens = _ensemble_arg(run)
    election = run.elections()[0]
    out = run.out / "diagrams"
    out.mkdir(parents=True, exist_ok=True)
    results = _diagrams(run, ens, election)
    kept, skipped = [], []
    for i, (d, err) in enumerate(results):
        if d is None:
            skipped.append({"plan": i, "warning": err})
            run.progress({"kind": "persist", "warning": err, "plan": i})
            continue
        io.write_diagram_csv(d, out / f"plan_{i:06d}.csv")
        kept.append((i, d))
    pooled = [(i, q) for i, d in kept for q in d.points]
    io.write_overlay_csv(pooled, run.out / "overlay.csv")
    io.dump_json({"election": election.name, "diagrams": len(kept), "skipped": skipped}, run.out / "persist.json")
    (run.out / "overlay.svg").write_text(
        diagram_svg([([(q.birth, q.death) for _, q in pooled], "steelblue")], f"overlay {election.name}", 1.5)
    )


def _p(value: str) -> float:
    return INF if value in ("inf", "infinity") else float(value)


def cmd_wasserstein(run: _Run) -> None:
    names, diagrams = _read_diagram_dir(run.args.diagrams)
    p = _p(run.args.p)
    run.out.mkdir(parents=True, exist_ok=True)
    io.write_matrix_csv(distance_matrix(diagrams, p), names, run.out / "distances.csv")
    if run.args.matchings:
        doc = {}
        for a in range(len(diagrams)):
            for b in range(a + 1, len(diagrams)):
                doc[f"{names[a]}|{names[b]}"] = wasserstein(diagrams[a], diagrams[b], p).as_dict()
        io.dump_json(doc, run.out / "matchings.json")


def cmd_frechet(run: _Run) -> None:
    names, diagrams = _read_diagram_dir(run.args.diagrams)
    res = frechet_mean(
        diagrams,
        _seeds(run, len(diagrams)),
        int(run.analysis("frechet_max_iter", 200)),
        float(run.analysis("frechet_tol", 1e-8)),
    )
    run.out.mkdir(parents=True, exist_ok=True)
    doc = res.as_dict()
    doc["seed_plan"] = names[res.seed_id]
    io.dump_json(doc, run.out / "frechet.json")
    io.write_diagram_csv(res.mean, run.out / "frechet_mean.csv")
    pooled = [(q.birth, q.death) for d in diagrams for q in d.points]
    (run.out / "frechet.svg").write_text(
        diagram_svg([(pooled, "lightsteelblue"), ([(q.birth, q.death) for q in res.mean.points], "red")], "Frechet mean", 2)
    )


def _summary(run: _Run, g, plans, election):
    return summarize_ensemble(
        g,
        plans,
        election,
        float(run.analysis("min_persistence", 0.05)),
        _seeds(run, len(plans)),
        int(run.analysis("frechet_max_iter", 200)),
        float(run.analysis("frechet_tol", 1e-8)),
    )


def cmd_zoning(run: _Run) -> None:
    g = run.graph()
    ens = _ensemble_arg(run)
    election = run.elections()[0]
    s = _summary(run, g, ens.plans, election)
    run.out.mkdir(parents=True, exist_ok=True)
    io.write_diagram_csv(s.frechet.mean, run.out / "frechet_mean.csv")
    report = {
        "election": election.name,
        "frechet": s.frechet.as_dict(),
        "features": [[q.birth, "inf" if q.death == INF else q.death] for q in s.features.points],
        "label_rates": [s.marked.label_rate(f) for f in range(len(s.features))],
        "unstable_features": s.marked.unstable(),
        **s.zones.as_dict(),
    }
    io.dump_json(report, run.out / "zoning.json")
    for f, hm in enumerate(s.heat_maps):
        io.write_heatmap_csv(hm.frequency, g.ids, run.out / f"heatmap_feature_{f}.csv")
        io.write_heatmap_csv(s.zones.zones[f].cluster_heat, g.ids, run.out / f"cluster_feature_{f}.csv")
        pts = [(b, d) for _, b, d in s.marked.point_plot(f)]
        (run.out / f"feature_{f}.svg").write_text(diagram_svg([(pts, "darkorange")], f"feature {f}"))


def cmd_compare_elections(run: _Run) -> None:
    g = run.graph()
    ens = _ensemble_arg(run)
    elections = run.elections()
    if len(elections) < 2:
        raise ConfigError("compare-elections needs two elections")
    ea, eb = elections[:2]
    sa = _summary(run, g, ens.plans, ea)
    sb = _summary(run, g, ens.plans, eb)
    mode = run.analysis("matching_mode", "optimal_l2")
    statewide = (statewide_share(g, ea), statewide_share(g, eb))
    cmp = compare_elections(sa.features, sb.features, mode, sa.heat_maps, sb.heat_maps, g.ids, statewide)
    run.out.mkdir(parents=True, exist_ok=True)
    doc = cmp.as_dict()
    doc.update({"election_a": ea.name, "election_b": eb.name, "statewide": list(statewide)})
    io.dump_json(doc, run.out / "compare_elections.json")


def cmd_compare_biased(run: _Run) -> None:
    g = run.graph()
    ens_d = _ensemble_arg(run, "ensemble_d")
    ens_r = _ensemble_arg(run, "ensemble_r")
    election = run.elections()[0]
    rep = compare_biased(
        g,
        ens_d.plans,
        ens_r.plans,
        election,
        float(run.analysis("min_persistence", 0.05)),
        float((run.cfg.bias or {}).get("safe_threshold", 0.53)),
        _seeds(run, min(len(ens_d), len(ens_r))),
    )
    run.out.mkdir(parents=True, exist_ok=True)
    doc = rep.as_dict()
    doc["mean_safe_dem_seats"] = {"d": rep.mean_safe_seats("d", "democratic"), "r": rep.mean_safe_seats("r", "democratic")}
    io.dump_json(doc, run.out / "compare_biased.json")


def random_vote_trials(trials: int, seed: int, max_k: int = 10) -> list[dict]:
    """Random connected graphs with two random filtrations, checked against the sup-norm bound."""
    rng = np.random.default_rng(seed)
    rows = []
    for t in range(trials):
        k = int(rng.integers(1, max_k + 1))
        edges = {(i - 1, i) if rng.random() < 0.5 else (int(rng.integers(0, i)), i) for i in range(1, k)}
        for _ in range(int(rng.integers(0, k + 1))):
            a, b = sorted(rng.choice(k, 2, replace=False).tolist()) if k > 1 else (0, 0)
            if a != b:
                edges.add((a, b))
        f = rng.random(k)
        g = np.clip(f + rng.uniform(-0.2, 0.2, k), 0, 1)
        from .graph_core import DistrictGraph

        dg = DistrictGraph(k, frozenset(edges), np.zeros(k, dtype=np.int64), {})
        rep = vote_stability_check(dg, f, g)
        rows.append({"trial": t, "k": k, "bound": rep.theoretical_bound, "observed": rep.observed_bottleneck, "satisfied": rep.satisfied})
    return rows


def cmd_stability(run: _Run) -> None:
    mode = run.args.mode
    run.out.mkdir(parents=True, exist_ok=True)
    seed = run.cfg.seed
    if mode == "vote":
        if run.args.ensemble:
            g = run.graph()
            ens = _ensemble_arg(run)
            elections = run.elections()
            if len(elections) < 2:
                raise ConfigError("vote mode on an ensemble needs two elections")
            ea, eb = elections[:2]
            rows = []
            for i, p in enumerate(ens.plans):
                dg = district_graph(g, p)
                fa = republican_share(dg, ea).filtration
                fb = republican_share(dg, eb).filtration
                rep = vote_stability_check(dg, fa, fb)
                rows.append({"plan": i, "bound": rep.theoretical_bound, "observed": rep.observed_bottleneck, "satisfied": rep.satisfied})
        else:
            rows = random_vote_trials(run.args.trials, seed)
        io.dump_json({"mode": "vote", "trials": rows, "all_satisfied": all(r["satisfied"] for r in rows)}, run.out / "stability_vote.json")
        return

    g = run.graph()
    ens = _ensemble_arg(run)
    election = run.elections()[0]
    starts = ens.plans[: run.args.starts]
    rng = random.Random(seed)
    if mode == "flip-trace":
        traces = []
        for i, p in enumerate(starts):
            tr = flip_trace(g, p, election, run.args.steps, rng)
            io.write_trace_csv(tr, run.out / f"trace_{i:04d}.csv")
            traces.append([v for _, v in tr])
            run.progress({"kind": "flip-trace", "start": i, "starts": len(starts)})
        diagrams = [plan_diagram(g, p, election) for p in starts]
        finals = [t[-1] for t in traces if t]
        doc = {
            "mode": "flip-trace",
            "steps": run.args.steps,
            "traces": traces,
            "final_drift": finals,
            "median_final_drift": float(np.median(finals)) if finals else None,
            "reference_mean_pairwise": mean_pairwise_bottleneck(diagrams),
        }
        io.dump_json(doc, run.out / "stability_flip.json")
    elif mode == "geo":
        rows = []
        for i, p in enumerate(starts):
            plan = p
            for _ in range(run.args.steps):
                nxt = flip_step(g, plan, rng)
                pc = classify_perturbation(plan, nxt, g)
                if pc.kind == "one_way" and pc.graph_preserving:
                    rep = geo_stability_bound(plan, nxt, g, election, perturbation=pc)
                    rows.append({"start": i, "bound": rep.theoretical_bound, "observed": rep.observed_bottleneck, "alpha": rep.alpha, "satisfied": rep.satisfied})
                plan = nxt
        io.dump_json({"mode": "geo", "checks": rows, "all_satisfied": all(r["satisfied"] for r in rows)}, run.out / "stability_geo.json")
    elif mode == "recom-rate":
        cfg = ChainConfig(steps=max(1, run.args.steps), epsilon=starts[0].epsilon, rng_seed=seed)
        rates = [recom_preservation_rate(g, p, run.args.steps, cfg, rng) for p in starts]
        io.dump_json({"mode": "recom-rate", "rates": rates}, run.out / "stability_recom.json")
    else:
        raise ConfigError(f"unknown stability mode {mode!r}")


COMMANDS = {
    "synth": cmd_synth,
    "ensemble": cmd_ensemble,
    "persist": cmd_persist,
    "wasserstein": cmd_wasserstein,
    "frechet": cmd_frechet,
    "zoning": cmd_zoning,
    "compare-elections": cmd_compare_elections,
    "compare-biased": cmd_compare_biased,
    "stability": cmd_stability,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="experiment config JSON")
    common.add_argument("--seed", type=int, help="RNG seed (unsigned 64-bit)")
    common.add_argument("--out", help="output directory")
    common.add_argument("--threads", type=int, default=1)
    common.add_argument("--progress-every", type=int, default=1000, help="progress cadence in steps")

    parser = argparse.ArgumentParser(prog="redistph", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", parents=[common], help="write a synthetic grid state")
    p.add_argument("--rows", type=int, default=12)
    p.add_argument("--cols", type=int, default=12)
    p.add_argument("--city", action="append", help="row,col,radius,intensity")
    p.add_argument("--base-dem-share", type=float, default=0.4)
    p.add_argument("--noise", type=float, default=0.03)

    p = sub.add_parser("ensemble", parents=[common], help="sample a plan ensemble")
    p.add_argument("--graph")
    p.add_argument("--k", type=int)
    p.add_argument("--epsilon", type=float)
    p.add_argument("--steps", type=int)
    p.add_argument("--subsample", type=int)
    p.add_argument("--kind", choices=["recom", "flip"])
    p.add_argument("--initial", help="initial plan CSV")
    p.add_argument("--bias", choices=["democratic", "republican"])
    p.add_argument("--election", action="append")

    p = sub.add_parser("persist", parents=[common], help="diagrams for every plan")
    p.add_argument("--graph")
    p.add_argument("--ensemble")
    p.add_argument("--election", action="append")

    p = sub.add_parser("wasserstein", parents=[common], help="pairwise diagram distances")
    p.add_argument("--diagrams", required=True)
    p.add_argument("--p", default="inf")
    p.add_argument("--matchings", action="store_true")

    p = sub.add_parser("frechet", parents=[common], help="Frechet mean of diagrams")
    p.add_argument("--diagrams", required=True)
    p.add_argument("--frechet-seeds", dest="frechet_seeds")
    p.add_argument("--frechet-tol", dest="frechet_tol", type=float)
    p.add_argument("--frechet-max-iter", dest="frechet_max_iter", type=int)

    for name in ("zoning", "compare-elections"):
        p = sub.add_parser(name, parents=[common])
        p.add_argument("--graph")
        p.add_argument("--ensemble")
        p.add_argument("--election", action="append")
        p.add_argument("--min-persistence", dest="min_persistence", type=float)
        p.add_argument("--frechet-seeds", dest="frechet_seeds")
        p.add_argument("--matching-mode", dest="matching_mode", choices=["optimal_l2", "geographic"])

    p = sub.add_parser("compare-biased", parents=[common])
    p.add_argument("--graph")
    p.add_argument("--ensemble-d", dest="ensemble_d")
    p.add_argument("--ensemble-r", dest="ensemble_r")
    p.add_argument("--election", action="append")
    p.add_argument("--min-persistence", dest="min_persistence", type=float)
    p.add_argument("--frechet-seeds", dest="frechet_seeds")

    p = sub.add_parser("stability", parents=[common])
    p.add_argument("--mode", choices=["vote", "geo", "flip-trace", "recom-rate"], required=True)
    p.add_argument("--graph")
    p.add_argument("--ensemble")
    p.add_argument("--election", action="append")
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--starts", type=int, default=20)
    p.add_argument("--steps", type=int, default=1000)
    return parser


def _fail(exc: Exception, code: int) -> int:
    sys.stderr.write(json.dumps({"error": type(exc).__name__, "message": str(exc), "exit_code": code}) + "\n")
    return code


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        run = _Run(args)
        COMMANDS[args.command](run)
    except ConfigError as exc:
        return _fail(exc, 2)
    except (RedistError, ValueError, OSError) as exc:
        return _fail(exc, 1)
    return 0


if __name__ == "__main__":
    sys.exit(main())
