"""Ensemble analyses built on diagrams and their Fréchet means.

* overlay, feature selection, marking, localization and zoning of one ensemble
* comparing two elections on the same ensemble
* comparing ensembles biased towards each party
"""

from __future__ import annotations

import math
from collections import Counter, deque
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .chains import district_shares
from .errors import AnchorNotPartyWon, ModeUnavailable
from .frechet import FrechetResult, frechet_mean
from .graph_core import DistrictGraph, DualGraph, Election, Plan, district_graph, republican_share
from .metrics import diagonal_projection, wasserstein
from .persistence import INF, Diagram, DiagramPoint, persistence_diagram

UNSTABLE_LABEL_RATE = 0.2


def overlay(diagrams: Sequence[Diagram]) -> list[tuple[int, DiagramPoint]]:
    """All points of all diagrams, each tagged with the index of its plan."""
    return [(i, q) for i, d in enumerate(diagrams) for q in d.points]


def select_features(mean: Diagram, min_persistence: float = 0.05) -> Diagram:
    """Points at least ``min_persistence`` from the diagonal, most persistent first."""
    chosen = [q for q in mean.points if q.death - q.birth >= min_persistence]
    chosen.sort(key=lambda q: (-(q.death - q.birth), q.birth))
    return Diagram(tuple(DiagramPoint(q.birth, q.death) for q in chosen), mean.k)


@dataclass
class MarkedEnsemble:
    """Per-plan labels: ``labels[i][f]`` is the point of plan ``i`` matched to feature ``f``."""

    features: Diagram
    labels: list[dict[int, DiagramPoint]]

    def label_rate(self, feature: int) -> float:
        if not self.labels:
            return 0.0
        return sum(feature in lab for lab in self.labels) / len(self.labels)

    def point_plot(self, feature: int) -> list[tuple[int, float, float]]:
        return [(i, lab[feature].birth, lab[feature].death) for i, lab in enumerate(self.labels) if feature in lab]

    def unstable(self) -> list[int]:
        return [f for f in range(len(self.features)) if self.label_rate(f) < UNSTABLE_LABEL_RATE]


def mark(diagrams: Sequence[Diagram], features: Diagram) -> MarkedEnsemble:
    if not len(features):
        raise ValueError("no features to mark with")
    labels = []
    for d in diagrams:
        m = wasserstein(features, d, 2.0)
        labels.append({f: d.points[j] for f, j in m.pairs})
    return MarkedEnsemble(features, labels)


@dataclass
class HeatMap:
    feature: int
    frequency: dict[str, float] | None
    label_rate: float
    labeled_plans: int

    def as_vector(self, ids: Sequence[str]) -> np.ndarray:
        if self.frequency is None:
            return np.zeros(len(ids))
        return np.array([self.frequency[v] for v in ids])


def _frequency(g: DualGraph, counts: np.ndarray, total: int) -> dict[str, float] | None:
    if total == 0:
        return None
    return {v: float(c) / total for v, c in zip(g.ids, counts)}


def localize(marked: MarkedEnsemble, ensemble: Sequence[Plan], g: DualGraph) -> list[HeatMap]:
    """Per feature, how often each unit lies in the district anchoring the feature's label.

    Frequencies are normalised by the number of plans that carry a label for
    the feature; features never labelled get ``frequency=None``.
    """
    plans = list(ensemble)
    maps = []
    for f in range(len(marked.features)):
        counts = np.zeros(g.n_nodes)
        labeled = 0
        for plan, lab in zip(plans, marked.labels):
            q = lab.get(f)
            if q is None:
                continue
            labeled += 1
            counts += plan.labels == q.anchor
        maps.append(HeatMap(f, _frequency(g, counts, labeled), marked.label_rate(f), labeled))
    return maps


def party_cluster(dg: DistrictGraph, anchor: int, threshold: float = 0.5) -> list[int]:
    """Districts reachable from ``anchor`` through districts with filtration below ``threshold``."""
    values = dg.filtration
    nbrs = dg.neighbors()
    seen = {anchor}
    queue = deque([anchor])
    while queue:
        u = queue.popleft()
        for w in nbrs[u]:
            if w not in seen and values[w] < threshold:
                seen.add(w)
                queue.append(w)
    return sorted(seen)


@dataclass
class FeatureZone:
    feature: int
    point: DiagramPoint
    mean_cluster_size: float | None
    nw_fraction: float
    cluster_sizes: list[int]
    cluster_heat: dict[str, float] | None


@dataclass
class ZoneReport:
    zones: list[FeatureZone]

    def as_dict(self) -> dict:
        return {
            "zones": [
                {
                    "feature": z.feature,
                    "point": [z.point.birth, _json_death(z.point.death)],
                    "mean_cluster_size": z.mean_cluster_size,
                    "nw_fraction": z.nw_fraction,
                    "cluster_sizes": z.cluster_sizes,
                }
                for z in self.zones
            ]
        }


def _json_death(d: float):
    return "inf" if d == INF else d


def zone(
    marked: MarkedEnsemble,
    ensemble: Sequence[Plan],
    dgs: Sequence[DistrictGraph],
    g: DualGraph | None = None,
    threshold: float = 0.5,
) -> ZoneReport:
    """Clusters of districts won by the non-filtration party, per feature.

    ``dgs[i]`` must be plan ``i``'s district graph filtered by the share the
    diagrams were computed from.  Pass ``g`` to get cluster heat maps.
    """
    plans = list(ensemble)
    zones = []
    for f, feature in enumerate(marked.features.points):
        sizes = []
        counts = np.zeros(g.n_nodes) if g is not None else None
        for i, lab in enumerate(marked.labels):
            q = lab.get(f)
            if q is None or not (q.birth < threshold < q.death):
                continue
            dg = dgs[i]
            if not dg.filtration[q.anchor] < threshold:
                raise AnchorNotPartyWon(f"plan {i}: anchor {q.anchor} has share {dg.filtration[q.anchor]}")
            cluster = party_cluster(dg, q.anchor, threshold)
            sizes.append(len(cluster))
            if counts is not None:
                counts += np.isin(plans[i].labels, cluster)
        n = len(marked.labels)
        zones.append(
            FeatureZone(
                f,
                feature,
                float(np.mean(sizes)) if sizes else None,
                len(sizes) / n if n else 0.0,
                sizes,
                _frequency(g, counts, len(sizes)) if g is not None else None,
            )
        )
    return ZoneReport(zones)


# ---------------------------------------------------------------- elections


@dataclass
class Displacement:
    feature_a: int | None
    feature_b: int | None
    point_a: tuple[float, float] | None
    point_b: tuple[float, float] | None
    delta_birth: float
    delta_death: float

    def as_dict(self) -> dict:
        def pt(x):
            return None if x is None else [x[0], _json_death(x[1])]

        return {
            "feature_a": self.feature_a,
            "feature_b": self.feature_b,
            "point_a": pt(self.point_a),
            "point_b": pt(self.point_b),
            "delta_birth": self.delta_birth,
            "delta_death": self.delta_death,
        }


@dataclass
class ElectionComparison:
    mode: str
    displacements: list[Displacement]
    swing_reference: tuple[float, float] | None = None

    def as_dict(self) -> dict:
        return {
            "mode": self.mode,
            "swing_reference": list(self.swing_reference) if self.swing_reference else None,
            "displacements": [d.as_dict() for d in self.displacements],
        }


def _death_delta(a: float, b: float) -> float:
    if a == INF and b == INF:
        return 0.0
    return b - a


def _displace(fa, fb, a: DiagramPoint | None, b: DiagramPoint | None) -> Displacement:
    if b is None:
        m = diagonal_projection(a)
        return Displacement(fa, None, (a.birth, a.death), None, m[0] - a.birth, m[1] - a.death)
    if a is None:
        m = diagonal_projection(b)
        return Displacement(None, fb, None, (b.birth, b.death), b.birth - m[0], b.death - m[1])
    return Displacement(fa, fb, (a.birth, a.death), (b.birth, b.death), b.birth - a.birth, _death_delta(a.death, b.death))


def cosine_similarity(x: np.ndarray, y: np.ndarray) -> float:
    nx, ny = np.linalg.norm(x), np.linalg.norm(y)
    if nx == 0 or ny == 0:
        return 0.0
    return float(x @ y / (nx * ny))


def geographic_pairing(heat_a: Sequence[HeatMap], heat_b: Sequence[HeatMap], ids: Sequence[str]) -> list[tuple[int, int]]:
    """Greedy one-to-one pairing of features by heat-map cosine similarity."""
    sims = []
    for a in heat_a:
        for b in heat_b:
            s = cosine_similarity(a.as_vector(ids), b.as_vector(ids))
            if s > 0:
                sims.append((-s, a.feature, b.feature))
    sims.sort()
    used_a, used_b, pairs = set(), set(), []
    for _, fa, fb in sims:
        if fa not in used_a and fb not in used_b:
            used_a.add(fa)
            used_b.add(fb)
            pairs.append((fa, fb))
    return sorted(pairs)


def compare_elections(
    mean_a: Diagram,
    mean_b: Diagram,
    mode: str = "optimal_l2",
    heat_a: Sequence[HeatMap] | None = None,
    heat_b: Sequence[HeatMap] | None = None,
    ids: Sequence[str] | None = None,
    statewide: tuple[float, float] | None = None,
) -> ElectionComparison:
    """Pair the points of two Fréchet means and report their displacement ``b - a``.

    ``statewide`` gives both elections' statewide Republican shares; the
    uniform-swing reference vector is then ``(delta, delta)``.
    """
    if mode == "optimal_l2":
        m = wasserstein(mean_a, mean_b, 2.0)
        pairs = m.pairs
    elif mode == "geographic":
        if heat_a is None or heat_b is None or ids is None:
            raise ModeUnavailable("geographic pairing needs heat maps for both means")
        pairs = geographic_pairing(heat_a, heat_b, ids)
    else:
        raise ModeUnavailable(f"unknown pairing mode {mode!r}")
    paired_a = {a for a, _ in pairs}
    paired_b = {b for _, b in pairs}
    out = [_displace(a, b, mean_a.points[a], mean_b.points[b]) for a, b in sorted(pairs)]
    out += [_displace(a, None, q, None) for a, q in enumerate(mean_a.points) if a not in paired_a]
    out += [_displace(None, b, None, q) for b, q in enumerate(mean_b.points) if b not in paired_b]
    swing = None
    if statewide is not None:
        delta = statewide[1] - statewide[0]
        swing = (delta, delta)
    return ElectionComparison(mode, out, swing)


# ---------------------------------------------------------------- pipelines


def ensemble_diagrams(g: DualGraph, plans: Sequence[Plan], election: Election):
    """District graphs filtered by Republican share, and their diagrams."""
    dgs = [republican_share(district_graph(g, p), election) for p in plans]
    return dgs, [persistence_diagram(dg) for dg in dgs]


@dataclass
class EnsembleSummary:
    frechet: FrechetResult
    features: Diagram
    marked: MarkedEnsemble
    heat_maps: list[HeatMap]
    zones: ZoneReport
    diagrams: list[Diagram] = field(repr=False)


def summarize_ensemble(
    g: DualGraph,
    plans: Sequence[Plan],
    election: Election,
    min_persistence: float = 0.05,
    seeds=None,
    max_iter: int = 200,
    tol: float = 1e-8,
) -> EnsembleSummary:
    """Fréchet mean, marking, localization and zoning of one ensemble."""
    dgs, diagrams = ensemble_diagrams(g, plans, election)
    fr = frechet_mean(diagrams, seeds, max_iter, tol)
    features = select_features(fr.mean, min_persistence)
    marked = mark(diagrams, features)
    heat = localize(marked, plans, g)
    zones = zone(marked, plans, dgs, g)
    return EnsembleSummary(fr, features, marked, heat, zones, diagrams)


@dataclass
class BiasReport:
    summary_d: EnsembleSummary
    summary_r: EnsembleSummary
    l2: ElectionComparison
    geographic: ElectionComparison
    agreement: dict[int, bool]
    safe_seats_d: dict[str, Counter]
    safe_seats_r: dict[str, Counter]

    def mean_safe_seats(self, which: str, party: str) -> float:
        hist = (self.safe_seats_d if which == "d" else self.safe_seats_r)[party]
        n = sum(hist.values())
        return sum(k * v for k, v in hist.items()) / n if n else math.nan

    def as_dict(self) -> dict:
        return {
            "frechet_d": self.summary_d.frechet.as_dict(),
            "frechet_r": self.summary_r.frechet.as_dict(),
            "l2": self.l2.as_dict(),
            "geographic": self.geographic.as_dict(),
            "agreement": {str(k): v for k, v in self.agreement.items()},
            "safe_seats_d": {p: dict(sorted(h.items())) for p, h in self.safe_seats_d.items()},
            "safe_seats_r": {p: dict(sorted(h.items())) for p, h in self.safe_seats_r.items()},
            "point_plots_d": {f: self.summary_d.marked.point_plot(f) for f in range(len(self.summary_d.features))},
            "point_plots_r": {f: self.summary_r.marked.point_plot(f) for f in range(len(self.summary_r.features))},
        }


def safe_seat_histogram(g: DualGraph, plans: Sequence[Plan], party: Sequence[str], threshold: float = 0.53) -> Counter:
    hist: Counter = Counter()
    for p in plans:
        hist[int(np.count_nonzero(district_shares(g, p.labels, p.k, party) > threshold))] += 1
    return hist


def compare_biased(
    g: DualGraph,
    ensemble_d: Sequence[Plan],
    ensemble_r: Sequence[Plan],
    election: Election,
    min_persistence: float = 0.05,
    safe_threshold: float = 0.53,
    seeds=None,
) -> BiasReport:
    """Compare Democratic- and Republican-favouring ensembles on one election."""
    sd = summarize_ensemble(g, ensemble_d, election, min_persistence, seeds)
    sr = summarize_ensemble(g, ensemble_r, election, min_persistence, seeds)
    l2 = compare_elections(sd.features, sr.features, "optimal_l2")
    geo = compare_elections(sd.features, sr.features, "geographic", sd.heat_maps, sr.heat_maps, g.ids)
    l2_pairs = {d.feature_a: d.feature_b for d in l2.displacements if d.feature_a is not None}
    geo_pairs = {d.feature_a: d.feature_b for d in geo.displacements if d.feature_a is not None}
    agreement = {f: l2_pairs.get(f) == geo_pairs.get(f) for f in range(len(sd.features))}
    dem = (election.democratic, election.republican)
    rep = (election.republican, election.democratic)
    hist_d = {
        "democratic": safe_seat_histogram(g, ensemble_d, dem, safe_threshold),
        "republican": safe_seat_histogram(g, ensemble_d, rep, safe_threshold),
    }
    hist_r = {
        "democratic": safe_seat_histogram(g, ensemble_r, dem, safe_threshold),
        "republican": safe_seat_histogram(g, ensemble_r, rep, safe_threshold),
    }
    return BiasReport(sd, sr, l2, geo, agreement, hist_d, hist_r)
