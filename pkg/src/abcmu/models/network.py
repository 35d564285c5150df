"""Random-graph growth models, observation models, and topology summaries.

Networks grow node by node from a two-node seed until a target order is
reached, by preferential attachment (PA), duplication-divergence (DD), or
mixtures adding global link addition/deletion (LNK). Observation models
subsample a grown network the way interaction screens do. Seven summaries
capture local and global topology; their per-summary distances feed the
samplers.

Graphs are plain undirected simple networkx graphs with integer node labels
assigned in creation order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import networkx as nx
import numpy as np

from ..core import (
    BoxPrior,
    DistanceDomainError,
    EmpiricalDistribution,
    ErrorVector,
    GenerativeModel,
    KeyedValues,
    ParameterVector,
    Scalar,
    SummaryVector,
    distance_cvm,
    distance_keyed_mean_signed,
)

__all__ = [
    "GrowthStalledError",
    "NetworkModelSpec",
    "ObservationSpec",
    "grow_network",
    "observe_links",
    "observe_baitprey",
    "summaries_network",
    "distances_network",
    "NetworkModel",
    "NETWORK_SUMMARY_NAMES",
]

NETWORK_SUMMARY_NAMES = ("nd_mean", "wr", "dia", "cc", "frag", "conn", "od_box")

VARIANTS = ("pa", "dd", "dd_pa", "dd_lnk_pa")


class GrowthStalledError(RuntimeError):
    """Growth did not reach the target order within the step cap."""


@dataclass(frozen=True)
class NetworkModelSpec:
    """Growth variant and its parameters.

    pa: no parameters. dd: (delta_div, delta_attach). dd_pa adds the PA
    mixture frequency alpha. dd_lnk_pa mixes PA, DD (with delta_attach
    fixed to 0), link addition and link deletion with rates lambda_dup,
    lambda_add, lambda_del.
    """

    variant: str
    target_order: int
    alpha: float = 0.0
    delta_div: float = 0.0
    delta_attach: float = 0.0
    lambda_dup: float = 0.0
    lambda_add: float = 0.0
    lambda_del: float = 0.0

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"variant must be one of {VARIANTS}, got {self.variant!r}")
        if self.target_order < 2:
            raise ValueError("target_order must be at least 2")
        for name in ("alpha", "delta_div", "delta_attach"):
            v = getattr(self, name)
            if not (0.0 <= v <= 1.0):
                raise ValueError(f"{name} must lie in [0, 1], got {v}")
        for name in ("lambda_dup", "lambda_add", "lambda_del"):
            v = getattr(self, name)
            if v < 0 or not math.isfinite(v):
                raise ValueError(f"{name} must be a nonnegative rate, got {v}")


@dataclass(frozen=True)
class ObservationSpec:
    """Observation model: link subsampling (L) or bait-prey subsampling (BP)."""

    mode: str
    m_obs: int = 0
    n_bait: int = 0
    n_prey: int = 0

    def __post_init__(self):
        if self.mode not in ("l", "bp"):
            raise ValueError("mode must be 'l' or 'bp'")
        if self.mode == "l" and self.m_obs < 1:
            raise ValueError("link subsampling needs m_obs >= 1")
        if self.mode == "bp" and (self.n_bait < 1 or self.n_prey < 1):
            raise ValueError("bait-prey subsampling needs positive n_bait and n_prey")


def _seed_graph() -> nx.Graph:
    g = nx.Graph()
    g.add_edge(0, 1)
    return g


def _pick_preferential(nodes, degrees, rng) -> int:
    total = degrees.sum()
    if total == 0:
        return int(nodes[rng.integers(len(nodes))])
    return int(nodes[rng.choice(len(nodes), p=degrees / total)])


def _step_pa(g: nx.Graph, rng) -> None:
    """Add one node attached to an existing node proportionally to degree."""
    nodes = np.arange(g.number_of_nodes())
    degrees = np.array([g.degree(int(u)) for u in nodes], dtype=float)
    target = _pick_preferential(nodes, degrees, rng)
    new = g.number_of_nodes()
    g.add_node(new)
    g.add_edge(new, target)


def _step_dd(g: nx.Graph, rng, delta_div: float, delta_attach: float) -> None:
    """Duplicate a uniformly chosen parent, then diverge the edge pairs.

    For each parental edge the parental and duplicated copies are each lost
    with probability delta_div but never both: the pair outcome is drawn
    from the conditional distribution given "not both", which keeps the far
    endpoint connected to the pair and stays well defined at delta_div = 1
    (exactly one of the two is lost, equally likely). Finally the parent is
    attached to its child with probability delta_attach.
    """
    n = g.number_of_nodes()
    parent = int(rng.integers(n))
    child = n
    g.add_node(child)
    neighbors = sorted(g[parent])
    for u in neighbors:
        g.add_edge(child, u)
    p_lose_one = delta_div / (1.0 + delta_div) if delta_div > 0 else 0.0
    for u in neighbors:
        r = rng.random()
        if r < p_lose_one:
            g.remove_edge(parent, u)
        elif r < 2.0 * p_lose_one:
            g.remove_edge(child, u)
    if rng.random() < delta_attach:
        g.add_edge(parent, child)


def _step_link_add(g: nx.Graph, rng) -> None:
    """Attach a uniformly chosen node to a preferentially chosen non-neighbor."""
    n = g.number_of_nodes()
    u = int(rng.integers(n))
    candidates = np.array([v for v in range(n) if v != u and not g.has_edge(u, v)])
    if candidates.size == 0:
        return
    degrees = np.array([g.degree(int(v)) for v in candidates], dtype=float)
    v = _pick_preferential(candidates, degrees, rng)
    g.add_edge(u, v)


def _step_link_del(g: nx.Graph, rng) -> None:
    """Delete a link of a uniformly chosen node, preferring high-degree partners."""
    n = g.number_of_nodes()
    u = int(rng.integers(n))
    partners = np.array(sorted(g[u]))
    if partners.size == 0:
        return
    degrees = np.array([g.degree(int(v)) for v in partners], dtype=float)
    v = _pick_preferential(partners, degrees, rng)
    g.remove_edge(u, v)


def grow_network(
    spec: NetworkModelSpec,
    rng: np.random.Generator,
    seed_graph: nx.Graph | None = None,
    max_steps: int | None = None,
) -> nx.Graph:
    """Grow a network until its order reaches spec.target_order.

    PA and DD steps add one node; link addition/deletion steps do not change
    the order. The seed is a single edge on two nodes unless given. Raises
    GrowthStalledError when the step cap (default 1000 * target_order) is
    hit first, which can happen under near-degenerate mixtures that almost
    never pick a node-adding step.
    """
    g = seed_graph.copy() if seed_graph is not None else _seed_graph()
    if g.number_of_nodes() > spec.target_order:
        raise ValueError("seed graph is already larger than the target order")
    cap = max_steps if max_steps is not None else 1000 * spec.target_order
    steps = 0
    while g.number_of_nodes() < spec.target_order:
        steps += 1
        if steps > cap:
            raise GrowthStalledError(
                f"order {g.number_of_nodes()} after {cap} steps, target {spec.target_order}"
            )
        if spec.variant == "pa":
            _step_pa(g, rng)
        elif spec.variant == "dd":
            _step_dd(g, rng, spec.delta_div, spec.delta_attach)
        elif spec.variant == "dd_pa":
            # degenerate mixtures skip the Bernoulli draw, so alpha = 1
            # consumes randomness exactly like the pure PA model
            if spec.alpha >= 1.0:
                _step_pa(g, rng)
            elif spec.alpha <= 0.0:
                _step_dd(g, rng, spec.delta_div, spec.delta_attach)
            elif rng.random() < spec.alpha:
                _step_pa(g, rng)
            else:
                _step_dd(g, rng, spec.delta_div, spec.delta_attach)
        else:  # dd_lnk_pa
            order = g.number_of_nodes()
            size = g.number_of_edges()
            w_dup = spec.lambda_dup * order
            w_add = spec.lambda_add * (order * (order - 1) / 2 - size)
            w_del = w_add * spec.lambda_del
            total = w_dup + w_add + w_del
            if spec.alpha >= 1.0:
                _step_pa(g, rng)
            elif total == 0.0:
                if spec.alpha == 0.0:
                    raise GrowthStalledError("all mixture weights are zero")
                _step_pa(g, rng)
            else:
                r = rng.random()
                if r < spec.alpha:
                    _step_pa(g, rng)
                else:
                    u = (r - spec.alpha) / (1.0 - spec.alpha) * total
                    if u < w_dup:
                        _step_dd(g, rng, spec.delta_div, 0.0)
                    elif u < w_dup + w_add:
                        _step_link_add(g, rng)
                    else:
                        _step_link_del(g, rng)
    return g


# ---------------------------------------------------------------------------
# observation models


def observe_links(g: nx.Graph, m_obs: int, rng: np.random.Generator) -> nx.Graph:
    """Link subsampling: draw links without replacement until m_obs are in.

    Both endpoints of each drawn link enter the observed network; isolated
    nodes of the source never appear. Exhausting the links first is a valid
    stop.
    """
    if m_obs < 1:
        raise ValueError("m_obs must be at least 1")
    edges = sorted(g.edges())
    x = nx.Graph()
    for idx in rng.permutation(len(edges)):
        if x.number_of_edges() >= m_obs:
            break
        u, v = edges[idx]
        x.add_edge(u, v)
    return x


def observe_baitprey(
    g: nx.Graph,
    n_bait: int,
    n_prey: int,
    rng: np.random.Generator,
    bait_list=None,
    prey_list=None,
) -> tuple[nx.Graph, dict]:
    """Bait-prey subsampling against designated bait and prey node lists.

    Links (u, v) with u in the bait list and v in the prey list are drawn
    without replacement; u gets marked as bait and v as prey, and the link
    joins the observed network, until n_bait marked baits and at least
    n_prey marked preys exist or no eligible link remains. Lists default to
    all nodes. Returns the observed graph and metadata with the marked
    counts and an exhaustion flag.
    """
    baits = set(g.nodes) if bait_list is None else set(bait_list)
    preys = set(g.nodes) if prey_list is None else set(prey_list)
    edges = sorted(g.edges())
    x = nx.Graph()
    marked_bait: set = set()
    marked_prey: set = set()

    def satisfied() -> bool:
        return len(marked_bait) == n_bait and len(marked_prey) >= n_prey

    for idx in rng.permutation(len(edges)):
        if satisfied():
            break
        a, b = edges[idx]
        orientations = []
        if a in baits and b in preys:
            orientations.append((a, b))
        if b in baits and a in preys:
            orientations.append((b, a))
        if not orientations:
            continue
        u, v = orientations[0] if len(orientations) == 1 else orientations[int(rng.integers(2))]
        x.add_edge(u, v)
        marked_bait.add(u)
        marked_prey.add(v)
    meta = {
        "n_bait_marked": len(marked_bait),
        "n_prey_marked": len(marked_prey),
        "exhausted": not satisfied(),
    }
    return x, meta


# ---------------------------------------------------------------------------
# summaries


def _within_reach_curve(spl: dict, order: int, diameter: int) -> np.ndarray:
    if diameter == 0:
        return np.array([0.0])
    reach = np.zeros(diameter)
    for u, dists in spl.items():
        counts = np.bincount(
            [d for v, d in dists.items() if v != u], minlength=diameter + 1
        )
        reach += np.cumsum(counts[1 : diameter + 1])
    return reach / (order * (order - 1))


def _cluster_coefficient(g: nx.Graph) -> float:
    triangles = nx.triangles(g)
    vals = [
        2.0 * triangles[u] / (d * (d - 1)) for u, d in g.degree() if d >= 2
    ]
    return float(np.mean(vals)) if vals else 0.0


def _connectivity_enrichment(g: nx.Graph, nd_mean: float) -> KeyedValues:
    m = g.number_of_edges()
    if m == 0:
        return KeyedValues((), np.array([]))
    order = g.number_of_nodes()
    degree = dict(g.degree())
    p_deg: dict[int, float] = {}
    for d in degree.values():
        p_deg[d] = p_deg.get(d, 0.0) + 1.0 / order
    pair_counts: dict[tuple[int, int], int] = {}
    for u, v in g.edges():
        k1, k2 = sorted((degree[u], degree[v]))
        pair_counts[(k1, k2)] = pair_counts.get((k1, k2), 0) + 1
    keys = sorted(pair_counts)
    vals = [
        math.log(
            (pair_counts[k] / m) * nd_mean**2 / (k[0] * p_deg[k[0]] * k[1] * p_deg[k[1]])
        )
        for k in keys
    ]
    return KeyedValues(tuple(keys), np.array(vals))


def _box_covering(g: nx.Graph, spl: dict, radius: int = 2) -> list[set]:
    """Greedy first-fit covering: each node joins the first box whose members
    all sit within `radius` of it."""
    boxes: list[set] = []
    for u in sorted(g.nodes):
        du = spl[u]
        for box in boxes:
            if all(du.get(v, math.inf) <= radius for v in box):
                box.add(u)
                break
        else:
            boxes.append({u})
    return boxes


def _box_out_degrees(g: nx.Graph, boxes: list[set]) -> np.ndarray:
    out = []
    for box in boxes:
        k = sum(1 for u, v in g.edges() if (u in box) != (v in box))
        out.append(float(k))
    return np.sort(np.array(out))


def summaries_network(g: nx.Graph) -> SummaryVector:
    """The seven topology summaries of an undirected simple graph.

    nd_mean: average node degree. wr: within-reach curve, the mean fraction
    of nodes reached within distance k for k = 1..diameter, as an empirical
    distribution. dia: longest shortest path within any connected component.
    cc: mean, over nodes of degree >= 2, of the fraction of neighbour pairs
    that are themselves linked. frag: fraction of nodes outside the largest
    connected component. conn: log enrichment of edges between degree pairs
    relative to the degree-uncorrelated expectation, keyed by the unordered
    degree pair (counted once per edge). od_box: distribution of outside-
    edge counts of the boxes of a greedy diameter-2 box covering.
    """
    order = g.number_of_nodes()
    if order < 2:
        raise ValueError("need at least 2 nodes")
    size = g.number_of_edges()
    nd_mean = 2.0 * size / order
    spl = {u: d for u, d in nx.all_pairs_shortest_path_length(g)}
    diameter = max((max(d.values()) for d in spl.values()), default=0)
    wr = _within_reach_curve(spl, order, diameter)
    cc = _cluster_coefficient(g)
    largest = max((len(c) for c in nx.connected_components(g)), default=0)
    frag = 1.0 - largest / order
    conn = _connectivity_enrichment(g, nd_mean)
    od_box = _box_out_degrees(g, _box_covering(g, spl))
    return SummaryVector(
        (
            Scalar(nd_mean),
            EmpiricalDistribution(np.sort(wr)),
            Scalar(float(diameter)),
            Scalar(cc),
            Scalar(frag),
            conn,
            EmpiricalDistribution(od_box),
        )
    )


def _relative_difference(sim: float, obs: float) -> float:
    return (sim - obs) / max(abs(obs), 1e-9)


def distances_network(sim: SummaryVector, obs: SummaryVector) -> ErrorVector:
    """Per-summary errors between simulated and observed topology summaries.

    Scalars use the signed relative difference; the within-reach and box
    distributions use the two-sample Cramer-von Mises statistic; the
    connectivity enrichment uses the mean signed difference over degree
    pairs present on both sides and raises DistanceDomainError when the
    overlap is empty (the simulation is then rejected).
    """
    if len(sim) != 7 or len(obs) != 7:
        raise ValueError("expected 7 summaries on both sides")
    eps = np.empty(7)
    for i in (0, 2, 3, 4):
        eps[i] = _relative_difference(sim.entries[i].value, obs.entries[i].value)
    for i in (1, 6):
        eps[i] = distance_cvm(sim.entries[i], obs.entries[i])
    eps[5] = distance_keyed_mean_signed(sim.entries[5], obs.entries[5])
    return ErrorVector(eps)


# ---------------------------------------------------------------------------
# generative model


class NetworkModel(GenerativeModel):
    """Grow-then-observe network simulator bound to observed summaries.

    Growth stalls (step cap exhausted under near-degenerate parameters) are
    reported as DistanceDomainError so samplers count them as rejected
    simulations.
    """

    summary_names = NETWORK_SUMMARY_NAMES

    def __init__(
        self,
        variant: str,
        target_order: int,
        observation: ObservationSpec,
        observed: SummaryVector,
        bait_list=None,
        prey_list=None,
    ):
        if variant == "dd_pa":
            self.parameter_names = ("alpha", "delta_div", "delta_attach")
        elif variant == "dd_lnk_pa":
            self.parameter_names = (
                "alpha",
                "delta_div",
                "lambda_dup",
                "lambda_add",
                "lambda_del",
            )
        else:
            raise ValueError("registered variants are 'dd_pa' and 'dd_lnk_pa'")
        self.variant = variant
        self.target_order = int(target_order)
        self.observation = observation
        self.observed = observed
        self.bait_list = bait_list
        self.prey_list = prey_list

    def _spec(self, theta: ParameterVector) -> NetworkModelSpec:
        p = theta.as_dict()
        return NetworkModelSpec(variant=self.variant, target_order=self.target_order, **p)

    def simulate(self, theta: ParameterVector, rng: np.random.Generator) -> SummaryVector:
        try:
            full = grow_network(self._spec(theta), rng)
        except GrowthStalledError as e:
            raise DistanceDomainError(f"growth stalled: {e}") from e
        obs = self.observation
        if obs.mode == "l":
            x = observe_links(full, obs.m_obs, rng)
        else:
            x, _ = observe_baitprey(
                full, obs.n_bait, obs.n_prey, rng, self.bait_list, self.prey_list
            )
        if x.number_of_nodes() < 2:
            raise DistanceDomainError("observed subnetwork has fewer than 2 nodes")
        return summaries_network(x)

    def distances(self, simulated: SummaryVector) -> ErrorVector:
        return distances_network(simulated, self.observed)

    def default_prior(self) -> BoxPrior:
        # synthetic uninformative defaults; rates are not prescribed anywhere
        if self.variant == "dd_pa":
            return BoxPrior(self.parameter_names, np.zeros(3), np.ones(3))
        lo = np.array([0.0, 0.0, 0.0, 0.0, 0.0])
        hi = np.array([1.0, 1.0, 1.0, 1.0, 1.0])
        return BoxPrior(self.parameter_names, lo, hi)


def read_edge_list(text: str) -> nx.Graph:
    """Parse the observed-network ingestion format: one 'u v' pair per line.

    Blank lines and lines starting with '#' are skipped; node labels are
    kept as strings unless integral.
    """
    g = nx.Graph()
    for lineno, line in enumerate(text.splitlines(), start=1):
        s = line.strip()
        if not s or s.startswith("#"):
            continue
        parts = s.split()
        if len(parts) != 2:
            raise ValueError(f"line {lineno}: expected 'u v', got {line!r}")
        u, v = parts
        u = int(u) if u.lstrip("-").isdigit() else u
        v = int(v) if v.lstrip("-").isdigit() else v
        if u == v:
            raise ValueError(f"line {lineno}: self-loop {u!r}")
        g.add_edge(u, v)
    return g
