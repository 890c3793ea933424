"""Semantic networks over corpus co-occurrence.

Nodes are stems; an edge gains weight 1 each time both stems occur in the
same scope instance (sentence, unit, or document), counted once per instance
regardless of how often either word repeats inside it. Node frequency is the
number of scope instances containing the stem. All operations are
deterministic: nodes are processed in lexicographic order and every ranking
breaks ties alphabetically.
"""

from __future__ import annotations

import json
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field
from itertools import combinations
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .errors import InvalidPartition, InvariantViolation, NotFound, SeedsAbsent
from .textprep.annotate import AnnotatedCorpus
from .textprep.tokens import Entity, Pos, Token, split_sentences, tokenize

SCOPES = ("sentence", "unit", "document")
TOKEN_FILTERS = ("all", "nouns_adjectives", "verbs_adverbs", "entities_only")


@dataclass(frozen=True)
class SemanticGraph:
    """Undirected weighted graph; edge keys are sorted (low, high) stem pairs."""

    nodes: Mapping[str, Mapping[str, object]]
    edges: Mapping[tuple[str, str], float]
    metadata: Mapping[str, object] = field(default_factory=dict)

    def __post_init__(self) -> None:
        for (a, b) in self.edges:
            if a >= b:
                raise InvariantViolation(f"edge key {(a, b)} is not sorted")
            if a not in self.nodes or b not in self.nodes:
                raise InvariantViolation(f"edge {(a, b)} references a missing node")

    def strength(self, node: str) -> float:
        return sum(w for (a, b), w in self.edges.items() if node in (a, b))

    def neighbors_of(self, node: str) -> dict[str, float]:
        out: dict[str, float] = {}
        for (a, b), w in self.edges.items():
            if a == node:
                out[b] = w
            elif b == node:
                out[a] = w
        return out


def _keep(token: Token, token_filter: str | set[str]) -> bool:
    if isinstance(token_filter, set):
        return token.stem in token_filter
    if token_filter == "all":
        return True
    if token_filter == "nouns_adjectives":
        return token.pos in (Pos.NOUN, Pos.ADJ)
    if token_filter == "verbs_adverbs":
        return token.pos in (Pos.VERB, Pos.ADV)
    if token_filter == "entities_only":
        return token.entity != Entity.NONE
    raise ValueError(f"unknown token filter {token_filter!r}")


def _scope_instances(
    annotated: AnnotatedCorpus, scope: str
) -> list[list[Token]]:
    """Token lists, one per scope instance, in corpus order."""
    if scope == "unit":
        return [list(toks) for _, toks in annotated.iter_units()]
    if scope == "document":
        by_doc: dict[str, list[Token]] = {}
        for unit, toks in annotated.iter_units():
            by_doc.setdefault(unit.doc_id, []).extend(toks)
        return [by_doc[d] for d in sorted(by_doc)]
    if scope == "sentence":
        instances = []
        for unit, toks in annotated.iter_units():
            offset = 0
            # sentence-by-sentence tokenization concatenates to the unit
            # tokenization, so annotated tokens map over positionally
            for sentence in split_sentences(unit.text):
                n = len(tokenize(sentence))
                instances.append(list(toks[offset:offset + n]))
                offset += n
        return [inst for inst in instances if inst]
    raise ValueError(f"unknown scope {scope!r}; expected one of {SCOPES}")


def _majority_tag(values: list[str]) -> str:
    counts: dict[str, int] = {}
    for v in values:
        counts[v] = counts.get(v, 0) + 1
    return min(counts, key=lambda v: (-counts[v], v))


def build_cooccurrence(
    annotated: AnnotatedCorpus,
    scope: str = "unit",
    token_filter: str | set[str] = "all",
) -> SemanticGraph:
    """Co-occurrence graph: +1 per scope instance per unordered stem pair."""
    instances = _scope_instances(annotated, scope)
    freq: dict[str, int] = {}
    pos_seen: dict[str, list[str]] = {}
    ent_seen: dict[str, list[str]] = {}
    edges: dict[tuple[str, str], float] = {}
    for inst in instances:
        kept = [t for t in inst if _keep(t, token_filter)]
        for t in kept:
            pos_seen.setdefault(t.stem, []).append(t.pos.value)
            ent_seen.setdefault(t.stem, []).append(t.entity.value)
        stems = sorted({t.stem for t in kept})
        for s in stems:
            freq[s] = freq.get(s, 0) + 1
        for a, b in combinations(stems, 2):
            edges[(a, b)] = edges.get((a, b), 0) + 1
    nodes = {
        s: {
            "frequency": freq[s],
            "pos": _majority_tag(pos_seen[s]),
            "entity": _majority_tag(ent_seen[s]),
        }
        for s in sorted(freq)
    }
    filter_desc = sorted(token_filter) if isinstance(token_filter, set) else token_filter
    return SemanticGraph(
        nodes=nodes,
        edges=edges,
        metadata={"kind": "cooccurrence", "scope": scope, "token_filter": filter_desc},
    )


def build_seedword(
    annotated: AnnotatedCorpus,
    seeds: Sequence[str],
    rounds: int = 1,
    threshold: float = 1.0,
    scope: str = "unit",
    token_filter: str | set[str] = "all",
) -> SemanticGraph:
    """Grow a graph outward from seed stems.

    Each round admits every word tied to the current set by an edge of
    weight >= threshold. The result is the induced subgraph on everything
    admitted; per-round admission counts land in the metadata.
    """
    if rounds < 0:
        raise ValueError("rounds must be >= 0")
    full = build_cooccurrence(annotated, scope=scope, token_filter=token_filter)
    present = [s for s in seeds if s in full.nodes]
    if not present:
        raise SeedsAbsent(f"none of the {len(seeds)} seed words occur in the corpus")
    admitted: dict[str, int] = {s: 0 for s in sorted(present)}
    admitted_per_round: list[int] = []
    for r in range(1, rounds + 1):
        new: set[str] = set()
        for (a, b), w in full.edges.items():
            if w >= threshold:
                if a in admitted and b not in admitted:
                    new.add(b)
                elif b in admitted and a not in admitted:
                    new.add(a)
        for word in sorted(new):
            admitted[word] = r
        admitted_per_round.append(len(new))
        if not new:
            break
    nodes = {
        s: dict(full.nodes[s], seed=(admitted[s] == 0), round=admitted[s])
        for s in sorted(admitted)
    }
    edges = {
        (a, b): w for (a, b), w in full.edges.items() if a in admitted and b in admitted
    }
    return SemanticGraph(
        nodes=nodes,
        edges=edges,
        metadata={
            "kind": "seedword",
            "scope": scope,
            "token_filter": sorted(token_filter) if isinstance(token_filter, set) else token_filter,
            "seeds": sorted(present),
            "seeds_missing": sorted(set(seeds) - set(present)),
            "rounds": rounds,
            "threshold": threshold,
            "admitted_per_round": admitted_per_round,
        },
    )


def expand_seeds(vectors, seeds: Sequence[str], n: int = 5) -> list[tuple[str, bool]]:
    """Extend a seed list with each seed's n nearest embedding neighbors.

    Returns (word, is_original) pairs, originals first, additions sorted;
    raises NotFound only when every seed is missing from the vectors.
    """
    from .embeddings import neighbors as embedding_neighbors

    present = [s for s in seeds if s in vectors]
    if not present:
        raise NotFound("no seed word has an embedding")
    added: set[str] = set()
    for seed in present:
        for word, _ in embedding_neighbors(vectors, seed, n):
            if word not in seeds:
                added.add(word)
    return [(s, True) for s in sorted(present)] + [(w, False) for w in sorted(added)]


def prune(
    graph: SemanticGraph,
    min_weight: float | None = None,
    top_k_edges: int | None = None,
    top_k_nodes: int | None = None,
) -> SemanticGraph:
    """Filter edges/nodes; isolated nodes are dropped. Idempotent per args."""
    edges = dict(graph.edges)
    if min_weight is not None:
        edges = {pair: w for pair, w in edges.items() if w >= min_weight}
    if top_k_edges is not None:
        ranked = sorted(edges.items(), key=lambda kv: (-kv[1], kv[0]))
        edges = dict(ranked[:top_k_edges])
    if top_k_nodes is not None:
        strength: dict[str, float] = {}
        for (a, b), w in edges.items():
            strength[a] = strength.get(a, 0.0) + w
            strength[b] = strength.get(b, 0.0) + w
        keep = set(sorted(strength, key=lambda s: (-strength[s], s))[:top_k_nodes])
        edges = {(a, b): w for (a, b), w in edges.items() if a in keep and b in keep}
    connected = {a for pair in edges for a in pair}
    nodes = {s: dict(graph.nodes[s]) for s in sorted(connected)}
    meta = dict(graph.metadata)
    meta["pruned"] = {
        "min_weight": min_weight, "top_k_edges": top_k_edges, "top_k_nodes": top_k_nodes,
    }
    return SemanticGraph(nodes=nodes, edges=edges, metadata=meta)


# ---------------------------------------------------------------- communities

def modularity(graph: SemanticGraph, partition: Mapping[str, int]) -> float:
    """Newman modularity of a node->community map over the weighted graph."""
    if set(partition) != set(graph.nodes):
        raise InvalidPartition("partition must assign every node exactly once")
    m2 = 2.0 * sum(graph.edges.values())
    if m2 == 0:
        return 0.0
    strength: dict[str, float] = {s: 0.0 for s in graph.nodes}
    internal: dict[int, float] = {}
    total: dict[int, float] = {}
    for (a, b), w in graph.edges.items():
        strength[a] += w
        strength[b] += w
        if partition[a] == partition[b]:
            internal[partition[a]] = internal.get(partition[a], 0.0) + 2.0 * w
    for node, k in strength.items():
        total[partition[node]] = total.get(partition[node], 0.0) + k
    return sum(
        internal.get(c, 0.0) / m2 - (total[c] / m2) ** 2 for c in total
    )


def _local_moves(adj, strength, m2, order):
    """One Louvain level: greedy moves until a full pass changes nothing.

    Self-loop weight is inside each node's strength and moves with the node,
    so it cancels out of every gain comparison and needs no explicit term.
    """
    community = {n: i for i, n in enumerate(order)}
    com_total = {community[n]: strength[n] for n in order}
    moved_any = False
    while True:
        moved = False
        for node in order:
            own = community[node]
            k_i = strength[node]
            com_total[own] -= k_i
            links: dict[int, float] = {}
            for nb, w in adj[node].items():
                if nb != node:
                    links[community[nb]] = links.get(community[nb], 0.0) + w
            best_com, best_gain = own, links.get(own, 0.0) - com_total[own] * k_i / m2
            for com in sorted(links):
                gain = links[com] - com_total[com] * k_i / m2
                if gain > best_gain or (gain == best_gain and com < best_com):
                    best_com, best_gain = com, gain
            community[node] = best_com
            com_total[best_com] = com_total.get(best_com, 0.0) + k_i
            if best_com != own:
                moved = moved_any = True
        if not moved:
            return community, moved_any


def detect_communities(graph: SemanticGraph) -> tuple[dict[str, int], float]:
    """Louvain-style community detection; returns (partition, modularity).

    Multi-level greedy modularity with lexicographic node order, so the
    outcome is a pure function of the graph. Community ids are renumbered
    0..C-1 in order of each community's alphabetically first member.
    """
    nodes = sorted(graph.nodes)
    if not graph.edges:
        return {n: i for i, n in enumerate(nodes)}, 0.0
    m2 = 2.0 * sum(graph.edges.values())

    # current level state: supernode -> member original nodes
    members: dict[str, list[str]] = {n: [n] for n in nodes}
    adj: dict[str, dict[str, float]] = {n: {} for n in nodes}
    self_w: dict[str, float] = {n: 0.0 for n in nodes}
    for (a, b), w in graph.edges.items():
        adj[a][b] = adj[a].get(b, 0.0) + w
        adj[b][a] = adj[b].get(a, 0.0) + w

    assignment = {n: n for n in nodes}  # original node -> supernode
    while True:
        order = sorted(adj)
        strength = {
            n: sum(w for nb, w in adj[n].items() if nb != n) + 2.0 * self_w[n]
            for n in order
        }
        community, moved = _local_moves(adj, strength, m2, order)
        if not moved:
            break
        # aggregate: new supernode named by the alphabetically first member
        groups: dict[int, list[str]] = {}
        for n in order:
            groups.setdefault(community[n], []).append(n)
        rename = {c: min(ns) for c, ns in groups.items()}
        new_members: dict[str, list[str]] = {}
        new_adj: dict[str, dict[str, float]] = {}
        new_self: dict[str, float] = {}
        for c, ns in groups.items():
            name = rename[c]
            new_members[name] = sorted(m for n in ns for m in members[n])
            new_self[name] = sum(self_w[n] for n in ns)
            new_adj[name] = {}
        for a in order:
            ca = rename[community[a]]
            for b, w in adj[a].items():
                cb = rename[community[b]]
                if ca == cb:
                    if a < b:
                        new_self[ca] += w
                else:
                    new_adj[ca][cb] = new_adj[ca].get(cb, 0.0) + w
        members, adj, self_w = new_members, new_adj, new_self
        assignment = {
            orig: name for name, ms in members.items() for orig in ms
        }
        if len(adj) == 1:
            break

    leaders = sorted(set(assignment.values()))
    ids = {leader: i for i, leader in enumerate(leaders)}
    partition = {n: ids[assignment[n]] for n in nodes}
    return partition, modularity(graph, partition)


def apply_partition(graph: SemanticGraph, partition: Mapping[str, int]) -> SemanticGraph:
    """Copy of the graph with each node's cluster attribute set."""
    if set(partition) != set(graph.nodes):
        raise InvalidPartition("partition must assign every node exactly once")
    nodes = {s: dict(attrs, cluster=int(partition[s])) for s, attrs in graph.nodes.items()}
    return SemanticGraph(nodes=nodes, edges=dict(graph.edges), metadata=dict(graph.metadata))


def collapse_clusters(graph: SemanticGraph, partition: Mapping[str, int]) -> SemanticGraph:
    """Merge each community into one node named by its first member.

    Inter-cluster edge weights are summed; intra-cluster weight is kept on
    the merged node as internal_weight alongside the member count.
    """
    if set(partition) != set(graph.nodes):
        raise InvalidPartition("partition must assign every node exactly once")
    groups: dict[int, list[str]] = {}
    for node in sorted(graph.nodes):
        groups.setdefault(partition[node], []).append(node)
    name = {c: min(ns) for c, ns in groups.items()}
    nodes: dict[str, dict[str, object]] = {}
    for c, ns in groups.items():
        nodes[name[c]] = {
            "members": len(ns),
            "frequency": sum(int(graph.nodes[n].get("frequency", 0)) for n in ns),
            "internal_weight": 0.0,
            "cluster": int(c),
        }
    edges: dict[tuple[str, str], float] = {}
    for (a, b), w in graph.edges.items():
        ca, cb = name[partition[a]], name[partition[b]]
        if ca == cb:
            nodes[ca]["internal_weight"] += w
        else:
            key = (min(ca, cb), max(ca, cb))
            edges[key] = edges.get(key, 0.0) + w
    meta = dict(graph.metadata)
    meta["collapsed"] = {"clusters": len(groups)}
    return SemanticGraph(nodes=nodes, edges=edges, metadata=meta)


# -------------------------------------------------------------------- export

EDGE_FORMATS = ("edge_list_csv", "graphml", "dot")


def _attr_type(values: Iterable[object]) -> str:
    kinds = {type(v) for v in values}
    if kinds <= {bool}:
        return "boolean"
    if kinds <= {int, bool}:
        return "long"
    if kinds <= {int, float, bool}:
        return "double"
    return "string"


def export_graph(graph: SemanticGraph, path: str | Path, fmt: str = "edge_list_csv") -> None:
    """Write the graph sorted and timestamp-free; graphml is lossless."""
    path = Path(path)
    if fmt == "edge_list_csv":
        lines = ["source,target,weight"]
        for (a, b) in sorted(graph.edges):
            lines.append(f"{a},{b},{graph.edges[(a, b)]!r}")
        path.write_text("\n".join(lines) + "\n", "utf-8")
    elif fmt == "dot":
        lines = ["graph semnet {"]
        for node in sorted(graph.nodes):
            attrs = graph.nodes[node]
            extras = "".join(f" {k}={attrs[k]!r}" for k in sorted(attrs) if attrs[k] is not None)
            lines.append(f'  "{node}" [{extras.strip()}];')
        for (a, b) in sorted(graph.edges):
            lines.append(f'  "{a}" -- "{b}" [weight={graph.edges[(a, b)]!r}];')
        lines.append("}")
        path.write_text("\n".join(lines) + "\n", "utf-8")
    elif fmt == "graphml":
        path.write_text(_to_graphml(graph), "utf-8")
    else:
        raise ValueError(f"unknown format {fmt!r}; expected one of {EDGE_FORMATS}")


_GRAPHML_NS = "http://graphml.graphdrawing.org/xmlns"


def _to_graphml(graph: SemanticGraph) -> str:
    ET.register_namespace("", _GRAPHML_NS)
    root = ET.Element(f"{{{_GRAPHML_NS}}}graphml")
    attr_names = sorted({k for attrs in graph.nodes.values() for k in attrs})
    attr_types = {
        name: _attr_type(
            attrs[name] for attrs in graph.nodes.values() if name in attrs and attrs[name] is not None
        )
        for name in attr_names
    }
    for name in attr_names:
        ET.SubElement(root, f"{{{_GRAPHML_NS}}}key", {
            "id": f"n_{name}", "for": "node", "attr.name": name,
            "attr.type": attr_types[name],
        })
    ET.SubElement(root, f"{{{_GRAPHML_NS}}}key", {
        "id": "e_weight", "for": "edge", "attr.name": "weight",
        "attr.type": _attr_type(graph.edges.values()) if graph.edges else "double",
    })
    ET.SubElement(root, f"{{{_GRAPHML_NS}}}key", {
        "id": "g_metadata", "for": "graph", "attr.name": "metadata",
        "attr.type": "string",
    })
    g = ET.SubElement(root, f"{{{_GRAPHML_NS}}}graph", {"id": "semnet", "edgedefault": "undirected"})
    meta = ET.SubElement(g, f"{{{_GRAPHML_NS}}}data", {"key": "g_metadata"})
    meta.text = json.dumps(dict(graph.metadata), sort_keys=True)
    for node in sorted(graph.nodes):
        el = ET.SubElement(g, f"{{{_GRAPHML_NS}}}node", {"id": node})
        attrs = graph.nodes[node]
        for k in sorted(attrs):
            if attrs[k] is None:
                continue
            d = ET.SubElement(el, f"{{{_GRAPHML_NS}}}data", {"key": f"n_{k}"})
            d.text = str(attrs[k]).lower() if isinstance(attrs[k], bool) else repr(attrs[k]) if isinstance(attrs[k], float) else str(attrs[k])
    for i, (a, b) in enumerate(sorted(graph.edges)):
        el = ET.SubElement(g, f"{{{_GRAPHML_NS}}}edge", {"id": f"e{i}", "source": a, "target": b})
        d = ET.SubElement(el, f"{{{_GRAPHML_NS}}}data", {"key": "e_weight"})
        w = graph.edges[(a, b)]
        d.text = repr(w) if isinstance(w, float) else str(w)
    ET.indent(root)
    return ET.tostring(root, encoding="unicode", xml_declaration=True) + "\n"


_CASTS = {
    "boolean": lambda s: s == "true",
    "long": int,
    "double": float,
    "string": str,
}


def load_graphml(path: str | Path) -> SemanticGraph:
    """Parse a graph written by export_graph(..., fmt="graphml")."""
    root = ET.parse(path).getroot()
    keys: dict[str, tuple[str, str]] = {}
    for key in root.findall(f"{{{_GRAPHML_NS}}}key"):
        keys[key.get("id")] = (key.get("attr.name"), key.get("attr.type"))
    g = root.find(f"{{{_GRAPHML_NS}}}graph")
    metadata: dict[str, object] = {}
    nodes: dict[str, dict[str, object]] = {}
    edges: dict[tuple[str, str], float] = {}
    for data in g.findall(f"{{{_GRAPHML_NS}}}data"):
        if keys[data.get("key")][0] == "metadata":
            metadata = json.loads(data.text or "{}")
    for el in g.findall(f"{{{_GRAPHML_NS}}}node"):
        attrs: dict[str, object] = {}
        for data in el.findall(f"{{{_GRAPHML_NS}}}data"):
            name, typ = keys[data.get("key")]
            attrs[name] = _CASTS[typ](data.text)
        nodes[el.get("id")] = attrs
    for el in g.findall(f"{{{_GRAPHML_NS}}}edge"):
        a, b = el.get("source"), el.get("target")
        weight: float = 1.0
        for data in el.findall(f"{{{_GRAPHML_NS}}}data"):
            name, typ = keys[data.get("key")]
            if name == "weight":
                weight = _CASTS[typ](data.text)
        edges[(a, b)] = weight
    return SemanticGraph(nodes=nodes, edges=edges, metadata=metadata)
