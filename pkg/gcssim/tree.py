# tree.py
"""
Clock-tree local skew model on a W x W grid.

Two grid neighbors fed from a clock tree see a skew proportional to their
distance in the tree: every hop adds its own delay uncertainty. The
estimate is tree distance x per-hop uncertainty x hop delay.
"""

import random
from dataclasses import dataclass, field
from fractions import Fraction

import networkx as nx

from .config import TREE_HOP_DELAY, TREE_UNCERTAINTY, TREE_UNCERTAINTY_WIDE, TREE_SWEEP_SIDES
from .errors import ConfigError
from .logger import get_logger
from .params import SystemParams, skew_bounds

logger = get_logger(__name__)


@dataclass
class TreeModel:
    width: int
    tree: nx.Graph
    name: str = "custom"
    uncertainty: Fraction = TREE_UNCERTAINTY
    hop_delay: int = TREE_HOP_DELAY
    grid: nx.Graph = field(init=False)

    def __post_init__(self):
        self.grid = nx.grid_2d_graph(self.width, self.width)
        for u, v in self.tree.edges:
            self.tree.edges[u, v].setdefault("length", 1)
        missing = set(self.grid.nodes) - set(self.tree.nodes)
        if missing:
            raise ConfigError(f"tree '{self.name}' misses {len(missing)} grid nodes", key="tree")
        if not nx.is_tree(self.tree):
            raise ConfigError(f"'{self.name}' is not a tree", key="tree")

    def with_uncertainty(self, uncertainty) -> "TreeModel":
        return TreeModel(self.width, self.tree, self.name, Fraction(uncertainty), self.hop_delay)


@dataclass(frozen=True)
class TreeSkew:
    distance: int
    pair: tuple | None
    estimate: Fraction


def tree_distances(tree: nx.Graph, pairs) -> dict:
    """Weighted tree distance for each pair through the lowest common ancestor."""
    pairs = list(pairs)
    if not pairs:
        return {}
    root = min(n for n in tree.nodes if isinstance(n, tuple) and len(n) == 2)
    depth = nx.single_source_dijkstra_path_length(tree, root, weight="length")
    rooted = nx.bfs_tree(tree, root)
    lca = dict(nx.tree_all_pairs_lowest_common_ancestor(rooted, root=root, pairs=pairs))
    return {(u, v): depth[u] + depth[v] - 2 * depth[lca[(u, v)]] for u, v in pairs}


def tree_local_skew(model: TreeModel) -> TreeSkew:
    """The grid-adjacent pair farthest apart in the tree, and its skew estimate."""
    pairs = sorted(tuple(sorted(edge)) for edge in model.grid.edges)
    distances = tree_distances(model.tree, pairs)
    if not distances:
        return TreeSkew(0, None, Fraction(0))
    pair = max(pairs, key=lambda p: (distances[p], [-x for x in p[0] + p[1]]))
    distance = distances[pair]
    return TreeSkew(distance, pair, distance * model.uncertainty * model.hop_delay)


def _path_edges(nodes) -> list:
    return list(zip(nodes, nodes[1:]))


def comb_tree(width: int) -> nx.Graph:
    """Spine along the middle row, one vertical tooth per column."""
    spine = width // 2
    tree = nx.Graph()
    tree.add_nodes_from((r, c) for r in range(width) for c in range(width))
    tree.add_edges_from(_path_edges([(spine, c) for c in range(width)]))
    for c in range(width):
        tree.add_edges_from(_path_edges([(r, c) for r in range(spine, -1, -1)]))
        tree.add_edges_from(_path_edges([(r, c) for r in range(spine, width)]))
    return tree


def split_comb_tree(width: int) -> nx.Graph:
    """
    Two combs back to back: the top half hangs its teeth up from row h-1,
    the bottom half hangs its teeth down from row h, and one bridge at
    column 1 joins the two spines. Neighbors across the split far from the
    bridge end up far apart in the tree.
    """
    if width < 2:
        return comb_tree(width)
    h = width // 2
    bridge = min(1, width - 1)
    tree = nx.Graph()
    tree.add_nodes_from((r, c) for r in range(width) for c in range(width))
    tree.add_edges_from(_path_edges([(h - 1, c) for c in range(width)]))
    tree.add_edges_from(_path_edges([(h, c) for c in range(width)]))
    for c in range(width):
        tree.add_edges_from(_path_edges([(r, c) for r in range(h - 1, -1, -1)]))
        tree.add_edges_from(_path_edges([(r, c) for r in range(h, width)]))
    tree.add_edge((h - 1, bridge), (h, bridge))
    return tree


def bfs_tree(width: int) -> nx.Graph:
    grid = nx.grid_2d_graph(width, width)
    center = (width // 2, width // 2)
    return nx.Graph(nx.bfs_tree(grid, center))


def h_tree(width: int) -> nx.Graph:
    """
    Recursive H-tree with Steiner branch points. Each block's branch point
    feeds the four quadrant branch points at length s/2; a 2x2 block feeds
    its four cells at length 1.
    """
    if width < 2 or width & (width - 1):
        raise ConfigError(f"an H-tree needs a power-of-two width, got {width}", key="tree.width")
    tree = nx.Graph()

    def build(r: int, c: int, s: int):
        center = ("h", r, c, s)
        half = s // 2
        for dr in (0, half):
            for dc in (0, half):
                if s == 2:
                    tree.add_edge(center, (r + dr, c + dc), length=1)
                else:
                    tree.add_edge(center, ("h", r + dr, c + dc, half), length=half)
                    build(r + dr, c + dc, half)

    build(0, 0, width)
    return tree


def uniform_random_spanning_tree(graph: nx.Graph, rng: random.Random) -> nx.Graph:
    """Wilson's loop-erased random walk: a spanning tree drawn uniformly at random."""
    names = sorted(graph.nodes)
    root = rng.choice(names)
    in_tree = {root}
    next_node = {root: None}
    for node in names:
        u = node
        while u not in in_tree:
            next_node[u] = rng.choice(sorted(graph.neighbors(u)))
            u = next_node[u]
        u = node
        while u not in in_tree:
            in_tree.add(u)
            u = next_node[u]
    tree = nx.Graph()
    tree.add_nodes_from(names)
    tree.add_edges_from((n, nxt) for n, nxt in next_node.items() if nxt is not None)
    return tree


def random_tree(width: int, seed: int) -> nx.Graph:
    return uniform_random_spanning_tree(nx.grid_2d_graph(width, width), random.Random(f"{seed}:tree"))


BUILTIN_TREES = {
    "comb": comb_tree,
    "split-comb": split_comb_tree,
    "low-stretch": split_comb_tree,
    "bfs": bfs_tree,
    "h-tree": h_tree,
}


def builtin_tree(name: str, width: int, seed: int | None = None, **kwargs) -> TreeModel:
    if name == "random":
        return TreeModel(width, random_tree(width, seed or 0), f"random-{seed or 0}", **kwargs)
    factory = BUILTIN_TREES.get(name)
    if factory is None:
        raise ConfigError(f"unknown tree '{name}'; known: {', '.join(BUILTIN_TREES)}, random", key="tree")
    return TreeModel(width, factory(width), name, **kwargs)


def all_spanning_trees(width: int):
    yield from nx.SpanningTreeIterator(nx.grid_2d_graph(width, width))


def min_max_stretch(width: int) -> int:
    """Smallest possible worst neighbor distance over every spanning tree of the grid."""
    best = None
    for tree in all_spanning_trees(width):
        distance = tree_local_skew(TreeModel(width, nx.Graph(tree))).distance
        if best is None or distance < best:
            best = distance
    return best or 0


def grid_diameter(width: int) -> int:
    return 2 * (width - 1)


def tree_vs_gcs(sides=TREE_SWEEP_SIDES, tree: str = "h-tree", params: SystemParams | None = None) -> list[dict]:
    """Tree skew estimates at both uncertainties next to the GCS bounds of the same grid."""
    params = params or SystemParams()
    rows = []
    for width in sides:
        model = builtin_tree(tree, width)
        narrow = tree_local_skew(model)
        wide = tree_local_skew(model.with_uncertainty(TREE_UNCERTAINTY_WIDE))
        bounds = skew_bounds(params, grid_diameter(width))
        rows.append({
            "W": width,
            "tree": tree,
            "tree_distance": narrow.distance,
            "tree_local_fs": narrow.estimate,
            "tree_local_wide_fs": wide.estimate,
            "gcs_local_fs": bounds.local_bound,
            "gcs_global_fs": bounds.global_bound,
            "diameter": bounds.diameter,
        })
        logger.debug("W=%s: tree distance %s, GCS local bound %s fs", width, narrow.distance, bounds.local_bound)
    return rows


__all__ = [
    'TreeModel', 'TreeSkew', 'tree_distances', 'tree_local_skew',
    'comb_tree', 'split_comb_tree', 'bfs_tree', 'h_tree', 'uniform_random_spanning_tree', 'random_tree',
    'BUILTIN_TREES', 'builtin_tree', 'all_spanning_trees', 'min_max_stretch', 'grid_diameter', 'tree_vs_gcs'
]
