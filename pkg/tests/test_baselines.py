# tests/test_baselines.py

import networkx as nx
import pytest

from gcssim.config import NS, PS
from gcssim.errors import ConfigError, DeadlockDetected
from gcssim.fairbanks import (
    DELAY_SETUPS, DelayPattern, FairbanksNet, fairbanks_comparison, fairbanks_step,
    fairbanks_swap_experiment, run_fairbanks,
)
from gcssim.params import Topology
from gcssim.scenarios import builtin_scenario
from gcssim.scheduler import EventQueue
from gcssim.tree import (
    TreeModel, builtin_tree, comb_tree, h_tree, min_max_stretch, random_tree, split_comb_tree,
    tree_distances, tree_local_skew, tree_vs_gcs,
)


class TestFairbanksNet:

    def test_types_alternate(self):
        net = FairbanksNet.build(Topology.line(4))
        assert net.pull_up == {0: True, 1: False, 2: True, 3: False}
        assert not any(net.latches.values())

    def test_odd_cycle_rejected(self):
        with pytest.raises(ConfigError):
            FairbanksNet.build(Topology.ring(3))

    def test_empty_queue_deadlocks(self):
        net = FairbanksNet.build(Topology.line(2))
        net.queue = EventQueue()
        with pytest.raises(DeadlockDetected):
            fairbanks_step(net, 0, DelayPattern.nocap())

    def test_swap_toggles_sources(self):
        pattern = DelayPattern.large_local().with_swaps([100, 200])
        assert pattern.delay(3, 2, 99) == 1
        assert pattern.delay(3, 2, 100) == 8
        assert pattern.delay(3, 2, 200) == 1
        assert pattern.delay(2, 1, 150) == 1
        assert pattern.delay(0, 1, 150) == 8


class TestFairbanksRuns:

    @pytest.mark.parametrize("setup, period", [("nocap", 6), ("fullcap", 20)])
    def test_uniform_delays_have_no_skew(self, setup, period):
        result = run_fairbanks(delays=DELAY_SETUPS[setup](), horizon_ticks=200)
        assert result.tick_count >= 200
        assert result.local_skew() == 0
        assert result.period() == period

    def test_large_local_pattern(self):
        result = run_fairbanks(delays=DelayPattern.large_local(), horizon_ticks=500)
        assert result.period() == 20
        assert result.local_skew() == 7
        assert result.global_skew() == 7
        assert result.local_skew() >= 2 * run_fairbanks(delays=DelayPattern.nocap(), horizon_ticks=500).local_skew()

    def test_bounded_over_many_ticks(self):
        result = run_fairbanks(delays=DelayPattern.nocap(), horizon_ticks=10_000)
        assert result.local_skew() == 0
        assert result.races == 0

    def test_swap_turns_global_into_local_skew(self):
        swap = fairbanks_swap_experiment(50 * NS)
        assert swap.pre_global == 7
        assert swap.post_local == 7
        assert swap.ratio >= 0.7
        assert swap.to_dict()["post_swap_local_ps"] == 7.0

    def test_repeated_swaps(self):
        swap = fairbanks_swap_experiment([50 * NS, 100 * NS])
        assert len(swap.window_local) == 2
        assert swap.run.unit_fs == PS

    def test_comparison_follows_scenario(self):
        doc = fairbanks_comparison(builtin_scenario("fairbanks-large-local").evolve(duration=20 * NS))
        assert doc["pattern"] == "large-local"
        assert doc["local_skew_ps"] == 7.0


class TestTrees:

    @pytest.mark.parametrize("width, distance", [(2, 3), (3, 3), (8, 9)])
    def test_comb(self, width, distance):
        assert tree_local_skew(TreeModel(width, comb_tree(width))).distance == distance

    def test_split_comb_worst_pair(self):
        skew = tree_local_skew(TreeModel(8, split_comb_tree(8)))
        assert skew.distance == 13
        assert skew.pair == ((3, 7), (4, 7))

    @pytest.mark.parametrize("width", [2, 4, 8, 16])
    def test_h_tree_distance(self, width):
        assert tree_local_skew(builtin_tree("h-tree", width)).distance == 2 * (width - 1)

    def test_h_tree_needs_power_of_two(self):
        with pytest.raises(ConfigError):
            h_tree(6)

    def test_tree_distances_through_lca(self):
        tree = nx.path_graph([(0, 0), (0, 1), (1, 1), (1, 0)])
        assert tree_distances(tree, [((0, 0), (1, 0))]) == {((0, 0), (1, 0)): 3}

    @pytest.mark.parametrize("width", [2, 3])
    def test_min_max_stretch(self, width):
        assert min_max_stretch(width) == 3

    def test_random_tree_is_seeded(self):
        a, b = random_tree(5, 42), random_tree(5, 42)
        assert nx.is_tree(a)
        assert sorted(map(sorted, a.edges)) == sorted(map(sorted, b.edges))
        assert builtin_tree("random", 5, seed=42).name == "random-42"

    def test_unknown_tree(self):
        with pytest.raises(ConfigError):
            builtin_tree("spiral", 4)

    def test_non_spanning_tree_rejected(self):
        with pytest.raises(ConfigError):
            TreeModel(3, nx.path_graph([(0, 0), (0, 1)]))


class TestTreeVsGcs:
    """Linear tree growth against the logarithmic GCS bound"""

    rows = tree_vs_gcs()

    def test_tree_estimates(self):
        assert [r["tree_local_fs"] for r in self.rows] == [5 * PS, 15 * PS, 35 * PS, 75 * PS, 155 * PS]
        assert all(r["tree_local_wide_fs"] == 2 * r["tree_local_fs"] for r in self.rows)

    def test_gcs_bounds(self):
        assert [r["gcs_local_fs"] for r in self.rows] == [20 * PS, 20 * PS, 30 * PS, 30 * PS, 30 * PS]

    def test_crossover(self):
        widths = [r["W"] for r in self.rows if r["tree_local_fs"] > r["gcs_local_fs"]]
        assert widths == [8, 16, 32]
        tree = [r["tree_local_fs"] for r in self.rows]
        assert tree == sorted(set(tree))
