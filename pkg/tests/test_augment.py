import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gradalign.augment import (AugmentState, EdgeAugmentingAligner, align_ea, augment,
                               candidate_edges, save_augment_log)
from gradalign.config import AlignConfig
from gradalign.graph import Graph, GroundTruth, erdos_renyi, make_noisy_copy, split_seeds
from gradalign.matcher import align
from gradalign.similarity import NodeMapping, SimilarityMatrix

FAST = AlignConfig(epochs=30, hidden_dim=32, variant="grad-align-ea", refresh_epochs=5)


def scan_oracle(edges_s, edges_t, fwd):
    """Every aligned source pair, checked one by one in both directions."""
    inv = {t: s for s, t in fwd.items()}
    cand_s, cand_t = set(), set()
    src = sorted(fwd)
    for i, u in enumerate(src):
        for v in src[i + 1:]:
            a, b = sorted((fwd[u], fwd[v]))
            if (u, v) not in edges_s and (a, b) in edges_t:
                cand_s.add((u, v))
            if (u, v) in edges_s and (a, b) not in edges_t:
                cand_t.add((a, b))
    assert all(x in inv and y in inv for x, y in cand_t)
    return cand_s, cand_t


def edge_set(g):
    return {tuple(e) for e in g.edges.tolist()}


@pytest.fixture(scope="module")
def instance():
    g = erdos_renyi(80, p=0.06, d=6, seed=11)
    copy, gt = make_noisy_copy(g, 0.2, 0.1, rng_seed=12)
    seeds, _ = split_seeds(gt, 0.1, rng_seed=13)
    return g, copy, gt, seeds


class TestCandidates:
    def setup_method(self):
        # source: path 0-1-2 plus isolated 3; target: triangle 0-1-2 plus edge 2-3
        self.g_s = Graph(4, [(0, 1), (1, 2)])
        self.g_t = Graph(4, [(0, 1), (1, 2), (0, 2), (2, 3)])
        self.mapping = NodeMapping([(0, 0), (1, 1), (2, 2), (3, 3)])

    def test_missing_counterpart_edges(self):
        state = AugmentState.from_graphs(self.g_s, self.g_t, 0.5)
        cand_s, cand_t = candidate_edges(state, self.mapping)
        assert cand_s == {(0, 2), (2, 3)}
        assert cand_t == set()

    def test_empty_mapping_has_no_candidates(self):
        state = AugmentState.from_graphs(self.g_s, self.g_t, 0.5)
        assert candidate_edges(state, NodeMapping()) == (set(), set())

    def test_confident_pairs_gain_edge(self):
        state = AugmentState.from_graphs(self.g_s, self.g_t, 0.7)
        sim = SimilarityMatrix(np.eye(4) * 0.9)
        augment(state, self.mapping, sim, iteration=1)
        assert (0, 2) in state.edges_s and (2, 3) in state.edges_s
        assert state.added_log == [(1, "source", 0, 2), (1, "source", 2, 3)]

    def test_one_endpoint_below_threshold_blocks_edge(self):
        state = AugmentState.from_graphs(self.g_s, self.g_t, 0.7)
        sim = SimilarityMatrix(np.diag([0.9, 0.9, 0.9, 0.5]))
        augment(state, self.mapping, sim, iteration=1)
        assert (0, 2) in state.edges_s
        assert (2, 3) not in state.edges_s

    def test_threshold_is_strict(self):
        state = AugmentState.from_graphs(self.g_s, self.g_t, 0.9)
        augment(state, self.mapping, SimilarityMatrix(np.eye(4) * 0.9))
        assert state.added_log == []

    @settings(max_examples=60, deadline=None)
    @given(st.integers(2, 9), st.integers(0, 2**31 - 1))
    def test_matches_pair_scan(self, n, seed):
        rng = np.random.default_rng(seed)
        g_s = erdos_renyi(n, p=0.4, seed=int(rng.integers(1 << 30)))
        g_t = erdos_renyi(n, p=0.4, seed=int(rng.integers(1 << 30)))
        k = int(rng.integers(0, n + 1))
        src = rng.permutation(n)[:k]
        tgt = rng.permutation(n)[:k]
        mapping = NodeMapping(zip(src.tolist(), tgt.tolist()))
        state = AugmentState.from_graphs(g_s, g_t, 0.0)
        got = candidate_edges(state, mapping)
        assert got == scan_oracle(edge_set(g_s), edge_set(g_t), mapping.forward)

    @settings(max_examples=40, deadline=None)
    @given(st.integers(2, 9), st.integers(0, 2**31 - 1))
    def test_zero_threshold_equalises_aligned_subgraphs(self, n, seed):
        rng = np.random.default_rng(seed)
        g_s = erdos_renyi(n, p=0.4, seed=int(rng.integers(1 << 30)))
        g_t = erdos_renyi(n, p=0.4, seed=int(rng.integers(1 << 30)))
        k = int(rng.integers(0, n + 1))
        mapping = NodeMapping(zip(rng.permutation(n)[:k].tolist(), rng.permutation(n)[:k].tolist()))
        state = augment(AugmentState.from_graphs(g_s, g_t, 0.0), mapping,
                        SimilarityMatrix(np.ones((n, n))))
        fwd = mapping.forward
        mapped = {tuple(sorted((fwd[u], fwd[v]))) for u, v in state.edges_s
                  if u in fwd and v in fwd}
        inv = mapping.inverse
        aligned_t = {(a, b) for a, b in state.edges_t if a in inv and b in inv}
        assert mapped == aligned_t
        assert edge_set(g_s) <= state.edges_s and edge_set(g_t) <= state.edges_t


class TestAlignEA:
    def test_infinite_threshold_reproduces_align(self, instance):
        g, copy, gt, seeds = instance
        m_ea, s_ea = align_ea(g, copy, seeds, FAST.replace(tau=math.inf))
        m, s = align(g, copy, seeds, FAST.replace(variant="grad-align"))
        assert m_ea.forward == m.forward
        assert np.array_equal(s_ea.scores, s.scores)

    def test_no_refresh_without_additions(self, instance, monkeypatch):
        g, copy, gt, seeds = instance
        calls = []
        orig = EdgeAugmentingAligner.fit_encoder

        def spy(self, init=None, epochs=None):
            calls.append((init is not None, epochs))
            return orig(self, init, epochs)

        monkeypatch.setattr(EdgeAugmentingAligner, "fit_encoder", spy)
        align_ea(g, copy, seeds, FAST.replace(tau=math.inf))
        assert calls == [(False, None)]

    @pytest.mark.parametrize("full_retrain", [False, True])
    def test_refresh_mode(self, instance, monkeypatch, full_retrain):
        g, copy, gt, seeds = instance
        calls = []
        orig = EdgeAugmentingAligner.fit_encoder

        def spy(self, init=None, epochs=None):
            calls.append((init is not None, epochs))
            return orig(self, init, epochs)

        monkeypatch.setattr(EdgeAugmentingAligner, "fit_encoder", spy)
        cfg = FAST.replace(tau=0.0, full_retrain=full_retrain)
        (_, _), aligner = align_ea(g, copy, seeds, cfg, return_aligner=True)
        assert aligner.state.added_log
        expected = (False, None) if full_retrain else (True, cfg.refresh_epochs)
        assert len(calls) > 1 and all(c == expected for c in calls[1:])

    def test_edges_only_grow_and_log_replays(self, instance, tmp_path):
        g, copy, gt, seeds = instance
        (mapping, _), aligner = align_ea(g, copy, seeds, FAST.replace(tau=0.0),
                                         return_aligner=True)
        log = aligner.augment_log()
        assert log
        assert [e[0] for e in log] == sorted(e[0] for e in log)
        replay_s, replay_t = edge_set(g), edge_set(copy)
        for _, which, u, v in log:
            target = replay_s if which == "source" else replay_t
            assert (u, v) not in target
            target.add((u, v))
        assert replay_s == edge_set(aligner.g_s) == aligner.state.edges_s
        assert replay_t == edge_set(aligner.g_t) == aligner.state.edges_t

        path = tmp_path / "aug.tsv"
        save_augment_log(log, path, g, copy)
        lines = path.read_text().splitlines()
        assert len(lines) == len(log)
        assert lines[0].split("\t")[1] in ("source", "target")

    def test_log_follows_caller_orientation(self):
        big = erdos_renyi(50, p=0.1, d=4, seed=3)
        small = Graph(40, big.edges[(big.edges < 40).all(axis=1)], big.attributes[:40])
        seeds = GroundTruth([(i, i) for i in range(0, 40, 5)])
        (_, _), aligner = align_ea(small, big, seeds, FAST.replace(tau=0.0), return_aligner=True)
        assert aligner.swapped
        for _, which, u, v in aligner.augment_log():
            assert max(u, v) < (small.n if which == "source" else big.n)
