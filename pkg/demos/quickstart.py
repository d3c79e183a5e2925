"""Quickstart: align a graph with a noisy, shuffled copy of itself.

Run with ``python demos/quickstart.py``. Takes a few seconds.
"""

from gradalign import AlignConfig, accuracy, align, erdos_renyi, make_noisy_copy, split_seeds

# A 300-node random graph with 8 Gaussian attributes per node.
g = erdos_renyi(300, p=0.03, d=8, seed=1)
print(f"source: {g.n} nodes, {g.num_edges} edges")

# The target is the same graph with 10% of its edges dropped, 10% of the
# attribute rows zeroed and every node id shuffled. ``gt`` records where each
# source node ended up.
copy, gt = make_noisy_copy(g, edge_noise=0.1, attr_noise=0.1, rng_seed=2)
print(f"target: {copy.n} nodes, {copy.num_edges} edges")

# Reveal 10% of the true pairs as prior seeds; the aligner must find the rest.
seeds, held_out = split_seeds(gt, t=0.1, rng_seed=3)
print(f"{len(seeds)} seeds given, {len(held_out)} pairs to discover")

# Default settings: 2-layer GIN, 15 matching rounds.
cfg = AlignConfig()
mapping, sim = align(g, copy, seeds, cfg, pair_budget=len(held_out))

print(f"\naccuracy on the hidden pairs: {accuracy(mapping, gt):.3f}")

# Each pair remembers the round it was found in. Early rounds should be the
# most reliable ones.
rounds = {}
for s, t in mapping:
    origin = mapping.origin[s]
    if origin != "seed":
        hit = gt.as_dict()[s] == t
        n, ok = rounds.get(origin, (0, 0))
        rounds[origin] = (n + 1, ok + hit)
print("\nround    pairs  correct")
for origin, (n, ok) in sorted(rounds.items(), key=lambda kv: int(kv[0].split("-")[1])):
    print(f"{origin:<8}{n:>6}{ok:>9}")
