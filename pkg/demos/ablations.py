"""Which ingredient matters? Every variant on one noisy instance.

- grad-align:     embeddings and Tversky overlap, 15 gradual rounds
- ablation-1:     same similarity, but every pair chosen in one shot
- ablation-2:     Tversky overlap only, no encoder
- ablation-3:     embeddings only
- grad-align-ea:  grad-align plus edge augmentation between rounds
"""

from gradalign import AlignConfig, erdos_renyi, make_noisy_copy, run_ablations, split_seeds

g = erdos_renyi(300, p=0.03, d=8, seed=11)
copy, gt = make_noisy_copy(g, edge_noise=0.1, attr_noise=0.1, rng_seed=12)
seeds, _ = split_seeds(gt, t=0.1, rng_seed=13)

reports = run_ablations(g, copy, seeds, gt, AlignConfig())
print("variant         Acc     P@1     runtime")
for name, rep in reports.items():
    print(f"{name:<14}{rep.acc:>6.3f}{rep.precision_at[1]:>8.3f}{rep.runtime_seconds:>9.1f}s")
