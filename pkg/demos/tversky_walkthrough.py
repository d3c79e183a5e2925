"""Why an asymmetric overlap score suits graphs of different sizes.

A small worked example: a 6-node star in the source and a 4-node star in the
target. We track how the score of the two hubs grows as more of their
neighbours get aligned, under Tversky (alpha=1/2, beta=1) and Jaccard.
"""

from gradalign import Graph, NodeMapping, jaccard_similarity, tversky_similarity

g_s = Graph(6, [(0, i) for i in range(1, 6)], node_labels=list("ABCDEF"))
g_t = Graph(4, [(0, i) for i in range(1, 4)], node_labels=list("abcd"))

# Leaves get aligned one at a time: B->b, then C->c, then D->d.
mapping = NodeMapping()
print("aligned   tversky(A,a)  jaccard(A,a)")
for step, (s, t) in enumerate([(1, 1), (2, 2), (3, 3)], start=1):
    mapping.add(s, t, origin=f"iter-{step}")
    tv = tversky_similarity(g_s, g_t, mapping, alpha=0.5, beta=1.0).scores[0, 0]
    jc = jaccard_similarity(g_s, g_t, mapping).scores[0, 0]
    names = ",".join(g_s.label(x) + g_t.label(mapping.forward[x]) for x in sorted(mapping.forward))
    print(f"{names:<10}{tv:>12.4f}{jc:>14.4f}")

# The hub of the bigger graph always has unmatched leftovers (E, F). Jaccard
# charges them fully; Tversky discounts them by alpha, so each new aligned
# neighbour moves the score further and the true hub pair stands out sooner.
