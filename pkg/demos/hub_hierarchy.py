"""A hub that drives every other node but is driven by none.

The hub's outgoing transfers are weak next to the leaf-to-leaf ones, so it
joins the dendrogram last, and k-means on the spectral embedding keeps it
in a cluster of its own.
"""
from infoclust import (build_influence_graph, hierarchical_cluster, model_transfer_matrix,
                       simulate_linear, symmetrize_affinity, symmetrize_distance, transfer_matrix)
from infoclust.clustering import embedding_kmeans
from infoclust.simulate import make_hub_system

m = make_hub_system()
groups = [(name, (i,)) for i, name in enumerate(m.names)]

g = build_influence_graph(model_transfer_matrix(m, groups))
dendro = hierarchical_cluster(symmetrize_distance(g), g.nodes)
print("closed-form dendrogram:", dendro.to_newick(), end="")
for mg in dendro.merges:
    names = [g.nodes[i] for i in dendro.members(mg.new_id)]
    print(f"  merge at {mg.height:.4f}: {names}")

for seed in range(5):
    ts = simulate_linear(m, steps=2000, seed=seed)
    gd = build_influence_graph(transfer_matrix(ts, groups))
    labels = embedding_kmeans(symmetrize_affinity(gd), 3, seed=seed).labels
    print(f"seed {seed}: k-means labels {dict(zip(gd.nodes, labels))}")
