"""
Learning a causal graph from simulated Gaussian data
====================================================

Draw a random linear-Gaussian network, sample from it, and compare what
PC, GES and FCI recover against the true graph.
"""

import numpy as np

from causalbench.discovery import DiscoveryOptions, fci, ges, pc
from causalbench.gbn import random_gbn, sample_observational
from causalbench.graphs import dag_to_cpdag
from causalbench.metrics import edge_confusion, prf, shd, sid

# a 8-node network with about 30% of the possible edges
model = random_gbn(8, 0.3, seed=3)
print("true edges:", sorted(model.dag.edges))

# 5000 observational rows
data = sample_observational(model, 5000, seed=4)
print("data shape:", data.values.shape)

# the best any observational method can do is the equivalence class
target = dag_to_cpdag(model.dag)
print("compelled edges:", sorted(target.directed))

# PC: conditional-independence tests at alpha = 0.05
g_pc, sepsets = pc(data, DiscoveryOptions(alpha=0.05))

# GES: greedy search over BIC scores
g_ges = ges(data)

# FCI allows hidden confounders and returns a PAG
g_fci = fci(data, DiscoveryOptions(alpha=0.05))

for name, g in (("pc", g_pc), ("ges", g_ges), ("fci", g_fci)):
    r = prf(edge_confusion(g, model.dag))
    print(f"{name:4s} F={r.f_score:.2f} precision={r.precision:.2f} recall={r.recall:.2f} "
          f"SHD={shd(g, model.dag)} SID={sid(model.dag, g)}")

# SHD against the CPDAG ignores orientations no method could identify
print("PC vs CPDAG, SHD:", shd(g_pc, target))
