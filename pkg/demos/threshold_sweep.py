"""
Sweeping the significance level
===============================

A single alpha gives one point on the ROC curve.  Sweeping it traces the
curve, and the F-score picks the best graph when the truth is known.
"""

from causalbench.discovery import threshold_sweep
from causalbench.gbn import random_gbn, sample_observational
from causalbench.metrics import auc, edge_confusion, prf, roc_points

model = random_gbn(10, 0.3, seed=11)
data = sample_observational(model, 3000, seed=12)

grid = [0.001, 0.01, 0.05, 0.1, 0.2, 0.4]
sweep = threshold_sweep(data, "pc", grid, truth=model.dag)

for t, g in zip(sweep.thresholds, sweep.graphs):
    r = prf(edge_confusion(g, model.dag))
    print(f"alpha={t:<6} edges={len(g.directed) + len(g.undirected):2d} F={r.f_score:.2f} FPR={r.fpr:.3f}")

print("selected alpha:", sweep.best_threshold)
print("ROC points:", [(round(f, 3), round(t, 3)) for f, t in roc_points(sweep.graphs, model.dag)])
print("AUC: %.3f" % auc(sweep.graphs, model.dag))
