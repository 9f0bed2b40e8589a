"""
Counterfactual error of a learned graph
=======================================

Change one mechanism (a regression weight) in the true network.  A learned
graph predicts the effect of the change by importance weighting the
observational data with its own fitted factors; the counterfactual error
compares that prediction with the actual shift.
"""

import warnings

import numpy as np

from causalbench.counterfactual import (CounterfactualQuery, FactorReplacement, counterfactual_analysis,
                                        counterfactual_mean, importance_weights)
from causalbench.gbn import GbnModel, sample_observational
from causalbench.graphs import Dag

# A ~ N(1, 1) and D = 3 + A + noise.  Doubling the A -> D weight moves E[D] from 4 to 5.
w = np.zeros((2, 2))
w[0, 1] = 1.0
model = GbnModel(Dag(2, [(0, 1)], ["A", "D"]), w, [1.0, 3.0], [1.0, 1.0])
repl = FactorReplacement(1, {0: 2.0})

for n in (10**3, 10**4, 10**5):
    data = sample_observational(model, n, seed=0)
    wts = importance_weights(model, repl, data)
    print(f"n={n:>6}  estimate of E'[D] = {counterfactual_mean(wts, data.column('D')):.3f}  (exact 5)")

# a three-node chain x -> b -> t; change the b <- x weight and watch t
w = np.zeros((3, 3))
w[0, 1], w[1, 2] = 0.8, 0.6
chain = GbnModel(Dag(3, [(0, 1), (1, 2)], ["x", "b", "t"]), w, [10.0, 5.0, 2.0], [1.0, 1.0, 1.0])
obs = sample_observational(chain, 20_000, seed=1)


def query_for(new_weight, seed=2):
    repl = FactorReplacement(1, {0: new_weight})
    return CounterfactualQuery(chain, repl, obs, sample_observational(repl.to_model(chain), 20_000, seed))


# a small change (b moves by about one noise sd) is estimated well ...
res = counterfactual_analysis(query_for(0.9), chain.dag)
print("true graph, weight 0.8 -> 0.9: CE = %.3f, ESS = %.0f" % (res.ce, res.ess))

# ... a large one (b moves by about five sd) leaves few effective samples
query = query_for(1.3)
res = counterfactual_analysis(query, chain.dag)
print("true graph, weight 0.8 -> 1.3: CE = %.3f, ESS = %.0f" % (res.ce, res.ess))

# a graph missing x -> b cannot express the change at all: CE = 1
with warnings.catch_warnings():
    warnings.simplefilter("ignore")
    res = counterfactual_analysis(query, Dag(3, [(1, 2)], ["x", "b", "t"]))
print("graph without x -> b: CE = %.3f" % res.ce)
