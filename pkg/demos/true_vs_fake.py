"""Can a classifier tell a diagram from a re-paired copy of itself?

Extended diagrams of SBM graphs are labelled true (0) or fake (1), then the
four-way confusion splits each class by graph label as well.

    python demos/true_vs_fake.py [count]
"""
import sys

from pdperm.graphio import make_sbm_dataset
from pdperm.learn import Pipeline, confusion_4way, graph_diagrams

count = int(sys.argv[1]) if len(sys.argv) > 1 else 120
ds = make_sbm_dataset(count, noise=0.0, seed=1)
pipe = Pipeline(filtration="degree", diagram="extended", featurization="sw", folds=5, repeats=1, inner_folds=3)
out = confusion_4way(ds, pipe, seed=0, diagrams=graph_diagrams(ds, "degree", diagram="extended"))

names = ["c0 true", "c0 fake", "c1 true", "c1 fake"]
print("rows: actual, columns: predicted")
print(" " * 9 + "".join(f"{n:>9}" for n in names))
for n, row in zip(names, out.confusion4):
    print(f"{n:>9}" + "".join(f"{v:>9d}" for v in row))
merged = out.confusion2
print(f"\ntrue/fake accuracy after merging graph labels: {merged.trace() / merged.sum():.3f}")
