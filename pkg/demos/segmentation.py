"""Per-vertex lobe segmentation on ridged two-lobe meshes.

Each vertex is described by the superlevel diagram of geodesic distance from
it. Training uses half of the shapes; the rest are held out.

    python demos/segmentation.py [shapes]
"""
import sys

from pdperm.learn import segmentation_run, synthetic_shapes, vertex_diagrams

count = int(sys.argv[1]) if len(sys.argv) > 1 else 4
meshes, labels = synthetic_shapes(count, seed=0)
dgms = [vertex_diagrams(m) for m in meshes]
print(f"{count} shapes, {sum(len(m.vertices) for m in meshes)} vertices")
for name, feat, perm in (("image", "image", False), ("image, fake", "image", True), ("landscape", "landscape", False)):
    res = segmentation_run(meshes, labels, 0, feat, perm, diagrams=dgms)
    print(f"{name:>12}: vertex error {res.error_rate:.4f}")
