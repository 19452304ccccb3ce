# The two binary containers and the command-line pipeline built on them:
#   CEF  "CEF1" | dim u32 | count u64 | count x [label u32 | dim x f32]
#   CMF  "CMF1" | dim u32 | classes u32 | per class [id u32 | trained u64 |
#         centroids u32 | per centroid [weight u64 | dim x f32]]
# Both are little-endian and round-trip exactly.

import io
import tempfile
from pathlib import Path

from cbcl import (
    CbclModel, learn_class, load_model, make_synthetic, read_cef, save_model, write_cef,
)
from cbcl.cli import main

data = make_synthetic(num_classes=3, per_class=20, dim=4, separation=15, spread=1, seed=5)

buf = io.BytesIO()
write_cef(data, buf)
blob = buf.getvalue()
print(f"CEF: {len(data)} records, dim {data.dim} -> {len(blob)} bytes "
      f"(16 header + {len(data)} x {4 + 4 * data.dim})")
assert read_cef(io.BytesIO(blob)) == data

model = CbclModel(data.dim)
for cid in data.classes:
    learn_class(model, cid, data.vectors[data.class_index[cid]].astype("float64"), 3.0)
buf = io.BytesIO()
save_model(model, buf)
print(f"CMF: {sum(len(c.centroids) for c in model.classes.values())} centroids "
      f"-> {len(buf.getvalue())} bytes")
assert load_model(io.BytesIO(buf.getvalue())) == load_model(io.BytesIO(buf.getvalue()))

# the same pipeline through the CLI
workdir = Path(tempfile.mkdtemp())
cef, cmf = workdir / "toy.cef", workdir / "toy.cmf"
steps = [
    ["synth", "--classes", "3", "--per-class", "20", "--dim", "4",
     "--sep", "15", "--spread", "1", "--seed", "5", "-o", str(cef)],
    ["learn", "--input", str(cef), "--threshold", "3", "-o", str(cmf)],
    ["evaluate", "--model", str(cmf), "--input", str(cef), "--votes", "2"],
    ["predict", "--model", str(cmf), "--input", str(cef), "--votes", "1",
     "-o", str(workdir / "labels.csv")],
]
for argv in steps:
    print(f"\n$ cbcl {' '.join(argv)}")
    code = main(argv)
    assert code == 0, code

print(f"\npredictions written to {workdir / 'labels.csv'}")
print((workdir / "labels.csv").read_text().splitlines()[0:4])
