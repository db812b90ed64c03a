#!/usr/bin/env python3
"""Convert a Planetoid archive (ind.<name>.{x,y,tx,ty,allx,ally,graph,test.index})
into the plain-text dataset directory read by `gldgcn`.

    python3 tools/convert_planetoid.py RAW_DIR cora OUT_DIR/cora

Writes features.csv, labels.txt, edges.tsv, train.txt, val.txt, test.txt and
manifest.txt. The split is the public one: the first 20 per class for training,
the next 500 nodes for validation and the 1000 listed test nodes.
Test indices missing from the archive (Citeseer) become featureless,
unlabeled nodes so that node ids stay aligned with the graph.
"""

import argparse
import pickle
import sys
from pathlib import Path

import numpy as np
import scipy.sparse as sp


def load_part(raw: Path, name: str, part: str):
    with open(raw / f"ind.{name}.{part}", "rb") as f:
        return pickle.load(f, encoding="latin1")


def dense(m):
    return m.toarray() if sp.issparse(m) else np.asarray(m)


def convert(raw: Path, name: str, out: Path) -> None:
    x, y, tx, ty, allx, ally, graph = (load_part(raw, name, p) for p in ("x", "y", "tx", "ty", "allx", "ally", "graph"))
    test_index = [int(line) for line in (raw / f"ind.{name}.test.index").read_text().split()]
    test_sorted = sorted(test_index)

    tx, ty = dense(tx), dense(ty)
    lo, hi = test_sorted[0], test_sorted[-1]
    if hi - lo + 1 != len(test_sorted):
        # pad the test block so every id in [lo, hi] has a row
        full_tx = np.zeros((hi - lo + 1, tx.shape[1]))
        full_ty = np.zeros((hi - lo + 1, ty.shape[1]))
        full_tx[np.array(test_sorted) - lo] = tx
        full_ty[np.array(test_sorted) - lo] = ty
        tx, ty = full_tx, full_ty

    features = np.vstack([dense(allx), tx])
    onehot = np.vstack([dense(ally), ty])
    features[test_index] = features[test_sorted]
    onehot[test_index] = onehot[test_sorted]
    labels = np.where(onehot.sum(axis=1) > 0, onehot.argmax(axis=1), -1)
    n = features.shape[0]

    edges = set()
    for i, nbrs in graph.items():
        for j in nbrs:
            if i != j and i < n and j < n:
                edges.add((min(i, j), max(i, j)))

    train = list(range(len(dense(y))))
    val = list(range(len(train), len(train) + 500))
    test = [i for i in test_index if labels[i] >= 0]

    out.mkdir(parents=True, exist_ok=True)
    np.savetxt(out / "features.csv", features, delimiter=",", fmt="%.17g")
    (out / "labels.txt").write_text("".join(f"{v}\n" for v in labels))
    (out / "edges.tsv").write_text("".join(f"{i}\t{j}\n" for i, j in sorted(edges)))
    for split, ids in (("train", train), ("val", val), ("test", test)):
        (out / f"{split}.txt").write_text("".join(f"{i}\n" for i in ids))
    (out / "manifest.txt").write_text(
        f"name={name}\nn={n}, classes={onehot.shape[1]}, features={features.shape[1]}, edges={len(edges)}\n")
    print(f"{name}: n={n} edges={len(edges)} features={features.shape[1]} classes={onehot.shape[1]} "
          f"train/val/test={len(train)}/{len(val)}/{len(test)}")


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("raw_dir", type=Path, help="directory holding the ind.<name>.* files")
    ap.add_argument("name", help="cora, citeseer or pubmed")
    ap.add_argument("out_dir", type=Path)
    args = ap.parse_args()
    convert(args.raw_dir, args.name, args.out_dir)
    return 0


if __name__ == "__main__":
    sys.exit(main())
