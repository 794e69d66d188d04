#!/usr/bin/env python3
"""Convert the raw LINQS Cora release into the repo's edge/feature formats.

Input:  cora.content (node_id <tab> 1433 binary features <tab> class label)
        cora.cites   (cited_id <tab> citing_id)
Output: cora.edges        one "u v" line per citation, ids remapped to the
                          row order of cora.content (zero-based)
        cora.features.csv one row per node, 1433 comma-separated 0/1 cells

The citation list is kept verbatim (including reciprocal duplicates); the
graph loader collapses duplicates when reading.
"""

import argparse
import pathlib


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("content", type=pathlib.Path, help="path to cora.content")
    ap.add_argument("cites", type=pathlib.Path, help="path to cora.cites")
    ap.add_argument("outdir", type=pathlib.Path, help="output directory")
    args = ap.parse_args()

    ids = []
    rows = []
    for line in args.content.read_text().splitlines():
        parts = line.split()
        if not parts:
            continue
        ids.append(parts[0])
        rows.append(parts[1:-1])  # drop trailing class label
    index = {node: i for i, node in enumerate(ids)}
    width = len(rows[0])
    assert all(len(r) == width for r in rows), "ragged feature rows"

    edges = []
    for line in args.cites.read_text().splitlines():
        parts = line.split()
        if not parts:
            continue
        a, b = index[parts[0]], index[parts[1]]
        edges.append((a, b))

    args.outdir.mkdir(parents=True, exist_ok=True)
    with open(args.outdir / "cora.edges", "w") as f:
        f.write("# Cora citation graph; node ids follow cora.features.csv row order\n")
        for a, b in edges:
            f.write(f"{a} {b}\n")
    with open(args.outdir / "cora.features.csv", "w") as f:
        for r in rows:
            f.write(",".join(r) + "\n")

    uniq = {(min(a, b), max(a, b)) for a, b in edges if a != b}
    print(f"nodes={len(ids)} features={width} "
          f"citations={len(edges)} unique_undirected={len(uniq)}")


if __name__ == "__main__":
    main()
