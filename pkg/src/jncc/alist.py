"""alist sparse parity-check interchange, plus the slot-metadata sidecar.

Standard layout: `cols rows` header, max column/row weights, per-column
and per-row degree lists, then 1-based index lists padded with zeros to
the maximum weight.
"""

from __future__ import annotations

import numpy as np

from .gf2 import Gf2Matrix


def write_alist(h: Gf2Matrix, path) -> None:
    col_sup = h.col_supports()
    row_sup = h.row_supports()
    dmax_col = max((len(s) for s in col_sup), default=0)
    dmax_row = max((len(s) for s in row_sup), default=0)
    with open(path, "w") as f:
        f.write(f"{h.cols} {h.rows}\n")
        f.write(f"{dmax_col} {dmax_row}\n")
        f.write(" ".join(str(len(s)) for s in col_sup) + "\n")
        f.write(" ".join(str(len(s)) for s in row_sup) + "\n")
        for sup, dmax in ((col_sup, dmax_col), (row_sup, dmax_row)):
            for s in sup:
                entries = [str(i + 1) for i in s] + ["0"] * (dmax - len(s))
                f.write(" ".join(entries) + "\n")


def read_alist(path) -> Gf2Matrix:
    with open(path) as f:
        tokens = [[int(v) for v in line.split()] for line in f if line.strip()]
    cols, rows = tokens[0]
    col_deg = tokens[2]
    col_lists = tokens[4:4 + cols]
    dense = np.zeros((rows, cols), dtype=np.uint8)
    for j in range(cols):
        entries = [v - 1 for v in col_lists[j] if v > 0]
        if len(entries) != col_deg[j]:
            raise ValueError(f"column {j} degree mismatch")
        dense[entries, j] = 1
    return Gf2Matrix.from_dense(dense)


def write_sidecar(code, path) -> None:
    """Per-slot column ranges: `slot <i> cols <a>..<b> kind source|relay`."""
    m_s = code.topology.m_s
    with open(path, "w") as f:
        for i, (a, b) in enumerate(code.slot_columns):
            kind = "source" if i < m_s else "relay"
            f.write(f"slot {i} cols {a}..{b - 1} kind {kind}\n")


def read_sidecar(path) -> list[tuple[int, int, str]]:
    """Returns per-slot (first column, last column inclusive, kind)."""
    out = []
    with open(path) as f:
        for line in f:
            parts = line.split()
            if not parts:
                continue
            if parts[0] != "slot" or parts[2] != "cols" or parts[4] != "kind":
                raise ValueError(f"bad sidecar line: {line!r}")
            a, b = parts[3].split("..")
            out.append((int(a), int(b), parts[5]))
    return out
