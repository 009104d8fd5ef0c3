"""Pure-Python reference kernels, used when the compiled extension is absent.

These define the semantics the Cython twin must reproduce exactly:

* ``label_components``: maximal connected foreground sets under 4- or
  8-adjacency, labeled 1..K in raster order of each component's first pixel.
* ``fill_holes``: foreground plus every background region that cannot reach
  the image border through 4-connected background.
"""

from __future__ import annotations

from collections import deque

import numpy as np


def label_components(mask: np.ndarray, connectivity: int) -> tuple[np.ndarray, int]:
    """Two-pass union-find labeling. Returns (int32 label grid, component count)."""
    if connectivity not in (4, 8):
        raise ValueError(f"connectivity must be 4 or 8, got {connectivity}")
    h, w = mask.shape
    flat = np.ascontiguousarray(mask, dtype=np.uint8).ravel().tolist()
    labels = [0] * (h * w)
    parent = [0]
    eight = connectivity == 8

    def find(x: int) -> int:
        root = x
        while parent[root] != root:
            root = parent[root]
        while parent[x] != root:
            parent[x], x = root, parent[x]
        return root

    def union(a: int, b: int) -> None:
        ra, rb = find(a), find(b)
        if ra < rb:
            parent[rb] = ra
        elif rb < ra:
            parent[ra] = rb

    for r in range(h):
        base = r * w
        for c in range(w):
            idx = base + c
            if not flat[idx]:
                continue
            neigh = []
            if c > 0 and flat[idx - 1]:
                neigh.append(labels[idx - 1])
            if r > 0:
                up = idx - w
                if flat[up]:
                    neigh.append(labels[up])
                if eight:
                    if c > 0 and flat[up - 1]:
                        neigh.append(labels[up - 1])
                    if c + 1 < w and flat[up + 1]:
                        neigh.append(labels[up + 1])
            if not neigh:
                parent.append(len(parent))
                labels[idx] = len(parent) - 1
            else:
                m = min(neigh)
                labels[idx] = m
                for n in neigh:
                    union(m, n)

    remap: dict[int, int] = {}
    for idx in range(h * w):
        if labels[idx]:
            root = find(labels[idx])
            final = remap.get(root)
            if final is None:
                final = len(remap) + 1
                remap[root] = final
            labels[idx] = final
    out = np.array(labels, dtype=np.int32).reshape(h, w)
    return out, len(remap)


def fill_holes(mask: np.ndarray) -> np.ndarray:
    """Breadth-first flood over background from the border; unreached
    background becomes foreground."""
    h, w = mask.shape
    flat = np.ascontiguousarray(mask, dtype=np.uint8).ravel().tolist()
    filled = [1] * (h * w)
    queue: deque[int] = deque()

    def seed(idx: int) -> None:
        if not flat[idx] and filled[idx]:
            filled[idx] = 0
            queue.append(idx)

    for c in range(w):
        seed(c)
        seed((h - 1) * w + c)
    for r in range(h):
        seed(r * w)
        seed(r * w + w - 1)

    while queue:
        idx = queue.popleft()
        r, c = divmod(idx, w)
        if r > 0:
            seed(idx - w)
        if r + 1 < h:
            seed(idx + w)
        if c > 0:
            seed(idx - 1)
        if c + 1 < w:
            seed(idx + 1)

    return np.array(filled, dtype=np.uint8).reshape(h, w)
