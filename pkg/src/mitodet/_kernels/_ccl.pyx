# cython: boundscheck=False, wraparound=False, initializedcheck=False
"""Compiled pixel-loop kernels: connected-component labeling and hole filling.

Semantics are defined by mitodet._kernels.pyfallback; this module is the
fast twin used when the extension could be built.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()


cdef inline int _find(cnp.int32_t* parent, int x) noexcept nogil:
    cdef int root = x
    cdef int cur, nxt
    while parent[root] != root:
        root = parent[root]
    cur = x
    while parent[cur] != root:
        nxt = parent[cur]
        parent[cur] = root
        cur = nxt
    return root


cdef inline void _union(cnp.int32_t* parent, int a, int b) noexcept nogil:
    cdef int ra = _find(parent, a)
    cdef int rb = _find(parent, b)
    if ra < rb:
        parent[rb] = ra
    elif rb < ra:
        parent[ra] = rb


def label_components(cnp.uint8_t[:, ::1] mask, int connectivity):
    """Two-pass union-find labeling of foreground pixels.

    Returns (labels, count): int32 labels 1..count assigned in raster order
    of each component's first pixel, 0 for background.
    """
    if connectivity != 4 and connectivity != 8:
        raise ValueError(f"connectivity must be 4 or 8, got {connectivity}")
    cdef int h = mask.shape[0]
    cdef int w = mask.shape[1]
    out_arr = np.zeros((h, w), dtype=np.int32)
    cdef cnp.int32_t[:, ::1] out = out_arr
    # Worst case (4-connectivity checkerboard) needs ceil(h*w/2) provisional ids.
    parent_arr = np.zeros((h * w) // 2 + 2, dtype=np.int32)
    cdef cnp.int32_t[::1] parent = parent_arr
    cdef cnp.int32_t* par = &parent[0]
    cdef bint eight = connectivity == 8
    cdef int nprov = 0, nfinal = 0
    cdef int r, c, k, nn, m, root
    cdef int neigh[4]

    with nogil:
        for r in range(h):
            for c in range(w):
                if mask[r, c] == 0:
                    continue
                nn = 0
                if c > 0 and mask[r, c - 1]:
                    neigh[nn] = out[r, c - 1]
                    nn += 1
                if r > 0:
                    if mask[r - 1, c]:
                        neigh[nn] = out[r - 1, c]
                        nn += 1
                    if eight:
                        if c > 0 and mask[r - 1, c - 1]:
                            neigh[nn] = out[r - 1, c - 1]
                            nn += 1
                        if c + 1 < w and mask[r - 1, c + 1]:
                            neigh[nn] = out[r - 1, c + 1]
                            nn += 1
                if nn == 0:
                    nprov += 1
                    par[nprov] = nprov
                    out[r, c] = nprov
                else:
                    m = neigh[0]
                    for k in range(1, nn):
                        if neigh[k] < m:
                            m = neigh[k]
                    out[r, c] = m
                    for k in range(nn):
                        _union(par, m, neigh[k])

    remap_arr = np.zeros(nprov + 1, dtype=np.int32)
    cdef cnp.int32_t[::1] remap = remap_arr
    with nogil:
        for r in range(h):
            for c in range(w):
                if out[r, c] != 0:
                    root = _find(par, out[r, c])
                    if remap[root] == 0:
                        nfinal += 1
                        remap[root] = nfinal
                    out[r, c] = remap[root]
    return out_arr, nfinal


def fill_holes(cnp.uint8_t[:, ::1] mask):
    """Foreground plus every background region not 4-connected to the border.

    Returns a uint8 grid; flood fill runs over background from the border.
    """
    cdef int h = mask.shape[0]
    cdef int w = mask.shape[1]
    out_arr = np.ones((h, w), dtype=np.uint8)
    cdef cnp.uint8_t[:, ::1] out = out_arr
    stack_arr = np.empty(h * w, dtype=np.intp)
    cdef cnp.intp_t[::1] stack = stack_arr
    cdef Py_ssize_t top = 0
    cdef int r, c, idx

    with nogil:
        for c in range(w):
            if mask[0, c] == 0 and out[0, c]:
                out[0, c] = 0
                stack[top] = c
                top += 1
            if mask[h - 1, c] == 0 and out[h - 1, c]:
                out[h - 1, c] = 0
                stack[top] = (h - 1) * w + c
                top += 1
        for r in range(h):
            if mask[r, 0] == 0 and out[r, 0]:
                out[r, 0] = 0
                stack[top] = r * w
                top += 1
            if mask[r, w - 1] == 0 and out[r, w - 1]:
                out[r, w - 1] = 0
                stack[top] = r * w + w - 1
                top += 1
        while top > 0:
            top -= 1
            idx = <int> stack[top]
            r = idx // w
            c = idx - r * w
            if r > 0 and mask[r - 1, c] == 0 and out[r - 1, c]:
                out[r - 1, c] = 0
                stack[top] = idx - w
                top += 1
            if r + 1 < h and mask[r + 1, c] == 0 and out[r + 1, c]:
                out[r + 1, c] = 0
                stack[top] = idx + w
                top += 1
            if c > 0 and mask[r, c - 1] == 0 and out[r, c - 1]:
                out[r, c - 1] = 0
                stack[top] = idx - 1
                top += 1
            if c + 1 < w and mask[r, c + 1] == 0 and out[r, c + 1]:
                out[r, c + 1] = 0
                stack[top] = idx + 1
                top += 1
    return out_arr
