"""Independent reference implementations used only to check the package.

Nothing here shares code with mitodet: the DFT is evaluated straight from
its definition, components come from BFS flood fill (not union-find), and
matching is exhaustive search. Keep it that way.
"""

from collections import deque
from functools import lru_cache

import numpy as np


def naive_dft2_centered(chan: np.ndarray) -> np.ndarray:
    """Direct evaluation of the centered 2-D DFT, one output bin at a time."""
    h, w = chan.shape
    ys = np.arange(h)[:, np.newaxis]
    xs = np.arange(w)[np.newaxis, :]
    out = np.zeros((h, w), dtype=complex)
    for u in range(h):
        for v in range(w):
            ku, kv = u - h // 2, v - w // 2
            out[u, v] = np.sum(chan * np.exp(-2j * np.pi * (ku * ys / h + kv * xs / w)))
    return out


def naive_idft2_centered(bins: np.ndarray) -> np.ndarray:
    """Direct inverse of naive_dft2_centered (1/(H*W) normalization)."""
    h, w = bins.shape
    ku = np.arange(h)[:, np.newaxis] - h // 2
    kv = np.arange(w)[np.newaxis, :] - w // 2
    out = np.zeros((h, w), dtype=complex)
    for y in range(h):
        for x in range(w):
            out[y, x] = np.sum(bins * np.exp(2j * np.pi * (ku * y / h + kv * x / w)))
    return out / (h * w)


def flood_partition(mask: np.ndarray, connectivity: int) -> tuple[np.ndarray, int]:
    """BFS flood-fill labeling, labels 1..K in raster order of first pixel."""
    h, w = mask.shape
    if connectivity == 4:
        steps = [(-1, 0), (1, 0), (0, -1), (0, 1)]
    else:
        steps = [(dr, dc) for dr in (-1, 0, 1) for dc in (-1, 0, 1) if (dr, dc) != (0, 0)]
    labels = np.zeros((h, w), dtype=np.int32)
    count = 0
    for r0 in range(h):
        for c0 in range(w):
            if not mask[r0, c0] or labels[r0, c0]:
                continue
            count += 1
            labels[r0, c0] = count
            queue = deque([(r0, c0)])
            while queue:
                r, c = queue.popleft()
                for dr, dc in steps:
                    rr, cc = r + dr, c + dc
                    if 0 <= rr < h and 0 <= cc < w and mask[rr, cc] and not labels[rr, cc]:
                        labels[rr, cc] = count
                        queue.append((rr, cc))
    return labels, count


def fill_holes_flood(mask: np.ndarray) -> np.ndarray:
    """Hole filling by flood from the border over 4-connected background."""
    h, w = mask.shape
    outside = np.zeros((h, w), dtype=bool)
    queue = deque()
    for r in range(h):
        for c in (0, w - 1):
            if not mask[r, c] and not outside[r, c]:
                outside[r, c] = True
                queue.append((r, c))
    for c in range(w):
        for r in (0, h - 1):
            if not mask[r, c] and not outside[r, c]:
                outside[r, c] = True
                queue.append((r, c))
    while queue:
        r, c = queue.popleft()
        for rr, cc in ((r - 1, c), (r + 1, c), (r, c - 1), (r, c + 1)):
            if 0 <= rr < h and 0 <= cc < w and not mask[rr, cc] and not outside[rr, cc]:
                outside[rr, cc] = True
                queue.append((rr, cc))
    # everything not border-reachable through background is foreground now
    return ~outside


def exhaustive_match(dist: np.ndarray, radius: float) -> tuple[int, float]:
    """Exhaustive search over one-to-one assignments within the radius.

    Returns (maximum cardinality, minimum total distance among maximum
    matchings). Memoized recursion over (pred index, used-truth bitmask)
    enumerates every injective assignment.
    """
    n, m = dist.shape

    @lru_cache(maxsize=None)
    def rec(i: int, used: int) -> tuple[int, float]:
        if i == n:
            return 0, 0.0
        best = rec(i + 1, used)
        for j in range(m):
            if not used >> j & 1 and dist[i, j] <= radius:
                card, total = rec(i + 1, used | 1 << j)
                cand = (card + 1, total + float(dist[i, j]))
                if cand[0] > best[0] or (cand[0] == best[0] and cand[1] < best[1]):
                    best = cand
        return best

    result = rec(0, 0)
    rec.cache_clear()
    return result


def permutation_match(dist: np.ndarray, radius: float) -> tuple[int, float]:
    """Literal enumeration of injective assignments (small sizes only)."""
    from itertools import permutations

    n, m = dist.shape
    if n > m:
        return permutation_match(dist.T, radius)
    best = (0, 0.0)
    for perm in permutations(range(m), n):
        card, total = 0, 0.0
        for i, j in enumerate(perm):
            if dist[i, j] <= radius:
                card += 1
                total += float(dist[i, j])
        if card > best[0] or (card == best[0] and total < best[1]):
            best = (card, total)
    return best
