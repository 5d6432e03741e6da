"""Grid kernels: greedy rectangle cover and 4-connected component labeling.

Both operate on ``int32`` code matrices.  When numba is importable and
``GRIDCOMPRESS_DISABLE_NUMBA`` is unset (or "0"), the public names are
``@njit``-compiled; otherwise they are the same functions run by the
interpreter.  The ``*_py`` names always refer to the uncompiled versions.
"""

from __future__ import annotations

import os

import numpy as np

_disabled = os.environ.get("GRIDCOMPRESS_DISABLE_NUMBA", "0").strip().lower() not in ("", "0", "false", "no")

try:
    if _disabled:
        raise ImportError
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised via the env flag in CI
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        if len(args) == 1 and callable(args[0]) and not kwargs:
            return args[0]
        return lambda f: f


def greedy_rect_cover_py(codes):
    """Cover every non-zero cell with rectangles of equal code.

    Row-major scan; at each uncovered cell grow right while the code matches
    and the cell is uncovered, then grow down while the whole row segment
    matches.  Returns an ``(k, 5)`` array of ``code, top, left, bottom, right``
    in seed order.
    """
    m, n = codes.shape
    covered = np.zeros((m, n), dtype=np.bool_)
    out = np.empty((m * n, 5), dtype=np.int32)
    k = 0
    for r in range(m):
        for c in range(n):
            v = codes[r, c]
            if v == 0 or covered[r, c]:
                continue
            right = c
            while right + 1 < n and codes[r, right + 1] == v and not covered[r, right + 1]:
                right += 1
            bottom = r
            while bottom + 1 < m:
                ok = True
                for cc in range(c, right + 1):
                    if codes[bottom + 1, cc] != v or covered[bottom + 1, cc]:
                        ok = False
                        break
                if not ok:
                    break
                bottom += 1
            for rr in range(r, bottom + 1):
                for cc in range(c, right + 1):
                    covered[rr, cc] = True
            out[k, 0] = v
            out[k, 1] = r
            out[k, 2] = c
            out[k, 3] = bottom
            out[k, 4] = right
            k += 1
    return out[:k].copy()


def label_components_py(keys):
    """Depth-first flood fill over 4-neighbourhoods, seeds taken row-major.

    Returns ``labels`` (same shape as ``keys``, 0-based component ids in seed
    order) and ``boxes``, an ``(L, 4)`` array of ``top, left, bottom, right``
    bounding boxes, one per component.
    """
    m, n = keys.shape
    labels = np.full((m, n), -1, dtype=np.int32)
    boxes = np.empty((m * n, 4), dtype=np.int32)
    stack = np.empty(m * n, dtype=np.int64)
    nlab = 0
    for r0 in range(m):
        for c0 in range(n):
            if labels[r0, c0] >= 0:
                continue
            v = keys[r0, c0]
            top, left, bottom, right = r0, c0, r0, c0
            labels[r0, c0] = nlab
            sp = 0
            stack[sp] = r0 * n + c0
            sp += 1
            while sp > 0:
                sp -= 1
                idx = stack[sp]
                r = idx // n
                c = idx - r * n
                if r < top:
                    top = r
                if r > bottom:
                    bottom = r
                if c < left:
                    left = c
                if c > right:
                    right = c
                for d in range(4):
                    tr, tc = r, c
                    if d == 0:
                        tr = r - 1
                    elif d == 1:
                        tr = r + 1
                    elif d == 2:
                        tc = c - 1
                    else:
                        tc = c + 1
                    if tr < 0 or tr >= m or tc < 0 or tc >= n:
                        continue
                    if labels[tr, tc] < 0 and keys[tr, tc] == v:
                        labels[tr, tc] = nlab
                        stack[sp] = tr * n + tc
                        sp += 1
            boxes[nlab, 0] = top
            boxes[nlab, 1] = left
            boxes[nlab, 2] = bottom
            boxes[nlab, 3] = right
            nlab += 1
    return labels, boxes[:nlab].copy()


greedy_rect_cover = njit(cache=True)(greedy_rect_cover_py)
label_components = njit(cache=True)(label_components_py)

BACKEND = "numba" if HAVE_NUMBA else "python"
