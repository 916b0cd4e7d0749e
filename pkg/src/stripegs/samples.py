"""Seeded random configurations used by the verification suites."""

from __future__ import annotations

import numpy as np

from .config import PLUS, STRIPED, VERTICAL, HORIZONTAL, Boundary, SpinConfig


def rng_for(seed) -> np.random.Generator:
    return np.random.default_rng(seed)


def random_polyomino(rng: np.random.Generator, n: int) -> list:
    """Connected set of ``n`` sites grown from the origin by random neighbour additions."""
    cells = {(0, 0)}
    frontier = [(0, 0)]
    while len(cells) < n:
        x, y = frontier[rng.integers(len(frontier))]
        dx, dy = [(1, 0), (-1, 0), (0, 1), (0, -1)][rng.integers(4)]
        c = (x + dx, y + dy)
        if c not in cells:
            cells.add(c)
            frontier.append(c)
    return sorted(cells)


def random_plus_box(rng: np.random.Generator, shape=(10, 10), density: float | None = None) -> SpinConfig:
    """Independent spins in a box with plus boundary; the minus density is itself random."""
    q = rng.uniform(0.1, 0.7) if density is None else density
    s = np.where(rng.random(shape) < q, -1, 1).astype(np.int8)
    return SpinConfig(s, (0, 0), Boundary(PLUS))


def striped_block(shape, h: int, orientation: str = VERTICAL, phase: int = 0, origin=(0, 0)) -> np.ndarray:
    b = Boundary(STRIPED, h, orientation, phase % (2 * h))
    return SpinConfig.background_config(shape, b, origin).spins.copy()


def perturb_striped(rng: np.random.Generator, h: int, size: int, kind: str | None = None) -> SpinConfig:
    """A compact perturbation of the width-``h`` striped state on a ``size`` box.

    Kinds: ``flip`` (a few isolated flips), ``block`` (random spins in a sub-box),
    ``uniform`` (a sub-box set to one sign), ``shift`` (a wall displaced over a stretch),
    ``width`` (one stripe widened by a column on each side over a stretch).
    """
    kinds = ("flip", "block", "uniform", "shift", "width")
    kind = kind or kinds[rng.integers(len(kinds))]
    orient = VERTICAL
    bnd = Boundary(STRIPED, h, orient, 0)
    s = SpinConfig.background_config((size, size), bnd).spins.copy()
    if kind == "flip":
        for _ in range(int(rng.integers(1, 5))):
            i, j = rng.integers(size, size=2)
            s[i, j] = -s[i, j]
    elif kind in ("block", "uniform"):
        w, v = rng.integers(1, size // 2 + 1, size=2)
        i, j = rng.integers(0, size - max(w, v) + 1, size=2)
        if kind == "block":
            s[i:i + w, j:j + v] = np.where(rng.random((w, v)) < 0.5, -1, 1)
        else:
            s[i:i + w, j:j + v] = 1 if rng.random() < 0.5 else -1
    elif kind in ("shift", "width"):
        walls = [x for x in range(1, size) if s[x, 0] != s[x - 1, 0]]
        x = walls[rng.integers(len(walls))] if walls else size // 2
        j0 = int(rng.integers(0, size - 1))
        j1 = int(rng.integers(j0 + 1, size + 1))
        if kind == "shift":
            d = int(rng.choice([-2, -1, 1, 2]))
            lo, hi = sorted((x, min(max(x + d, 0), size)))
            s[lo:hi, j0:j1] = -s[lo:hi, j0:j1]
        else:
            # widen the stripe starting at wall x by one column on each side
            v = s[x, j0:j1].copy()
            nxt = next((y for y in range(x + 1, size) if s[y, 0] != s[y - 1, 0]), size)
            s[x - 1, j0:j1] = v
            if nxt < size:
                s[nxt, j0:j1] = v
    return SpinConfig(s, (0, 0), bnd)


def stripes_in_window(rng: np.random.Generator, ell: int, h: int, n_tiles: int = 3,
                      flips: int | None = None) -> SpinConfig:
    """A ``n_tiles ell`` box with plus boundary holding a striped patch and defects."""
    n = n_tiles * ell
    s = np.ones((n, n), dtype=np.int8)
    orient = VERTICAL if rng.random() < 0.5 else HORIZONTAL
    lo = rng.integers(0, ell // 2 + 1, size=2)
    hi = n - rng.integers(0, ell // 2 + 1, size=2)
    patch = striped_block((n, n), max(1, h + int(rng.integers(-1, 2))), orient, int(rng.integers(0, 2 * h)))
    s[lo[0]:hi[0], lo[1]:hi[1]] = patch[lo[0]:hi[0], lo[1]:hi[1]]
    k = int(rng.integers(0, 3 * n)) if flips is None else flips
    for _ in range(k):
        i, j = rng.integers(n, size=2)
        s[i, j] = -s[i, j]
    if rng.random() < 0.5:
        a, b = rng.integers(ell // 4, ell, size=2)
        i, j = rng.integers(0, n - max(a, b), size=2)
        s[i:i + a, j:j + b] = 1 if rng.random() < 0.5 else -1
    return SpinConfig(s, (0, 0), Boundary(PLUS))


def random_tile_union(rng: np.random.Generator, nx: int, ny: int, fill: float = 0.6) -> np.ndarray:
    """A 4-connected random set of tiles in an ``nx x ny`` tile grid (the largest cluster)."""
    from scipy import ndimage

    from .config import FOUR

    while True:
        t = rng.random((nx, ny)) < fill
        lab, k = ndimage.label(t, structure=FOUR)
        if k:
            sizes = ndimage.sum(t, lab, range(1, k + 1))
            return lab == (int(np.argmax(sizes)) + 1)


def random_stripe_columns(rng: np.random.Generator, n: int, w_max: int, h_max: int | None = None) -> np.ndarray:
    """Boolean column pattern of alternating plus gaps and minus stripes."""
    h_max = h_max or w_max
    col = np.zeros(n, dtype=bool)
    x = int(rng.integers(0, w_max + 1))
    while x < n:
        h = int(rng.integers(1, h_max + 1))
        col[x:x + h] = True
        x += h + int(rng.integers(1, w_max + 1))
    return col
