"""Dyadic frequency blocks, their commutators, and dyadic weight sequences.

The block symbols are built from one concrete smoothstep so every test is
reproducible bit for bit:

    g(x)   = exp(-1/x) for x > 0, else 0
    sig(x) = g(x) / (g(x) + g(1-x))          (0 below 0, 1 above 1, smooth)
    chi(r) = sig(2 - r)                      (1 for r <= 1, 0 for r >= 2)
    phi_k  = chi(r/2^k) - chi(r/2^(k-1))     (annulus 2^(k-1) < r < 2^(k+1))

Writing the annulus bump as a difference makes the partition of unity
chi + sum_k phi_k telescope exactly on any finite lattice.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .spectral import Grid, SpectralField, apply_multiplier, l2_norm


def smoothstep(x) -> np.ndarray:
    """C-infinity step: 0 for x <= 0, 1 for x >= 1."""
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    lo = x <= 0.0
    hi = x >= 1.0
    mid = ~lo & ~hi
    out[lo] = 0.0
    out[hi] = 1.0
    xm = x[mid]
    g = np.exp(-1.0 / xm)
    g1 = np.exp(-1.0 / (1.0 - xm))
    out[mid] = g / (g + g1)
    return out


def low_cutoff(r) -> np.ndarray:
    """Radial cutoff chi: identically 1 for r <= 1, supported in r < 2."""
    return smoothstep(2.0 - np.asarray(r, dtype=float))


def annulus_bump(r) -> np.ndarray:
    """Radial bump phi = chi(r) - chi(2r), supported in 1/2 < r < 2."""
    r = np.asarray(r, dtype=float)
    return low_cutoff(r) - low_cutoff(2.0 * r)


def block_symbol(grid: Grid, k: int) -> np.ndarray:
    """Symbol of the k-th dyadic block: chi for k = 0, phi(./2^k) for k >= 1."""
    if k < 0:
        raise ValueError("block index must be >= 0")
    r = grid.radius
    if k == 0:
        return low_cutoff(r)
    scale = 2.0**k
    return low_cutoff(r / scale) - low_cutoff(r / (scale / 2.0))


def num_blocks(grid: Grid) -> int:
    """Number of dyadic blocks that can be nonzero on the lattice."""
    rmax = float(np.max(grid.radius))
    k = 1
    while 2.0 ** (k - 1) < rmax:
        k += 1
    return k


def dyadic_project(field: SpectralField, k: int) -> SpectralField:
    return apply_multiplier(field, block_symbol(field.grid, k))


def _log2_dyadic(lam: float) -> int:
    i = int(round(np.log2(lam)))
    if lam <= 0 or 2.0**i != lam:
        raise ValueError(f"expected a dyadic block scale 2^i, got {lam}")
    return i


def enlarged_project(field: SpectralField, lam: float) -> SpectralField:
    """Enlarged block: sum of blocks lam/2, lam, 2*lam (blocks 0 and 1 for lam=1).

    Its symbol is identically 1 on the core block's support, so composing the
    core block with the enlarged one reproduces the core block.
    """
    i = _log2_dyadic(lam)
    grid = field.grid
    if i == 0:
        sym = block_symbol(grid, 0) + block_symbol(grid, 1)
    else:
        sym = block_symbol(grid, i - 1) + block_symbol(grid, i) + block_symbol(grid, i + 1)
    return apply_multiplier(field, sym)


def projection_commutator(lam: float, v: SpectralField, w: SpectralField):
    """[block, v d/dx] w and the ratio ||.||_L2 / (||grad v||_inf ||w||_L2)."""
    from .spectral import d_x, product_padded, sup_gradient

    i = _log2_dyadic(lam)
    wx = d_x(w)
    term1 = dyadic_project(product_padded(v, wx), i)
    term2 = product_padded(v, d_x(dyadic_project(w, i)))
    comm = term1 - term2
    grad_v = sup_gradient(v)
    wl2 = l2_norm(w)
    denom = grad_v * wl2
    ratio = 0.0 if denom < 1e-14 else l2_norm(comm) / denom
    return comm, float(ratio)


@dataclass(frozen=True)
class WeightSequence:
    """Dyadic weights w_{2^i} = sqrt(mu_i) * (2^i)^s on indices 0..i_max."""

    s: float
    breakpoints: tuple
    mu: np.ndarray
    weights: np.ndarray
    certified_bound: float

    @property
    def i_max(self) -> int:
        return len(self.weights) - 1

    def weight(self, lam: float) -> float:
        return float(self.weights[_log2_dyadic(lam)])


def construct_weights(sequences, s: float, i_max: int,
                      levels: int | None = None) -> WeightSequence:
    """Build dyadic weights from a family of summable nonnegative sequences.

    Breakpoints N_k are the smallest indices past which every tail sum drops
    below 2^-k; the level mu_i = 2^((k+1)/2) is constant between consecutive
    breakpoints, which gives 2^s w <= w(2 lam) <= 2^(s+1) w automatically and
    keeps the weighted sums sum_i mu_i a_i^n uniformly bounded.

    ``levels`` demands that many breakpoints; if the tail condition cannot be
    certified within i_max the error names the first failing k.
    """
    a = np.atleast_2d(np.asarray(sequences, dtype=float))
    if a.shape[1] != i_max + 1:
        raise ValueError(f"sequences must have length i_max + 1 = {i_max + 1}")
    if np.any(a < 0):
        raise ValueError("sequences must be nonnegative")
    # sup over the family of the tail starting at each index
    tails = np.cumsum(a[:, ::-1], axis=1)[:, ::-1]
    sup_tail = tails.max(axis=0)

    breakpoints = []
    prev = 0
    k = 1
    while True:
        target = 2.0 ** (-k)
        j = prev + 1
        while j <= i_max and not sup_tail[j] < target:
            j += 1
        if j > i_max:
            if levels is not None and len(breakpoints) < levels:
                raise ValueError(
                    f"tail condition sup_n sum_(i>=j) a_i < 2^-{k} is not "
                    f"achievable within i_max = {i_max} (first failing level k = {k})"
                )
            break
        breakpoints.append(j)
        prev = j
        k += 1
        if levels is not None and len(breakpoints) >= levels:
            break

    idx = np.arange(i_max + 1)
    n_past = np.zeros(i_max + 1, dtype=int)
    for bp in breakpoints:
        n_past += idx >= bp
    mu = 2.0 ** ((n_past + 1) / 2.0)
    lam = 2.0**idx
    weights = np.sqrt(mu) * lam**s

    total = float(sup_tail[0]) if i_max >= 0 else 0.0
    geom = sum(2.0 ** ((k + 1) / 2.0) * 2.0 ** (-k) for k in range(1, len(breakpoints) + 2))
    bound = np.sqrt(2.0) * total + geom
    return WeightSequence(s, tuple(breakpoints), mu, weights, float(bound))


def weighted_block_energy(field: SpectralField, weights: WeightSequence) -> float:
    """sum over dyadic blocks of w_lam^2 ||block(u)||_L2^2."""
    needed = num_blocks(field.grid)
    if weights.i_max + 1 < needed:
        raise ValueError(
            f"weights cover {weights.i_max + 1} blocks but the lattice "
            f"activates {needed}"
        )
    total = 0.0
    for i in range(needed):
        total += weights.weights[i] ** 2 * l2_norm(dyadic_project(field, i)) ** 2
    return float(total)
