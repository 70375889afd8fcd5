"""Distance covariance, bias-corrected distance correlation and partial
distance correlation for scalar samples, with a permutation test.

All statistics work on dense ``n x n`` distance matrices, so memory and time
are quadratic in the sample size.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ContractError, InvalidInputError, SampleTooSmallError
from .records import TestResult

RAW = "raw-distance"
D_CENTERED = "d-centered"
U_CENTERED = "u-centered"

#: Below this, ``sqrt(1 - R*^2)`` is treated as zero and the partial statistic is 0.
DEGENERATE_TOL = 1e-12

DEFAULT_PERMUTATIONS = 1000


@dataclass(frozen=True)
class SymmetricMatrix:
    """A dense symmetric matrix tagged with how it was produced."""

    values: np.ndarray
    kind: str

    @property
    def dim(self) -> int:
        return self.values.shape[0]


def as_sample(x, name: str = "x") -> np.ndarray:
    """Validate ``x`` as a finite 1-D float64 sample."""
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim != 1:
        raise InvalidInputError(f"{name} must be one-dimensional, got shape {arr.shape}")
    if arr.size < 1:
        raise InvalidInputError(f"{name} is empty")
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError(f"{name} contains NaN or infinite values")
    return arr


def as_conditioning_set(z, n: int) -> list[np.ndarray]:
    """Normalise a conditioning argument to a list of samples of length ``n``.

    Accepts ``None``, a single 1-D sample, a 2-D ``(n, k)`` array, or a
    sequence of samples.
    """
    if z is None:
        return []
    if isinstance(z, np.ndarray):
        if z.ndim == 1:
            zs = [z]
        elif z.ndim == 2:
            zs = [z[:, j] for j in range(z.shape[1])]
        else:
            raise InvalidInputError(f"conditioning array must be 1-D or 2-D, got {z.ndim}-D")
    else:
        zs = list(z)
        if zs and np.isscalar(zs[0]):
            zs = [np.asarray(zs)]
    out = [as_sample(v, f"z[{i}]") for i, v in enumerate(zs)]
    for i, v in enumerate(out):
        if v.size != n:
            raise InvalidInputError(f"z[{i}] has length {v.size}, expected {n}")
    return out


def _check_same_length(x: np.ndarray, y: np.ndarray) -> None:
    if x.size != y.size:
        raise InvalidInputError(f"samples have different lengths ({x.size} != {y.size})")


def _require_n(n: int, minimum: int, what: str) -> None:
    if n < minimum:
        raise SampleTooSmallError(f"{what} needs at least {minimum} observations, got {n}")


def pairwise_distances(x) -> SymmetricMatrix:
    """Matrix of absolute differences ``|x_j - x_k|``."""
    x = as_sample(x)
    return SymmetricMatrix(np.abs(x[:, None] - x[None, :]), RAW)


def double_center(a: SymmetricMatrix) -> SymmetricMatrix:
    """Subtract row and column means and add back the grand mean."""
    if a.kind != RAW:
        raise ContractError(f"double_center expects a {RAW} matrix, got {a.kind}")
    v = a.values
    row = v.mean(axis=1, keepdims=True)
    col = v.mean(axis=0, keepdims=True)
    return SymmetricMatrix(v - row - col + v.mean(), D_CENTERED)


def u_center(a: SymmetricMatrix) -> SymmetricMatrix:
    """U-centering: the bias-corrected analogue of double centering.

    Off-diagonal entries are ``a_jk - a_j./(n-2) - a_.k/(n-2) + a_../((n-1)(n-2))``
    where the dotted terms are row, column and grand *sums*; the diagonal is 0.
    """
    if a.kind != RAW:
        raise ContractError(f"u_center expects a {RAW} matrix, got {a.kind}")
    v = a.values
    n = v.shape[0]
    _require_n(n, 4, "U-centering")
    row = v.sum(axis=1, keepdims=True)
    col = v.sum(axis=0, keepdims=True)
    out = v - row / (n - 2) - col / (n - 2) + v.sum() / ((n - 1) * (n - 2))
    np.fill_diagonal(out, 0.0)
    return SymmetricMatrix(out, U_CENTERED)


def _clamp_nonnegative(v: float) -> float:
    return 0.0 if -1e-12 <= v < 0.0 else v


def dcov2(x, y) -> float:
    """Squared sample distance covariance (V-statistic, double centering)."""
    x = as_sample(x, "x")
    y = as_sample(y, "y")
    _check_same_length(x, y)
    a = double_center(pairwise_distances(x)).values
    b = a if y is x else double_center(pairwise_distances(y)).values
    n = x.size
    return _clamp_nonnegative(float(np.sum(a * b)) / (n * n))


def dvar2(x) -> float:
    x = as_sample(x)
    return dcov2(x, x)


def dcor2(x, y) -> float:
    """Squared distance correlation in ``[0, 1]``.

    Returns 0 when either sample has zero distance variance (constant input).
    """
    x = as_sample(x, "x")
    y = as_sample(y, "y")
    _check_same_length(x, y)
    vx, vy = dvar2(x), dvar2(y)
    if vx <= 0.0 or vy <= 0.0:
        return 0.0
    return dcov2(x, y) / math.sqrt(vx * vy)


def _u_centered_values(x: np.ndarray) -> np.ndarray:
    return u_center(pairwise_distances(x)).values


def _rstar_matrix(ucs: Sequence[np.ndarray]) -> tuple[np.ndarray, np.ndarray]:
    """Pairwise R* values of U-centered matrices and their Frobenius norms."""
    flat = np.stack([u.ravel() for u in ucs])
    gram = flat @ flat.T
    norms = np.sqrt(np.clip(np.diag(gram), 0.0, None))
    scale = np.outer(norms, norms)
    r = np.zeros_like(gram)
    np.divide(gram, scale, out=r, where=scale > 0.0)
    np.fill_diagonal(r, 1.0)
    return r, norms


def r_star(x, y) -> float:
    """Bias-corrected distance correlation ``R*``.

    The normalised inner product of the U-centered distance matrices; it lies
    in ``[-1, 1]`` and may be negative in finite samples.  0 if either
    matrix is identically zero.
    """
    x = as_sample(x, "x")
    y = as_sample(y, "y")
    _check_same_length(x, y)
    _require_n(x.size, 4, "r_star")
    r, _ = _rstar_matrix([_u_centered_values(x), _u_centered_values(y)])
    return float(r[0, 1])


def partial_out(r: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Partial variables ``2..m-1`` out of the (0, 1) entry of ``r``.

    ``r`` has shape ``(..., m, m)``.  Conditioning variables are removed one
    at a time in index order with the single-variable identity
    ``(r01 - r0s r1s) / sqrt((1 - r0s^2)(1 - r1s^2))``.  Any entry where
    ``|r0s|`` or ``|r1s|`` lies within ``DEGENERATE_TOL`` of 1 is set to 0.

    Returns the partialled (0, 1) values and a boolean mask of the batch
    entries where a degenerate denominator was hit along the way.
    """
    r = np.array(r, dtype=np.float64, copy=True)
    m = r.shape[-1]
    degenerate = np.zeros(r.shape[:-2], dtype=bool)
    for s in range(2, m):
        rs = r[..., :, s]
        fac = np.sqrt(np.clip(1.0 - rs * rs, 0.0, None))
        ok = (1.0 - np.abs(rs) > DEGENERATE_TOL) & (fac > DEGENERATE_TOL)
        num = r - rs[..., :, None] * rs[..., None, :]
        den = fac[..., :, None] * fac[..., None, :]
        valid = ok[..., :, None] & ok[..., None, :]
        new = np.zeros_like(r)
        np.divide(num, den, out=new, where=valid)
        degenerate |= ~(ok[..., 0] & ok[..., 1])
        r = new
    return r[..., 0, 1], degenerate


def _pdcor_with_flag(ucs: Sequence[np.ndarray]) -> tuple[float, bool]:
    r, _ = _rstar_matrix(ucs)
    value, degenerate = partial_out(r)
    return float(value), bool(degenerate)


def _prepare(x, y, z) -> tuple[np.ndarray, np.ndarray, list[np.ndarray]]:
    x = as_sample(x, "x")
    y = as_sample(y, "y")
    _check_same_length(x, y)
    zs = as_conditioning_set(z, x.size)
    _require_n(x.size, 4, "partial distance correlation")
    return x, y, zs


def pdcor(x, y, z=None) -> float:
    """Partial distance correlation of ``x`` and ``y`` given ``z``.

    With an empty conditioning set this is ``r_star(x, y)``.  Several
    conditioning variables are partialled out recursively, in the order
    given.
    """
    x, y, zs = _prepare(x, y, z)
    return _pdcor_with_flag([_u_centered_values(v) for v in (x, y, *zs)])[0]


def _resolve_seed(seed) -> int:
    if seed is None:
        return int(np.random.SeedSequence().entropy)
    return int(seed)


def permutation_generator(seed: int) -> np.random.Generator:
    """Counter-based (Philox) generator used by all permutation tests."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))


def permutation_p_value(n_extreme: int, n_perm: int) -> float:
    """Add-one permutation p-value ``(1 + n_extreme) / (1 + n_perm)``."""
    return (1 + n_extreme) / (1 + n_perm)


def pdcor_permutation_test(
    x, y, z=None, n_perm: int = DEFAULT_PERMUTATIONS, seed: int | None = None,
    batch_size: int = 256,
) -> TestResult:
    """Permutation test of ``pdcor(x, y | z) = 0``.

    Observation indices of ``x`` are shuffled while ``y`` and ``z`` stay
    fixed; a permuted statistic equal to the observed one counts as extreme.
    Permutations are drawn sequentially from one Philox stream seeded by
    ``seed``, so the p-value is reproducible for a given seed.
    """
    if n_perm < 1:
        raise InvalidInputError(f"n_perm must be >= 1, got {n_perm}")
    x, y, zs = _prepare(x, y, z)
    seed = _resolve_seed(seed)
    n = x.size
    ucs = [_u_centered_values(v) for v in (x, y, *zs)]
    r_obs, norms = _rstar_matrix(ucs)
    value, deg = partial_out(r_obs)
    statistic = float(value)
    n_degenerate = int(deg)

    ax = ucs[0]
    others = np.stack([u.ravel() for u in ucs[1:]])
    scale = norms[0] * norms[1:]
    zero_scale = scale <= 0.0
    safe_scale = np.where(zero_scale, 1.0, scale)
    rng = permutation_generator(seed)
    base = np.arange(n)
    n_extreme = 0
    done = 0
    while done < n_perm:
        b = min(batch_size, n_perm - done)
        perms = rng.permuted(np.tile(base, (b, 1)), axis=1)
        rows = np.empty((b, others.shape[0]))
        for i, p in enumerate(perms):
            rows[i] = others @ ax[p][:, p].ravel()
        rows = np.where(zero_scale, 0.0, rows / safe_scale)
        batch = np.broadcast_to(r_obs, (b, *r_obs.shape)).copy()
        batch[:, 0, 1:] = rows
        batch[:, 1:, 0] = rows
        vals, degs = partial_out(batch)
        n_extreme += int(np.count_nonzero(vals >= statistic))
        n_degenerate += int(np.count_nonzero(degs))
        done += b

    return TestResult(
        statistic=statistic,
        p_value=permutation_p_value(n_extreme, n_perm),
        method="pdcor",
        n_permutations=n_perm,
        seed=seed,
        n_degenerate=n_degenerate,
    )
