"""Plug-in entropy, mutual information and conditional mutual information on
binned data.  Everything is in nats."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .dependence import (
    DEFAULT_PERMUTATIONS,
    _resolve_seed,
    as_conditioning_set,
    as_sample,
    permutation_generator,
    permutation_p_value,
)
from .errors import InvalidInputError
from .records import TestResult

EQUAL_FREQUENCY = "equal-frequency"
EQUAL_WIDTH = "equal-width"
SCHEMES = (EQUAL_FREQUENCY, EQUAL_WIDTH)


@dataclass(frozen=True)
class DiscretizedSample:
    labels: np.ndarray
    n_bins: int
    scheme: str

    def __len__(self) -> int:
        return self.labels.size


def default_bins(n: int) -> int:
    return max(1, math.ceil(math.sqrt(n)))


def discretize(x, b: int | None = None, scheme: str = EQUAL_FREQUENCY) -> DiscretizedSample:
    """Bin a sample into ``b`` bins (default ``ceil(sqrt(n))``).

    Equal-frequency bins assign the observation of rank ``r`` (0-based,
    ties broken by position) to bin ``floor(r * b / n)``.  Equal-width bins
    split ``[min, max]`` uniformly; the maximum goes to the top bin.
    """
    x = as_sample(x)
    n = x.size
    if b is None:
        b = default_bins(n)
    if b < 1:
        raise InvalidInputError(f"number of bins must be >= 1, got {b}")
    if scheme == EQUAL_FREQUENCY:
        ranks = np.empty(n, dtype=np.int64)
        ranks[np.argsort(x, kind="stable")] = np.arange(n)
        labels = (ranks * b) // n
    elif scheme == EQUAL_WIDTH:
        lo, hi = float(x.min()), float(x.max())
        if hi == lo:
            labels = np.zeros(n, dtype=np.int64)
        else:
            labels = np.floor((x - lo) / (hi - lo) * b).astype(np.int64)
            np.clip(labels, 0, b - 1, out=labels)
    else:
        raise InvalidInputError(f"unknown binning scheme {scheme!r}; expected one of {SCHEMES}")
    return DiscretizedSample(labels.astype(np.int64), int(b), scheme)


def _entropy_from_counts(counts: np.ndarray, n: int) -> float:
    counts = counts[counts > 0]
    if counts.size <= 1:
        return 0.0
    p = counts / n
    return float(-np.sum(p * np.log(p)))


def _labels(d) -> np.ndarray:
    return d.labels if isinstance(d, DiscretizedSample) else np.asarray(d, dtype=np.int64)


def _joint_codes(columns: Sequence[np.ndarray]) -> np.ndarray:
    """Dense integer code for each row's label tuple."""
    n = columns[0].size
    if any(c.size != n for c in columns):
        raise InvalidInputError("discretized samples have different lengths")
    if len(columns) == 1:
        return np.unique(columns[0], return_inverse=True)[1].ravel()
    _, codes = np.unique(np.column_stack(columns), axis=0, return_inverse=True)
    return codes.ravel()


def entropy(d) -> float:
    """Plug-in Shannon entropy of the label distribution."""
    labels = _labels(d)
    return _entropy_from_counts(np.bincount(_joint_codes([labels])), labels.size)


def joint_entropy(ds: Sequence) -> float:
    """Entropy of the empirical joint distribution of several label vectors."""
    if not ds:
        return 0.0
    cols = [_labels(d) for d in ds]
    codes = _joint_codes(cols)
    return _entropy_from_counts(np.bincount(codes), codes.size)


def cmi(x, y, z: Sequence = ()) -> float:
    """Conditional mutual information ``H(X,Z) + H(Y,Z) - H(X,Y,Z) - H(Z)``.

    With no conditioning variables this is ``H(X) + H(Y) - H(X,Y)``.  Tiny
    negative rounding residue is clamped to 0.
    """
    zs = list(z)
    if zs:
        value = (joint_entropy([x, *zs]) + joint_entropy([y, *zs])
                 - joint_entropy([x, y, *zs]) - joint_entropy(zs))
    else:
        value = entropy(x) + entropy(y) - joint_entropy([x, y])
    return 0.0 if value < 0.0 and value >= -1e-12 else value


def _permuted_entropies(xc, zc, yzc, nx, nz, nyz, n) -> tuple[np.ndarray, np.ndarray]:
    """H(X,Z) and H(X,Y,Z) for each row of permuted x codes ``xc``."""
    b = xc.shape[0]
    h_xz = _batched_entropy(xc * nz + zc, b, nx * nz, n)
    h_xyz = _batched_entropy(xc * nyz + yzc, b, nx * nyz, n)
    return h_xz, h_xyz


def _batched_entropy(codes: np.ndarray, b: int, width: int, n: int) -> np.ndarray:
    offsets = (np.arange(b) * width)[:, None]
    counts = np.bincount((codes + offsets).ravel(), minlength=b * width).reshape(b, width)
    p = counts / n
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(counts > 0, p * np.log(np.where(counts > 0, p, 1.0)), 0.0)
    return -terms.sum(axis=1)


def cmi_permutation_test(
    x, y, z=None, b: int | None = None, scheme: str = EQUAL_FREQUENCY,
    n_perm: int = DEFAULT_PERMUTATIONS, seed: int | None = None,
    batch_size: int = 256,
) -> TestResult:
    """Permutation test of zero conditional mutual information.

    Each variable is discretized separately; the labels of ``x`` are then
    shuffled with ``y`` and ``z`` held fixed, and the add-one rule gives the
    p-value.
    """
    if n_perm < 1:
        raise InvalidInputError(f"n_perm must be >= 1, got {n_perm}")
    x = as_sample(x, "x")
    y = as_sample(y, "y")
    if x.size != y.size:
        raise InvalidInputError(f"samples have different lengths ({x.size} != {y.size})")
    zs = as_conditioning_set(z, x.size)
    seed = _resolve_seed(seed)
    n = x.size
    dx = discretize(x, b, scheme)
    dy = discretize(y, b, scheme)
    dzs = [discretize(v, b, scheme) for v in zs]
    statistic = cmi(dx, dy, dzs)

    xc = _joint_codes([dx.labels])
    yc = _joint_codes([dy.labels])
    zc = _joint_codes([d.labels for d in dzs]) if dzs else np.zeros(n, dtype=np.int64)
    yzc = _joint_codes([yc, zc])
    nx, nz, nyz = int(xc.max()) + 1, int(zc.max()) + 1, int(yzc.max()) + 1
    # H(Y,Z) and H(Z) do not change under permutations of x
    h_yz = _entropy_from_counts(np.bincount(yzc), n)
    h_z = _entropy_from_counts(np.bincount(zc), n)

    rng = permutation_generator(seed)
    n_extreme = 0
    done = 0
    while done < n_perm:
        bs = min(batch_size, n_perm - done)
        perms = rng.permuted(np.tile(xc, (bs, 1)), axis=1)
        h_xz, h_xyz = _permuted_entropies(perms, zc, yzc, nx, nz, nyz, n)
        vals = h_xz + h_yz - h_xyz - h_z
        # equal up to rounding counts as extreme
        n_extreme += int(np.count_nonzero(vals >= statistic - 1e-12))
        done += bs

    return TestResult(
        statistic=statistic,
        p_value=permutation_p_value(n_extreme, n_perm),
        method="cmi",
        n_permutations=n_perm,
        seed=seed,
    )
