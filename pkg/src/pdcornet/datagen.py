"""Data-generating processes for the 3- and 4-node simulation networks.

Three-node networks::

    A ~ N(mu_A, sigma_A)
    B = beta_ab A + eps,              eps ~ N(mu_B, sigma_B)
    C = beta_non f(A, B) + beta_lin A + beta_con B + nu,   nu ~ N(mu_C, sigma_C)

with ``f`` one of ``A^2`` (quadratic), ``A B`` (interaction) or ``log|A|``
(logarithmic).  Four-node networks add

    D = beta_non2 g(A, B) + beta_ad A + gamma,   gamma ~ N(mu_D, sigma_D)

and the term ``beta_con2 D`` in ``C``.  ``sigma`` is a standard deviation and
``log`` is the natural logarithm.
"""

from __future__ import annotations

import itertools
from dataclasses import asdict, dataclass, fields, replace
from typing import Iterator

import numpy as np

from .errors import InvalidInputError

FORMS = ("quadratic", "interaction", "logarithmic")
NODES_3 = ("A", "B", "C")
NODES_4 = ("A", "B", "C", "D")


@dataclass(frozen=True)
class DGPSpec:
    """One simulation condition plus the seed of its draw."""

    network_size: int = 3
    ac_form: str = "quadratic"
    ad_form: str = "quadratic"
    n: int = 200
    beta_non: float = 1.0
    beta_lin: float = 0.0
    beta_con: float = 0.0
    beta_ab: float = 0.0
    beta_ad: float = 0.0
    beta_non2: float = 1.0
    beta_con2: float = 1.0
    mu_a: float = 0.0
    mu_b: float = 0.0
    mu_c: float = 0.0
    mu_d: float = 0.0
    sigma_a: float = 1.0
    sigma_b: float = 1.0
    sigma_c: float = 1.0
    sigma_d: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.network_size not in (3, 4):
            raise InvalidInputError(f"network_size must be 3 or 4, got {self.network_size}")
        for name in ("ac_form", "ad_form"):
            if getattr(self, name) not in FORMS:
                raise InvalidInputError(f"{name} must be one of {FORMS}, got {getattr(self, name)!r}")
        if int(self.n) != self.n or self.n < 1:
            raise InvalidInputError(f"n must be a positive integer, got {self.n}")
        for name in ("sigma_a", "sigma_b", "sigma_c", "sigma_d"):
            if not getattr(self, name) > 0:
                raise InvalidInputError(f"{name} must be positive, got {getattr(self, name)}")

    @property
    def nodes(self) -> tuple[str, ...]:
        return NODES_4 if self.network_size == 4 else NODES_3

    def condition(self) -> dict:
        """Parameters that identify the cell (everything except the seed).

        Parameters a 3-node network ignores are normalised so equal cells
        compare equal.
        """
        d = asdict(self)
        d.pop("seed")
        if self.network_size == 3:
            for k in ("ad_form", "beta_ad", "beta_non2", "beta_con2", "mu_d", "sigma_d"):
                d[k] = _DEFAULTS[k]
        return d

    def with_seed(self, seed: int) -> "DGPSpec":
        return replace(self, seed=int(seed))


_DEFAULTS = {f.name: f.default for f in fields(DGPSpec)}
CONDITION_FIELDS = tuple(f.name for f in fields(DGPSpec) if f.name != "seed")


def _streams(seed: int) -> list[np.random.Generator]:
    # one substream per noise source (A, eps, gamma, nu) so that A and B agree
    # across network sizes
    children = np.random.SeedSequence(seed).spawn(4)
    return [np.random.Generator(np.random.Philox(c)) for c in children]


def _normal_nonzero(rng: np.random.Generator, mu: float, sigma: float, n: int) -> np.ndarray:
    """Normal draws with exact zeros redrawn (only needed where log|.| is taken)."""
    out = rng.normal(mu, sigma, n)
    bad = out == 0.0
    while bad.any():
        out[bad] = rng.normal(mu, sigma, int(bad.sum()))
        bad = out == 0.0
    return out


def _nonlinear(form: str, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    if form == "quadratic":
        return a * a
    if form == "interaction":
        return a * b
    return np.log(np.abs(a))


def generate(spec: DGPSpec) -> dict[str, np.ndarray]:
    """Draw one dataset; columns are keyed by node name in ``spec.nodes`` order.

    Each noise term has its own Philox substream derived from ``spec.seed``,
    so the same seed gives bit-identical data and the ``A``/``B`` columns of a
    3-node and 4-node draw coincide.
    """
    s = spec
    rng_a, rng_eps, rng_gamma, rng_nu = _streams(s.seed)
    uses_log = s.ac_form == "logarithmic" or (s.network_size == 4 and s.ad_form == "logarithmic")
    if uses_log:
        a = _normal_nonzero(rng_a, s.mu_a, s.sigma_a, s.n)
    else:
        a = rng_a.normal(s.mu_a, s.sigma_a, s.n)
    b = s.beta_ab * a + rng_eps.normal(s.mu_b, s.sigma_b, s.n)
    c = s.beta_non * _nonlinear(s.ac_form, a, b) + s.beta_lin * a + s.beta_con * b
    data = {"A": a, "B": b}
    if s.network_size == 4:
        d = (s.beta_non2 * _nonlinear(s.ad_form, a, b) + s.beta_ad * a
             + rng_gamma.normal(s.mu_d, s.sigma_d, s.n))
        c = c + s.beta_con2 * d
        data["D"] = d
    data["C"] = c + rng_nu.normal(s.mu_c, s.sigma_c, s.n)
    return {k: data[k] for k in s.nodes}


STUDY_LEVELS_3 = {
    "n": (200, 500),
    "mu": (0.0, 5.0, 10.0),
    "beta_lin": (0.0, 1.0),
    "beta_con": (0.0, 1.0),
    "beta_ab": (0.0, 1.0),
    "beta_non": (-1.0, 1.0),
    "sigma": (1.0,),
}

STUDY_LEVELS_4 = {
    "n": (200, 500),
    "mu": (0.0,),
    "beta_lin": (0.0, 1.0),
    "beta_con": (0.0, 1.0),
    "beta_ab": (0.0, 1.0),
    "beta_ad": (0.0, 1.0),
    "beta_non": (1.0,),
    "beta_non2": (1.0,),
    "beta_con2": (1.0,),
    "sigma": (1.0,),
}


@dataclass
class GridLevels:
    """Factor levels of a full factorial condition grid.

    ``mu`` is a shared mean applied to every node.  ``mu_sets`` overrides it
    with explicit per-node mean tuples ``(mu_A, mu_B, mu_C[, mu_D])``.
    """

    network_size: int = 3
    ac_forms: tuple = FORMS
    ad_forms: tuple = FORMS
    n: tuple = (200, 500)
    mu: tuple = (0.0,)
    mu_sets: tuple | None = None
    beta_non: tuple = (1.0,)
    beta_lin: tuple = (0.0, 1.0)
    beta_con: tuple = (0.0, 1.0)
    beta_ab: tuple = (0.0, 1.0)
    beta_ad: tuple = (0.0,)
    beta_non2: tuple = (1.0,)
    beta_con2: tuple = (1.0,)
    sigma: tuple = (1.0,)

    @classmethod
    def study(cls, network_size: int) -> "GridLevels":
        levels = STUDY_LEVELS_3 if network_size == 3 else STUDY_LEVELS_4
        return cls(network_size=network_size, **levels)

    def _mean_tuples(self) -> list[tuple[float, ...]]:
        k = self.network_size
        if self.mu_sets:
            out = [tuple(float(v) for v in m) for m in self.mu_sets]
            for m in out:
                if len(m) != k:
                    raise InvalidInputError(f"mu_sets entries need {k} values, got {m}")
            return out
        return [(float(m),) * k for m in self.mu]

    def cells(self) -> Iterator[DGPSpec]:
        ad_forms = self.ad_forms if self.network_size == 4 else (FORMS[0],)
        four = self.network_size == 4
        for (ac, ad, n, means, bnon, blin, bcon, bab, bad, bnon2, bcon2, sig) in itertools.product(
            self.ac_forms, ad_forms, self.n, self._mean_tuples(), self.beta_non,
            self.beta_lin, self.beta_con, self.beta_ab,
            self.beta_ad if four else (0.0,),
            self.beta_non2 if four else (1.0,),
            self.beta_con2 if four else (1.0,),
            self.sigma,
        ):
            mu_d = means[3] if four else 0.0
            yield DGPSpec(
                network_size=self.network_size, ac_form=ac, ad_form=ad, n=int(n),
                beta_non=float(bnon), beta_lin=float(blin), beta_con=float(bcon),
                beta_ab=float(bab), beta_ad=float(bad), beta_non2=float(bnon2),
                beta_con2=float(bcon2), mu_a=means[0], mu_b=means[1], mu_c=means[2],
                mu_d=mu_d, sigma_a=float(sig), sigma_b=float(sig), sigma_c=float(sig),
                sigma_d=float(sig),
            )


def condition_grid(network_size: int) -> list[DGPSpec]:
    """The full factorial grid of the 3- or 4-node simulation study."""
    if network_size not in (3, 4):
        raise InvalidInputError(f"network_size must be 3 or 4, got {network_size}")
    return list(GridLevels.study(network_size).cells())
