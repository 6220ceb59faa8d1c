"""Random weighted spaces, operators and QUE instances for property checks."""

from __future__ import annotations

import numpy as np

from .hilbert import LinearMap, ResolventSource, WeightedSpace
from .que import QueInstance


def random_space(rng: np.random.Generator, dim: int, label: str) -> WeightedSpace:
    return WeightedSpace(label, rng.uniform(0.2, 3.0, size=dim))


def from_symmetrized(dom: WeightedSpace, cod: WeightedSpace, s: np.ndarray) -> LinearMap:
    """The map whose weight-symmetrized array is ``s``."""
    return LinearMap(dom, cod, s / cod.sqrt_weights[:, None] * dom.sqrt_weights[None, :])


def random_unitary(rng: np.random.Generator, dim: int) -> np.ndarray:
    z = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))[None, :]


def random_self_adjoint(rng: np.random.Generator, space: WeightedSpace,
                        nonnegative: bool = True) -> LinearMap:
    d = space.dim
    b = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    s = b @ b.conj().T / d if nonnegative else (b + b.conj().T) / 2.0
    return from_symmetrized(space, space, s)


def map_with_singular_values(rng: np.random.Generator, dom: WeightedSpace, cod: WeightedSpace,
                             svals) -> LinearMap:
    k = min(dom.dim, cod.dim)
    sig = np.zeros((cod.dim, dom.dim))
    sig[np.arange(k), np.arange(k)] = np.asarray(svals)[:k]
    s = random_unitary(rng, cod.dim) @ sig @ random_unitary(rng, dom.dim).conj().T
    return from_symmetrized(dom, cod, s)


def partial_isometry(rng: np.random.Generator, dom: WeightedSpace, cod: WeightedSpace) -> LinearMap:
    k = min(dom.dim, cod.dim)
    return map_with_singular_values(rng, dom, cod, rng.integers(0, 2, size=k).astype(float))


def generic_contraction(rng: np.random.Generator, dom: WeightedSpace, cod: WeightedSpace,
                        margin: float = 0.05) -> LinearMap:
    """Contraction with at least one singular value in [margin, 1 - margin].

    The remaining singular values are drawn from {0, 1} or from the same
    interval, so none of them sits numerically close to 0 or 1 without
    being exactly 0 or 1.
    """
    k = min(dom.dim, cod.dim)
    s = rng.uniform(margin, 1.0 - margin, size=k)
    snap = rng.random(k) < 0.3
    s[snap] = rng.integers(0, 2, size=int(snap.sum()))
    s[rng.integers(0, k)] = rng.uniform(margin, 1.0 - margin)
    return map_with_singular_values(rng, dom, cod, s)


def random_instance(rng: np.random.Generator, max_dim: int = 12, kind: str = "contraction",
                    complex_point: bool = False, related: bool = False) -> QueInstance:
    """Random self-adjoint pair with an identification operator of the given kind.

    kind: ``contraction`` (singular values in [0, 1]), ``partial_isometry`` or
    ``expanding`` (norm in (1, 1.5]).
    """
    h1 = random_space(rng, int(rng.integers(1, max_dim + 1)), "H_n")
    h2 = random_space(rng, int(rng.integers(1, max_dim + 1)), "H_inf")
    k = min(h1.dim, h2.dim)
    if kind == "partial_isometry":
        j = partial_isometry(rng, h1, h2)
    elif kind == "contraction":
        j = map_with_singular_values(rng, h1, h2, rng.uniform(0.0, 1.0, size=k))
    elif kind == "expanding":
        s = rng.uniform(0.0, 1.0, size=k)
        s[0] = rng.uniform(1.01, 1.5)
        j = map_with_singular_values(rng, h1, h2, s)
    else:
        raise ValueError(f"unknown kind {kind!r}")
    z0 = complex(rng.uniform(-1.0, 1.0), rng.uniform(0.5, 2.0)) if complex_point else -1.0
    a1 = random_self_adjoint(rng, h1, nonnegative=not complex_point)
    a2 = random_self_adjoint(rng, h2, nonnegative=not complex_point)
    if related:
        # transported operator plus a perturbation, so the pair is related through J
        a2 = j @ a1 @ j.adjoint + 0.05 * a2
    return QueInstance(h1, h2, ResolventSource.from_operator(a1, z0),
                       ResolventSource.from_operator(a2, z0), j)
