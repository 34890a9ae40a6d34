"""Hypervectors, monic normalization, index calculus, and monic decomposition.

A *hypervector* of factor dimensions ``(n_1, …, n_r)`` is a vector in
``R^{n_1···n_r}`` expressible as the Kronecker (semi-tensor) product of ``r``
component vectors.  The decomposition is not unique — scalars can be shuffled
between factors — so components are normalized *monic*: first nonzero entry
equal to 1, with a single leading coefficient ``c0`` carried separately.

The monic decomposition algorithm extracts candidate components with the Ξ
index-selection matrices anchored at the leading nonzero position and
certifies the result by reconstruction; vectors failing the certificate are
reported as not decomposable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from collections.abc import Sequence

import numpy as np

from .stp_core import basis_vector

__all__ = [
    "MonicDecomposition",
    "compose",
    "diagonal_index",
    "extract_component",
    "index_join",
    "index_split",
    "is_diagonal",
    "monic_decompose",
    "monicize",
    "mu",
    "xi_matrix",
]

#: Relative floor below which entries count as zero when locating μ(x).
MU_RELATIVE_FLOOR = 1e-10

#: Default relative reconstruction tolerance certifying a decomposition.
DEFAULT_RECON_TOL = 1e-8


def _as_vector(x: np.ndarray | Sequence) -> np.ndarray:
    arr = np.asarray(x, dtype=float).ravel()
    if arr.size == 0:
        raise ValueError("vector must be non-empty")
    return arr


def _check_dims(dims: Sequence[int]) -> tuple[int, ...]:
    out = tuple(int(n) for n in dims)
    if not out or any(n < 1 for n in out):
        raise ValueError(f"factor dimensions must be positive, got {list(dims)}")
    return out


def mu(x: np.ndarray | Sequence, zero_tol: float | None = None) -> int:
    """Position (1-based) of the first non-negligible entry of ``x``.

    Entries with magnitude at most ``zero_tol`` are treated as zero; the
    default tolerance is ``1e-10`` times the largest magnitude.  A zero
    vector has no leading index and raises ``ValueError``.
    """
    arr = _as_vector(x)
    peak = float(np.max(np.abs(arr)))
    if peak == 0.0:
        raise ValueError("zero vector has no leading index")
    floor = MU_RELATIVE_FLOOR * peak if zero_tol is None else float(zero_tol)
    idx = np.flatnonzero(np.abs(arr) > floor)
    if idx.size == 0:
        raise ValueError("vector is zero to within the given tolerance")
    return int(idx[0]) + 1


def monicize(x: np.ndarray | Sequence) -> tuple[float, np.ndarray]:
    """Split ``x`` as ``c0 · x0`` with ``x0`` monic (leading entry 1).

    Returns ``(c0, x0)`` where ``c0`` is the entry at position ``mu(x)``.
    """
    arr = _as_vector(x)
    lead = mu(arr)
    c0 = float(arr[lead - 1])
    return c0, arr / c0


def index_split(e: int, dims: Sequence[int]) -> tuple[int, ...]:
    """Expand a flat lexicographic index into per-factor indices (all 1-based).

    Inverse of :func:`index_join` generalized to mixed factor dimensions: the
    last factor runs fastest.
    """
    dims = _check_dims(dims)
    total = math.prod(dims)
    e = int(e)
    if not 1 <= e <= total:
        raise ValueError(f"index {e} out of range [1, {total}]")
    rem = e - 1
    out = []
    for n in reversed(dims):
        out.append(rem % n + 1)
        rem //= n
    return tuple(reversed(out))


def index_join(component_indices: Sequence[int], n: int, r: int) -> int:
    """Flat lexicographic index of per-factor indices over ``r`` equal factors of dimension ``n``.

    ``e = 1 + Σ_i (e_i − 1)·n^(r−i)`` — the inverse of
    ``index_split(e, (n,)*r)``.
    """
    n, r = int(n), int(r)
    if n < 1 or r < 1:
        raise ValueError(f"need positive base and degree, got n={n}, r={r}")
    es = [int(i) for i in component_indices]
    if len(es) != r:
        raise ValueError(f"expected {r} component indices, got {len(es)}")
    e = 0
    for i in es:
        if not 1 <= i <= n:
            raise ValueError(f"component index {i} out of range [1, {n}]")
        e = e * n + (i - 1)
    return e + 1


def diagonal_index(e0: int, n: int, r: int) -> int:
    """Flat index of the diagonal multi-index ``(e0, e0, …, e0)`` over ``r`` factors of dimension ``n``.

    Closed form ``(e0 − 1)·(n^r − 1)/(n − 1) + 1`` (and 1 when ``n == 1``).
    """
    n, r = int(n), int(r)
    if n < 1 or r < 1:
        raise ValueError(f"need positive base and degree, got n={n}, r={r}")
    e0 = int(e0)
    if not 1 <= e0 <= n:
        raise ValueError(f"index {e0} out of range [1, {n}]")
    if n == 1:
        return 1
    return (e0 - 1) * (n**r - 1) // (n - 1) + 1


def xi_matrix(e: int, i: int, dims: Sequence[int]) -> np.ndarray:
    """Component-selection matrix Ξ extracting factor ``i`` at anchor index ``e``.

    With ``(c_1, …, c_r) = index_split(e, dims)``, Ξ is the Kronecker product
    over slots ``j`` of the row ``(δ^{c_j})ᵀ`` — except slot ``i``, which
    contributes the identity.  Shape: ``dims[i−1] × prod(dims)``.  For a
    decomposable ``x = c0 · x_1 ⊗ … ⊗ x_r`` with monic components whose
    leading indices join to ``e``, ``Ξ x = c0 · x_i``.
    """
    dims = _check_dims(dims)
    r = len(dims)
    i = int(i)
    if not 1 <= i <= r:
        raise ValueError(f"component position {i} out of range [1, {r}]")
    cs = index_split(e, dims)
    out = np.ones((1, 1))
    for j, (n, c) in enumerate(zip(dims, cs), start=1):
        factor = np.eye(n) if j == i else basis_vector(n, c).reshape(1, n)
        out = np.kron(out, factor)
    return out


def extract_component(
    x: np.ndarray | Sequence, e: int, i: int, dims: Sequence[int]
) -> np.ndarray:
    """Apply the Ξ selector: candidate ``i``-th component of ``x`` at anchor ``e`` (scaled by ``c0``)."""
    arr = _as_vector(x)
    dims = _check_dims(dims)
    if arr.size != math.prod(dims):
        raise ValueError(
            f"vector length {arr.size} does not match factor dims {list(dims)}"
        )
    return xi_matrix(e, i, dims) @ arr


def compose(components: Sequence[np.ndarray | Sequence]) -> np.ndarray:
    """Kronecker (STP) product of component vectors, first factor slowest."""
    if not components:
        raise ValueError("need at least one component")
    out = _as_vector(components[0])
    for c in components[1:]:
        out = np.kron(out, _as_vector(c))
    return out


@dataclass(frozen=True)
class MonicDecomposition:
    """Certified decomposition ``x = c0 · x_1 ⊗ … ⊗ x_r`` with monic components."""

    e: int
    c0: float
    components: tuple[np.ndarray, ...] = field(repr=False)

    def __post_init__(self) -> None:
        comps = tuple(np.asarray(c, dtype=float).ravel() for c in self.components)
        for c in comps:
            c.flags.writeable = False
        object.__setattr__(self, "components", comps)

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(c.size for c in self.components)

    def reconstruct(self) -> np.ndarray:
        """``c0`` times the composed components."""
        return self.c0 * compose(self.components)


def monic_decompose(
    x: np.ndarray | Sequence,
    dims: Sequence[int],
    recon_tol: float = DEFAULT_RECON_TOL,
) -> MonicDecomposition | None:
    """Decompose ``x`` into monic components over ``dims``, or ``None`` if not decomposable.

    Components are extracted with the Ξ selectors anchored at ``e = mu(x)``,
    monic-normalized, and certified by reconstruction: the result is accepted
    only when ``‖c0·(x_1 ⊗ … ⊗ x_r) − x‖ ≤ recon_tol · ‖x‖``.
    """
    arr = _as_vector(x)
    dims = _check_dims(dims)
    if arr.size != math.prod(dims):
        raise ValueError(
            f"vector length {arr.size} does not match factor dims {list(dims)}"
        )
    e = mu(arr)
    c0 = float(arr[e - 1])
    comps = []
    for i in range(1, len(dims) + 1):
        extracted = extract_component(arr, e, i, dims)
        if not np.any(extracted):
            return None
        comps.append(extracted / c0)
    candidate = MonicDecomposition(e=e, c0=c0, components=tuple(comps))
    err = float(np.linalg.norm(candidate.reconstruct() - arr))
    if err > recon_tol * float(np.linalg.norm(arr)):
        return None
    return candidate


def is_diagonal(d: MonicDecomposition, tol: float = 1e-9) -> bool:
    """Whether all components of a decomposition are equal (within ``tol``, componentwise)."""
    comps = d.components
    if len({c.size for c in comps}) != 1:
        return False
    first = comps[0]
    return all(np.max(np.abs(c - first)) <= tol for c in comps[1:])
