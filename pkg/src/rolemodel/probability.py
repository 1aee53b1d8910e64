"""Exact probability primitives over finite alphabets.

Distributions, three-way joint tables, marginals, conditionals,
entropies and Kullback-Leibler divergence, all in double precision
with base-2 logarithms (every information quantity is in bits).
Conventions used throughout:

* 0 * log2(0) = 0 in every entropy-like sum;
* D(p||q) = +inf when p puts mass on a symbol where q has none;
* conditioning on a zero-probability symbol is undefined and is
  represented explicitly (a None row), never silently replaced by a
  uniform or zero row.

All types are immutable after construction (their arrays are marked
read-only) and all operations are pure functions of their inputs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from .errors import DimensionError, DistributionError, UndefinedConditionalError

# Axis indices of a Joint3 table, in storage order.
X_AXIS, Y_AXIS, Z_AXIS = 0, 1, 2

# Inputs whose total mass deviates from 1 by more than this are rejected.
# Smaller deviations are normalized away: the window absorbs accumulated
# rounding from chained products without masking construction bugs.
SUM_TOLERANCE = 1e-9

_LN2 = math.log(2.0)


def _table_entropy(table: np.ndarray) -> float:
    """-sum c*log2(c) over the positive cells of a nonnegative table."""
    cells = table[table > 0.0]
    if cells.size == 0:
        return 0.0
    return float(-np.dot(cells, np.log2(cells)))


def _kl_from_arrays(p: np.ndarray, q: np.ndarray) -> float:
    # Shared kernel for kl_divergence and the estimator objectives.
    mask = p > 0.0
    if np.any(q[mask] == 0.0):
        return math.inf
    pm = p[mask]
    val = float(np.dot(pm, np.log2(pm) - np.log2(q[mask])))
    # Gibbs' inequality guarantees the exact value is nonnegative; tiny
    # negative results are pure rounding.
    return val if val > 0.0 else 0.0


@dataclass(frozen=True, eq=False)
class Simplex:
    """A probability distribution over a finite alphabet of >= 2 symbols.

    Accepts any nonnegative vector whose mass is within SUM_TOLERANCE of 1
    and renormalizes it exactly to 1; anything further off is rejected as a
    construction bug rather than papered over.
    """

    probs: np.ndarray

    def __post_init__(self):
        arr = np.array(self.probs, dtype=float)
        if arr.ndim != 1:
            raise DistributionError(
                f"expected a 1-d probability vector, got shape {arr.shape}"
            )
        if arr.size < 2:
            raise DistributionError("alphabet must have at least 2 symbols")
        if not np.all(np.isfinite(arr)):
            raise DistributionError("probabilities must be finite")
        if np.any(arr < 0.0):
            raise DistributionError("probabilities must be nonnegative")
        total = float(arr.sum())
        if abs(total - 1.0) > SUM_TOLERANCE:
            raise DistributionError(f"probabilities sum to {total!r}, not 1")
        arr /= total
        arr.setflags(write=False)
        object.__setattr__(self, "probs", arr)

    def __len__(self) -> int:
        return self.probs.size

    def __getitem__(self, i: int) -> float:
        return float(self.probs[i])

    def tv_distance(self, other: "Simplex") -> float:
        """Total-variation distance, half the L1 difference."""
        if len(self) != len(other):
            raise DimensionError("alphabet sizes differ")
        return float(0.5 * np.abs(self.probs - other.probs).sum())

    @staticmethod
    def uniform(n: int) -> "Simplex":
        return Simplex(np.full(n, 1.0 / n))


@dataclass(frozen=True, eq=False)
class StochasticMatrix:
    """A row-stochastic matrix: one Simplex per input symbol.

    Models a memoryless channel from an input alphabet (rows) to an
    output alphabet (columns). ``p`` is the (input_size, output_size)
    table, derived from the validated rows and marked read-only.
    """

    rows: tuple
    p: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        rows = tuple(
            r if isinstance(r, Simplex) else Simplex(r) for r in self.rows
        )
        if len(rows) < 2:
            raise DistributionError("a channel needs at least 2 input symbols")
        width = len(rows[0])
        if any(len(r) != width for r in rows):
            raise DimensionError("all rows must share one output alphabet")
        table = np.vstack([r.probs for r in rows])
        table.setflags(write=False)
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "p", table)

    @property
    def input_size(self) -> int:
        return len(self.rows)

    @property
    def output_size(self) -> int:
        return len(self.rows[0])

    def row(self, i: int) -> Simplex:
        return self.rows[i]


@dataclass(frozen=True, eq=False)
class Joint3:
    """A joint distribution over (x, y, z): a read-only (nx, ny, nz) table.

    Same normalization policy as Simplex: total mass within SUM_TOLERANCE
    of 1 is renormalized, anything further off is rejected.
    """

    p: np.ndarray

    def __post_init__(self):
        arr = np.array(self.p, dtype=float)
        if arr.ndim != 3:
            raise DistributionError(f"expected a 3-d table, got shape {arr.shape}")
        if any(n < 2 for n in arr.shape):
            raise DistributionError("every alphabet must have at least 2 symbols")
        if not np.all(np.isfinite(arr)):
            raise DistributionError("probabilities must be finite")
        if np.any(arr < 0.0):
            raise DistributionError("probabilities must be nonnegative")
        total = float(arr.sum())
        if abs(total - 1.0) > SUM_TOLERANCE:
            raise DistributionError(f"table mass is {total!r}, not 1")
        arr /= total
        arr.setflags(write=False)
        object.__setattr__(self, "p", arr)

    @property
    def nx(self) -> int:
        return self.p.shape[X_AXIS]

    @property
    def ny(self) -> int:
        return self.p.shape[Y_AXIS]

    @property
    def nz(self) -> int:
        return self.p.shape[Z_AXIS]


@dataclass(frozen=True, eq=False)
class ConditionalTable:
    """A family of conditional distributions, one row per conditioning symbol.

    Rows whose conditioning symbol has zero probability are None
    ("undefined"). At least one row must be defined, and all defined rows
    share one target alphabet.
    """

    rows: tuple

    def __post_init__(self):
        rows = tuple(
            r if (r is None or isinstance(r, Simplex)) else Simplex(r)
            for r in self.rows
        )
        defined = [r for r in rows if r is not None]
        if not defined:
            raise DistributionError("a conditional table needs a defined row")
        width = len(defined[0])
        if any(len(r) != width for r in defined):
            raise DimensionError("all defined rows must share one alphabet")
        object.__setattr__(self, "rows", rows)

    @property
    def n_given(self) -> int:
        return len(self.rows)

    @property
    def n_target(self) -> int:
        return len(next(r for r in self.rows if r is not None))

    def row(self, i: int) -> Simplex:
        r = self.rows[i]
        if r is None:
            raise UndefinedConditionalError(
                f"conditional is undefined for symbol {i} (zero probability)"
            )
        return r

    def defined_items(self) -> list:
        """(index, Simplex) pairs for the defined rows."""
        return [(i, r) for i, r in enumerate(self.rows) if r is not None]

    def as_array(self, fill: float = math.nan) -> np.ndarray:
        """Dense (n_given, n_target) copy with undefined rows set to fill."""
        out = np.full((self.n_given, self.n_target), fill, dtype=float)
        for i, r in self.defined_items():
            out[i] = r.probs
        return out

    def tv_distance(self, other: "ConditionalTable") -> float:
        """Largest row-wise TV distance.

        Rows undefined in both tables are skipped; a row defined in only
        one of them counts as +inf.
        """
        if self.n_given != other.n_given:
            raise DimensionError("conditioning alphabets differ")
        worst = 0.0
        for a, b in zip(self.rows, other.rows):
            if a is None and b is None:
                continue
            if a is None or b is None:
                return math.inf
            worst = max(worst, a.tv_distance(b))
        return worst


class EstimatorTable(ConditionalTable):
    """A candidate estimator: one distribution over x per observable z."""

    @staticmethod
    def uniform(n_given: int, n_target: int) -> "EstimatorTable":
        return EstimatorTable(tuple(Simplex.uniform(n_target) for _ in range(n_given)))


def entropy(p: Simplex) -> float:
    """Shannon entropy of p in bits."""
    return _table_entropy(p.probs)


def kl_divergence(p: Simplex, q: Simplex) -> float:
    """D(p||q) in bits; +inf when p puts mass where q has none."""
    if len(p) != len(q):
        raise DimensionError("alphabet sizes differ")
    return _kl_from_arrays(p.probs, q.probs)


def marginal_x(joint: Joint3) -> Simplex:
    return Simplex(joint.p.sum(axis=(Y_AXIS, Z_AXIS)))


def marginal_y(joint: Joint3) -> Simplex:
    return Simplex(joint.p.sum(axis=(X_AXIS, Z_AXIS)))


def marginal_z(joint: Joint3) -> Simplex:
    return Simplex(joint.p.sum(axis=(X_AXIS, Y_AXIS)))


def _pair_table(joint: Joint3, drop_axis: int) -> np.ndarray:
    out = joint.p.sum(axis=drop_axis)
    out.setflags(write=False)
    return out


def marginal_xy(joint: Joint3) -> np.ndarray:
    """Pairwise joint table over (x, y), read-only."""
    return _pair_table(joint, Z_AXIS)


def marginal_xz(joint: Joint3) -> np.ndarray:
    """Pairwise joint table over (x, z), read-only."""
    return _pair_table(joint, Y_AXIS)


def marginal_yz(joint: Joint3) -> np.ndarray:
    """Pairwise joint table over (y, z), read-only."""
    return _pair_table(joint, X_AXIS)


_AXIS_NAMES = {X_AXIS: "x", Y_AXIS: "y", Z_AXIS: "z"}


def conditional(joint: Joint3, target_axis: int, given_axis: int) -> ConditionalTable:
    """P(target | given), one row per conditioning symbol.

    Zero-probability conditioning symbols yield None rows.
    """
    if target_axis not in _AXIS_NAMES or given_axis not in _AXIS_NAMES:
        raise DimensionError("axes must be X_AXIS, Y_AXIS or Z_AXIS")
    if target_axis == given_axis:
        raise DimensionError("target and conditioning axes must differ")
    drop = 3 - target_axis - given_axis
    table = joint.p.sum(axis=drop)
    if target_axis < given_axis:
        table = table.T  # reorient to (given, target)
    mass = table.sum(axis=1)
    rows = tuple(
        Simplex(table[g] / mass[g]) if mass[g] > 0.0 else None
        for g in range(table.shape[0])
    )
    return ConditionalTable(rows)


def conditional_entropy(
    joint: Joint3, target_axis: int, given_axes: Union[int, tuple]
) -> float:
    """H(target | given) in bits, the P(given)-weighted average of row
    entropies. Zero-probability conditioning symbols contribute zero.

    ``given_axes`` may be one axis or a tuple of axes, so both H(X|Z)
    and H(X|YZ) are available.
    """
    given = (given_axes,) if isinstance(given_axes, int) else tuple(given_axes)
    if not given:
        raise DimensionError("need at least one conditioning axis")
    axes = {target_axis, *given}
    if len(axes) != 1 + len(given) or not axes <= set(_AXIS_NAMES):
        raise DimensionError("axes must be distinct members of {X,Y,Z}_AXIS")
    # H(T|G) = H(T,G) - H(G); identical to the weighted-row-entropy
    # definition, including its zero-mass convention.
    drop_tg = tuple(a for a in _AXIS_NAMES if a not in axes)
    drop_g = tuple(a for a in _AXIS_NAMES if a not in set(given))
    h_tg = _table_entropy(joint.p.sum(axis=drop_tg) if drop_tg else joint.p)
    h_g = _table_entropy(joint.p.sum(axis=drop_g))
    return h_tg - h_g


def mutual_information(pair_table: np.ndarray) -> float:
    """I between the two axes of a pairwise joint table, in bits."""
    table = np.asarray(pair_table, dtype=float)
    if table.ndim != 2:
        raise DimensionError(f"expected a 2-d table, got shape {table.shape}")
    return (
        _table_entropy(table.sum(axis=1))
        + _table_entropy(table.sum(axis=0))
        - _table_entropy(table)
    )


def conditional_mutual_information(joint: Joint3) -> float:
    """I(X;Z|Y) in bits; zero iff X - Y - Z is a Markov chain."""
    return conditional_entropy(joint, X_AXIS, Y_AXIS) - conditional_entropy(
        joint, X_AXIS, (Y_AXIS, Z_AXIS)
    )
