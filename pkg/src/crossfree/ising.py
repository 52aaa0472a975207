"""Ising models with exact rational coefficients and brute-force oracles.

Spins take values in {-1, +1}. Basis index ``s`` of an ``n``-qubit model
encodes qubit ``i`` in bit ``i`` with ``bit = (spin + 1) / 2``, so index 0 is
the all-down configuration.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import reduce
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

DEFAULT_EXHAUSTIVE_LIMIT = 24
_CHUNK = 1 << 20


class DimensionError(ValueError):
    """Configuration or vector size does not match the model."""


class UnitModelRequired(ValueError):
    """Operation needs every coefficient in {-1, +1}."""


class ExhaustiveLimitExceeded(ValueError):
    pass


def as_fraction(value) -> Fraction:
    """Parse an int, Fraction, float or ``"p/q"`` string exactly."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise TypeError("booleans are not coefficients")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        if not math.isfinite(value):
            raise ValueError(f"non-finite coefficient {value!r}")
        return Fraction(value).limit_denominator(10**12)
    if isinstance(value, str):
        return Fraction(value.strip())
    raise TypeError(f"cannot interpret {value!r} as a rational")


def fraction_to_json(value: Fraction):
    value = Fraction(value)
    if value.denominator == 1:
        return value.numerator
    return f"{value.numerator}/{value.denominator}"


@dataclass(frozen=True)
class Term:
    """Product of ``sigma_z`` on ``support`` scaled by ``coeff``."""

    support: tuple[int, ...]
    coeff: Fraction

    def __post_init__(self):
        support = tuple(sorted(int(q) for q in self.support))
        if not 1 <= len(support) <= 3:
            raise ValueError(f"term support must have 1-3 qubits, got {support}")
        if len(set(support)) != len(support):
            raise ValueError(f"repeated qubit in term support {support}")
        if min(support) < 0:
            raise ValueError(f"negative qubit index in {support}")
        coeff = as_fraction(self.coeff)
        if coeff == 0:
            raise ValueError("term coefficient must be nonzero")
        object.__setattr__(self, "support", support)
        object.__setattr__(self, "coeff", coeff)

    @property
    def sign(self) -> int:
        return 1 if self.coeff > 0 else -1

    @property
    def is_unit(self) -> bool:
        return abs(self.coeff) == 1

    def contribution(self, spins: Sequence[int]) -> Fraction:
        return self.coeff * math.prod(spins[q] for q in self.support)


@dataclass(frozen=True)
class SpinConfiguration:
    spins: tuple[int, ...]

    def __post_init__(self):
        spins = tuple(int(s) for s in self.spins)
        if any(s not in (-1, 1) for s in spins):
            raise ValueError(f"spins must be +1 or -1, got {spins}")
        object.__setattr__(self, "spins", spins)

    def __len__(self):
        return len(self.spins)

    def __getitem__(self, i):
        return self.spins[i]

    def __iter__(self):
        return iter(self.spins)

    def flipped(self, qubit: int) -> "SpinConfiguration":
        spins = list(self.spins)
        spins[qubit] = -spins[qubit]
        return SpinConfiguration(tuple(spins))

    def extended(self, extra: Iterable[int]) -> "SpinConfiguration":
        return SpinConfiguration(self.spins + tuple(extra))

    def to_index(self) -> int:
        return sum(1 << i for i, s in enumerate(self.spins) if s > 0)

    @classmethod
    def from_index(cls, index: int, num_qubits: int) -> "SpinConfiguration":
        return cls(tuple(1 if (index >> i) & 1 else -1 for i in range(num_qubits)))

    @classmethod
    def parse(cls, text: str) -> "SpinConfiguration":
        """Accepts ``1``/``0``, ``+``/``-`` or arrow characters, qubit 0 first."""
        table = {"1": 1, "+": 1, "u": 1, "↑": 1, "0": -1, "-": -1, "d": -1, "↓": -1}
        try:
            return cls(tuple(table[c] for c in text.strip()))
        except KeyError as exc:
            raise ValueError(f"bad spin character {exc.args[0]!r} in {text!r}") from None

    def __str__(self):
        return "".join("1" if s > 0 else "0" for s in self.spins)


@dataclass(frozen=True)
class IsingModel:
    """Multiset of Z-product terms plus per-qubit transverse weights.

    ``offset`` is a constant energy shift; gadget expansion folds constants
    into it so that transformed energies stay exactly comparable.
    """

    num_qubits: int
    terms: tuple[Term, ...] = ()
    delta: tuple[Fraction, ...] | None = None
    offset: Fraction = Fraction(0)

    def __post_init__(self):
        n = int(self.num_qubits)
        if n < 0:
            raise ValueError("num_qubits must be nonnegative")
        terms = tuple(t if isinstance(t, Term) else Term(*t) for t in self.terms)
        for idx, t in enumerate(terms):
            if t.support[-1] >= n:
                raise ValueError(f"term {idx} references qubit {t.support[-1]} >= {n}")
        delta = (Fraction(1),) * n if self.delta is None else tuple(as_fraction(d) for d in self.delta)
        if len(delta) != n:
            raise ValueError(f"delta has length {len(delta)}, expected {n}")
        if any(d < 0 for d in delta):
            raise ValueError("delta entries must be nonnegative")
        object.__setattr__(self, "num_qubits", n)
        object.__setattr__(self, "terms", terms)
        object.__setattr__(self, "delta", delta)
        object.__setattr__(self, "offset", as_fraction(self.offset))

    @classmethod
    def from_fields(cls, num_qubits, h=None, J=None, K=None, delta=None, offset=0):
        """Convenience constructor from ``{i: h}``, ``{(i, j): J}`` and 3-local dicts."""
        terms = []
        for mapping in (h or {}, J or {}, K or {}):
            for key, c in mapping.items():
                support = (key,) if isinstance(key, int) else tuple(key)
                if as_fraction(c) != 0:
                    terms.append(Term(support, c))
        return cls(num_qubits, tuple(terms), delta, offset)

    @property
    def m(self) -> int:
        return len(self.terms)

    @property
    def is_unit(self) -> bool:
        return all(t.is_unit for t in self.terms)

    def incident_terms(self, qubit: int) -> list[int]:
        return [k for k, t in enumerate(self.terms) if qubit in t.support]

    def with_terms(self, terms, num_qubits=None, delta=None, offset=None) -> "IsingModel":
        return IsingModel(
            self.num_qubits if num_qubits is None else num_qubits,
            tuple(terms),
            self.delta if delta is None else delta,
            self.offset if offset is None else offset,
        )

    def __add__(self, other: "IsingModel") -> "IsingModel":
        if other.num_qubits != self.num_qubits:
            raise DimensionError("models have different qubit counts")
        return IsingModel(self.num_qubits, self.terms + other.terms, self.delta, self.offset + other.offset)


def canonicalize(model: IsingModel) -> IsingModel:
    """Merge terms with equal support, dropping any that cancel."""
    merged: dict[tuple[int, ...], Fraction] = {}
    for t in model.terms:
        merged[t.support] = merged.get(t.support, Fraction(0)) + t.coeff
    terms = tuple(Term(s, c) for s, c in merged.items() if c != 0)
    return model.with_terms(terms)


def _check_config(model: IsingModel, config) -> SpinConfiguration:
    if not isinstance(config, SpinConfiguration):
        config = SpinConfiguration(tuple(config))
    if len(config) != model.num_qubits:
        raise DimensionError(f"configuration has {len(config)} spins, model has {model.num_qubits} qubits")
    return config


def evaluate_energy(model: IsingModel, config) -> Fraction:
    config = _check_config(model, config)
    return model.offset + sum((t.contribution(config.spins) for t in model.terms), Fraction(0))


def flip_cost(model: IsingModel, config, qubit: int) -> Fraction:
    """Energy change from flipping ``qubit``."""
    config = _check_config(model, config)
    if not 0 <= qubit < model.num_qubits:
        raise IndexError(f"qubit {qubit} out of range for {model.num_qubits} qubits")
    local = sum((t.contribution(config.spins) for t in model.terms if qubit in t.support), Fraction(0))
    return -2 * local


def count_satisfied(model: IsingModel, config) -> int:
    """Number of unit terms contributing -1 at ``config``."""
    if not model.is_unit:
        raise UnitModelRequired("count_satisfied needs every coefficient in {-1, +1}")
    config = _check_config(model, config)
    return sum(1 for t in model.terms if t.contribution(config.spins) < 0)


def single_flip_degenerate_qubits(model: IsingModel, config) -> set[int]:
    config = _check_config(model, config)
    return {q for q in range(model.num_qubits) if flip_cost(model, config, q) == 0}


# ---------------------------------------------------------------------------
# vectorised exact enumeration


def integer_scale(model: IsingModel) -> int:
    """Smallest positive integer making every coefficient and the offset integral."""
    dens = [t.coeff.denominator for t in model.terms] + [model.offset.denominator]
    return reduce(math.lcm, dens, 1)


def spin_columns(indices: np.ndarray, num_qubits: int) -> np.ndarray:
    """``(len(indices), num_qubits)`` int8 spins for the given basis indices."""
    bits = (indices[:, None] >> np.arange(num_qubits, dtype=np.int64)) & 1
    return (2 * bits - 1).astype(np.int8)


def scaled_energies(model: IsingModel, start: int = 0, stop: int | None = None) -> tuple[np.ndarray, int]:
    """Exact energies times ``integer_scale`` as int64 for basis indices ``[start, stop)``."""
    scale = integer_scale(model)
    coeffs = [int(t.coeff * scale) for t in model.terms]
    bound = sum(abs(c) for c in coeffs) + abs(int(model.offset * scale))
    if bound >= 2**62:
        raise OverflowError("model coefficients too large for exact int64 enumeration")
    stop = (1 << model.num_qubits) if stop is None else stop
    out = np.empty(stop - start, dtype=np.int64)
    for lo in range(start, stop, _CHUNK):
        hi = min(stop, lo + _CHUNK)
        idx = np.arange(lo, hi, dtype=np.int64)
        acc = np.full(hi - lo, int(model.offset * scale), dtype=np.int64)
        for c, t in zip(coeffs, model.terms):
            prod = np.ones(hi - lo, dtype=np.int64)
            for q in t.support:
                prod *= 2 * ((idx >> q) & 1) - 1
            acc += c * prod
        out[lo - start : hi - start] = acc
    return out, scale


def flip_axis(values: np.ndarray, qubit: int) -> np.ndarray:
    """``values[s ^ (1 << qubit)]`` along the leading axis, without index arrays."""
    lead = values.shape[0]
    rest = values.shape[1:]
    shaped = values.reshape((lead >> (qubit + 1), 2, 1 << qubit) + rest)
    return shaped[:, ::-1].reshape(values.shape)


@dataclass
class BruteForceSummary:
    num_qubits: int
    ground_energy: Fraction
    ground_indices: np.ndarray
    local_minimum_indices: np.ndarray
    scale: int = 1
    energies: np.ndarray | None = field(default=None, repr=False)

    @property
    def degeneracy(self) -> int:
        return int(self.ground_indices.size)

    @property
    def ground_states(self) -> list[SpinConfiguration]:
        return [SpinConfiguration.from_index(int(i), self.num_qubits) for i in self.ground_indices]

    @property
    def local_minima(self) -> list[SpinConfiguration]:
        return [SpinConfiguration.from_index(int(i), self.num_qubits) for i in self.local_minimum_indices]

    def energy_of(self, config: SpinConfiguration) -> Fraction:
        if self.energies is None:
            raise ValueError("energies were not retained")
        return Fraction(int(self.energies[config.to_index()]), self.scale)


def brute_force(
    model: IsingModel,
    limit: int = DEFAULT_EXHAUSTIVE_LIMIT,
    keep_energies: bool = True,
    local_minima: bool = True,
) -> BruteForceSummary:
    """Exhaustive ground states and plateau-aware local minima.

    A configuration is a local minimum when no single flip lowers the energy
    and no chain of zero-cost flips reaches a configuration that has one.
    With ``local_minima=False`` only the ground states are computed and the
    local-minimum list is left empty.
    """
    n = model.num_qubits
    if n > limit:
        raise ExhaustiveLimitExceeded(f"{n} qubits exceeds the exhaustive limit of {limit}")
    energies, scale = scaled_energies(model)
    ground = int(energies.min())
    ground_idx = np.flatnonzero(energies == ground)
    if not local_minima:
        return BruteForceSummary(
            num_qubits=n,
            ground_energy=Fraction(ground, scale),
            ground_indices=ground_idx,
            local_minimum_indices=np.zeros(0, dtype=np.int64),
            scale=scale,
            energies=energies if keep_energies else None,
        )

    escapes = np.zeros(1 << n, dtype=bool)
    plateau = np.zeros(1 << n, dtype=np.int32)
    for q in range(n):
        nb = flip_axis(energies, q)
        escapes |= nb < energies
        plateau |= (nb == energies).astype(np.int32) << q
    # flood zero-cost plateaus from configurations that can descend
    changed = bool(plateau.any())
    while changed:
        grown = escapes.copy()
        for q in range(n):
            grown |= ((plateau >> q) & 1).astype(bool) & flip_axis(escapes, q)
        changed = bool((grown != escapes).any())
        escapes = grown
    minima = np.flatnonzero(~escapes)
    return BruteForceSummary(
        num_qubits=n,
        ground_energy=Fraction(ground, scale),
        ground_indices=ground_idx,
        local_minimum_indices=minima,
        scale=scale,
        energies=energies if keep_energies else None,
    )


# ---------------------------------------------------------------------------
# JSON model format


def model_to_dict(model: IsingModel) -> dict:
    out = {
        "num_qubits": model.num_qubits,
        "terms": [{"spins": list(t.support), "coeff": fraction_to_json(t.coeff)} for t in model.terms],
        "delta": [fraction_to_json(d) for d in model.delta],
    }
    if model.offset != 0:
        out["offset"] = fraction_to_json(model.offset)
    return out


def model_from_dict(data: dict) -> IsingModel:
    if not isinstance(data, dict) or "num_qubits" not in data:
        raise ValueError("model JSON must be an object with 'num_qubits'")
    terms = []
    for k, entry in enumerate(data.get("terms", [])):
        try:
            terms.append(Term(tuple(entry["spins"]), as_fraction(entry["coeff"])))
        except (KeyError, TypeError, ValueError, ZeroDivisionError) as exc:
            raise ValueError(f"term {k}: {exc}") from None
    return IsingModel(int(data["num_qubits"]), tuple(terms), data.get("delta"), data.get("offset", 0))


def dumps_model(model: IsingModel) -> str:
    return json.dumps(model_to_dict(model), indent=2)


def loads_model(text: str) -> IsingModel:
    return model_from_dict(json.loads(text))


def load_model(path) -> IsingModel:
    return loads_model(Path(path).read_text())


def save_model(model: IsingModel, path) -> None:
    Path(path).write_text(dumps_model(model) + "\n")
