"""Degeneracy-amplifying compiler passes over Ising models.

Every pass is a pure function ``model -> (model, report)``. Gadget penalties
are expanded exactly into Z-product terms; the constant part of each
expansion is folded into ``IsingModel.offset``.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from itertools import product
from typing import Callable, Literal

from .ising import (
    IsingModel,
    SpinConfiguration,
    Term,
    as_fraction,
    evaluate_energy,
    fraction_to_json,
)

Locality = Literal["three_local", "two_local"]


class UnitizeRequired(ValueError):
    """Construction input has a coefficient that is neither unit nor a fractional remainder."""


class GadgetIndexError(IndexError):
    pass


# ---------------------------------------------------------------------------
# exact polynomials in sigma_z


class SpinPoly(dict):
    """Polynomial in spin variables, keyed by sorted support tuples.

    ``sigma**2 == 1``, so a product's support is the symmetric difference.
    """

    @classmethod
    def const(cls, c) -> "SpinPoly":
        return cls({(): as_fraction(c)})

    @classmethod
    def spin(cls, q: int, c=1) -> "SpinPoly":
        return cls({(q,): as_fraction(c)})

    @classmethod
    def bit(cls, q: int) -> "SpinPoly":
        """``x_q = (sigma_q + 1) / 2``."""
        return cls({(q,): Fraction(1, 2), (): Fraction(1, 2)})

    def __add__(self, other):
        other = other if isinstance(other, SpinPoly) else SpinPoly.const(other)
        out = SpinPoly(self)
        for k, v in other.items():
            out[k] = out.get(k, Fraction(0)) + v
        return SpinPoly({k: v for k, v in out.items() if v != 0})

    __radd__ = __add__

    def __neg__(self):
        return SpinPoly({k: -v for k, v in self.items()})

    def __sub__(self, other):
        return self + (-(other if isinstance(other, SpinPoly) else SpinPoly.const(other)))

    def __rsub__(self, other):
        return SpinPoly.const(other) - self

    def __mul__(self, other):
        if not isinstance(other, SpinPoly):
            c = as_fraction(other)
            return SpinPoly({k: v * c for k, v in self.items() if v * c != 0})
        out: dict[tuple[int, ...], Fraction] = {}
        for ka, va in self.items():
            for kb, vb in other.items():
                key = tuple(sorted(set(ka) ^ set(kb)))
                out[key] = out.get(key, Fraction(0)) + va * vb
        return SpinPoly({k: v for k, v in out.items() if v != 0})

    __rmul__ = __mul__

    @property
    def constant(self) -> Fraction:
        return self.get((), Fraction(0))

    def terms(self) -> list[Term]:
        return [Term(k, v) for k, v in sorted(self.items(), key=lambda kv: (len(kv[0]), kv[0])) if k]

    def evaluate(self, spins: dict[int, int]) -> Fraction:
        return sum((v * math.prod(spins[q] for q in k) for k, v in self.items()), Fraction(0))


def penalty_poly(support, sign: int, extra: int, b) -> SpinPoly:
    """``b (sign * prod(sigma_support) + 1)(sigma_extra + 1) / 2``."""
    term = SpinPoly({tuple(sorted(support)): Fraction(sign)})
    return (term + 1) * (SpinPoly.spin(extra) + 1) * (as_fraction(b) / 2)


def two_local_poly(sign: int, i: int, j: int, k: int, star: int, b) -> SpinPoly:
    """Four-qubit 2-local replacement for ``b (sign s_i s_j + 1)(s_k + 1) / 2``."""
    if len({i, j, k, star}) != 4:
        raise GadgetIndexError(f"two-local gadget needs four distinct qubits, got {(i, j, k, star)}")
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    xi = SpinPoly.bit(i) if sign > 0 else 1 - SpinPoly.bit(i)
    xj, xk, xs = SpinPoly.bit(j), SpinPoly.bit(k), SpinPoly.bit(star)
    inner = (
        4 * (xi * xj + xj * xk + xk * xi)
        + 6 * (xi + xj + xk) * (1 - 2 * xs)
        + 8 * xs
        - 1
        + SpinPoly({tuple(sorted((i, j))): Fraction(sign)})
        + SpinPoly.spin(k)
        + 1
    )
    return inner * (as_fraction(b) / 2)


def two_local_gadget(sign: int, i: int, j: int, ij_k: int, ij_k_star: int, b) -> tuple[list[Term], Fraction]:
    """Terms and constant of the 2-local gadget for a coupler of the given sign."""
    poly = two_local_poly(sign, i, j, ij_k, ij_k_star, b)
    return poly.terms(), poly.constant


# Cost tables in units of 2b, rows (s_i, s_j, s_ijk) -> (star=-1, star=+1).
APPENDIX_TABLES: dict[int, dict[tuple[int, int, int], tuple[int, int]]] = {
    +1: {
        (-1, -1, -1): (0, 2),
        (-1, -1, +1): (2, 1),
        (-1, +1, -1): (1, 0),
        (-1, +1, +1): (4, 0),
        (+1, -1, -1): (1, 0),
        (+1, -1, +1): (4, 0),
        (+1, +1, -1): (4, 0),
        (+1, +1, +1): (8, 1),
    },
    -1: {
        (-1, -1, -1): (1, 0),
        (-1, -1, +1): (4, 0),
        (-1, +1, -1): (4, 0),
        (-1, +1, +1): (8, 1),
        (+1, -1, -1): (0, 2),
        (+1, -1, +1): (2, 1),
        (+1, +1, -1): (1, 0),
        (+1, +1, +1): (4, 0),
    },
}


@dataclass
class GadgetCheck:
    name: str
    passed: bool
    detail: str = ""


def verify_gadget_tables(emit: Callable = two_local_gadget, b=1) -> list[GadgetCheck]:
    """Evaluate both 2-local gadgets on all assignments and check the four table properties."""
    b = as_fraction(b)
    checks: list[GadgetCheck] = []
    for sign, table in APPENDIX_TABLES.items():
        label = "f(+)" if sign > 0 else "f(-)"
        terms, const = emit(sign, 0, 1, 2, 3, b)
        values: dict[tuple[int, int, int, int], Fraction] = {}
        for spins in product((-1, 1), repeat=4):
            values[spins] = (const + sum((t.contribution(spins) for t in terms), Fraction(0))) / (2 * b)
        for row, expected in table.items():
            for star, want in zip((-1, 1), expected):
                got = values[row + (star,)]
                ok = got == want
                checks.append(
                    GadgetCheck(
                        f"{label} row {row + (star,)}",
                        ok,
                        "" if ok else f"expected {want}, got {got}",
                    )
                )
        negative = [s for s, v in values.items() if v < 0]
        checks.append(GadgetCheck(f"{label} property 1 (nonnegative)", not negative, f"negative at {negative}" if negative else ""))
        bad_pattern = []
        for si, sj in product((-1, 1), repeat=2):
            zeros = [(sk, ss) for sk, ss in product((-1, 1), repeat=2) if values[(si, sj, sk, ss)] == 0]
            satisfied = sign * si * sj < 0
            if satisfied:
                ok = len(zeros) == 2 and zeros[0][1] == zeros[1][1] and zeros[0][0] != zeros[1][0]
            else:
                ok = len(zeros) == 1
            if not ok:
                bad_pattern.append(((si, sj), zeros))
        checks.append(
            GadgetCheck(
                f"{label} properties 2-3 (zero pattern)",
                not bad_pattern,
                f"bad rows {bad_pattern}" if bad_pattern else "",
            )
        )
        low = [s for s, v in values.items() if 0 < v < 1]
        checks.append(GadgetCheck(f"{label} property 4 (nonzero >= 2b)", not low, f"below 2b at {low}" if low else ""))
    return checks


# ---------------------------------------------------------------------------
# parameters and provenance


@dataclass(frozen=True)
class GadgetParams:
    a: int
    b: Fraction
    locality: Locality = "three_local"

    def __post_init__(self):
        if int(self.a) != self.a or self.a < 1:
            raise ValueError("a must be a positive integer")
        b = as_fraction(self.b)
        if b <= 0:
            raise ValueError("b must be positive")
        loc = {"3": "three_local", "2": "two_local", 3: "three_local", 2: "two_local"}.get(self.locality, self.locality)
        if loc not in ("three_local", "two_local"):
            raise ValueError(f"unknown locality {self.locality!r}")
        object.__setattr__(self, "a", int(self.a))
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "locality", loc)

    @classmethod
    def default(cls, num_qubits: int, cap: int | None = None, locality: Locality = "three_local") -> "GadgetParams":
        """``a = b = max(2, n**2)``, optionally capped."""
        v = max(2, num_qubits**2)
        if cap is not None:
            v = max(1, min(v, cap))
        return cls(v, Fraction(v), locality)

    def to_dict(self) -> dict:
        return {"a": self.a, "b": fraction_to_json(self.b), "locality": self.locality}


@dataclass(frozen=True)
class ExtraQubit:
    qubit: int
    source: int
    replica: int
    kind: Literal["degeneracy", "auxiliary_star"] = "degeneracy"


@dataclass
class TransformReport:
    """Where every added qubit and term came from.

    ``source`` fields index terms of the model the pass received. After
    :func:`transform` composes passes, each provenance entry also carries an
    ``origin`` resolved against the user's input model.
    """

    original_qubits: int
    extra_qubits: list[ExtraQubit] = field(default_factory=list)
    term_provenance: list[dict] = field(default_factory=list)
    params: GadgetParams | None = None
    fractional_groups: list[tuple[int, Fraction]] = field(default_factory=list)
    ferro_pairs: list[tuple[int, int, int]] = field(default_factory=list)
    input_qubits: int | None = None
    gadget_offset: Fraction = Fraction(0)

    def extras_of(self, kind: str = "degeneracy") -> list[ExtraQubit]:
        return [e for e in self.extra_qubits if e.kind == kind]

    def to_dict(self) -> dict:
        return {
            "input_qubits": self.input_qubits if self.input_qubits is not None else self.original_qubits,
            "original_qubits": self.original_qubits,
            "params": self.params.to_dict() if self.params else None,
            "extra_qubits": [asdict(e) for e in self.extra_qubits],
            "ferro_pairs": [{"qubit": q, "partner": p, "weight": w} for q, p, w in self.ferro_pairs],
            "fractional_groups": [{"source": s, "remainder": fraction_to_json(r)} for s, r in self.fractional_groups],
            "gadget_offset": fraction_to_json(self.gadget_offset),
            "term_provenance": [_jsonable(p) for p in self.term_provenance],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "TransformReport":
        params = data.get("params")
        return cls(
            original_qubits=data["original_qubits"],
            extra_qubits=[ExtraQubit(**e) for e in data.get("extra_qubits", [])],
            term_provenance=list(data.get("term_provenance", [])),
            params=GadgetParams(params["a"], as_fraction(params["b"]), params["locality"]) if params else None,
            fractional_groups=[(g["source"], as_fraction(g["remainder"])) for g in data.get("fractional_groups", [])],
            ferro_pairs=[(f["qubit"], f["partner"], f["weight"]) for f in data.get("ferro_pairs", [])],
            input_qubits=data.get("input_qubits"),
            gadget_offset=as_fraction(data.get("gadget_offset", 0)),
        )


def _jsonable(obj):
    if isinstance(obj, Fraction):
        return fraction_to_json(obj)
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    return obj


# ---------------------------------------------------------------------------
# passes


def unitize(model: IsingModel) -> tuple[IsingModel, TransformReport]:
    """Split each coefficient into ``floor(|c|)`` unit copies plus a fractional remainder term."""
    terms: list[Term] = []
    prov: list[dict] = []
    groups: list[tuple[int, Fraction]] = []
    for idx, t in enumerate(model.terms):
        mag = abs(t.coeff)
        whole = math.floor(mag)
        for copy in range(whole):
            terms.append(Term(t.support, t.sign))
            prov.append({"kind": "unit", "source": idx, "copy": copy})
        rem = mag - whole
        if rem:
            terms.append(Term(t.support, t.sign * rem))
            prov.append({"kind": "fractional", "source": idx, "remainder": rem})
            groups.append((idx, rem))
    report = TransformReport(model.num_qubits, term_provenance=prov, fractional_groups=groups)
    return model.with_terms(terms), report


def possibly_flip_degenerate(model: IsingModel) -> list[int]:
    """Qubits whose flip cost could vanish somewhere.

    An odd number of incident unit terms always gives a nonzero flip cost;
    anything else (even count, or a fractional term attached) is flagged.
    """
    flagged = []
    for q in range(model.num_qubits):
        incident = [model.terms[k] for k in model.incident_terms(q)]
        if len(incident) % 2 == 0 or any(not t.is_unit for t in incident):
            flagged.append(q)
    return flagged


def ferro_pair_preprocess(model: IsingModel) -> tuple[IsingModel, TransformReport]:
    """Give each possibly flip-degenerate qubit a strongly coupled partner.

    The partner is joined by ``incident + 1`` identical ``J = -1`` terms, so
    breaking the pair always costs more than the qubit's other terms can
    return. The aligned pair's coupling energy is cancelled in the offset, so
    energies of lifted configurations are unchanged.
    """
    terms = list(model.terms)
    prov = [{"kind": "original", "source": k} for k in range(model.m)]
    delta = list(model.delta)
    pairs = []
    n = model.num_qubits
    for q in possibly_flip_degenerate(model):
        partner = n + len(pairs)
        weight = len(model.incident_terms(q)) + 1
        for _ in range(weight):
            terms.append(Term((q, partner), -1))
            prov.append({"kind": "ferro", "qubit": q, "partner": partner})
        delta.append(model.delta[q])
        pairs.append((q, partner, weight))
    offset = model.offset + sum(w for _, _, w in pairs)
    out = IsingModel(n + len(pairs), tuple(terms), tuple(delta), offset)
    report = TransformReport(model.num_qubits, term_provenance=prov, ferro_pairs=pairs)
    return out, report


def apply_construction(model: IsingModel, params: GadgetParams) -> tuple[IsingModel, TransformReport]:
    """Attach ``a`` degeneracy extras to every term.

    Unit terms get ``b (term + 1)(extra + 1) / 2`` per replica. Terms with
    ``0 < |c| < 1`` are fractional remainders: their penalty uses the sign
    only and their extras carry ``delta = |c|``. Under ``two_local`` each
    coupler replica is replaced by the four-qubit gadget with an auxiliary
    star qubit.
    """
    if not isinstance(params, GadgetParams):
        raise TypeError("params must be GadgetParams")
    a, b = params.a, params.b
    terms = list(model.terms)
    prov: list[dict] = [{"kind": "original", "source": k} for k in range(model.m)]
    delta = list(model.delta)
    offset = model.offset
    extras: list[ExtraQubit] = []
    groups: list[tuple[int, Fraction]] = []
    next_q = model.num_qubits

    for idx, t in enumerate(model.terms):
        mag = abs(t.coeff)
        if mag > 1:
            raise UnitizeRequired(f"term {idx} has coefficient {t.coeff}; run unitize first")
        if len(t.support) > 2:
            raise ValueError(f"term {idx} is {len(t.support)}-local; gadgets apply to 1- and 2-local terms")
        if mag < 1:
            groups.append((idx, mag))
        for replica in range(a):
            extra = next_q
            next_q += 1
            extras.append(ExtraQubit(extra, idx, replica, "degeneracy"))
            delta.append(mag)
            if params.locality == "two_local" and len(t.support) == 2:
                star = next_q
                next_q += 1
                extras.append(ExtraQubit(star, idx, replica, "auxiliary_star"))
                delta.append(mag)
                poly = two_local_poly(t.sign, t.support[0], t.support[1], extra, star, b)
            else:
                poly = penalty_poly(t.support, t.sign, extra, b)
            for gt in poly.terms():
                terms.append(gt)
                prov.append({"kind": "gadget", "source": idx, "replica": replica})
            offset += poly.constant

    out = IsingModel(next_q, tuple(terms), tuple(delta), offset)
    report = TransformReport(model.num_qubits, extras, prov, params, groups, gadget_offset=offset - model.offset)
    return out, report


@dataclass
class Transformed:
    """Result of the full pipeline.

    ``base`` is the unit (and ferro-paired) model the gadgets were attached
    to; its configurations are the "original" states of ``model``.
    """

    model: IsingModel
    report: TransformReport
    base: IsingModel


def transform(model: IsingModel, params: GadgetParams, ferro_pairs: bool = True) -> Transformed:
    """unitize -> ferro-pair (optional) -> construction, with composed provenance."""
    unit, rep_u = unitize(model)
    base, rep_f = ferro_pair_preprocess(unit) if ferro_pairs else (unit, None)
    out, rep_c = apply_construction(base, params)

    def origin(base_idx: int) -> dict:
        entry = rep_f.term_provenance[base_idx] if rep_f else {"kind": "original", "source": base_idx}
        if entry["kind"] == "ferro":
            return dict(entry)
        return dict(rep_u.term_provenance[entry["source"]])

    for p in rep_c.term_provenance:
        p["origin"] = origin(p["source"])
    rep_c.fractional_groups = list(rep_u.fractional_groups)
    rep_c.ferro_pairs = list(rep_f.ferro_pairs) if rep_f else []
    rep_c.input_qubits = model.num_qubits
    return Transformed(out, rep_c, base)


# ---------------------------------------------------------------------------
# evaluating transformed models at original configurations


def lift_config(config, report: TransformReport) -> SpinConfiguration:
    """Extend an input-model configuration with aligned ferro partners."""
    spins = list(config)
    if len(spins) == report.original_qubits:
        return SpinConfiguration(tuple(spins))
    if report.input_qubits is not None and len(spins) == report.input_qubits:
        for q, partner, _ in sorted(report.ferro_pairs, key=lambda p: p[1]):
            spins.append(spins[q])
        return SpinConfiguration(tuple(spins))
    raise ValueError(f"configuration of length {len(spins)} does not match the transformed model's inputs")


def zero_cost_extension(transformed: IsingModel, report: TransformReport, config) -> SpinConfiguration:
    """Full configuration with degeneracy extras at -1 and each star qubit at its zero-cost value."""
    base = lift_config(config, report)
    spins = list(base.spins) + [-1] * (transformed.num_qubits - report.original_qubits)
    stars = report.extras_of("auxiliary_star")
    if stars:
        by_group: dict[tuple[int, int], list[Term]] = {}
        for t, p in zip(transformed.terms, report.term_provenance):
            if p["kind"] == "gadget":
                by_group.setdefault((p["source"], p["replica"]), []).append(t)
        for s in stars:
            gadget = by_group[(s.source, s.replica)]
            costs = {}
            for v in (-1, 1):
                spins[s.qubit] = v
                costs[v] = sum((t.contribution(spins) for t in gadget), Fraction(0))
            spins[s.qubit] = min((-1, 1), key=lambda v: costs[v])
    return SpinConfiguration(tuple(spins))


def energy_preserved(original: IsingModel, transformed: IsingModel, report: TransformReport, config) -> bool:
    return evaluate_energy(transformed, zero_cost_extension(transformed, report, config)) == evaluate_energy(original, config)


def gadget_only(transformed: IsingModel, report: TransformReport) -> IsingModel:
    """The transformed model with the original terms removed (gadget penalties and their constants)."""
    kept = [t for t, p in zip(transformed.terms, report.term_provenance) if p["kind"] == "gadget"]
    return IsingModel(transformed.num_qubits, tuple(kept), transformed.delta, report.gadget_offset)
