"""Packaged crossing creation / elimination demo at dense-solver scale.

Three frozen models: a 3-qubit ferromagnet whose fields favour all-up
(``base``); the same with three extras that make every down-spin orientation
degenerate, so the all-down local minimum becomes 8-fold degenerate and
overtakes the ground branch (``biased``); and that plus four extras making
the all-up global minimum 16-fold degenerate (``repaired``). These are a
reduced-scale analogue built with ``scripts/search_demo.py``, not a
reproduction of any published instance.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from fractions import Fraction
from importlib import resources

from .gadgets import penalty_poly
from .ising import IsingModel, Term, model_from_dict, model_to_dict
from .spectrum import SpectrumSweep, SweepSchedule, min_gap, sweep

DEMO_SCHEDULE = SweepSchedule(lambda_max=8.0, points=200, k=4, refine=12)


@dataclass
class DemoPair:
    base: IsingModel
    biased: IsingModel
    repaired: IsingModel


def attach_orientation_extras(model: IsingModel, qubits, favour: int, b) -> IsingModel:
    """One extra per listed qubit, free to flip only while that qubit points along ``favour``."""
    terms = list(model.terms)
    offset = model.offset
    n = model.num_qubits
    for q in qubits:
        poly = penalty_poly((q,), -favour, n, b)
        terms += poly.terms()
        offset += poly.constant
        n += 1
    return IsingModel(n, tuple(terms), None, offset)


def build_triple(h, J, b, down_extras=(0, 1, 2), up_extras=(0, 1, 2, 0)) -> DemoPair:
    h, J = Fraction(h), Fraction(J)
    terms = [Term((i,), -h) for i in range(3)] + [Term(p, -J) for p in itertools.combinations(range(3), 2)]
    base = IsingModel(3, tuple(terms))
    biased = attach_orientation_extras(base, down_extras, -1, b)
    repaired = attach_orientation_extras(biased, up_extras, +1, b)
    return DemoPair(base, biased, repaired)


def load_demo() -> DemoPair:
    data = json.loads(resources.files("crossfree.data").joinpath("demo_fig3.json").read_text())
    return DemoPair(*(model_from_dict(data[name]) for name in ("base", "biased", "repaired")))


def demo_to_json(pair: DemoPair, meta: dict | None = None) -> str:
    out = {"note": "reduced-scale analogue; parameters chosen by scripts/search_demo.py", **(meta or {})}
    for name in ("base", "biased", "repaired"):
        out[name] = model_to_dict(getattr(pair, name))
    return json.dumps(out, indent=2)


@dataclass
class DemoResult:
    sweeps: dict[str, SpectrumSweep]
    gaps: dict[str, tuple[float, float]]

    @property
    def biased_ratio(self) -> float:
        return self.gaps["biased"][1] / self.gaps["base"][1]

    @property
    def ordering_holds(self) -> bool:
        return self.biased_ratio < 0.1 and self.gaps["repaired"][1] > self.gaps["biased"][1]

    def comparison(self) -> dict:
        return {
            "min_gap": {k: {"lambda_star": lam, "g_min": g} for k, (lam, g) in self.gaps.items()},
            "biased_over_base": self.biased_ratio,
            "repaired_over_biased": self.gaps["repaired"][1] / self.gaps["biased"][1],
            "biased_gap_below_tenth_of_base": self.biased_ratio < 0.1,
            "repaired_gap_above_biased": self.gaps["repaired"][1] > self.gaps["biased"][1],
            "final_cluster_sizes": {k: s.cluster_size for k, s in self.sweeps.items()},
        }


def run_demo(pair: DemoPair | None = None, schedule: SweepSchedule = DEMO_SCHEDULE) -> DemoResult:
    pair = pair or load_demo()
    sweeps = {name: sweep(getattr(pair, name), schedule) for name in ("base", "biased", "repaired")}
    return DemoResult(sweeps, {name: min_gap(s) for name, s in sweeps.items()})
