"""Built-in case registry: declarative data driving each derivation.

A case file pins everything the engine verifies rather than derives: the
frozen top coefficient, the reduction chart, the Casimir level sets with
their solve order, which parameters are promoted to times (and the expected
lambda powers), the Darboux substitution with its sign convention, parameter
constraints that clear denominators, golden Hamiltonians in canonical text,
and the weight-table rows.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from importlib import resources
from typing import Dict, List, Optional, Tuple

CASE_IDS = [
    "sl2n2-I-P2",
    "sl2n2-I-P4",
    "sl2n2-II-P1",
    "sl2n3-I-P22",
    "sl2n3-I-P4h",
    "sl2n3-I-H1120",
    "sl2n3-II-P1h",
    "sl2n3-II-P21",
    "sl2n3-II-Hm1412",
    "so5n1-cosgrove",
]


@dataclass
class FlowDef:
    """One Hamiltonian flow of a case (two-time cases carry two)."""

    name: str
    time: str
    i: int
    k: int
    j: int
    promote_param: str
    promote_l: int
    time_expr: str
    golden: str
    h_scale: Fraction
    h_extra: str
    weight_degree: int


@dataclass
class FailedCondition:
    i: int
    k: int
    j: int
    params: List[str]


@dataclass
class CaseDefinition:
    id: str
    algebra: str
    n: int
    x0: List[Fraction]
    loop_units: List[str]
    chart_order: List[str]
    chart_invariants: Dict[str, Tuple[str, Optional[str]]]
    chart_section: Dict[str, Fraction]
    chart_frozen: Dict[str, Fraction]
    chart_inverse: Dict[str, str]
    chart_new_units: List[str]
    params: List[str]
    extra_params: List[str]
    times: List[str]
    shifts: List[Tuple[str, str, str]]
    leaf_levels: List[dict]
    kappa: int
    flows: List[FlowDef]
    failed_conditions: List[FailedCondition]
    darboux_substitution: Dict[str, str]
    darboux_pairs: List[Tuple[str, str]]
    darboux_sign: int
    darboux_vars: List[str]
    darboux_units: List[str]
    constraints: Dict[str, str]
    drop_vars: List[str]
    weights: Dict[str, int]
    orientation: str
    ode: Optional[dict] = None

    @property
    def phase_dim(self) -> int:
        return 2 * len(self.darboux_pairs)


def _inv_entry(v) -> Tuple[str, Optional[str]]:
    if isinstance(v, list):
        return v[0], v[1]
    return v, None


def parse_case(data: dict) -> CaseDefinition:
    chart = data["chart"]
    flows = [FlowDef(
        name=f["name"],
        time=f["time"],
        i=f["i"], k=f["k"], j=f["j"],
        promote_param=f["promote"]["param"],
        promote_l=f["promote"]["l"],
        time_expr=f["promote"].get("sub", f["time"]),
        golden=f["golden"],
        h_scale=Fraction(f.get("h_scale", "1")),
        h_extra=f.get("h_extra", "0"),
        weight_degree=f["weight_degree"],
    ) for f in data["flows"]]
    failed = [FailedCondition(i=c["i"], k=c["k"], j=c["j"], params=c["params"])
              for c in data.get("failed_conditions", [])]
    return CaseDefinition(
        id=data["id"],
        algebra=data["algebra"],
        n=data["n"],
        x0=[Fraction(x) for x in data["x0"]],
        loop_units=data.get("loop_units", []),
        chart_order=chart["order"],
        chart_invariants={k: _inv_entry(v) for k, v in chart["invariants"].items()},
        chart_section={k: Fraction(v) for k, v in chart["section"].items()},
        chart_frozen={k: Fraction(v) for k, v in chart.get("frozen", {}).items()},
        chart_inverse=chart["inverse"],
        chart_new_units=chart.get("new_units", []),
        params=data.get("params", []),
        extra_params=data.get("extra_params", []),
        times=data.get("times", []),
        shifts=[tuple(s) for s in data.get("shifts", [])],
        leaf_levels=data["leaf"],
        kappa=data["kappa"],
        flows=flows,
        failed_conditions=failed,
        darboux_substitution=data["darboux"].get("substitution", {}),
        darboux_pairs=[tuple(p) for p in data["darboux"]["pairs"]],
        darboux_sign=data["darboux"].get("sign", 1),
        darboux_vars=data["darboux"].get("vars", []),
        darboux_units=data["darboux"].get("units", []),
        constraints=data.get("constraints", {}),
        drop_vars=data.get("drop_vars", []),
        weights=data.get("weights", {}),
        orientation=data.get("orientation", "[A,X]"),
        ode=data.get("ode"),
    )


_CACHE: Dict[str, CaseDefinition] = {}


def load_case(case_id: str) -> CaseDefinition:
    if case_id not in _CACHE:
        try:
            text = resources.files("painlax").joinpath(
                f"cases/{case_id}.json").read_text()
        except FileNotFoundError:
            raise KeyError(f"unknown case {case_id!r}")
        _CACHE[case_id] = parse_case(json.loads(text))
    return _CACHE[case_id]


def list_cases() -> List[str]:
    return list(CASE_IDS)
