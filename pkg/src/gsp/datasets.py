"""Built-in worked examples and JSON file formats.

Formats
-------
model    ``{"universe_size": N, "atoms": [{"sequence": [...], "position": i, "weight": w}, ...]}``
table    ``{"universe_size": N, "rows": [{"assortment": [...], "shares": {"<id>": p, "0": p0}}, ...]}``
dataset  same as table; a row may carry ``"sample_size"``
revenues ``{"<id>": r, ...}``

Every reader validates the model invariants and reports the offending
atom/row in the error message.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any

import numpy as np

from gsp import analysis
from gsp.assortment import RevenueFunction
from gsp.core import ChoiceTable, ConsumerType, GSPModel, ValidationError, choice_table, is_rational
from gsp.estimation import ChoiceDataset, FitResult
from gsp.solver import certificate_is_valid

EXAMPLE_NAMES = ("cameras", "economist", "microwaves", "mcfadden", "herne", "counterexample")
REPRODUCTION_TOL = 1e-12


# -- model ------------------------------------------------------------------

def model_to_dict(model: GSPModel) -> dict[str, Any]:
    return {
        "universe_size": model.universe_size,
        "atoms": [{"sequence": list(t.sequence), "position": t.position, "weight": w}
                  for t, w in model.atoms],
    }


def model_from_dict(data: Any) -> GSPModel:
    _require(data, dict, "model")
    N = _int_field(data, "universe_size", "model")
    atoms_raw = data.get("atoms")
    if not isinstance(atoms_raw, list) or not atoms_raw:
        raise ValidationError("model.atoms: expected a non-empty list")
    atoms = []
    for k, atom in enumerate(atoms_raw):
        where = f"atoms[{k}]"
        _require(atom, dict, where)
        seq = atom.get("sequence")
        if not isinstance(seq, list) or not all(isinstance(x, int) and not isinstance(x, bool) for x in seq):
            raise ValidationError(f"{where}.sequence: expected a list of integers")
        pos = _int_field(atom, "position", where)
        weight = atom.get("weight")
        if not isinstance(weight, (int, float)) or isinstance(weight, bool):
            raise ValidationError(f"{where}.weight: expected a number")
        if any(x < 1 or x > N for x in seq):
            raise ValidationError(f"{where}.sequence: ids must lie in 1..{N}")
        try:
            atoms.append((ConsumerType(tuple(seq), pos), float(weight)))
        except ValidationError as exc:
            raise ValidationError(f"{where}: {exc}") from None
    return GSPModel(tuple(atoms), N)


# -- tables and datasets ------------------------------------------------------

def _rows_from_dict(data: Any, kind: str) -> tuple[int, list, list]:
    _require(data, dict, kind)
    N = _int_field(data, "universe_size", kind)
    rows_raw = data.get("rows")
    if not isinstance(rows_raw, list) or not rows_raw:
        raise ValidationError(f"{kind}.rows: expected a non-empty list")
    rows, sizes = [], []
    for k, row in enumerate(rows_raw):
        where = f"rows[{k}]"
        _require(row, dict, where)
        S = row.get("assortment")
        if not isinstance(S, list) or not all(isinstance(x, int) and not isinstance(x, bool) for x in S):
            raise ValidationError(f"{where}.assortment: expected a list of integers")
        shares = row.get("shares")
        _require(shares, dict, f"{where}.shares")
        parsed = {}
        for key, value in shares.items():
            try:
                x = int(key)
            except ValueError:
                raise ValidationError(f"{where}.shares: key {key!r} is not an alternative id") from None
            if not isinstance(value, (int, float)) or isinstance(value, bool):
                raise ValidationError(f"{where}.shares[{key!r}]: expected a number")
            parsed[x] = float(value)
        rows.append((S, parsed))
        sizes.append(row.get("sample_size"))
    return N, rows, sizes


def table_to_dict(table: ChoiceTable) -> dict[str, Any]:
    return {
        "universe_size": table.universe_size,
        "rows": [{"assortment": list(S), "shares": {str(x): p for x, p in row.items()}}
                 for S, row in table.rows.items()],
    }


def table_from_dict(data: Any) -> ChoiceTable:
    N, rows, _ = _rows_from_dict(data, "table")
    keys = [tuple(sorted(S)) for S, _ in rows]
    if len(set(keys)) != len(keys):
        raise ValidationError("table.rows: an assortment appears twice")
    return ChoiceTable(N, {tuple(S): shares for S, shares in rows})


def dataset_to_dict(dataset: ChoiceDataset) -> dict[str, Any]:
    out = []
    for k, (S, shares) in enumerate(dataset.observations):
        row = {"assortment": list(S), "shares": {str(x): p for x, p in shares.items()}}
        if dataset.sample_sizes is not None and dataset.sample_sizes[k] is not None:
            row["sample_size"] = dataset.sample_sizes[k]
        out.append(row)
    return {"universe_size": dataset.universe_size, "rows": out}


def dataset_from_dict(data: Any) -> ChoiceDataset:
    N, rows, sizes = _rows_from_dict(data, "dataset")
    return ChoiceDataset(N, rows, sizes if any(s is not None for s in sizes) else None)


# -- revenues and fits --------------------------------------------------------

def revenue_to_dict(revenue: RevenueFunction) -> dict[str, float]:
    return {str(k): v for k, v in revenue.values.items()}


def revenue_from_dict(data: Any, universe_size: int | None = None) -> RevenueFunction:
    _require(data, dict, "revenues")
    vals = {}
    for key, value in data.items():
        try:
            k = int(key)
        except ValueError:
            raise ValidationError(f"revenues: key {key!r} is not an alternative id") from None
        if not isinstance(value, (int, float)) or isinstance(value, bool):
            raise ValidationError(f"revenues[{key!r}]: expected a number")
        vals[k] = value
    if universe_size is not None:
        missing = sorted(set(range(1, universe_size + 1)) - set(vals))
        if missing:
            raise ValidationError(f"revenues: no revenue for alternative(s) {missing}")
    return RevenueFunction(vals)


def fit_result_to_dict(result: FitResult) -> dict[str, Any]:
    out = model_to_dict(result.model)
    out["diagnostics"] = {
        "residual": result.residual_norm,
        "irrational_mass": result.irrational_mass,
        "iterations": result.iterations,
        "support_size": result.support_size,
        "stop_reason": result.stop_reason,
    }
    return out


# -- files ---------------------------------------------------------------------

def read_json(path) -> Any:
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: invalid JSON ({exc})") from None


def write_json(path, data) -> None:
    Path(path).write_text(dumps(data) + "\n", encoding="utf-8")


def dumps(data) -> str:
    return json.dumps(data, indent=2)


def read_model(path) -> GSPModel:
    return model_from_dict(read_json(path))


def read_table(path) -> ChoiceTable:
    return table_from_dict(read_json(path))


def read_dataset(path) -> ChoiceDataset:
    return dataset_from_dict(read_json(path))


def read_revenues(path, universe_size: int | None = None) -> RevenueFunction:
    return revenue_from_dict(read_json(path), universe_size)


def _require(value, kind, where):
    if not isinstance(value, kind):
        raise ValidationError(f"{where}: expected a JSON {'object' if kind is dict else kind.__name__}")


def _int_field(data: dict, key: str, where: str) -> int:
    value = data.get(key)
    if not isinstance(value, int) or isinstance(value, bool):
        raise ValidationError(f"{where}.{key}: expected an integer")
    return value


# -- built-in examples --------------------------------------------------------

@dataclass
class PaperExample:
    name: str
    dataset: ChoiceDataset
    reference_model: GSPModel | None
    reference_table: ChoiceTable | None
    notes: str
    labels: dict[str, str] = field(default_factory=dict)
    expected: dict[str, Any] = field(default_factory=dict)


def fixture_text(name: str) -> str:
    return resources.files("gsp").joinpath("data").joinpath(f"{name}.json").read_text(encoding="utf-8")


def load_fixture(name: str) -> dict[str, Any]:
    return json.loads(fixture_text(name))


def load_example(name: str) -> PaperExample:
    if name not in EXAMPLE_NAMES:
        raise ValidationError(f"unknown example {name!r}; choose from {', '.join(EXAMPLE_NAMES)}")
    raw = load_fixture(name)
    model = raw.get("reference_model")
    table = raw.get("reference_table")
    return PaperExample(
        name=name,
        dataset=dataset_from_dict(raw["dataset"]),
        reference_model=None if model is None else model_from_dict(model),
        reference_table=None if table is None else table_from_dict(table),
        notes=raw.get("notes", ""),
        labels=raw.get("labels", {}),
        expected=raw.get("expected", {}),
    )


def ram_separation_model() -> GSPModel:
    """Four-alternative GSP whose precedence relation has a cycle."""
    return model_from_dict(load_fixture("gsp_not_ram")["model"])


def tightness_instance() -> tuple[GSPModel, RevenueFunction]:
    """Single type ((1,2,3),2) with r = (1, 1, 2)."""
    raw = load_fixture("worst_case")
    return model_from_dict(raw["model"]), revenue_from_dict(raw["revenues"])


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    detail: str = ""


def _close(a: float, b: float, tol: float = REPRODUCTION_TOL) -> bool:
    return abs(a - b) <= tol


def verify_example(ex: PaperExample) -> list[Check]:
    """Recompute every stored number of an example from first principles."""
    exp = ex.expected
    checks: list[Check] = []
    observed = ex.dataset.to_table()
    if ex.reference_model is not None:
        m = ex.reference_model
        gap = observed.max_abs_diff(choice_table(m, observed.assortments))
        checks.append(Check("model reproduces table", gap <= REPRODUCTION_TOL, f"max gap {gap:.3g}"))
        mass = m.irrational_mass
        checks.append(Check("irrational mass", _close(mass, exp["irrational_mass"]),
                            f"{mass:.12g} vs {exp['irrational_mass']}"))
        n_irr = sum(1 for t in m.types if not is_rational(t))
        checks.append(Check("support size", len(m) == exp["support_size"]
                            and n_irr == exp["irrational_types"],
                            f"{len(m)} types, {n_irr} irrational"))
    if "regularity_violations" in exp:
        found = {(v.alternative, v.smaller_set, v.larger_set): (v.p_small, v.p_large)
                 for v in analysis.check_regularity(observed)}
        want = {(x, tuple(s), tuple(l)): (ps, pl) for x, s, l, ps, pl in exp["regularity_violations"]}
        ok = set(found) == set(want) and all(
            _close(found[k][0], want[k][0]) and _close(found[k][1], want[k][1]) for k in want)
        checks.append(Check("regularity violations", ok, f"{len(found)} found"))
    if ex.reference_model is not None and observed.is_complete():
        verdict = analysis.gsp_membership(observed)
        gap = (observed.max_abs_diff(choice_table(verdict.model, observed.assortments))
               if verdict.in_gsp else math.inf)
        checks.append(Check("GSP membership", verdict.in_gsp and gap <= 1e-9,
                            f"{verdict.status}, witness gap {gap:.3g}"))
    if "in_gsp" in exp:
        table = ex.reference_table
        mono = analysis.check_demand_monotonicity(table)
        checks.append(Check("monotone total demand", not mono, f"{len(mono)} violating pairs"))
        verdict = analysis.gsp_membership(table)
        ok = verdict.in_gsp == exp["in_gsp"]
        if verdict.status == analysis.NOT_IN_GSP:
            ok = ok and certificate_is_valid(verdict.problem.matrix, verdict.problem.rhs, verdict.certificate)
        checks.append(Check("GSP membership", ok, verdict.status))
        ram = analysis.ram_membership(table)
        edges = sorted(map(list, ram.relation.edges))
        checks.append(Check("RAM membership", ram.is_ram == exp["is_ram"] and edges == exp["ram_edges"],
                            f"is_ram={ram.is_ram}, edges={edges}"))
        system = analysis.counterexample_system()
        cert = np.array(exp["reduced_certificate"], dtype=float)
        checks.append(Check("reduced-system certificate",
                            certificate_is_valid(system.matrix, system.rhs, cert),
                            f"y = {exp['reduced_certificate']}"))
    return checks


def verify_all() -> dict[str, list[Check]]:
    return {name: verify_example(load_example(name)) for name in EXAMPLE_NAMES}


def export_examples(directory) -> list[Path]:
    """Write each example as separate dataset/model/table JSON files."""
    out_dir = Path(directory)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for name in EXAMPLE_NAMES:
        ex = load_example(name)
        parts = {"dataset": dataset_to_dict(ex.dataset)}
        if ex.reference_model is not None:
            parts["model"] = model_to_dict(ex.reference_model)
        if ex.reference_table is not None:
            parts["table"] = table_to_dict(ex.reference_table)
        for kind, data in parts.items():
            path = out_dir / f"{name}_{kind}.json"
            write_json(path, data)
            written.append(path)
    model = ram_separation_model()
    path = out_dir / "gsp_not_ram_model.json"
    write_json(path, model_to_dict(model))
    written.append(path)
    path = out_dir / "gsp_not_ram_table.json"
    write_json(path, table_to_dict(choice_table(model, _all(model.universe_size))))
    written.append(path)
    model, revenue = tightness_instance()
    for kind, data in (("model", model_to_dict(model)), ("revenues", revenue_to_dict(revenue))):
        path = out_dir / f"worst_case_{kind}.json"
        write_json(path, data)
        written.append(path)
    return written


def _all(N):
    from gsp.core import all_subsets
    return all_subsets(N)
