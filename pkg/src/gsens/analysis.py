"""Model files, sensitivity sweeps over factor grids, and report emission.

The model file is JSON with variable names everywhere (indices never appear
in files):

    {
      "variables": ["Y1", ...],
      "mean": [0, ...],                  # optional, defaults to zero
      "covariance": [[...], ...],        # optional when "dag" is present
      "ci": [{"A": [names], "B": [names], "C": [names]}, ...],   # optional
      "dag": {                           # optional
        "order": [names],
        "edges": [{"from": name, "to": name, "beta": real}, ...],
        "intercepts": {name: real},      # optional, default 0
        "cond_vars": {name: real}        # optional, default 1
      }
    }

When both "dag" and "covariance" are given they must agree to 1e-9
relative. Explicit "ci" wins over DAG-derived statements.

Sweeps evaluate, per grid factor and scheme, the perturbed covariance, its
admissibility (PSD with positive determinant; KL is reported only for
admissible rows), the Frobenius norm, and a re-checked preservation flag.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .cimodel import CIStatement, model_holds
from .covariation import PerturbationPlan, Scheme, Variation, build_plan, compose
from .divergence import frobenius, frobenius_mp, kl_additive, kl_mp
from .errors import (
    GsensError,
    InadmissibleError,
    ModelFormatError,
    ModelPreconditionError,
    SingularMatrixError,
)
from .graphmodels import GaussianDag, GraphModelError, dag_ci_statements, dag_to_gaussian
from .matcore import DEFAULT_TOL, TolerancePolicy, is_psd

# Relative agreement required between a file's covariance and its DAG's.
DAG_COV_AGREE_TOL = 1e-9

CSV_COLUMNS = ("delta1", "delta2", "scheme", "kl", "frobenius", "admissible", "preserving")


@dataclass(frozen=True, eq=False)
class Model:
    """A loaded model: named variables, joint moments, CI statements and the
    optional DAG they came from."""

    names: tuple[str, ...]
    mean: np.ndarray
    covariance: np.ndarray
    statements: tuple[CIStatement, ...]
    dag: GaussianDag | None = None

    @property
    def n(self) -> int:
        return len(self.names)

    def index(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise KeyError(f"unknown variable {name!r}; model has {', '.join(self.names)}") from None

    def resolve_position(self, position) -> tuple[int, int]:
        """(i, j) from a 'name,name' / '2,1' string or a pair; numeric entries
        are 1-based."""
        if isinstance(position, str):
            parts = [p.strip() for p in position.split(",")]
        else:
            parts = list(position)
        if len(parts) != 2:
            raise ValueError(f"position needs exactly two components, got {position!r}")
        out = []
        for p in parts:
            if isinstance(p, str) and not p.lstrip("+-").isdigit():
                out.append(self.index(p))
            else:
                k = int(p)
                if not 1 <= k <= self.n:
                    raise IndexError(f"position index {k} out of range 1..{self.n}")
                out.append(k - 1)
        return out[0], out[1]

    def resolve_names(self, names: Sequence[str]) -> tuple[int, ...]:
        return tuple(self.index(v) for v in names)


def _req(obj: dict, key: str, where: str):
    if key not in obj:
        raise ModelFormatError(f"{where}: missing required field {key!r}")
    return obj[key]


def _reject_unknown(obj: dict, allowed: set[str], where: str):
    extra = set(obj) - allowed
    if extra:
        raise ModelFormatError(f"{where}: unknown field(s) {sorted(extra)}")


def _num(value, where: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ModelFormatError(f"{where}: expected a number, got {value!r}")
    return float(value)


def _name_list(value, names: Sequence[str], where: str) -> tuple[int, ...]:
    if not isinstance(value, list):
        raise ModelFormatError(f"{where}: expected a list of variable names")
    out = []
    for k, v in enumerate(value):
        if not isinstance(v, str) or v not in names:
            raise ModelFormatError(f"{where}[{k}]: unknown variable {v!r}")
        out.append(names.index(v))
    return tuple(out)


def _parse_ci(raw, names: Sequence[str]) -> tuple[CIStatement, ...]:
    if not isinstance(raw, list):
        raise ModelFormatError('"ci" must be a list of statements')
    statements = []
    for k, item in enumerate(raw):
        where = f"ci[{k}]"
        if not isinstance(item, dict):
            raise ModelFormatError(f"{where}: expected an object with A/B/C lists")
        _reject_unknown(item, {"A", "B", "C"}, where)
        left = _name_list(_req(item, "A", where), names, f"{where}.A")
        right = _name_list(_req(item, "B", where), names, f"{where}.B")
        given = _name_list(item.get("C", []), names, f"{where}.C")
        try:
            statements.append(CIStatement(left=left, right=right, given=given))
        except ValueError as e:
            raise ModelFormatError(f"{where}: {e}") from None
    return tuple(statements)


def _parse_dag(raw, names: Sequence[str]) -> GaussianDag:
    if not isinstance(raw, dict):
        raise ModelFormatError('"dag" must be an object')
    _reject_unknown(raw, {"order", "edges", "intercepts", "cond_vars"}, "dag")
    n = len(names)
    order = _name_list(_req(raw, "order", "dag"), names, "dag.order")
    if sorted(order) != list(range(n)):
        raise ModelFormatError("dag.order must list every variable exactly once")
    edges = []
    raw_edges = _req(raw, "edges", "dag")
    if not isinstance(raw_edges, list):
        raise ModelFormatError("dag.edges must be a list")
    for k, e in enumerate(raw_edges):
        where = f"dag.edges[{k}]"
        if not isinstance(e, dict):
            raise ModelFormatError(f"{where}: expected an object")
        _reject_unknown(e, {"from", "to", "beta"}, where)
        (src,) = _name_list([_req(e, "from", where)], names, f"{where}.from")
        (dst,) = _name_list([_req(e, "to", where)], names, f"{where}.to")
        edges.append((src, dst, _num(_req(e, "beta", where), f"{where}.beta")))

    def per_vertex(key: str, default: float) -> tuple[float, ...]:
        table = raw.get(key, {})
        if not isinstance(table, dict):
            raise ModelFormatError(f"dag.{key} must map variable names to numbers")
        vals = [default] * n
        for name, v in table.items():
            if name not in names:
                raise ModelFormatError(f"dag.{key}: unknown variable {name!r}")
            vals[names.index(name)] = _num(v, f"dag.{key}[{name!r}]")
        return tuple(vals)

    try:
        return GaussianDag(
            n=n,
            edges=tuple(edges),
            order=order,
            intercepts=per_vertex("intercepts", 0.0),
            cond_vars=per_vertex("cond_vars", 1.0),
        )
    except GraphModelError as e:
        raise ModelFormatError(f"dag: {e}") from None


def load_model(path) -> Model:
    """Parse and validate a model file; see the module docstring for the
    schema. Asymmetric covariances and unknown variable names are rejected."""
    path = Path(path)
    try:
        raw = json.loads(path.read_text())
    except FileNotFoundError:
        raise ModelFormatError(f"{path}: no such file") from None
    except json.JSONDecodeError as e:
        raise ModelFormatError(f"{path}:{e.lineno}:{e.colno}: {e.msg}") from None
    if not isinstance(raw, dict):
        raise ModelFormatError(f"{path}: top level must be an object")
    _reject_unknown(raw, {"variables", "mean", "covariance", "ci", "dag"}, str(path))

    names_raw = _req(raw, "variables", str(path))
    if (
        not isinstance(names_raw, list)
        or not names_raw
        or not all(isinstance(v, str) and v for v in names_raw)
    ):
        raise ModelFormatError('"variables" must be a non-empty list of names')
    if len(set(names_raw)) != len(names_raw):
        raise ModelFormatError('"variables" contains duplicates')
    names = tuple(names_raw)
    n = len(names)

    cov = None
    if "covariance" in raw:
        rows = raw["covariance"]
        if not isinstance(rows, list) or len(rows) != n:
            raise ModelFormatError(f'"covariance" must be a {n}x{n} array')
        for i, row in enumerate(rows):
            if not isinstance(row, list) or len(row) != n:
                raise ModelFormatError(f"covariance[{i}]: expected {n} entries")
            for j, v in enumerate(row):
                _num(v, f"covariance[{i}][{j}]")
        cov = np.array(rows, dtype=float)
        if not np.array_equal(cov, cov.T):
            i, j = np.argwhere(cov != cov.T)[0]
            raise ModelFormatError(
                f"covariance is asymmetric at ({names[i]},{names[j]}): "
                f"{cov[i, j]!r} vs {cov[j, i]!r}"
            )

    mean = None
    if "mean" in raw:
        mraw = raw["mean"]
        if not isinstance(mraw, list) or len(mraw) != n:
            raise ModelFormatError(f'"mean" must be a list of {n} numbers')
        mean = np.array([_num(v, f"mean[{k}]") for k, v in enumerate(mraw)], dtype=float)

    dag = _parse_dag(raw["dag"], names) if "dag" in raw else None
    if cov is None and dag is None:
        raise ModelFormatError('model needs "covariance", "dag", or both')

    if dag is not None:
        dag_mean, dag_cov = dag_to_gaussian(dag)
        if cov is not None:
            scale = max(1.0, float(np.abs(cov).max()))
            gap = float(np.abs(dag_cov - cov).max())
            if gap > DAG_COV_AGREE_TOL * scale:
                raise ModelFormatError(
                    f"covariance and dag disagree: max difference {gap:.3g} "
                    f"exceeds {DAG_COV_AGREE_TOL:g} relative"
                )
        else:
            cov = dag_cov
        if mean is not None:
            scale = max(1.0, float(np.abs(mean).max()))
            if float(np.abs(dag_mean - mean).max()) > DAG_COV_AGREE_TOL * scale:
                raise ModelFormatError("mean and dag intercepts disagree")
        else:
            mean = dag_mean
    if mean is None:
        mean = np.zeros(n)

    if "ci" in raw:
        statements = _parse_ci(raw["ci"], names)
    elif dag is not None:
        statements = dag_ci_statements(dag)
    else:
        statements = ()
    for k, s in enumerate(statements):
        if s.max_index >= n:
            raise ModelFormatError(f"ci[{k}]: index out of range")

    return Model(names=names, mean=mean, covariance=cov, statements=statements, dag=dag)


def model_to_dict(model: Model) -> dict:
    """JSON-ready form of a model (names, mean, covariance, ci)."""
    out = {
        "variables": list(model.names),
        "mean": [float(v) for v in model.mean],
        "covariance": [[float(v) for v in row] for row in model.covariance],
        "ci": [
            {
                "A": [model.names[i] for i in s.left],
                "B": [model.names[i] for i in s.right],
                "C": [model.names[i] for i in s.given],
            }
            for s in model.statements
        ],
    }
    return out


@dataclass(frozen=True)
class SweepRecord:
    """One grid point of a sweep. kl is present exactly when the row is
    admissible (perturbed matrix PSD with positive determinant); frobenius is
    absent only when the scheme itself failed to construct."""

    delta1: float
    delta2: float | None
    scheme: str
    kl: float | None
    frobenius: float | None
    admissible: bool
    preserving: bool
    error: str | None = None


def _normalize_schemes(schemes) -> tuple[tuple[str, Scheme | None], ...]:
    """Each entry becomes (label, Scheme) with label "standard" mapping to
    the additive method (Scheme None)."""
    out = []
    for s in schemes:
        if isinstance(s, Scheme):
            out.append((s.kind, s))
        elif isinstance(s, str):
            if s == "standard":
                out.append(("standard", None))
            else:
                out.append((s, Scheme(s)))
        elif isinstance(s, dict):
            kind = s.get("kind")
            if kind == "standard":
                out.append(("standard", None))
                continue
            if kind not in ("total", "partial", "row", "column", "none"):
                raise ValueError(f"unknown scheme kind {kind!r}")
            subset = s.get("E") if kind == "row" else s.get("F") if kind == "column" else None
            idx = s.get("statement_index")
            out.append(
                (
                    kind,
                    Scheme(
                        kind,
                        None if subset is None else tuple(subset),
                        None if idx is None else int(idx),
                    ),
                )
            )
        else:
            raise ValueError(f"cannot interpret scheme entry {s!r}")
    return tuple(out)


def _as_grid(deltas) -> np.ndarray:
    grid = np.asarray(list(deltas), dtype=float)
    if grid.size == 0:
        raise ValueError("empty factor grid")
    if np.any(grid == 0):
        raise ValueError("factor grids exclude 0")
    return np.sort(grid)


def _check_model(model: Model, tol: TolerancePolicy):
    before = model_holds(model.covariance, model.statements, tol)
    if not before.holds:
        k, minor = before.failures[0]
        raise ModelPreconditionError(
            f"model covariance does not satisfy its CI statements: statement "
            f"{k + 1} fails with {minor.describe(model.names)}"
        )


def _additive_target(cov: np.ndarray, positions, deltas) -> tuple[np.ndarray, np.ndarray]:
    shift = np.zeros_like(cov)
    for (i, j), d in zip(positions, deltas):
        shift[i, j] += (d - 1.0) * cov[i, j]
        if i != j:
            shift[j, i] += (d - 1.0) * cov[j, i]
    return shift, cov + shift


def _finish_record(
    model: Model,
    deltas: tuple[float, float | None],
    label: str,
    target: np.ndarray,
    frob: float,
    kl_thunk,
    tol: TolerancePolicy,
) -> SweepRecord:
    admissible = is_psd(target, tol.rel)
    kl_val = None
    if admissible:
        try:
            kl_val = kl_thunk()
        except (InadmissibleError, SingularMatrixError):
            # PSD boundary: zero determinant makes the log term infinite
            admissible = False
    preserving = model_holds(target, model.statements, tol).holds
    return SweepRecord(
        delta1=deltas[0],
        delta2=deltas[1],
        scheme=label,
        kl=kl_val,
        frobenius=frob,
        admissible=admissible,
        preserving=preserving,
    )


def _eval_cell(
    model: Model,
    positions: tuple[tuple[int, int], ...],
    deltas: tuple[float, ...],
    label: str,
    scheme: Scheme | None,
    tol: TolerancePolicy,
) -> SweepRecord:
    cov = model.covariance
    d2 = deltas[1] if len(deltas) == 2 else None
    if scheme is None:  # standard additive
        shift, target = _additive_target(cov, positions, deltas)
        return _finish_record(
            model,
            (deltas[0], d2),
            label,
            target,
            frobenius(cov, target),
            lambda: kl_additive(cov, shift),
            tol,
        )
    try:
        plan: PerturbationPlan | None = None
        for (i, j), d in zip(positions, deltas):
            p = build_plan(Variation(model.n, ((i, j, d),)), scheme, model.statements)
            plan = p if plan is None else compose(plan, p)
    except GsensError as e:
        return SweepRecord(
            delta1=deltas[0],
            delta2=d2,
            scheme=label,
            kl=None,
            frobenius=None,
            admissible=False,
            preserving=False,
            error=str(e),
        )
    target = plan.apply(cov)
    return _finish_record(
        model,
        (deltas[0], d2),
        label,
        target,
        frobenius_mp(cov, plan),
        lambda: kl_mp(cov, plan),
        tol,
    )


def one_way_sweep(
    model: Model,
    position: tuple[int, int],
    deltas,
    schemes=("standard", "total", "partial", "row", "column"),
    tol: TolerancePolicy = DEFAULT_TOL,
) -> list[SweepRecord]:
    """Vary one covariance entry over a factor grid under each scheme.

    Rows are ordered by factor ascending, schemes in declared order. Scheme
    construction failures become per-row error records, never exceptions.
    """
    _check_model(model, tol)
    i, j = position
    if not (0 <= i < model.n and 0 <= j < model.n):
        raise IndexError(f"position ({i + 1},{j + 1}) out of range for dimension {model.n}")
    grid = _as_grid(deltas)
    specs = _normalize_schemes(schemes)
    return [
        _eval_cell(model, ((i, j),), (float(d),), label, scheme, tol)
        for d in grid
        for label, scheme in specs
    ]


def two_way_sweep(
    model: Model,
    positions: tuple[tuple[int, int], tuple[int, int]],
    deltas1,
    deltas2=None,
    schemes=("standard", "total", "partial", "row", "column"),
    tol: TolerancePolicy = DEFAULT_TOL,
) -> list[SweepRecord]:
    """Vary two entries over a factor grid; model-preserving schemes perturb
    each position separately and compose the two plans."""
    _check_model(model, tol)
    (i1, j1), (i2, j2) = positions
    if (min(i1, j1), max(i1, j1)) == (min(i2, j2), max(i2, j2)):
        raise ValueError("two-way sweep needs two distinct positions")
    g1 = _as_grid(deltas1)
    g2 = g1 if deltas2 is None else _as_grid(deltas2)
    specs = _normalize_schemes(schemes)
    return [
        _eval_cell(model, ((i1, j1), (i2, j2)), (float(d1), float(d2)), label, scheme, tol)
        for d1 in g1
        for d2 in g2
        for label, scheme in specs
    ]


@dataclass(frozen=True)
class RegionSummary:
    """Admissibility masks per scheme, with the widest admissible factor
    interval around 1 (one-way) or admissible cell counts (two-way)."""

    two_way: bool
    masks: dict[str, list[bool]] = field(default_factory=dict)
    intervals: dict[str, tuple[float, float] | None] = field(default_factory=dict)
    cell_counts: dict[str, tuple[int, int]] = field(default_factory=dict)


def admissible_region(records: Sequence[SweepRecord]) -> RegionSummary:
    """Extract per-scheme admissibility structure from sweep records."""
    two_way = any(r.delta2 is not None for r in records)
    schemes = []
    for r in records:
        if r.scheme not in schemes:
            schemes.append(r.scheme)
    masks: dict[str, list[bool]] = {}
    intervals: dict[str, tuple[float, float] | None] = {}
    counts: dict[str, tuple[int, int]] = {}
    for s in schemes:
        rows = [r for r in records if r.scheme == s]
        masks[s] = [r.admissible for r in rows]
        counts[s] = (sum(r.admissible for r in rows), len(rows))
        if not two_way:
            rows = sorted(rows, key=lambda r: r.delta1)
            best = None
            run: list[SweepRecord] = []
            for r in rows + [None]:
                if r is not None and r.admissible:
                    run.append(r)
                    continue
                if run and run[0].delta1 <= 1.0 <= run[-1].delta1:
                    best = (run[0].delta1, run[-1].delta1)
                run = []
            intervals[s] = best
    return RegionSummary(two_way=two_way, masks=masks, intervals=intervals, cell_counts=counts)


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def emit(records: Sequence[SweepRecord], fmt: str = "csv", path=None) -> str:
    """Serialize records as CSV (fixed columns) or JSON; returns the text and
    writes it to path when given."""
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for r in records:
            writer.writerow(
                [
                    _fmt(r.delta1),
                    _fmt(r.delta2),
                    r.scheme,
                    _fmt(r.kl),
                    _fmt(r.frobenius),
                    _fmt(r.admissible),
                    _fmt(r.preserving),
                ]
            )
        text = buf.getvalue()
    elif fmt == "json":
        text = (
            json.dumps(
                [
                    {
                        "delta1": r.delta1,
                        "delta2": r.delta2,
                        "scheme": r.scheme,
                        "kl": r.kl,
                        "frobenius": r.frobenius,
                        "admissible": r.admissible,
                        "preserving": r.preserving,
                        "error": r.error,
                    }
                    for r in records
                ],
                indent=2,
            )
            + "\n"
        )
    else:
        raise ValueError(f"unknown output format {fmt!r}; expected csv or json")
    if path is not None:
        Path(path).write_text(text)
    return text


@dataclass(frozen=True)
class SweepConfig:
    """Parsed sweep configuration file."""

    model_path: Path
    positions: tuple[tuple[str, str], ...]
    deltas1: tuple[float, ...]
    deltas2: tuple[float, ...] | None
    schemes: tuple
    fmt: str
    output: str | None


def _parse_grid(raw, where: str) -> tuple[float, ...]:
    if isinstance(raw, list):
        return tuple(_num(v, f"{where}[{k}]") for k, v in enumerate(raw))
    if isinstance(raw, dict):
        _reject_unknown(raw, {"min", "max", "step"}, where)
        lo = _num(_req(raw, "min", where), f"{where}.min")
        hi = _num(_req(raw, "max", where), f"{where}.max")
        step = _num(_req(raw, "step", where), f"{where}.step")
        if step <= 0:
            raise ModelFormatError(f"{where}.step must be > 0")
        if hi < lo:
            raise ModelFormatError(f"{where}: max < min")
        count = int(round((hi - lo) / step)) + 1
        return tuple(round(lo + k * step, 12) for k in range(count) if lo + k * step <= hi + 1e-12)
    raise ModelFormatError(f"{where}: expected a list or a min/max/step object")


def load_sweep_config(path) -> SweepConfig:
    """Parse a sweep config file; the model path is resolved relative to the
    config file's directory."""
    path = Path(path)
    try:
        raw = json.loads(path.read_text())
    except FileNotFoundError:
        raise ModelFormatError(f"{path}: no such file") from None
    except json.JSONDecodeError as e:
        raise ModelFormatError(f"{path}:{e.lineno}:{e.colno}: {e.msg}") from None
    if not isinstance(raw, dict):
        raise ModelFormatError(f"{path}: top level must be an object")
    _reject_unknown(
        raw, {"model", "positions", "deltas", "deltas2", "schemes", "format", "output"}, str(path)
    )
    model_rel = _req(raw, "model", str(path))
    if not isinstance(model_rel, str):
        raise ModelFormatError('"model" must be a path string')
    positions_raw = _req(raw, "positions", str(path))
    if (
        not isinstance(positions_raw, list)
        or not 1 <= len(positions_raw) <= 2
        or not all(isinstance(p, list) and len(p) == 2 for p in positions_raw)
    ):
        raise ModelFormatError('"positions" must be one or two [name, name] pairs')
    deltas1 = _parse_grid(_req(raw, "deltas", str(path)), "deltas")
    deltas2 = _parse_grid(raw["deltas2"], "deltas2") if "deltas2" in raw else None
    schemes = raw.get("schemes", ["standard", "total", "partial", "row", "column"])
    try:
        _normalize_schemes(schemes)
    except (ValueError, GsensError) as e:
        raise ModelFormatError(f"schemes: {e}") from None
    fmt = raw.get("format", "csv")
    if fmt not in ("csv", "json"):
        raise ModelFormatError(f'"format" must be csv or json, got {fmt!r}')
    output = raw.get("output")
    if output is not None and not isinstance(output, str):
        raise ModelFormatError('"output" must be a path string')
    return SweepConfig(
        model_path=(path.parent / model_rel).resolve(),
        positions=tuple((p[0], p[1]) for p in positions_raw),
        deltas1=deltas1,
        deltas2=deltas2,
        schemes=tuple(schemes),
        fmt=fmt,
        output=output,
    )
