"""Monte Carlo grids: replicate scenarios, score estimators, aggregate.

A grid is described by an INI file::

    [grid]
    replications = 100
    base_seed = 2025
    alpha = 0.05
    estimators = naive, or_only, ipw_only, ds3

    [scenario:fig1_mean]
    n = 100
    N = 1000
    p = 10
    k = 2
    propensity_scenario = decaying_offset
    target = mean
    projection_model = ols
    propensity_model = offset_logistic

Keys not listed in ``GRID_KEYS`` / ``SCENARIO_KEYS`` are rejected.  Every
replication draws one dataset (seed from :func:`ds3.simgen.replication_seed`),
cross-fits the nuisances once and scores every estimator kind on it, so the
estimators are compared on paired data.
"""

from __future__ import annotations

import configparser
import csv
import io
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .engine import EstimationConfig, cross_fit, estimate_from_predictions
from .errors import ConfigError, DS3Error, SchemaError
from .inference import hotelling_test
from .simgen import ScenarioConfig, generate, replication_seed, true_propensity, true_theta
from .targets import EstimatorKind, TargetKind

__all__ = [
    "ScenarioSpec",
    "GridSpec",
    "CellResult",
    "load_grid",
    "parse_grid",
    "run_replication",
    "run_grid",
    "aggregate",
    "results_csv",
    "aggregate_csv",
    "read_results",
    "render_markdown",
]

ESTIMATORS = tuple(e.value for e in EstimatorKind)
BASE_COLUMNS = ["scenario_id", "estimator", "seed", "status", "rmse", "covered",
                "n_labeled_realized", "overlap_index"]

GRID_KEYS = {"replications", "base_seed", "alpha", "estimators"}
SCENARIO_KEYS = {
    "n", "N", "p", "k", "propensity_scenario", "target", "projection_model",
    "propensity_model", "j_folds", "include_intercept", "propensity_floor",
    "literal_hotelling", "scaled_hotelling",
}


@dataclass(frozen=True)
class ScenarioSpec:
    """One data-generating scenario plus the nuisance configuration used on it."""

    scenario_id: str
    scenario: ScenarioConfig
    target: str = "mean"
    projection_model: str = "ols"
    propensity_model: str = "offset_logistic"
    j_folds: int = 5
    include_intercept: bool = True
    propensity_floor: float | None = None
    literal_hotelling: bool = False
    scaled_hotelling: bool = True

    def estimation_config(self, seed: int, alpha: float) -> EstimationConfig:
        return EstimationConfig(
            target=self.target, projection_model=self.projection_model,
            propensity_model=self.propensity_model, j_folds=self.j_folds, seed=seed,
            propensity_floor=self.propensity_floor, alpha=alpha,
            include_intercept=self.include_intercept,
            literal_hotelling=self.literal_hotelling,
        )

    @property
    def q(self) -> int:
        return self.scenario.k if self.target == "mean" else self.scenario.p


@dataclass(frozen=True)
class GridSpec:
    scenarios: tuple[ScenarioSpec, ...]
    estimators: tuple[str, ...] = ESTIMATORS
    replications: int = 100
    base_seed: int = 0
    alpha: float = 0.05

    def __post_init__(self):
        if self.replications < 1:
            raise ConfigError("replications must be at least 1")
        if not self.scenarios:
            raise ConfigError("grid needs at least one scenario")
        ids = [s.scenario_id for s in self.scenarios]
        if len(set(ids)) != len(ids):
            raise ConfigError("scenario ids must be unique")
        for e in self.estimators:
            if e not in ESTIMATORS:
                raise ConfigError(f"unknown estimator {e!r}")
        if not 0 < self.alpha < 1:
            raise ConfigError("alpha must be in (0, 1)")

    @property
    def max_q(self) -> int:
        return max(s.q for s in self.scenarios)


@dataclass
class CellResult:
    """Replication rows and summary statistics for one (scenario, estimator) cell."""

    scenario_id: str
    estimator: str
    rows: list[dict] = field(default_factory=list)
    replications: int = 0
    completed: int = 0
    median_rmse: float = float("nan")
    iqr_rmse: float = float("nan")
    coverage: float = float("nan")
    coverage_se: float = float("nan")


# -- configuration ---------------------------------------------------------

def _bool(value: str, key: str) -> bool:
    v = value.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"{key}: expected a boolean, got {value!r}")


def _num(value: str, key: str, kind=int):
    try:
        return kind(value)
    except ValueError:
        raise ConfigError(f"{key}: cannot parse {value!r}") from None


def parse_grid(text: str) -> GridSpec:
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str  # n and N are different keys
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"grid config: {exc}") from None

    if "grid" not in parser:
        raise ConfigError("grid config needs a [grid] section")
    g = parser["grid"]
    unknown = set(g) - GRID_KEYS
    if unknown:
        raise ConfigError(f"unknown [grid] keys: {sorted(unknown)}")
    estimators = tuple(e.strip() for e in g.get("estimators", ",".join(ESTIMATORS)).split(",") if e.strip())

    scenarios = []
    for name in parser.sections():
        if name == "grid":
            continue
        if not name.startswith("scenario:"):
            raise ConfigError(f"unexpected section [{name}]")
        sid = name.split(":", 1)[1].strip()
        s = parser[name]
        unknown = set(s) - SCENARIO_KEYS
        if unknown:
            raise ConfigError(f"[{name}] unknown keys: {sorted(unknown)}")
        for required in ("n", "N"):
            if required not in s:
                raise ConfigError(f"[{name}] needs key {required!r}")
        target = s.get("target", "mean")
        if target not in (t.value for t in TargetKind):
            raise ConfigError(f"[{name}] unknown target {target!r}")
        k_default = "2" if target == "mean" else "1"
        scen = ScenarioConfig(
            n=_num(s["n"], "n"), N=_num(s["N"], "N"),
            p=_num(s.get("p", "10"), "p"), k=_num(s.get("k", k_default), "k"),
            propensity_scenario=s.get("propensity_scenario", "decaying_offset"),
        )
        if target == "ols_coef" and scen.k != 1:
            raise ConfigError(f"[{name}] ols_coef target needs k = 1")
        floor = s.get("propensity_floor")
        spec = ScenarioSpec(
            scenario_id=sid, scenario=scen, target=target,
            projection_model=s.get("projection_model", "ols"),
            propensity_model=s.get("propensity_model", "offset_logistic"),
            j_folds=_num(s.get("j_folds", "5"), "j_folds"),
            include_intercept=_bool(s.get("include_intercept", "true"), "include_intercept"),
            propensity_floor=None if floor is None else _num(floor, "propensity_floor", float),
            literal_hotelling=_bool(s.get("literal_hotelling", "false"), "literal_hotelling"),
            scaled_hotelling=_bool(s.get("scaled_hotelling", "true"), "scaled_hotelling"),
        )
        # validates the model names and fold count up front
        spec.estimation_config(0, 0.05)
        scenarios.append(spec)

    base_seed = _num(g.get("base_seed", "0"), "base_seed")
    env_seed = os.environ.get("DS3_SEED")
    if env_seed:
        base_seed = _num(env_seed, "DS3_SEED")
    if base_seed < 0:
        raise ConfigError("base_seed must be nonnegative")
    return GridSpec(
        scenarios=tuple(scenarios),
        estimators=estimators,
        replications=_num(g.get("replications", "100"), "replications"),
        base_seed=base_seed,
        alpha=_num(g.get("alpha", "0.05"), "alpha", float),
    )


def load_grid(path) -> GridSpec:
    try:
        with open(path, encoding="utf-8") as fh:
            return parse_grid(fh.read())
    except OSError as exc:
        raise ConfigError(f"cannot read grid config: {exc}") from None


# -- running ---------------------------------------------------------------

def run_replication(spec: ScenarioSpec, estimators, replication: int,
                    base_seed: int, alpha: float) -> list[dict]:
    """Rows (one per estimator) for a single replication of ``spec``.

    Failures are recorded in the ``status`` field instead of raised.
    """
    seed = replication_seed(base_seed, spec.scenario_id, replication)
    base = {"scenario_id": spec.scenario_id, "seed": seed}
    try:
        scen = spec.scenario.with_seed(seed)
        dataset, params = generate(scen)
        config = spec.estimation_config(seed, alpha)
        known = true_propensity(dataset.x, scen, params) if spec.propensity_model == "known" else None
        if known is not None:
            known = np.broadcast_to(known, (dataset.m,))
        fit = cross_fit(dataset, config, known_pi=known)
        theta_star = true_theta(params, spec.target)
    except DS3Error as exc:
        return [dict(base, estimator=e, status=f"error:{type(exc).__name__}") for e in estimators]

    rows = []
    for e in estimators:
        try:
            rep = estimate_from_predictions(dataset, fit, spec.target, e, alpha)
            test = hotelling_test(rep.theta_hat, theta_star, rep.v_hat, alpha,
                                  literal_formula=spec.literal_hotelling,
                                  scaled_threshold=spec.scaled_hotelling)
        except DS3Error as exc:
            rows.append(dict(base, estimator=e, status=f"error:{type(exc).__name__}"))
            continue
        rows.append(dict(
            base, estimator=e, status="ok",
            rmse=float(np.linalg.norm(rep.theta_hat - theta_star)),
            covered=not test.reject,
            n_labeled_realized=dataset.n_labeled,
            overlap_index=rep.overlap_index,
            theta_hat=[float(v) for v in rep.theta_hat],
        ))
    return rows


def _task(args):
    return run_replication(*args)


def run_grid(grid: GridSpec, jobs: int = 1) -> list[dict]:
    """All replication rows, ordered by (scenario, estimator, replication).

    The output does not depend on ``jobs``: tasks are independent and results
    are re-ordered before returning.
    """
    tasks = [(spec, grid.estimators, rep, grid.base_seed, grid.alpha)
             for spec in grid.scenarios for rep in range(grid.replications)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            outputs = list(pool.map(_task, tasks, chunksize=max(1, len(tasks) // (4 * jobs))))
    else:
        outputs = [_task(t) for t in tasks]

    by_key = {}
    for (spec, _, rep, _, _), rows in zip(tasks, outputs):
        for row in rows:
            by_key[(spec.scenario_id, row["estimator"], rep)] = row
    ordered = []
    for spec in grid.scenarios:
        for e in grid.estimators:
            for rep in range(grid.replications):
                ordered.append(by_key[(spec.scenario_id, e, rep)])
    return ordered


# -- aggregation and output -------------------------------------------------

def aggregate(rows: list[dict]) -> list[CellResult]:
    """Group rows by (scenario, estimator) in order of first appearance."""
    cells: dict[tuple[str, str], CellResult] = {}
    for row in rows:
        key = (row["scenario_id"], row["estimator"])
        cells.setdefault(key, CellResult(*key)).rows.append(row)
    for cell in cells.values():
        ok = [r for r in cell.rows if r["status"] == "ok"]
        cell.replications = len(cell.rows)
        cell.completed = len(ok)
        if ok:
            rmse = np.array([r["rmse"] for r in ok])
            cov = np.array([bool(r["covered"]) for r in ok], dtype=float)
            q25, q75 = np.percentile(rmse, [25, 75])
            cell.median_rmse = float(np.median(rmse))
            cell.iqr_rmse = float(q75 - q25)
            cell.coverage = float(cov.mean())
            cell.coverage_se = float(np.sqrt(cell.coverage * (1 - cell.coverage) / len(ok)))
    return list(cells.values())


def _f(v) -> str:
    return repr(float(v))


def results_csv(rows: list[dict], q: int | None = None) -> str:
    if q is None:
        q = max((len(r.get("theta_hat", [])) for r in rows), default=0)
    header = BASE_COLUMNS + [f"theta_hat_{j}" for j in range(1, q + 1)]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        if r["status"] == "ok":
            theta = [_f(v) for v in r["theta_hat"]]
            line = [r["scenario_id"], r["estimator"], r["seed"], "ok", _f(r["rmse"]),
                    int(bool(r["covered"])), r["n_labeled_realized"], _f(r["overlap_index"])]
        else:
            theta = []
            line = [r["scenario_id"], r["estimator"], r["seed"], r["status"], "", "", "", ""]
        w.writerow(line + theta + [""] * (q - len(theta)))
    return buf.getvalue()


def aggregate_csv(cells: list[CellResult]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["scenario_id", "estimator", "replications", "completed",
                "median_rmse", "iqr_rmse", "coverage", "coverage_se"])
    for c in cells:
        w.writerow([c.scenario_id, c.estimator, c.replications, c.completed,
                    _f(c.median_rmse), _f(c.iqr_rmse), _f(c.coverage), _f(c.coverage_se)])
    return buf.getvalue()


def read_results(path) -> list[dict]:
    """Parse a ``results.csv`` back into row dicts; :class:`SchemaError` on mismatch."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{path}: empty results file") from None
        n_theta = len(header) - len(BASE_COLUMNS)
        expected = BASE_COLUMNS + [f"theta_hat_{j}" for j in range(1, n_theta + 1)]
        if n_theta < 0 or header != expected:
            raise SchemaError(f"{path}: not a results file (header {header})")
        rows = []
        for i, line in enumerate(reader, start=2):
            if len(line) != len(header):
                raise SchemaError(f"{path}:{i}: expected {len(header)} fields")
            rec = dict(zip(header, line))
            row = {"scenario_id": rec["scenario_id"], "estimator": rec["estimator"],
                   "seed": int(rec["seed"]), "status": rec["status"]}
            try:
                if rec["status"] == "ok":
                    row["rmse"] = float(rec["rmse"])
                    row["covered"] = rec["covered"] == "1"
                    row["n_labeled_realized"] = int(rec["n_labeled_realized"])
                    row["overlap_index"] = float(rec["overlap_index"])
                    row["theta_hat"] = [float(line[len(BASE_COLUMNS) + j])
                                        for j in range(n_theta) if line[len(BASE_COLUMNS) + j] != ""]
            except ValueError:
                raise SchemaError(f"{path}:{i}: malformed numeric field") from None
            rows.append(row)
    return rows


def _order(estimator: str) -> tuple[int, str]:
    return (ESTIMATORS.index(estimator) if estimator in ESTIMATORS else len(ESTIMATORS), estimator)


def render_markdown(cells: list[CellResult]) -> str:
    """One table per scenario (sorted by id): median/IQR RMSE and coverage +/- 2 SE."""
    out = []
    for sid in sorted({c.scenario_id for c in cells}):
        group = sorted((c for c in cells if c.scenario_id == sid), key=lambda c: _order(c.estimator))
        out.append(f"### {sid}\n")
        out.append("| estimator | median RMSE | IQR RMSE | coverage | +/- 2 SE | completed |")
        out.append("|---|---|---|---|---|---|")
        for c in group:
            out.append(f"| {c.estimator} | {c.median_rmse:.4f} | {c.iqr_rmse:.4f} | "
                       f"{c.coverage:.3f} | {2 * c.coverage_se:.3f} | {c.completed}/{c.replications} |")
        out.append("")
    return "\n".join(out)
