"""Monte Carlo benchmark harness.

For each replication a fresh sampling scheme is drawn, increments are
simulated, and up to four pipelines are evaluated against the model's
closed-form ground truth:

* ``oracle``    ideal weights, cutoff minimizing the true spectral loss,
* ``adaptive``  iteratively estimated weights, cross-validated cutoff,
* ``equal``     unit weights, true-loss cutoff,
* ``binned:K``  bin-pooled empirical weights, true-loss cutoff (optional).

The oracle and equal pipelines consume ground truth on purpose: they are
benchmarking instruments, not estimators. Risks are L2 distances evaluated
spectrally via the Plancherel identity, plus the closed-form tail mass
beyond the grid, so reported numbers refer to the whole real line.
"""

from __future__ import annotations

import csv
import sys
import time
from dataclasses import dataclass, field, replace

import numpy as np

from . import __version__
from .errors import ConfigError
from .models import LevyModel, parse_model
from .sampling import ObservationSet, draw_uniform_gaps, read_scheme_csv
from .selection import (BlockPlan, CutoffMenu, build_block_plan,
                        cv_cutoff_density, cv_cutoff_jump)
from .spectral import (SpectralGrid, SpectralStatistics, CharFnEstimate,
                       _cumtrapz_from_zero, _half_raw, clamp_phi_values,
                       mirror, regularize_inverse)
from .weights import (binned_weights, equal_weights, iterative_weights,
                      oracle_weights, parse_weight_designation)

DEFAULT_PIPELINES = ("oracle", "adaptive", "equal")


@dataclass(frozen=True)
class ExperimentConfig:
    """One benchmark cell: a model, a target, a sample size and the knobs."""

    model: str
    target: str
    n: int
    gap_upper: float | None = None
    gap_file: str | None = None
    reps: int = 100
    seed: int = 0
    kappa: float = 1.0
    grid_umax: float | None = None
    grid_du: float = 0.01
    pipelines: tuple[str, ...] = DEFAULT_PIPELINES
    max_weight_iters: int = 50
    delta_max: float | None = None

    def validate(self) -> LevyModel:
        try:
            model = parse_model(self.model)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        if self.target not in ("jump", "density"):
            raise ConfigError(f"target must be jump or density, got {self.target!r}")
        if self.target == "jump":
            try:
                model.fourier_g(0.0)
            except Exception as exc:
                raise ConfigError(
                    f"{self.model} has no jump target: {exc}"
                ) from exc
        if self.target == "density" and not model.density_exists(1.0):
            raise ConfigError(f"{self.model} admits no density target")
        if self.n < 1:
            raise ConfigError("n must be positive")
        if self.reps < 1:
            raise ConfigError("reps must be positive")
        if not self.kappa > 0:
            raise ConfigError("kappa must be positive")
        if not self.grid_du > 0:
            raise ConfigError("grid_du must be positive")
        if (self.gap_upper is None) == (self.gap_file is None):
            raise ConfigError("exactly one of gap_upper / gap_file is required")
        if self.gap_upper is not None and not self.gap_upper > 0:
            raise ConfigError("gap_upper must be positive")
        for name in self.pipelines:
            try:
                parse_weight_designation(self.name_to_weights(name))
            except ValueError as exc:
                raise ConfigError(f"unknown pipeline {name!r}") from exc
        return model

    @staticmethod
    def name_to_weights(pipeline: str) -> str:
        return {"oracle": "oracle", "adaptive": "iterative",
                "equal": "equal"}.get(pipeline, pipeline)

    def as_mapping(self) -> dict:
        return {
            "model": self.model, "target": self.target, "n": self.n,
            "gap_upper": self.gap_upper, "gap_file": self.gap_file,
            "reps": self.reps, "seed": self.seed, "kappa": self.kappa,
            "grid_umax": self.grid_umax, "grid_du": self.grid_du,
            "pipelines": ",".join(self.pipelines),
            "max_weight_iters": self.max_weight_iters,
            "delta_max": self.delta_max,
        }


@dataclass
class RiskReport:
    """Per-replication risks and cutoffs plus their aggregates."""

    config: ExperimentConfig
    risks: dict[str, np.ndarray]
    cutoffs: dict[str, np.ndarray]
    meta: dict = field(default_factory=dict)

    def aggregate(self, pipeline: str) -> tuple[float, float]:
        """(mean risk, standard error) for one pipeline."""
        r = self.risks[pipeline]
        se = float(np.std(r, ddof=1) / np.sqrt(r.size)) if r.size > 1 else 0.0
        return float(np.mean(r)), se


def _replication_rngs(seed: int, rep: int):
    ss = np.random.SeedSequence([int(seed), int(rep)])
    return ss.spawn(2)


def _risk_curve(target_half: np.ndarray, truth_half: np.ndarray, du: float,
                menu_idx: np.ndarray, tail_beyond: float) -> np.ndarray:
    """Whole-line L2 risk of the hard-cutoff estimate at every menu cutoff.

    The straddle correction makes the value at cutoff m identical to the
    plain trapezoid of |S - truth|^2 with S zeroed beyond m.
    """
    diff2 = np.abs(target_half - truth_half) ** 2
    tru2 = np.abs(truth_half) ** 2
    ca = _cumtrapz_from_zero(diff2, du)
    cb = _cumtrapz_from_zero(tru2, du)
    inside = 2.0 * ca[menu_idx]
    outside = 2.0 * (cb[-1] - cb[menu_idx]) + tail_beyond
    straddle = du * (diff2[menu_idx] - tru2[menu_idx])
    return (inside + outside + straddle) / (2.0 * np.pi)


def _best_cutoff(curve: np.ndarray, menu: CutoffMenu) -> tuple[int, float]:
    pick = int(np.argmin(curve))
    return int(menu.values[pick]), float(curve[pick])


def oracle_cutoff_jump(stats: SpectralStatistics, model: LevyModel,
                       menu: CutoffMenu) -> tuple[int, float]:
    """True-loss minimizing cutoff (and its risk) for a jump pipeline."""
    grid = stats.grid
    m = grid.half_count
    idx = np.rint(menu.values / grid.du).astype(np.int64)
    curve = _risk_curve(stats.psi_prime_hat[m:] / 1j,
                        model.fourier_g(grid.half_nodes), grid.du, idx,
                        model.fourier_g_sq_tail(grid.u_max))
    return _best_cutoff(curve, menu)


def oracle_cutoff_density(charfn: CharFnEstimate, model: LevyModel,
                          menu: CutoffMenu, delta: float = 1.0) -> tuple[int, float]:
    """True-loss minimizing cutoff (and its risk) for a density pipeline."""
    grid = charfn.grid
    m = grid.half_count
    idx = np.rint(menu.values / grid.du).astype(np.int64)
    curve = _risk_curve(charfn.phi_hat[m:],
                        model.char_function(delta, grid.half_nodes), grid.du,
                        idx, model.char_sq_tail(delta, grid.u_max))
    return _best_cutoff(curve, menu)


class _Cell:
    """Shared per-cell state: model, truth caches, helpers."""

    def __init__(self, config: ExperimentConfig):
        self.config = config
        self.model = config.validate()
        self.fixed_scheme = None
        if config.gap_file is not None:
            self.fixed_scheme = read_scheme_csv(config.gap_file,
                                                delta_max=config.delta_max)
            if self.fixed_scheme.n != config.n:
                raise ConfigError(
                    f"gap file holds {self.fixed_scheme.n} gaps, config says "
                    f"{config.n}"
                )

    def draw(self, rep: int) -> ObservationSet:
        gap_rng, inc_rng = _replication_rngs(self.config.seed, rep)
        if self.fixed_scheme is not None:
            scheme = self.fixed_scheme
        else:
            scheme = draw_uniform_gaps(self.config.n, self.config.gap_upper,
                                       gap_rng)
        return self.model.sample_increments(scheme, inc_rng)

    def grid_for(self, horizon: float) -> SpectralGrid:
        u_max = self.config.grid_umax
        if u_max is None:
            u_max = max(np.sqrt(horizon), 10.0)
        return SpectralGrid.from_spacing(u_max, self.config.grid_du)


def _half_pipeline(obs, wscheme, grid, kappa):
    """Regularized exponent-derivative estimate on the half grid."""
    q, p, s2 = _half_raw(obs, wscheme, grid)
    inv = regularize_inverse(q, np.sqrt(s2), kappa)
    return p * inv


def _run_replication(cell: _Cell, rep: int) -> dict:
    cfg = cell.config
    model = cell.model
    obs = cell.draw(rep)
    scheme = obs.scheme
    horizon = scheme.horizon
    grid = cell.grid_for(horizon)
    menu = CutoffMenu.from_horizon(horizon)
    if len(menu) == 0:
        raise ConfigError("horizon below 1 leaves an empty cutoff menu")
    idx = np.rint(menu.values / grid.du).astype(np.int64)
    du = grid.du
    jump = cfg.target == "jump"
    if jump:
        truth_half = model.fourier_g(grid.half_nodes)
        tail = model.fourier_g_sq_tail(grid.u_max)
    else:
        truth_half = model.char_function(1.0, grid.half_nodes)
        tail = model.char_sq_tail(1.0, grid.u_max)

    def risk_and_cutoff(psi_prime_half, m_fixed=None):
        """(cutoff, risk at it, true-loss-optimal cutoff for this estimate)."""
        if jump:
            target = psi_prime_half / 1j
        else:
            _, target = clamp_phi_values(_cumtrapz_from_zero(psi_prime_half, du))
        curve = _risk_curve(target, truth_half, du, idx, tail)
        m_best, risk_best = _best_cutoff(curve, menu)
        if m_fixed is None:
            return m_best, risk_best, m_best
        where = int(np.searchsorted(menu.values, m_fixed))
        return int(m_fixed), float(curve[where]), m_best

    out = {}
    plan: BlockPlan | None = None
    for pipeline in cfg.pipelines:
        if pipeline == "oracle":
            ws = oracle_weights(model, scheme, grid)
            psi_prime = _half_pipeline(obs, ws, grid, cfg.kappa)
            m_star, risk, _ = risk_and_cutoff(psi_prime)
        elif pipeline == "equal":
            ws = equal_weights(obs.n, grid)
            psi_prime = _half_pipeline(obs, ws, grid, cfg.kappa)
            m_star, risk, _ = risk_and_cutoff(psi_prime)
        elif pipeline == "adaptive":
            ws = iterative_weights(obs, grid, kappa=cfg.kappa,
                                   max_iters=cfg.max_weight_iters)
            if plan is None:
                plan = build_block_plan(obs.n)
            blocks = _half_raw(obs, ws, grid, bounds=plan.bounds)
            cv = (cv_cutoff_jump if jump else cv_cutoff_density)(
                obs, ws, cfg.kappa, grid, menu, plan, block_stats=blocks)
            q = blocks[0].sum(axis=0)
            p = blocks[1].sum(axis=0)
            s2 = blocks[2].sum(axis=0)
            psi_prime = p * regularize_inverse(q, np.sqrt(s2), cfg.kappa)
            m_star, risk, m_best = risk_and_cutoff(psi_prime, m_fixed=cv.m_hat)
            out["adaptive_builds"] = ws.meta.get("builds")
            out["adaptive_converged"] = ws.meta.get("converged")
            out["m_adaptive_star"] = m_best
        elif pipeline.startswith("binned"):
            _, n_bins = parse_weight_designation(
                ExperimentConfig.name_to_weights(pipeline))
            ws = binned_weights(obs, n_bins, grid)
            psi_prime = _half_pipeline(obs, ws, grid, cfg.kappa)
            m_star, risk, _ = risk_and_cutoff(psi_prime)
        else:
            raise ConfigError(f"unknown pipeline {pipeline!r}")
        out[f"risk_{pipeline}"] = risk
        out[f"m_{pipeline}"] = m_star
    return out


def run_table_experiment(config: ExperimentConfig,
                         progress=None) -> RiskReport:
    """Run every replication of one cell and aggregate the risks."""
    cell = _Cell(config)
    rows = []
    t0 = time.perf_counter()
    for rep in range(config.reps):
        rows.append(_run_replication(cell, rep))
        if progress is not None:
            progress(rep + 1, config.reps)
    elapsed = time.perf_counter() - t0
    risks = {p: np.array([r[f"risk_{p}"] for r in rows])
             for p in config.pipelines}
    cutoffs = {p: np.array([r[f"m_{p}"] for r in rows], dtype=int)
               for p in config.pipelines}
    meta = {"elapsed_s": elapsed, "version": __version__}
    if rows and "m_adaptive_star" in rows[0]:
        cutoffs["adaptive_star"] = np.array(
            [r["m_adaptive_star"] for r in rows], dtype=int)
    if "adaptive" in config.pipelines:
        meta["adaptive_nonconverged"] = int(
            sum(1 for r in rows if not r.get("adaptive_converged", True)))
        meta["adaptive_builds"] = [r.get("adaptive_builds") for r in rows]
    return RiskReport(config=config, risks=risks, cutoffs=cutoffs, meta=meta)


# --- reporting -------------------------------------------------------------

_SUMMARY_COLUMNS = ["model", "n", "gap_upper", "target", "r_or", "se_or",
                    "r_ad", "se_ad", "r_eq", "se_eq", "reps", "seed"]
_SHORT = {"oracle": "or", "adaptive": "ad", "equal": "eq"}


def _config_echo_lines(config: ExperimentConfig) -> list[str]:
    return [f"{k}={v if v is not None else ''}"
            for k, v in sorted(config.as_mapping().items())]


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def emit_report(reports: list[RiskReport] | RiskReport, out_dir) -> dict:
    """Write summary.csv, per_rep.csv and config.echo under ``out_dir``.

    Every file begins with the full config echoed as comment lines, so any
    number can be traced back to the run that produced it.
    """
    import os

    if isinstance(reports, RiskReport):
        reports = [reports]
    os.makedirs(out_dir, exist_ok=True)
    paths = {name: os.path.join(out_dir, name)
             for name in ("summary.csv", "per_rep.csv", "config.echo")}

    echo = []
    for i, rep in enumerate(reports):
        echo.append(f"# cell {i}")
        echo.extend(_config_echo_lines(rep.config))
    with open(paths["config.echo"], "w") as fh:
        fh.write("\n".join(echo) + "\n")

    with open(paths["summary.csv"], "w", newline="") as fh:
        for line in echo:
            fh.write(f"# {line}\n")
        w = csv.writer(fh)
        extra = sorted({p for r in reports for p in r.config.pipelines
                        if p not in _SHORT})
        w.writerow(_SUMMARY_COLUMNS + [f"r_{p}" for p in extra]
                   + [f"se_{p}" for p in extra])
        for rep in reports:
            cfg = rep.config
            row = [cfg.model, cfg.n, _fmt(cfg.gap_upper), cfg.target]
            for p in ("oracle", "adaptive", "equal"):
                if p in rep.risks:
                    mean, se = rep.aggregate(p)
                    row += [_fmt(mean), _fmt(se)]
                else:
                    row += ["", ""]
            row += [cfg.reps, cfg.seed]
            for p in extra:
                if p in rep.risks:
                    mean, se = rep.aggregate(p)
                    row += [_fmt(mean), _fmt(se)]
                else:
                    row += ["", ""]
            w.writerow(row)

    with open(paths["per_rep.csv"], "w", newline="") as fh:
        for line in echo:
            fh.write(f"# {line}\n")
        w = csv.writer(fh)
        pipelines = list(dict.fromkeys(
            p for r in reports for p in r.config.pipelines))
        header = ["model", "n", "gap_upper", "target", "rep"]
        for p in pipelines:
            header += [f"risk_{p}", f"m_{p}"]
        w.writerow(header)
        for rep in reports:
            cfg = rep.config
            for i in range(cfg.reps):
                row = [cfg.model, cfg.n, _fmt(cfg.gap_upper), cfg.target, i]
                for p in pipelines:
                    if p in rep.risks:
                        row += [_fmt(float(rep.risks[p][i])),
                                int(rep.cutoffs[p][i])]
                    else:
                        row += ["", ""]
                w.writerow(row)
    return paths


def read_per_rep_risks(path) -> dict:
    """Parse a per_rep.csv back into pipeline -> risk arrays (for checks)."""
    out: dict[str, list] = {}
    with open(path, newline="") as fh:
        rows = [line for line in fh if not line.startswith("#")]
    reader = csv.DictReader(rows)
    for row in reader:
        for key, val in row.items():
            if key.startswith("risk_") and val:
                out.setdefault(key[5:], []).append(float(val))
    return {k: np.array(v) for k, v in out.items()}
