"""Scenario configuration, certification runs and refinement studies.

A scenario is an INI file with the sections

``[scenario]``
    ``T``, ``cfl``, ``snapshots`` (count or list of times), ``checks``
    (comma list of ``tv``, ``stability``, ``radiating_tv``,
    ``radiating_l1``, ``kernel_stability``), ``entropy``, ``levels``.
``[problem]``, ``[comparison]``
    ``name`` of a built-in problem plus its parameters.
``[initial]``, ``[comparison_initial]``
    ``name`` of a built-in initial datum plus parameters.
``[grid]``
    ``lower``, ``upper``, ``cells``, ``boundary``, ``pad_value``.
``[kernel]``, ``[kernel_tilde]``
    ``name`` (``gaussian``, ``exponential``, ``top_hat`` or ``csv`` with
    ``path``) plus parameters.
``[check]``
    ball ``x0`` and ``R``, ``rel_slack``, ``abs_slack_factor``,
    ``reduction`` and audit resolution ``audit_nt``, ``audit_nx``, ``audit_nu``.

Values are Python literals; anything that does not parse stays a string.
"""
from __future__ import annotations

import ast
import configparser
import dataclasses
import json
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from . import bounds
from .constants import dim_constants
from .entropy import EntropyReport, entropy_residual
from .errors import ConfigError
from .grid import GridFn, UniformGrid, l1_distance_ball, l1_norm, total_variation
from .model import HypothesisReport, SamplingBox, audit_hypotheses, default_state_interval, difference_spec, true_source
from .nonlocal_source import KERNELS, kernel_from_csv, kernel_l1_distance, picard_solve
from .problems import INITIAL_DATA, PROBLEMS, make_initial, make_problem
from .solver import Trajectory, solve

__all__ = [
    "ScenarioConfig",
    "CheckResult",
    "CertificationReport",
    "RefinementTable",
    "load_scenario",
    "shipped_scenarios",
    "run_scenario",
    "refinement_study",
]

CHECKS = ("tv", "stability", "radiating_tv", "radiating_l1", "kernel_stability")
REDUCTIONS = ("none", "conservation", "constant_speed", "static")
ROUNDOFF_FLOOR = 1e-9
ENTROPY_FACTOR = 1.3


def _literal(text: str):
    text = text.strip()
    if text.lower() in ("inf", "+inf"):
        return math.inf
    if text.lower() in ("true", "false"):
        return text.lower() == "true"
    if text.lower() == "none":
        return None
    try:
        return ast.literal_eval(text)
    except (ValueError, SyntaxError):
        return text


def _section(cp, name) -> dict | None:
    if not cp.has_section(name):
        return None
    return {k: _literal(v) for k, v in cp.items(name)}


@dataclass
class ScenarioConfig:
    """Everything needed to run and certify one scenario."""

    name: str
    T: float
    problem: dict
    initial: dict
    grid: dict
    cfl: float = 0.5
    snapshots: object = 5
    checks: tuple = ("tv",)
    comparison: dict | None = None
    comparison_initial: dict | None = None
    kernel: dict | None = None
    kernel_tilde: dict | None = None
    x0: object = 0.0
    R: float = math.inf
    rel_slack: float = 0.05
    abs_slack_factor: float = 10.0
    reduction: str = "none"
    audit_nt: int = 9
    audit_nx: int | None = None
    audit_nu: int = 17
    entropy: bool = True
    levels: int = 3
    base_dir: Path | None = None

    def __post_init__(self):
        self.checks = tuple(self.checks)
        self.validate()

    # -- loading ------------------------------------------------------------------------------
    @classmethod
    def from_string(cls, text: str, name: str = "scenario", base_dir=None) -> "ScenarioConfig":
        cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
        cp.optionxform = str
        try:
            cp.read_string(text)
        except configparser.Error as exc:
            raise ConfigError(str(exc)) from exc
        sc = _section(cp, "scenario") or {}
        for req in ("problem", "initial", "grid"):
            if not cp.has_section(req):
                raise ConfigError(f"missing section [{req}]")
        chk = _section(cp, "check") or {}
        checks = sc.pop("checks", "tv")
        if isinstance(checks, str):
            checks = [c.strip() for c in checks.split(",") if c.strip()]
        elif isinstance(checks, (list, tuple)):
            checks = list(checks)
        kw = dict(
            name=str(sc.pop("name", name)),
            T=sc.pop("T", None),
            problem=_section(cp, "problem"),
            initial=_section(cp, "initial"),
            grid=_section(cp, "grid"),
            comparison=_section(cp, "comparison"),
            comparison_initial=_section(cp, "comparison_initial"),
            kernel=_section(cp, "kernel"),
            kernel_tilde=_section(cp, "kernel_tilde"),
            checks=tuple(checks),
            base_dir=None if base_dir is None else Path(base_dir),
        )
        if kw["T"] is None:
            raise ConfigError("[scenario] needs T")
        for key in ("cfl", "snapshots", "entropy", "levels"):
            if key in sc:
                kw[key] = sc.pop(key)
        for key in ("x0", "R", "rel_slack", "abs_slack_factor", "reduction", "audit_nt", "audit_nx", "audit_nu"):
            if key in chk:
                kw[key] = chk.pop(key)
        if sc or chk:
            raise ConfigError(f"unknown keys: {sorted(sc) + sorted(chk)}")
        return cls(**kw)

    @classmethod
    def from_file(cls, path) -> "ScenarioConfig":
        path = Path(path)
        if not path.is_file():
            raise ConfigError(f"no scenario file {path}")
        return cls.from_string(path.read_text(), path.stem, path.parent)

    # -- validation ---------------------------------------------------------------------------
    def validate(self) -> None:
        try:
            T = float(self.T)
        except (TypeError, ValueError):
            raise ConfigError("T must be a number") from None
        if not T > 0:
            raise ConfigError("T must be positive")
        self.T = T
        for label, sec, table in (("problem", self.problem, PROBLEMS), ("comparison", self.comparison, PROBLEMS),
                                  ("initial", self.initial, INITIAL_DATA),
                                  ("comparison_initial", self.comparison_initial, INITIAL_DATA)):
            if sec is None:
                continue
            if sec.get("name") not in table:
                raise ConfigError(f"[{label}] name {sec.get('name')!r} is not one of {sorted(table)}")
        for label, sec in (("kernel", self.kernel), ("kernel_tilde", self.kernel_tilde)):
            if sec is not None and sec.get("name") not in tuple(KERNELS) + ("csv",):
                raise ConfigError(f"[{label}] name {sec.get('name')!r} unknown")
        for key in ("lower", "upper", "cells"):
            if key not in self.grid:
                raise ConfigError(f"[grid] needs {key}")
        unknown = set(self.checks) - set(CHECKS)
        if unknown:
            raise ConfigError(f"unknown checks {sorted(unknown)}")
        if "stability" in self.checks and self.comparison is None:
            raise ConfigError("stability check needs a [comparison] section")
        if any(c.startswith(("radiating", "kernel")) for c in self.checks) and self.kernel is None:
            raise ConfigError("radiating checks need a [kernel] section")
        if "kernel_stability" in self.checks and self.kernel_tilde is None:
            raise ConfigError("kernel_stability needs a [kernel_tilde] section")
        if self.reduction not in REDUCTIONS:
            raise ConfigError(f"reduction must be one of {REDUCTIONS}")
        if not 0 < float(self.cfl) <= 1:
            raise ConfigError("cfl must lie in (0, 1]")
        if int(self.levels) < 1:
            raise ConfigError("levels must be positive")

    # -- builders -----------------------------------------------------------------------------
    def with_cells(self, factor: int) -> "ScenarioConfig":
        g = dict(self.grid)
        g["cells"] = (np.asarray(g["cells"]) * factor).tolist()
        out = dataclasses.replace(self, grid=g)
        if self.audit_nx is not None:
            out.audit_nx = (int(self.audit_nx) - 1) * factor + 1
        return out

    def build_grid(self) -> UniformGrid:
        g = self.grid
        return UniformGrid.from_bounds(g["lower"], g["upper"], g["cells"], g.get("boundary", "padded"),
                                       g.get("pad_value"))

    @staticmethod
    def _problem(sec, init):
        params = {k: v for k, v in sec.items() if k not in ("name", "state_interval")}
        u0 = make_initial(init["name"], **{k: v for k, v in init.items() if k != "name"})
        si = sec.get("state_interval")
        return make_problem(sec["name"], u0=u0, state_interval=None if si is None else tuple(si), **params)

    def build_problem(self):
        return self._problem(self.problem, self.initial)

    def build_comparison(self):
        if self.comparison is None:
            return None
        return self._problem(self.comparison, self.comparison_initial or self.initial)

    def _kernel(self, sec, dim):
        if sec is None:
            return None
        params = {k: v for k, v in sec.items() if k != "name"}
        if sec["name"] == "csv":
            path = Path(params["path"])
            if not path.is_absolute() and self.base_dir is not None:
                path = self.base_dir / path
            return kernel_from_csv(path, dim)
        return KERNELS[sec["name"]](dim=dim, **params)

    def build_kernels(self, dim):
        return self._kernel(self.kernel, dim), self._kernel(self.kernel_tilde, dim)

    def snapshot_times(self) -> np.ndarray:
        s = self.snapshots
        if isinstance(s, (int, np.integer)):
            return np.linspace(0.0, self.T, int(s) + 1)[1:]
        times = np.asarray(s, dtype=float)
        if np.any(times <= 0) or np.any(times > self.T):
            raise ConfigError("snapshot times must lie in (0, T]")
        return np.union1d(times, [self.T])

    def as_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d.pop("base_dir")
        return d


@dataclass
class CheckResult:
    name: str
    series: bounds.EnvelopeSeries
    rel_slack: float
    abs_slack: float
    extra: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.series.holds(self.rel_slack, self.abs_slack)

    @property
    def min_margin(self) -> float:
        s = self.series
        return float(np.min(s.values * (1 + self.rel_slack) + self.abs_slack - s.measured))

    def summary(self) -> dict:
        s = self.series
        return {
            "passed": self.passed,
            "branch": s.branch,
            "rel_slack": self.rel_slack,
            "abs_slack": self.abs_slack,
            "min_margin": self.min_margin,
            "final_measured": float(s.measured[-1]),
            "final_envelope": float(s.values[-1]),
            "constants_used": s.constants_used,
            **self.extra,
        }


@dataclass
class CertificationReport:
    """Outcome of :func:`run_scenario`: constants, check series, entropy residuals, trajectory."""

    config: ScenarioConfig
    h: float
    constants: dict
    hypotheses: HypothesisReport
    checks: list
    trajectory: Trajectory
    entropy: EntropyReport | None = None
    picard: list | None = None

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def check(self, name: str) -> CheckResult:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def summary(self) -> dict:
        out = {
            "scenario": self.config.name,
            "h": self.h,
            "T": self.config.T,
            "passed": self.passed,
            "constants": self.constants,
            "hypotheses": self.hypotheses.as_dict(),
            "checks": {c.name: c.summary() for c in self.checks},
        }
        if self.entropy is not None:
            out["entropy"] = {"max_positive_residual": self.entropy.max(),
                              "conservation_residual": self.entropy.conservation}
        if self.picard is not None:
            out["picard_iterates"] = [len(p["distances"]) for p in self.picard]
        return out

    def text(self) -> str:
        lines = [f"scenario {self.config.name}  h={self.h:.6g}  T={self.config.T:g}",
                 "constants: " + ", ".join(f"{k}={v:.6g}" for k, v in self.constants.items())]
        for c in self.checks:
            s = c.series
            lines.append(f"[{'PASS' if c.passed else 'FAIL'}] {c.name} ({s.branch}): "
                         f"measured {s.measured[-1]:.6g} <= envelope {s.values[-1]:.6g} "
                         f"(rel slack {c.rel_slack:g}, abs slack {c.abs_slack:.3g}, min margin {c.min_margin:.3g})")
        if self.entropy is not None:
            lines.append(f"entropy: max positive residual {self.entropy.max():.3e}, "
                         f"conservation residual {self.entropy.conservation:.3e}")
        if self.picard is not None:
            lines.append("picard iterates per slab: " + ", ".join(str(len(p["distances"])) for p in self.picard))
        lines.append("ALL CHECKS PASS" if self.passed else "SOME CHECKS FAIL")
        return "\n".join(lines) + "\n"

    def write(self, outdir) -> Path:
        """Series CSVs, ``snapshots.csv``, ``entropy.csv``, ``report.txt`` and ``summary.json``."""
        outdir = Path(outdir)
        outdir.mkdir(parents=True, exist_ok=True)
        for c in self.checks:
            c.series.to_csv(outdir / f"series_{c.name}.csv")
        times = self.config.snapshot_times()
        self.trajectory.subsample(np.concatenate([[0.0], times])).to_csv(outdir / "snapshots.csv")
        if self.entropy is not None:
            self.entropy.to_csv(outdir / "entropy.csv")
        (outdir / "report.txt").write_text(self.text())
        (outdir / "summary.json").write_text(json.dumps(_jsonable(self.summary()), indent=2, sort_keys=True) + "\n")
        return outdir


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else repr(v)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    return obj


def shipped_scenarios() -> dict:
    """Name to path of every scenario shipped with the package."""
    root = resources.files("balancelaw") / "scenarios"
    return {p.name[:-4]: Path(str(p)) for p in sorted(root.iterdir(), key=lambda p: p.name) if p.name.endswith(".ini")}


def load_scenario(name_or_path) -> ScenarioConfig:
    """Load a scenario file, or a shipped scenario by name."""
    p = Path(name_or_path)
    if p.is_file():
        return ScenarioConfig.from_file(p)
    shipped = shipped_scenarios()
    if str(name_or_path) in shipped:
        return ScenarioConfig.from_file(shipped[str(name_or_path)])
    raise ConfigError(f"{name_or_path!r} is neither a file nor a shipped scenario ({sorted(shipped)})")


def _audit(cfg, spec, grid, u_range, other=None):
    nx = cfg.audit_nx if cfg.audit_nx is not None else (2 * max(grid.shape) + 1 if grid.ndim == 1 else 129)
    box = SamplingBox.for_grid(grid, cfg.T, u_range)
    return audit_hypotheses(spec, box, (cfg.audit_nt, nx, cfg.audit_nu), other=other)


def _union_range(*values):
    lo = min(float(np.min(v)) for v in values)
    hi = max(float(np.max(v)) for v in values)
    return default_state_interval(np.array([lo, hi]))


def run_scenario(cfg: ScenarioConfig) -> CertificationReport:
    """Solve the scenario, measure functionals, evaluate envelopes and compare."""
    grid = cfg.build_grid()
    spec = cfg.build_problem()
    other = cfg.build_comparison()
    K, Kt = cfg.build_kernels(spec.dim)
    u0 = spec.initial(grid)
    v0 = other.initial(grid) if other is not None else None
    if spec.state_interval is not None:
        u_range = spec.state_interval
    else:
        u_range = _union_range(u0.values, *(() if v0 is None else (v0.values,)))
    times = cfg.snapshot_times()
    all_times = np.concatenate([[0.0], times])
    rep = _audit(cfg, spec, grid, u_range, other)
    nwn = dim_constants(spec.dim).nwn if spec.dim > 0 else 1.0
    tv0 = total_variation(u0)
    abs_slack = cfg.abs_slack_factor * grid.h * (1 + tv0)
    g_prof = (rep.times, rep.grad_source_profile)
    constants = {"kappa0": rep.kappa0(), "kappa": rep.kappa(), "M": rep.sup_du_g if other is not None else rep.sup_du_f,
                 "k": 0.0, "NW_N": nwn}
    checks = []
    picard = None

    if K is not None:
        traj = picard_solve(spec, K, grid, cfg.T, cfg.cfl, u_range=u_range, snapshot_times=list(times))
        picard = traj.metadata["picard"]
        k = traj.metadata["kernel_mass"]
        constants["k"] = k
    else:
        traj = solve(spec, grid, cfg.T, cfg.cfl, snapshot_times=list(times), every_step=cfg.entropy,
                     u_range=u_range)
    snaps = traj.subsample(all_times) if traj.metadata.get("every_step") else traj
    states = snaps.states

    def cu(extra=None):
        base = {"kappa0": constants["kappa0"], "NW_N": nwn, "tv0": tv0}
        base.update(extra or {})
        return base

    if "tv" in cfg.checks:
        kap0 = rep.kappa0()
        env = bounds.envelope_series(all_times, lambda T: bounds.tv_envelope(tv0, kap0, g_prof, T, spec.dim),
                                     [total_variation(s) for s in states], cu(),
                                     "generic" if kap0 > 0 else "kappa_zero")
        weak = bounds.tv_envelope_weak(tv0, kap0, g_prof, cfg.T, spec.dim)
        checks.append(CheckResult("tv", env, cfg.rel_slack, abs_slack, {"weak_form_final": weak}))

    if "stability" in cfg.checks:
        checks.append(_stability_check(cfg, spec, other, grid, u0, v0, u_range, rep, states, all_times, tv0, nwn,
                                       abs_slack))

    if K is not None:
        kap0 = rep.kappa0()
        k = constants["k"]
        if "radiating_tv" in cfg.checks:
            env = bounds.envelope_series(
                all_times, lambda T: bounds.radiating_tv_envelope(tv0, kap0, k, g_prof, T, spec.dim),
                [total_variation(s) for s in states], cu({"k": k}))
            checks.append(CheckResult("radiating_tv", env, cfg.rel_slack, abs_slack))
        if "radiating_l1" in cfg.checks:
            zero_ok = _zero_compatible(spec, rep)
            kap = rep.kappa()
            l10 = l1_norm(u0)
            env = bounds.envelope_series(all_times, lambda T: bounds.radiating_l1_bound(l10, kap, k, T),
                                         [l1_norm(s) for s in states], {"kappa": kap, "k": k, "l1_0": l10})
            checks.append(CheckResult("radiating_l1", env, cfg.rel_slack, abs_slack, {"zero_compatible": zero_ok}))
        if "kernel_stability" in cfg.checks:
            traj_t = picard_solve(spec, Kt, grid, cfg.T, cfg.cfl, u_range=u_range, snapshot_times=list(times))
            states_t = traj_t.subsample(all_times).states
            kt = traj_t.metadata["kernel_mass"]
            dK = kernel_l1_distance(K, Kt, grid, np.linspace(0, cfg.T, 5))
            l10 = l1_norm(u0)
            env = bounds.envelope_series(
                all_times, lambda T: bounds.kernel_stability_bound(l10, k, kt, dK, T),
                [l1_norm(a - b) for a, b in zip(states, states_t)],
                {"k": k, "k_tilde": kt, "dK_l1": dK, "l1_0": l10},
                "kappa_equal" if bounds._branch(k, kt) == "kappa_equal" else "generic")
            checks.append(CheckResult("kernel_stability", env, cfg.rel_slack, abs_slack))

    ent = None
    if cfg.entropy and traj.metadata.get("every_step"):
        ent = entropy_residual(traj, spec)
    return CertificationReport(cfg, grid.h, constants, rep, checks, traj, ent, picard)


def _zero_compatible(spec, rep) -> bool:
    box = rep.box
    axes = [np.linspace(a, b, 65) for a, b in box.x_ranges]
    xs = np.stack(np.meshgrid(*axes, indexing="ij"))
    src = true_source(spec)
    return all(float(np.max(np.abs(src(t, xs, np.zeros(xs.shape[1:]))))) == 0.0
               for t in np.linspace(*box.t_range, 5))


def _stability_check(cfg, spec, other, grid, u0, v0, u_range, rep, states, all_times, tv0, nwn, abs_slack):
    traj_v = solve(other, grid, cfg.T, cfg.cfl, snapshot_times=list(all_times[1:]), u_range=u_range)
    states_v = [traj_v.state_at(t) if t > 0 else v0 for t in all_times]
    x0 = cfg.x0
    R = float(cfg.R)
    M = rep.sup_du_g
    nx = rep.resolution[1]
    diff = difference_spec(spec, other, rep.box, (rep.resolution[0], nx, rep.resolution[2]))
    kap0, kap = rep.kappa0(), rep.kappa()
    g_prof = (rep.times, rep.grad_source_profile)

    def l1_init(T):
        return l1_distance_ball(u0, v0, x0, R + M * T)

    nodes = np.linspace(0.0, cfg.T, 65)

    def cone(T):
        ts = np.union1d(nodes[nodes < T], [T])
        return ts, diff.cone_profile(T, ts, x0, R, M)

    red = cfg.reduction
    if red == "conservation":
        fn = lambda T: bounds.reduction_conservation(l1_init(T), tv0, rep.sup_du_fg, T)
    elif red == "constant_speed":
        fn = lambda T: bounds.reduction_constant_speed(l1_init(T), cone(T) if T > 0 else 0.0, T)
    elif red == "static":
        fn = lambda T: bounds.reduction_static(l1_init(T), float(cone(T)[1][0]) if T > 0 else 0.0, T)
    else:
        fn = lambda T: bounds.stability_envelope(l1_init(T), tv0, kap0, kap, M, rep.sup_du_fg, g_prof,
                                                 cone(T) if T > 0 else 0.0, T, spec.dim)
    branch = red if red != "none" else bounds._branch(kap0, kap)
    measured = [l1_distance_ball(a, b, x0, R) for a, b in zip(states, states_v)]
    env = bounds.envelope_series(all_times, fn, measured,
                                 {"kappa0": kap0, "kappa": kap, "M": M, "sup_du_fg": rep.sup_du_fg,
                                  "NW_N": nwn, "tv0": tv0}, branch)
    generic = bounds.stability_envelope(l1_init(cfg.T), tv0, kap0, kap, M, rep.sup_du_fg, g_prof, cone(cfg.T),
                                        cfg.T, spec.dim)
    return CheckResult("stability", env, cfg.rel_slack, abs_slack, {"generic_envelope_final": generic})


# -- refinement -----------------------------------------------------------------------------------

def _restrict(fine: GridFn, coarse_grid: UniformGrid) -> np.ndarray:
    v = fine.values
    shape = []
    for n in coarse_grid.shape:
        shape += [n, 2]
    return v.reshape(shape).mean(axis=tuple(range(1, 2 * coarse_grid.ndim, 2)))


@dataclass
class RefinementTable:
    """Per-level results of :func:`refinement_study`."""

    h: list
    reports: list
    self_convergence: list
    orders: list
    entropy_max: list
    entropy_ratios: list

    @property
    def entropy_ok(self) -> bool:
        """Residual maxima drop by ``1.3`` per halving or sit at the roundoff floor."""
        e = self.entropy_max
        if any(x is None for x in e):
            return True
        return all(b <= a / ENTROPY_FACTOR or b <= ROUNDOFF_FLOOR for a, b in zip(e[:-1], e[1:]))

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.reports) and self.entropy_ok

    def margins(self, check: str) -> list:
        return [r.check(check).min_margin for r in self.reports]

    def rows(self) -> list:
        out = []
        for i, r in enumerate(self.reports):
            row = {"level": i, "h": self.h[i], "passed": r.passed,
                   "entropy_max": self.entropy_max[i],
                   "self_convergence_l1": self.self_convergence[i] if i < len(self.self_convergence) else None,
                   "order": self.orders[i - 1] if 0 < i <= len(self.orders) else None,
                   "picard_iterates": None if r.picard is None else [len(p["distances"]) for p in r.picard]}
            for c in r.checks:
                row[f"{c.name}_measured"] = float(c.series.measured[-1])
                row[f"{c.name}_envelope"] = float(c.series.values[-1])
                row[f"{c.name}_margin"] = c.min_margin
            out.append(row)
        return out

    def write(self, outdir) -> Path:
        outdir = Path(outdir)
        outdir.mkdir(parents=True, exist_ok=True)
        rows = self.rows()
        keys = list(rows[0])
        for r in rows[1:]:
            keys += [k for k in r if k not in keys]
        with (outdir / "refinement.csv").open("w") as fh:
            fh.write(",".join(keys) + "\n")
            for r in rows:
                fh.write(",".join("" if r.get(k) is None else (repr(r[k]) if not isinstance(r[k], list)
                                                              else "|".join(map(str, r[k]))) for k in keys) + "\n")
        for i, rep in enumerate(self.reports):
            rep.write(outdir / f"level{i}")
        summary = {"passed": self.passed, "entropy_ok": self.entropy_ok, "rows": rows}
        (outdir / "summary.json").write_text(json.dumps(_jsonable(summary), indent=2, sort_keys=True) + "\n")
        lines = [f"{'OK' if self.passed else 'FAIL'} refinement of {self.reports[0].config.name}"]
        for r in rows:
            lines.append("  " + ", ".join(f"{k}={v:.4g}" if isinstance(v, float) else f"{k}={v}" for k, v in r.items()))
        (outdir / "report.txt").write_text("\n".join(lines) + "\n")
        return outdir


def refinement_study(cfg: ScenarioConfig, levels: int | None = None) -> RefinementTable:
    """Run the scenario on ``levels`` grids, halving ``h`` each time.

    Reports the check margins, entropy residual maxima and the observed
    order of the L1 self-convergence errors ``|u_h - R u_{h/2}|_1`` at ``T``
    (``R`` averages fine cells onto the coarse grid).
    """
    levels = int(cfg.levels if levels is None else levels)
    if levels < 3:
        raise ConfigError("refinement study needs at least 3 levels")
    reports = [run_scenario(cfg.with_cells(2**i)) for i in range(levels)]
    errs = []
    for a, b in zip(reports[:-1], reports[1:]):
        g = a.trajectory.grid
        errs.append(float(np.sum(np.abs(a.trajectory.final.values - _restrict(b.trajectory.final, g)))
                          * g.cell_volume))
    orders = [math.log2(e0 / e1) if e0 > 0 and e1 > 0 else math.nan for e0, e1 in zip(errs[:-1], errs[1:])]
    ent = [None if r.entropy is None else r.entropy.max() for r in reports]
    ratios = [None if a is None or b is None or b == 0 else a / b for a, b in zip(ent[:-1], ent[1:])]
    return RefinementTable([r.h for r in reports], reports, errs, orders, ent, ratios)
