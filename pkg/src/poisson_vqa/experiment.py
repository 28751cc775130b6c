"""Experiment configuration, single solves and layer sweeps.

Configs are JSON objects; unknown keys are rejected at every level.  Every
output file carries the config hash, the seeds and the package version.
Wall-clock timings go to separate ``timing.*`` files so the primary
outputs are byte-identical across reruns.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Optional, Union

import numpy as np

from poisson_vqa import __version__
from poisson_vqa import ansatz as ans
from poisson_vqa.errors import InputError
from poisson_vqa.lattice import build_system, load_source
from poisson_vqa.simulator import RNG_ALGORITHM, ShotPlan
from poisson_vqa.vqa import CostModel, OptimizerSettings, VqaRun, optimize

DRIVER_PRESETS = ("default", "default+fields")


def _from_dict(cls, data, where):
    if not isinstance(data, dict):
        raise InputError(f"{where}: expected an object")
    known = {f.name for f in fields(cls)}
    unknown = set(data) - known
    if unknown:
        raise InputError(f"{where}: unknown keys {sorted(unknown)}")
    try:
        return cls(**data)
    except TypeError as exc:
        raise InputError(f"{where}: {exc}") from None


@dataclass(frozen=True)
class ProblemConfig:
    m: int = 2
    d: int = 1
    source: Union[str, list] = "x"
    source_file: Optional[str] = None

    def system(self):
        src = load_source(self.source_file) if self.source_file else self.source
        return build_system(self.m, src, d=self.d)


@dataclass(frozen=True)
class AnsatzConfig:
    layers: int = 1
    mode: str = "two-per-layer"
    driver: Union[str, list] = "default"
    mixer: Optional[list] = None

    def spec(self, m: int, layers: Optional[int] = None) -> ans.AnsatzSpec:
        if isinstance(self.driver, str):
            if self.driver not in DRIVER_PRESETS:
                raise InputError(f"driver preset must be one of {DRIVER_PRESETS}")
            driver = ans.default_driver(m, fields=self.driver == "default+fields")
        else:
            driver = self.driver
        p = self.layers if layers is None else layers
        return ans.AnsatzSpec(m, p, self.mode, driver, self.mixer)


@dataclass(frozen=True)
class BackendConfig:
    kind: str = "exact"
    shots: int = 10000
    seed: int = 0
    debias: bool = False

    def __post_init__(self):
        if self.kind not in ("exact", "shots"):
            raise InputError(f"backend must be 'exact' or 'shots', got {self.kind!r}")

    def plan(self) -> Optional[ShotPlan]:
        return ShotPlan(self.shots, self.seed) if self.kind == "shots" else None


@dataclass(frozen=True)
class SweepConfig:
    m: list = field(default_factory=lambda: [2, 3, 4])
    p: list = field(default_factory=lambda: list(range(1, 31)))
    target: float = 0.99
    warm_start: bool = True

    def __post_init__(self):
        if not 0 < self.target <= 1:
            raise InputError("fidelity target must lie in (0, 1]")
        if not self.m or not self.p:
            raise InputError("sweep ranges must be nonempty")


@dataclass(frozen=True)
class ExperimentConfig:
    problem: ProblemConfig = ProblemConfig()
    ansatz: AnsatzConfig = AnsatzConfig()
    backend: BackendConfig = BackendConfig()
    optimizer: OptimizerSettings = OptimizerSettings()
    sweep: SweepConfig = SweepConfig()
    output: dict = field(default_factory=lambda: {"dir": "out"})

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        if not isinstance(data, dict):
            raise InputError("config must be a JSON object")
        unknown = set(data) - {f.name for f in fields(cls)}
        if unknown:
            raise InputError(f"config: unknown keys {sorted(unknown)}")
        parts = {
            "problem": ProblemConfig,
            "ansatz": AnsatzConfig,
            "backend": BackendConfig,
            "optimizer": OptimizerSettings,
            "sweep": SweepConfig,
        }
        kw = {k: _from_dict(c, data[k], k) for k, c in parts.items() if k in data}
        if "output" in data:
            out = data["output"]
            if not isinstance(out, dict) or set(out) - {"dir"}:
                raise InputError("output: only key 'dir' is allowed")
            kw["output"] = dict(out)
        return cls(**kw)

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def to_dict(self) -> dict:
        return asdict(self)

    def hash(self) -> str:
        """Hash of the config content, excluding the output location."""
        data = self.to_dict()
        data.pop("output")
        blob = json.dumps(data, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]

    def override(self, **kw) -> "ExperimentConfig":
        """Apply CLI-style overrides; ``None`` values are ignored."""
        cfg = self
        if kw.get("seed") is not None:
            cfg = replace(
                cfg,
                optimizer=replace(cfg.optimizer, seed=kw["seed"]),
                backend=replace(cfg.backend, seed=kw["seed"]),
            )
        if kw.get("backend") is not None:
            cfg = replace(cfg, backend=replace(cfg.backend, kind=kw["backend"]))
        if kw.get("shots") is not None:
            cfg = replace(cfg, backend=replace(cfg.backend, shots=kw["shots"]))
        if kw.get("m") is not None:
            cfg = replace(cfg, problem=replace(cfg.problem, m=kw["m"]))
        if kw.get("layers") is not None:
            cfg = replace(cfg, ansatz=replace(cfg.ansatz, layers=kw["layers"]))
        if kw.get("mode") is not None:
            cfg = replace(cfg, ansatz=replace(cfg.ansatz, mode=kw["mode"]))
        if kw.get("driver") is not None:
            cfg = replace(cfg, ansatz=replace(cfg.ansatz, driver=kw["driver"]))
        if kw.get("out") is not None:
            cfg = replace(cfg, output={"dir": str(kw["out"])})
        return cfg

    def metadata(self) -> dict:
        return {
            "tool": "poisson_vqa",
            "version": __version__,
            "config_hash": self.hash(),
            "seeds": {"optimizer": self.optimizer.seed, "backend": self.backend.seed},
            "rng": RNG_ALGORITHM,
        }


def _header(meta: dict) -> str:
    seeds = ",".join(f"{k}={v}" for k, v in meta["seeds"].items())
    return f"# {meta['tool']} {meta['version']} config_hash={meta['config_hash']} seeds={seeds}\n"


def _csv_text(rows, meta) -> str:
    buf = io.StringIO()
    buf.write(_header(meta))
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerows(rows)
    return buf.getvalue()


def _write(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


# ------------------------------------------------------------------- solve


def run_solve(cfg: ExperimentConfig, layers: Optional[int] = None, m: Optional[int] = None,
              initial=()) -> VqaRun:
    problem = cfg.problem if m is None else replace(cfg.problem, m=m)
    system = problem.system()
    model = CostModel.from_system(system, plan=cfg.backend.plan(), debias=cfg.backend.debias)
    spec = cfg.ansatz.spec(system.qubits, layers)
    return optimize(
        model,
        spec,
        cfg.optimizer,
        backend=cfg.backend.kind,
        x_reference=system.x_reference,
        config={"ansatz": spec.to_dict(), "problem": asdict(problem)},
        initial=initial,
    )


def write_solve(cfg: ExperimentConfig, run: VqaRun, out_dir=None) -> dict:
    out = Path(out_dir or cfg.output["dir"])
    meta = cfg.metadata()
    doc = {"metadata": meta, "config": cfg.to_dict(), "run": run.to_dict()}
    doc["config"].pop("output")
    paths = {"json": out / "run.json", "csv": out / "trace.csv", "timing": out / "timing.json"}
    _write(paths["json"], _dump(doc))
    _write(paths["csv"], _csv_text(run.csv_rows(), meta))
    _write(paths["timing"], _dump({"config_hash": meta["config_hash"], "wall_clock_s": run.wall_clock}))
    return paths


# ------------------------------------------------------------------- sweep


def _pad(theta, spec_from, spec_to):
    """Extend a parameter vector by zero-angle layers (the state is unchanged)."""
    return np.concatenate([theta, np.zeros(spec_to.num_parameters - spec_from.num_parameters)])


def sweep_one_m(cfg: ExperimentConfig, m: int):
    """Increase ``p`` until the fidelity target is met; return rows and the minimal ``p``."""
    rows = []
    minimal = None
    prev = None
    for p in sorted(cfg.sweep.p):
        initial = ()
        if cfg.sweep.warm_start and prev is not None:
            initial = (_pad(prev.theta_opt, cfg.ansatz.spec(m, prev_p), cfg.ansatz.spec(m, p)),)
        run = run_solve(cfg, layers=p, m=m, initial=initial)
        rows.append(
            {
                "m": m,
                "p": p,
                "fidelity": run.fidelity,
                "cost": run.cost_opt,
                "iterations": run.iterations,
                "wall_clock": run.wall_clock,
            }
        )
        prev, prev_p = run, p
        if run.fidelity >= cfg.sweep.target:
            minimal = p
            break
    return m, rows, minimal


def run_sweep(cfg: ExperimentConfig, jobs: int = 1):
    ms = sorted(cfg.sweep.m)
    if jobs > 1 and len(ms) > 1:
        with ProcessPoolExecutor(max_workers=min(jobs, len(ms))) as pool:
            results = list(pool.map(sweep_one_m, [cfg] * len(ms), ms))
    else:
        results = [sweep_one_m(cfg, m) for m in ms]
    results.sort(key=lambda r: r[0])
    rows = [row for _, rs, _ in results for row in rs]
    minimal = {m: p for m, _, p in results}
    return rows, minimal


def write_sweep(cfg: ExperimentConfig, rows, minimal, out_dir=None) -> dict:
    out = Path(out_dir or cfg.output["dir"])
    meta = cfg.metadata()
    table = [["m", "p", "best_fidelity", "best_cost", "iterations"]]
    table += [[r["m"], r["p"], repr(r["fidelity"]), repr(r["cost"]), r["iterations"]] for r in rows]
    timing = [["m", "p", "wall_clock_s"]] + [[r["m"], r["p"], f"{r['wall_clock']:.3f}"] for r in rows]
    summary = {
        "metadata": meta,
        "target": cfg.sweep.target,
        "minimal_layers": {str(m): p for m, p in minimal.items()},
        "best": {
            str(m): max((r for r in rows if r["m"] == m), key=lambda r: r["fidelity"])["fidelity"]
            for m in minimal
        },
    }
    paths = {
        "csv": out / "sweep.csv",
        "summary": out / "sweep_summary.json",
        "timing": out / "timing.csv",
    }
    _write(paths["csv"], _csv_text(table, meta))
    _write(paths["summary"], _dump(summary))
    _write(paths["timing"], _csv_text(timing, meta))
    return paths
