"""Cost function, its exact and sampled evaluation, and the optimization loop.

The cost of a trial state ``psi`` is

    E(psi) = <psi|A^2|psi> - |<b|A|psi>|^2 = <psi| A (I - |b><b|) A |psi>,

which is nonnegative and vanishes only along ``A^-1 b``.
"""

from __future__ import annotations

import time
from dataclasses import asdict, dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from poisson_vqa import ansatz as ans
from poisson_vqa.decomp import decompose_A_squared, decompose_poisson_dD
from poisson_vqa.errors import InputError, NumericalError
from poisson_vqa.lattice import PoissonSystem
from poisson_vqa.opalg import (
    I,
    P0,
    P1,
    SM,
    SP,
    OperatorSum,
    adjoint,
    apply_sum,
    expectation_exact,
    hermitian_closed,
)
from poisson_vqa.simulator import (
    Estimate,
    ShotPlan,
    estimate_projector_string,
    estimate_two_level,
    run_circuit,
    zero_state,
)

IMAG_TOL = 1e-10


@dataclass(frozen=True)
class CostModel:
    """Operator data for the cost.

    ``a2_sum`` may be None (exact backend only), in which case
    ``<psi|A^2|psi>`` is computed as ``||A psi||^2``.
    """

    a_sum: OperatorSum
    b_state: np.ndarray
    a2_sum: Optional[OperatorSum] = None
    plan: Optional[ShotPlan] = None
    debias: bool = False

    def __post_init__(self):
        b = np.asarray(self.b_state, dtype=complex)
        if b.shape != (2**self.a_sum.qubits,):
            raise InputError("b_state does not match the operator qubit count")
        if not np.isclose(np.linalg.norm(b), 1.0, atol=1e-10):
            raise InputError("b_state must have unit norm")
        object.__setattr__(self, "b_state", b)
        for op in (self.a_sum, self.a2_sum):
            if op is None:
                continue
            if op.qubits != self.a_sum.qubits:
                raise InputError("a_sum and a2_sum act on different qubit counts")
            if not hermitian_closed(op):
                raise InputError("cost operators must be hermitian closed")

    @property
    def qubits(self) -> int:
        return self.a_sum.qubits

    @classmethod
    def from_system(cls, system: PoissonSystem, plan: Optional[ShotPlan] = None, **kw) -> "CostModel":
        a2 = decompose_A_squared(system.m) if system.d == 1 else None
        return cls(
            a_sum=decompose_poisson_dD(system.d, system.m),
            b_state=system.b_normalized,
            a2_sum=a2,
            plan=plan,
            **kw,
        )


def cost_exact(model: CostModel, psi: np.ndarray):
    """Exact cost from the operator sums; ``psi`` may be batched."""
    psi = np.asarray(psi, dtype=complex)
    a_psi = apply_sum(model.a_sum, psi)
    if model.a2_sum is None:
        a2 = np.sum(np.abs(a_psi) ** 2, axis=-1)
    else:
        a2 = expectation_exact(model.a2_sum, psi)
        if np.max(np.abs(np.imag(a2))) > IMAG_TOL:
            raise NumericalError(f"<A^2> has imaginary residue {np.max(np.abs(np.imag(a2))):.3g}")
        a2 = np.real(a2)
    z = a_psi @ np.conj(model.b_state)
    out = a2 - np.abs(z) ** 2
    return float(out) if np.ndim(out) == 0 else out


def prepare_b_psi(b_state: np.ndarray, psi: np.ndarray) -> np.ndarray:
    """``(|0>|b> + |1>|psi>) / sqrt(2)`` with the extra qubit most significant."""
    b_state = np.asarray(b_state, dtype=complex)
    psi = np.asarray(psi, dtype=complex)
    if b_state.shape != psi.shape:
        raise InputError("b and psi must have the same size")
    out = np.concatenate([b_state, psi]) / np.sqrt(2.0)
    return out / np.linalg.norm(out)


def fidelity(psi: np.ndarray, x_reference: np.ndarray) -> float:
    """Overlap modulus ``|<x|psi>|``."""
    psi = np.asarray(psi)
    x_reference = np.asarray(x_reference)
    if psi.shape != x_reference.shape:
        raise InputError("states differ in size")
    return float(min(abs(np.vdot(x_reference, psi)), 1.0))


# ------------------------------------------------------------- sampled cost

_U_BIT = {SP: 0, SM: 1, P0: 0, P1: 1}
_V_BIT = {SP: 1, SM: 0, P0: 0, P1: 1}


@dataclass(frozen=True)
class Unit:
    """One measured quantity of a Hermitian-closed sum.

    ``kind`` is ``"const"`` (identity, value 1), ``"proj"`` (projector onto ``u``
    over ``qubits``) or ``"pair"`` (``|u><v| + |v><u|`` over ``qubits``).
    """

    coeff: float
    kind: str
    qubits: tuple = ()
    u: tuple = ()
    v: tuple = ()


def measurement_units(op: OperatorSum) -> list:
    """Group a Hermitian-closed sum into conjugate pairs and diagonal terms."""
    units = []
    used = set()
    terms = op.terms
    for i, t in enumerate(terms):
        if i in used:
            continue
        used.add(i)
        if any(f not in (I, SP, SM, P0, P1) for f in t.factors):
            raise InputError(f"term {t} is outside the measurable alphabet")
        active = tuple(k for k, f in enumerate(t.factors) if f is not I)
        u = tuple(_U_BIT[t.factors[k]] for k in active)
        v = tuple(_V_BIT[t.factors[k]] for k in active)
        if not active:
            units.append(Unit(t.coeff, "const"))
        elif u == v:
            units.append(Unit(t.coeff, "proj", active, u, u))
        else:
            want = adjoint(t)
            j = next(
                (j for j in range(i + 1, len(terms)) if j not in used and terms[j] == want),
                None,
            )
            if j is None:
                raise InputError(f"term {t} has no adjoint partner")
            used.add(j)
            units.append(Unit(t.coeff, "pair", active, u, v))
    return units


def _combine(parts):
    """Linear combination of independent estimates: ``[(coeff, Estimate), ...]``."""
    value = sum(c * e.value for c, e in parts)
    var = sum((c * e.stderr) ** 2 for c, e in parts)
    return value, float(np.sqrt(var))


def _expect_units(state, units, plan, stream0):
    parts = []
    for n, unit in enumerate(units):
        stream = stream0 + n
        if unit.kind == "const":
            parts.append((unit.coeff, Estimate(1.0, 0.0)))
        elif unit.kind == "proj":
            parts.append((unit.coeff, estimate_projector_string(state, unit.u, plan, unit.qubits, stream)))
        else:
            parts.append((unit.coeff, estimate_two_level(state, unit.u, unit.v, plan, unit.qubits, stream=stream)))
    return _combine(parts)


def _ancilla_units(state, units, plan, imag, stream0):
    """``<X (x) op>`` (or ``<Y (x) op>``) on a register whose qubit 0 is the ancilla."""
    parts = []
    for n, unit in enumerate(units):
        qubits = (0,) + tuple(k + 1 for k in unit.qubits)
        if unit.kind == "pair":
            # X(x)(T + T^+) splits into two two-level operators; Y likewise
            pairs = [((0,) + unit.u, (1,) + unit.v), ((0,) + unit.v, (1,) + unit.u)]
        else:
            pairs = [((0,) + unit.u, (1,) + unit.u)]
        for s, (u, v) in enumerate(pairs):
            est = estimate_two_level(state, u, v, plan, qubits, imag=imag, stream=stream0 + 2 * n + s)
            parts.append((unit.coeff, est))
    return _combine(parts)


@dataclass(frozen=True)
class CostEstimate:
    value: float
    stderr: float
    a2: float
    overlap_re: float
    overlap_im: float

    def to_dict(self):
        return asdict(self)


def cost_sampled_state(model: CostModel, psi: np.ndarray, plan: Optional[ShotPlan] = None) -> CostEstimate:
    """Shot-based cost for an explicit state (``plan=None`` gives the infinite-shot limit)."""
    if model.a2_sum is None:
        raise InputError("sampled backend needs a decomposition of A^2")
    psi = np.asarray(psi, dtype=complex)
    a2_units = measurement_units(model.a2_sum)
    a_units = measurement_units(model.a_sum)
    a2, se_a2 = _expect_units(psi, a2_units, plan, 0)
    ext = prepare_b_psi(model.b_state, psi)
    base = len(a2_units)
    re, se_re = _ancilla_units(ext, a_units, plan, False, base)
    im, se_im = _ancilla_units(ext, a_units, plan, True, base + 2 * len(a_units))
    z2 = re**2 + im**2
    if model.debias:
        z2 -= se_re**2 + se_im**2
    se_z2 = np.sqrt((2 * re * se_re) ** 2 + (2 * im * se_im) ** 2)
    return CostEstimate(float(a2 - z2), float(np.hypot(se_a2, se_z2)), a2, re, im)


def cost_sampled(model: CostModel, psi_circuit: Sequence, plan: Optional[ShotPlan] = None) -> CostEstimate:
    """Run ``psi_circuit`` on ``|0>`` and estimate the cost from shots."""
    plan = plan or model.plan
    if plan is None:
        raise InputError("cost_sampled needs a ShotPlan")
    psi = run_circuit(psi_circuit, zero_state(model.qubits))
    return cost_sampled_state(model, psi, plan)


# ------------------------------------------------------------- optimization


@dataclass(frozen=True)
class OptimizerSettings:
    method: str = "bfgs"
    tol: float = 1e-8
    max_iter: int = 200
    fd_step: float = 1e-6
    restarts: int = 5
    seed: int = 0
    learning_rate: float = 0.05
    grad_floor: float = 1e-10
    armijo: float = 1e-4
    shrink: float = 0.5
    max_backtracks: int = 40

    def __post_init__(self):
        if self.method not in ("bfgs", "gradient-descent"):
            raise InputError(f"unknown optimizer {self.method!r}")
        if self.restarts < 1 or self.max_iter < 1:
            raise InputError("restarts and max_iter must be positive")

    def to_dict(self):
        return asdict(self)


@dataclass
class VqaRun:
    config: dict
    params: list = field(default_factory=list)
    costs: list = field(default_factory=list)
    best_costs: list = field(default_factory=list)
    grad_norms: list = field(default_factory=list)
    fidelities: list = field(default_factory=list)
    iterations: int = 0
    theta_opt: Optional[np.ndarray] = None
    cost_opt: float = float("inf")
    fidelity: Optional[float] = None
    final_state: Optional[np.ndarray] = None
    seeds: list = field(default_factory=list)
    restart: int = 0
    stop_reason: str = ""
    wall_clock: float = 0.0
    restart_costs: list = field(default_factory=list)

    def record(self, theta, cost, grad_norm, fid=None):
        self.params.append(np.array(theta, dtype=float))
        self.costs.append(float(cost))
        best = min(self.best_costs[-1], cost) if self.best_costs else cost
        self.best_costs.append(float(best))
        self.grad_norms.append(float(grad_norm))
        self.fidelities.append(None if fid is None else float(fid))

    def to_dict(self, timing: bool = False) -> dict:
        out = {
            "config": self.config,
            "iterations": self.iterations,
            "restart": self.restart,
            "seeds": list(self.seeds),
            "stop_reason": self.stop_reason,
            "cost_opt": self.cost_opt,
            "fidelity": self.fidelity,
            "theta_opt": None if self.theta_opt is None else self.theta_opt.tolist(),
            "restart_costs": self.restart_costs,
            "final_state": None
            if self.final_state is None
            else {"re": self.final_state.real.tolist(), "im": self.final_state.imag.tolist()},
            "trace": {
                "theta": [p.tolist() for p in self.params],
                "cost": self.costs,
                "best_cost": self.best_costs,
                "grad_norm": self.grad_norms,
                "fidelity": self.fidelities,
            },
        }
        if timing:
            out["wall_clock"] = self.wall_clock
        return out

    def csv_rows(self):
        yield ["iteration", "cost", "best_cost", "grad_norm", "fidelity"]
        for i in range(len(self.costs)):
            fid = self.fidelities[i]
            yield [
                i,
                repr(self.costs[i]),
                repr(self.best_costs[i]),
                repr(self.grad_norms[i]),
                "" if fid is None else repr(fid),
            ]


def central_gradient(f_batch: Callable, theta: np.ndarray, step: float) -> np.ndarray:
    """Central differences with all ``2P`` shifted points evaluated in one batch."""
    P = theta.size
    shifts = np.eye(P) * step
    points = np.concatenate([theta + shifts, theta - shifts])
    vals = np.asarray(f_batch(points), dtype=float)
    return (vals[:P] - vals[P:]) / (2 * step)


def make_objective(model: CostModel, spec: ans.AnsatzSpec, backend: str = "exact"):
    """Batched objective ``theta (B, P) -> cost (B,)``.

    The sampled backend reuses one seed for every point of a batch (common
    random numbers), which keeps central differences meaningful under shot
    noise; the seed advances with each call.
    """
    if backend == "exact":

        def f(thetas):
            return np.atleast_1d(cost_exact(model, ans.ansatz_state(spec, thetas)))

        return f
    if backend != "shots":
        raise InputError(f"unknown backend {backend!r}")
    if model.plan is None:
        raise InputError("shots backend needs a ShotPlan on the cost model")
    calls = [0]

    def f(thetas):
        plan = ShotPlan(model.plan.shots, int(np.random.SeedSequence([model.plan.seed, calls[0]]).generate_state(1, np.uint64)[0]))
        calls[0] += 1
        states = ans.ansatz_state(spec, np.atleast_2d(thetas))
        return np.array([cost_sampled_state(model, s, plan).value for s in states])

    return f


def _run_single(f, theta0, opts: OptimizerSettings, fid_fn, run: VqaRun):
    x = np.array(theta0, dtype=float)
    fx = float(f(x[None])[0])
    if not np.isfinite(fx):
        raise NumericalError("non-finite initial cost", run)
    g = central_gradient(f, x, opts.fd_step)
    run.record(x, fx, np.linalg.norm(g), fid_fn(x))
    H = np.eye(x.size)
    first = True
    run.stop_reason = "max_iter"
    for it in range(1, opts.max_iter + 1):
        run.iterations = it
        if np.linalg.norm(g) <= opts.grad_floor:
            run.record(x, fx, np.linalg.norm(g), fid_fn(x))
            run.stop_reason = "grad_floor"
            break
        if opts.method == "bfgs":
            p = -H @ g
            slope = g @ p
            if slope >= 0:
                H = np.eye(x.size)
                p, slope = -g, -(g @ g)
            t = 1.0
            for _ in range(opts.max_backtracks):
                f_new = float(f((x + t * p)[None])[0])
                if np.isfinite(f_new) and f_new <= fx + opts.armijo * t * slope:
                    break
                t *= opts.shrink
            else:
                run.record(x, fx, np.linalg.norm(g), fid_fn(x))
                run.stop_reason = "line_search"
                break
            x_new = x + t * p
        else:
            x_new = x - opts.learning_rate * g
            f_new = float(f(x_new[None])[0])
        if not np.isfinite(f_new):
            raise NumericalError(f"non-finite cost at iteration {it}", run)
        g_new = central_gradient(f, x_new, opts.fd_step)
        if opts.method == "bfgs":
            s, y = x_new - x, g_new - g
            sy = s @ y
            if sy > 1e-12:
                if first:
                    H = np.eye(x.size) * (sy / (y @ y))
                    first = False
                rho = 1.0 / sy
                V = np.eye(x.size) - rho * np.outer(s, y)
                H = V @ H @ V.T + rho * np.outer(s, s)
        delta = fx - f_new
        x, fx, g = x_new, f_new, g_new
        run.record(x, fx, np.linalg.norm(g), fid_fn(x))
        if abs(delta) <= opts.tol:
            run.stop_reason = "tol"
            break
    return x, fx


def restart_seed(seed: int, restart: int) -> int:
    return int(np.random.SeedSequence([seed, restart]).generate_state(1, np.uint64)[0])


def optimize(
    model: CostModel,
    spec: ans.AnsatzSpec,
    opts: OptimizerSettings = OptimizerSettings(),
    backend: str = "exact",
    x_reference: Optional[np.ndarray] = None,
    config: Optional[dict] = None,
    initial: Sequence[np.ndarray] = (),
) -> VqaRun:
    """Minimize the cost from ``opts.restarts`` random starts; return the best run.

    ``initial`` adds deterministic starting points that run after the random
    ones.  Runs are ranked by their final backend cost.
    """
    if spec.qubits != model.qubits:
        raise InputError("ansatz and cost model act on different qubit counts")
    f = make_objective(model, spec, backend)
    if x_reference is not None:
        fid_fn = lambda th: fidelity(ans.ansatz_state(spec, th), x_reference)
    else:
        fid_fn = lambda th: None
    best = None
    finals = []
    start = time.perf_counter()
    starts = [(restart_seed(opts.seed, r), None) for r in range(opts.restarts)]
    starts += [(None, np.asarray(th, dtype=float)) for th in initial]
    for r, (seed, theta0) in enumerate(starts):
        run = VqaRun(config=dict(config or {}), seeds=[opts.seed, seed], restart=r)
        if theta0 is None:
            theta0 = ans.init_parameters(spec, seed)
        if spec.num_parameters == 0:
            x, fx = theta0, float(f(theta0[None])[0])
            run.record(x, fx, 0.0, fid_fn(x))
            run.stop_reason = "no_parameters"
        else:
            x, fx = _run_single(f, theta0, opts, fid_fn, run)
        run.theta_opt = x
        run.cost_opt = fx
        finals.append(fx)
        if best is None or fx < best.cost_opt:
            best = run
    best.restart_costs = finals
    best.final_state = ans.ansatz_state(spec, best.theta_opt)
    if x_reference is not None:
        best.fidelity = fidelity(best.final_state, x_reference)
    best.wall_clock = time.perf_counter() - start
    return best
