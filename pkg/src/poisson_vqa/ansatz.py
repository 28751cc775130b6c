"""QAOA-style variational circuit.

Starting from ``|+>^m``, each layer applies the driver exponential
``exp(-i gamma H_D)`` followed by the mixer ``exp(-i beta sum_k X_k)``.
``exp(-i gamma Z_a Z_b)`` is the gate ``RZZ(2 gamma)`` and likewise for
``YY`` and ``X``, so every gate angle is twice its parameter.

The default driver is a ``ZZ`` ring over the register plus one ``YY`` coupling
on qubits ``(0, 1)``.  A single qubit has no couplings, so it gets a ``Z``
driver instead.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from poisson_vqa.errors import InputError
from poisson_vqa.simulator import Gate, apply, zero_state

MODES = ("two-per-layer", "per-term")
DRIVER_GATES = {"ZZ": "RZZ", "YY": "RYY", "Z": "RZ"}


def default_driver(m: int, fields: bool = False) -> tuple:
    """ZZ ring plus ``YY`` on ``(0, 1)``; ``fields`` appends a ``Z`` term per qubit.

    The couplings and the mixer all commute with the global flip ``prod_k X_k``,
    so without fields the reachable states are flip-symmetric.
    """
    if m == 1:
        return (("Z", (0,)),)
    ring = tuple(("ZZ", (i, (i + 1) % m)) for i in range(m))
    extra = tuple(("Z", (k,)) for k in range(m)) if fields else ()
    return ring + (("YY", (0, 1)),) + extra


@dataclass(frozen=True)
class AnsatzSpec:
    qubits: int
    layers: int
    mode: str = "two-per-layer"
    driver: Optional[tuple] = None
    mixer: Optional[tuple] = None

    def __post_init__(self):
        if self.qubits < 1 or self.layers < 0:
            raise InputError("need qubits >= 1 and layers >= 0")
        if self.mode not in MODES:
            raise InputError(f"mode must be one of {MODES}, got {self.mode!r}")
        driver = default_driver(self.qubits) if self.driver is None else self.driver
        driver = tuple((str(kind), tuple(int(k) for k in sites)) for kind, sites in driver)
        for kind, sites in driver:
            if kind not in DRIVER_GATES:
                raise InputError(f"unknown driver kind {kind!r}")
        mixer = tuple(range(self.qubits)) if self.mixer is None else tuple(int(k) for k in self.mixer)
        object.__setattr__(self, "driver", driver)
        object.__setattr__(self, "mixer", mixer)

    @property
    def terms_per_layer(self) -> int:
        return len(self.driver) + len(self.mixer)

    @property
    def num_parameters(self) -> int:
        if self.mode == "two-per-layer":
            return 2 * self.layers
        return self.layers * self.terms_per_layer

    @property
    def num_gates(self) -> int:
        return self.qubits + self.layers * self.terms_per_layer

    def with_layers(self, layers: int) -> "AnsatzSpec":
        return AnsatzSpec(self.qubits, layers, self.mode, self.driver, self.mixer)

    def to_dict(self) -> dict:
        return {
            "qubits": self.qubits,
            "layers": self.layers,
            "mode": self.mode,
            "driver": [[kind, list(sites)] for kind, sites in self.driver],
            "mixer": list(self.mixer),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "AnsatzSpec":
        unknown = set(data) - {"qubits", "layers", "mode", "driver", "mixer"}
        if unknown:
            raise InputError(f"unknown ansatz keys: {sorted(unknown)}")
        return cls(
            qubits=int(data["qubits"]),
            layers=int(data["layers"]),
            mode=data.get("mode", "two-per-layer"),
            driver=data.get("driver"),
            mixer=data.get("mixer"),
        )


class ParamGate(NamedTuple):
    """Gate whose angle is ``scale * theta[index]``; ``index`` is None for fixed gates."""

    kind: str
    qubits: tuple
    index: Optional[int] = None
    scale: float = 2.0


def template(spec: AnsatzSpec) -> list:
    gates = [ParamGate("H", (k,)) for k in range(spec.qubits)]
    idx = 0
    for _ in range(spec.layers):
        if spec.mode == "two-per-layer":
            gamma, beta = idx, idx + 1
            idx += 2
            gates += [ParamGate(DRIVER_GATES[kind], sites, gamma) for kind, sites in spec.driver]
            gates += [ParamGate("RX", (k,), beta) for k in spec.mixer]
        else:
            for kind, sites in spec.driver:
                gates.append(ParamGate(DRIVER_GATES[kind], sites, idx))
                idx += 1
            for k in spec.mixer:
                gates.append(ParamGate("RX", (k,), idx))
                idx += 1
    return gates


def _check_theta(spec, theta):
    theta = np.asarray(theta, dtype=float)
    if theta.shape[-1:] != (spec.num_parameters,):
        raise InputError(
            f"expected {spec.num_parameters} parameters, got shape {theta.shape}"
        )
    return theta


def build_circuit(spec: AnsatzSpec, theta) -> list:
    theta = _check_theta(spec, theta)
    return [
        Gate(g.kind, g.qubits, None if g.index is None else g.scale * theta[g.index])
        for g in template(spec)
    ]


def ansatz_state(spec: AnsatzSpec, theta) -> np.ndarray:
    """Output state ``U(theta)|0>``; ``theta`` may carry a leading batch axis."""
    theta = _check_theta(spec, theta)
    state = np.broadcast_to(zero_state(spec.qubits), theta.shape[:-1] + (2**spec.qubits,))
    for g in template(spec):
        angle = None if g.index is None else g.scale * theta[..., g.index]
        state = apply(state, g.kind, g.qubits, angle)
    return state


def init_parameters(spec: AnsatzSpec, seed: int) -> np.ndarray:
    """Uniform draws on ``[0, 2 pi)``."""
    rng = np.random.Generator(np.random.PCG64(seed))
    return rng.uniform(0.0, 2 * np.pi, size=spec.num_parameters)
