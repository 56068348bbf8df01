"""Euler-Maruyama integration of the interacting particle system and of
the coupled mean-field limit copies driven by the same noise.

Phases live on the real line (unwrapped); wrapping to the circle happens
only in observables.  All noise comes from the counter-based fields in
:mod:`mflab.rng`, so a step's Gaussian increment for particle i is a pure
function of (seed, step, i): trajectories are bit-identical regardless of
vectorization or worker count, and the true-system / limit-system pair in
:func:`simulate_coupled` reads literally the same increments.

Interaction evaluation is O(edges) through a sparse matrix product in
general; graphs that are disjoint unions of complete-with-diagonal blocks
(complete graph, two cliques) advertise that structure and get an O(n)
per-block global-sum path instead.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .fokker_planck import DensityTrajectory, UnsupportedKernelError
from .graphs import Graph
from .models import DisorderLaw, ModelSpec
from .rng import (
    STREAM_INIT_DISORDER,
    STREAM_INIT_PHASE,
    STREAM_SIM_NOISE,
    categorical_field,
    normal_field,
    uniform_field,
)
from .timegrid import record_steps, step_count

PHASE_LAW_KINDS = ("uniform", "point", "wrapped_gaussian")


@dataclass(frozen=True)
class PhaseLaw:
    """Initial phase distribution: uniform on [0, 2pi), a point mass, or a
    Gaussian of the given center and spread (wrapped only when viewed on
    the circle; samples stay on the real line)."""

    kind: str
    center: float = 0.0
    spread: float = 0.0

    def __post_init__(self) -> None:
        if self.kind not in PHASE_LAW_KINDS:
            raise ValueError(f"unknown phase law {self.kind!r}; "
                             f"expected one of {PHASE_LAW_KINDS}")
        if self.kind == "wrapped_gaussian" and self.spread < 0:
            raise ValueError("spread must be >= 0")


@dataclass(frozen=True, eq=False)
class EnsembleState:
    """Phases, disorder assignment (as atom indices), and the clock."""

    theta: np.ndarray
    omega_idx: np.ndarray
    t: float

    def __post_init__(self) -> None:
        theta = np.asarray(self.theta, dtype=np.float64)
        omega_idx = np.asarray(self.omega_idx, dtype=np.int64)
        if theta.ndim != 1 or theta.shape != omega_idx.shape:
            raise ValueError("theta and omega_idx must be 1-d of equal length")
        if not np.all(np.isfinite(theta)):
            raise ValueError("phases must be finite")
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "omega_idx", omega_idx)

    @property
    def n(self) -> int:
        return len(self.theta)

    def omega_values(self, law: DisorderLaw) -> np.ndarray:
        """(n, dim) per-particle disorder components."""
        if self.omega_idx.max(initial=0) >= law.n_atoms:
            raise ValueError("disorder index outside the law's atom list")
        return law.values[self.omega_idx]


@dataclass(frozen=True)
class SimConfig:
    dt: float
    t_final: float
    seed: int
    record_every: int = 1
    workers: int = 1

    def __post_init__(self) -> None:
        if self.dt <= 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if self.t_final < 0:
            raise ValueError(f"t_final must be >= 0, got {self.t_final}")
        if self.record_every < 1:
            raise ValueError("record_every must be >= 1")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Recorded snapshots: theta has shape (n_times, n)."""

    times: np.ndarray
    theta: np.ndarray
    omega_idx: np.ndarray

    def state(self, index: int) -> EnsembleState:
        return EnsembleState(self.theta[index], self.omega_idx,
                             float(self.times[index]))

    @property
    def final(self) -> EnsembleState:
        return self.state(len(self.times) - 1)


@dataclass(frozen=True, eq=False)
class CoupledTrajectory:
    """Paired snapshots of the graph system and its limit copies.

    ``running_sup_sq[m, i]`` is sup over all steps up to recorded time m of
    the squared gap |theta_i - theta_bar_i|^2 (tracked every step, not just
    at snapshots), so it is nondecreasing along the first axis.
    """

    times: np.ndarray
    theta: np.ndarray
    theta_bar: np.ndarray
    running_sup_sq: np.ndarray
    omega_idx: np.ndarray
    seed: int
    fingerprint: str

    @property
    def max_gap_sq(self) -> np.ndarray:
        """Worst particle gap at each recorded time."""
        return self.running_sup_sq.max(axis=1)


def sample_initial(phase_law: PhaseLaw, disorder: DisorderLaw, n: int,
                   seed: int) -> EnsembleState:
    """IID draws from the product of the phase law and the disorder law."""
    if n < 1:
        raise ValueError("n must be >= 1")
    omega_idx = categorical_field(seed, STREAM_INIT_DISORDER, 0, n,
                                  disorder.weight_array)
    if phase_law.kind == "point":
        theta = np.full(n, float(phase_law.center))
    elif phase_law.kind == "uniform":
        theta = 2.0 * np.pi * uniform_field(seed, STREAM_INIT_PHASE, 0, n)
    else:
        z = normal_field(seed, STREAM_INIT_PHASE, 0, n)
        theta = phase_law.center + phase_law.spread * z
    return EnsembleState(theta, omega_idx, 0.0)


class _InteractionEngine:
    """Per-simulation precomputation of the interaction drift."""

    def __init__(self, graph: Graph, model: ModelSpec, omega_idx: np.ndarray,
                 path: str = "auto"):
        if path not in ("auto", "blocks", "generic"):
            raise ValueError(f"unknown interaction path {path!r}")
        self.graph = graph
        self.model = model
        law = model.disorder
        self.scale = graph.alpha_n / graph.n
        self.trig = model.kernel is not None
        if self.trig:
            kernel = model.kernel
            self.amp = kernel.amplitudes(law)[omega_idx]
            self.phase_shift = kernel.shifts(law)[omega_idx]
            self.lag = kernel.lag
            self.coupling = kernel.coupling
            use_blocks = graph.clique_blocks is not None and path != "generic"
            if path == "blocks" and graph.clique_blocks is None:
                raise ValueError("graph does not expose complete blocks")
            self.blocks = graph.clique_blocks if use_blocks else None
            if self.blocks is not None:
                starts = np.asarray([b[0] for b in self.blocks])
                sizes = np.asarray([b[1] - b[0] for b in self.blocks])
                self.block_starts = starts
                self.block_repeat = sizes
                self.adj = None
            else:
                self.adj = sp.csr_matrix(
                    (np.ones(graph.n_edges), graph.indices, graph.indptr),
                    shape=(graph.n, graph.n))
        else:
            if path == "blocks":
                raise ValueError("block fast path needs a trigonometric kernel")
            self.omega_vals = law.values[omega_idx]

    def drift(self, theta: np.ndarray) -> np.ndarray:
        if not self.trig:
            return self._drift_callable(theta)
        phi = theta - self.phase_shift
        w_c = self.amp * np.cos(phi)
        w_s = self.amp * np.sin(phi)
        if self.blocks is not None:
            sum_c = np.repeat(np.add.reduceat(w_c, self.block_starts),
                              self.block_repeat)
            sum_s = np.repeat(np.add.reduceat(w_s, self.block_starts),
                              self.block_repeat)
        else:
            sum_c = self.adj @ w_c
            sum_s = self.adj @ w_s
        lead = phi - self.lag
        return (-self.scale * self.coupling * self.amp
                * (np.sin(lead) * sum_c - np.cos(lead) * sum_s))

    def _drift_callable(self, theta: np.ndarray) -> np.ndarray:
        graph, model = self.graph, self.model
        out = np.empty(graph.n)
        for i in range(graph.n):
            nb = graph.neighbors(i)
            if len(nb) == 0:
                out[i] = 0.0
                continue
            vals = model.kernel_fn(theta[i], self.omega_vals[i],
                                   theta[nb], self.omega_vals[nb])
            out[i] = self.scale * np.sum(vals)
        return out


def simulate(graph: Graph, model: ModelSpec, init: EnsembleState,
             cfg: SimConfig, path: str = "auto") -> Trajectory:
    """Integrate the n-particle system with explicit Euler-Maruyama.

    ``path`` selects the interaction evaluation ("auto" picks the block
    fast path when the graph exposes one); all paths agree to rounding and
    the choice never affects the noise.
    """
    if init.n != graph.n:
        raise ValueError(f"initial state has {init.n} particles, "
                         f"graph has {graph.n}")
    n_steps = step_count(cfg.t_final, cfg.dt)
    rec = record_steps(n_steps, cfg.record_every)
    engine = _InteractionEngine(graph, model, init.omega_idx, path)
    v0 = model.drift_form.constants(model.disorder)[init.omega_idx]
    f_c, f_s = model.drift_form.cos_coef, model.drift_form.sin_coef
    noise_scale = model.sigma * np.sqrt(cfg.dt)

    theta = init.theta.copy()
    out = np.empty((len(rec), graph.n))
    pos = 0
    if rec[0] == 0:
        out[0] = theta
        pos = 1
    for step in range(n_steps):
        drift = v0 + engine.drift(theta)
        if f_c != 0.0:
            drift = drift + f_c * np.cos(theta)
        if f_s != 0.0:
            drift = drift + f_s * np.sin(theta)
        theta = theta + cfg.dt * drift
        if noise_scale != 0.0:
            theta = theta + noise_scale * normal_field(
                cfg.seed, STREAM_SIM_NOISE, step, graph.n)
        if pos < len(rec) and step + 1 == rec[pos]:
            out[pos] = theta
            pos += 1
    return Trajectory(rec * cfg.dt, out, init.omega_idx.copy())


def coupling_fingerprint(graph: Graph, model: ModelSpec, cfg: SimConfig,
                         p: float) -> str:
    """Digest of everything but the seed; equal for runs that may be pooled."""
    h = hashlib.sha256()
    h.update(np.asarray(graph.indptr).tobytes())
    h.update(np.asarray(graph.indices).tobytes())
    payload = (graph.n, graph.alpha_n, repr(model), cfg.dt, cfg.t_final,
               cfg.record_every, p)
    h.update(repr(payload).encode())
    return h.hexdigest()


def simulate_coupled(graph: Graph, model: ModelSpec, init: EnsembleState,
                     cfg: SimConfig, limit: DensityTrajectory,
                     p: float = 1.0, path: str = "auto") -> CoupledTrajectory:
    """Advance the graph system and its n independent limit copies together.

    Both systems start from the same state and consume the same Gaussian
    increment per (particle, step).  The limit copies feel the mean-field
    drift evaluated in closed form from mode 1 of the supplied density
    trajectory, scaled by p; the trajectory must cover [0, t_final] with a
    recording step no coarser than cfg.dt.
    """
    if model.kernel is None:
        raise UnsupportedKernelError(
            "coupled runs need the trigonometric kernel family")
    if init.n != graph.n:
        raise ValueError(f"initial state has {init.n} particles, "
                         f"graph has {graph.n}")
    if not 0.0 < p <= 1.0:
        raise ValueError(f"p must be in (0, 1], got {p}")
    n_steps = step_count(cfg.t_final, cfg.dt)
    if limit.t_final < cfg.t_final - 1e-9:
        raise ValueError("limit trajectory is shorter than the horizon")
    if len(limit.times) > 1 and np.max(np.diff(limit.times)) > cfg.dt * (1 + 1e-9):
        raise ValueError("limit trajectory must be recorded at step <= dt")
    rec = record_steps(n_steps, cfg.record_every)

    engine = _InteractionEngine(graph, model, init.omega_idx, path)
    law = model.disorder
    kernel = model.kernel
    v0 = model.drift_form.constants(law)[init.omega_idx]
    f_c, f_s = model.drift_form.cos_coef, model.drift_form.sin_coef
    amp_i = kernel.amplitudes(law)[init.omega_idx]
    gamma_i = kernel.shifts(law)[init.omega_idx] + kernel.lag
    noise_scale = model.sigma * np.sqrt(cfg.dt)

    # aggregated mode-1 interaction field at every step time
    step_times = np.arange(n_steps) * cfg.dt
    c1, s1 = limit.mode1_interpolated(step_times)  # (n_steps, n_atoms)
    w_amp = law.weight_array * kernel.amplitudes(law)
    cos_a, sin_a = np.cos(kernel.shifts(law)), np.sin(kernel.shifts(law))
    field_x = (c1 * (w_amp * cos_a) + s1 * (w_amp * sin_a)).sum(axis=1)
    field_y = (s1 * (w_amp * cos_a) - c1 * (w_amp * sin_a)).sum(axis=1)

    theta = init.theta.copy()
    theta_bar = init.theta.copy()
    sup_sq = np.zeros(graph.n)

    m = len(rec)
    out = np.empty((m, graph.n))
    out_bar = np.empty((m, graph.n))
    out_sup = np.empty((m, graph.n))
    pos = 0
    if rec[0] == 0:
        out[0], out_bar[0], out_sup[0] = theta, theta_bar, sup_sq
        pos = 1

    def base_drift(th: np.ndarray) -> np.ndarray:
        d = v0.copy()
        if f_c != 0.0:
            d += f_c * np.cos(th)
        if f_s != 0.0:
            d += f_s * np.sin(th)
        return d

    for step in range(n_steps):
        lead = theta_bar - gamma_i
        mean_field = -p * kernel.coupling * amp_i * (
            np.sin(lead) * field_x[step] - np.cos(lead) * field_y[step])
        drift = base_drift(theta) + engine.drift(theta)
        drift_bar = base_drift(theta_bar) + mean_field
        if noise_scale != 0.0:
            z = noise_scale * normal_field(cfg.seed, STREAM_SIM_NOISE, step,
                                           graph.n)
        else:
            z = 0.0
        theta = theta + cfg.dt * drift + z
        theta_bar = theta_bar + cfg.dt * drift_bar + z
        np.maximum(sup_sq, (theta - theta_bar) ** 2, out=sup_sq)
        if pos < len(rec) and step + 1 == rec[pos]:
            out[pos], out_bar[pos], out_sup[pos] = theta, theta_bar, sup_sq
            pos += 1

    return CoupledTrajectory(rec * cfg.dt, out, out_bar, out_sup,
                             init.omega_idx.copy(), cfg.seed,
                             coupling_fingerprint(graph, model, cfg, p))
