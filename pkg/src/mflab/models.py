"""Model definitions: single-particle drift, pair interaction kernel, noise.

Three classical families are provided, all with kernels in the
single-harmonic trigonometric form

    kernel(theta, w, theta', w') = -A(w) A(w') * K * sin(theta - shift(w)
                                                         - theta' + shift(w') - lag)

which is what makes the interaction integral of the limit PDE exact in
Fourier space (only mode 1 of the density enters).  Disorder is a finite
list of weighted atoms; each atom is a tuple of real components and the
drift/kernel forms reference components by index.

Arbitrary kernels can be smuggled into the particle engine through
``kernel_fn`` (a vectorized callable), but the Fokker-Planck solver and
the coupled engine reject such specs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Sequence

import numpy as np

_WEIGHT_TOL = 1e-12


@dataclass(frozen=True)
class DisorderLaw:
    """Finite atomic disorder distribution; atoms are tuples of reals."""

    atoms: tuple[tuple[float, ...], ...]
    weights: tuple[float, ...]

    def __post_init__(self) -> None:
        atoms = tuple(tuple(float(v) for v in a) for a in self.atoms)
        weights = tuple(float(w) for w in self.weights)
        if len(atoms) == 0 or len(atoms) != len(weights):
            raise ValueError("need matching, non-empty atom and weight lists")
        dim = len(atoms[0])
        if any(len(a) != dim for a in atoms):
            raise ValueError("all atoms must have the same number of components")
        if any(not math.isfinite(v) for a in atoms for v in a):
            raise ValueError("disorder atoms must have bounded (finite) components")
        if any(w <= 0 for w in weights):
            raise ValueError("atom weights must be positive")
        if abs(sum(weights) - 1.0) > _WEIGHT_TOL:
            raise ValueError(f"atom weights must sum to 1, got {sum(weights)}")
        object.__setattr__(self, "atoms", atoms)
        object.__setattr__(self, "weights", weights)

    @property
    def n_atoms(self) -> int:
        return len(self.atoms)

    @property
    def values(self) -> np.ndarray:
        """(n_atoms, dim) array of atom components."""
        return np.asarray(self.atoms, dtype=np.float64)

    @property
    def weight_array(self) -> np.ndarray:
        return np.asarray(self.weights, dtype=np.float64)

    def component(self, index: int | None, default: float = 0.0) -> np.ndarray:
        """Per-atom values of one component, or a constant fill when index is None."""
        if index is None:
            return np.full(self.n_atoms, default)
        return self.values[:, index].copy()

    @staticmethod
    def point(value: Sequence[float] = (0.0,)) -> "DisorderLaw":
        return DisorderLaw((tuple(value),), (1.0,))


@dataclass(frozen=True)
class DriftForm:
    """Single-particle drift as a degree-1 trigonometric polynomial in theta.

    drift(theta, w) = const(w) + cos_coef * cos(theta) + sin_coef * sin(theta),
    where const(w) is either a fixed value or one component of the disorder
    atom.  This covers every drift used here and keeps the Galerkin transport
    terms exact.
    """

    const_component: int | None = None
    const_value: float = 0.0
    cos_coef: float = 0.0
    sin_coef: float = 0.0

    def constants(self, law: DisorderLaw) -> np.ndarray:
        return law.component(self.const_component, self.const_value)

    def evaluate(self, theta, omega) -> np.ndarray:
        theta = np.asarray(theta, dtype=np.float64)
        omega = np.asarray(omega, dtype=np.float64)
        if self.const_component is None:
            const = self.const_value
        else:
            const = omega[..., self.const_component]
        return const + self.cos_coef * np.cos(theta) + self.sin_coef * np.sin(theta)


@dataclass(frozen=True)
class KernelForm:
    """Trigonometric pair kernel; see the module docstring for the formula."""

    coupling: float
    lag: float = 0.0
    amp_component: int | None = None
    shift_component: int | None = None

    def __post_init__(self) -> None:
        if self.coupling < 0:
            raise ValueError(f"coupling must be >= 0, got {self.coupling}")

    def amplitudes(self, law: DisorderLaw) -> np.ndarray:
        return law.component(self.amp_component, 1.0)

    def shifts(self, law: DisorderLaw) -> np.ndarray:
        return law.component(self.shift_component, 0.0)

    def evaluate(self, theta, omega, theta_p, omega_p) -> np.ndarray:
        theta = np.asarray(theta, dtype=np.float64)
        theta_p = np.asarray(theta_p, dtype=np.float64)
        omega = np.asarray(omega, dtype=np.float64)
        omega_p = np.asarray(omega_p, dtype=np.float64)
        if self.amp_component is None:
            amp = amp_p = 1.0
        else:
            amp = omega[..., self.amp_component]
            amp_p = omega_p[..., self.amp_component]
        if self.shift_component is None:
            shift = shift_p = 0.0
        else:
            shift = omega[..., self.shift_component]
            shift_p = omega_p[..., self.shift_component]
        return -amp * amp_p * self.coupling * np.sin(
            theta - shift - theta_p + shift_p - self.lag
        )


@dataclass(frozen=True)
class ModelSpec:
    """Complete model: drift, kernel, noise level, disorder, and the
    Lipschitz/sup constants that feed the proximity bound."""

    drift_form: DriftForm
    kernel: KernelForm | None
    sigma: float
    disorder: DisorderLaw
    lip_drift: float
    lip_kernel: float
    sup_kernel: float
    sup_drift: float
    kernel_fn: Callable[..., np.ndarray] | None = field(default=None)

    def __post_init__(self) -> None:
        if self.sigma < 0:
            raise ValueError(f"sigma must be >= 0, got {self.sigma}")
        for name in ("lip_drift", "lip_kernel", "sup_kernel", "sup_drift"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v >= 0):
                raise ValueError(f"{name} must be finite and nonnegative, got {v}")
        if (self.kernel is None) == (self.kernel_fn is None):
            raise ValueError("exactly one of kernel / kernel_fn must be set")

    def drift(self, theta, omega) -> np.ndarray:
        """F(theta, omega) with omega an atom tuple or (..., dim) array."""
        return self.drift_form.evaluate(theta, omega)

    def kernel_value(self, theta, omega, theta_p, omega_p) -> np.ndarray:
        if self.kernel is not None:
            return self.kernel.evaluate(theta, omega, theta_p, omega_p)
        return self.kernel_fn(theta, omega, theta_p, omega_p)


class ModelConstants(NamedTuple):
    """Constants (c, C=3c) entering the pathwise proximity bound."""

    c: float
    C: float


def make_kuramoto(coupling: float, disorder: DisorderLaw | None = None,
                  sigma: float = 1.0) -> ModelSpec:
    """Stochastic Kuramoto model: drift is the natural frequency (atom
    component 0), kernel -K sin(theta - theta')."""
    if coupling < 0:
        raise ValueError(f"coupling must be >= 0, got {coupling}")
    law = disorder if disorder is not None else DisorderLaw.point((0.0,))
    freqs = law.values[:, 0]
    return ModelSpec(
        drift_form=DriftForm(const_component=0),
        kernel=KernelForm(coupling=coupling),
        sigma=sigma,
        disorder=law,
        lip_drift=0.0,
        lip_kernel=coupling,
        sup_kernel=coupling,
        sup_drift=float(np.abs(freqs).max()),
    )


def make_active_rotator(a: float, coupling: float, sigma: float = 1.0) -> ModelSpec:
    """Active rotator: drift 1 - a*sin(theta), Kuramoto kernel, no disorder."""
    if coupling < 0:
        raise ValueError(f"coupling must be >= 0, got {coupling}")
    return ModelSpec(
        drift_form=DriftForm(const_value=1.0, sin_coef=-float(a)),
        kernel=KernelForm(coupling=coupling),
        sigma=sigma,
        disorder=DisorderLaw.point((0.0,)),
        lip_drift=abs(a),
        lip_kernel=coupling,
        sup_kernel=coupling,
        sup_drift=1.0 + abs(a),
    )


def make_generalized_kuramoto(coupling: float, lag: float,
                              disorder: DisorderLaw,
                              sigma: float = 1.0) -> ModelSpec:
    """Kuramoto variant with per-atom amplitude and phase shift.

    Atoms carry (frequency, amplitude, shift); the kernel picks up the
    product of the two amplitudes and the difference of the shifts, plus a
    global lag.  Choosing amplitude 1, shift 0, lag 0 recovers make_kuramoto
    exactly.
    """
    if coupling < 0:
        raise ValueError(f"coupling must be >= 0, got {coupling}")
    values = disorder.values
    if values.shape[1] < 3:
        raise ValueError("atoms must carry (frequency, amplitude, shift)")
    amp_max = float(np.abs(values[:, 1]).max())
    strength = coupling * amp_max**2
    return ModelSpec(
        drift_form=DriftForm(const_component=0),
        kernel=KernelForm(coupling=coupling, lag=lag, amp_component=1,
                          shift_component=2),
        sigma=sigma,
        disorder=disorder,
        lip_drift=0.0,
        lip_kernel=strength,
        sup_kernel=strength,
        sup_drift=float(np.abs(values[:, 0]).max()),
    )


def model_constants(spec: ModelSpec) -> ModelConstants:
    """Gronwall constants: c = max(2*L_F + 1, 2*L_K**2, 4*supK**2), C = 3c."""
    c = max(2.0 * spec.lip_drift + 1.0,
            2.0 * spec.lip_kernel**2,
            4.0 * spec.sup_kernel**2)
    return ModelConstants(c=c, C=3.0 * c)
