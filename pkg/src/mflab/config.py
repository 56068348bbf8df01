"""Experiment configuration: one TOML file with sections, strictly validated.

Unknown sections or keys are rejected outright (silent typos in threshold
names have burned enough hours).  Pass/fail thresholds live in the file
with defaults matching the acceptance values, so they can be tightened or
relaxed without touching code.

Coupling conventions per experiment (see fokker_planck for background):
``escape``, ``two_clique``, and ``fp_rates`` read ``model.coupling`` in the
single-oscillator convention with critical coupling 2 (the escape runner
builds the pair kernel with coupling K/2, the two-clique runner with K —
its halved edge density supplies the same factor); ``proximity_sweep``
reads it as the literal pair-kernel coupling.
"""

from __future__ import annotations

import hashlib
import sys
from dataclasses import dataclass, field
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .graphs import (
    Graph,
    gen_complete,
    gen_erdos_renyi,
    gen_random_regular,
    gen_two_clique,
)
from .models import DisorderLaw, ModelSpec, make_active_rotator, \
    make_generalized_kuramoto, make_kuramoto
from .sde import PhaseLaw, SimConfig

EXPERIMENT_KINDS = ("escape", "two_clique", "proximity_sweep", "degree_tails",
                    "fp_rates")

_SCHEMA: dict[str, set[str]] = {
    "": {"experiment"},
    "graph": {"kind", "n", "half", "q", "symmetric", "d", "alpha", "p", "seed"},
    "model": {"kind", "coupling", "sigma", "a", "lag"},
    "model.disorder": {"atoms", "weights"},
    "init": {"phase", "center", "spread"},
    "sim": {"dt", "t_final", "record_every", "workers"},
    "seeds": {"start", "count", "list"},
    "output": {"dir"},
    "fp": {"k_max", "dt", "p", "t_final", "record_every", "perturbation"},
    "proximity": {"family", "sizes", "q", "q_exponent", "degree_exponent",
                  "checkpoints"},
    "degree_tails": {"pairs", "draws", "eps_grid", "exact_max_n"},
    "thresholds": {"crossing_lo", "crossing_hi", "dbl_max", "r_frac",
                   "pass_frac", "ratio_lo", "ratio_hi", "rate_rel_err",
                   "uniformity_min_seeds"},
}

_DEFAULT_THRESHOLDS = {
    "crossing_lo": 4.0,
    "crossing_hi": 9.0,
    "dbl_max": 0.1,
    "r_frac": 0.9,
    "pass_frac": 0.95,
    "ratio_lo": 2.5,
    "ratio_hi": 6.0,
    "rate_rel_err": 0.05,
    "uniformity_min_seeds": 20,
}


class ConfigError(ValueError):
    """Malformed experiment configuration (maps to CLI exit code 2)."""


def _check_keys(table: dict, section: str) -> None:
    allowed = _SCHEMA.get(section)
    if allowed is None:
        raise ConfigError(f"unknown config section [{section}]")
    for key, value in table.items():
        if isinstance(value, dict):
            _check_keys(value, f"{section}.{key}" if section else key)
        elif key not in allowed:
            where = f"[{section}]" if section else "top level"
            raise ConfigError(f"unknown key {key!r} in {where}")


@dataclass(frozen=True)
class ExperimentConfig:
    """Validated config; sections are plain dicts with schema-checked keys."""

    kind: str
    sections: dict
    sha256: str
    source: str = field(default="<dict>")

    @staticmethod
    def from_file(path) -> "ExperimentConfig":
        raw = Path(path).read_bytes()
        try:
            data = tomllib.loads(raw.decode("utf-8"))
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"invalid TOML in {path}: {exc}") from exc
        return ExperimentConfig.from_dict(
            data, sha256=hashlib.sha256(raw).hexdigest(), source=str(path))

    @staticmethod
    def from_dict(data: dict, sha256: str | None = None,
                  source: str = "<dict>") -> "ExperimentConfig":
        top = {k: v for k, v in data.items() if not isinstance(v, dict)}
        _check_keys(top, "")
        for name, table in data.items():
            if isinstance(table, dict):
                _check_keys(table, name)
        kind = data.get("experiment")
        if kind not in EXPERIMENT_KINDS:
            raise ConfigError(f"experiment must be one of {EXPERIMENT_KINDS}, "
                              f"got {kind!r}")
        if sha256 is None:
            sha256 = hashlib.sha256(repr(sorted(data.items())).encode()).hexdigest()
        return ExperimentConfig(kind, data, sha256, source)

    # -- section accessors with defaults ---------------------------------

    def section(self, name: str) -> dict:
        return self.sections.get(name, {})

    def threshold(self, name: str) -> float:
        value = self.section("thresholds").get(name, _DEFAULT_THRESHOLDS[name])
        return value

    def seeds(self) -> list[int]:
        sec = self.section("seeds")
        if "list" in sec:
            if "start" in sec or "count" in sec:
                raise ConfigError("[seeds] takes either list or start/count")
            out = [int(s) for s in sec["list"]]
        else:
            start = int(sec.get("start", 1))
            count = int(sec.get("count", 10))
            out = list(range(start, start + count))
        if len(out) != len(set(out)):
            raise ConfigError("seed list contains duplicates")
        if not out:
            raise ConfigError("need at least one seed")
        return sorted(out)

    def out_dir(self) -> Path:
        return Path(self.section("output").get("dir", "out"))

    # -- builders ---------------------------------------------------------

    def build_graph(self) -> Graph:
        sec = self.section("graph")
        kind = sec.get("kind")
        seed = int(sec.get("seed", 0))
        if kind == "complete":
            graph = gen_complete(int(sec["n"]))
        elif kind == "two_clique":
            graph = gen_two_clique(int(sec["half"]))
        elif kind == "erdos_renyi":
            graph = gen_erdos_renyi(int(sec["n"]), float(sec["q"]),
                                    bool(sec.get("symmetric", False)), seed)
        elif kind == "random_regular":
            graph = gen_random_regular(int(sec["n"]), int(sec["d"]), seed)
        else:
            raise ConfigError(f"unknown graph kind {kind!r}")
        if "alpha" in sec:
            graph = graph.with_alpha(float(sec["alpha"]))
        return graph

    def graph_density(self) -> float:
        """Target edge density p for degree statistics."""
        sec = self.section("graph")
        if "p" in sec:
            return float(sec["p"])
        kind = sec.get("kind")
        if kind == "two_clique":
            return 0.5
        if kind == "erdos_renyi" and "alpha" not in sec:
            return float(sec["q"])
        return 1.0

    def build_model(self, coupling: float | None = None) -> ModelSpec:
        sec = self.section("model")
        kind = sec.get("kind", "kuramoto")
        k = float(coupling if coupling is not None else sec.get("coupling", 1.0))
        sigma = float(sec.get("sigma", 1.0))
        disorder = None
        if "disorder" in sec:
            disorder = DisorderLaw(
                tuple(tuple(a) for a in sec["disorder"]["atoms"]),
                tuple(sec["disorder"]["weights"]))
        if kind == "kuramoto":
            return make_kuramoto(k, disorder, sigma=sigma)
        if kind == "active_rotator":
            return make_active_rotator(float(sec.get("a", 0.0)), k, sigma=sigma)
        if kind == "generalized":
            if disorder is None:
                raise ConfigError("generalized model needs a disorder table")
            return make_generalized_kuramoto(k, float(sec.get("lag", 0.0)),
                                             disorder, sigma=sigma)
        raise ConfigError(f"unknown model kind {kind!r}")

    def build_phase_law(self) -> PhaseLaw:
        sec = self.section("init")
        return PhaseLaw(sec.get("phase", "uniform"),
                        float(sec.get("center", 0.0)),
                        float(sec.get("spread", 0.0)))

    def sim_config(self, seed: int, workers: int | None = None) -> SimConfig:
        sec = self.section("sim")
        return SimConfig(
            dt=float(sec.get("dt", 0.01)),
            t_final=float(sec.get("t_final", 1.0)),
            seed=seed,
            record_every=int(sec.get("record_every", 1)),
            workers=int(workers if workers is not None else sec.get("workers", 1)),
        )
