"""Experiment manifest: INI-format config parsing and round-trip.

Sections are [objective], [noise], [experiment], [output]; the exact key
names are documented in docs/config_schema.md.  Parsing is strict: unknown
keys and malformed values raise ConfigError with the offending key named.
"""

from __future__ import annotations

import configparser
import io
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError
from .landscape import builtin_names, from_polynomial, get_objective
from .noise import FiniteSupport, IsotropicGaussian, TruncatedGaussian
from .polynomials import Polynomial

_OBJECTIVE_KEYS = {"name", "terms", "box"}
_NOISE_KEYS = {"kind", "sigma", "radius", "atoms", "probs"}
_EXPERIMENT_KEYS = {
    "etas", "runs_per_eta", "epsilon", "x0", "x0_node", "x0_offset",
    "master_seed", "max_steps", "grid_density", "target_nodes",
}
_OUTPUT_KEYS = {"dir"}


@dataclass
class ExperimentManifest:
    objective_name: str | None = None
    objective_terms: list | None = None  # [(powers, coeff), ...]
    objective_box: list | None = None  # [(lo, hi), ...]
    noise_kind: str = "gaussian"
    noise_sigma: float = 1.0
    noise_radius: float | None = None
    noise_atoms: list | None = None
    noise_probs: list | None = None
    etas: list = field(default_factory=list)
    runs_per_eta: int = 100
    epsilon: float = 1e-2
    x0: list | None = None
    x0_node: int | None = None
    x0_offset: float = 0.05
    master_seed: int = 0
    max_steps: int = 10_000_000
    grid_density: int = 20
    target_nodes: list | None = None
    output_dir: str = "out"

    def validate(self):
        if (self.objective_name is None) == (self.objective_terms is None):
            raise ConfigError(
                "[objective] needs exactly one of 'name' or 'terms'"
            )
        if self.objective_name is not None and \
                self.objective_name not in builtin_names():
            raise ConfigError(
                f"[objective] unknown name {self.objective_name!r}; "
                f"known: {builtin_names()}"
            )
        if self.objective_terms is not None and self.objective_box is None:
            raise ConfigError("[objective] inline 'terms' require 'box'")
        if self.noise_kind not in (
            "gaussian", "truncated_gaussian", "finite_support"
        ):
            raise ConfigError(f"[noise] unknown kind {self.noise_kind!r}")
        if self.noise_kind == "truncated_gaussian" and self.noise_radius is None:
            raise ConfigError("[noise] truncated_gaussian requires 'radius'")
        if self.noise_kind == "finite_support" and (
            self.noise_atoms is None or self.noise_probs is None
        ):
            raise ConfigError("[noise] finite_support requires atoms and probs")
        if not self.etas:
            raise ConfigError("[experiment] 'etas' must be nonempty")
        if any(e <= 0 for e in self.etas) or len(set(self.etas)) != len(self.etas):
            raise ConfigError("[experiment] etas must be positive and distinct")
        if self.runs_per_eta < 1:
            raise ConfigError("[experiment] runs_per_eta must be >= 1")
        if self.epsilon <= 0:
            raise ConfigError("[experiment] epsilon must be positive")
        if self.max_steps < 1:
            raise ConfigError("[experiment] max_steps must be >= 1")
        if self.x0 is not None and self.x0_node is not None:
            raise ConfigError("[experiment] give x0 or x0_node, not both")
        return self

    def build_objective(self):
        if self.objective_name is not None:
            return get_objective(self.objective_name)
        powers = [list(map(int, p)) for p, _ in self.objective_terms]
        coeffs = [c for _, c in self.objective_terms]
        poly = Polynomial(powers, coeffs)
        return from_polynomial("inline", poly, self.objective_box)

    def build_noise(self, dim):
        if self.noise_kind == "gaussian":
            return IsotropicGaussian(self.noise_sigma**2, dim)
        if self.noise_kind == "truncated_gaussian":
            return TruncatedGaussian(self.noise_sigma**2, self.noise_radius, dim)
        return FiniteSupport(np.asarray(self.noise_atoms, dtype=float),
                             np.asarray(self.noise_probs, dtype=float))


def _floats(text):
    return [float(t) for t in text.replace(",", " ").split()]


def _check_keys(cp, section, allowed):
    if not cp.has_section(section):
        return
    extra = set(cp.options(section)) - allowed
    if extra:
        raise ConfigError(f"[{section}] unknown keys: {sorted(extra)}")


def parse_manifest(text):
    cp = configparser.ConfigParser()
    try:
        cp.read_string(text)
    except configparser.Error as e:
        raise ConfigError(f"malformed config: {e}") from e
    for sec, allowed in (
        ("objective", _OBJECTIVE_KEYS),
        ("noise", _NOISE_KEYS),
        ("experiment", _EXPERIMENT_KEYS),
        ("output", _OUTPUT_KEYS),
    ):
        _check_keys(cp, sec, allowed)
    m = ExperimentManifest()
    try:
        if cp.has_option("objective", "name"):
            m.objective_name = cp.get("objective", "name").strip()
        if cp.has_option("objective", "terms"):
            terms = []
            for part in cp.get("objective", "terms").split(";"):
                part = part.strip()
                if not part:
                    continue
                nums = part.split()
                terms.append(([int(v) for v in nums[:-1]], float(nums[-1])))
            m.objective_terms = terms
        if cp.has_option("objective", "box"):
            m.objective_box = [
                _floats(part) for part in cp.get("objective", "box").split(";")
                if part.strip()
            ]
        if cp.has_section("noise"):
            m.noise_kind = cp.get("noise", "kind", fallback="gaussian").strip()
            m.noise_sigma = cp.getfloat("noise", "sigma", fallback=1.0)
            if cp.has_option("noise", "radius"):
                m.noise_radius = cp.getfloat("noise", "radius")
            if cp.has_option("noise", "atoms"):
                m.noise_atoms = [
                    _floats(p) for p in cp.get("noise", "atoms").split(";")
                    if p.strip()
                ]
            if cp.has_option("noise", "probs"):
                m.noise_probs = _floats(cp.get("noise", "probs"))
        if not cp.has_section("experiment"):
            raise ConfigError("missing [experiment] section")
        exp = cp["experiment"]
        m.etas = _floats(exp.get("etas", ""))
        m.runs_per_eta = exp.getint("runs_per_eta", fallback=100)
        m.epsilon = exp.getfloat("epsilon", fallback=1e-2)
        if "x0" in exp:
            m.x0 = _floats(exp["x0"])
        if "x0_node" in exp:
            m.x0_node = exp.getint("x0_node")
        m.x0_offset = exp.getfloat("x0_offset", fallback=0.05)
        m.master_seed = exp.getint("master_seed", fallback=0)
        m.max_steps = exp.getint("max_steps", fallback=10_000_000)
        m.grid_density = exp.getint("grid_density", fallback=20)
        if "target_nodes" in exp:
            m.target_nodes = [int(v) for v in _floats(exp["target_nodes"])]
        if cp.has_section("output"):
            m.output_dir = cp.get("output", "dir", fallback="out").strip()
    except (ValueError, configparser.Error) as e:
        raise ConfigError(f"bad config value: {e}") from e
    return m.validate()


def load_manifest(path):
    with open(path, encoding="utf-8") as fh:
        return parse_manifest(fh.read())


def serialize_manifest(m):
    cp = configparser.ConfigParser()
    cp.add_section("objective")
    if m.objective_name is not None:
        cp.set("objective", "name", m.objective_name)
    if m.objective_terms is not None:
        cp.set("objective", "terms", "; ".join(
            " ".join(str(v) for v in p) + f" {c!r}"
            for p, c in m.objective_terms
        ))
    if m.objective_box is not None:
        cp.set("objective", "box", "; ".join(
            f"{lo!r} {hi!r}" for lo, hi in m.objective_box
        ))
    cp.add_section("noise")
    cp.set("noise", "kind", m.noise_kind)
    cp.set("noise", "sigma", repr(m.noise_sigma))
    if m.noise_radius is not None:
        cp.set("noise", "radius", repr(m.noise_radius))
    if m.noise_atoms is not None:
        cp.set("noise", "atoms", "; ".join(
            " ".join(repr(v) for v in a) for a in m.noise_atoms
        ))
    if m.noise_probs is not None:
        cp.set("noise", "probs", " ".join(repr(v) for v in m.noise_probs))
    cp.add_section("experiment")
    cp.set("experiment", "etas", " ".join(repr(e) for e in m.etas))
    cp.set("experiment", "runs_per_eta", str(m.runs_per_eta))
    cp.set("experiment", "epsilon", repr(m.epsilon))
    if m.x0 is not None:
        cp.set("experiment", "x0", " ".join(repr(v) for v in m.x0))
    if m.x0_node is not None:
        cp.set("experiment", "x0_node", str(m.x0_node))
    cp.set("experiment", "x0_offset", repr(m.x0_offset))
    cp.set("experiment", "master_seed", str(m.master_seed))
    cp.set("experiment", "max_steps", str(m.max_steps))
    cp.set("experiment", "grid_density", str(m.grid_density))
    if m.target_nodes is not None:
        cp.set("experiment", "target_nodes",
               " ".join(str(v) for v in m.target_nodes))
    cp.add_section("output")
    cp.set("output", "dir", m.output_dir)
    buf = io.StringIO()
    cp.write(buf)
    return buf.getvalue()
