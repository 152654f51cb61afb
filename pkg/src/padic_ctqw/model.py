"""Model specifications and their JSON representation.

A model file looks like::

    {"kind": "graph", "level": 2, "support": [0, 1, 3],
     "mass": 1.0, "potential": [0, 0, 0.5],
     "adjacency": [[0, 1, 0], [1, 0, 1], [0, 1, 0]]}

``graph`` models take ``adjacency`` (or an ``edges`` list of index pairs),
``biweighted`` models take ``A`` and ``B``, and ``convolution`` models take
``profile: {"shells": [...], "deep": ...}`` and always live on all of G_l.
Matrices are indexed by position in ``support``.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ContractError, ModelParseError
from .evolution import HeatGenerator, heat_generator, heat_generator_from_hamiltonian
from .operators import (
    KINDS,
    AdjacencyMatrix,
    BiWeights,
    HermitianHamiltonian,
    RadialProfile,
    assemble,
    biweighted_rates,
    convolution_rates,
    graph_rates,
)
from .padic import SupportSet, check_level

_ALLOWED = {
    "graph": {"kind", "level", "support", "mass", "potential", "adjacency", "edges"},
    "biweighted": {"kind", "level", "support", "A", "B"},
    "convolution": {"kind", "level", "mass", "potential", "profile"},
}


@dataclass(frozen=True)
class ModelSpec:
    kind: str
    level: int
    support: SupportSet
    mass: float = 1.0
    potential: tuple[float, ...] | None = None
    adjacency: AdjacencyMatrix | None = None
    weights: BiWeights | None = None
    profile: RadialProfile | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ContractError(f"unknown model kind {self.kind!r}")
        if self.support.level != self.level:
            raise ContractError("support level differs from model level")
        needed = {"graph": "adjacency", "biweighted": "weights", "convolution": "profile"}[self.kind]
        for name in ("adjacency", "weights", "profile"):
            present = getattr(self, name) is not None
            if present != (name == needed):
                raise ContractError(f"{self.kind} model {'needs' if not present else 'cannot take'} {name}")
        part = getattr(self, needed)
        if self.kind == "convolution":
            if part.level != self.level or not self.support.is_full():
                raise ContractError("convolution models live on the full level-l partition")
        elif part.support != self.support:
            raise ContractError(f"{needed} support differs from model support")
        if not self.mass > 0:
            raise ContractError(f"mass must be positive, got {self.mass}")
        if self.kind == "biweighted" and (self.mass != 1.0 or self.potential is not None):
            raise ContractError("biweighted models absorb mass and potential into A and B")
        if self.potential is not None:
            pot = tuple(float(v) for v in self.potential)
            if len(pot) != len(self.support):
                raise ContractError(f"potential has {len(pot)} entries for {len(self.support)} balls")
            object.__setattr__(self, "potential", pot)

    @property
    def from_sampler(self) -> bool:
        return self.weights is not None and self.weights.from_sampler

    def rate_form(self):
        """``(W, d)`` with ``H = -W + diag(d)``."""
        if self.kind == "graph":
            return graph_rates(self.adjacency, self.mass, self.potential)
        if self.kind == "biweighted":
            return biweighted_rates(self.weights)
        return convolution_rates(self.profile, self.mass, self.potential)

    def hamiltonian(self) -> HermitianHamiltonian:
        W, d = self.rate_form()
        return assemble(self.support, W, d, self.kind, self.from_sampler)

    def heat_generator(self, check_hypothesis: bool = False) -> HeatGenerator:
        if self.kind == "biweighted":
            return heat_generator(self.weights, check_hypothesis)
        return heat_generator_from_hamiltonian(self.hamiltonian())


# ---------------------------------------------------------------------------
# parsing


def _line_of(text: str, key: str) -> int | None:
    m = re.search(r'"%s"\s*:' % re.escape(key), text)
    return text.count("\n", 0, m.start()) + 1 if m else None


class _Parser:
    def __init__(self, text: str, source: str):
        self.text = text
        self.source = source

    def fail(self, key: str | None, msg: str):
        where = self.source
        if key is not None:
            line = _line_of(self.text, key)
            where += f", key '{key}'" + (f" (line {line})" if line else "")
        raise ModelParseError(f"{where}: {msg}")

    def number(self, key, value, integer=False):
        ok = isinstance(value, int) if integer else isinstance(value, (int, float))
        if isinstance(value, bool) or not ok or (not integer and not math.isfinite(value)):
            self.fail(key, f"expected {'an integer' if integer else 'a finite number'}, got {value!r}")
        return value

    def vector(self, key, value, n):
        if not isinstance(value, list) or len(value) != n:
            self.fail(key, f"expected a list of {n} numbers")
        return [float(self.number(key, v)) for v in value]

    def matrix(self, key, value, n):
        if not isinstance(value, list) or len(value) != n:
            self.fail(key, f"expected a {n}x{n} matrix (list of {n} rows)")
        rows = []
        for i, row in enumerate(value):
            if not isinstance(row, list) or len(row) != n:
                self.fail(key, f"row {i} must have {n} entries")
            rows.append([self.number(key, v) for v in row])
        a = np.array(rows, dtype=float)
        bad = np.argwhere(np.abs(a - a.T) > 1e-12)
        if bad.size:
            i, j = bad[0]
            self.fail(key, f"matrix is not symmetric: entry ({i}, {j}) = {a[i, j]!r} "
                           f"but ({j}, {i}) = {a[j, i]!r}")
        neg = np.argwhere(a < 0)
        if neg.size:
            i, j = neg[0]
            self.fail(key, f"negative entry {a[i, j]!r} at ({i}, {j})")
        return a

    def parse(self, doc) -> ModelSpec:
        if not isinstance(doc, dict):
            self.fail(None, "top level must be a JSON object")
        kind = doc.get("kind")
        if kind not in KINDS:
            self.fail("kind", f"must be one of {', '.join(KINDS)}, got {kind!r}")
        extra = set(doc) - _ALLOWED[kind]
        if extra:
            self.fail(sorted(extra)[0], f"not allowed for kind '{kind}'")
        if "level" not in doc:
            self.fail(None, "missing required key 'level'")
        level = self.number("level", doc["level"], integer=True)
        try:
            level = check_level(level)
        except ContractError as exc:
            self.fail("level", str(exc))

        if "support" in doc:
            sup = doc["support"]
            if not isinstance(sup, list) or not sup:
                self.fail("support", "expected a nonempty list of ball indices")
            for v in sup:
                self.number("support", v, integer=True)
                if not 0 <= v < 2 ** level:
                    self.fail("support", f"index {v} is not below 2**level = {2 ** level}")
            try:
                support = SupportSet(level, tuple(sup))
            except ContractError as exc:
                self.fail("support", str(exc))
        else:
            support = SupportSet.full(level)
        n = len(support)

        mass = 1.0
        if "mass" in doc:
            mass = float(self.number("mass", doc["mass"]))
            if mass <= 0:
                self.fail("mass", f"must be positive, got {mass}")
        potential = None
        if "potential" in doc:
            potential = tuple(self.vector("potential", doc["potential"], n))

        kw = {}
        if kind == "graph":
            if ("adjacency" in doc) == ("edges" in doc):
                self.fail(None, "graph models need exactly one of 'adjacency' or 'edges'")
            if "adjacency" in doc:
                a = self.matrix("adjacency", doc["adjacency"], n)
                if not np.all((a == 0) | (a == 1)):
                    self.fail("adjacency", "entries must be 0 or 1")
                kw["adjacency"] = AdjacencyMatrix(support, a.astype(np.int64))
            else:
                edges = doc["edges"]
                if not isinstance(edges, list) or any(
                        not isinstance(e, list) or len(e) != 2 for e in edges):
                    self.fail("edges", "expected a list of [I, J] pairs")
                for e in edges:
                    for v in e:
                        self.number("edges", v, integer=True)
                        if v not in support:
                            self.fail("edges", f"vertex {v} is not in the support")
                kw["adjacency"] = AdjacencyMatrix.from_edges(support, edges)
        elif kind == "biweighted":
            for key in ("A", "B"):
                if key not in doc:
                    self.fail(None, f"missing required key '{key}'")
            kw["weights"] = BiWeights(support, self.matrix("A", doc["A"], n), self.matrix("B", doc["B"], n))
        else:
            prof = doc.get("profile")
            if not isinstance(prof, dict) or set(prof) != {"shells", "deep"}:
                self.fail("profile", "expected an object with keys 'shells' and 'deep'")
            shells = self.vector("shells", prof["shells"], level)
            deep = float(self.number("deep", prof["deep"]))
            if any(v < 0 for v in shells) or deep < 0:
                self.fail("profile", "values must be nonnegative")
            mass_j = sum(v * 2.0 ** (-k - 1) for k, v in enumerate(shells)) + deep * 2.0 ** -level
            if abs(mass_j - 1.0) > 1e-12:
                self.fail("profile", f"profile mass is {mass_j!r}, must be 1")
            kw["profile"] = RadialProfile(level, tuple(shells), deep)

        try:
            return ModelSpec(kind, level, support, mass, potential, **kw)
        except ContractError as exc:
            self.fail(None, str(exc))


def parse_model_text(text: str, source: str = "<string>") -> ModelSpec:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelParseError(f"{source}: invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    return _Parser(text, source).parse(doc)


def parse_model(path) -> ModelSpec:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ModelParseError(f"{path}: cannot read model file ({exc.strerror})") from None
    return parse_model_text(text, str(path))


def model_to_dict(spec: ModelSpec) -> dict:
    doc = {"kind": spec.kind, "level": spec.level}
    if spec.kind != "convolution":
        doc["support"] = list(spec.support.indices)
    if spec.kind != "biweighted":
        doc["mass"] = spec.mass
        if spec.potential is not None:
            doc["potential"] = list(spec.potential)
    if spec.kind == "graph":
        doc["adjacency"] = spec.adjacency.entries.tolist()
    elif spec.kind == "biweighted":
        doc["A"] = spec.weights.A.tolist()
        doc["B"] = spec.weights.B.tolist()
    else:
        doc["profile"] = {"shells": list(spec.profile.shell_values), "deep": spec.profile.deep_value}
    return doc


def write_model(spec: ModelSpec, path) -> None:
    Path(path).write_text(json.dumps(model_to_dict(spec), indent=2) + "\n")
