"""Multitype branching-process specifications.

A :class:`ProcessSpec` bundles ``d`` cell types, one finite-support offspring
law per type and, for continuous-time use, one lifespan law per type.  Types
are indexed from 0 in code; every user-facing label counts from 1.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from typing import Any, Iterable, Mapping, Sequence

import numpy as np

from .errors import (
    DimensionError,
    MissingLifespanError,
    ParameterError,
    ProbabilityMassError,
    SpecError,
)

PROB_TOL = 1e-12

LIFESPAN_KINDS = {
    "deterministic": ("tau",),
    "exponential": ("rate",),
    "gamma": ("shape", "scale"),
}


@dataclass(frozen=True)
class OffspringLaw:
    """Finite-support law of the offspring vector of one parent cell.

    ``atoms`` is a tuple of ``(probability, offspring_vector)`` pairs.
    """

    atoms: tuple[tuple[float, tuple[int, ...]], ...]

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[float, Sequence[int]]]) -> "OffspringLaw":
        return cls(tuple((float(p), tuple(int(k) for k in n)) for p, n in pairs))

    @property
    def probs(self) -> np.ndarray:
        return np.array([p for p, _ in self.atoms], dtype=float)

    @property
    def vectors(self) -> np.ndarray:
        return np.array([n for _, n in self.atoms], dtype=np.int64)

    def __len__(self) -> int:
        return len(self.atoms)


@dataclass(frozen=True)
class LifespanLaw:
    kind: str
    params: tuple[float, ...]

    @classmethod
    def deterministic(cls, tau: float) -> "LifespanLaw":
        return cls("deterministic", (float(tau),))

    @classmethod
    def exponential(cls, rate: float) -> "LifespanLaw":
        return cls("exponential", (float(rate),))

    @classmethod
    def gamma(cls, shape: float, scale: float) -> "LifespanLaw":
        return cls("gamma", (float(shape), float(scale)))

    def sample(self, rng: np.random.Generator) -> float:
        if self.kind == "deterministic":
            return self.params[0]
        if self.kind == "exponential":
            return float(rng.exponential(1.0 / self.params[0]))
        if self.kind == "gamma":
            return float(rng.gamma(self.params[0], self.params[1]))
        raise ValueError(f"unknown lifespan kind {self.kind!r}")

    def mean(self) -> float:
        if self.kind == "deterministic":
            return self.params[0]
        if self.kind == "exponential":
            return 1.0 / self.params[0]
        return self.params[0] * self.params[1]


@dataclass(frozen=True)
class ProcessSpec:
    d: int
    type_names: tuple[str, ...]
    offspring: tuple[OffspringLaw, ...]
    lifespans: tuple[LifespanLaw, ...] | None = None
    time_mode: str = "discrete"

    @classmethod
    def build(
        cls,
        offspring: Sequence[OffspringLaw | Iterable[tuple[float, Sequence[int]]]],
        type_names: Sequence[str] | None = None,
        lifespans: Sequence[LifespanLaw] | None = None,
        time_mode: str = "discrete",
    ) -> "ProcessSpec":
        """Assemble and validate a spec from plain atom lists."""
        laws = tuple(
            law if isinstance(law, OffspringLaw) else OffspringLaw.from_pairs(law)
            for law in offspring
        )
        d = len(laws)
        names = tuple(type_names) if type_names is not None else tuple(
            f"T{i + 1}" for i in range(d)
        )
        spec = cls(
            d=d,
            type_names=names,
            offspring=laws,
            lifespans=tuple(lifespans) if lifespans is not None else None,
            time_mode=time_mode,
        )
        return validate_spec(spec)


def _collect_violations(spec: ProcessSpec) -> list[tuple[type, str, str]]:
    out: list[tuple[type, str, str]] = []
    d = spec.d
    if not isinstance(d, (int, np.integer)) or d < 1:
        out.append((DimensionError, "d", f"must be an integer >= 1, got {d!r}"))
        return out
    if len(spec.type_names) != d:
        out.append((DimensionError, "types", f"expected {d} names, got {len(spec.type_names)}"))
    if len(spec.offspring) != d:
        out.append((DimensionError, "offspring", f"expected {d} laws, got {len(spec.offspring)}"))
    for i, law in enumerate(spec.offspring):
        where = f"offspring[{i + 1}]"
        if len(law.atoms) == 0:
            out.append((ProbabilityMassError, where, "no atoms"))
            continue
        seen = set()
        for a, (p, n) in enumerate(law.atoms):
            if not math.isfinite(p) or p < 0 or p > 1:
                out.append((ProbabilityMassError, f"{where}.atoms[{a + 1}].p", f"{p!r} not in [0, 1]"))
            if len(n) != d:
                out.append((DimensionError, f"{where}.atoms[{a + 1}].n", f"length {len(n)} != d={d}"))
            if any(k < 0 for k in n):
                out.append((DimensionError, f"{where}.atoms[{a + 1}].n", "negative offspring count"))
            if n in seen:
                out.append((SpecError, f"{where}.atoms[{a + 1}].n", f"duplicate offspring vector {list(n)}"))
            seen.add(n)
        mass = math.fsum(p for p, _ in law.atoms)
        if abs(mass - 1.0) > PROB_TOL:
            out.append((ProbabilityMassError, where, f"probabilities sum to {mass!r}, not 1"))
    if spec.time_mode not in ("discrete", "continuous"):
        out.append((SpecError, "time_mode", f"unknown mode {spec.time_mode!r}"))
    if spec.lifespans is None:
        if spec.time_mode == "continuous":
            out.append((MissingLifespanError, "lifespans", "continuous time requires a lifespan law per type"))
    else:
        if len(spec.lifespans) != d:
            kind = MissingLifespanError if len(spec.lifespans) < d else DimensionError
            out.append((kind, "lifespans", f"expected {d} laws, got {len(spec.lifespans)}"))
        for i, life in enumerate(spec.lifespans):
            where = f"lifespans[{i + 1}]"
            names = LIFESPAN_KINDS.get(life.kind)
            if names is None:
                out.append((SpecError, where, f"unknown kind {life.kind!r}"))
            elif len(life.params) != len(names):
                out.append((SpecError, where, f"{life.kind} takes {len(names)} parameter(s)"))
            elif not all(math.isfinite(v) and v > 0 for v in life.params):
                out.append((SpecError, where, "parameters must be strictly positive"))
    return out


def validate_spec(spec: ProcessSpec) -> ProcessSpec:
    """Check every invariant of ``spec``; return it with renormalized laws.

    Raises the error class of the first violation found, carrying the full
    list of ``(field_path, message)`` violations.
    """
    found = _collect_violations(spec)
    if found:
        raise found[0][0]([(path, msg) for _, path, msg in found])
    laws = []
    for law in spec.offspring:
        mass = math.fsum(p for p, _ in law.atoms)
        laws.append(OffspringLaw(tuple((p / mass, n) for p, n in law.atoms)))
    return replace(spec, offspring=tuple(laws))


def offspring_pgf_eval(spec: ProcessSpec, i: int, s: Sequence[float]) -> float:
    """Offspring generating function h_i(s) of type ``i`` (0-based)."""
    if not 0 <= i < spec.d:
        raise IndexError(f"type index {i} out of range for d={spec.d}")
    s = np.asarray(s, dtype=float)
    if s.shape != (spec.d,):
        raise DimensionError([("s", f"expected a vector of length {spec.d}")])
    law = spec.offspring[i]
    return math.fsum(p * float(np.prod(s ** np.asarray(n))) for p, n in law.atoms)


def offspring_moments(spec: ProcessSpec) -> tuple[np.ndarray, np.ndarray]:
    """Offspring mean matrix and second factorial moment tensor.

    ``M[i, j] = E n_j`` and ``B[i, j, k] = E n_j (n_k - delta_jk)`` for a
    parent of type ``i``.
    """
    d = spec.d
    M = np.zeros((d, d))
    B = np.zeros((d, d, d))
    eye = np.eye(d, dtype=np.int64)
    for i, law in enumerate(spec.offspring):
        p = law.probs
        n = law.vectors
        M[i] = p @ n
        # n_j * (n_k - delta_jk) per atom
        prod = n[:, :, None] * (n[:, None, :] - eye[None, :, :])
        B[i] = np.einsum("a,ajk->jk", p, prod)
    return M, B


def _check_simplex(probs: Sequence[float], what: str) -> None:
    if any((not math.isfinite(p)) or p < 0 for p in probs):
        raise ParameterError(f"{what}: probabilities must be nonnegative, got {list(probs)}")
    if abs(math.fsum(probs) - 1.0) > PROB_TOL:
        raise ParameterError(f"{what}: probabilities sum to {math.fsum(probs)!r}, not 1")


def example2_spec(
    p0: float,
    p1: float,
    p2: float,
    lifespans: Sequence[LifespanLaw] | None = None,
    time_mode: str | None = None,
) -> ProcessSpec:
    """Progenitor/differentiated-cell model.

    A progenitor dies (``p0``), divides into two progenitors (``p1``) or turns
    into one terminally differentiated cell (``p2``); differentiated cells
    leave no progeny.
    """
    _check_simplex((p0, p1, p2), "example2")
    atoms = [(p0, (0, 0)), (p1, (2, 0)), (p2, (0, 1))]
    if time_mode is None:
        time_mode = "continuous" if lifespans is not None else "discrete"
    return ProcessSpec.build(
        [atoms, [(1.0, (0, 0))]],
        type_names=("progenitor", "differentiated"),
        lifespans=lifespans,
        time_mode=time_mode,
    )


def builtin_spec(name: str, params: Mapping[str, Any]) -> ProcessSpec:
    """Named model families.

    ``example1`` takes ``offspring``: two atom lists for a generic two-type
    process.  ``example2`` takes ``p0, p1, p2`` and optional ``lifespans`` and
    ``time_mode``.
    """
    if name == "example1":
        laws = params.get("offspring")
        if laws is None or len(laws) != 2:
            raise ParameterError("example1 needs two offspring laws")
        for i, law in enumerate(laws):
            pairs = law.atoms if isinstance(law, OffspringLaw) else list(law)
            _check_simplex([p for p, _ in pairs], f"example1 type {i + 1}")
        return ProcessSpec.build(laws, type_names=params.get("types"))
    if name == "example2":
        return example2_spec(
            params["p0"],
            params["p1"],
            params["p2"],
            lifespans=params.get("lifespans"),
            time_mode=params.get("time_mode"),
        )
    raise ParameterError(f"unknown builtin {name!r}; expected example1 or example2")


# JSON spec files ----------------------------------------------------------


def spec_from_dict(doc: Mapping[str, Any]) -> ProcessSpec:
    try:
        d = int(doc["d"])
        offspring = [
            OffspringLaw.from_pairs((atom["p"], atom["n"]) for atom in law)
            for law in doc["offspring"]
        ]
    except (KeyError, TypeError) as exc:
        raise SpecError([("<document>", f"malformed spec: {exc!r}")]) from None
    lifespans = None
    if doc.get("lifespans") is not None:
        lifespans = []
        for i, entry in enumerate(doc["lifespans"]):
            kind = entry.get("kind")
            names = LIFESPAN_KINDS.get(kind)
            if names is None:
                raise SpecError([(f"lifespans[{i + 1}].kind", f"unknown kind {kind!r}")])
            raw = entry.get("params", {})
            if isinstance(raw, Mapping):
                try:
                    vals = tuple(float(raw[k]) for k in names)
                except KeyError as exc:
                    raise SpecError([(f"lifespans[{i + 1}].params", f"missing {exc}")]) from None
            else:
                vals = tuple(float(v) for v in raw)
            lifespans.append(LifespanLaw(kind, vals))
    names = doc.get("types") or [f"T{i + 1}" for i in range(d)]
    spec = ProcessSpec(
        d=d,
        type_names=tuple(str(n) for n in names),
        offspring=tuple(offspring),
        lifespans=tuple(lifespans) if lifespans is not None else None,
        time_mode=doc.get("time_mode", "discrete"),
    )
    return validate_spec(spec)


def spec_to_dict(spec: ProcessSpec) -> dict[str, Any]:
    doc: dict[str, Any] = {
        "d": spec.d,
        "types": list(spec.type_names),
        "offspring": [[{"p": p, "n": list(n)} for p, n in law.atoms] for law in spec.offspring],
        "time_mode": spec.time_mode,
    }
    if spec.lifespans is not None:
        doc["lifespans"] = [
            {"kind": life.kind, "params": dict(zip(LIFESPAN_KINDS[life.kind], life.params))}
            for life in spec.lifespans
        ]
    return doc


def load_spec(path) -> ProcessSpec:
    with open(path, encoding="utf-8") as fh:
        return spec_from_dict(json.load(fh))


def dump_spec(spec: ProcessSpec, path=None) -> str:
    text = json.dumps(spec_to_dict(spec), indent=2) + "\n"
    if path is not None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    return text
