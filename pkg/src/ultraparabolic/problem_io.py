"""Problem files: INI-style key-value documents.

Example::

    [problem]
    horizon = 1.0
    n_max = 10
    ; start from a builtin, optionally projected on a K-grid
    builtin = benchmark
    K = 100
    ; optional sin(m x)/m data perturbation
    perturbation = 100

    [phi]
    1 = exp 1.0 -2.0 -1.0      ; c*exp(a*t + b)
    2 = const 0.5
    file = phi.csv             ; columns: time,<mode>,<mode>,...

    [psi]
    1 = exp 1.0 -1.0 -2.0

    [source]
    1 = exp -2.0 -2.0 -1.0 0.0 ; c*exp(a*t + b*s + d)
    file = source.csv          ; columns: t,s,<mode>,... on the full tensor grid

Modes listed in a section are added to whatever the builtin supplies.
Relative CSV paths resolve against the problem file's directory.
"""

from __future__ import annotations

import configparser
import csv
from pathlib import Path

import numpy as np

from .problem import (
    AnalyticProfile,
    ClosedForm,
    ConstantProfile,
    PerturbationSpec,
    ProblemSpec,
    SampledProfile,
    SumProfile,
    TimeProfile,
    benchmark_problem,
    perturb,
    zero_profile,
)
from .spectral import SpaceGrid

BUILTINS = ("benchmark",)
_ARITY = {"phi": 1, "psi": 1, "source": 2}


class ProblemFileError(ValueError):
    pass


def parse_int(text: str) -> int:
    """Integer that may be written in scientific notation, e.g. ``1e10``."""
    try:
        value = float(text)
    except ValueError:
        raise ProblemFileError(f"not a number: {text!r}") from None
    if not value.is_integer():
        raise ProblemFileError(f"not an integer: {text!r}")
    if "e" in text.lower():
        # float() is exact for powers of ten up to 1e22
        return int(value)
    return int(text)


def _read_sampled(path: Path, arity: int) -> SampledProfile:
    try:
        with path.open(newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise ProblemFileError(f"cannot read {path}: {exc.strerror or exc}") from exc
    if not rows:
        raise ProblemFileError(f"{path}: empty file")
    header, body = rows[0], [r for r in rows[1:] if r]
    try:
        data = np.array(body, dtype=float).reshape(len(body), len(header))
        modes = [parse_int(h) for h in header[arity:]]
    except ValueError as exc:
        raise ProblemFileError(f"{path}: {exc}") from None
    if arity == 1:
        try:
            return SampledProfile(data[:, 0], {n: data[:, k + 1] for k, n in enumerate(modes)})
        except ValueError as exc:
            raise ProblemFileError(f"{path}: {exc}") from exc
    times = np.unique(data[:, 0])
    if not np.array_equal(times, np.unique(data[:, 1])) or len(data) != times.size**2:
        raise ProblemFileError(f"{path}: source samples must cover the full (t, s) tensor grid")
    order = np.lexsort((data[:, 1], data[:, 0]))
    data = data[order]
    return SampledProfile(
        times, {n: data[:, k + 2].reshape(times.size, times.size) for k, n in enumerate(modes)}, arity=2
    )


def _read_section(cp: configparser.ConfigParser, name: str, base_dir: Path) -> list[TimeProfile]:
    arity = _ARITY[name]
    if not cp.has_section(name):
        return []
    parts: list[TimeProfile] = []
    terms = {}
    for key, value in cp.items(name):
        if key == "file":
            parts.append(_read_sampled(base_dir / value, arity))
            continue
        try:
            n = int(key)
        except ValueError:
            raise ProblemFileError(f"[{name}]: unknown key {key!r}") from None
        kind, *params = value.split()
        try:
            terms[n] = ClosedForm(kind, tuple(float(v) for v in params), arity)
        except ValueError as exc:
            raise ProblemFileError(f"[{name}] mode {n}: {exc}") from exc
    if terms:
        parts.append(AnalyticProfile(terms, arity))
    return parts


def _combine(base: TimeProfile | None, parts: list[TimeProfile], arity: int) -> TimeProfile:
    all_parts = ([base] if base is not None else []) + parts
    if not all_parts:
        return zero_profile(arity)
    return all_parts[0] if len(all_parts) == 1 else SumProfile(all_parts)


def loads_problem(text: str, base_dir: Path | str = ".") -> ProblemSpec:
    cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ProblemFileError(str(exc)) from exc
    if not cp.has_section("problem"):
        raise ProblemFileError("missing [problem] section")
    head = cp["problem"]
    base = None
    if "builtin" in head:
        name = head["builtin"]
        if name not in BUILTINS:
            raise ProblemFileError(f"unknown builtin {name!r}; known: {', '.join(BUILTINS)}")
        grid = SpaceGrid(parse_int(head["K"])) if "K" in head else None
        base = benchmark_problem(grid, parse_int(head.get("n_max", "10")))
    try:
        T = float(head["horizon"]) if "horizon" in head else (base.T if base else None)
    except ValueError:
        raise ProblemFileError(f"bad horizon {head['horizon']!r}") from None
    if T is None:
        raise ProblemFileError("[problem] needs a horizon")
    n_max = parse_int(head["n_max"]) if "n_max" in head else (base.n_max if base else None)
    base_dir = Path(base_dir)
    profiles = {}
    for name in _ARITY:
        own = _read_section(cp, name, base_dir)
        profiles[name] = _combine(getattr(base, name) if base else None, own, _ARITY[name])
    if n_max is None:
        n_max = max((max(p.modes, default=1) for p in profiles.values()), default=1)
    try:
        spec = ProblemSpec(T, profiles["phi"], profiles["psi"], profiles["source"], n_max,
                           base.name if base else "")
    except ValueError as exc:
        raise ProblemFileError(str(exc)) from exc
    if "perturbation" in head:
        spec = perturb(spec, PerturbationSpec(parse_int(head["perturbation"])))
    return spec


def load_problem(path: Path | str) -> ProblemSpec:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ProblemFileError(f"cannot read problem file {path}: {exc.strerror or exc}") from exc
    return loads_problem(text, path.parent)


def dumps_problem(spec: ProblemSpec) -> str:
    """Serialise a problem whose profiles are all tagged closed forms."""
    lines = ["[problem]", f"horizon = {spec.T!r}", f"n_max = {spec.n_max}"]
    for name in _ARITY:
        profile = getattr(spec, name)
        lines.append("")
        lines.append(f"[{name}]")
        seen = set()
        for n, term in _closed_forms(profile, name):
            if n in seen:
                raise ProblemFileError(f"{name} mode {n} has several terms; cannot serialise")
            seen.add(n)
            lines.append(f"{n} = {term.tag()}")
    return "\n".join(lines) + "\n"


def _closed_forms(profile: TimeProfile, name: str):
    if isinstance(profile, SumProfile):
        for part in profile.parts:
            yield from _closed_forms(part, name)
        return
    if isinstance(profile, AnalyticProfile):
        for n, term in profile.terms.items():
            if not isinstance(term, ClosedForm):
                raise ProblemFileError(f"{name} mode {n} is an untagged callable; cannot serialise")
            yield n, term
        return
    if isinstance(profile, ConstantProfile):
        for n, c in zip(profile.modes, profile.values):
            yield n, ClosedForm("const", (float(c),), profile.arity)
        return
    raise ProblemFileError(f"{name}: {type(profile).__name__} cannot be written as closed forms")
