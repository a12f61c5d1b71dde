"""Analysis reports and their JSON form."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .lang import HI, LO, Level, Program, pretty_cmd, pretty_print
from .semantics import Counterexample, SecBisimMode, Verdict
from .typesys import Analysis, SystemId, first_failure

# JSON key and Analysis attribute of each typing function a system reports.
SYSTEM_FIELDS = {
    SystemId.VS1: (("maxTp1", "max_tp1"),),
    SystemId.VS2: (("maxTp1", "max_tp1"),),
    SystemId.BC: (("maxWtp", "max_wtp"), ("minRtp", "min_rtp")),
    SystemId.MB: (("minTRtp", "min_trtp"),),
}

_LEVEL_NAMES = {LO: "lo", HI: "hi"}


def _level(name: str) -> Level:
    for level, text in _LEVEL_NAMES.items():
        if text == name:
            return level
    raise ValueError(f"not a security level: {name!r}")


@dataclass(frozen=True)
class FailureSite:
    """Innermost rejected subterm, addressed by the constructor fields taken
    from the root (an empty path is the whole program)."""

    path: tuple[str, ...]
    subterm: str

    def __str__(self) -> str:
        return f"{'/'.join(self.path) or '<root>'}: {self.subterm}"


@dataclass(frozen=True)
class SystemReport:
    safe: bool
    values: dict[str, Level]
    first_failure: FailureSite | None = None

    def to_json(self) -> dict:
        out: dict = {"safe": self.safe}
        out.update((k, _LEVEL_NAMES[v]) for k, v in self.values.items())
        if self.first_failure is not None:
            out["firstFailure"] = {"path": list(self.first_failure.path),
                                   "subterm": self.first_failure.subterm}
        return out

    @classmethod
    def from_json(cls, system: SystemId, obj: dict) -> "SystemReport":
        values = {k: _level(obj[k]) for k, _ in SYSTEM_FIELDS[system]}
        ff = obj.get("firstFailure")
        site = None if ff is None else FailureSite(tuple(ff["path"]), ff["subterm"])
        return cls(bool(obj["safe"]), values, site)


@dataclass(frozen=True)
class CounterexampleReport:
    initial: tuple[str, str]
    left: str
    right: str
    reason: str
    step_target: str | None

    @classmethod
    def of(cls, cex: Counterexample) -> "CounterexampleReport":
        a, b = cex.initial
        return cls((str(a), str(b)), str(cex.left), str(cex.right), cex.reason,
                   None if cex.step_target is None else str(cex.step_target))

    def to_json(self) -> dict:
        return {"initial": list(self.initial), "left": self.left, "right": self.right,
                "reason": self.reason, "stepTarget": self.step_target}

    @classmethod
    def from_json(cls, obj: dict) -> "CounterexampleReport":
        a, b = obj["initial"]
        return cls((a, b), obj["left"], obj["right"], obj["reason"], obj["stepTarget"])

    def describe(self) -> str:
        lines = [f"initial pair: {self.initial[0]}  vs  {self.initial[1]}",
                 f"violated pair: {self.left}  vs  {self.right}"]
        if self.reason == "step":
            lines.append(f"unmatched step: {self.left} -> {self.step_target}")
        else:
            lines.append(f"{self.left} has terminated but {self.right} cannot terminate")
        return "\n".join(lines)


@dataclass(frozen=True)
class SemanticReport:
    mode: SecBisimMode
    secure: bool
    lts_nodes: int
    counterexample: CounterexampleReport | None = None

    @classmethod
    def of(cls, v: Verdict) -> "SemanticReport":
        cex = None if v.counterexample is None else CounterexampleReport.of(v.counterexample)
        return cls(v.mode, v.secure, v.lts_nodes, cex)

    def to_json(self) -> dict:
        out: dict = {"mode": self.mode.value, "secure": self.secure, "lts_nodes": self.lts_nodes}
        if self.counterexample is not None:
            out["counterexample"] = self.counterexample.to_json()
        return out

    @classmethod
    def from_json(cls, obj: dict) -> "SemanticReport":
        cex = obj.get("counterexample")
        return cls(SecBisimMode(obj["mode"]), bool(obj["secure"]), int(obj["lts_nodes"]),
                   None if cex is None else CounterexampleReport.from_json(cex))


@dataclass(frozen=True)
class Report:
    program: str
    systems: dict[SystemId, SystemReport] = field(default_factory=dict)
    semantic: SemanticReport | None = None

    @property
    def accepted(self) -> bool:
        return all(r.safe for r in self.systems.values())

    def to_json(self) -> dict:
        out: dict = {"program": self.program,
                     "systems": {s.value: r.to_json() for s, r in self.systems.items()}}
        if self.semantic is not None:
            out["semantic"] = self.semantic.to_json()
        return out

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2)

    @classmethod
    def from_json(cls, obj: dict) -> "Report":
        systems = {}
        for name, sub in obj["systems"].items():
            system = SystemId.parse(name)
            systems[system] = SystemReport.from_json(system, sub)
        sem = obj.get("semantic")
        return cls(obj["program"], systems,
                   None if sem is None else SemanticReport.from_json(sem))

    @classmethod
    def loads(cls, text: str) -> "Report":
        return cls.from_json(json.loads(text))

    def render(self) -> str:
        lines = ["program:", *("  " + line for line in self.program.splitlines())]
        for system, r in self.systems.items():
            values = "  ".join(f"{k}={_LEVEL_NAMES[v]}" for k, v in r.values.items())
            lines.append(f"{system.value}: {'accept' if r.safe else 'reject'}  {values}")
            if r.first_failure is not None:
                lines.append(f"  first failure at {r.first_failure}")
        flags = self.flags()
        if flags:
            lines.append("flags: " + "  ".join(f"{k}={str(v).lower()}" for k, v in flags.items()))
        if self.semantic is not None:
            s = self.semantic
            lines.append(f"semantic ({s.mode.value}): {'secure' if s.secure else 'insecure'}"
                         f"  lts_nodes={s.lts_nodes}")
            if s.counterexample is not None:
                lines += ["  " + line for line in s.counterexample.describe().splitlines()]
        return "\n".join(lines)

    def flags(self) -> dict[str, bool]:
        """Derived command flags available from the reported values."""
        values = {}
        for r in self.systems.values():
            values.update(r.values)
        out = {}
        for flag, key, level in (("fhigh", "maxTp1", HI), ("high", "maxWtp", HI),
                                 ("low", "minRtp", LO), ("wlow", "minTRtp", LO)):
            if key in values:
                out[flag] = values[key] == level
        return out


def analysis_report(program: Program, info: Analysis, systems,
                    cache: dict | None = None) -> Report:
    cache = {} if cache is None else cache
    out = {}
    for system in systems:
        site = None
        if not info.safe(system):
            path, sub = first_failure(program.body, program.sec_env, system, cache)
            site = FailureSite(tuple(path.split("/")) if path else (), pretty_cmd(sub))
        values = {k: getattr(info, attr) for k, attr in SYSTEM_FIELDS[system]}
        out[system] = SystemReport(info.safe(system), values, site)
    return Report(pretty_print(program), out)
