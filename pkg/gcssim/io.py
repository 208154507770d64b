# io.py
"""
Run configuration (TOML) and everything a run writes to disk: clock and
skew CSVs, sampled words, run metadata and the report JSON.
"""

import json
import os
import re
import tomllib
from dataclasses import dataclass, field
from decimal import Decimal
from fractions import Fraction
from pathlib import Path

import jsonschema
import pandas as pd

from .chart import edge_figure, skew_figure, write_figure
from .clocks import RateSchedule
from .config import DEFAULT_OUTPUT_DIR, OUTPUT_FORMATS
from .engine import DelaySchedule, Scenario
from .errors import ConfigError
from .kleene import Tri
from .logger import get_logger
from .params import SystemParams, Topology, as_fraction, validate_params
from .pipeline import ThresholdWord
from .scenarios import builtin_scenario
from .utils import fixed, parse_time

logger = get_logger(__name__)

SCHEMA_PATH = Path(__file__).parent / "schema" / "skew_report.schema.json"
REPORT_SCHEMA_VERSION = 1

TIME_PARAMS = ("kappa", "delta0", "epsilon", "d", "u", "t_clk", "t_osc", "t_meas", "t_ctr", "t_max")
KNOWN_KEYS = {
    "params": {"rho", "mu", "ell", "buffer_stages", *TIME_PARAMS},
    "topology": {"kind", "size", "edges"},
    "scenario": {
        "base", "name", "duration", "record_stride", "initial_phases", "drift", "drift_breakpoints",
        "delay", "delays", "delta0_policy", "delta0_offsets", "m_policy", "unlocked_policy",
        "monitor", "seed", "stuck_md", "strict_delays",
    },
    "output": {"dir", "formats", "stride"},
}


@dataclass(frozen=True)
class OutputConfig:
    dir: str = DEFAULT_OUTPUT_DIR
    formats: tuple = OUTPUT_FORMATS
    stride: int | None = None


def _line_of(text: str, pattern: str) -> int | None:
    match = re.search(pattern, text, flags=re.MULTILINE)
    if match is None:
        return None
    return text.count("\n", 0, match.start()) + 1


def parse_override(assignment: str) -> tuple[list[str], object]:
    """'mu=2e-5' or 'scenario.seed=7' -> (path, value). TOML syntax, bare strings allowed."""
    if "=" not in assignment:
        raise ConfigError(f"override '{assignment}' is not key=value", key=assignment)
    key, raw = (part.strip() for part in assignment.split("=", 1))
    try:
        value = tomllib.loads(f"v = {raw}")["v"]
    except tomllib.TOMLDecodeError:
        value = raw
    return key.split("."), value


def apply_overrides(doc: dict, overrides) -> dict:
    for assignment in overrides or ():
        path, value = parse_override(assignment)
        if len(path) == 1:
            section = next((s for s in ("params", "scenario", "topology") if path[0] in KNOWN_KEYS[s]), None)
            if section is None:
                raise ConfigError(f"unknown override key '{path[0]}'", key=path[0])
            path = [section, path[0]]
        if len(path) != 2 or path[0] not in KNOWN_KEYS or path[1] not in KNOWN_KEYS[path[0]]:
            raise ConfigError(f"unknown override key '{'.'.join(path)}'", key=".".join(path))
        doc.setdefault(path[0], {})[path[1]] = value
    return doc


def check_keys(doc: dict, text: str = ""):
    for section, values in doc.items():
        if section not in KNOWN_KEYS or not isinstance(values, dict):
            raise ConfigError(f"unknown section [{section}]", key=section,
                              line=_line_of(text, rf"^\s*\[{re.escape(section)}\]"))
        for key in values:
            if key not in KNOWN_KEYS[section]:
                raise ConfigError(f"unknown key '{key}' in [{section}]", key=f"{section}.{key}",
                                  line=_line_of(text, rf"^\s*{re.escape(key)}\s*="))


def _time(value, key: str) -> int:
    return parse_time(value, key=key)


def _build_params(base: SystemParams, section: dict) -> SystemParams:
    changes = {}
    for key, value in section.items():
        if key in TIME_PARAMS:
            changes[key] = _time(value, f"params.{key}")
        elif key in ("rho", "mu"):
            try:
                changes[key] = as_fraction(value)
            except (TypeError, ValueError) as e:
                raise ConfigError(f"{key} must be a number", key=f"params.{key}") from e
        else:
            if not isinstance(value, int) or isinstance(value, bool):
                raise ConfigError(f"{key} must be an integer", key=f"params.{key}")
            changes[key] = value
    if "t_max" not in changes:
        return base.evolve(**changes)
    return SystemParams(**{**base.__dict__, "t_max": None, **changes})


def _build_topology(section: dict, fallback: Topology) -> Topology:
    if not section:
        return fallback
    kind = section.get("kind", "line")
    if kind == "custom":
        edges = section.get("edges")
        if not edges:
            raise ConfigError("a custom topology needs edges", key="topology.edges")
        size = section.get("size") or 1 + max(max(e) for e in edges)
        return Topology.custom(size, [tuple(e) for e in edges])
    if "edges" in section:
        raise ConfigError("edges only apply to kind = \"custom\"", key="topology.edges")
    size = section.get("size")
    if not isinstance(size, int):
        raise ConfigError("topology size must be an integer", key="topology.size")
    if kind == "line":
        return Topology.line(size)
    if kind == "ring":
        return Topology.ring(size)
    if kind == "grid":
        return Topology.grid(size, size)
    raise ConfigError(f"unknown topology kind '{kind}'", key="topology.kind")


def _build_delays(section: dict, topology: Topology, params: SystemParams, base: tuple) -> tuple:
    default = _time(section["delay"], "scenario.delay") if "delay" in section else None
    points = {}
    for entry in section.get("delays", ()):
        if len(entry) != 4:
            raise ConfigError("delays entries are [src, dst, time, delay]", key="scenario.delays")
        src, dst, at, value = entry
        points.setdefault((src, dst), []).append((_time(at, "scenario.delays"), _time(value, "scenario.delays")))
    if default is None and not points:
        return base
    start = params.d if default is None else default
    delays = []
    for link in topology.directed_edges:
        schedule = sorted(points.get(link, []))
        if not schedule or schedule[0][0] != 0:
            schedule.insert(0, (0, start))
        delays.append((link, DelaySchedule(tuple(schedule))))
    unknown = set(points) - set(topology.directed_edges)
    if unknown:
        raise ConfigError(f"delays given for non-edges {sorted(unknown)}", key="scenario.delays")
    return tuple(delays)


def _build_drift(section: dict, n: int, base: tuple) -> tuple:
    if "drift" not in section and "drift_breakpoints" not in section:
        return base
    rates = section.get("drift") or [1] * n
    if len(rates) != n:
        raise ConfigError(f"{len(rates)} drift rates for {n} nodes", key="scenario.drift")
    points = {v: [(0, as_fraction(r))] for v, r in enumerate(rates)}
    for entry in section.get("drift_breakpoints", ()):
        node, at, rate = entry
        if not 0 <= node < n:
            raise ConfigError(f"drift breakpoint for missing node {node}", key="scenario.drift_breakpoints")
        points[node].append((_time(at, "scenario.drift_breakpoints"), as_fraction(rate)))
    return tuple(RateSchedule(tuple(sorted(points[v]))) for v in range(n))


def build_scenario(doc: dict, text: str = "") -> tuple[Scenario, OutputConfig]:
    """
    Turn a parsed config document into a scenario and output settings.

    Raises:
        ConfigError: unknown keys, missing units, a random policy without a seed
    """
    check_keys(doc, text)
    section = dict(doc.get("scenario", {}))
    base = builtin_scenario(section["base"]) if "base" in section else None

    params = _build_params(base.params if base else SystemParams(), doc.get("params", {}))
    topology = _build_topology(doc.get("topology", {}), base.topology if base else Topology.line(4))
    same_shape = base is not None and topology == base.topology
    n = topology.node_count

    changes = {"params": params, "topology": topology}
    if not same_shape:
        changes.update(initial_phases=(0,) * n, drift=(), delays=(), stuck_md=(), delta0_offsets=())
    if "name" in section:
        changes["name"] = section["name"]
    for key in ("duration", "record_stride"):
        if key in section:
            changes[key] = _time(section[key], f"scenario.{key}")
    if "initial_phases" in section:
        changes["initial_phases"] = tuple(_time(x, "scenario.initial_phases") for x in section["initial_phases"])
    changes["drift"] = _build_drift(section, n, changes.get("drift", base.drift if base else ()))
    changes["delays"] = _build_delays(section, topology, params, changes.get("delays", base.delays if base else ()))
    for key in ("delta0_policy", "m_policy", "unlocked_policy", "monitor", "strict_delays"):
        if key in section:
            changes[key] = section[key]
    if "delta0_offsets" in section:
        changes["delta0_offsets"] = tuple(((s, d), _time(x, "scenario.delta0_offsets"))
                                          for s, d, x in section["delta0_offsets"])
    if "stuck_md" in section:
        changes["stuck_md"] = tuple((node, Tri.parse(str(bit))) for node, bit in section["stuck_md"])

    seed = section.get("seed")
    env_seed = os.getenv("GCSSIM_SEED")
    if env_seed:
        seed = int(env_seed)
    if seed is not None:
        changes["seed"] = int(seed)

    scenario = base.evolve(**changes) if base else Scenario(name=changes.pop("name", "custom"), **changes)

    out = doc.get("output", {})
    formats = tuple(out.get("formats", OUTPUT_FORMATS))
    for fmt in formats:
        if fmt not in OUTPUT_FORMATS:
            raise ConfigError(f"unknown output format '{fmt}'", key="output.formats")
    stride = _time(out["stride"], "output.stride") if "stride" in out else None
    if stride is not None and stride % scenario.record_stride:
        raise ConfigError("output stride must be a multiple of the record stride", key="output.stride")
    return scenario, OutputConfig(out.get("dir", DEFAULT_OUTPUT_DIR), formats, stride)


def load_config(path=None, overrides=(), scenario_name: str | None = None) -> tuple[Scenario, OutputConfig]:
    """Read a TOML config (optional), apply --set overrides and build the scenario."""
    text = ""
    doc = {}
    if path is not None:
        text = Path(path).read_text(encoding="utf-8")
        try:
            doc = tomllib.loads(text)
        except tomllib.TOMLDecodeError as e:
            line = re.search(r"line (\d+)", str(e))
            raise ConfigError(f"cannot parse {path}: {e}", line=int(line.group(1)) if line else None) from e
    if scenario_name:
        doc.setdefault("scenario", {})["base"] = scenario_name
    apply_overrides(doc, overrides)
    return build_scenario(doc, text)


# --- run directory ---

def _params_doc(vp) -> dict:
    p = vp.params
    doc = {k: str(v) for k, v in p.__dict__.items()}
    doc["delta"] = str(vp.delta)
    return doc


def clock_frame(trace, stride: int | None = None) -> pd.DataFrame:
    rows = [r for r in trace.clocks if stride is None or r.time % stride == 0 or r.time == trace.duration]
    return pd.DataFrame({
        "time_fs": [r.time for r in rows],
        "node": [r.node for r in rows],
        "L_phase": [fixed(r.phase) for r in rows],
        "md": [str(r.md) for r in rows],
    })


def sample_frame(trace) -> pd.DataFrame:
    return pd.DataFrame({
        "time_fs": [s.time for s in trace.samples],
        "node": [s.node for s in trace.samples],
        "neighbor": [s.neighbor for s in trace.samples],
        "estimate_fs": [str(s.estimate) for s in trace.samples],
        "offset_fs": [str(s.offset) for s in trace.samples],
        "word": [str(s.word) for s in trace.samples],
    }, columns=["time_fs", "node", "neighbor", "estimate_fs", "offset_fs", "word"])


def trace_metadata(trace) -> dict:
    scenario = trace.scenario
    return {
        "scenario": scenario.name,
        "description": scenario.description,
        "topology": {"kind": trace.topology.kind, "node_count": trace.topology.node_count,
                     "edges": [list(e) for e in trace.topology.edge_list]},
        "params": _params_doc(trace.params),
        "duration_fs": scenario.duration,
        "record_stride_fs": scenario.record_stride,
        "seed": scenario.seed,
        "small_start": trace.small_start,
        "completed": trace.completed,
        "markers": [[t, label] for t, label in scenario.markers],
        "digest": trace.digest(),
        "events": [{"time_fs": e.time, "kind": e.kind, "node": e.node, "detail": e.detail}
                   for e in trace.events if e.kind != "drift"],
        "monitor": [{"invariant": v.invariant, "time_fs": v.time, "node": v.node, "detail": v.detail}
                    for v in trace.violations],
    }


def report_document(report, verdict, conditions=None, digest: str | None = None) -> dict:
    return {
        "schema_version": REPORT_SCHEMA_VERSION,
        "digest": digest,
        "report": report.to_dict(),
        "verdict": verdict.to_dict(),
        "conditions": conditions.to_dict() if conditions is not None else None,
    }


def check_report_schema(doc: dict):
    """
    Validates a report document against the published JSON schema.

    Raises:
        ValueError: on the first schema error
    """
    schema = json.loads(SCHEMA_PATH.read_text(encoding="utf-8"))
    try:
        jsonschema.validate(instance=doc, schema=schema)
    except jsonschema.ValidationError as e:
        where = ".".join(str(p) for p in e.absolute_path) or "<root>"
        raise ValueError(f"report does not match schema at {where}: {e.message}") from e


def write_run(trace, report, verdict, out_dir, conditions=None, formats=OUTPUT_FORMATS,
              stride: int | None = None) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if "csv" in formats:
        clock_frame(trace, stride).to_csv(out / "clocks.csv", index=False)
        report.edge_frame().to_csv(out / "edge_skews.csv", index=False)
        sample_frame(trace).to_csv(out / "samples.csv", index=False)
    with (out / "trace.json").open("w", encoding="utf-8") as f:
        json.dump(trace_metadata(trace), f, indent=2)
    if "json" in formats:
        doc = report_document(report, verdict, conditions, trace.digest())
        check_report_schema(doc)
        with (out / "report.json").open("w", encoding="utf-8") as f:
            json.dump(doc, f, indent=2)
    if "plotly" in formats:
        write_figure(skew_figure(report), out / "skews.plotly.json")
        write_figure(edge_figure(report), out / "edge_skews.plotly.json")
    logger.info("wrote run '%s' to %s", trace.name, out)
    return out


@dataclass
class LoadedTrace:
    """A run read back from its directory; enough for skews() and explain."""
    name: str
    topology: Topology
    params: object
    duration: int
    record_stride: int
    markers: tuple
    small_start: bool
    clocks: pd.DataFrame
    samples: pd.DataFrame
    metadata: dict = field(default_factory=dict)

    @property
    def t_clk(self) -> int:
        return self.params.params.t_clk

    @property
    def bounds(self):
        return self.params.bounds

    def phase_table(self) -> tuple[list[int], list[tuple]]:
        times, rows = [], []
        for t, group in self.clocks.groupby("time_fs", sort=True):
            times.append(int(t))
            rows.append(tuple(Decimal(x) for x in group.sort_values("node")["L_phase"]))
        return times, rows

    def md_at(self, t: int, node: int) -> Tri:
        rows = self.clocks[(self.clocks["time_fs"] <= t) & (self.clocks["node"] == node)]
        if rows.empty:
            raise KeyError(t)
        return Tri.parse(rows.iloc[-1]["md"])

    def words_at(self, t: int, node: int) -> dict:
        """Latest sampled batch of `node` visible at t: neighbor -> (word, estimate)."""
        t_meas = self.params.params.t_meas
        rows = self.samples[(self.samples["node"] == node) & (self.samples["time_fs"] + t_meas <= t)]
        if rows.empty:
            return {}
        last = rows[rows["time_fs"] == rows["time_fs"].max()]
        return {int(r.neighbor): (ThresholdWord.parse(r.word, int(r.time_fs)), Fraction(r.estimate_fs))
                for r in last.itertuples()}


def read_trace(path) -> LoadedTrace:
    """
    Raises:
        FileNotFoundError: the run directory lacks trace.json or clocks.csv
    """
    root = Path(path)
    with (root / "trace.json").open(encoding="utf-8") as f:
        meta = json.load(f)
    raw = dict(meta["params"])
    raw.pop("delta", None)
    values = {k: (as_fraction(v) if k in ("rho", "mu") else int(v)) for k, v in raw.items() if v != "None"}
    topo = meta["topology"]
    topology = Topology(topo["node_count"], tuple(tuple(e) for e in topo["edges"]), topo["kind"])
    vp = validate_params(SystemParams(**values), topology.diameter)
    clocks = pd.read_csv(root / "clocks.csv", dtype={"L_phase": str, "md": str})
    samples_path = root / "samples.csv"
    samples = (pd.read_csv(samples_path, dtype={"estimate_fs": str, "offset_fs": str, "word": str})
               if samples_path.exists() else pd.DataFrame(columns=["time_fs", "node", "neighbor",
                                                                    "estimate_fs", "offset_fs", "word"]))
    return LoadedTrace(
        name=meta["scenario"],
        topology=topology,
        params=vp,
        duration=meta["duration_fs"],
        record_stride=meta["record_stride_fs"],
        markers=tuple((t, label) for t, label in meta["markers"]),
        small_start=meta["small_start"],
        clocks=clocks,
        samples=samples,
        metadata=meta,
    )


def write_sweep(frame: pd.DataFrame, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False)
    return path


__all__ = [
    'OutputConfig', 'KNOWN_KEYS', 'parse_override', 'apply_overrides', 'check_keys',
    'build_scenario', 'load_config', 'clock_frame', 'sample_frame', 'trace_metadata',
    'report_document', 'check_report_schema', 'write_run', 'LoadedTrace', 'read_trace', 'write_sweep',
    'SCHEMA_PATH', 'REPORT_SCHEMA_VERSION'
]
