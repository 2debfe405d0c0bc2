"""Scenario configuration: JSON loading, validation and object construction."""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import jsonschema

from .dynamics import FID_THRESHOLD, EvolutionConfig
from .errors import ConfigurationError
from .grid import Grid1D, make_grid
from .io import load_schema
from .operators import Potential, harmonic, quartic, square_well, table_potential
from .states import WaveFunction, gaussian, two_mode_superposition
from .symbols import HybridParams

NEEDS_TRACE = ("qsl", "ehrenfest", "autocorr_fit")


@dataclass
class ScenarioConfig:
    params: HybridParams
    grid: Grid1D
    state: dict
    potential: dict
    evolution: EvolutionConfig | None
    analysis: list = field(default_factory=list)
    p_ref: float | None = None
    fid_threshold: float = FID_THRESHOLD
    output_dir: str | None = None
    output_format: str = "csv"
    base_dir: Path = Path(".")
    sha256: str = ""

    def analysis_names(self) -> list[str]:
        return [a["name"] for a in self.analysis]


def _path_of(err: jsonschema.ValidationError) -> str:
    parts = [str(p) for p in err.absolute_path]
    return ".".join(parts) if parts else "<root>"


def parse_config(raw: bytes | str, base_dir: Path = Path(".")) -> ScenarioConfig:
    """Validate a JSON scenario and build the typed configuration.

    Every failure raises :class:`ConfigurationError` whose ``field`` names
    the offending entry.
    """
    raw_b = raw.encode() if isinstance(raw, str) else raw
    try:
        doc = json.loads(raw_b)
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"invalid JSON: {exc}", field="<file>") from exc
    err = jsonschema.exceptions.best_match(
        jsonschema.Draft202012Validator(load_schema("config")).iter_errors(doc))
    if err is not None:
        raise ConfigurationError(err.message, field=_path_of(err))

    pd = doc["params"]
    params = HybridParams(float(pd["q"]), float(pd["alpha"]), float(pd.get("hbar", 1.0)),
                          float(pd.get("mass", 1.0)))
    gd = doc["grid"]
    grid = make_grid(gd["n_points"], gd["x_min"], gd["x_max"])

    state = dict(doc["state"])
    pot = dict(doc.get("potential", {"type": "none"}))
    for key in {"harmonic": ("omega",), "quartic": ("lambda",), "well": ("depth", "width"),
                "table": ("file",)}.get(pot["type"], ()):
        if key not in pot:
            raise ConfigurationError(f"potential type {pot['type']!r} needs {key!r}",
                                     field=f"potential.{key}")
    if pot["type"] == "table":
        p = Path(pot["file"])
        pot["file"] = str(p if p.is_absolute() else (base_dir / p))
        if not Path(pot["file"]).is_file():
            raise ConfigurationError(f"potential table {pot['file']!r} does not exist",
                                     field="potential.file")

    ev = doc.get("evolution")
    evolution = None
    if ev is not None:
        evolution = EvolutionConfig(float(ev["dt"]), int(ev["n_steps"]), int(ev.get("record_every", 1)),
                                    ev.get("splitting", "strang"))
        if evolution.splitting == "exact_free" and pot["type"] != "none":
            raise ConfigurationError("exact_free evolution requires potential type 'none'",
                                     field="evolution.splitting")

    analysis = []
    for i, a in enumerate(doc.get("analysis", [])):
        if isinstance(a, str):
            analysis.append({"name": a})
        elif "sweep" in a:
            sw = a["sweep"]
            for j, v in enumerate(sw["values"]):
                try:
                    params.with_(**{sw["axis"]: float(v)})
                except ConfigurationError as exc:
                    raise ConfigurationError(str(exc), field=f"analysis.{i}.sweep.values.{j}") from exc
            analysis.append({"name": "sweep", "axis": sw["axis"], "values": [float(v) for v in sw["values"]]})
        else:
            analysis.append({"name": "propagator", **a["propagator"]})
        name = analysis[-1]["name"]
        if name in NEEDS_TRACE and evolution is None:
            raise ConfigurationError(f"analysis {name!r} needs an evolution block", field="evolution")
        if name == "propagator" and analysis[-1].get("source_index", 0) >= grid.n_points:
            raise ConfigurationError("source_index outside the grid",
                                     field=f"analysis.{i}.propagator.source_index")

    p_ref = doc.get("p_ref", "auto")
    out = doc.get("output", {})
    cfg = ScenarioConfig(params=params, grid=grid, state=state, potential=pot, evolution=evolution,
                         analysis=analysis, p_ref=None if p_ref == "auto" else float(p_ref),
                         fid_threshold=float(doc.get("fid_threshold", FID_THRESHOLD)),
                         output_dir=out.get("directory"), output_format=out.get("format", "csv"),
                         base_dir=base_dir, sha256=hashlib.sha256(raw_b).hexdigest())
    build_state(cfg)  # surface state preconditions at config time
    build_potential(cfg)
    return cfg


def load_config(path) -> ScenarioConfig:
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise ConfigurationError(f"cannot read config: {exc}", field="<file>") from exc
    return parse_config(raw, path.resolve().parent)


def build_state(cfg: ScenarioConfig, grid: Grid1D | None = None) -> WaveFunction:
    g = grid or cfg.grid
    s = cfg.state
    if s["type"] == "gaussian":
        return gaussian(g, float(s.get("center_x", 0.0)), float(s.get("center_k", 0.0)), float(s["sigma"]))
    try:
        return two_mode_superposition(g, s["k1_index"] * g.dk, s["k2_index"] * g.dk, float(s.get("phase", 0.0)))
    except ConfigurationError as exc:
        raise ConfigurationError(str(exc), field=exc.field or "state.k1_index") from exc


def build_potential(cfg: ScenarioConfig) -> Potential | None:
    p, g = cfg.potential, cfg.grid
    t = p["type"]
    if t == "none":
        return None
    if t == "harmonic":
        return harmonic(g, float(p["omega"]), cfg.params.mass)
    if t == "quartic":
        return quartic(g, float(p["lambda"]))
    if t == "well":
        return square_well(g, float(p["depth"]), float(p["width"]))
    return table_potential(g, p["file"])
