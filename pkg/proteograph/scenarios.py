"""
Preset dei casi A-E, stato iniziale "cervello sano" e file di scenario TOML.

Precedenza dei valori: flag CLI > file di scenario > preset del caso > default
dei modelli in `schemas`.
"""

from __future__ import annotations

import logging
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from pathlib import Path
from typing import Any, Mapping

import numpy as np
import tomli_w
from pydantic import BaseModel, ValidationError

from .aggregation import N_COMPARTMENTS
from .engine import SimState
from .errors import ConfigError, UnknownCaseError
from .graph_core import BrainGraph
from .neuron_health import health_grid, healthy_density
from .schemas import GraphSource, ScenarioConfig

logger = logging.getLogger(__name__)

# caso -> (α, C_τ, c); tutto il resto resta ai valori fissi
CASE_TABLE: dict[str, tuple[float, float, float]] = {
    "A": (10.0, 0.0, 0.0),
    "B": (10.0, 0.0, 0.05),
    "C": (10.0, 10.0, 0.05),
    "D": (10.0, 10.0, 0.0),
    "E": (0.0, 10.0, 0.05),
}

CASES = tuple(CASE_TABLE)

# tabella TOML -> attributo di ScenarioConfig
SECTIONS = ("aggregation", "deterioration", "health", "integrator", "graph")


def _normalize_case(case_name: str) -> str:
    key = str(case_name).strip().upper()
    if key not in CASE_TABLE:
        raise UnknownCaseError(str(case_name), list(CASES))
    return key


def preset(case_name: str) -> ScenarioConfig:
    """Valori fissi piu' la riga (α, C_τ, c) del caso."""
    case = _normalize_case(case_name)
    alpha, c_tau, c_seed = CASE_TABLE[case]
    base = ScenarioConfig()
    aggregation = base.aggregation.model_copy(
        update={"alpha": alpha, "c_tau": c_tau, "c_seed": c_seed}
    )
    return base.model_copy(update={"case_name": case, "aggregation": aggregation})


def initial_state(config: ScenarioConfig, graph: BrainGraph) -> SimState:
    """u1 = u01 ovunque, aggregati e tau nulli, f0 gaussiana troncata vicino ad a = 0."""
    n = graph.num_vertices
    u = np.zeros((n, N_COMPARTMENTS))
    u[:, 0] = config.u01
    tau = np.zeros((n, N_COMPARTMENTS))
    grid = health_grid(config.health.grid_m)
    f0 = healthy_density(grid, config.health.a0, config.health.sigma_a)
    f = np.tile(f0, (n, 1))
    return SimState(t=0.0, u=u, tau=tau, f=f)


def _deep_update(base: dict[str, Any], update: Mapping[str, Any]) -> dict[str, Any]:
    out = dict(base)
    for key, val in update.items():
        if isinstance(val, Mapping) and isinstance(out.get(key), dict):
            out[key] = _deep_update(out[key], val)
        else:
            out[key] = val
    return out


def _validate(data: dict[str, Any], origin: str) -> ScenarioConfig:
    try:
        return ScenarioConfig.model_validate(data)
    except ValidationError as exc:
        raise ConfigError(f"invalid scenario in {origin}: {exc}") from exc


def parse_config(text: str, origin: str = "<string>") -> ScenarioConfig:
    """
    Testo TOML -> ScenarioConfig. Il file puo' essere parziale: le chiavi mancanti
    prendono il valore del preset indicato in [scenario].case (default C).
    """
    try:
        raw = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{origin}: {exc}") from exc

    unknown = sorted(set(raw) - set(SECTIONS) - {"scenario"})
    if unknown:
        raise ConfigError(
            f"{origin}: unknown table(s) {', '.join(unknown)}; "
            f"expected scenario, {', '.join(SECTIONS)}"
        )
    scenario = dict(raw.get("scenario", {}))
    case = _normalize_case(scenario.pop("case", "C"))
    data = preset(case).model_dump()
    update: dict[str, Any] = {key: raw[key] for key in SECTIONS if key in raw}
    if "u01" in scenario:
        update["u01"] = scenario.pop("u01")
    if scenario:
        raise ConfigError(
            f"{origin}: unknown key(s) in [scenario]: {', '.join(sorted(scenario))}"
        )
    return _validate(_deep_update(data, update), origin)


def load_config(path: str | Path) -> ScenarioConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read scenario file {path}: {exc}") from exc
    config = parse_config(text, str(path))
    logger.info("Scenario %s loaded from %s", config.case_name, path)
    return config


def _plain(value: Any) -> Any:
    if isinstance(value, tuple):
        return [_plain(v) for v in value]
    return value


def _table(model: BaseModel) -> tuple[list[str], dict[str, Any]]:
    comments: list[str] = []
    values: dict[str, Any] = {}
    for name, info in type(model).model_fields.items():
        value = getattr(model, name)
        if value is None:
            continue
        values[name] = _plain(value)
        if info.description:
            comments.append(f"# {name}: {info.description}")
    return comments, values


def serialize_config(config: ScenarioConfig) -> str:
    """
    ScenarioConfig -> TOML, una tabella per modulo; ogni chiave con un simbolo
    del modello e' annotata in un commento sopra la tabella.
    """
    blocks = [
        "# proteograph scenario\n"
        + tomli_w.dumps({"scenario": {"case": config.case_name, "u01": config.u01}})
    ]
    for section in SECTIONS:
        comments, values = _table(getattr(config, section))
        header = "".join(f"{line}\n" for line in comments)
        blocks.append(header + tomli_w.dumps({section: values}))
    return "\n".join(blocks)


def dump_config(config: ScenarioConfig, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(serialize_config(config), encoding="utf-8")
    return path


def apply_overrides(
    config: ScenarioConfig,
    *,
    t_end: float | None = None,
    dt: float | None = None,
    grid_m: int | None = None,
    graph: GraphSource | None = None,
) -> ScenarioConfig:
    """
    Flag CLI sopra lo scenario; None = non specificato.
    --dt imposta il passo iniziale (e fisso in modalita' fixed) allargando
    dt_min/dt_max se serve.
    """
    data = config.model_dump()
    integrator = data["integrator"]
    if t_end is not None:
        integrator["t_end"] = t_end
    if dt is not None:
        integrator["dt_init"] = dt
        integrator["dt_max"] = max(integrator["dt_max"], dt)
        integrator["dt_min"] = min(integrator["dt_min"], dt)
    if grid_m is not None:
        data["health"]["grid_m"] = grid_m
    if graph is not None:
        data["graph"] = graph.model_dump()
    return _validate(data, "command-line flags")
