"""
Run configuration: schema validation of the JSON/YAML document, CLI
overrides and the tolerance table shared by the property suites.
"""

import logging
from dataclasses import asdict, dataclass, field, fields, replace
from typing import Any, Dict, List, Optional, Tuple

from .errors import ConfigError
from .utils import load_document

CONVENTIONS = ("half", "full")
PROJECTIONS = ("symmetric", "pbw")
PRESETS = ("rotation-loop", "levi-segment", "sl2-half-turn")
SCHEMES = ("magnus4", "midpoint")

TOP_LEVEL_KEYS = {
    "algebra",
    "eta",
    "delta_convention",
    "projection",
    "datum",
    "path",
    "grid",
    "seed",
    "tolerances",
    "workers",
    "payload",
}
ALGEBRA_KEYS = {"builtin", "params", "file"}
DATUM_KEYS = {"dim_h", "components"}
COMPONENT_KEYS = {"rep", "value"}
PATH_KEYS = {"segments", "preset", "generator", "velocity", "conjugate", "steps", "scheme"}
SEGMENT_KEYS = {"duration", "velocity"}
PAYLOAD_KEYS = {
    "orbit": set(),
    "catalog": set(),
    "infchar": {"element", "sweep", "alphas"},
    "kappa": {"targets", "connector", "connector_scale", "transport_samples", "convergence"},
    "character": {"velocity", "m", "conjugations"},
    "verify": {"suites", "algebras", "samples"},
}


@dataclass(frozen=True)
class Tolerances:
    jacobi: float = 1e-9
    killing_invariance: float = 1e-8
    exp_log: float = 1e-8
    adjoint: float = 1e-8
    grading: float = 1e-8
    pbw_confluence: float = 1e-9
    casimir_centrality: float = 1e-8
    hamiltonian_flow: float = 1e-4
    phi_invariance: float = 1e-8
    modular_character: float = 1e-8
    curvature: float = 1e-3
    kappa_unit: float = 1e-9
    kappa_routes: float = 1e-8
    kappa_action: float = 1e-3
    action_tilde: float = 1e-3
    point_independence: float = 2e-3
    chi_value: float = 1e-9
    chi_multiplicativity: float = 1e-7
    infchar_constancy: float = 1e-6
    character: float = 1e-8
    transport: float = 1e-7
    transport_ode: float = 1e-4

    def override_all(self, value: float) -> "Tolerances":
        return replace(self, **{f.name: float(value) for f in fields(self)})

    def updated(self, overrides: Dict[str, float]) -> "Tolerances":
        known = {f.name for f in fields(self)}
        unknown = set(overrides) - known
        if unknown:
            raise ConfigError(f"unknown tolerance names: {sorted(unknown)}")
        return replace(self, **{k: float(v) for k, v in overrides.items()})


@dataclass
class RunConfig:
    algebra: Dict[str, Any] = field(default_factory=lambda: {"builtin": "so", "params": [1, 3]})
    eta: List[float] = field(default_factory=lambda: [1.0, 0.0, 0.0, 0.0, 0.0, 0.0])
    delta_convention: str = "full"
    projection: str = "symmetric"
    datum: Dict[str, Any] = field(default_factory=lambda: {"dim_h": 1, "components": []})
    path: Dict[str, Any] = field(
        default_factory=lambda: {"preset": "rotation-loop", "generator": 4, "steps": 1000}
    )
    grid: Tuple[int, int] = (64, 64)
    seed: int = 42
    tolerances: Tolerances = field(default_factory=Tolerances)
    workers: int = 1
    payload: Dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        d = asdict(self)
        d["grid"] = list(self.grid)
        return d


def _reject_unknown(section: str, given: Dict[str, Any], allowed: set) -> None:
    if not isinstance(given, dict):
        raise ConfigError(f"{section} must be a mapping, got {type(given).__name__}")
    unknown = set(given) - allowed
    if unknown:
        raise ConfigError(f"unknown keys in {section}: {sorted(unknown)}")


def _check_number_list(section: str, value: Any) -> List[float]:
    if not isinstance(value, (list, tuple)) or not all(
        isinstance(v, (int, float)) and not isinstance(v, bool) for v in value
    ):
        raise ConfigError(f"{section} must be a list of numbers")
    return [float(v) for v in value]


def parse_grid(value: Any) -> Tuple[int, int]:
    if isinstance(value, str):
        value = value.split(",")
    try:
        n, s = (int(v) for v in value)
    except (TypeError, ValueError):
        raise ConfigError(f"grid must be two integers N,S, got {value!r}")
    if n < 2 or s < 2:
        raise ConfigError(f"grid sizes must be at least 2, got {n},{s}")
    return n, s


def validate_document(doc: Dict[str, Any]) -> RunConfig:
    """
    Check a raw config mapping against the schema and build a RunConfig.

    Raises:
        ConfigError: on unknown keys, wrong types or out-of-range values
    """
    if doc is None:
        doc = {}
    _reject_unknown("config", doc, TOP_LEVEL_KEYS)
    config = RunConfig()

    if "algebra" in doc:
        algebra = doc["algebra"]
        _reject_unknown("algebra", algebra, ALGEBRA_KEYS)
        if ("builtin" in algebra) == ("file" in algebra):
            raise ConfigError("algebra needs exactly one of 'builtin' or 'file'")
        config.algebra = dict(algebra)
    if "eta" in doc:
        config.eta = _check_number_list("eta", doc["eta"])
    elif "algebra" in doc:
        config.eta = []

    if "delta_convention" in doc:
        if doc["delta_convention"] not in CONVENTIONS:
            raise ConfigError(f"delta_convention must be one of {CONVENTIONS}")
        config.delta_convention = doc["delta_convention"]
    if "projection" in doc:
        if doc["projection"] not in PROJECTIONS:
            raise ConfigError(f"projection must be one of {PROJECTIONS}")
        config.projection = doc["projection"]

    if "datum" in doc:
        datum = doc["datum"]
        _reject_unknown("datum", datum, DATUM_KEYS)
        dim_h = datum.get("dim_h", 1)
        if not isinstance(dim_h, int) or dim_h < 1:
            raise ConfigError("datum.dim_h must be a positive integer")
        for i, component in enumerate(datum.get("components", [])):
            _reject_unknown(f"datum.components[{i}]", component, COMPONENT_KEYS)
            if "rep" not in component or "value" not in component:
                raise ConfigError(f"datum.components[{i}] needs 'rep' and 'value'")
        config.datum = {"dim_h": dim_h, "components": list(datum.get("components", []))}

    if "path" in doc:
        path = doc["path"]
        _reject_unknown("path", path, PATH_KEYS)
        if ("segments" in path) == ("preset" in path):
            raise ConfigError("path needs exactly one of 'segments' or 'preset'")
        if "preset" in path and path["preset"] not in PRESETS:
            raise ConfigError(f"path.preset must be one of {PRESETS}")
        for i, segment in enumerate(path.get("segments", [])):
            _reject_unknown(f"path.segments[{i}]", segment, SEGMENT_KEYS)
            if float(segment.get("duration", 0.0)) <= 0.0:
                raise ConfigError(f"path.segments[{i}].duration must be positive")
            _check_number_list(f"path.segments[{i}].velocity", segment.get("velocity"))
        if path.get("scheme", "magnus4") not in SCHEMES:
            raise ConfigError(f"path.scheme must be one of {SCHEMES}")
        steps = path.get("steps", 1000)
        if not isinstance(steps, int) or steps < 1:
            raise ConfigError("path.steps must be a positive integer")
        config.path = dict(path)

    if "grid" in doc:
        config.grid = parse_grid(doc["grid"])
    if "seed" in doc:
        if not isinstance(doc["seed"], int) or doc["seed"] < 0:
            raise ConfigError("seed must be a non-negative integer")
        config.seed = doc["seed"]
    if "tolerances" in doc:
        config.tolerances = config.tolerances.updated(doc["tolerances"] or {})
    if "workers" in doc:
        if not isinstance(doc["workers"], int) or doc["workers"] < 1:
            raise ConfigError("workers must be a positive integer")
        config.workers = doc["workers"]
    if "payload" in doc:
        if not isinstance(doc["payload"], dict):
            raise ConfigError("payload must be a mapping")
        config.payload = dict(doc["payload"])
    return config


def validate_payload(command: str, payload: Dict[str, Any]) -> None:
    _reject_unknown(f"payload for {command}", payload, PAYLOAD_KEYS.get(command, set()))


def load_config(filepath: Optional[str]) -> RunConfig:
    """Load and validate a config document; None gives the worked so(1,3) example."""
    if filepath is None:
        logging.info("No config given, using so(1,3) with eta = X1*, k = 1")
        return RunConfig()
    try:
        doc = load_document(filepath)
    except FileNotFoundError as e:
        raise ConfigError(f"config file not found: {filepath}") from e
    except Exception as e:
        raise ConfigError(f"cannot parse {filepath}: {e}") from e
    logging.info("Loaded config from %s", filepath)
    return validate_document(doc)


def apply_overrides(config: RunConfig, **overrides: Any) -> RunConfig:
    """CLI flags win over the document; None means 'not given'."""
    if overrides.get("seed") is not None:
        config.seed = int(overrides["seed"])
    if overrides.get("grid") is not None:
        config.grid = parse_grid(overrides["grid"])
    if overrides.get("convention") is not None:
        config.delta_convention = overrides["convention"]
    if overrides.get("projection") is not None:
        config.projection = overrides["projection"]
    if overrides.get("workers") is not None:
        config.workers = max(1, int(overrides["workers"]))
    if overrides.get("tolerance") is not None:
        config.tolerances = config.tolerances.override_all(overrides["tolerance"])
        logging.warning("All check thresholds overridden to %.1e", overrides["tolerance"])
    return config
