"""Eccezioni del simulatore. Solo `main.py` le traduce in exit code."""

from __future__ import annotations


class ProteographError(Exception):
    """Radice di tutte le eccezioni del pacchetto."""


# --- errori di input (exit 2) ---


class InputError(ProteographError):
    pass


class ConfigError(InputError):
    pass


class UnknownCaseError(ConfigError):
    def __init__(self, case_name: str, valid: list[str]) -> None:
        self.case_name = case_name
        self.valid = valid
        super().__init__(
            f"unknown case {case_name!r}; valid cases: {', '.join(valid)}"
        )


# --- grafo (exit 1) ---


class GraphError(ProteographError):
    pass


class IsolatedVertexError(GraphError):
    """Vertice con grado pesato nullo: il Laplaciano non e' definito."""

    def __init__(self, vertex: int, family: str, label: str | None = None) -> None:
        self.vertex = vertex
        self.family = family
        self.label = label
        name = f"vertex {vertex}" + (f" ({label})" if label else "")
        hint = (
            "increase cutoff_radius"
            if family == "proximity"
            else "check the connectivity weights"
        )
        super().__init__(f"{name} has no {family} neighbours; {hint}")


class GraphParseError(GraphError):
    pass


# --- simulazione (exit 1) ---


class SimulationError(ProteographError):
    pass


class StateCorruptionError(SimulationError):
    """NaN/Inf nello stato, con la posizione del primo valore non finito."""

    def __init__(self, field: str, vertex: int, component: int) -> None:
        self.field = field
        self.vertex = vertex
        self.component = component
        super().__init__(
            f"non-finite value in {field} at vertex {vertex}, component {component}"
        )


class StepSizeError(SimulationError):
    pass


class StiffnessError(SimulationError):
    pass


class NegativeStateError(SimulationError):
    pass
