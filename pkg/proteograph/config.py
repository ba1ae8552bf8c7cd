from __future__ import annotations

from functools import lru_cache
from pathlib import Path

from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """
    Impostazioni di runtime (ambiente / .env), separate dai parametri del modello
    che invece stanno nei file di scenario (vedi `schemas.ScenarioConfig`).
    """

    model_config = SettingsConfigDict(
        env_prefix="PROTEOGRAPH_",
        env_file=".env",
        env_file_encoding="utf-8",
        extra="ignore",
    )

    # Directory dei grafi (PROTEOGRAPH_DATA); i path relativi di --graph partono da qui
    data: Path = Path("data")

    # Directory di output di default
    output_dir: Path = Path("runs")

    # Numero di processi per gli sweep
    workers: int = 1

    log_level: str = "INFO"

    # Sottostringhe (case-insensitive) che identificano V_seed nelle label
    seed_labels: list[str] = ["entorhinal"]

    # Chiavi <data> dei file GraphML di braingraph.org
    graphml_label_key: str = "dn_name"
    graphml_x_key: str = "dn_position_x"
    graphml_y_key: str = "dn_position_y"
    graphml_z_key: str = "dn_position_z"
    graphml_weight_key: str = "number_of_fibers"

    def resolve_graph_path(self, path: str | Path) -> Path:
        """Path assoluti restano invariati, quelli relativi partono da `data`."""
        p = Path(path)
        if p.is_absolute() or p.exists():
            return p
        return self.data / p


@lru_cache
def get_settings() -> Settings:
    return Settings()
