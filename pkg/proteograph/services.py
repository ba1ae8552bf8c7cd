from __future__ import annotations

import asyncio
import logging
import shutil
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Sequence

import aiofiles
import numpy as np
import pandas as pd

from . import __version__
from .config import Settings, get_settings
from .connectome_io import export_edge_csv, is_connected, load_graph, region_table
from .engine import CoupledModel, advance
from .errors import ProteographError
from .graph_core import BrainGraph
from .observables import (
    TimeSeriesRecord,
    build_record,
    rank_regions,
    seed_regions,
    to_csv_text,
)
from .plotting import (
    disease_figure,
    global_figure,
    regional_figure,
    render_svg,
    sweep_overlay_figure,
    sweep_regions_figure,
)
from .scenarios import initial_state
from .schemas import CaseSummary, RunMetadata, ScenarioConfig

logger = logging.getLogger(__name__)

RANKING_COLUMNS = (
    "case",
    "status",
    "final_A",
    "final_seed_A",
    "final_plaques",
    "final_tangles",
    "error",
)


@dataclass
class CaseRun:
    """Risultato di un caso: serie temporali + metadati (niente snapshot completi)."""

    config: ScenarioConfig
    record: TimeSeriesRecord
    metadata: RunMetadata
    seed_labels: tuple[str, ...]

    def summary(self) -> CaseSummary:
        idx = seed_regions(self.record.region_names, self.seed_labels)
        seed_a = float(np.mean(self.record.disease_regional[-1, idx])) if idx else None
        return CaseSummary(
            case_name=self.config.case_name,
            final_disease_index=float(self.record.disease[-1]),
            final_seed_index=seed_a,
            final_plaques=float(self.record.abeta[-1, 4]),
            final_tangles=float(self.record.tau[-1, 4]),
        )


def simulate_case(
    config: ScenarioConfig, graph: BrainGraph, seed_labels: Sequence[str] = ("entorhinal",)
) -> CaseRun:
    """
    Stato iniziale, integrazione e osservabili di un caso. Funzione di modulo
    senza stato condiviso: viene eseguita anche nei processi worker.
    """
    logger.info(
        "Case %s: start on %s (N=%d, t_end=%g)",
        config.case_name,
        graph.source,
        graph.num_vertices,
        config.integrator.t_end,
    )
    model = CoupledModel.from_config(graph, config)
    result = advance(model, initial_state(config, graph), config.integrator)
    table = region_table(graph)
    record = build_record(result.snapshots, table)
    ranking = rank_regions(record)
    metadata = RunMetadata(
        artifact_version=__version__,
        case_name=config.case_name,
        graph_source=graph.source,
        num_vertices=graph.num_vertices,
        num_regions=table.num_regions,
        num_conn_edges=graph.num_edges("connectivity"),
        num_prox_edges=graph.num_edges("proximity"),
        seed_vertices=[int(v) for v in graph.seed_set],
        config=config,
        wall_time_s=result.wall_time_s,
        steps=result.steps,
        rejected_steps=result.rejected_steps,
        clamp_count=result.final.clamp_count,
        final_disease_index=float(record.disease[-1]),
        region_ranking=ranking,
        created_at=datetime.now(timezone.utc),
    )
    logger.info(
        "Case %s: done in %.2fs (%d steps, %d rejected), A(T)=%.6g",
        config.case_name,
        result.wall_time_s,
        result.steps,
        result.rejected_steps,
        metadata.final_disease_index,
    )
    return CaseRun(config, record, metadata, tuple(seed_labels))


async def _write_text(path: Path, text: str) -> None:
    async with aiofiles.open(path, "w", encoding="utf-8", newline="\n") as fh:
        await fh.write(text)


class SimulationService:
    """
    Orchestrazione di run e sweep: caricamento del grafo, simulazione
    (thread o processi) e scrittura asincrona degli output.
    """

    def __init__(self, settings: Settings | None = None) -> None:
        self.settings = settings or get_settings()

    @property
    def seed_labels(self) -> tuple[str, ...]:
        return tuple(self.settings.seed_labels)

    def load_graph(self, config: ScenarioConfig) -> BrainGraph:
        graph = load_graph(config.graph, self.settings)
        if not is_connected(graph.conn_weights):
            logger.warning("Connectivity graph %s is not connected", graph.source)
        return graph

    def describe_graph(self, graph: BrainGraph) -> dict:
        table = region_table(graph)
        return {
            "source": graph.source,
            "num_vertices": graph.num_vertices,
            "num_conn_edges": graph.num_edges("connectivity"),
            "num_prox_edges": graph.num_edges("proximity"),
            "connected": is_connected(graph.conn_weights),
            "seed_vertices": [graph.labels[v] for v in graph.seed_set],
            "regions": list(table.names),
        }

    def export_graph(self, graph: BrainGraph, out_dir: str | Path) -> tuple[Path, Path]:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        nodes, edges = out_dir / "nodes.csv", out_dir / "edges.csv"
        export_edge_csv(graph, nodes, edges)
        logger.info("Graph %s exported to %s", graph.source, out_dir)
        return nodes, edges

    def render_case(self, run: CaseRun, *, log_y: bool = False) -> dict[str, str]:
        """Nome file -> contenuto, per tutti gli output di un caso."""
        title = f"case {run.config.case_name}"
        labels = run.seed_labels
        return {
            "metadata.json": run.metadata.model_dump_json(indent=2),
            "observables.csv": to_csv_text(run.record),
            "global.svg": render_svg(global_figure(run.record, log_y=log_y, title=title)),
            "regional.svg": render_svg(
                regional_figure(run.record, seed_labels=labels, log_y=log_y, title=title)
            ),
            "disease.svg": render_svg(
                disease_figure(run.record, seed_labels=labels, log_y=log_y, title=title)
            ),
        }

    async def write_case(self, run: CaseRun, out_dir: str | Path, *, log_y: bool = False) -> Path:
        """Scrive `<out>/<case>/`; in caso di errore la directory viene rimossa."""
        case_dir = Path(out_dir) / run.config.case_name
        try:
            files = await asyncio.to_thread(self.render_case, run, log_y=log_y)
            case_dir.mkdir(parents=True, exist_ok=True)
            await asyncio.gather(
                *(_write_text(case_dir / name, text) for name, text in files.items())
            )
        except BaseException:
            shutil.rmtree(case_dir, ignore_errors=True)
            raise
        logger.info("Case %s: outputs written to %s", run.config.case_name, case_dir)
        return case_dir

    async def run_case(
        self,
        config: ScenarioConfig,
        out_dir: str | Path,
        *,
        graph: BrainGraph | None = None,
        log_y: bool = False,
    ) -> CaseRun:
        graph = graph or self.load_graph(config)
        run = await asyncio.to_thread(simulate_case, config, graph, self.seed_labels)
        await self.write_case(run, out_dir, log_y=log_y)
        for name, value in run.metadata.region_ranking[:5]:
            logger.info("Case %s: A_R(T) %s = %.6g", config.case_name, name, value)
        return run

    async def _sweep_task(
        self,
        config: ScenarioConfig,
        graph: BrainGraph,
        out_dir: Path,
        executor: ProcessPoolExecutor | None,
        log_y: bool,
    ) -> tuple[CaseSummary, CaseRun | None]:
        try:
            if executor is None:
                run = await asyncio.to_thread(simulate_case, config, graph, self.seed_labels)
            else:
                loop = asyncio.get_running_loop()
                run = await loop.run_in_executor(
                    executor, simulate_case, config, graph, self.seed_labels
                )
            await self.write_case(run, out_dir, log_y=log_y)
        except (ProteographError, ValueError, OSError) as exc:
            logger.error("Case %s failed: %s", config.case_name, exc)
            return CaseSummary(case_name=config.case_name, status="failed", error=str(exc)), None
        return run.summary(), run

    async def run_sweep(
        self,
        configs: Sequence[ScenarioConfig],
        out_dir: str | Path,
        *,
        graph: BrainGraph | None = None,
        workers: int | None = None,
        log_y: bool = False,
    ) -> list[CaseSummary]:
        """
        Un task asyncio per caso, tutti sullo stesso grafo e stato iniziale.
        Con workers > 1 i casi girano in processi separati; i risultati non
        dipendono dal numero di worker.
        """
        if not configs:
            raise ValueError("sweep needs at least one case")
        out_dir = Path(out_dir)
        graph = graph or self.load_graph(configs[0])
        workers = workers or self.settings.workers
        executor = ProcessPoolExecutor(max_workers=workers) if workers > 1 else None
        try:
            tasks = [
                asyncio.create_task(
                    self._sweep_task(cfg, graph, out_dir, executor, log_y),
                    name=f"case-{cfg.case_name}",
                )
                for cfg in configs
            ]
            outcomes = await asyncio.gather(*tasks)
        finally:
            if executor is not None:
                executor.shutdown()

        summaries = [summary for summary, _ in outcomes]
        records = {run.config.case_name: run.record for _, run in outcomes if run is not None}
        await self._write_sweep(summaries, records, out_dir / "sweep", log_y)
        return summaries

    async def _write_sweep(
        self,
        summaries: Sequence[CaseSummary],
        records: dict[str, TimeSeriesRecord],
        sweep_dir: Path,
        log_y: bool,
    ) -> None:
        sweep_dir.mkdir(parents=True, exist_ok=True)
        ranking = ranking_frame(summaries)
        files = {"ranking.csv": ranking.to_csv(index=False, float_format="%.17g", lineterminator="\n")}
        if records:
            labels = self.seed_labels
            files["disease_overlay.svg"] = await asyncio.to_thread(
                lambda: render_svg(sweep_overlay_figure(records, log_y=log_y))
            )
            files["disease_regions.svg"] = await asyncio.to_thread(
                lambda: render_svg(sweep_regions_figure(records, seed_labels=labels, log_y=log_y))
            )
        await asyncio.gather(*(_write_text(sweep_dir / n, t) for n, t in files.items()))
        for row in ranking.itertuples(index=False):
            logger.info("Sweep: case %s %s A(T)=%s", row.case, row.status, row.final_A)


def ranking_frame(summaries: Sequence[CaseSummary]) -> pd.DataFrame:
    """Casi riusciti per A(T) decrescente, poi quelli falliti."""
    rows = [
        {
            "case": s.case_name,
            "status": s.status,
            "final_A": s.final_disease_index,
            "final_seed_A": s.final_seed_index,
            "final_plaques": s.final_plaques,
            "final_tangles": s.final_tangles,
            "error": s.error or "",
        }
        for s in summaries
    ]
    ok = sorted((r for r in rows if r["status"] == "ok"), key=lambda r: (-r["final_A"], r["case"]))
    failed = sorted((r for r in rows if r["status"] != "ok"), key=lambda r: r["case"])
    return pd.DataFrame(ok + failed, columns=list(RANKING_COLUMNS))


simulation_service = SimulationService()
