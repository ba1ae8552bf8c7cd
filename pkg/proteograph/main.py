"""
Entry point a riga di comando: `python -m proteograph <comando>`.

Exit code: 0 ok, 1 errore del modello o di runtime, 2 errore di utilizzo.
"""

from __future__ import annotations

import argparse
import asyncio
import json
import logging
import sys
from pathlib import Path
from typing import Sequence

from pydantic import ValidationError

from .config import get_settings
from .connectome_io import load_graph
from .errors import InputError, ProteographError
from .scenarios import CASES, apply_overrides, dump_config, load_config, preset
from .schemas import GraphSource, ScenarioConfig
from .services import simulation_service

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2


def _add_graph_flags(parser: argparse.ArgumentParser, required: bool = False) -> None:
    group = parser.add_argument_group("graph")
    source = group.add_mutually_exclusive_group(required=required)
    source.add_argument("--graph", metavar="PATH", help="GraphML connectome (relative to PROTEOGRAPH_DATA)")
    source.add_argument("--nodes", metavar="CSV", help="nodes table (id,label,x,y,z); needs --edges")
    source.add_argument("--synthetic", metavar="N", type=int, help="synthetic graph with N vertices")
    group.add_argument("--edges", metavar="CSV", help="edge table (src,dst,weight)")
    group.add_argument("--regions", metavar="K", type=int, default=10, help="synthetic regions")
    group.add_argument("--seed", metavar="INT", type=int, default=7, help="synthetic RNG seed")
    group.add_argument("--cutoff-radius", type=float, default=None, help="proximity cutoff")
    group.add_argument("--merge-hemispheres", action="store_true", help="one region per L/R pair")


def _add_integrator_flags(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("integrator")
    group.add_argument("--t-end", type=float, default=None)
    group.add_argument("--dt", type=float, default=None, help="initial (fixed mode: constant) step")
    group.add_argument("--grid-m", type=int, default=None, help="cells on the malfunction axis")
    group.add_argument("--out", type=Path, default=None, help="output directory")
    group.add_argument("--log-y", action="store_true", help="log-scale y axes")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="proteograph",
        description="Aβ / tau proteopathy and neuronal damage on brain graphs",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)
    # -v accettato anche dopo il sottocomando
    verbose = argparse.ArgumentParser(add_help=False)
    verbose.add_argument("-v", "--verbose", action="store_true", default=argparse.SUPPRESS)

    run = sub.add_parser("run", parents=[verbose], help="simulate one case")
    _add_graph_flags(run)
    which = run.add_mutually_exclusive_group(required=True)
    which.add_argument("--case", help=f"case preset ({', '.join(CASES)})")
    which.add_argument("--config", type=Path, help="TOML scenario file")
    _add_integrator_flags(run)
    run.set_defaults(func=cmd_run)

    sweep = sub.add_parser(
        "sweep", parents=[verbose], help="simulate several cases on the same graph"
    )
    sweep.add_argument("cases", nargs="*", metavar="CASE")
    _add_graph_flags(sweep)
    _add_integrator_flags(sweep)
    sweep.add_argument("--workers", type=int, default=None, help="worker processes")
    sweep.set_defaults(func=cmd_sweep)

    synth = sub.add_parser(
        "synth", parents=[verbose], help="write a synthetic graph as nodes/edges CSV"
    )
    synth.add_argument("--synthetic", metavar="N", type=int, required=True)
    synth.add_argument("--regions", metavar="K", type=int, default=10)
    synth.add_argument("--seed", metavar="INT", type=int, default=7)
    synth.add_argument("--out", type=Path, required=True)
    synth.set_defaults(func=cmd_synth)

    validate = sub.add_parser(
        "validate", parents=[verbose], help="load a graph or a scenario without simulating"
    )
    _add_graph_flags(validate)
    validate.add_argument("--config", type=Path, default=None)
    validate.set_defaults(func=cmd_validate)

    config = sub.add_parser("config", parents=[verbose], help="write a case preset as TOML")
    config.add_argument("--case", required=True)
    config.add_argument("--out", type=Path, required=True)
    config.set_defaults(func=cmd_config)
    return parser


def _graph_source(args: argparse.Namespace) -> GraphSource | None:
    """GraphSource dai flag, oppure None se non ne e' stato dato nessuno."""
    common = dict(cutoff_radius=args.cutoff_radius, merge_hemispheres=args.merge_hemispheres)
    if args.graph:
        return GraphSource(kind="graphml", path=args.graph, **common)
    if args.nodes or args.edges:
        if not (args.nodes and args.edges):
            raise InputError("--nodes and --edges must be given together")
        return GraphSource(kind="csv", nodes_path=args.nodes, edges_path=args.edges, **common)
    if args.synthetic is not None:
        return GraphSource(
            kind="synthetic",
            num_vertices=args.synthetic,
            num_regions=args.regions,
            rng_seed=args.seed,
            **common,
        )
    return None


def _graph_for(base: ScenarioConfig, args: argparse.Namespace) -> GraphSource | None:
    """
    Sorgente del grafo dai flag; senza flag di sorgente, --cutoff-radius e
    --merge-hemispheres modificano il [graph] dello scenario.
    """
    source = _graph_source(args)
    if source is not None:
        return source
    update = {}
    if args.cutoff_radius is not None:
        update["cutoff_radius"] = args.cutoff_radius
    if args.merge_hemispheres:
        update["merge_hemispheres"] = True
    if not update:
        return None
    return GraphSource.model_validate({**base.graph.model_dump(), **update})


def _scenario(base: ScenarioConfig, args: argparse.Namespace) -> ScenarioConfig:
    return apply_overrides(
        base, t_end=args.t_end, dt=args.dt, grid_m=args.grid_m, graph=_graph_for(base, args)
    )


def cmd_run(args: argparse.Namespace) -> int:
    base = load_config(args.config) if args.config else preset(args.case)
    config = _scenario(base, args)
    service = simulation_service
    out = args.out or service.settings.output_dir
    run = asyncio.run(service.run_case(config, out, log_y=args.log_y))
    print(f"case {config.case_name}: A(T) = {run.metadata.final_disease_index:.6g} -> {out}")
    return EXIT_OK


def cmd_sweep(args: argparse.Namespace) -> int:
    if not args.cases:
        raise InputError("sweep needs at least one case")
    configs = [_scenario(preset(case), args) for case in args.cases]
    service = simulation_service
    out = args.out or service.settings.output_dir
    summaries = asyncio.run(
        service.run_sweep(configs, out, workers=args.workers, log_y=args.log_y)
    )
    for s in summaries:
        value = "-" if s.final_disease_index is None else f"{s.final_disease_index:.6g}"
        line = f"case {s.case_name}: {s.status} A(T) = {value}"
        print(line if s.status == "ok" else f"{line} ({s.error})")
    return EXIT_OK if all(s.status == "ok" for s in summaries) else EXIT_FAILURE


def cmd_synth(args: argparse.Namespace) -> int:
    service = simulation_service
    source = GraphSource(
        kind="synthetic", num_vertices=args.synthetic, num_regions=args.regions, rng_seed=args.seed
    )
    graph = load_graph(source, service.settings)
    nodes, edges = service.export_graph(graph, args.out)
    print(f"{nodes}\n{edges}")
    return EXIT_OK


def cmd_validate(args: argparse.Namespace) -> int:
    service = simulation_service
    config = load_config(args.config) if args.config else None
    source = _graph_source(args)
    if source is None and config is None:
        raise InputError("validate needs graph flags or --config")
    config = config or ScenarioConfig()
    config = apply_overrides(config, graph=_graph_for(config, args))
    report = service.describe_graph(service.load_graph(config))
    report["case"] = config.case_name
    print(json.dumps(report, indent=2))
    return EXIT_OK


def cmd_config(args: argparse.Namespace) -> int:
    path = dump_config(preset(args.case), args.out)
    print(path)
    return EXIT_OK


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    level = logging.DEBUG if args.verbose else get_settings().log_level
    logging.basicConfig(level=level, format="%(asctime)s %(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (InputError, ValidationError) as exc:
        logger.debug("Usage error", exc_info=True)
        print(f"proteograph: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ProteographError, OSError) as exc:
        logger.debug("Run failed", exc_info=True)
        print(f"proteograph: error: {exc}", file=sys.stderr)
        return EXIT_FAILURE
