"""Command line interface.

    princigraph grow --input data.csv --mode tree --steps 50 --out-graph g.json --out-svg g.svg
    princigraph fit --input data.csv --out-graph g.json
    princigraph sample branching --out data.csv
"""

from __future__ import annotations

import argparse
import dataclasses
import logging
import os
import sys
from dataclasses import dataclass
from pathlib import Path


from . import datasets
from .energy import energy_components
from .factorized import grow_complex, initial_model
from .grammar import CURVE_RULES, TREE_RULES, GrowthConfig, GrowthReport, Moduli, grow, initial_curve
from .io import (dumps, emit_svg, graph_to_dict, load_csv, model_to_dict, project_points,
                 read_graph, save_csv, write_projection)
from .optimizer import SolverConfig, fit, partition_data

log = logging.getLogger("princigraph")

MODES = ("curve", "tree", "complex")


@dataclass
class RunConfig:
    input: str
    command: str = "grow"
    weights_col: str | None = None
    lam: float = 0.01
    mu: float = 0.1
    mode: str = "tree"
    steps: int = 10
    epsilon: float = 1e-5
    max_iter: int = 100
    trial_iter: int = 5
    preselect: float = 1.0
    seed: int = 0
    restarts: int = 0
    out_graph: str | None = None
    out_proj: str | None = None
    out_report: str | None = None
    out_svg: str | None = None
    normalize: bool = False
    max_factors: int = 3
    scale_stars: bool = False
    graph: str | None = None

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.steps < 0:
            raise ValueError("steps must be nonnegative")
        if not self.lam >= 0 or not self.mu >= 0:
            raise ValueError("moduli must be nonnegative")

    def growth_config(self) -> GrowthConfig:
        return GrowthConfig(
            rules=CURVE_RULES if self.mode == "curve" else TREE_RULES,
            max_transformations=self.steps,
            trial_iterations=self.trial_iter,
            preselect=self.preselect,
            restarts=self.restarts,
            seed=self.seed,
            moduli=Moduli(self.lam, self.mu, self.scale_stars),
            solver=SolverConfig(epsilon=self.epsilon, max_iterations=self.max_iter,
                                normalize=self.normalize),
            max_factors=self.max_factors if self.mode == "complex" else 1,
        )


def execute(config: RunConfig):
    """Run the configured computation; returns ``(graph, emb, data, report, graph_doc)``."""
    data = load_csv(config.input, config.weights_col)
    gcfg = config.growth_config()
    model = None
    if config.command == "fit":
        if config.graph:
            graph, emb0 = read_graph(config.graph)
            if emb0 is None:
                raise ValueError(f"{config.graph}: graph JSON has no positions")
        else:
            graph, emb0 = initial_curve(data, gcfg.moduli)
        emb, _, _ = fit(graph, data, emb0, gcfg.solver)
        report = GrowthReport(seed=config.seed)
    elif config.mode == "complex":
        model, report = grow_complex(data, gcfg, initial_model(data, gcfg.moduli, gcfg.vertex_budget))
        graph, emb = model.graph, model.embedding
    else:
        graph0, emb0 = initial_curve(data, gcfg.moduli)
        graph, emb, report = grow(graph0, emb0, data, gcfg)

    doc = model_to_dict(model) if model is not None else graph_to_dict(graph, emb)
    total, ug, ua = energy_components(graph, emb, data, partition_data(emb, data), config.normalize)
    doc["run"] = {"command": config.command, "mode": config.mode, "seed": config.seed,
                  "lambda": config.lam, "mu": config.mu, "normalize": config.normalize,
                  "energy_total": total, "energy_approx": ua, "energy_graph": ug}
    return graph, emb, data, report, doc


def run(config: RunConfig) -> int:
    """Execute ``config`` and write the requested artifacts atomically.

    Returns 0 on success. On failure nothing requested is left behind and
    the exception propagates.
    """
    graph, emb, data, report, doc = execute(config)
    part = partition_data(emb, data)
    outputs = {}
    if config.out_graph:
        outputs[config.out_graph] = dumps(doc)
    if config.out_report:
        outputs[config.out_report] = report.to_jsonl()
    if config.out_svg:
        outputs[config.out_svg] = emit_svg(emb, data, graph)
    written = []
    try:
        for path, text in outputs.items():
            tmp = Path(str(path) + ".tmp")
            tmp.write_text(text)
            written.append((tmp, Path(path)))
        if config.out_proj:
            tmp = Path(str(config.out_proj) + ".tmp")
            write_projection(tmp, project_points(emb, data, part))
            written.append((tmp, Path(config.out_proj)))
        for tmp, final in written:
            os.replace(tmp, final)
    except BaseException:
        for tmp, final in written:
            for p in (tmp, final):
                if p.exists():
                    p.unlink()
        raise
    log.info("%d vertices, %d edges, %d steps", graph.n_vertices, len(graph.edges),
             len(report.steps))
    return 0


SAMPLES = {
    "branching": lambda seed: datasets.make_branching(seed=seed),
    "segment": lambda seed: datasets.make_segment(seed=seed),
    "rectangle": lambda seed: datasets.make_rectangle(seed=seed),
    "arc": lambda seed: datasets.make_arc(seed=seed),
    "iris": lambda seed: datasets.load_iris(),
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="princigraph",
                                 description="Elastic principal curves, trees and cubic complexes")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--input", required=True, help="CSV file of data points")
        p.add_argument("--weights-col", default=None, help="column holding point weights")
        p.add_argument("--lambda", dest="lam", type=float, default=0.01, help="edge modulus")
        p.add_argument("--mu", type=float, default=0.1, help="star modulus")
        p.add_argument("--mode", choices=MODES, default="tree")
        p.add_argument("--steps", type=int, default=10, help="number of transformations")
        p.add_argument("--epsilon", type=float, default=1e-5)
        p.add_argument("--max-iter", type=int, default=100)
        p.add_argument("--trial-iter", type=int, default=5)
        p.add_argument("--preselect", type=float, default=1.0, help="fraction of applications tried")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--restarts", type=int, default=0)
        p.add_argument("--out-graph")
        p.add_argument("--out-proj")
        p.add_argument("--out-report")
        p.add_argument("--out-svg")
        p.add_argument("--normalize", action="store_true",
                       help="divide the approximation energy by the total weight")
        p.add_argument("--max-factors", type=int, default=3)
        p.add_argument("--scale-stars", action="store_true", help="use mu/k for k-stars")

    p_fit = sub.add_parser("fit", help="fit a fixed graph (default: the PCA segment)")
    common(p_fit)
    p_fit.add_argument("--graph", help="graph JSON with initial positions")
    p_grow = sub.add_parser("grow", help="grow a curve, tree or complex")
    common(p_grow)

    p_sample = sub.add_parser("sample", help="write a bundled or synthetic dataset to CSV")
    p_sample.add_argument("name", choices=sorted(SAMPLES))
    p_sample.add_argument("--out", required=True)
    p_sample.add_argument("--seed", type=int, default=0)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(name)s: %(message)s")
    try:
        if args.command == "sample":
            X = SAMPLES[args.name](args.seed)
            save_csv(args.out, X, [f"x{i}" for i in range(X.shape[1])])
            return 0
        fields = {f.name for f in dataclasses.fields(RunConfig)}
        config = RunConfig(**{k: v for k, v in vars(args).items() if k in fields})
        return run(config)
    except Exception as exc:
        print(f"princigraph: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
