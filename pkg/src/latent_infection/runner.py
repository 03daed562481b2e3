"""Execution of a full configuration: one cell per (network, observed fraction).

Layout under the output directory::

    manifest.json                  config digest, seeds, per-cell status
    config.ini                     the effective configuration
    results.csv                    one row per (cell, classifier, test run)
    summary.csv                    one row per (cell, classifier)
    cells/<network>/f<fraction>/
        train_features.csv
        test_features/run_NNN.csv
        models/<classifier>.json
        predictions.csv            run,classifier,node,label,posterior
        results.csv
        summary.csv

Cells only write inside their own directory; the merged files are
assembled afterwards in configuration order, so the output does not
depend on the number of workers.
"""

from __future__ import annotations

import io
import json
import traceback
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from latent_infection.classifiers import save_model
from latent_infection.config import RunConfig
from latent_infection.evaluation import (
    RESULTS_HEADER,
    SUMMARY_HEADER,
    collect_runs,
    evaluate_runs,
    write_results_csv,
    write_summary_csv,
)


@dataclass(frozen=True)
class CellOutcome:
    network: str
    observed_fraction: float
    directory: str
    ok: bool
    error: str = ""
    results: str = ""
    summary: str = ""


def cell_dir(root: Path, network: str, fraction: float) -> Path:
    return root / "cells" / network / f"f{fraction:.4f}"


def _safe_name(kind: str) -> str:
    return "".join(ch if ch.isalnum() or ch in "-_." else "_" for ch in kind)


def run_cell(cfg_ini: str, net_index: int, fraction: float, out_root: str) -> CellOutcome:
    cfg = RunConfig.from_ini(cfg_ini)
    net = cfg.networks[net_index]
    d = cell_dir(Path(out_root), net.name, fraction)
    try:
        g = net.load()
        protocol = cfg.protocol(fraction)
        train, tests = collect_runs(g, protocol, cfg.master_seed)
        d.mkdir(parents=True, exist_ok=True)
        (d / "test_features").mkdir(exist_ok=True)
        (d / "models").mkdir(exist_ok=True)
        with open(d / "train_features.csv", "w", encoding="utf-8", newline="") as fh:
            train.to_csv(fh)
        for rd in tests:
            with open(d / "test_features" / f"run_{rd.run:03d}.csv", "w", encoding="utf-8", newline="") as fh:
                rd.features.to_csv(fh)

        pred_buf = io.StringIO()
        pred_buf.write("run,classifier,node,label,posterior\n")

        def on_predict(kind, tag, rd, post, labels):
            for node, lab, p in zip(rd.features.node_ids, labels, post):
                pred_buf.write(f"{rd.run},{kind},{int(node)},{int(lab)},{float(p)!r}\n")

        models: dict = {}
        res = evaluate_runs(
            train,
            tests,
            protocol.classifiers,
            [protocol.features],
            cfg.master_seed,
            network=net.name,
            observed_fraction=fraction,
            models=models,
            on_predict=on_predict,
        )
        for (kind, _), model in models.items():
            with open(d / "models" / f"{_safe_name(kind)}.json", "w", encoding="utf-8") as fh:
                save_model(model, fh)
        (d / "predictions.csv").write_text(pred_buf.getvalue(), encoding="utf-8")
        rbuf, sbuf = io.StringIO(), io.StringIO()
        write_results_csv(res.reports, rbuf, header=False)
        write_summary_csv(res.summaries(), sbuf, header=False)
        (d / "results.csv").write_text(RESULTS_HEADER + "\n" + rbuf.getvalue(), encoding="utf-8")
        (d / "summary.csv").write_text(SUMMARY_HEADER + "\n" + sbuf.getvalue(), encoding="utf-8")
        return CellOutcome(net.name, fraction, str(d), True, results=rbuf.getvalue(), summary=sbuf.getvalue())
    except Exception as exc:  # noqa: BLE001 - a failed cell must not stop the others
        detail = f"{type(exc).__name__}: {exc}"
        tb = traceback.format_exc(limit=3)
        return CellOutcome(net.name, fraction, str(d), False, error=detail + "\n" + tb)


def execute(cfg: RunConfig, out_root: str | Path | None = None, jobs: int | None = None) -> tuple[bool, Path]:
    """Run every cell of ``cfg``; returns ``(all cells succeeded, output directory)``."""
    root = Path(out_root if out_root is not None else cfg.output)
    root.mkdir(parents=True, exist_ok=True)
    jobs = jobs if jobs is not None else cfg.jobs
    ini = cfg.to_ini()
    tasks = [(ini, k, f, str(root)) for k in range(len(cfg.networks)) for f in cfg.observed_fractions]
    if jobs == 1:
        outcomes = [run_cell(*t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = [pool.submit(run_cell, *t) for t in tasks]
            outcomes = [f.result() for f in futures]

    with open(root / "results.csv", "w", encoding="utf-8", newline="") as fh:
        fh.write(RESULTS_HEADER + "\n")
        for o in outcomes:
            fh.write(o.results)
    with open(root / "summary.csv", "w", encoding="utf-8", newline="") as fh:
        fh.write(SUMMARY_HEADER + "\n")
        for o in outcomes:
            fh.write(o.summary)

    manifest = {
        "config_digest": cfg.digest(),
        "master_seed": cfg.master_seed,
        "seed_streams": "PCG64(SeedSequence(master_seed, spawn_key=(phase, run, stage))); "
        "phase 0=train 1=test, stage 0=cascade 1=observe 2=predict",
        "networks": [
            {"name": n.name, "source": n.source, "graph_seed": n.graph_seed} for n in cfg.networks
        ],
        "cells": [
            {
                "network": o.network,
                "observed_fraction": o.observed_fraction,
                "directory": str(Path(o.directory).relative_to(root)),
                "status": "ok" if o.ok else "failed",
                "error": o.error.splitlines()[0] if o.error else "",
            }
            for o in outcomes
        ],
    }
    (root / "config.ini").write_text(cfg.to_ini(), encoding="utf-8")
    with open(root / "manifest.json", "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return all(o.ok for o in outcomes), root
