"""Command-line entry points.

Output layout (relative to ``--out``)::

    <model>/L<L>/operators/r0000.kcm, r0000.json     (build)
    <model>/L<L>/spectra/r0000.phases.txt            (spectrum)
    <model>/L<L>/samples/entropies.txt, spacings.txt (ensemble)
    <model>/L<L>/report/cell.json, histogram_*.txt, chi.txt
    baseline/<ensemble>_<kind>_<N1>x<N2>_n<count>_seed<seed>.txt
    summary.txt, report.json

Exit status: 0 on success, 1 if any (model, L) cell failed, 2 for
configuration errors.
"""

from __future__ import annotations

import argparse
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__, models, storage
from .config import RunConfig
from .ensemble import (
    CellReport,
    EntropySamples,
    baseline_samples,
    classify_trend,
    compare_cell,
    resolve_threads,
    run_cell,
)
from .errors import KickchainError, ParameterError
from .hilbert import Bipartition
from .spectra import decomposition_residuals, eigendecompose_unitary, unfolded_spacings

log = logging.getLogger("kickchain")

EXIT_OK, EXIT_PARTIAL, EXIT_CONFIG = 0, 1, 2


def cell_dir(config: RunConfig, model: str, L: int) -> Path:
    return Path(config.out) / model / f"L{L}"


def _seed_meta(config: RunConfig, model: str, L: int, realization: int) -> dict:
    return {
        "model": model, "L": L, "realization": realization, "master_seed": config.master_seed,
        "derived_seed": models.derived_seed(config.master_seed, model, L, realization),
    }


def operator_from_recipe(recipe: dict) -> models.FloquetOperator:
    """Rebuild an operator from the seed recipe stored next to it."""
    overrides = recipe.get("overrides", {})
    rng = models.derive_rng(recipe["master_seed"], recipe["model"], recipe["L"], recipe["realization"])
    return models.build(recipe["model"], recipe["L"], rng, seed=recipe["realization"],
                        max_L=recipe.get("max_L", models.DENSE_LIMIT), **overrides)


def _recipe(config: RunConfig, model: str, L: int, realization: int) -> dict:
    recipe = _seed_meta(config, model, L, realization)
    recipe["overrides"] = config.ensemble_spec(model).overrides
    recipe["max_L"] = config.max_L
    return recipe


def _jsonable(meta: dict) -> dict:
    return {k: v.tolist() if isinstance(v, np.ndarray) else v for k, v in meta.items()
            if isinstance(v, (bool, int, float, str, np.ndarray, type(None)))}


def cmd_build(config: RunConfig, model: str, L: int, realization: int = 0) -> Path:
    recipe = _recipe(config, model, L, realization)
    op = operator_from_recipe(recipe)
    meta = dict(recipe, code_version=__version__, unitarity_residual=op.unitarity_residual(),
                params=op.params.to_dict() if op.params else None, N=op.N,
                operator=_jsonable(op.metadata), matrix_file=None)
    base = cell_dir(config, model, L) / "operators" / f"r{realization:04d}"
    if config.store_matrix:
        storage.write_matrix(base.with_suffix(".kcm"), op.matrix)
        meta["matrix_file"] = base.with_suffix(".kcm").name
    return storage.write_json(base.with_suffix(".json"), meta)


def cmd_spectrum(config: RunConfig, model: str, L: int, realization: int = 0) -> Path:
    recipe = _recipe(config, model, L, realization)
    op = operator_from_recipe(recipe)
    decomp = eigendecompose_unitary(op)
    meta = dict(_seed_meta(config, model, L, realization), N=op.N, method=decomp.metadata["method"])
    meta.update(decomposition_residuals(op, decomp))
    meta["mean_spacing"] = float(np.mean(unfolded_spacings(decomp.phases).spacings))
    base = cell_dir(config, model, L) / "spectra" / f"r{realization:04d}"
    if config.store_vectors:
        storage.write_matrix(base.with_suffix(".vectors.kcm"), decomp.vectors)
    return storage.write_table(base.with_suffix(".phases.txt"), {"phase": decomp.phases}, meta)


def baseline_path(config: RunConfig, split: Bipartition, count: int) -> Path:
    name = f"{config.baseline_ensemble}_{config.kind}_{split.N1}x{split.N2}_n{count}_seed{config.master_seed}.txt"
    return Path(config.out) / "baseline" / name


def cmd_baseline(config: RunConfig, N1: int, N2: int, count: int) -> tuple[EntropySamples, Path]:
    """Random-state entropies, cached on disk under the (N1, N2, count, seed) key."""
    split = Bipartition.from_dims(N1, N2)
    path = baseline_path(config, split, count)
    key = {"ensemble": config.baseline_ensemble, "kind": config.kind, "N1": N1, "N2": N2,
           "count": count, "master_seed": config.master_seed}
    if path.exists():
        try:
            meta, cols = storage.read_table(path)
            if any(meta.get(k) != v for k, v in key.items()) or cols["value"].size != count:
                raise storage.StorageError("cache key or length mismatch")
            log.info("baseline cache hit: %s", path)
            return EntropySamples(cols["value"], split, config.kind, source=meta), path
        except (storage.StorageError, KeyError) as exc:
            log.warning("baseline cache %s unusable (%s); recomputing", path, exc)
    log.info("computing baseline %s", path.name)
    samples = baseline_samples(split, count, config.master_seed, config.baseline_ensemble, config.kind)
    values = samples.values
    stderr = float(np.std(values, ddof=1) / math.sqrt(values.size)) if values.size > 1 else None
    meta = dict(key, mean=float(values.mean()), std=float(np.std(values, ddof=1)) if values.size > 1 else None,
                mean_stderr=stderr, derived_seed=models.derived_seed(
                    config.master_seed, f"baseline/{config.baseline_ensemble}/{N1}x{N2}", split.L, count))
    storage.write_table(path, {"value": values}, meta)
    return samples, path


def _hist_table(path, hp, hq, meta, names=("model_density", "baseline_density")):
    cols = {"left": hp.edges[:-1], "right": hp.edges[1:], names[0]: hp.density, names[1]: hq.density}
    storage.write_table(path, cols, meta)


def _cell_json(rep: CellReport) -> dict:
    keys = ("model", "L", "N1", "N2", "realizations", "n_samples", "n_baseline", "mean_S1", "std_S1",
            "mean_S1_stderr", "mean_COE", "std_COE", "mean_COE_stderr", "delta_avg", "delta_std",
            "ratio_R", "ratio_R_stderr", "kl_divergence", "kl_floored", "js_divergence",
            "chi_js_divergence", "spacing_ks")
    return {k: getattr(rep, k) for k in keys}


def write_cell(config: RunConfig, cell, rep: CellReport) -> None:
    d = cell_dir(config, cell.model, cell.L)
    meta = {"model": cell.model, "L": cell.L, "master_seed": config.master_seed, "derived_seeds": cell.seeds}
    storage.write_table(d / "samples" / "entropies.txt",
                        {"value": cell.entropies.values, "realization": cell.entropies.blocks}, meta)
    storage.write_table(d / "samples" / "spacings.txt",
                        {"spacing": cell.spacings.spacings, "realization": cell.spacings.metadata["blocks"]}, meta)
    storage.write_table(d / "report" / "chi.txt", {"chi": rep.chi_samples, "realization": cell.entropies.blocks}, meta)
    _hist_table(d / "report" / "histogram_S1.txt", rep.hist_S1, rep.hist_COE, meta)
    _hist_table(d / "report" / "histogram_chi.txt", rep.hist_chi, rep.hist_chi_COE, meta)
    storage.write_json(d / "report" / "cell.json", dict(_cell_json(rep), **meta, code_version=__version__))


def write_summary(config: RunConfig, rows: list[dict]) -> Path:
    cols = {name: [r[name] for r in rows] for name in CellReport.SUMMARY_COLUMNS}
    meta = {"master_seed": config.master_seed, "cells": len(rows)}
    path = storage.write_table(Path(config.out) / "summary.txt", cols, meta)
    trends = {}
    for model in dict.fromkeys(r["model"] for r in rows):
        mine = sorted((r for r in rows if r["model"] == model), key=lambda r: r["L"])
        trends[model] = {
            "L": [r["L"] for r in mine], "ratio_R": [r["ratio_R"] for r in mine],
            "trend": classify_trend([r["L"] for r in mine], [r["ratio_R"] for r in mine], config.plateau_slope),
        }
    storage.write_json(Path(config.out) / "report.json",
                       {"master_seed": config.master_seed, "code_version": __version__, "models": trends})
    return path


def cmd_ensemble(config: RunConfig, threads: int | None = None) -> tuple[Path | None, list]:
    """Run every (model, L) cell; returns the summary path and the failed cells."""
    rows, failures = [], []
    for model in config.models:
        spec = config.ensemble_spec(model)
        for L in spec.Ls:
            try:
                cell = run_cell(spec, L, threads)
                split = spec.split(L)
                baseline, _ = cmd_baseline(config, split.N1, split.N2, spec.baseline_count(L))
                rep = compare_cell(cell, baseline, config.bins)
                write_cell(config, cell, rep)
                rows.append(rep.summary_row())
                log.info("%s L=%d: delta_avg=%.3g R=%.3g", model, L, rep.delta_avg, rep.ratio_R)
            except KickchainError as exc:
                log.error("cell %s L=%d failed: %s", model, L, exc)
                failures.append({"model": model, "L": L, "error": str(exc)})
    if failures:
        storage.write_json(Path(config.out) / "failures.json", failures)
    summary = write_summary(config, rows) if rows else None
    return summary, failures


def cmd_report(config: RunConfig) -> Path:
    """Rebuild summary.txt and report.json from stored cell reports."""
    rows, missing = [], []
    for model in config.models:
        for L in config.Ls:
            path = cell_dir(config, model, L) / "report" / "cell.json"
            if not path.exists():
                missing.append((model, L))
                continue
            cell = storage.read_json(path)
            row = {k: cell[k] for k in CellReport.SUMMARY_COLUMNS[:-2]}
            row["kl"], row["js"] = cell["kl_divergence"], cell["js_divergence"]
            rows.append(row)
    if missing:
        from .errors import PartialReportError
        raise PartialReportError(missing)
    return write_summary(config, rows)


# ---------------------------------------------------------------------------
# argument parsing


def _int_list(text: str) -> list[int]:
    try:
        return [int(x) for x in text.replace(",", " ").split()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected integers, got {text!r}") from None


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--config", type=Path, help="JSON run configuration")
    p.add_argument("--seed", type=int, help="master seed")
    p.add_argument("--out", help="output directory")
    p.add_argument("--threads", type=int, help="worker processes (default $KICKCHAIN_THREADS or 1)")
    p.add_argument("--model", help="comma-separated subset of: " + ",".join(models.MODELS))
    p.add_argument("--L", type=_int_list, help="chain lengths, e.g. 6,8,10")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def make_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = argparse.ArgumentParser(prog="kickchain", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="verb", required=True)

    p = sub.add_parser("build", parents=[common], help="write one dense Floquet operator")
    p.add_argument("--realization", type=int, default=0)
    p.add_argument("--no-matrix", action="store_true", help="store only the seed recipe")

    p = sub.add_parser("spectrum", parents=[common], help="diagonalize one realization")
    p.add_argument("--realization", type=int, default=0)
    p.add_argument("--vectors", action="store_true", help="also store eigenvectors")

    p = sub.add_parser("baseline", parents=[common], help="random-state entropy baseline")
    p.add_argument("--N1", type=int)
    p.add_argument("--N2", type=int)
    p.add_argument("--count", type=int)

    p = sub.add_parser("ensemble", parents=[common], help="full ensemble comparison")
    p.add_argument("--realizations", type=int, help="realizations for every L")
    p.add_argument("--baseline-count", type=int, help="baseline states for every L")

    sub.add_parser("report", parents=[common], help="rebuild summary from stored cells")
    sub.add_parser("config", parents=[common], help="print the effective configuration")
    return parser


def config_from_args(args) -> RunConfig:
    config = RunConfig.load(args.config) if args.config else RunConfig()
    if args.seed is not None:
        config.master_seed = args.seed
    if args.out is not None:
        config.out = args.out
    if args.model:
        config.models = args.model.split(",")
    if args.L:
        config.Ls = args.L
    if getattr(args, "realizations", None):
        config.realizations = {L: args.realizations for L in config.Ls}
    if getattr(args, "baseline_count", None):
        config.baseline_counts = {L: args.baseline_count for L in config.Ls}
    if getattr(args, "no_matrix", False):
        config.store_matrix = False
    if getattr(args, "vectors", False):
        config.store_vectors = True
    # re-validate after overrides
    return RunConfig.from_dict(config.to_dict())


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        config = config_from_args(args)
        threads = resolve_threads(args.threads)
    except (ParameterError, OSError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    try:
        if args.verb == "config":
            sys.stdout.write(config.dumps())
        elif args.verb in ("build", "spectrum"):
            fn = cmd_build if args.verb == "build" else cmd_spectrum
            for model in config.models:
                for L in config.Ls:
                    print(fn(config, model, L, args.realization))
        elif args.verb == "baseline":
            if args.N1 and args.N2:
                dims = [(args.N1, args.N2)]
            else:
                dims = [(s.N1, s.N2) for s in (config.ensemble_spec(config.models[0]).split(L) for L in config.Ls)]
            for N1, N2 in dims:
                L = int(math.log2(N1 * N2))
                count = args.count or config.ensemble_spec(config.models[0]).baseline_count(L)
                samples, path = cmd_baseline(config, N1, N2, count)
                print(f"{path}\tmean={float(samples.values.mean())!r}\tstd={float(np.std(samples.values, ddof=1))!r}")
        elif args.verb == "ensemble":
            summary, failures = cmd_ensemble(config, threads)
            if summary:
                print(summary)
            if failures:
                return EXIT_PARTIAL
        elif args.verb == "report":
            print(cmd_report(config))
    except ParameterError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except KickchainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARTIAL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
