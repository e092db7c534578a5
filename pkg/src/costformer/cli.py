"""``costformer`` command line: preprocess, train, evaluate, ablate, gradcheck.

Exit status is 0 on success, 1 on a tolerance or training failure and 2 on
I/O or configuration errors.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import checks
from .config import ConfigError, RunConfig, expand, load_config_file
from .dataio import DatasetTable, ParseError, parse_table, stratified_holdout, stratified_kfold
from .metrics import CostSpec, average_confusion, confusion, evaluate, render_report
from .model import (CheckpointError, TrainingDiverged, load_checkpoint, predict, save_checkpoint,
                    train)
from .pipeline import StageError, dump_json, run_preprocess, save_processed
from .rng import RngStream

log = logging.getLogger("costformer")

EXIT_OK, EXIT_FAIL, EXIT_IO = 0, 1, 2
VARIANTS = ("full", "no-eliminate", "no-oversample", "no-undersample", "no-focal")


class CliError(Exception):
    """Reported on stderr; carries the exit status."""

    def __init__(self, msg: str, code: int = EXIT_IO):
        super().__init__(msg)
        self.code = code


# -- data -------------------------------------------------------------------------

def _need(path: Path) -> Path:
    if not path.is_file():
        raise CliError(f"missing input file: {path}")
    return path


def _subsample(table: DatasetTable, rows: int | None, seed: int, sub: int) -> DatasetTable:
    if not rows or rows >= table.n_rows:
        return table
    _, held = stratified_holdout(table, rows / table.n_rows, RngStream(seed, "split", sub=sub))
    return table.take(held)


def load_raw(cfg: RunConfig, data_dir) -> tuple[DatasetTable, DatasetTable]:
    ds, base = cfg.dataset, Path(data_dir)
    seed = cfg.pipeline.seed
    try:
        if ds["kind"] == "secom":
            full = parse_table(_need(base / ds["features_path"]), "secom_pair", ds["missing_token"],
                               labels_path=_need(base / ds["labels_path"]))
            plan = stratified_kfold(full, int(ds["kfold"]), RngStream(seed, "split"))
            tr, te = plan.train_test(int(ds["fold"]))
            return full.take(tr), full.take(te)
        train_t = parse_table(_need(base / ds["train_path"]), ds["format"], ds["missing_token"],
                              ds.get("label_column", "class"))
        test_t = parse_table(_need(base / ds["test_path"]), ds["format"], ds["missing_token"],
                             ds.get("label_column", "class"))
    except (ParseError, ValueError) as err:
        raise CliError(f"cannot load dataset: {err}") from None
    train_t = _subsample(train_t, ds.get("subsample_rows"), seed, 1)
    test_t = _subsample(test_t, ds.get("test_subsample_rows"), seed, 2)
    return train_t, test_t


def load_processed(data_dir, name: str) -> DatasetTable:
    try:
        return parse_table(_need(Path(data_dir) / name), "generic_csv")
    except ParseError as err:
        raise CliError(f"{Path(data_dir) / name}: {err}") from None


# -- commands ---------------------------------------------------------------------

def cmd_preprocess(cfg: RunConfig, data_dir, out_dir) -> int:
    train_t, test_t = load_raw(cfg, data_dir)
    try:
        train_p, test_p, prov, report = run_preprocess(train_t, test_t, cfg.pipeline)
    except StageError as err:
        raise CliError(str(err), EXIT_FAIL) from None
    prov.config = cfg.to_dict()
    save_processed(out_dir, train_p, test_p, prov, report)
    dump_json(cfg.to_dict(), Path(out_dir) / "config.json")
    log.info("preprocess: %d features kept, %d dropped; train %d rows, test %d rows",
             train_p.n_features, len(prov.dropped_features), train_p.n_rows, test_p.n_rows)
    return EXIT_OK


def cmd_train(cfg: RunConfig, data_dir, out_dir) -> int:
    table = load_processed(data_dir, "train.csv")
    model_cfg = dataclasses.replace(cfg.model, input_dim=table.n_features)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    echo = {**cfg.to_dict(), "model": model_cfg.to_dict()}
    for seed in cfg.seeds:
        try:
            params, state = train(table, model_cfg, cfg.loss, cfg.train, seed)
        except TrainingDiverged as err:
            raise CliError(f"seed {seed}: training diverged at epoch {err.epoch}", EXIT_FAIL) from None
        meta = {"seed": seed, "best_epoch": state.best_epoch, "best_val_cost": state.best_cost,
                "run_config": echo}
        save_checkpoint(params, model_cfg, meta, out / f"seed{seed}.cwcp")
        dump_json({"config": echo, "seed": seed, "best_epoch": state.best_epoch,
                   "best_val_cost": state.best_cost, "history": state.history_json()},
                  out / f"history_seed{seed}.json")
        log.info("seed %d: best val cost %.1f at epoch %d", seed, state.best_cost, state.best_epoch)
    return EXIT_OK


def cmd_evaluate(cfg: RunConfig, checkpoints, data_dir, out_path, label: str = "") -> int:
    table = load_processed(data_dir, "test.csv")
    if not checkpoints:
        raise CliError("no checkpoints given")
    spec = CostSpec(cfg.train.cost_fp, cfg.train.cost_fn)
    per_seed, cms = [], []
    for path in checkpoints:
        try:
            params, mcfg, meta = load_checkpoint(_need(Path(path)))
        except CheckpointError as err:
            raise CliError(str(err)) from None
        if mcfg.input_dim != table.n_features:
            raise CliError(f"{path}: checkpoint expects {mcfg.input_dim} features, "
                           f"processed data has {table.n_features}")
        cm = confusion(table.labels, predict(params, mcfg, table, cfg.train.threshold))
        cms.append(cm)
        seed = meta.get("seed")
        per_seed.append(evaluate(cm, spec, seeds=(seed,), label=f"{label or 'seed'}:{seed}",
                                 dataset=cfg.dataset["kind"]))
    avg = evaluate(average_confusion(cms), spec, seeds=tuple(r.seeds[0] for r in per_seed),
                   label=label or "average", dataset=cfg.dataset["kind"])
    doc = {"config": cfg.to_dict(), "variant": label or None, "threshold": cfg.train.threshold,
           "per_seed": [r.to_dict() for r in per_seed], "average": avg.to_dict()}
    out = Path(out_path)
    out.parent.mkdir(parents=True, exist_ok=True)
    dump_json(doc, out)
    print(render_report([*per_seed, avg], "text_table"))
    return EXIT_OK


def ablation_config(cfg: RunConfig, variant: str) -> RunConfig:
    if variant not in VARIANTS:
        raise CliError(f"unknown ablation variant {variant!r}; choose from {', '.join(VARIANTS)}")
    pipe, loss = cfg.pipeline, cfg.loss
    if variant == "no-eliminate":
        pipe = dataclasses.replace(pipe, eliminate=False)
    elif variant == "no-oversample":
        pipe = dataclasses.replace(pipe, oversample=False)
    elif variant == "no-undersample":
        pipe = dataclasses.replace(pipe, undersample=False)
    elif variant == "no-focal":
        loss = dataclasses.replace(loss, kind="cross_entropy")
    return dataclasses.replace(cfg, pipeline=pipe, loss=loss)


def cmd_ablate(cfg: RunConfig, variant: str, data_dir, out_dir) -> int:
    vcfg = ablation_config(cfg, variant)
    out = Path(out_dir)
    cmd_preprocess(vcfg, data_dir, out / "processed")
    cmd_train(vcfg, out / "processed", out / "checkpoints")
    ckpts = [out / "checkpoints" / f"seed{s}.cwcp" for s in vcfg.seeds]
    return cmd_evaluate(vcfg, ckpts, out / "processed", out / "report.json", label=variant)


def cmd_gradcheck(instances: int = 20, seed: int = 0, steps=None) -> int:
    """Primitive suite at h=1e-6 and model suite at h=1e-5 unless ``steps`` sweeps both."""
    plan = [(1e-6, 1e-5)] if not steps else [(h, h) for h in steps]
    status = EXIT_OK
    for h_prim, h_model in plan:
        for suite, results in (("primitives", checks.primitive_suite(instances, seed, h_prim)),
                               ("model", checks.model_check(seed=seed, h=h_model))):
            h = h_prim if suite == "primitives" else h_model
            failed = [r for r in results if not r.ok]
            for r in failed:
                print(f"FAIL {r.name}: max rel error {r.error:.3e} > {r.tol:.0e}")
            worst = max(results, key=lambda r: r.error)
            print(f"{suite} h={h:g}: {len(results) - len(failed)}/{len(results)} within tolerance; "
                  f"worst offender {worst.name} error={worst.error:.3e} tol={worst.tol:.0e}")
            if failed:
                status = EXIT_FAIL
    return status


# -- argument handling -------------------------------------------------------------

def _seeds(text: str) -> list[int]:
    try:
        return [int(s) for s in text.split(",") if s.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad seed list {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON run config; keys override the preset")
    common.add_argument("--preset", help="aps_paper, aps_desk, secom_paper or secom_desk")
    common.add_argument("--seed", type=int)
    common.add_argument("--seeds", type=_seeds, help="comma-separated seeds")
    common.add_argument("--out", required=False)
    common.add_argument("--threshold", type=float)
    common.add_argument("--cost-fp", type=float)
    common.add_argument("--cost-fn", type=float)
    common.add_argument("--epochs", type=int, help="override train.max_epochs")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="costformer", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    s = sub.add_parser("preprocess", parents=[common])
    s.add_argument("--data", default=".", help="directory holding the raw dataset files")
    s = sub.add_parser("train", parents=[common])
    s.add_argument("--data", required=True, help="preprocess output directory")
    s = sub.add_parser("evaluate", parents=[common])
    s.add_argument("--data", required=True, help="preprocess output directory")
    s.add_argument("checkpoints", nargs="+")
    s = sub.add_parser("ablate", parents=[common])
    s.add_argument("--data", default=".", help="directory holding the raw dataset files")
    s.add_argument("--variant", required=True)
    s = sub.add_parser("gradcheck", parents=[common])
    s.add_argument("--instances", type=int, default=20)
    s.add_argument("--h", type=float, nargs="+", help="sweep these finite-difference steps over both suites")
    return p


def resolve_config(args) -> RunConfig:
    file_cfg = load_config_file(args.config) if args.config else None
    over: dict = {"train": {}}
    if args.seeds is not None:
        over["seeds"] = args.seeds
    elif args.seed is not None:
        over["seeds"] = [args.seed]
    for flag, key in (("threshold", "threshold"), ("cost_fp", "cost_fp"), ("cost_fn", "cost_fn"),
                      ("epochs", "max_epochs")):
        v = getattr(args, flag)
        if v is not None:
            over["train"][key] = v
    return expand(args.preset, file_cfg, over)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "gradcheck":
            seed = args.seed if args.seed is not None else 0
            return cmd_gradcheck(args.instances, seed, args.h)
        cfg = resolve_config(args)
        if args.command != "evaluate" and not args.out:
            raise CliError(f"{args.command} needs --out")
        if args.command == "preprocess":
            return cmd_preprocess(cfg, args.data, args.out)
        if args.command == "train":
            return cmd_train(cfg, args.data, args.out)
        if args.command == "evaluate":
            return cmd_evaluate(cfg, args.checkpoints, args.data, args.out or Path(args.data) / "report.json")
        return cmd_ablate(cfg, args.variant, args.data, args.out)
    except CliError as err:
        print(f"costformer {args.command}: {err}", file=sys.stderr)
        return err.code
    except ConfigError as err:
        print(f"costformer {args.command}: config error: {err}", file=sys.stderr)
        return EXIT_IO
    except OSError as err:
        print(f"costformer {args.command}: {err}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
