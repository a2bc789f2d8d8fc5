"""Command-line driver: ``dqlap {generate,train,compare,project}``.

Every run writes into ``<output>/<command>-<digest>/`` where the digest is a
hash of the resolved configuration, so reruns overwrite the same files.
Exit codes: 0 success, 2 configuration error, 3 data error, 4 runtime error.
Log verbosity comes from ``DQLAP_LOG_LEVEL`` (default WARNING).
"""

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import trainer
from .agent import predict
from .config import ConfigError, RunConfig
from .data import (DataError, ScalerParams, apply_scaler, fit_scaler, generate_synthetic, load_csv,
                   write_csv)
from .evaluation import pca_project, write_projection_csv
from .network import CheckpointError, QNetwork

EXIT_CONFIG, EXIT_DATA, EXIT_RUNTIME = 2, 3, 4
REGIMES = ("baseline", "ddqn", "ddqn-daily")

log = logging.getLogger("dqlap")


def _dump(obj):
    return json.dumps(obj, sort_keys=True)


class JsonLines:
    def __init__(self, path):
        self.fh = open(path, "w", encoding="utf-8")

    def __call__(self, record):
        self.fh.write(_dump(record) + "\n")

    def close(self):
        self.fh.close()


def run_dir(cfg, command, *extra):
    path = Path(cfg["output"]) / f"{command}-{cfg.digest(command, *extra)}"
    path.mkdir(parents=True, exist_ok=True)
    (path / "config.yaml").write_text(cfg.to_yaml(), encoding="utf-8")
    return path


def load_dataset(cfg):
    csv_path = cfg["data"]["csv"]
    if csv_path:
        return load_csv(csv_path)
    return generate_synthetic(cfg.synthetic_spec())


def save_scaler(scaler, path):
    Path(path).write_text(_dump({"minimum": scaler.minimum.tolist(),
                                 "maximum": scaler.maximum.tolist()}) + "\n", encoding="utf-8")


def load_scaler(path):
    raw = json.loads(Path(path).read_text(encoding="utf-8"))
    return ScalerParams(np.array(raw["minimum"], dtype=np.float64),
                        np.array(raw["maximum"], dtype=np.float64))


def save_checkpoint(net, scaler, directory, name):
    directory.mkdir(exist_ok=True)
    net.save(directory / name)
    save_scaler(scaler, directory / f"{name}.scaler.json")


def cmd_generate(cfg, args):
    data = generate_synthetic(cfg.synthetic_spec())
    out = run_dir(cfg, "generate")
    write_csv(data, out / "dataset.csv")
    for day in range(1, data.day_count + 1):
        counts = np.bincount(data.labels[data.days == day], minlength=2)
        print(f"day {day}: fault={counts[0]} normal={counts[1]}")
    print(out / "dataset.csv")


def cmd_train(cfg, args):
    tcfg = cfg.trainer_config()
    data = load_dataset(cfg)
    out = run_dir(cfg, "train", args.regime)
    ckpt = out / "checkpoints"
    sink = JsonLines(out / "progress.jsonl")
    try:
        if args.regime == "baseline":
            res = trainer.run_baseline(tcfg, data, sink, cfg.backend)
        elif args.regime == "ddqn":
            res = trainer.run_all_at_once(tcfg, data, sink, cfg.backend)
        else:
            records, res = trainer.run_daily_update(tcfg, data, sink, cfg.backend)
            with open(out / "daily_records.jsonl", "w", encoding="utf-8") as fh:
                for rec in records:
                    fh.write(_dump(rec.to_dict()) + "\n")
            for rec in records:
                save_checkpoint(rec.network, rec.scaler, ckpt, rec.checkpoint)
    finally:
        sink.close()
    save_checkpoint(res.network, res.scaler, ckpt, f"{args.regime}-final.ckpt")
    (out / "report.json").write_text(_dump(res.report.to_dict()) + "\n", encoding="utf-8")
    print(f"{res.name}: accuracy={res.report.accuracy:.4f} precision={res.report.macro_precision:.4f} "
          f"recall={res.report.macro_recall:.4f} f1={res.report.macro_f1:.4f}")
    print(out)


def cmd_compare(cfg, args):
    tcfg = cfg.trainer_config()
    data = load_dataset(cfg)
    out = run_dir(cfg, "compare")
    sink = JsonLines(out / "progress.jsonl")
    try:
        comp = trainer.run_comparison(tcfg, data, sink, cfg.backend)
    finally:
        sink.close()
    (out / "table.txt").write_text(comp.table(with_timing=False), encoding="utf-8")
    (out / "reports.json").write_text(
        _dump({name: r.to_dict() for name, r in comp.rows.items()}) + "\n", encoding="utf-8")
    with open(out / "daily_records.jsonl", "w", encoding="utf-8") as fh:
        for rec in comp.daily_records:
            fh.write(_dump(rec.to_dict()) + "\n")
    # wall-clock measurements are the only non-reproducible output
    (out / "timing.txt").write_text(comp.table(with_timing=True), encoding="utf-8")
    for key, res in zip(REGIMES, comp.results.values()):
        save_checkpoint(res.network, res.scaler, out / "checkpoints", f"{key}-final.ckpt")
    print(comp.table(with_timing=True), end="")
    print(out)


def cmd_project(cfg, args):
    data = load_dataset(cfg)
    net = scaler = None
    if args.checkpoint:
        ckpt = Path(args.checkpoint)
        if not ckpt.is_file():
            raise DataError(f"checkpoint {ckpt} not found")
        net = QNetwork.load(ckpt, backend=cfg.backend)
        scaler_path = Path(args.scaler) if args.scaler else ckpt.with_name(ckpt.name + ".scaler.json")
        if not scaler_path.is_file():
            raise DataError(f"scaler file {scaler_path} not found")
        scaler = load_scaler(scaler_path)
    model_input = apply_scaler(data, scaler or fit_scaler(data))
    shown = model_input if cfg["project"]["normalized"] else data
    proj = pca_project(shown)
    out = run_dir(cfg, "project", str(args.checkpoint))
    write_projection_csv(proj.points, data.labels, out / "projection_truth.csv")
    written = [out / "projection_truth.csv"]
    if net is not None:
        write_projection_csv(proj.points, predict(net, model_input), out / "projection_predicted.csv")
        written.append(out / "projection_predicted.csv")
    print(f"explained variance: {proj.explained_variance[0]:.6g} {proj.explained_variance[1]:.6g}")
    for path in written:
        print(path)


COMMANDS = {"generate": cmd_generate, "train": cmd_train, "compare": cmd_compare, "project": cmd_project}


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="YAML configuration file")
    common.add_argument("--seed", type=int, help="base seed for data, split and training")
    common.add_argument("--out", help="output directory root")
    common.add_argument("--data", help="CSV dataset (instead of the synthetic generator)")
    common.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                        help="override one field, e.g. --set agent.gamma=0.9 (repeatable)")
    parser = argparse.ArgumentParser(prog="dqlap", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("generate", parents=[common], help="write a synthetic dataset CSV")
    p = sub.add_parser("train", parents=[common], help="train one regime")
    p.add_argument("--regime", choices=REGIMES, default="ddqn")
    sub.add_parser("compare", parents=[common], help="run all three regimes and tabulate")
    p = sub.add_parser("project", parents=[common], help="export the 2-D PCA projection")
    p.add_argument("--checkpoint", help="network checkpoint for the predicted-label file")
    p.add_argument("--scaler", help="scaler JSON (default: <checkpoint>.scaler.json)")
    return parser


def resolve_config(args):
    flags = {}
    if args.seed is not None:
        flags["seed"] = args.seed
    if args.out is not None:
        flags["output"] = args.out
    if args.data is not None:
        flags["data"] = {"csv": args.data}
    # flags beat --set overrides, which beat the file
    return RunConfig.resolve(args.config, [*args.overrides, flags])


def _fail(code, exc):
    record = {"error": type(exc).__name__, "exit_code": code, "message": str(exc)}
    print(json.dumps(record, sort_keys=True), file=sys.stderr)
    return code


def main(argv=None):
    logging.basicConfig(level=os.environ.get("DQLAP_LOG_LEVEL", "WARNING").upper(),
                        format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        cfg = resolve_config(args)
        COMMANDS[args.command](cfg, args)
    except ConfigError as exc:
        return _fail(EXIT_CONFIG, exc)
    except (DataError, CheckpointError) as exc:
        return _fail(EXIT_DATA, exc)
    except Exception as exc:  # noqa: BLE001 - any other failure is a runtime error
        log.debug("runtime failure", exc_info=True)
        return _fail(EXIT_RUNTIME, exc)
    return 0


if __name__ == "__main__":
    sys.exit(main())
