"""Command-line entry point: ``tvscm {train,eval,bench,inspect}``.

Exit codes: 0 success, 2 usage, 3 I/O or data format, 4 numerics.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .bench import DEFAULT_BATCHES, MIN_REPS, MIN_WARMUP, REPORT_FORMATS, emit_report, run_bench
from .data import Dataset, load_ecg_csv, load_mnist_dir, make_synthetic
from .errors import DataFormatError, NumericsError
from .nn import ARCHITECTURES, build_model, count_parameters, load_checkpoint, save_checkpoint
from .structmat import MATVEC_PATHS, TwoValueCirculant, numerical_rank
from .train import TrainConfig, evaluate, init_parameters, train

log = logging.getLogger("tvscm")

EXIT_USAGE = 2
EXIT_IO = 3
EXIT_NUMERICS = 4
DATASETS = ("mnist", "ecg", "synthetic")
MANIFEST = "manifest.json"


class UsageError(Exception):
    pass


def _add_dataset_flags(p: argparse.ArgumentParser, required: bool = True):
    g = p.add_argument_group("dataset")
    g.add_argument("--dataset", choices=DATASETS, required=required)
    g.add_argument("--data-dir", help="directory holding the four MNIST IDX files")
    g.add_argument("--train-csv", help="ECG training CSV (187 features + label per row)")
    g.add_argument("--test-csv", help="ECG test CSV")
    g.add_argument("--samples", type=int, default=2000, help="synthetic training samples")
    g.add_argument("--test-samples", type=int, default=500, help="synthetic test samples")
    g.add_argument("--dim", type=int, default=16, help="synthetic feature dimension")
    g.add_argument("--classes", type=int, default=4, help="synthetic class count")
    g.add_argument("--noise", type=float, default=0.3, help="synthetic noise sigma")
    g.add_argument("--data-seed", type=int, default=0, help="synthetic generator seed")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tvscm", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train a dense or TVSCM classifier")
    _add_dataset_flags(p)
    p.add_argument("--arch", choices=ARCHITECTURES, required=True)
    p.add_argument("--epochs", type=int, default=20)
    p.add_argument("--batch", type=int, default=32)
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--optimizer", choices=("adam", "sgd"), default="adam")
    p.add_argument("--momentum", type=float, default=0.9, help="SGD momentum")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--no-shuffle", action="store_true")
    p.add_argument("--tvscm-bias", action="store_true", help="give the TVSCM layer a bias vector")
    p.add_argument("--matvec", choices=MATVEC_PATHS, default="auto")
    p.add_argument("--out", default="tvscm_runs/train")

    p = sub.add_parser("eval", help="evaluate a checkpoint on a test split")
    p.add_argument("--model", required=True)
    _add_dataset_flags(p)
    p.add_argument("--out", default="tvscm_runs/eval")

    p = sub.add_parser("bench", help="memory, latency and throughput of a model")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--model", help="checkpoint to benchmark")
    src.add_argument("--arch", choices=ARCHITECTURES, help="benchmark a freshly initialized model")
    p.add_argument("--shape", choices=("mnist", "ecg"), default="mnist",
                   help="input/class shape used with --arch")
    p.add_argument("--name")
    p.add_argument("--batches", default=",".join(map(str, DEFAULT_BATCHES)))
    p.add_argument("--reps", type=int, default=1000)
    p.add_argument("--warmup", type=int, default=MIN_WARMUP)
    p.add_argument("--duration", type=float, default=1.0, help="seconds per batch-size point")
    p.add_argument("--watts", type=float, help="power draw used only to normalize throughput")
    p.add_argument("--matvec", choices=MATVEC_PATHS, default="lowrank")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--format", dest="formats", default="json,csv",
                   help=f"comma-separated subset of {REPORT_FORMATS}")
    p.add_argument("--out", default="tvscm_runs/bench")

    p = sub.add_parser("inspect", help="print the structure of a TVSCM(a, b, n)")
    p.add_argument("--a", type=float, required=True)
    p.add_argument("--b", type=float, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--full", action="store_true", help="print every entry")
    p.add_argument("--out", help="also write inspect.json and a manifest here")
    return parser


def _require(args, *names):
    missing = [f"--{n.replace('_', '-')}" for n in names if getattr(args, n) is None]
    if missing:
        raise UsageError(f"--dataset {args.dataset} requires {', '.join(missing)}")


def load_splits(args) -> tuple[Dataset, Dataset | None]:
    if args.dataset == "mnist":
        _require(args, "data_dir")
        return load_mnist_dir(args.data_dir, "train"), load_mnist_dir(args.data_dir, "test")
    if args.dataset == "ecg":
        _require(args, "train_csv")
        train_set = load_ecg_csv(args.train_csv)
        return train_set, load_ecg_csv(args.test_csv) if args.test_csv else None
    if args.samples < 1 or args.test_samples < 0:
        raise UsageError("--samples must be positive and --test-samples non-negative")
    full = make_synthetic(args.data_seed, args.samples + args.test_samples, args.dim,
                          args.classes, args.noise)
    s = args.samples
    train_set = Dataset(full.features[:s], full.labels[:s], full.classes, "synthetic-train")
    if args.test_samples == 0:
        return train_set, None
    return train_set, Dataset(full.features[s:], full.labels[s:], full.classes, "synthetic-test")


def _resolved(args) -> dict:
    return {k: v for k, v in sorted(vars(args).items()) if k != "func"}


def write_manifest(out: Path, args, artifacts: dict, fingerprint: dict | None = None,
                   seed: int | None = None) -> Path:
    manifest = {
        "command": args.command,
        "config": _resolved(args),
        "seed": seed,
        "dataset": fingerprint,
        "artifacts": {k: str(v) for k, v in artifacts.items()},
        "tool_version": __version__,
    }
    path = out / MANIFEST
    path.write_text(json.dumps(manifest, indent=2) + "\n")
    return path


def cmd_train(args) -> int:
    if args.epochs < 1 or args.batch < 1:
        raise UsageError("--epochs and --batch must be positive")
    cfg = TrainConfig(epochs=args.epochs, batch_size=args.batch, optimizer=args.optimizer,
                      lr=args.lr, momentum=args.momentum, seed=args.seed,
                      shuffle=not args.no_shuffle)
    train_set, test_set = load_splits(args)
    model = build_model(args.arch, train_set.dim, train_set.classes, tvscm_bias=args.tvscm_bias)
    model.set_matvec_path(args.matvec)
    init_parameters(model, args.seed)

    def progress(rec):
        test = "" if rec.test_acc is None else f" test_acc={rec.test_acc:.4f}"
        log.info("epoch %d loss=%.4f train_acc=%.4f%s (%.2fs)",
                 rec.epoch, rec.loss, rec.train_acc, test, rec.seconds)

    model, report = train(model, train_set, cfg, test_set, progress=progress)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    artifacts = {
        "checkpoint": out / "model.json",
        "report_json": out / "train_report.json",
        "report_csv": out / "train_report.csv",
        "epoch_times": out / "epoch_times.csv",
    }
    save_checkpoint(model, artifacts["checkpoint"])
    # wall-clock times live in their own file so the report stays reproducible
    artifacts["report_json"].write_text(report.to_json(timing=False))
    artifacts["report_csv"].write_text(report.to_csv(timing=False))
    artifacts["epoch_times"].write_text(report.timings_csv())
    write_manifest(out, args, artifacts, train_set.fingerprint(), args.seed)
    last = report.epochs[-1]
    print(f"arch={args.arch} params={count_parameters(model)} loss={last.loss:.4f} "
          f"train_acc={last.train_acc:.4f}"
          + ("" if last.test_acc is None else f" test_acc={last.test_acc:.4f}"))
    return 0


def cmd_eval(args) -> int:
    model = load_checkpoint(args.model)
    train_set, test_set = load_splits(args)
    data = test_set if test_set is not None else train_set
    result = evaluate(model, data)
    result.update(samples=len(data), dataset=data.name, parameters=count_parameters(model))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    path = out / "eval.json"
    path.write_text(json.dumps(result, indent=2) + "\n")
    write_manifest(out, args, {"eval": path, "model": args.model}, data.fingerprint())
    print(f"accuracy={result['accuracy']:.4f} loss={result['loss']:.4f} samples={len(data)}")
    return 0


def _parse_batches(text: str) -> list[int]:
    try:
        sizes = [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise UsageError(f"--batches must be comma-separated integers, got {text!r}") from None
    if not sizes or min(sizes) < 1:
        raise UsageError("--batches needs at least one positive batch size")
    return sizes


def cmd_bench(args) -> int:
    if args.reps < MIN_REPS:
        raise UsageError(f"--reps must be at least {MIN_REPS} (got {args.reps})")
    if args.warmup < MIN_WARMUP:
        raise UsageError(f"--warmup must be at least {MIN_WARMUP} (got {args.warmup})")
    if args.duration < 1.0:
        raise UsageError("--duration must be at least 1 second per batch size")
    if args.watts is not None and args.watts <= 0:
        raise UsageError("--watts must be positive")
    formats = [f.strip() for f in args.formats.split(",") if f.strip()]
    for fmt in formats:
        if fmt not in REPORT_FORMATS:
            raise UsageError(f"unknown report format {fmt!r}; choose from {REPORT_FORMATS}")
    batches = _parse_batches(args.batches)

    if args.model:
        model = load_checkpoint(args.model)
        name = args.name or Path(args.model).stem
    else:
        in_dim, classes = (784, 10) if args.shape == "mnist" else (187, 5)
        model = init_parameters(build_model(args.arch, in_dim, classes), args.seed)
        name = args.name or f"{args.arch}-{args.shape}"
    model.set_matvec_path(args.matvec)
    report = run_bench(model, name, batches, args.reps, args.warmup, args.duration, args.watts)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    artifacts = {f"report_{fmt}": emit_report(report, out / f"bench.{fmt}", fmt)
                 for fmt in formats}
    write_manifest(out, args, artifacts, seed=args.seed)
    m, lat = report.memory, report.latency
    print(f"model={name} params={m.parameters} weight_bytes={m.bytes} "
          f"memory={m.mb:.6f}MB/{m.mib:.6f}MiB")
    print(f"latency mean={lat.mean_ms:.4f}ms p50={lat.p50_ms:.4f}ms "
          f"p90={lat.p90_ms:.4f}ms p99={lat.p99_ms:.4f}ms")
    for p in report.throughput:
        extra = "" if p.samples_per_sec_per_watt is None else \
            f" ({p.samples_per_sec_per_watt:.1f} samples/s/W)"
        print(f"batch={p.batch_size} throughput={p.samples_per_sec:.1f} samples/s{extra}")
    return 0


def _fmt_vec(v, full: bool, limit: int = 16) -> str:
    vals = [f"{x:g}" for x in v]
    if full or len(vals) <= limit:
        return "[" + ", ".join(vals) + "]"
    return "[" + ", ".join(vals[:limit // 2]) + ", ..., " + ", ".join(vals[-limit // 2:]) + "]"


def inspect_summary(a: float, b: float, n: int) -> dict:
    op = TwoValueCirculant.from_params(a, b, n)
    lam = op.sym.spectrum
    scale = max(abs(a), abs(b), 1.0)
    tol = 1e-9 * n * scale
    distinct = []
    for value in lam:
        for entry in distinct:
            if abs(entry["value"] - value) <= tol:
                entry["multiplicity"] += 1
                break
        else:
            distinct.append({"value": float(value), "multiplicity": 1})
    for entry in distinct:
        # snap round-off so printed values are stable
        entry["value"] = float(np.round(entry["value"], 9)) + 0.0
    return {
        "a": op.params.a,
        "b": op.params.b,
        "n": n,
        "v_sym": op.sym.v_sym.tolist(),
        "spectrum": [float(np.round(x, 9)) + 0.0 for x in lam],
        "distinct_eigenvalues": distinct,
        "rank": numerical_rank(op.sym),
        "parameters": 2,
    }


def cmd_inspect(args) -> int:
    if args.n < 1:
        raise UsageError("--n must be a positive integer")
    info = inspect_summary(args.a, args.b, args.n)
    print(f"v_sym = {_fmt_vec(info['v_sym'], args.full)}")
    print(f"spectrum = {_fmt_vec(info['spectrum'], args.full)}")
    print("eigenvalues = " + ", ".join(
        f"{e['value']:g} (x{e['multiplicity']})" for e in info["distinct_eigenvalues"]))
    print(f"rank = {info['rank']}")
    print(f"parameters = {info['parameters']}")
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        path = out / "inspect.json"
        path.write_text(json.dumps(info, indent=2) + "\n")
        write_manifest(out, args, {"inspect": path})
    return 0


COMMANDS = {"train": cmd_train, "eval": cmd_eval, "bench": cmd_bench, "inspect": cmd_inspect}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO, format="%(message)s", stream=sys.stderr)
    try:
        return COMMANDS[args.command](args)
    except (DataFormatError, json.JSONDecodeError, OSError) as exc:
        print(f"tvscm {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_IO
    except NumericsError as exc:
        print(f"tvscm {args.command}: numerics error: {exc}", file=sys.stderr)
        return EXIT_NUMERICS
    except (UsageError, ValueError) as exc:
        print(f"tvscm {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE

if __name__ == "__main__":
    sys.exit(main())
