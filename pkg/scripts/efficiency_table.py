"""Memory, latency and throughput for the four reference architectures on this host."""

import argparse
import warnings

from tvscm.bench import DEFAULT_BATCHES, run_bench
from tvscm.nn import build_model
from tvscm.train import init_parameters

SHAPES = {"mnist": (784, 10), "ecg": (187, 5)}


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--reps", type=int, default=1000)
    p.add_argument("--duration", type=float, default=1.0)
    p.add_argument("--matvec", default="lowrank", help="TVSCM matvec path")
    args = p.parse_args()

    warnings.simplefilter("ignore", RuntimeWarning)
    reports = {}
    for shape, (d, k) in SHAPES.items():
        for arch in ("dense", "tvscm"):
            model = init_parameters(build_model(arch, d, k), 0)
            model.set_matvec_path(args.matvec)
            reports[shape, arch] = run_bench(model, f"{arch}-{shape}", DEFAULT_BATCHES,
                                             args.reps, duration=args.duration)

    cols = " ".join(f"{'bs=' + str(b):>10}" for b in DEFAULT_BATCHES)
    print(f"{'model':12} {'params':>8} {'bytes':>9} {'MB':>8} {'MiB':>9} {'mean ms':>8} "
          f"{'p99 ms':>8} {cols}")
    for (shape, arch), r in reports.items():
        tput = " ".join(f"{pt.samples_per_sec:10.0f}" for pt in r.throughput)
        print(f"{r.model:12} {r.memory.parameters:8d} {r.memory.bytes:9d} {r.memory.mb:8.3f} "
              f"{r.memory.mib:9.6f} {r.latency.mean_ms:8.4f} {r.latency.p99_ms:8.4f} {tput}")
    for shape in SHAPES:
        dense, tv = reports[shape, "dense"], reports[shape, "tvscm"]
        b32 = DEFAULT_BATCHES.index(32)
        print(f"{shape}: bytes {dense.memory.bytes / tv.memory.bytes:.2f}x, "
              f"latency {dense.latency.mean_ms / tv.latency.mean_ms:.1f}x, "
              f"batch-32 throughput {tv.throughput[b32].samples_per_sec / dense.throughput[b32].samples_per_sec:.1f}x")


if __name__ == "__main__":
    main()
