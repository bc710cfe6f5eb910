"""Per-epoch training wall time, dense vs TVSCM, on synthetic data of a chosen shape."""

import argparse

from tvscm.data import make_synthetic
from tvscm.nn import build_model
from tvscm.train import TrainConfig, init_parameters, train


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--dim", type=int, default=784)
    p.add_argument("--classes", type=int, default=10)
    p.add_argument("--samples", type=int, default=2000)
    p.add_argument("--epochs", type=int, default=20)
    p.add_argument("--matvec", default="auto")
    args = p.parse_args()

    data = make_synthetic(0, args.samples, args.dim, args.classes)
    times = {}
    for arch in ("dense", "tvscm"):
        model = init_parameters(build_model(arch, args.dim, args.classes), 0)
        model.set_matvec_path(args.matvec)
        _, report = train(model, data, TrainConfig(epochs=args.epochs))
        times[arch] = report.epoch_seconds
    print("epoch,dense_s,tvscm_s")
    for i, (d, t) in enumerate(zip(times["dense"], times["tvscm"]), 1):
        print(f"{i},{d:.4f},{t:.4f}")
    faster = sum(t < d for d, t in zip(times["dense"], times["tvscm"]))
    print(f"# TVSCM faster in {faster}/{args.epochs} epochs")


if __name__ == "__main__":
    main()
