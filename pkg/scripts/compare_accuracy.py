"""Train the dense baseline and the TVSCM model side by side and print accuracies.

    python scripts/compare_accuracy.py --dataset mnist --data-dir data/mnist
    python scripts/compare_accuracy.py --dataset ecg --train-csv a.csv --test-csv b.csv
    python scripts/compare_accuracy.py --dataset synthetic --dim 187 --classes 5
"""

import argparse

from tvscm.data import Dataset, load_ecg_csv, load_mnist_dir, make_synthetic
from tvscm.nn import build_model, count_parameters
from tvscm.train import TrainConfig, evaluate, init_parameters, train


def load(args):
    if args.dataset == "mnist":
        return load_mnist_dir(args.data_dir, "train"), load_mnist_dir(args.data_dir, "test")
    if args.dataset == "ecg":
        return load_ecg_csv(args.train_csv), load_ecg_csv(args.test_csv)
    # one draw split in two so both halves share the class centroids
    full = make_synthetic(args.seed, args.samples + args.samples // 4, args.dim, args.classes)
    s = args.samples
    return (Dataset(full.features[:s], full.labels[:s], full.classes, "synthetic-train"),
            Dataset(full.features[s:], full.labels[s:], full.classes, "synthetic-test"))


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--dataset", choices=("mnist", "ecg", "synthetic"), default="synthetic")
    p.add_argument("--data-dir", default="data/mnist")
    p.add_argument("--train-csv")
    p.add_argument("--test-csv")
    p.add_argument("--samples", type=int, default=2000)
    p.add_argument("--dim", type=int, default=187)
    p.add_argument("--classes", type=int, default=5)
    p.add_argument("--epochs", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    args = p.parse_args()

    train_set, test_set = load(args)
    print(f"{'arch':6} {'params':>8} {'train_acc':>9} {'test_acc':>9} {'s/epoch':>8}")
    for arch in ("dense", "tvscm"):
        model = init_parameters(build_model(arch, train_set.dim, train_set.classes), args.seed)
        _, report = train(model, train_set, TrainConfig(epochs=args.epochs, seed=args.seed))
        test_acc = evaluate(model, test_set)["accuracy"]
        secs = sum(report.epoch_seconds) / len(report.epochs)
        print(f"{arch:6} {count_parameters(model):8d} {report.epochs[-1].train_acc:9.4f} "
              f"{test_acc:9.4f} {secs:8.3f}")


if __name__ == "__main__":
    main()
