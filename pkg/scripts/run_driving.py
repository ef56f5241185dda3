"""Train a formula classifier on a driving behavior pair.

Generates the pair, fits the network, prunes the extracted formula, and
reports train/held-out misclassification plus network-formula agreement.
"""

import argparse
from dataclasses import replace
from time import perf_counter

from stlinfer.datasets import DrivingBehavior, gen_driving_pair
from stlinfer.evaluate import emit_report, network_mcr, sign_agreement
from stlinfer.stl import mcr, parse_formula
from stlinfer.trainer import TrainConfig, train

# schedules that reach zero training error on the 500-per-class pairs
TUNED = {
    DrivingBehavior.OVERTAKE: TrainConfig(
        epochs=40, batch_size=50, seed=0, lr=0.3, beta_start=3.0, beta_hold=0.5
    ),
    DrivingBehavior.STOP_AND_GO: TrainConfig(
        epochs=60, batch_size=25, seed=0, lr=0.25, beta_start=3.0, beta_hold=0.5
    ),
}
DEFAULT = TrainConfig(epochs=60, batch_size=50, seed=0, lr=0.25, beta_start=3.0, beta_hold=0.5)


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--positive", default="GoForward")
    ap.add_argument("--negative", default="Overtake")
    ap.add_argument("--count", type=int, default=500, help="samples per class")
    ap.add_argument("--length", type=int, default=40)
    ap.add_argument("--seed", type=int, default=None, help="override the tuned seed")
    ap.add_argument("--epochs", type=int, default=None)
    ap.add_argument("--out", default=None, help="directory for report files")
    args = ap.parse_args()

    pos = DrivingBehavior.from_name(args.positive)
    neg = DrivingBehavior.from_name(args.negative)
    cfg = TUNED.get(neg, DEFAULT)
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)
    if args.epochs is not None:
        cfg = replace(cfg, epochs=args.epochs)

    data = gen_driving_pair(pos, neg, args.count, args.length, seed=0)
    held = gen_driving_pair(pos, neg, max(args.count // 2, 1), args.length, seed=101)
    print(f"{pos.value} vs {neg.value}: {len(data)} train, {len(held)} held-out")

    t0 = perf_counter()
    report = train(data, cfg)
    print(f"trained {cfg.epochs} epochs in {perf_counter() - t0:.1f}s")
    print(f"extracted:  {report.formula_text}")
    print(f"simplified: {report.simplified_text}")

    simplified = parse_formula(report.simplified_text)
    print(f"train mcr:    {mcr(data, simplified):.4f}")
    print(f"held-out mcr: {mcr(held, simplified):.4f}")

    snapped = report.params.snapped()
    agree = sign_agreement(
        snapped, report.shape, report.config.activation(),
        parse_formula(report.formula_text), held,
    )
    print(f"held-out network mcr: {network_mcr(snapped, report.shape, report.config.activation(), held):.4f}")
    print(f"network-formula sign agreement: {agree:.4f}")

    if args.out:
        paths = emit_report(report, args.out)
        print(f"report written to {paths['report']}")


if __name__ == "__main__":
    main()
