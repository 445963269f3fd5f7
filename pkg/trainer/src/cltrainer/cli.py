"""Command-line entry point: ``cltrainer train`` and ``cltrainer predict``."""

from __future__ import annotations

import argparse
import sys

from .predict import predict_corpus
from .train import TrainConfig, load_checkpoint, train


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cltrainer")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train on a labeled corpus")
    p.add_argument("--labels", required=True)
    p.add_argument("--images", required=True)
    p.add_argument("--calib", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--steps", type=int, default=500)
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--gamma", type=float, default=1.0)
    p.add_argument("--batch-size", type=int, default=4)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--stacks", type=int, default=2)
    p.add_argument("--channels", type=int, default=32)

    p = sub.add_parser("predict", help="emit prediction tensors for a corpus")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--images", required=True)
    p.add_argument("--calib", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--single-stack", action="store_true",
                   help="export the first hourglass stack only")

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "train":
            cfg = TrainConfig(
                learning_rate=args.lr,
                gamma=args.gamma,
                steps=args.steps,
                batch_size=args.batch_size,
                seed=args.seed,
            )
            ckpt = train(
                args.labels, args.images, args.calib, args.out,
                cfg=cfg, num_stacks=args.stacks, base_channels=args.channels,
            )
            print(f"train: {args.steps} steps -> {ckpt}")
        else:
            model = load_checkpoint(args.checkpoint)
            n = predict_corpus(
                model, args.images, args.calib, args.out,
                num_stacks=1 if args.single_stack else None,
            )
            print(f"predict: {n} frames -> {args.out}")
        return 0
    except (ValueError, FileNotFoundError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
