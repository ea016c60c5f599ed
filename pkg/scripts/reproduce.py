"""Informational reproduction runs: complexity table, ablation, and any UCR / regression data on disk.

    python scripts/reproduce.py --out runs/ [--ucr-dir DIR] [--reg-dir DIR] [--epochs 100]

Classification datasets are discovered as ``<ucr-dir>/<Name>_TRAIN.tscls`` plus
``<Name>_TEST.tscls``; regression series as ``<reg-dir>/*.csv``. Results are
written as JSON next to a plain-text summary. None of these numbers gate the
test suite.
"""

import argparse
import json
from dataclasses import replace
from pathlib import Path

from memdd.complexity import ALL_KINDS
from memdd.harness import TrainConfig, cmd_ablate, cmd_complexity, cmd_train, format_ablation


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="runs")
    ap.add_argument("--ucr-dir")
    ap.add_argument("--reg-dir")
    ap.add_argument("--models", default="memdd,lstm,gru,bilstm")
    ap.add_argument("--epochs", type=int, default=100)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--horizons", default="3,6,12,24")
    args = ap.parse_args(argv)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    models = args.models.split(",")
    summary = []

    for d_x in (1, 9):
        rows = cmd_complexity(list(ALL_KINDS), 128, d_x, 24, k=3, layers=2, d_ff=512)
        (out / f"complexity_dx{d_x}.json").write_text(json.dumps(rows, indent=2))
        for r in rows:
            if "ratio" in r:
                summary.append(f"complexity d_x={d_x} {r['ratio']}: params x{r['params_ratio']:.3f}, "
                               f"memdd flops fraction {r['flops_ratio_memdd_over']:.3f}")

    abl = cmd_ablate(TrainConfig(task="cls", synthetic="delayed-recall", epochs=args.epochs,
                                 seed=args.seed, report=str(out / "ablation.json")))
    summary.append("ablation (delayed recall):\n" + format_ablation(abl["rows"]))

    if args.ucr_dir:
        for train in sorted(Path(args.ucr_dir).glob("*_TRAIN.tscls")):
            name = train.name[: -len("_TRAIN.tscls")]
            test = train.with_name(f"{name}_TEST.tscls")
            if not test.exists():
                continue
            for model in models:
                cfg = TrainConfig(task="cls", model=model, data=str(train), test=str(test),
                                  epochs=args.epochs, seed=args.seed,
                                  report=str(out / f"cls_{name}_{model}.json"))
                rep, _ = cmd_train(cfg)
                m = rep["metrics"]
                summary.append(f"cls {name:<20} {model:<7} acc {m['accuracy']:.4f}  F1 {m['macro_f1']:.4f}")

    if args.reg_dir:
        for csv in sorted(Path(args.reg_dir).glob("*.csv")):
            for L in (int(h) for h in args.horizons.split(",")):
                for model in models:
                    cfg = TrainConfig(task="reg", model=model, data=str(csv), L=L, P=L,
                                      epochs=args.epochs, seed=args.seed)
                    cfg = replace(cfg, report=str(out / f"reg_{csv.stem}_L{L}_{model}.json"))
                    rep, _ = cmd_train(cfg)
                    summary.append(f"reg {csv.stem:<20} L=P={L:<3} {model:<7} mse {rep['metrics']['mse']:.3e}")

    text = "\n".join(summary) + "\n"
    (out / "summary.txt").write_text(text)
    print(text, end="")


if __name__ == "__main__":
    main()
