"""Run the desk-scale comparison of RNNS, the random baseline and RNNS-Unlimited.

    python scripts/desk_experiment.py --seeds 0 1 2 --out desk.json
"""
import argparse
import json
import sys
from dataclasses import replace

from rnns.experiment import DeskConfig, format_outcomes, run


def main(argv=None):
    d = DeskConfig()
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--seeds", type=int, nargs="+", default=list(d.seeds))
    p.add_argument("--classes", type=int, default=d.n_classes)
    p.add_argument("--per-class", type=int, default=d.per_class)
    p.add_argument("--train-per-class", type=int, default=d.train_per_class)
    p.add_argument("--own-task-p", type=float, default=d.own_task_p)
    p.add_argument("--class-name-p", type=float, default=d.class_name_p)
    p.add_argument("--out", help="write per-seed summaries as JSON")
    args = p.parse_args(argv)
    cfg = replace(d, seeds=tuple(args.seeds), n_classes=args.classes, per_class=args.per_class,
                  train_per_class=args.train_per_class, own_task_p=args.own_task_p,
                  class_name_p=args.class_name_p)
    outcomes = run(cfg)
    print(format_outcomes(outcomes))
    if args.out:
        doc = [{"seed": o.seed, "clean_accuracy": o.clean_accuracy, "corpus_size": o.corpus_size,
                "seconds": o.seconds, "reports": {m: r.summary() for m, r in o.reports.items()}}
               for o in outcomes]
        with open(args.out, "w", encoding="utf-8") as fh:
            json.dump(doc, fh, indent=1, sort_keys=True)
            fh.write("\n")
    return 0


if __name__ == "__main__":
    sys.exit(main())
