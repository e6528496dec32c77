"""Command-line entry point: train, sweep, theory, ttest, aggregate."""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np


def _cmd_train(args):
    from .runner import load_config, run

    config = load_config(args.config)
    if args.seed is not None:
        config.seed = args.seed
    record = run(config, output_dir=args.out)
    out = Path(args.out or config.output_dir)
    print(f"{record.run_id}: {len(record.rows)} epochs, "
          f"final train_acc {record.final_train_acc}, val_acc {record.final_val_acc}")
    print(f"wrote {out / 'metrics.csv'} and {out / 'runrecord.json'}")
    return 0


def _cmd_sweep(args):
    from .runner import load_config, sweep_grad_rate

    config = load_config(args.config)
    with open(args.grid) as fh:
        grid = json.load(fh)
    seeds = grid.get("seeds", list(range(5)))
    out_path = args.out or str(Path(config.output_dir) / "sweep.csv")
    rows = sweep_grad_rate(
        {"n_samples": grid["n_samples"], "hidden_width": grid["hidden_width"]},
        seeds, config, out_path,
    )
    print(f"wrote {len(rows)} rows to {out_path}")
    return 0


def _write_csv(path, columns, rows):
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(columns)
        writer.writerows(rows)


def _theory_epsilon_n(args, out_dir):
    from .theory import GaussianPairSource, interference_sweep

    source = GaussianPairSource(dim=args.dim, separation=args.separation,
                                sigma=args.sigma, direction_seed=0)
    n_values = [2**k for k in range(6, 15)]
    result = interference_sweep(source, n_values, seeds=range(args.seeds))
    _write_csv(out_dir / "epsilon_n.csv", ["n", "seed", "epsilon_n"],
               [(n, s, repr(e)) for n, s, e in result.points])
    summary = {"mode": "epsilon_n", "fitted_slope": result.fitted_slope,
               "n_values": n_values, "seeds": args.seeds,
               "separation": args.separation, "sigma": args.sigma, "dim": args.dim}
    return summary, f"fitted log-log slope: {result.fitted_slope:.4f}"


def _theory_fluctuation(args, out_dir):
    from .theory import relative_fluctuation

    rows = []
    for d in (64, 256, 1024, 4096, 16384):
        rows.append((d, repr(relative_fluctuation(args.sigma, np.sqrt(d)))))
    _write_csv(out_dir / "fluctuation.csv", ["param_count", "relative_fluctuation"], rows)
    rng = np.random.default_rng(0)
    g = rng.standard_normal(128)
    delta = args.sigma * rng.standard_normal((100_000, 128))
    mc_var = float((delta @ g).var())
    expected = args.sigma**2 * float(g @ g)
    summary = {"mode": "fluctuation", "mc_projection_variance": mc_var,
               "expected_variance": expected, "ratio": mc_var / expected}
    return summary, f"Var(g.delta)/(sigma^2 ||g||^2) = {mc_var / expected:.4f}"


def _theory_equivalence(args, out_dir):
    from .theory import equivalence_lambda, loss_at_lambda

    rng = np.random.default_rng(0)
    rows = []
    worst = 0.0
    for _ in range(200):
        f_loss = rng.uniform(-20, 20)
        m = rng.uniform(1e3, 1e6)
        sol = equivalence_lambda(f_loss, m, -m)
        recovered = sol.lambda_star * m + (1 - sol.lambda_star) * (-m)
        worst = max(worst, abs(recovered - f_loss))
        rows.append((repr(f_loss), repr(m), repr(sol.lambda_star), repr(recovered),
                     repr(loss_at_lambda(sol.lambda_star, m, 1))))
    _write_csv(out_dir / "equivalence.csv",
               ["f_loss", "M", "lambda_star", "recovered_f", "loss_y1"], rows)
    summary = {"mode": "equivalence", "max_recovery_error": worst, "cases": len(rows)}
    return summary, f"max score recovery error: {worst:.3e}"


def _theory_benr3(args, out_dir):
    from .theory import benr_theoretical

    rng = np.random.default_rng(0)
    rows = []
    wins = 0
    ortho = benr_theoretical([1, 0, 0], [0, 1, 0], [0, 0, 1])
    rows.append(("orthonormal", repr(ortho["benr_vanilla"]), repr(ortho["benr_mix"])))
    for k in range(200):
        x1, x2, x3 = rng.standard_normal((3, 1024))
        x2 *= np.linalg.norm(x1) / np.linalg.norm(x2)
        x3 *= np.linalg.norm(x1) / np.linalg.norm(x3)
        out = benr_theoretical(x1, x2, x3)
        wins += out["benr_vanilla"] > out["benr_mix"]
        rows.append((f"random-{k}", repr(out["benr_vanilla"]), repr(out["benr_mix"])))
    _write_csv(out_dir / "benr3.csv", ["trial", "benr_vanilla", "benr_mix"], rows)
    summary = {"mode": "benr3", "vanilla_gt_mix_fraction": wins / 200,
               "orthonormal": ortho}
    return summary, f"plain > mixed ratio in {wins}/200 random triples"


def _cmd_theory(args):
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    handler = {
        "epsilon_n": _theory_epsilon_n,
        "fluctuation": _theory_fluctuation,
        "equivalence": _theory_equivalence,
        "benr3": _theory_benr3,
    }[args.mode]
    summary, message = handler(args, out_dir)
    with open(out_dir / f"{args.mode}_summary.json", "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
    print(message)
    return 0


def _read_column(spec):
    path, _, column = spec.rpartition(":")
    if not path:
        raise ValueError(f"expected FILE:COLUMN, got {spec!r}")
    values = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if column not in (reader.fieldnames or []):
            raise ValueError(f"{path} has no column {column!r}")
        for rec in reader:
            if rec[column] != "":
                values.append(float(rec[column]))
    if not values:
        raise ValueError(f"{path}:{column} holds no values")
    return values


def _cmd_ttest(args):
    from .stats import welch_t_one_tailed

    result = welch_t_one_tailed(_read_column(args.a), _read_column(args.b))
    print(json.dumps(result, sort_keys=True))
    return 0


def _cmd_aggregate(args):
    from .runner import aggregate, load_record

    records = [load_record(p) for p in sorted(Path(args.dir).rglob("runrecord.json"))]
    if not records:
        raise ValueError(f"no runrecord.json files under {args.dir}")
    rows = aggregate(records, baseline=args.baseline)
    columns = list(rows[0].keys())
    if args.out:
        _write_csv(args.out, columns,
                   [[("" if r[c] is None else r[c]) for c in columns] for r in rows])
    width = max(len(r["name"]) for r in rows)
    for r in rows:
        extra = ""
        if "delta" in r:
            p = "n/a" if r["p_value"] is None else f"{r['p_value']:.4g}"
            extra = f"  delta {r['delta']:+.4f}  p {p}"
        var = "n/a" if r["variance"] is None else f"{r['variance']:.3e}"
        print(f"{r['name']:<{width}}  mean {r['mean']:.4f}  var {var}  "
              f"runs {r['runs']}{extra}")
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="mixphase",
        description="Seeded training runs, interference sweeps and analytic "
                    "oracles for early-phase mixup scheduling.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="run one config")
    p.add_argument("--config", required=True)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("sweep", help="grad-rate grid sweep")
    p.add_argument("--config", required=True)
    p.add_argument("--grid", required=True)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("theory", help="closed-form oracle outputs")
    p.add_argument("--mode", required=True,
                   choices=["epsilon_n", "fluctuation", "equivalence", "benr3"])
    p.add_argument("--out", required=True)
    p.add_argument("--seeds", type=int, default=20)
    p.add_argument("--dim", type=int, default=64)
    p.add_argument("--separation", type=float, default=2.0)
    p.add_argument("--sigma", type=float, default=1.0)
    p.set_defaults(func=_cmd_theory)

    p = sub.add_parser("ttest", help="one-tailed Welch test on CSV columns")
    p.add_argument("--a", required=True, metavar="FILE:COLUMN")
    p.add_argument("--b", required=True, metavar="FILE:COLUMN")
    p.set_defaults(func=_cmd_ttest)

    p = sub.add_parser("aggregate", help="summarize run records")
    p.add_argument("--dir", required=True)
    p.add_argument("--baseline", default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_aggregate)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except Exception as exc:  # structured error report, nonzero exit
        report = {"error": type(exc).__name__, "message": str(exc)}
        print(json.dumps(report), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
