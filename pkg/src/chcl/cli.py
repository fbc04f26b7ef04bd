"""Command-line entry point.

Subcommands: ``signature`` (emit signature CSV), ``pretrain`` (train and
write checkpoint + loss trace), ``probe`` (evaluate a checkpoint or raw
signatures), ``sweep`` (robustness protocol), ``ablate`` (full vs ablation
comparison table), ``synth`` (write a generated benchmark dataset).

Configuration precedence is flags > config file > defaults, and every
subcommand writes a ``manifest.json`` recording the fully resolved
configuration and seeds so a run can be replayed exactly.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import asdict
from pathlib import Path

from . import __version__
from .eval import (
    ablation_probe_table,
    embed_dataset,
    linear_probe,
    robustness_sweep,
    synthetic_dataset,
    write_probe_csv,
    write_sweep_csv,
)
from .graphs import GraphDataset, load_edge_list, load_tu, save_edge_list
from .model import load_checkpoint, save_checkpoint
from .signature import compute_signatures, write_signature_csv
from .training import TrainConfig, parse_config_file, pretrain, write_loss_trace

__all__ = ["run", "main"]


def _default_workers() -> int:
    env = os.environ.get("CHCL_WORKERS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def _load_dataset(path: str, tu: bool) -> GraphDataset:
    p = Path(path)
    if not p.exists():
        raise FileNotFoundError(f"dataset not found: {path}")
    return load_tu(p) if tu else load_edge_list(p)


def _write_manifest(out_dir: Path, subcommand: str, argv: list[str], resolved: dict, outputs: list[str]) -> None:
    payload = {
        "tool": "chcl",
        "version": __version__,
        "subcommand": subcommand,
        "argv": argv,
        "resolved_config": resolved,
        "outputs": sorted(outputs),
    }
    (out_dir / "manifest.json").write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _out_dir(path_str: str) -> Path:
    out = Path(path_str)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _resolve_train_config(args: argparse.Namespace) -> TrainConfig:
    mapping: dict[str, str] = {}
    if getattr(args, "config", None):
        cfg_path = Path(args.config)
        if not cfg_path.exists():
            raise FileNotFoundError(f"config file not found: {args.config}")
        mapping.update(parse_config_file(cfg_path))
    for key in (
        "tau",
        "lambda_geo",
        "lambda_ch",
        "p_edge",
        "p_feat",
        "epochs",
        "batch_size",
        "learning_rate",
        "seed",
        "ablation",
        "ntxent_denominator",
        "hidden_dim",
        "embed_dim",
        "num_layers",
        "dim_cheeger",
        "dim_hodge",
    ):
        val = getattr(args, key, None)
        if val is not None:
            mapping[key] = str(val)
    return TrainConfig.from_mapping(mapping)


def _add_train_flags(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--config", help="flat key = value config file")
    sub.add_argument("--tau", type=float)
    sub.add_argument("--lambda-geo", dest="lambda_geo", type=float)
    sub.add_argument("--lambda-ch", dest="lambda_ch", type=float)
    sub.add_argument("--p-edge", dest="p_edge", type=float)
    sub.add_argument("--p-feat", dest="p_feat", type=float)
    sub.add_argument("--epochs", type=int)
    sub.add_argument("--batch-size", dest="batch_size", type=int)
    sub.add_argument("--learning-rate", dest="learning_rate", type=float)
    sub.add_argument("--seed", type=int)
    sub.add_argument("--ablation", choices=("full", "no_cheeger", "no_hodge", "no_ch"))
    sub.add_argument("--ntxent-denominator", dest="ntxent_denominator", choices=("standard", "paper_literal"))
    sub.add_argument("--hidden-dim", dest="hidden_dim", type=int)
    sub.add_argument("--embed-dim", dest="embed_dim", type=int)
    sub.add_argument("--num-layers", dest="num_layers", type=int)
    sub.add_argument("--dc", dest="dim_cheeger", type=int)
    sub.add_argument("--dh", dest="dim_hodge", type=int)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="chcl",
        description="Cheeger-Hodge structural signatures and contrastive pretraining",
    )
    parser.add_argument("--workers", type=int, default=None, help="worker pool size (default: CHCL_WORKERS or logical cores)")
    subs = parser.add_subparsers(dest="subcommand", required=True)

    p_sig = subs.add_parser("signature", help="emit a signature CSV for a dataset")
    p_sig.add_argument("--data", required=True)
    p_sig.add_argument("--tu", action="store_true", help="dataset is a TU-layout directory")
    p_sig.add_argument("--dc", type=int, default=8)
    p_sig.add_argument("--dh", type=int, default=14)
    p_sig.add_argument("--out", required=True, help="output CSV path")
    p_sig.add_argument(
        "--dump-incidence",
        dest="dump_incidence",
        help="also write per-graph B1/B2 coordinate-text files into this directory",
    )

    p_pre = subs.add_parser("pretrain", help="pretrain and write checkpoint + loss trace")
    p_pre.add_argument("--data", required=True)
    p_pre.add_argument("--tu", action="store_true")
    p_pre.add_argument("--out", required=True, help="output directory")
    _add_train_flags(p_pre)

    p_probe = subs.add_parser("probe", help="linear-probe a checkpoint or raw signatures")
    p_probe.add_argument("--data", required=True)
    p_probe.add_argument("--tu", action="store_true")
    p_probe.add_argument("--checkpoint")
    p_probe.add_argument("--source", choices=("signature", "geo", "ch", "concat"), default="signature")
    p_probe.add_argument("--folds", type=int, default=5)
    p_probe.add_argument("--seed", type=int, default=0)
    p_probe.add_argument("--dc", type=int, default=8)
    p_probe.add_argument("--dh", type=int, default=14)
    p_probe.add_argument("--out", required=True, help="output directory")

    p_sweep = subs.add_parser("sweep", help="robustness sweep over perturbation strengths")
    p_sweep.add_argument("--data", required=True)
    p_sweep.add_argument("--tu", action="store_true")
    p_sweep.add_argument("--checkpoint", required=True)
    p_sweep.add_argument("--kind", choices=("edge_drop", "feature_mask", "both"), default="both")
    p_sweep.add_argument("--levels", default="0.05:0.50:0.05", help="comma list or start:stop:step")
    p_sweep.add_argument("--seeds", type=int, default=3, help="evaluation seeds per level")
    p_sweep.add_argument("--seed", type=int, default=0)
    p_sweep.add_argument("--source", choices=("signature", "geo", "ch", "concat"), default="concat")
    p_sweep.add_argument("--folds", type=int, default=5)
    p_sweep.add_argument("--out", required=True, help="output directory")

    p_abl = subs.add_parser("ablate", help="compare full model against ablation variants")
    p_abl.add_argument("--data", required=True)
    p_abl.add_argument("--tu", action="store_true")
    p_abl.add_argument("--seeds", type=int, default=5, help="number of paired seeds")
    p_abl.add_argument("--folds", type=int, default=5)
    p_abl.add_argument("--out", required=True, help="output directory")
    _add_train_flags(p_abl)

    p_synth = subs.add_parser("synth", help="generate the 4-class synthetic benchmark")
    p_synth.add_argument("--per-class", dest="per_class", type=int, default=40)
    p_synth.add_argument("--seed", type=int, default=0)
    p_synth.add_argument("--out", required=True, help="output edge-list file")

    return parser


def _parse_levels(spec: str) -> list[float]:
    if ":" in spec:
        start, stop, step = (float(x) for x in spec.split(":"))
        out = []
        lv = start
        while lv <= stop + 1e-12:
            out.append(round(lv, 10))
            lv += step
        return out
    return [float(x) for x in spec.split(",")]


def _cmd_signature(args, argv: list[str], workers: int) -> int:
    dataset = _load_dataset(args.data, args.tu)
    sigs = compute_signatures(dataset, args.dc, args.dh, workers=workers)
    out_path = Path(args.out)
    out_dir = _out_dir(str(out_path.parent) or ".")
    write_signature_csv(sigs, out_path, args.dc, args.dh)
    outputs = [out_path.name]
    if args.dump_incidence:
        from .hodge import HodgeComplex, incidence_coo_text

        dump_dir = _out_dir(args.dump_incidence)
        for gid, g in enumerate(dataset):
            cx = HodgeComplex.from_graph(g)
            (dump_dir / f"b1_{gid}.txt").write_text(incidence_coo_text(cx.b1))
            (dump_dir / f"b2_{gid}.txt").write_text(incidence_coo_text(cx.b2))
        outputs.append(args.dump_incidence)
    _write_manifest(
        out_dir,
        "signature",
        argv,
        {
            "data": args.data,
            "tu": args.tu,
            "dc": args.dc,
            "dh": args.dh,
            "workers": workers,
            "dump_incidence": args.dump_incidence,
        },
        outputs,
    )
    print(f"wrote {len(sigs)} signatures to {out_path}")
    return 0


def _cmd_pretrain(args, argv: list[str]) -> int:
    dataset = _load_dataset(args.data, args.tu)
    cfg = _resolve_train_config(args)
    out = _out_dir(args.out)
    result = pretrain(dataset, cfg)
    ckpt = out / "checkpoint.txt"
    trace = out / "loss_trace.csv"
    save_checkpoint(result.params, ckpt)
    write_loss_trace(result.trace, trace)
    _write_manifest(out, "pretrain", argv, {"data": args.data, "tu": args.tu, **asdict(cfg)}, [ckpt.name, trace.name])
    last = result.trace[-1][1] if result.trace else float("nan")
    print(f"pretrained {cfg.epochs} epochs on {len(dataset)} graphs; final mean loss {last:.6f}")
    return 0


def _cmd_probe(args, argv: list[str]) -> int:
    dataset = _load_dataset(args.data, args.tu)
    if args.source != "signature" and not args.checkpoint:
        raise ValueError(f"--source {args.source} requires --checkpoint")
    out = _out_dir(args.out)
    if args.checkpoint:
        params = load_checkpoint(args.checkpoint)
        emb = embed_dataset(params, dataset, args.source)
    else:
        from .signature import signature_matrix

        emb = signature_matrix(dataset, args.dc, args.dh)
    probe = linear_probe(emb, dataset.labels(), k_folds=args.folds, seed=args.seed, source=args.source)
    report = out / "probe_report.csv"
    write_probe_csv([probe], report)
    _write_manifest(
        out,
        "probe",
        argv,
        {
            "data": args.data,
            "tu": args.tu,
            "checkpoint": args.checkpoint,
            "source": args.source,
            "folds": args.folds,
            "seed": args.seed,
            "dc": args.dc,
            "dh": args.dh,
        },
        [report.name],
    )
    print(f"probe accuracy ({args.source}): {probe.accuracy:.4f}")
    return 0


def _cmd_sweep(args, argv: list[str]) -> int:
    dataset = _load_dataset(args.data, args.tu)
    params = load_checkpoint(args.checkpoint)
    levels = _parse_levels(args.levels)
    kinds = ("edge_drop", "feature_mask") if args.kind == "both" else (args.kind,)
    out = _out_dir(args.out)
    results = [
        robustness_sweep(
            dataset,
            params,
            kind,
            levels,
            n_seeds=args.seeds,
            seed=args.seed,
            probe_folds=args.folds,
            probe_seed=args.seed,
            source=args.source,
        )
        for kind in kinds
    ]
    csv_path = out / "sweep.csv"
    write_sweep_csv(results, csv_path)
    _write_manifest(
        out,
        "sweep",
        argv,
        {
            "data": args.data,
            "tu": args.tu,
            "checkpoint": args.checkpoint,
            "kinds": list(kinds),
            "levels": levels,
            "seeds": args.seeds,
            "seed": args.seed,
            "source": args.source,
            "folds": args.folds,
        },
        [csv_path.name],
    )
    for res in results:
        print(f"{res.perturbation_kind}: accuracy {res.accuracy_per_level[0]:.4f} -> {res.accuracy_per_level[-1]:.4f}")
    return 0


def _cmd_ablate(args, argv: list[str]) -> int:
    dataset = _load_dataset(args.data, args.tu)
    cfg = _resolve_train_config(args)
    out = _out_dir(args.out)
    seeds = [cfg.seed + i for i in range(args.seeds)]
    rows = ablation_probe_table(dataset, cfg, seeds, probe_folds=args.folds, probe_seed=cfg.seed)
    csv_path = out / "ablate.csv"
    lines = ["variant,source,median_accuracy," + ",".join(f"seed_{s}" for s in seeds)]
    for row in rows:
        lines.append(
            f"{row['variant']},{row['source']},{row['median_accuracy']:.17g},"
            + ",".join(f"{a:.17g}" for a in row["accuracies"])
        )
    csv_path.write_text("\n".join(lines) + "\n")
    _write_manifest(
        out,
        "ablate",
        argv,
        {"data": args.data, "tu": args.tu, "seeds": seeds, "folds": args.folds, **asdict(cfg)},
        [csv_path.name],
    )
    for row in rows:
        print(f"{row['variant']:<12} median accuracy {row['median_accuracy']:.4f}")
    return 0


def _cmd_synth(args, argv: list[str]) -> int:
    dataset = synthetic_dataset(count_per_class=args.per_class, seed=args.seed)
    out_path = Path(args.out)
    out_dir = _out_dir(str(out_path.parent) or ".")
    save_edge_list(dataset, out_path)
    _write_manifest(
        out_dir,
        "synth",
        argv,
        {"per_class": args.per_class, "seed": args.seed},
        [out_path.name],
    )
    print(f"wrote {len(dataset)} graphs to {out_path}")
    return 0


def run(argv: list[str]) -> int:
    """Parse and dispatch; returns a process exit code."""
    parser = _build_parser()
    args = parser.parse_args(argv)
    workers = args.workers if args.workers is not None else _default_workers()
    try:
        if args.subcommand == "signature":
            return _cmd_signature(args, argv, workers)
        if args.subcommand == "pretrain":
            return _cmd_pretrain(args, argv)
        if args.subcommand == "probe":
            return _cmd_probe(args, argv)
        if args.subcommand == "sweep":
            return _cmd_sweep(args, argv)
        if args.subcommand == "ablate":
            return _cmd_ablate(args, argv)
        if args.subcommand == "synth":
            return _cmd_synth(args, argv)
        parser.error(f"unknown subcommand {args.subcommand!r}")
    except (ValueError, OSError, RuntimeError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


def main() -> None:
    sys.exit(run(sys.argv[1:]))
