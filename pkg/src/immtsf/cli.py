"""Command-line interface.

Subcommands: profile (irregularity metrics table), prealign (aligned
windows as JSON Lines), train / evaluate (run-summary JSON plus
checkpoints), compare (unimodal vs multimodal test MSE), synth
(generate the synthetic datasets).

Exit codes: 0 success, 1 bad input (including unknown flags), 2 internal
failure. Outputs are byte-identical across reruns at the same seed; the
IMMTSF_SEED environment variable supplies the seed when --seed is absent.
"""

from __future__ import annotations

import argparse
import csv
import itertools
import json
import os
import sys

from .align import CanonicalAligner
from .estimator import MultimodalForecaster
from .exceptions import ImmtsfError, InputError, TrainingError
from .io import (
    DatasetManifest,
    load_dataset,
    load_manifest,
    load_pipeline,
    save_numeric,
    save_pipeline,
    save_text,
)
from .mmf import MMF_VARIANTS
from .model import evaluate_windows
from .profiling import format_profile_table, profile_dataset, profile_row, PROFILE_COLUMNS
from .series import SplitAssignment
from .synth import KINDS, SynthSpec, generate
from .ttf import TTF_VARIANTS
from .windows import extract_windows, split_dataset


class _Parser(argparse.ArgumentParser):
    """argparse that exits 1 on usage errors instead of 2."""

    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(1)


def _build_parser() -> _Parser:
    parser = _Parser(prog="immtsf", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, manifest=True):
        if manifest:
            p.add_argument("--manifest", required=True, help="manifest JSON path")
            p.add_argument("--dataset", help="dataset name within the manifest")
        p.add_argument("--seed", type=int, default=None)

    p = sub.add_parser("profile", help="irregularity metrics per dataset")
    common(p)
    p.add_argument("--unit", default=None, help="interval unit (overrides manifest)")
    p.add_argument("--bins", type=int, default=10)
    p.add_argument("--out", help="also write the table as CSV")

    p = sub.add_parser("prealign", help="write aligned windows as JSON Lines")
    common(p)
    p.add_argument("--out", required=True)

    p = sub.add_parser("train", help="train multimodal + unimodal reference")
    common(p)
    p.add_argument("--out", required=True, help="output directory")
    _model_flags(p)

    p = sub.add_parser("evaluate", help="re-evaluate checkpoints on the test split")
    common(p)
    p.add_argument("--run", required=True, help="directory written by train")

    p = sub.add_parser("compare", help="unimodal vs multimodal test MSE")
    common(p)
    p.add_argument("--out", help="write the comparison JSON here")
    _model_flags(p)
    p.add_argument(
        "--no-sweep",
        action="store_true",
        help="train only the configured variant pair instead of selecting by validation",
    )

    p = sub.add_parser("synth", help="generate a synthetic dataset")
    common(p, manifest=False)
    p.add_argument("--kind", choices=KINDS, required=True)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--entities", type=int, default=4)
    p.add_argument("--variables", type=int, default=1)
    p.add_argument("--observations", type=int, default=120)
    p.add_argument("--noise-std", type=float, default=0.0)
    p.add_argument("--embed-dim", type=int, default=4)
    p.add_argument("--context-seconds", type=float, default=None)
    p.add_argument("--horizon-seconds", type=float, default=None)
    return parser


def _model_flags(p):
    p.add_argument("--variant-ttf", choices=TTF_VARIANTS, default=None)
    p.add_argument("--variant-mmf", choices=MMF_VARIANTS, default=None)
    p.add_argument("--sigma", type=float, default=1.0)
    p.add_argument("--kappa", type=float, default=0.5)
    p.add_argument("--hidden", type=int, default=16)
    p.add_argument("--time-dim", type=int, default=8)
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--batch-size", type=int, default=8)
    p.add_argument("--patience", type=int, default=5)
    p.add_argument("--max-epochs", type=int, default=200)


def _seed(args) -> int:
    if args.seed is not None:
        return args.seed
    env = os.environ.get("IMMTSF_SEED")
    return int(env) if env else 0


def _pick_dataset(manifests: list[DatasetManifest], name) -> DatasetManifest:
    if name is None:
        return manifests[0]
    for m in manifests:
        if m.name == name:
            return m
    raise InputError(
        f"dataset {name!r} not in manifest (has {[m.name for m in manifests]})"
    )


def _windows_and_splits(manifest: DatasetManifest):
    pairs = load_dataset(manifest)
    per_entity = [extract_windows(s, t, manifest.window) for s, t in pairs]
    per_entity = [w for w in per_entity if w]
    if not per_entity:
        raise InputError(f"{manifest.name}: no forecast windows could be extracted")
    all_windows = [w for ws in per_entity for w in ws]
    return all_windows, split_dataset(per_entity)


def _dump_json(doc, path=None) -> str:
    text = json.dumps(doc, sort_keys=True, indent=2) + "\n"
    if path:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    return text


# ---------------------------------------------------------------------------
# Subcommands


def _cmd_profile(args) -> int:
    manifests = load_manifest(args.manifest)
    if args.dataset is not None:
        manifests = [_pick_dataset(manifests, args.dataset)]
    profiles = []
    for m in manifests:
        pairs = load_dataset(m)
        profiles.append(
            profile_dataset(pairs, unit=args.unit or m.unit, bins=args.bins, name=m.name)
        )
    print(format_profile_table(profiles))
    for p in profiles:
        for w in p.warnings:
            print(f"warning [{p.name}]: {w}", file=sys.stderr)
    if args.out:
        with open(args.out, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(PROFILE_COLUMNS)
            for p in profiles:
                writer.writerow(
                    [repr(v) if isinstance(v, float) else v for v in profile_row(p)]
                )
    return 0


def _cmd_prealign(args) -> int:
    manifest = _pick_dataset(load_manifest(args.manifest), args.dataset)
    windows, _ = _windows_and_splits(manifest)
    aligner = CanonicalAligner().fit(windows)
    with open(args.out, "w", encoding="utf-8") as fh:
        for aligned in aligner.transform(windows):
            fh.write(
                json.dumps(
                    {
                        "t": [float(x) for x in aligned.grid_timestamps],
                        "values": [[float(x) for x in row] for row in aligned.values],
                        "mask": [[int(x) for x in row] for row in aligned.mask],
                        "query": [int(x) for x in aligned.query_flags],
                    },
                    sort_keys=True,
                )
                + "\n"
            )
    print(f"wrote {len(windows)} aligned windows (L={aligner.resolution_}) to {args.out}")
    return 0


def _fit_estimator(splits: SplitAssignment, resolution, seed, args, use_text, ttf, mmf):
    est = MultimodalForecaster(
        ttf_variant=ttf,
        mmf_variant=mmf,
        sigma=args.sigma,
        kappa=args.kappa,
        hidden=args.hidden,
        time_dim=args.time_dim,
        use_text=use_text,
        learning_rate=args.lr,
        batch_size=args.batch_size,
        patience=args.patience,
        max_epochs=args.max_epochs,
        resolution=resolution,
        seed=seed,
    )
    est.fit(list(splits.train), validation=list(splits.validation))
    return est


def _summary(manifest, variant, seed, est_multi, est_uni, splits) -> dict:
    test = list(splits.test)
    test_mse = est_multi.evaluate(test)
    test_mse_unimodal = est_uni.evaluate(test)
    improvement = (
        100.0 * (test_mse_unimodal - test_mse) / test_mse_unimodal
        if test_mse_unimodal > 0
        else 0.0
    )
    return {
        "dataset": manifest.name,
        "variant": variant,
        "seed": seed,
        "epochs_run": est_multi.history_.epochs_run,
        "best_val_mse": est_multi.history_.best_val_mse,
        "test_mse": test_mse,
        "test_mse_unimodal": test_mse_unimodal,
        "relative_improvement_pct": improvement,
    }


def _cmd_train(args) -> int:
    manifest = _pick_dataset(load_manifest(args.manifest), args.dataset)
    seed = _seed(args)
    all_windows, splits = _windows_and_splits(manifest)
    resolution = CanonicalAligner().fit(all_windows).resolution_
    ttf = args.variant_ttf or "recavg"
    mmf = args.variant_mmf or "gr_add"

    est_multi = _fit_estimator(splits, resolution, seed, args, True, ttf, mmf)
    est_uni = _fit_estimator(splits, resolution, seed, args, False, ttf, mmf)

    os.makedirs(args.out, exist_ok=True)
    save_pipeline(est_multi.pipeline_, os.path.join(args.out, "checkpoint_multimodal.json"))
    save_pipeline(est_uni.pipeline_, os.path.join(args.out, "checkpoint_unimodal.json"))
    summary = _summary(manifest, f"{ttf}+{mmf}", seed, est_multi, est_uni, splits)
    text = _dump_json(summary, os.path.join(args.out, "summary.json"))
    sys.stdout.write(text)
    return 0


def _cmd_evaluate(args) -> int:
    manifest = _pick_dataset(load_manifest(args.manifest), args.dataset)
    _, splits = _windows_and_splits(manifest)
    multi = load_pipeline(os.path.join(args.run, "checkpoint_multimodal.json"))
    uni = load_pipeline(os.path.join(args.run, "checkpoint_unimodal.json"))

    stored = {}
    summary_path = os.path.join(args.run, "summary.json")
    if os.path.exists(summary_path):
        with open(summary_path, encoding="utf-8") as fh:
            stored = json.load(fh)

    test = list(splits.test)
    test_mse = evaluate_windows(test, multi)
    test_mse_unimodal = evaluate_windows(test, uni)
    improvement = (
        100.0 * (test_mse_unimodal - test_mse) / test_mse_unimodal
        if test_mse_unimodal > 0
        else 0.0
    )
    summary = {
        "dataset": manifest.name,
        "variant": stored.get(
            "variant", f"{multi.ttf_config.variant}+{multi.mmf_config.variant}"
        ),
        "seed": stored.get("seed", _seed(args)),
        "epochs_run": stored.get("epochs_run"),
        "best_val_mse": stored.get("best_val_mse"),
        "test_mse": test_mse,
        "test_mse_unimodal": test_mse_unimodal,
        "relative_improvement_pct": improvement,
    }
    sys.stdout.write(_dump_json(summary))
    return 0


def _cmd_compare(args) -> int:
    manifest = _pick_dataset(load_manifest(args.manifest), args.dataset)
    seed = _seed(args)
    all_windows, splits = _windows_and_splits(manifest)
    resolution = CanonicalAligner().fit(all_windows).resolution_

    ttf_grid = [args.variant_ttf] if args.variant_ttf else list(TTF_VARIANTS)
    mmf_grid = [args.variant_mmf] if args.variant_mmf else list(MMF_VARIANTS)
    if args.no_sweep:
        ttf_grid, mmf_grid = [ttf_grid[0]], [mmf_grid[0]]

    best = None
    for ttf, mmf in itertools.product(ttf_grid, mmf_grid):
        est = _fit_estimator(splits, resolution, seed, args, True, ttf, mmf)
        if best is None or est.history_.best_val_mse < best[0].history_.best_val_mse:
            best = (est, ttf, mmf)
    est_multi, ttf, mmf = best
    est_uni = _fit_estimator(splits, resolution, seed, args, False, ttf, mmf)

    summary = _summary(manifest, f"{ttf}+{mmf}", seed, est_multi, est_uni, splits)
    rows = [
        ("model", "test_mse"),
        ("unimodal", f"{summary['test_mse_unimodal']:.6f}"),
        (f"multimodal ({summary['variant']})", f"{summary['test_mse']:.6f}"),
        ("relative_improvement_pct", f"{summary['relative_improvement_pct']:.2f}"),
    ]
    width = max(len(r[0]) for r in rows)
    for name, value in rows:
        print(f"{name.ljust(width)}  {value}")
    text = _dump_json(summary, args.out)
    if args.out:
        print(f"wrote {args.out}")
    else:
        sys.stdout.write(text)
    return 0


def _cmd_synth(args) -> int:
    spec_kwargs = dict(
        kind=args.kind,
        n_entities=args.entities,
        n_variables=args.variables,
        n_observations=args.observations,
        noise_std=args.noise_std,
        embed_dim=args.embed_dim,
        seed=_seed(args),
    )
    if args.context_seconds is not None:
        spec_kwargs["context_duration"] = args.context_seconds
    if args.horizon_seconds is not None:
        spec_kwargs["horizon_duration"] = args.horizon_seconds
    spec = SynthSpec(**spec_kwargs)
    series, texts, truth = generate(spec)

    os.makedirs(args.out, exist_ok=True)
    save_numeric(series, os.path.join(args.out, "numeric.csv"))
    save_text(texts, os.path.join(args.out, "text.jsonl"))
    _dump_json(truth, os.path.join(args.out, "truth.json"))
    _dump_json(
        {
            "name": f"synth-{spec.kind}",
            "numeric": "numeric.csv",
            "text": "text.jsonl",
            "unit": "days",
            "context_duration": spec.context_duration,
            "horizon_duration": spec.horizon_duration,
            "embed_dim": spec.embed_dim,
        },
        os.path.join(args.out, "manifest.json"),
    )
    print(f"wrote synthetic dataset ({spec.kind}) to {args.out}")
    return 0


_COMMANDS = {
    "profile": _cmd_profile,
    "prealign": _cmd_prealign,
    "train": _cmd_train,
    "evaluate": _cmd_evaluate,
    "compare": _cmd_compare,
    "synth": _cmd_synth,
}


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return _COMMANDS[args.command](args)
    except TrainingError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ImmtsfError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # pragma: no cover - safety net
        print(f"internal error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
