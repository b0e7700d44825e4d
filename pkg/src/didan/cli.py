"""Command line interface: train / eval / ablate / synth / score / cca.

Machine output goes to stdout or files; diagnostics to stderr. Exit
codes: 0 success, 1 usage error, 2 data/format error, 3 numerical
failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from . import cca as cca_mod
from . import evaluate as ev
from . import trainer as tr
from .checkpoint import load_checkpoint
from .data import Label, load_manifest
from .errors import FormatError, NumericalError, SchemaError
from .model import DidanParams, forward_article
from .synth import SynthConfig, bayes_oracle_accuracy, generate_synthetic_dataset


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _limit_threads() -> None:
    cap = os.environ.get("DIDAN_THREADS")
    if not cap:
        return
    try:
        from threadpoolctl import threadpool_limits

        threadpool_limits(int(cap))
    except (ImportError, ValueError):
        pass


def _read_json(path: str) -> dict:
    p = Path(path)
    if not p.exists():
        raise SchemaError(f"config file not found: {p}")
    try:
        with open(p, "r", encoding="utf-8") as f:
            return json.load(f)
    except json.JSONDecodeError as e:
        raise SchemaError(f"{p}: invalid JSON: {e}") from e


def _echo_config(obj: dict, out: Path | None) -> None:
    text = json.dumps(obj, sort_keys=True, indent=2) + "\n"
    if out is None:
        sys.stderr.write(text)
        return
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", encoding="utf-8") as f:
        f.write(text)


def _load_params(path: str) -> DidanParams:
    p = Path(path)
    if not p.exists():
        raise SchemaError(f"checkpoint not found: {p}")
    return DidanParams.from_tensors(load_checkpoint(p))


def _cmd_synth(args) -> int:
    cfg = SynthConfig.from_dict(_read_json(args.config))
    if args.seed is not None:
        cfg = SynthConfig.from_dict({**cfg.to_dict(), "seed": args.seed})
    out = Path(args.out)
    manifests = generate_synthetic_dataset(cfg, out)
    _echo_config(cfg.to_dict(), out / "config_resolved.json")
    if args.oracle:
        acc = bayes_oracle_accuracy(cfg)
        print(json.dumps({"bayes_oracle_accuracy": acc}, sort_keys=True))
    else:
        print(json.dumps({k: str(v) for k, v in manifests.items()}, sort_keys=True))
    return 0


def _cmd_train(args) -> int:
    cfg = tr.TrainConfig.from_dict(_read_json(args.config))
    manifest = load_manifest(args.manifest)
    val = load_manifest(args.val_manifest) if args.val_manifest else None
    out = Path(args.out)
    _echo_config(tr.resolved_config(cfg), out / "config_resolved.json")
    _, metrics = tr.train(manifest, cfg, out_dir=out, val_manifest=val)
    print(json.dumps(metrics[-1], sort_keys=True))
    return 0


def _cmd_eval(args) -> int:
    params = _load_params(args.checkpoint)
    manifest = load_manifest(args.manifest)
    report = ev.evaluate_accuracy(
        params, manifest, modality_ablation=args.ablation, use_nei=not args.no_nei
    )
    resolved = {
        "checkpoint": args.checkpoint,
        "manifest": args.manifest,
        "ablation": args.ablation,
        "use_nei": not args.no_nei,
    }
    text = json.dumps(report.to_dict(), sort_keys=True, indent=2) + "\n"
    if args.out:
        outp = Path(args.out)
        outp.parent.mkdir(parents=True, exist_ok=True)
        outp.write_text(text, encoding="utf-8")
        _echo_config(resolved, outp.with_suffix(outp.suffix + ".config.json"))
    else:
        _echo_config(resolved, None)
        sys.stdout.write(text)
    return 0


def _cmd_score(args) -> int:
    params = _load_params(args.checkpoint)
    manifest = load_manifest(args.manifest)
    sink = open(args.out, "w", encoding="utf-8") if args.out else sys.stdout
    try:
        for i in range(len(manifest.records)):
            rec = manifest.load_record(i)
            trace = forward_article(
                rec, params, mode="eval", use_nei=not args.no_nei, ablation=args.ablation
            )
            line = {
                "article_id": trace.article_id,
                "label": int(rec.label == Label.REAL),
                "p_a": trace.authenticity,
                "pairs": [
                    {"pair_id": p.pair_id, "p_pair": p.score, "b_c": p.indicator}
                    for p in trace.pairs
                ],
            }
            sink.write(json.dumps(line, sort_keys=True) + "\n")
    finally:
        if args.out:
            sink.close()
    return 0


def _cmd_ablate(args) -> int:
    matrix = _read_json(args.matrix)
    extra = set(matrix) - {"synth", "train", "cells", "with_cca", "with_oracle",
                           "cca_rank", "cca_ridge"}
    if extra:
        raise SchemaError(f"unknown ablation matrix keys: {sorted(extra)}")
    synth_cfg = SynthConfig.from_dict(matrix.get("synth", {}))
    base = tr.TrainConfig.from_dict(matrix.get("train", {}))
    cells = [ev.AblationCell.from_dict(c) for c in matrix.get("cells", [])]
    if not cells:
        raise SchemaError("ablation matrix declares no cells")
    out = Path(args.out)
    _echo_config(matrix, out / "config_resolved.json")
    report = ev.run_ablation(
        synth_cfg,
        base,
        cells,
        out,
        with_oracle=matrix.get("with_oracle", True),
        with_cca=matrix.get("with_cca", False),
        cca_rank=matrix.get("cca_rank", 8),
        cca_ridge=matrix.get("cca_ridge", 1e-3),
    )
    summary = {c["name"]: c["test"]["accuracy"] for c in report["cells"]}
    print(json.dumps(summary, sort_keys=True))
    return 0


def _cmd_cca_fit(args) -> int:
    manifest = load_manifest(args.manifest)
    model = cca_mod.fit_cca_records(manifest.load_all(), args.rank, args.ridge)
    if args.val_manifest:
        val = load_manifest(args.val_manifest)
        tau, acc = cca_mod.calibrate_threshold(model, val.load_all())
        model.tau = tau
        sys.stderr.write(f"calibrated tau={tau:.6g} (val accuracy {acc:.4f})\n")
    outp = Path(args.out)
    outp.parent.mkdir(parents=True, exist_ok=True)
    model.save(outp)
    _echo_config(
        {
            "manifest": args.manifest,
            "val_manifest": args.val_manifest,
            "rank": args.rank,
            "ridge": args.ridge,
        },
        outp.with_suffix(outp.suffix + ".config.json"),
    )
    print(json.dumps({"model": str(outp), "tau": model.tau}, sort_keys=True))
    return 0


def _cmd_cca_eval(args) -> int:
    p = Path(args.model)
    if not p.exists():
        raise SchemaError(f"model not found: {p}")
    model = cca_mod.CcaModel.load(p)
    manifest = load_manifest(args.manifest)
    report = ev.evaluate_cca(model, manifest)
    sys.stdout.write(json.dumps(report.to_dict(), sort_keys=True, indent=2) + "\n")
    return 0


def build_parser() -> _Parser:
    parser = _Parser(prog="didan", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic dataset")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--oracle", action="store_true", help="also print the Bayes ceiling")
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("train", help="train DIDAN on a manifest")
    p.add_argument("--manifest", required=True)
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--val-manifest", default=None)
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("eval", help="accuracy of a checkpoint on a manifest")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--manifest", required=True)
    p.add_argument("--ablation", default="full")
    p.add_argument("--no-nei", action="store_true")
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("score", help="per-article and per-pair score dump")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--manifest", required=True)
    p.add_argument("--ablation", default="full")
    p.add_argument("--no-nei", action="store_true")
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_score)

    p = sub.add_parser("ablate", help="run an ablation matrix end to end")
    p.add_argument("--matrix", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_ablate)

    p = sub.add_parser("cca", help="CCA baseline")
    csub = p.add_subparsers(dest="cca_command", required=True)
    pf = csub.add_parser("fit")
    pf.add_argument("--manifest", required=True)
    pf.add_argument("--val-manifest", default=None)
    pf.add_argument("--out", required=True)
    pf.add_argument("--rank", type=int, default=64)
    pf.add_argument("--ridge", type=float, default=1e-3)
    pf.set_defaults(func=_cmd_cca_fit)
    pe = csub.add_parser("eval")
    pe.add_argument("--model", required=True)
    pe.add_argument("--manifest", required=True)
    pe.set_defaults(func=_cmd_cca_eval)

    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.INFO, stream=sys.stderr, format="%(message)s")
    _limit_threads()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as e:
        sys.stderr.write(f"usage error: {e}\n")
        return 1
    except (SchemaError, FormatError, FileNotFoundError) as e:
        sys.stderr.write(f"data error: {e}\n")
        return 2
    except NumericalError as e:
        sys.stderr.write(f"numerical failure: {e}\n")
        return 3


if __name__ == "__main__":
    sys.exit(main())
