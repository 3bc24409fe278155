"""Command-line entry point for batch decoding, evaluation, sweeps and demos.

Subcommands:
  decode           select a candidate per outcome space and write a report
  eval             compute CO / CORC for a method over a labelled corpus
  sweep            threshold sweep (cut-off or cosine) with train/val selection
  gen-synth        generate a synthetic labelled corpus
  demo-continuous  closed-form bimodal demonstration

Every command is deterministic given ``--seed``; runs that write outputs also
write a ``<out>.manifest.json`` with the resolved configuration and input
digests. Exit codes: 0 success, 1 data error, 2 usage/configuration error.
"""

from __future__ import annotations

import argparse
import datetime as _dt
import hashlib
import json
import math
import re as _re
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__, clustering, engine, metrics, tuning
from .corpus import Corpus, CorpusError, SynthConfig, generate_synthetic, load_corpus, save_corpus, split_corpus
from .methods import MethodConfig, apply_method
from .utility import (
    EmbeddingSet,
    MatrixFormatError,
    UtilityMatrix,
    build_utility_matrix,
    load_embeddings,
    load_matrix,
)


class UsageError(Exception):
    """Configuration problem the user must fix (exit code 2)."""


_UTILITY_NAMES = {"token-f1": "token_f1", "char-ngram-f": "char_ngram_f"}


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    with path.open("rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _digest_inputs(paths: dict[str, Path | None]) -> dict:
    out = {}
    for name, path in paths.items():
        if path is None:
            continue
        if path.is_dir():
            parts = sorted(p for p in path.iterdir() if p.is_file())
            h = hashlib.sha256()
            for p in parts:
                h.update(p.name.encode("utf-8"))
                h.update(bytes.fromhex(_sha256(p)))
            out[name] = {"path": str(path), "sha256": h.hexdigest(), "files": len(parts)}
        else:
            out[name] = {"path": str(path), "sha256": _sha256(path)}
    return out


def _write_manifest(out: Path, command: str, config: dict, inputs: dict, seed, started: str) -> None:
    manifest = {
        "command": command,
        "config": config,
        "inputs": inputs,
        "seed": seed,
        "version": __version__,
        "started": started,
        "finished": _dt.datetime.now(_dt.timezone.utc).isoformat(),
    }
    Path(str(out) + ".manifest.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True, default=str) + "\n", encoding="utf-8"
    )


def _now() -> str:
    return _dt.datetime.now(_dt.timezone.utc).isoformat()


def _parse_bool3(value: str) -> bool | None:
    if value == "auto":
        return None
    if value in ("true", "false"):
        return value == "true"
    raise argparse.ArgumentTypeError(f"expected auto/true/false, got {value!r}")


def _parse_floats(value: str, n: int | None = None, name: str = "value"):
    parts = [float(v) for v in value.split(",")]
    if n is not None and len(parts) != n:
        raise argparse.ArgumentTypeError(f"{name} expects {n} comma-separated numbers")
    return tuple(parts)


def _load_matrices(corpus: Corpus, args) -> dict[str, UtilityMatrix]:
    if args.matrix is not None:
        root = Path(args.matrix)
        if not root.is_dir():
            raise UsageError(f"--matrix {root} is not a directory")
        return {s.id: load_matrix(root / s.id) for s in corpus.spaces}
    backend = _UTILITY_NAMES[args.utility]
    params = {}
    if backend == "char_ngram_f":
        params = {"n": args.char_n, "beta": args.char_beta}
    return {s.id: build_utility_matrix(s, backend, **params) for s in corpus.spaces}


def _load_all_embeddings(corpus: Corpus, path: str | None) -> dict[str, EmbeddingSet] | None:
    if path is None:
        return None
    root = Path(path)
    if not root.is_dir():
        raise UsageError(f"--embeddings {root} is not a directory")
    return {s.id: load_embeddings(root / s.id, normalize=True) for s in corpus.spaces}


def _method_config(args) -> MethodConfig:
    return MethodConfig(
        method=args.method,
        exclude_self=args.exclude_self,
        tau=args.tau,
        delta="drop" if args.delta == "drop" else float(args.delta),
        cutoff_mode=args.cutoff_mode,
        cos_threshold=args.cos_threshold,
        clusters="gold" if args.gold_clusters else "kmeans",
        k_min=args.k_min,
        k_max=args.k_max,
        silhouette_floor=args.silhouette_floor,
        seed=args.seed,
    )


def _check_method_inputs(args) -> None:
    if args.method == "embed" and args.embeddings is None:
        raise UsageError("method 'embed' requires --embeddings")
    if args.method == "cluster" and args.embeddings is None and not args.gold_clusters:
        raise UsageError("method 'cluster' requires --embeddings or --gold-clusters")


def _add_method_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--method", choices=["standard", "cutoff", "cluster", "embed"], default="standard")
    p.add_argument("--utility", choices=sorted(_UTILITY_NAMES), default="token-f1")
    p.add_argument("--char-n", type=int, default=4, help="char n-gram max order")
    p.add_argument("--char-beta", type=float, default=1.0, help="char n-gram recall weight")
    p.add_argument("--matrix", help="directory of per-space .umat files (overrides --utility)")
    p.add_argument("--embeddings", help="directory of per-space .emb files")
    p.add_argument("--tau", type=float, default=engine.TUNED_CUTOFF_TAU["bertscore"])
    p.add_argument("--delta", default="0", help="cut-off replacement value, or 'drop'")
    p.add_argument("--cutoff-mode", choices=["absolute", "deviation_from_max"], default="absolute")
    p.add_argument("--cos-threshold", type=float, default=None)
    p.add_argument("--gold-clusters", action="store_true", help="use gold labels as clusters")
    p.add_argument("--k-min", type=int, default=2)
    p.add_argument("--k-max", type=int, default=6)
    p.add_argument("--silhouette-floor", type=float, default=clustering.DEFAULT_SILHOUETTE_FLOOR)
    p.add_argument(
        "--exclude-self",
        type=_parse_bool3,
        default=None,
        metavar="{auto,true,false}",
        help="self-comparison policy; auto = per-method default",
    )


def _result_record(space_id: str, result: engine.MbrResult) -> dict:
    diagnostics = {
        k: v for k, v in result.diagnostics.items() if isinstance(v, (int, float, str, bool, dict))
    }
    return {
        "id": space_id,
        "selected": result.selected,
        "ranking": list(result.ranking),
        "scores": [None if math.isnan(s) else float(s) for s in result.scores],
        "method": result.method,
        "diagnostics": diagnostics,
    }


def cmd_decode(args) -> int:
    started = _now()
    _check_method_inputs(args)
    corpus = load_corpus(args.corpus)
    matrices = _load_matrices(corpus, args)
    embeddings = _load_all_embeddings(corpus, args.embeddings)
    config = _method_config(args)

    def run(space):
        emb = embeddings.get(space.id) if embeddings else None
        return _result_record(space.id, apply_method(space, matrices[space.id], config, emb))

    with ThreadPoolExecutor(max_workers=max(1, args.workers)) as pool:
        records = list(pool.map(run, corpus.spaces))

    out = Path(args.out)
    with out.open("w", encoding="utf-8") as fh:
        for record in records:
            fh.write(json.dumps(record, separators=(",", ":")) + "\n")
    if args.pretty:
        for record in records:
            space = corpus.spaces[[s.id for s in corpus.spaces].index(record["id"])]
            text = space.candidates[record["selected"]].text
            print(f"{record['id']}\t#{record['selected']}\t{text}")
    inputs = _digest_inputs(
        {"corpus": Path(args.corpus), "matrix": Path(args.matrix) if args.matrix else None,
         "embeddings": Path(args.embeddings) if args.embeddings else None}
    )
    _write_manifest(out, "decode", _config_dict(args), inputs, args.seed, started)
    return 0


def cmd_eval(args) -> int:
    started = _now()
    _check_method_inputs(args)
    corpus = load_corpus(args.corpus)
    matrices = _load_matrices(corpus, args)
    embeddings = _load_all_embeddings(corpus, args.embeddings)
    config = _method_config(args)
    report = metrics.evaluate(corpus, matrices, config, embeddings, workers=max(1, args.workers))
    out = Path(args.out)
    with out.open("w", encoding="utf-8") as fh:
        for record in metrics.report_records(report):
            fh.write(json.dumps(record, separators=(",", ":")) + "\n")
    if args.pretty:
        corc_str = "n/a" if math.isnan(report.corc) else f"{report.corc:.4f}"
        print(f"method={report.method}  spaces={report.n_spaces}  CO={report.co:.4f}  CORC={corc_str}")
        for s in report.per_space:
            rho = "n/a" if math.isnan(s.mean_rho) else f"{s.mean_rho:+.4f}"
            print(f"  {s.space_id}\tco_hit={int(s.co_hit)}\trho={rho}")
    inputs = _digest_inputs(
        {"corpus": Path(args.corpus), "matrix": Path(args.matrix) if args.matrix else None,
         "embeddings": Path(args.embeddings) if args.embeddings else None}
    )
    _write_manifest(out, "eval", _config_dict(args), inputs, args.seed, started)
    return 0


def cmd_sweep(args) -> int:
    started = _now()
    corpus = load_corpus(args.corpus)
    fractions = _parse_floats(args.fractions, 3, "--fractions")
    train, val, _test = split_corpus(corpus, fractions, args.seed)
    if len(train) == 0 or len(val) == 0:
        raise UsageError("split produced an empty train or validation set; adjust --fractions")

    grid = None
    if args.grid is not None:
        lo, hi, n = args.grid.split(":")
        grid = tuple(np.linspace(float(lo), float(hi), int(n)))
    deltas = tuple("drop" if d == "drop" else float(d) for d in args.deltas.split(","))
    cfg = tuning.SweepConfig(
        grid=grid, modes=tuple(args.modes.split(",")), deltas=deltas, top_k=args.top_k
    )

    def matrices_for(split: Corpus) -> dict[str, UtilityMatrix]:
        if args.matrix is not None:
            root = Path(args.matrix)
            if not root.is_dir():
                raise UsageError(f"--matrix {root} is not a directory")
            return {s.id: load_matrix(root / s.id) for s in split.spaces}
        backend = _UTILITY_NAMES[args.utility]
        params = {"n": args.char_n, "beta": args.char_beta} if backend == "char_ngram_f" else {}
        return {s.id: build_utility_matrix(s, backend, **params) for s in split.spaces}

    if args.target == "cutoff":
        result = tuning.sweep_cutoff(train, matrices_for(train), val, matrices_for(val), cfg)
    else:
        if args.embeddings is None:
            raise UsageError("sweep target 'cos-threshold' requires --embeddings")
        train_emb = _load_all_embeddings(train, args.embeddings)
        val_emb = _load_all_embeddings(val, args.embeddings)
        result = tuning.sweep_cosine_threshold(
            train, matrices_for(train), val, matrices_for(val), train_emb, val_emb, cfg
        )

    out = Path(args.out)
    with out.open("w", encoding="utf-8") as fh:
        chosen = result.chosen
        fh.write(
            json.dumps(
                {
                    "type": "chosen",
                    "threshold": chosen.setting.threshold,
                    "mode": chosen.setting.mode,
                    "delta": chosen.setting.delta,
                    "train_co": chosen.train_co,
                    "val_co": chosen.val_co,
                },
                separators=(",", ":"),
            )
            + "\n"
        )
        for entry in result.trace:
            fh.write(
                json.dumps(
                    {
                        "type": "setting",
                        "threshold": entry.setting.threshold,
                        "mode": entry.setting.mode,
                        "delta": entry.setting.delta,
                        "train_co": entry.train_co,
                        "train_corc": None if math.isnan(entry.train_corc) else entry.train_corc,
                        "val_co": entry.val_co,
                    },
                    separators=(",", ":"),
                )
                + "\n"
            )
    if args.pretty:
        c = result.chosen
        print(
            f"chosen threshold={c.setting.threshold:.6g} mode={c.setting.mode} "
            f"delta={c.setting.delta} train_CO={c.train_co:.4f} val_CO={c.val_co:.4f}"
        )
    inputs = _digest_inputs(
        {"corpus": Path(args.corpus),
         "matrix": Path(args.matrix) if args.matrix else None,
         "embeddings": Path(args.embeddings) if args.embeddings else None}
    )
    _write_manifest(out, "sweep", _config_dict(args), inputs, args.seed, started)
    return 0


def cmd_gen_synth(args) -> int:
    started = _now()
    lo, hi = (int(v) for v in args.clusters.split(","))
    config = SynthConfig(
        n_spaces=args.n_spaces,
        clusters_per_space=(lo, hi),
        candidates_per_cluster=args.candidates_per_cluster,
        vocab_per_cluster=args.vocab_per_cluster,
        shared_vocab=args.shared_vocab,
        noise_rate=args.noise_rate,
        separation=args.separation,
        include_compromise=args.include_compromise,
        seed=args.seed,
        tokens_per_candidate=args.tokens_per_candidate,
    )
    corpus = generate_synthetic(config)
    out = Path(args.out)
    save_corpus(corpus, out)
    _write_manifest(out, "gen-synth", _config_dict(args), {}, args.seed, started)
    return 0


def cmd_demo_continuous(args) -> int:
    started = _now()
    weights = _parse_floats(args.weights, 2, "--weights")
    means = _parse_floats(args.means, 2, "--means")
    stds = _parse_floats(args.stds, 2, "--stds")
    mix = engine.MixtureSpec(weights=weights, means=means, stds=stds)
    if args.grid is not None:
        lo, hi, steps = args.grid.split(",")
        grid = (float(lo), float(hi), int(steps))
    else:
        lo = min(mu - 4.0 * sd for mu, sd in zip(mix.means, mix.stds))
        hi = max(mu + 4.0 * sd for mu, sd in zip(mix.means, mix.stds))
        grid = (lo, hi, args.steps)
    utility_kind = args.utility.replace("-", "_")
    optimum, curve = engine.demo_continuous(mix, utility_kind, bandwidth=args.bandwidth, grid=grid)
    step = (grid[1] - grid[0]) / (grid[2] - 1)
    print(f"optimum={optimum:.6f} (grid step {step:.6f})")
    if args.out:
        out = Path(args.out)
        with out.open("w", encoding="utf-8") as fh:
            for point, value in curve:
                fh.write(json.dumps({"h": float(point), "expected_utility": float(value)}) + "\n")
        _write_manifest(out, "demo-continuous", _config_dict(args), {}, args.seed, started)
    return 0


def _config_dict(args) -> dict:
    return {k: v for k, v in vars(args).items() if k != "func"}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mbrkit", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"mbrkit {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("decode", help="select a candidate per outcome space")
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", required=True)
    _add_method_flags(p)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--pretty", action="store_true")
    p.set_defaults(func=cmd_decode)

    p = sub.add_parser("eval", help="CO / CORC evaluation over a labelled corpus")
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", required=True)
    _add_method_flags(p)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--pretty", action="store_true")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("sweep", help="threshold sweep with train/val selection")
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--target", choices=["cutoff", "cos-threshold"], default="cutoff")
    p.add_argument("--fractions", default="0.8,0.1,0.1")
    p.add_argument("--grid", help="lo:hi:n threshold grid (default: data-driven)")
    p.add_argument("--modes", default="absolute")
    p.add_argument("--deltas", default="0")
    p.add_argument("--top-k", type=int, default=10)
    p.add_argument("--utility", choices=sorted(_UTILITY_NAMES), default="token-f1")
    p.add_argument("--char-n", type=int, default=4)
    p.add_argument("--char-beta", type=float, default=1.0)
    p.add_argument("--matrix", help="directory of per-space .umat files")
    p.add_argument("--embeddings", help="directory of per-space .emb files")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--pretty", action="store_true")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("gen-synth", help="generate a synthetic labelled corpus")
    p.add_argument("--out", required=True)
    p.add_argument("--n-spaces", type=int, default=10)
    p.add_argument("--clusters", default="2,4", help="lo,hi range for clusters per space")
    p.add_argument("--candidates-per-cluster", type=int, default=5)
    p.add_argument("--vocab-per-cluster", type=int, default=10)
    p.add_argument("--shared-vocab", type=int, default=4)
    p.add_argument("--noise-rate", type=float, default=0.05)
    p.add_argument("--separation", type=float, default=4.0)
    p.add_argument("--include-compromise", action="store_true")
    p.add_argument("--tokens-per-candidate", type=int, default=12)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_gen_synth)

    p = sub.add_parser("demo-continuous", help="closed-form bimodal demonstration")
    # let values like "-2,3" pass as arguments rather than flags
    p._negative_number_matcher = _re.compile(r"^-\d")
    p.add_argument("--weights", default="0.5,0.5")
    p.add_argument("--means", default="-2.0,2.0")
    p.add_argument("--stds", default="1.0,1.0")
    p.add_argument("--utility", choices=["neg-squared-error", "rbf"], default="neg-squared-error")
    p.add_argument("--bandwidth", type=float, default=1.0)
    p.add_argument("--grid", help="lo,hi,steps (default: cover means +/- 4 stds)")
    p.add_argument("--steps", type=int, default=2001)
    p.add_argument("--out")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_demo_continuous)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"error: missing input file: {exc}", file=sys.stderr)
        return 2
    except (CorpusError, MatrixFormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
