"""Command-line entry point: ``fbmdim <subcommand> ...``."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .digits import DigitSetSpec, DensityProfile, cover, exact_dims
from .dyadic import IntervalFamily, balance, content, is_balanced
from .errors import InvalidArguments, ResourceLimitError, SamplingError, UnsupportedSpec, ValidationError
from .estimators import CoverHierarchy, minkowski_slopes, report, window_assouad
from .experiments import EXPERIMENTS, ExperimentConfig, emit_report, run, summary_text
from .fbm import holder_stat, sample_path
from .percolation import simulate, survivor_counts, window_event
from .selfsimilar import Ifs, attractor_cover, similarity_dimension_full

SCHEMAS = """CSV schemas written by `experiment` (one file <name>.csv plus <name>_summary.txt):
  zero_set, record_set   seed, slope
  kahane_image           seed, image_slope, set_slope
  doubling               seed, subset, set_slope, predicted, image_slope, pass
  witness                seed, level, m, n, parents, population, kept, min_kept, threshold,
                         pass, witness_slope, image_slope, gap   (one row per witness level)
  mixed_level_sets       seed, level, slope, pass
  percolation_dim        seed, redraws, slope, window_pass, quasi_assouad
  heart_events           seed, pass, worst_ratio
Exit status: 0 all assertions pass, 1 some assertion failed, 2 bad config or input."""


def _load_config(path: str | None) -> dict:
    if not path:
        return {}
    with open(path, "rb") as fh:
        return tomllib.load(fh)


def _set_spec(cfg: dict) -> DigitSetSpec:
    s = dict(cfg.get("set", cfg))
    s.pop("kind", None)
    return DigitSetSpec.from_config(s)


def _out_dir(args) -> Path:
    out = Path(args.out or ".")
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_dim_exact(args) -> int:
    cfg = _load_config(args.config)
    if args.pattern is not None:
        cfg = {"set": {"prefix": args.prefix or "", "tail": {"kind": "periodic", "pattern": args.pattern}}}
    spec = _set_spec(cfg)
    rep = exact_dims(spec)
    print(rep.to_json())
    if args.out:
        out = _out_dir(args)
        prof = DensityProfile.build(spec, int(cfg.get("n_max", 1000)))
        (out / "density_profile.csv").write_text(prof.to_csv())
        (out / "dimensions.json").write_text(rep.to_json())
    return 0


def _hierarchy(cfg: dict, seed: int) -> tuple[CoverHierarchy, str]:
    s = cfg.get("set", {})
    kind = s.get("kind", "digits")
    top = int(cfg.get("order", 16))
    if kind == "digits":
        fam = cover(_set_spec(cfg), top)
    elif kind == "ifs":
        fam = attractor_cover(Ifs.from_config(s["maps"]), top)
    elif kind == "percolation":
        fam = simulate(float(s.get("gamma", 0.5)), top, seed).family(top)
    else:
        raise UnsupportedSpec(f"unknown set kind {kind!r}")
    return CoverHierarchy.from_finest(fam), kind


def cmd_dim_estimate(args) -> int:
    cfg = _load_config(args.config)
    h, kind = _hierarchy(cfg, args.seed or 0)
    window = tuple(cfg.get("window", (max(0, h.orders[-1] - 8), h.orders[-1])))
    eps = float(cfg.get("eps", 0.25))
    est = minkowski_slopes(h, window)
    qa = window_assouad(h, eps, int(cfg.get("min_len", 8)))
    # lower Minkowski bounds Hausdorff from above; upper Minkowski stands in for packing
    estimates = {"hausdorff": (est.lower, est.stderr), "packing": (est.upper, est.stderr)}
    if qa > -np.inf:
        estimates["modified_assouad"] = (max(qa, est.upper), est.stderr)
    notes = [f"{kind} set, window {window}, eps {eps}",
             f"least-squares box slope {est.slope:.4f} +/- {est.stderr:.4f}",
             "packing is an upper-Minkowski slope, modified Assouad a windowed quasi-Assouad bound"]
    if kind == "ifs":
        sd = similarity_dimension_full(Ifs.from_config(cfg["set"]["maps"]))
        notes.append(f"similarity dimension {sd.raw:.6f} (capped {sd.capped:.6f})")
    rep = report(estimates=estimates, notes=tuple(notes))
    print(rep.to_json())
    if args.out:
        (_out_dir(args) / "estimate.json").write_text(rep.to_json())
    return 0


def cmd_sample_fbm(args) -> int:
    cfg = _load_config(args.config)
    alpha = args.alpha if args.alpha is not None else float(cfg.get("alpha", 0.5))
    order = args.order if args.order is not None else int(cfg.get("order", 10))
    seed = args.seed if args.seed is not None else cfg.get("seed")
    if seed is None:
        raise InvalidArguments("a seed is required")
    path = sample_path(alpha, order, int(seed))
    out = _out_dir(args)
    stem = f"fbm_a{alpha:g}_n{order}_s{seed}"
    if args.format == "csv":
        (out / f"{stem}.csv").write_text(path.to_csv())
    else:
        (out / f"{stem}.bin").write_bytes(path.to_bytes())
    print(f"wrote {stem}.{args.format}; holder_stat={holder_stat(path):.4f}" if order >= 4
          else f"wrote {stem}.{args.format}")
    return 0


def cmd_balance(args) -> int:
    cfg = _load_config(args.config)
    beta = args.beta if args.beta is not None else float(cfg.get("beta", 0.5))
    src = args.input or cfg.get("input")
    text = sys.stdin.read() if src in (None, "-") else Path(src).read_text()
    U = IntervalFamily.from_text(text)
    V = balance(U, beta)
    print(f"# |U|={len(U)} content={content(U, beta):.6g} -> |V|={len(V)} "
          f"content={content(V, beta):.6g} balanced={is_balanced(V, beta)}", file=sys.stderr)
    if args.out:
        (_out_dir(args) / "balanced.txt").write_text(V.to_text())
    else:
        sys.stdout.write(V.to_text())
    return 0


def cmd_percolation(args) -> int:
    cfg = _load_config(args.config)
    gamma = args.gamma if args.gamma is not None else float(cfg.get("gamma", 0.5))
    depth = args.depth if args.depth is not None else int(cfg.get("depth", 12))
    seed = args.seed if args.seed is not None else int(cfg.get("seed", 0))
    s = simulate(gamma, depth, seed)
    ev = window_event(s, float(cfg.get("eps", 0.2)), int(cfg.get("n_lo", 1)))
    print(json.dumps({"gamma": gamma, "depth": depth, "seed": seed,
                      "survivors": survivor_counts(s), "window_event": ev.passed}))
    if args.out:
        out = _out_dir(args)
        (out / "tree.hex").write_text("\n".join(s.to_hex()) + "\n")
        (out / "window_event.csv").write_text(ev.to_csv())
    return 0


def cmd_experiment(args) -> int:
    if not args.config and not args.name:
        raise InvalidArguments("experiment needs --config or --name")
    data = _load_config(args.config)
    if args.name:
        data["experiment"] = args.name
    if args.seed is not None:
        data["seed"] = args.seed
    if args.workers is not None:
        data["workers"] = args.workers
    cfg = ExperimentConfig.from_dict(data)
    result = run(cfg)
    out = args.out or cfg.out or "results"
    csv_path, txt_path = emit_report(result, out)
    sys.stdout.write(summary_text(result))
    print(f"wrote {csv_path} and {txt_path}")
    return 0 if result.passed else 1


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="TOML config file")
    common.add_argument("--seed", type=int, help="64-bit master seed")
    common.add_argument("--out", help="output directory")
    common.add_argument("--workers", type=int, help="process budget for ensembles")

    p = argparse.ArgumentParser(prog="fbmdim", description="Dimension experiments for fBm and dyadic sets.",
                                epilog=SCHEMAS, formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = p.add_subparsers(dest="command", required=True)

    q = sub.add_parser("dim-exact", parents=[common], help="exact dimensions of a digit set")
    q.add_argument("--pattern", help="periodic tail pattern, e.g. 10")
    q.add_argument("--prefix", help="explicit prefix bits")
    q.set_defaults(func=cmd_dim_exact)

    q = sub.add_parser("dim-estimate", parents=[common], help="box-counting and window estimates")
    q.set_defaults(func=cmd_dim_estimate)

    q = sub.add_parser("sample-fbm", parents=[common], help="sample one fBm path")
    q.add_argument("--alpha", type=float)
    q.add_argument("--order", type=int)
    q.add_argument("--format", choices=("csv", "bin"), default="csv")
    q.set_defaults(func=cmd_sample_fbm)

    q = sub.add_parser("balance", parents=[common], help="rebalance a family read as 'n p' lines")
    q.add_argument("--beta", type=float)
    q.add_argument("--input", help="family file, '-' for stdin")
    q.set_defaults(func=cmd_balance)

    q = sub.add_parser("percolation", parents=[common], help="simulate one percolation tree")
    q.add_argument("--gamma", type=float)
    q.add_argument("--depth", type=int)
    q.set_defaults(func=cmd_percolation)

    q = sub.add_parser("experiment", parents=[common], help="run a named experiment",
                       epilog=SCHEMAS, formatter_class=argparse.RawDescriptionHelpFormatter)
    q.add_argument("--name", choices=sorted(EXPERIMENTS))
    q.set_defaults(func=cmd_experiment)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (InvalidArguments, ValidationError, UnsupportedSpec, ResourceLimitError,
            SamplingError, KeyError, OSError, tomllib.TOMLDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
