"""Command-line front door wiring the experiment pipeline end to end.

Stages exchange plain files: event CSVs, split directories, model
checkpoints, and report CSV/markdown. Rerunning a command with identical
inputs and seed rewrites identical artifacts.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import fields
from pathlib import Path

from . import baselines, metrics, model, pipeline, synth, training
from .errors import PopseqError
from .events import load_events, save_events

BASELINE_NAMES = ("most-popular", "personalized-most-popular")


def _require(path: Path) -> Path:
    if not path.exists():
        raise FileNotFoundError(f"missing input file: {path}")
    return path


def _parse_mix(text: str) -> dict[str, float]:
    mix = {}
    for part in text.split(","):
        key, _, value = part.partition("=")
        mix[key.strip()] = float(value)
    return mix


def _parse_cutoffs(text: str) -> tuple[int, ...]:
    return tuple(int(k) for k in text.split(","))


_MODEL_FIELD_TYPES = {f.name: f.type for f in fields(model.ModelConfig)}


def _parse_model_spec(spec: str) -> tuple[str | None, model.ModelConfig]:
    """Parse 'neural:key=value,...' into an optional name and a ModelConfig."""
    body = spec.partition(":")[2]
    name = None
    kwargs: dict = {}
    for part in filter(None, (p.strip() for p in body.split(","))):
        key, sep, value = part.partition("=")
        if not sep:
            raise ValueError(f"bad model option {part!r}, expected key=value")
        key = key.strip().replace("-", "_")
        value = value.strip()
        if key == "name":
            name = value
            continue
        if key not in _MODEL_FIELD_TYPES:
            raise ValueError(f"unknown model option {key!r}")
        kind = _MODEL_FIELD_TYPES[key]
        if kind == "int" or kind.startswith("int |"):
            kwargs[key] = int(value)
        elif kind == "float":
            kwargs[key] = float(value)
        else:
            kwargs[key] = value
    return name, model.ModelConfig(**kwargs)


def _build_baseline(name: str, train_log):
    if name == "most-popular":
        return baselines.most_popular_scorer(train_log)
    return baselines.personalized_most_popular_scorer(train_log)


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def cmd_synth(args) -> int:
    config = synth.SynthConfig(
        users=args.users, items=args.items,
        events_per_user=args.events_per_user,
        repeat_probability=args.rho,
        favorites_per_user=args.favorites,
        global_skew=args.skew,
        event_type_mix=_parse_mix(args.event_mix),
        seed=args.seed)
    log = synth.generate(config)
    Path(args.output).parent.mkdir(parents=True, exist_ok=True)
    save_events(log, args.output)
    print(f"wrote {len(log)} events over {len(log.catalog)} items "
          f"to {args.output}")
    return 0


def cmd_sample(args) -> int:
    log = load_events(_require(Path(args.input)))
    sampled, catalog = pipeline.popularity_sample(log, args.n, args.seed)
    Path(args.output).parent.mkdir(parents=True, exist_ok=True)
    save_events(sampled, args.output)
    print(f"kept {len(sampled)} of {len(log)} events over {len(catalog)} "
          f"items in {args.output}")
    return 0


def cmd_split(args) -> int:
    log = load_events(_require(Path(args.input)))
    split = pipeline.global_temporal_split(
        log, args.test_fraction, args.val_fraction, args.val_users, args.seed)
    pipeline.save_split(split, args.output)
    print(f"split {len(log)} events: {len(split.train)} train, "
          f"{len(split.validation)} validation users, "
          f"{len(split.test)} test users -> {args.output}")
    return 0


def cmd_train(args) -> int:
    split = pipeline.load_split(_require(Path(args.input)))
    name, config = _parse_model_spec("neural:" + (args.model_options or ""))
    scorer = training.train(split.train, config, split.validation,
                            name=args.name or name)
    Path(args.output).parent.mkdir(parents=True, exist_ok=True)
    model.save_checkpoint(args.output, scorer.params, config)
    print(f"trained {scorer.name} -> {args.output}")
    return 0


def cmd_eval(args) -> int:
    split = pipeline.load_split(_require(Path(args.input)))
    cutoffs = _parse_cutoffs(args.cutoffs)
    if args.scorer in BASELINE_NAMES:
        scorer = _build_baseline(args.scorer, split.train)
    elif args.scorer == "neural":
        if not args.model:
            raise ValueError("--model is required for the neural scorer")
        config, params = model.load_checkpoint(_require(Path(args.model)))
        scorer = training.NeuralScorer(Path(args.model).stem, config, params,
                                       params.n_items)
    else:
        raise ValueError(f"unknown scorer {args.scorer!r}")
    result = metrics.evaluate(scorer, split, cutoffs, gain=args.gain)
    out = Path(args.output)
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", encoding="utf-8", newline="") as fh:
        fh.write("user_id,cutoff,ndcg\n")
        for k in cutoffs:
            for user, value in zip(result.users, result.ndcg[k]):
                fh.write(f"{user},{k},{value:.6f}\n")
    for k in cutoffs:
        print(f"{scorer.name} NDCG@{k} = {result.mean(k):.4f}")
    print(f"per-user table -> {out}")
    return 0


def _read_run_config(path: Path) -> dict:
    """Flat key=value file; 'scorer' and 'pair' keys may repeat."""
    out: dict = {"scorer": [], "pair": []}
    for lineno, raw in enumerate(_require(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ValueError(f"{path}:{lineno}: expected key=value")
        key, value = key.strip(), value.strip()
        if key in ("scorer", "pair"):
            out[key].append(value)
        else:
            out[key] = value
    return out


def cmd_compare(args) -> int:
    scorers = list(args.scorer or [])
    pairs = [tuple(p.split("=", 1)) for p in (args.pair or [])]
    cutoffs, seed, gain = args.cutoffs, args.seed, args.gain
    indir, outdir = args.input, args.outdir
    if args.config:
        cfg = _read_run_config(Path(args.config))
        scorers = cfg["scorer"] + scorers
        pairs = [tuple(p.split("=", 1)) for p in cfg["pair"]] + pairs
        indir = indir or cfg.get("input")
        outdir = outdir or cfg.get("outdir")
        cutoffs = cutoffs or cfg.get("cutoffs")
        gain = gain or cfg.get("gain")
        if seed is None and "seed" in cfg:
            seed = int(cfg["seed"])
    if not indir:
        raise ValueError("no split directory given (-i or config 'input')")
    if not scorers:
        raise ValueError("no scorers configured")
    cutoff_values = _parse_cutoffs(cutoffs or "5,10,40,100")
    gain = gain or metrics.GAIN_EXPONENTIAL
    outdir = Path(outdir or "compare-out")

    split = pipeline.load_split(_require(Path(indir)))
    built = []
    specs: dict[str, model.ModelConfig] = {}
    for token in scorers:
        if token in BASELINE_NAMES:
            built.append(_build_baseline(token, split.train))
        elif token.startswith("neural"):
            name, config = _parse_model_spec(token)
            if seed is not None:
                config = model.ModelConfig(
                    **{**{f.name: getattr(config, f.name)
                          for f in fields(model.ModelConfig)}, "seed": seed})
            scorer = training.train(split.train, config, split.validation,
                                    name=name)
            (outdir / "models").mkdir(parents=True, exist_ok=True)
            model.save_checkpoint(outdir / "models" / f"{scorer.name}.npz",
                                  scorer.params, config)
            specs[scorer.name] = config
            built.append(scorer)
        else:
            raise ValueError(f"unknown scorer {token!r}")

    # pair each pps=on neural run with its pps=off twin unless told otherwise
    if not pairs:
        for name, config in specs.items():
            if config.pps != "on":
                continue
            twin = {f.name: getattr(config, f.name)
                    for f in fields(model.ModelConfig)}
            twin["pps"] = "off"
            for other, other_cfg in specs.items():
                if other != name and {f.name: getattr(other_cfg, f.name)
                                      for f in fields(model.ModelConfig)} == twin:
                    pairs.append((name, other))
                    break

    evaluations = [metrics.evaluate(s, split, cutoff_values, gain=gain)
                   for s in built]
    report = metrics.build_report(evaluations, pairs)
    reports = outdir / "reports"
    reports.mkdir(parents=True, exist_ok=True)
    (reports / "report.md").write_text(report.to_markdown(), encoding="utf-8")
    (reports / "report.csv").write_text(report.to_csv(), encoding="utf-8")
    print(report.to_markdown())
    print(f"report -> {reports / 'report.csv'}")
    return 0


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="popseq",
        description="popularity-aware sequential recommendation experiments")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic event CSV")
    p.add_argument("--users", type=int, default=100)
    p.add_argument("--items", type=int, default=500)
    p.add_argument("--events-per-user", type=int, default=200)
    p.add_argument("--rho", type=float, default=0.8,
                   help="probability an event replays a favorite")
    p.add_argument("--favorites", type=int, default=10)
    p.add_argument("--skew", type=float, default=1.0,
                   help="Zipf exponent of the global catalog distribution")
    p.add_argument("--event-mix", default="like=0.1,dislike=0.05,play=0.7,skip=0.15")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("sample", help="popularity-based item sampling")
    p.add_argument("-i", "--input", required=True)
    p.add_argument("-n", type=int, required=True, help="items to keep")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("split", help="global temporal split")
    p.add_argument("-i", "--input", required=True)
    p.add_argument("--test-fraction", type=float, default=0.1)
    p.add_argument("--val-fraction", type=float, default=0.1)
    p.add_argument("--val-users", type=int, default=16)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--output", required=True, help="split directory")
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("train", help="train the neural scorer")
    p.add_argument("-i", "--input", required=True, help="split directory")
    p.add_argument("--model-options", default="",
                   help="comma-separated key=value ModelConfig fields")
    p.add_argument("--name")
    p.add_argument("-o", "--output", required=True, help="checkpoint path")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate one scorer on a split")
    p.add_argument("-i", "--input", required=True, help="split directory")
    p.add_argument("--scorer", required=True,
                   help="most-popular | personalized-most-popular | neural")
    p.add_argument("--model", help="checkpoint for the neural scorer")
    p.add_argument("--cutoffs", default="5,10,40,100")
    p.add_argument("--gain", choices=(metrics.GAIN_EXPONENTIAL,
                                      metrics.GAIN_LINEAR),
                   default=metrics.GAIN_EXPONENTIAL)
    p.add_argument("-o", "--output", required=True, help="per-user CSV path")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("compare", help="train, evaluate, and compare scorers")
    p.add_argument("-i", "--input", help="split directory")
    p.add_argument("--scorer", action="append",
                   help="baseline name or neural:key=value,... (repeatable)")
    p.add_argument("--pair", action="append",
                   help="target=baseline significance pair (repeatable)")
    p.add_argument("--cutoffs")
    p.add_argument("--gain", choices=(metrics.GAIN_EXPONENTIAL,
                                      metrics.GAIN_LINEAR))
    p.add_argument("--seed", type=int)
    p.add_argument("--outdir")
    p.add_argument("--config", help="flat key=value run configuration file")
    p.set_defaults(func=cmd_compare)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (PopseqError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
