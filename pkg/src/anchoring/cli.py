"""Command-line interface.

One binary, six subcommands covering the full pipeline:

    anchoring simulate  --out runs/demo
    anchoring dataset   --scenes runs/demo/scenes --out runs/demo/data
    anchoring train     --pairs runs/demo/data/pairs_train.jsonl --out runs/demo/model
    anchoring run       --scene runs/demo/scenes/scene_0000.jsonl --out runs/demo/run
    anchoring eval      --model runs/demo/model/model.json --pairs test=... --out runs/demo/eval
    anchoring kb-export --snapshot runs/demo/run/kb_snapshot.json

Configuration comes from one JSON file (``--config``) merged over built-in
defaults, with ``--seed`` as a command-line override.  Every output file
embeds the schema version, the seed, and a digest of the resolved config;
wall-clock timestamps are confined to the per-run ``meta.json`` so data
outputs are byte-identical across reruns.

Exit status: 0 success, 2 usage error, 3 validation error, 4 runtime failure.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from .dataset import (
    DatasetSplit,
    SplitManifest,
    load_manifest,
    read_pairs,
    split_by_scene,
    summary_table,
    write_pairs,
)
from .engine import AnchoringEngine, EngineConfig, read_events, write_events
from .errors import AnchoringError, ValidationError
from .evaluation import ReportRow, confusion, identity_score, report_text, score_pairs, write_report_csv
from .figures import confusion_figure, metrics_figure, training_curves_figure
from .matcher import (
    AnalyticMatcher,
    AnalyticParams,
    ModelWidths,
    NeuralMatcher,
    TrainConfig,
    load_model,
    save_model,
    train,
)
from .percepts import load_scene, write_scene
from .records import config_digest
from .simulate import DEFAULT_CLASSES, SimConfig, generate
from .world_model import KnowledgeBase

_DEFAULT_CONFIG: dict[str, Any] = {
    "seed": 0,
    "sim": {
        "num_scenes": 5,
        "num_frames": 20,
        "frame_period": 0.5,
        "num_instances": 5,
        "class_vocabulary": list(DEFAULT_CLASSES),
        "bounds": [[0.0, 10.0], [0.0, 10.0], [0.0, 2.0]],
        "motion": "stationary",
        "speed_range": [0.1, 0.5],
        "base_size_range": [0.2, 1.0],
        "min_separation": 0.5,
        "position_sigma": 0.05,
        "size_sigma": 0.01,
        "appearance_sigma": 0.1,
        "dropout": 0.0,
        "embedding_dim": 32,
    },
    "engine": {
        "matcher": "analytic",
        "threshold": 0.5,
        "staleness": 5.0,
        "smoothing": None,
        "zone_cell_size": 1.0,
        "sigma_distance": 2.0,
        "sigma_time": 10.0,
    },
    "train": {
        "learning_rate": 0.001,
        "batch_size": 256,
        "epochs": 20,
        "widths": {"comparator": 16, "feature": 8, "encoding": 64, "classifier_hidden": 32},
    },
}


def _merge_config(base: dict[str, Any], override: dict[str, Any], prefix: str = "") -> dict[str, Any]:
    out = dict(base)
    for key, value in override.items():
        if key not in base:
            raise ValidationError(f"unknown config key {prefix + key!r}")
        if isinstance(base[key], dict) and isinstance(value, dict):
            out[key] = _merge_config(base[key], value, f"{prefix}{key}.")
        else:
            out[key] = value
    return out


def _resolve_config(config_path: str | None, seed: int | None) -> dict[str, Any]:
    cfg = _DEFAULT_CONFIG
    if config_path:
        try:
            loaded = json.loads(Path(config_path).read_text(encoding="utf-8"))
        except OSError as exc:
            raise ValidationError(f"cannot read config {config_path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ValidationError(
                f"{config_path}: invalid JSON at line {exc.lineno}, column {exc.colno}"
            ) from exc
        if not isinstance(loaded, dict):
            raise ValidationError(f"{config_path}: config must be a JSON object")
        cfg = _merge_config(cfg, loaded)
    if seed is not None:
        cfg = dict(cfg)
        cfg["seed"] = int(seed)
    return cfg


def _sim_config(cfg: dict[str, Any], seed: int) -> SimConfig:
    s = cfg["sim"]
    return SimConfig(
        seed=seed,
        num_frames=int(s["num_frames"]),
        frame_period=float(s["frame_period"]),
        num_instances=int(s["num_instances"]),
        class_vocabulary=tuple(s["class_vocabulary"]),
        bounds=tuple((float(lo), float(hi)) for lo, hi in s["bounds"]),
        motion=str(s["motion"]),
        speed_range=(float(s["speed_range"][0]), float(s["speed_range"][1])),
        base_size_range=(float(s["base_size_range"][0]), float(s["base_size_range"][1])),
        min_separation=float(s["min_separation"]),
        position_sigma=float(s["position_sigma"]),
        size_sigma=float(s["size_sigma"]),
        appearance_sigma=float(s["appearance_sigma"]),
        dropout=float(s["dropout"]),
        embedding_dim=int(s["embedding_dim"]),
    )


def _engine_config(cfg: dict[str, Any]) -> EngineConfig:
    e = cfg["engine"]
    smoothing = e["smoothing"]
    return EngineConfig(
        threshold=float(e["threshold"]),
        staleness=float(e["staleness"]),
        smoothing=float(smoothing) if smoothing is not None else None,
        zone_cell_size=float(e["zone_cell_size"]),
    )


def _build_matcher(cfg: dict[str, Any], model_path: str | None, embedding_dim: int | None = None):
    kind = cfg["engine"]["matcher"]
    if model_path is not None:
        kind = "neural"
    if kind == "analytic":
        return AnalyticMatcher(
            AnalyticParams(
                sigma_distance=float(cfg["engine"]["sigma_distance"]),
                sigma_time=float(cfg["engine"]["sigma_time"]),
            )
        ), "analytic"
    if kind == "neural":
        if not model_path:
            raise ValidationError("neural matcher requested but no --model path given")
        model = load_model(model_path, expected_dim=embedding_dim)
        return NeuralMatcher(model), Path(model_path).stem
    raise ValidationError(f"unknown matcher kind {kind!r}")


def _out_dir(path: str) -> Path:
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_meta(out: Path, command: str, argv: Sequence[str], cfg: dict[str, Any],
                started: float, outputs: Sequence[str]) -> None:
    # the one place wall-clock time is allowed; data files stay reproducible
    meta = {
        "command": command,
        "argv": list(argv),
        "seed": cfg["seed"],
        "config_digest": config_digest(cfg),
        "started_unix": started,
        "duration_seconds": time.time() - started,
        "outputs": sorted(outputs),
    }
    (out / "meta.json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _file_meta(cfg: dict[str, Any]) -> dict[str, Any]:
    return {"seed": cfg["seed"], "config_digest": config_digest(cfg)}


# -- subcommands -------------------------------------------------------------------


def _cmd_simulate(args: argparse.Namespace) -> int:
    started = time.time()
    cfg = _resolve_config(args.config, args.seed)
    out = _out_dir(args.out)
    scenes_dir = out / "scenes"
    scenes_dir.mkdir(exist_ok=True)
    num_scenes = args.scenes if args.scenes is not None else int(cfg["sim"]["num_scenes"])
    if num_scenes < 1:
        raise ValidationError(f"need at least one scene, got {num_scenes}")
    children = np.random.SeedSequence(cfg["seed"]).spawn(num_scenes)
    outputs = []
    for i, child in enumerate(children):
        scene_seed = int(child.generate_state(1)[0])
        sim_cfg = _sim_config(cfg, scene_seed)
        frames = generate(sim_cfg)
        scene_id = f"scene_{i:04d}"
        path = scenes_dir / f"{scene_id}.jsonl"
        write_scene(
            path, frames, sim_cfg.embedding_dim,
            meta={**_file_meta(cfg), "scene_id": scene_id, "scene_seed": scene_seed},
        )
        outputs.append(str(path.relative_to(out)))
    _write_meta(out, "simulate", sys.argv[1:], cfg, started, outputs)
    print(f"wrote {num_scenes} scenes to {scenes_dir}")
    return 0


def _load_scene_dir(scenes_dir: Path) -> dict[str, Any]:
    paths = sorted(scenes_dir.glob("*.jsonl"))
    if not paths:
        raise ValidationError(f"no scene files found in {scenes_dir}")
    scenes: dict[str, Any] = {}
    for path in paths:
        header, frames = load_scene(path)
        scene_id = header.get("scene_id", path.stem)
        if scene_id in scenes:
            raise ValidationError(f"duplicate scene id {scene_id!r} in {scenes_dir}")
        scenes[scene_id] = frames
    return scenes


def _auto_manifest(scene_ids: Sequence[str], spec: str) -> SplitManifest:
    try:
        n_train, n_val, n_test = (int(x) for x in spec.split(","))
    except ValueError as exc:
        raise ValidationError(f"--auto-split expects TRAIN,VAL,TEST counts, got {spec!r}") from exc
    if n_train < 0 or n_val < 0 or n_test < 0 or n_train + n_val + n_test > len(scene_ids):
        raise ValidationError(
            f"--auto-split {spec!r} does not fit the {len(scene_ids)} available scenes"
        )
    ordered = list(scene_ids)
    return SplitManifest(
        train=tuple(ordered[:n_train]),
        val=tuple(ordered[n_train : n_train + n_val]),
        test=tuple(ordered[n_train + n_val : n_train + n_val + n_test]),
    )


def _cmd_dataset(args: argparse.Namespace) -> int:
    started = time.time()
    cfg = _resolve_config(args.config, args.seed)
    out = _out_dir(args.out)
    scenes = _load_scene_dir(Path(args.scenes))
    if args.manifest:
        manifest = load_manifest(args.manifest)
    else:
        spec = args.auto_split
        if spec is None:
            n = len(scenes)
            n_train = max(1, round(0.7 * n))
            n_val = round(0.15 * n)
            spec = f"{min(n_train, n)},{min(n_val, n - n_train)},{n - n_train - min(n_val, n - n_train)}"
        manifest = _auto_manifest(list(scenes), spec)
    split = split_by_scene(scenes, manifest, name=args.name)
    embedding_dim = _split_embedding_dim(split)

    outputs = []
    meta = _file_meta(cfg)
    for split_name, pairs in (("train", split.train), ("val", split.val), ("test", split.test)):
        path = out / f"pairs_{split_name}.jsonl"
        write_pairs(path, pairs, embedding_dim, meta={**meta, "split": split_name, "dataset": split.name})
        outputs.append(path.name)
    manifest_path = out / "manifest.json"
    manifest_path.write_text(
        json.dumps(
            {"train": list(manifest.train), "val": list(manifest.val), "test": list(manifest.test)},
            indent=2,
        )
        + "\n",
        encoding="utf-8",
    )
    summary = summary_table([split])
    (out / "summary.txt").write_text(summary, encoding="utf-8")
    counts = split.counts()
    with (out / "summary.csv").open("w", encoding="utf-8", newline="") as fh:
        fh.write("dataset,train,val,test,total\n")
        fh.write(
            f"{split.name},{counts['train']},{counts['val']},{counts['test']},{sum(counts.values())}\n"
        )
    outputs += ["manifest.json", "summary.txt", "summary.csv"]
    _write_meta(out, "dataset", sys.argv[1:], cfg, started, outputs)
    print(summary, end="")
    return 0


def _split_embedding_dim(split: DatasetSplit) -> int:
    for bucket in (split.train, split.val, split.test):
        for pair in bucket:
            return int(pair.features.appearance_a.shape[0])
    raise ValidationError("dataset contains no pairs in any split")


def _cmd_train(args: argparse.Namespace) -> int:
    started = time.time()
    cfg = _resolve_config(args.config, args.seed)
    out = _out_dir(args.out)
    _, train_pairs = read_pairs(args.pairs)
    val_pairs = None
    if args.val:
        _, val_pairs = read_pairs(args.val)
    t = cfg["train"]
    widths = ModelWidths(**{k: int(v) for k, v in t["widths"].items()})
    train_cfg = TrainConfig(
        learning_rate=float(t["learning_rate"]),
        batch_size=int(t["batch_size"]),
        epochs=args.epochs if args.epochs is not None else int(t["epochs"]),
        seed=int(cfg["seed"]),
    )
    model, history = train(train_pairs, train_cfg, val_pairs=val_pairs, widths=widths)
    model_path = out / "model.json"
    save_model(model, model_path, meta=_file_meta(cfg))

    history_path = out / "history.csv"
    with history_path.open("w", encoding="utf-8", newline="") as fh:
        fh.write("epoch,train_loss,train_accuracy,val_loss,val_accuracy\n")
        for row in history.rows():
            fh.write(
                f"{row['epoch']},{row['train_loss']!r},{row['train_accuracy']!r},"
                f"{'' if row['val_loss'] is None else repr(row['val_loss'])},"
                f"{'' if row['val_accuracy'] is None else repr(row['val_accuracy'])}\n"
            )
    outputs = ["model.json", "history.csv"]
    if history.epochs:
        training_curves_figure(history, out / "history.png")
        outputs.append("history.png")
    for warning in history.warnings:
        print(f"warning: {warning}", file=sys.stderr)
    _write_meta(out, "train", sys.argv[1:], cfg, started, outputs)
    final = history.epochs[-1] if history.epochs else None
    if final is not None:
        print(
            f"trained {train_cfg.epochs} epochs: loss {final.train_loss:.4f}, "
            f"accuracy {final.train_accuracy:.4f}"
        )
    else:
        print("trained 0 epochs: wrote initialized model")
    return 0


def _cmd_run(args: argparse.Namespace) -> int:
    started = time.time()
    cfg = _resolve_config(args.config, args.seed)
    out = _out_dir(args.out)
    header, frames = load_scene(args.scene)
    embedding_dim = header.get("embedding_dim")
    matcher, matcher_name = _build_matcher(cfg, args.model, embedding_dim)
    engine = AnchoringEngine(matcher, _engine_config(cfg))
    events = engine.run(frames)

    events_path = out / "events.jsonl"
    write_events(
        events_path, events,
        meta={**_file_meta(cfg), "scene": Path(args.scene).name, "matcher": matcher_name},
    )
    (out / "kb_snapshot.json").write_bytes(engine.kb.to_snapshot())

    acquired = sum(len(e.acquired) for e in events)
    reacquired = sum(len(e.reacquired) for e in events)
    stale = sum(len(e.tracked_stale) for e in events)
    summary = (
        f"frames      {len(events)}\n"
        f"anchors     {len(engine.anchors)}\n"
        f"acquired    {acquired}\n"
        f"reacquired  {reacquired}\n"
        f"went stale  {stale}\n"
    )
    (out / "run_summary.txt").write_text(summary, encoding="utf-8")
    _write_meta(out, "run", sys.argv[1:], cfg, started,
                ["events.jsonl", "kb_snapshot.json", "run_summary.txt"])
    print(summary, end="")
    return 0


def _parse_named_path(spec: str) -> tuple[str, str]:
    if "=" in spec:
        name, _, path = spec.partition("=")
        if not name or not path:
            raise ValidationError(f"expected NAME=PATH, got {spec!r}")
        return name, path
    return Path(spec).stem, spec


def _cmd_eval(args: argparse.Namespace) -> int:
    started = time.time()
    cfg = _resolve_config(args.config, args.seed)
    out = _out_dir(args.out)
    threshold = float(cfg["engine"]["threshold"])

    if args.events or args.scene:
        if not (args.events and args.scene):
            raise ValidationError("identity evaluation needs both --events and --scene")
        _, events = read_events(args.events)
        _, frames = load_scene(args.scene)
        score = identity_score(events, frames)
        reacquires = sum(len(e.reacquired) for e in events)
        non_first = sum(len(f.percepts) for f in frames[1:])
        text = (
            f"scene                    {Path(args.scene).name}\n"
            f"frames                   {len(frames)}\n"
            f"non-first-frame percepts {non_first}\n"
            f"reacquires               {reacquires}\n"
            f"identity score           {score:.4f}\n"
        )
        (out / "identity.txt").write_text(text, encoding="utf-8")
        with (out / "identity.csv").open("w", encoding="utf-8", newline="") as fh:
            fh.write("scene,frames,non_first_percepts,reacquires,identity_score\n")
            fh.write(f"{Path(args.scene).name},{len(frames)},{non_first},{reacquires},{score!r}\n")
        _write_meta(out, "eval", sys.argv[1:], cfg, started, ["identity.txt", "identity.csv"])
        print(text, end="")
        return 0

    if not args.pairs:
        raise ValidationError("eval needs --pairs NAME=PATH (or --events/--scene for identity)")
    matcher, matcher_name = _build_matcher(cfg, args.model)
    rows = []
    for spec in args.pairs:
        name, path = _parse_named_path(spec)
        _, pairs = read_pairs(path)
        scores, labels = score_pairs(matcher.score, pairs)
        rows.append(ReportRow(model=matcher_name, test_set=name, cm=confusion(scores, labels, threshold)))
    text = report_text(rows)
    (out / "report.txt").write_text(text, encoding="utf-8")
    write_report_csv(rows, out / "report.csv")
    confusion_figure(rows, out / "report_confusion.png")
    metrics_figure(rows, out / "report_metrics.png")
    _write_meta(out, "eval", sys.argv[1:], cfg, started,
                ["report.txt", "report.csv", "report_confusion.png", "report_metrics.png"])
    print(text, end="")
    return 0


def _cmd_kb_export(args: argparse.Namespace) -> int:
    kb = KnowledgeBase.from_snapshot(Path(args.snapshot).read_bytes())
    lines = ["types:"]
    for name in sorted(kb.types):
        lines.append(f"  {name}")
    lines.append("objects:")
    for object_id in sorted(kb.objects):
        lines.append(f"  {object_id}: {kb.objects[object_id]}")
    lines.append("predicates:")
    for name in sorted(kb.predicates):
        decl = kb.predicates[name]
        functional = " [functional]" if decl.functional else ""
        lines.append(f"  {name}/{decl.arity}({', '.join(decl.arg_kinds)}){functional}")
    lines.append(f"facts ({len(kb.facts)}):")
    for fact in kb.facts:
        rendered = ", ".join(str(a) for a in fact.args)
        lines.append(f"  {fact.predicate}({rendered})")
    text = "\n".join(lines) + "\n"
    if args.out:
        path = Path(args.out)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding="utf-8")
    else:
        print(text, end="")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="anchoring",
        description="Perceptual anchoring pipeline: simulate, build pairs, train, run, evaluate.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser, out_required: bool = True) -> None:
        p.add_argument("--config", help="JSON config file merged over built-in defaults")
        p.add_argument("--seed", type=int, help="override the config seed")
        if out_required:
            p.add_argument("--out", required=True, help="output directory")

    p = sub.add_parser("simulate", help="generate synthetic scenes")
    common(p)
    p.add_argument("--scenes", type=int, help="number of scenes (default from config)")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("dataset", help="build labeled pair datasets from scenes")
    common(p)
    p.add_argument("--scenes", required=True, help="directory of scene files")
    p.add_argument("--manifest", help="JSON split manifest with train/val/test scene ids")
    p.add_argument("--auto-split", help="TRAIN,VAL,TEST scene counts, split in filename order")
    p.add_argument("--name", default="synthetic", help="dataset name used in summaries")
    p.set_defaults(func=_cmd_dataset)

    p = sub.add_parser("train", help="train the learned matcher")
    common(p)
    p.add_argument("--pairs", required=True, help="training pair file")
    p.add_argument("--val", help="validation pair file")
    p.add_argument("--epochs", type=int, help="override config epoch count")
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("run", help="run the anchoring engine over a scene")
    common(p)
    p.add_argument("--scene", required=True, help="scene file")
    p.add_argument("--model", help="matcher model file (switches to the neural matcher)")
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("eval", help="evaluate a matcher on pairs, or a run's identity score")
    common(p)
    p.add_argument("--model", help="matcher model file (default: analytic matcher)")
    p.add_argument("--pairs", action="append", help="NAME=PATH labeled pair file (repeatable)")
    p.add_argument("--events", help="engine event log (identity mode)")
    p.add_argument("--scene", help="ground-truth scene (identity mode)")
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("kb-export", help="render a knowledge base snapshot as text")
    p.add_argument("--snapshot", required=True, help="knowledge base snapshot file")
    p.add_argument("--out", help="output file (default: stdout)")
    p.set_defaults(func=_cmd_kb_export)

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (AnchoringError, OSError) as exc:
        print(f"failure: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
