#
# Copyright (C) 2026 pdnet contributors. See LICENSE file for terms.
#
"""
Command-line entry point.

    pdnet synth        write a synthetic polysemy benchmark
    pdnet cluster      cluster the objects of every verb, write the manifest and polysemy statistics
    pdnet train        train a model, write the checkpoint and training log
    pdnet eval         score a split and write detections and mAP reports
    pdnet ablate       train and evaluate a list of configurations, write a comparison table
    pdnet zero-shot    unseen / seen / full mAP for SH and CSP on the unseen-object split
    pdnet grad-check   finite-difference checks of every primitive and the composed graphs

Every command reads a flat YAML config (--config), then --seed, --out and repeated --set key=value overrides, and
writes effective_config.yml and run.log into its output directory. Exit codes: 0 success, 1 invalid input, 2 any other
failure.
"""
import argparse
import logging
import os
import sys
from collections import OrderedDict
from typing import Any, Dict, List, Optional

import yaml

from pdnet.clustering import (build_cluster_model, load_manifest, save_manifest, polysemy_stats, polysemic_verbs)
from pdnet.diffmath import primitive_checks
from pdnet.embeddings import load_table
from pdnet.errors import ConfigError, PdNetError
from pdnet.evaluation import (detect, evaluate, emit_attention_report, emit_report, emit_verb_report, rare_categories,
                              save_detections, summary_value, write_table)
from pdnet.features import Dataset, load_dataset, load_vocabulary
from pdnet.network import AblationConfig, ablation_from_mapping, composed_checks
from pdnet.synthetic import SynthConfig, generate_synthetic, synth_config_from_mapping
from pdnet.training import (TRAIN_KEYS, load_checkpoint, plot_train_log, save_checkpoint, train,
                            train_config_from_mapping, write_train_log)

logger = logging.getLogger(__name__)

DATA_KEYS = OrderedDict([
    ("data", "runs/synth"),
    ("embeddings", None),
    ("vocabulary", None),
    ("full_vocabulary", None),
    ("train", None),
    ("test", None),
    ("unseen", None),
])
DATA_FILES = {
    "embeddings": "embeddings.txt",
    "vocabulary": "vocabulary.json",
    "full_vocabulary": "vocabulary_full.json",
    "train": "train.jsonl",
    "test": "test.jsonl",
    "unseen": "unseen.jsonl",
}
TRAIN_DEFAULTS = OrderedDict([("epochs", 12), ("learning_rate", 1e-3), ("batch_size", 32), ("negative_ratio", 3.0),
                              ("loss_average", True)])
ABLATION_DEFAULTS = OrderedDict(AblationConfig()._asdict())
EVAL_DEFAULTS = OrderedDict([("modes", ["DT", "KO"]), ("format", "csv"), ("threshold", 0.5)])


def _merge(*parts: Dict[str, Any]) -> Dict[str, Any]:
    merged = OrderedDict([("seed", 0), ("out", None)])
    for part in parts:
        merged.update(part)
    return merged


DEFAULTS = {
    "synth": _merge(OrderedDict(SynthConfig()._asdict())),
    "cluster": _merge(DATA_KEYS, OrderedDict([("thresholds", [9, 4, 2]), ("top", 10)])),
    "train": _merge(DATA_KEYS, TRAIN_DEFAULTS, ABLATION_DEFAULTS, OrderedDict([("clusters", None)])),
    "eval": _merge(DATA_KEYS, EVAL_DEFAULTS, OrderedDict([("checkpoint", "runs/train/model.ckpt"), ("clusters", None),
                                                         ("split", "test"), ("zero_shot", False),
                                                         ("scheme", None)])),
    "ablate": _merge(DATA_KEYS, TRAIN_DEFAULTS, EVAL_DEFAULTS,
                     OrderedDict([("configs", ["baseline", "+pamf", "+pamf+lpfa", "+pamf+lpfa+lpca"])])),
    "zero-shot": _merge(DATA_KEYS, TRAIN_DEFAULTS, EVAL_DEFAULTS,
                        OrderedDict((k, v) for k, v in ABLATION_DEFAULTS.items() if k != "scheme"),
                        OrderedDict([("schemes", ["SH", "CSP"])])),
    "grad-check": _merge(OrderedDict([("points", 100), ("k_a", 8), ("k_c", 3), ("tolerance", 1e-4),
                                      ("max_entries", 2)])),
}

_ALL_ON = dict(lpca_variant="full", lpfa=True, pamf=True, scheme="CSP", prior="verb-object")
PRESETS = OrderedDict([
    ("baseline", dict(lpca_variant="off", lpfa=False, pamf=False, scheme="SH")),
    ("+pamf", dict(lpca_variant="off", lpfa=False, pamf=True, scheme="SH")),
    ("+pamf+lpfa", dict(lpca_variant="off", lpfa=True, pamf=True, scheme="SH")),
    ("+pamf+lpfa+lpca", dict(lpca_variant="full", lpfa=True, pamf=True, scheme="SH")),
    ("pdnet", dict(_ALL_ON)),
    ("pdnet-pamf", dict(_ALL_ON, pamf=False)),
    ("pdnet-lpfa", dict(_ALL_ON, lpfa=False)),
    ("pdnet-lpca", dict(_ALL_ON, lpca_variant="off")),
    ("pdnet-csp", dict(_ALL_ON, scheme="SH")),
    ("lpca-full", dict(_ALL_ON)),
    ("lpca-plain-CA", dict(_ALL_ON, lpca_variant="plain-CA")),
    ("lpca-no-S_au", dict(_ALL_ON, lpca_variant="no-S_au")),
    ("lpca-no-C_att", dict(_ALL_ON, lpca_variant="no-C_att")),
    ("lpca-concat-DA", dict(_ALL_ON, lpca_variant="concat-DA")),
    ("SH", dict(_ALL_ON, scheme="SH")),
    ("SP", dict(_ALL_ON, scheme="SP")),
    ("CSP", dict(_ALL_ON, scheme="CSP")),
    ("verb-only", dict(_ALL_ON, prior="verb-only")),
])


class _Parser(argparse.ArgumentParser):
    """Usage errors exit with status 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def build_argparser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-c", "--config", help="Path to YAML configuration file")
    common.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="Override one config key; VALUE is read as YAML")
    common.add_argument("--out", help="Output directory (default runs/<command>)")
    common.add_argument("--seed", type=int, help="Top-level seed")
    common.add_argument("-v", "--verbose", action="store_true", help="Debug logging")
    p = _Parser(prog="pdnet", description="Polysemy-aware verb classification for HOI detection")
    sub = p.add_subparsers(dest="command", metavar="command")
    sub.required = True
    for name, text in (("synth", "write a synthetic polysemy benchmark"),
                       ("cluster", "cluster objects per verb"),
                       ("train", "train a model"),
                       ("eval", "evaluate a checkpoint"),
                       ("ablate", "train and evaluate several configurations"),
                       ("zero-shot", "unseen-object evaluation"),
                       ("grad-check", "finite-difference gradient checks")):
        sub.add_parser(name, parents=[common], help=text, description=text)
    return p


def load_config(command: str, path: Optional[str]) -> Dict[str, Any]:
    cfg = OrderedDict(DEFAULTS[command])
    if path:
        with open(path, "r", encoding="utf-8") as f:
            data = yaml.safe_load(f) or {}
        if not isinstance(data, dict):
            raise ConfigError(f"{path}: expected a mapping of config keys")
        unknown = sorted(set(data) - set(cfg))
        if unknown:
            raise ConfigError(f"{path}: unknown config keys for '{command}': {', '.join(unknown)}")
        cfg.update(data)
    return cfg


def apply_overrides(cfg: Dict[str, Any], args: argparse.Namespace) -> Dict[str, Any]:
    """Override config values with --seed, --out and every --set key=value."""
    if args.seed is not None:
        cfg["seed"] = args.seed
    if args.out is not None:
        cfg["out"] = args.out
    for item in args.set:
        key, sep, raw = item.partition("=")
        if not sep or not key:
            raise ConfigError(f"--set expects KEY=VALUE, got '{item}'")
        if key not in cfg:
            raise ConfigError(f"--set: unknown config key '{key}'")
        cfg[key] = yaml.safe_load(raw) if raw else None
    if not cfg.get("out"):
        cfg["out"] = os.path.join("runs", args.command)
    return cfg


def _plain(value: Any) -> Any:
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    return value


def write_effective_config(cfg: Dict[str, Any], out_dir: str) -> str:
    path = os.path.join(out_dir, "effective_config.yml")
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        yaml.safe_dump(_plain(cfg), f, sort_keys=True, default_flow_style=False)
    return path


def _data_path(cfg: Dict[str, Any], key: str) -> str:
    return cfg.get(key) or os.path.join(cfg["data"], DATA_FILES[key])


def _subset(cfg: Dict[str, Any], keys) -> Dict[str, Any]:
    return OrderedDict((k, cfg[k]) for k in keys if k in cfg)


def _train_config(cfg: Dict[str, Any], ablation: Dict[str, Any]):
    values = _subset(cfg, TRAIN_KEYS)
    values.update(ablation)
    return train_config_from_mapping(values)


def _ext(cfg: Dict[str, Any]) -> str:
    return "md" if str(cfg["format"]).lower() in ("markdown", "md") else "csv"


# commands

def cmd_synth(cfg: Dict[str, Any]) -> int:
    config = synth_config_from_mapping(_subset(cfg, SynthConfig._fields))
    print(f"Loaded config: verbs={config.num_verbs} objects={config.objects_per_verb} "
          f"groups={config.groups_per_verb} K_A={config.k_a} seed={cfg['seed']}")
    bench = generate_synthetic(config, cfg["seed"], cfg["out"])
    print(f"Synthetic: wrote {len(bench.train)} train, {len(bench.test)} test and {len(bench.unseen)} unseen pairs "
          f"to {cfg['out']}")
    return 0


def cmd_cluster(cfg: Dict[str, Any]) -> int:
    embeddings = load_table(_data_path(cfg, "embeddings"))
    table = load_vocabulary(_data_path(cfg, "vocabulary"))
    print(f"Loaded config: {len(table.verbs)} verbs, {len(table)} categories, seed={cfg['seed']}")
    model = build_cluster_model(table, embeddings, cfg["seed"])
    path = os.path.join(cfg["out"], "clusters.json")
    save_manifest(model, path)
    print(f"Clusters: wrote {model.total_clusters()} clusters for {len(model.verbs)} verbs to {path}")
    rows = [[r.threshold, r.verbs, "%.4f" % r.verb_ratio, r.categories, "%.4f" % r.category_ratio]
            for r in polysemy_stats(table, tuple(cfg["thresholds"]))]
    path = os.path.join(cfg["out"], "polysemy.csv")
    write_table(["min_objects", "verbs", "verb_ratio", "categories", "category_ratio"], rows, path)
    print(f"CSV: wrote {len(rows)} rows to {path}")
    rows = [[verb, n] for verb, n in polysemic_verbs(table, cfg["top"])]
    path = os.path.join(cfg["out"], "polysemic_verbs.csv")
    write_table(["verb", "objects"], rows, path)
    print(f"CSV: wrote {len(rows)} rows to {path}")
    return 0


def _load_clusters(path: Optional[str]):
    return load_manifest(path) if path else None


def cmd_train(cfg: Dict[str, Any]) -> int:
    config = _train_config(cfg, _subset(cfg, AblationConfig._fields))
    print(f"Loaded config: scheme={config.scheme} lpca={config.ablation.lpca_variant} lpfa={config.ablation.lpfa} "
          f"pamf={config.ablation.pamf} epochs={config.epochs} lr={config.learning_rate} seed={config.seed}")
    embeddings = load_table(_data_path(cfg, "embeddings"))
    dataset = load_dataset(_data_path(cfg, "train"), vocabulary_path=_data_path(cfg, "vocabulary"))
    model, log = train(dataset, config, embeddings, _load_clusters(cfg["clusters"]))
    _write_training(model, log, cfg["out"])
    return 0


def _write_training(model, log, out_dir: str) -> None:
    path = os.path.join(out_dir, "model.ckpt")
    save_checkpoint(model, path)
    print(f"Checkpoint: wrote {model.parameter_count()} parameters (K_C={model.k_c}) to {path}")
    if model.cluster_model is not None:
        save_manifest(model.cluster_model, os.path.join(out_dir, "clusters.json"))
    path = os.path.join(out_dir, "train_log.csv")
    print(f"CSV: wrote {write_train_log(log, path)} rows to {path}")
    path = os.path.join(out_dir, "train_log.png")
    if plot_train_log(log, path):
        print(f"Plot: wrote {path}")
    else:
        print("[info] matplotlib not found; skipping loss plot.")


def _rare(cfg: Dict[str, Any], categories) -> List:
    path = _data_path(cfg, "train")
    if not os.path.exists(path):
        print(f"[info] {path} not found; Rare / Non-Rare split left empty.")
        return []
    return rare_categories(load_dataset(path), categories)


def _report(cfg: Dict[str, Any], detections, dataset, categories, rare, out_dir: str, tag: str = "report"):
    categories = [tuple(c) for c in categories]
    wanted = set(categories)
    detections = [d for d in detections if (d.verb, d.object) in wanted]
    truths = [g for g in dataset.ground_truths if (g.verb, g.object) in wanted]
    report = evaluate(detections, truths, categories, cfg["modes"], rare, cfg["threshold"])
    ext = _ext(cfg)
    path = os.path.join(out_dir, f"{tag}.{ext}")
    print(f"Report: wrote {emit_report(report, path, cfg['format'])} rows to {path}")
    path = os.path.join(out_dir, f"{tag}_verbs.{ext}")
    emit_verb_report(report, None, path, cfg["format"])
    return report


def _split_dataset(cfg: Dict[str, Any], split: str) -> Dataset:
    vocabulary = "full_vocabulary" if split == "unseen" else "vocabulary"
    base = _data_path(cfg, split)
    gt = base[:-len(".jsonl")] + "_gt.jsonl" if base.endswith(".jsonl") else base + "_gt"
    return load_dataset(base, gt, _data_path(cfg, vocabulary))


def cmd_eval(cfg: Dict[str, Any]) -> int:
    split = cfg["split"]
    if split not in ("test", "unseen", "train"):
        raise ConfigError(f"split must be test, unseen or train, got '{split}'")
    print(f"Loaded config: checkpoint={cfg['checkpoint']} split={split} modes={cfg['modes']}")
    embeddings = load_table(_data_path(cfg, "embeddings"))
    clusters_path = cfg["clusters"] or os.path.join(os.path.dirname(cfg["checkpoint"]), "clusters.json")
    cluster_model = load_manifest(clusters_path) if os.path.exists(clusters_path) else None
    model = load_checkpoint(cfg["checkpoint"], embeddings, cluster_model, cfg["scheme"])
    dataset = _split_dataset(cfg, split)
    zero_shot = bool(cfg["zero_shot"]) or split == "unseen"
    vocabulary = dataset.vocabulary if zero_shot else None
    detections = detect(model, dataset, zero_shot, vocabulary)
    path = os.path.join(cfg["out"], "detections.jsonl")
    print(f"Detections: wrote {save_detections(detections, path)} records to {path}")
    categories = dataset.vocabulary.categories()
    if split == "unseen":
        seen = load_vocabulary(_data_path(cfg, "vocabulary"))
        categories = [c for c in categories if c not in seen]
    rare = [] if split == "unseen" else _rare(cfg, categories)
    _report(cfg, detections, dataset, categories, rare, cfg["out"])
    if model.ablation.pamf:
        path = os.path.join(cfg["out"], f"attention.{_ext(cfg)}")
        print(f"Attention: wrote {emit_attention_report(model, categories, path, cfg['format'])} rows to {path}")
    return 0


def _resolve_configs(entries) -> List:
    resolved = []
    for entry in entries:
        if isinstance(entry, str):
            if entry not in PRESETS:
                raise ConfigError(f"unknown ablation preset '{entry}'; known: {', '.join(PRESETS)}")
            resolved.append((entry, ablation_from_mapping(PRESETS[entry])))
        elif isinstance(entry, dict):
            values = dict(entry)
            name = str(values.pop("name", "config%d" % len(resolved)))
            if "preset" in values:
                base = dict(PRESETS.get(values.pop("preset"), {}))
                base.update(values)
                values = base
            resolved.append((name, ablation_from_mapping(values)))
        else:
            raise ConfigError(f"ablation entries must be preset names or mappings, got {entry!r}")
    return resolved


def cmd_ablate(cfg: Dict[str, Any]) -> int:
    configs = _resolve_configs(cfg["configs"])
    print(f"Loaded config: {len(configs)} configurations, epochs={cfg['epochs']} seed={cfg['seed']}")
    embeddings = load_table(_data_path(cfg, "embeddings"))
    train_set = load_dataset(_data_path(cfg, "train"), vocabulary_path=_data_path(cfg, "vocabulary"))
    test_set = _split_dataset(cfg, "test")
    categories = test_set.vocabulary.categories()
    rare = rare_categories(train_set, categories)
    rows = []
    for name, ablation in configs:
        run_dir = os.path.join(cfg["out"], _slug(name))
        os.makedirs(run_dir, exist_ok=True)
        config = _train_config(cfg, ablation._asdict())
        model, log = train(train_set, config, embeddings)
        write_train_log(log, os.path.join(run_dir, "train_log.csv"))
        report = _report(cfg, detect(model, test_set), test_set, categories, rare, run_dir)
        rows.append([name, ablation.scheme, ablation.lpca_variant, ablation.lpfa, ablation.pamf, ablation.prior] +
                    [_fmt(summary_value(report, mode, split)) for mode in ("DT", "KO") for split in
                     ("Full", "Rare", "Non-Rare")])
        print(f"{name}: mAP Full {rows[-1][6]} Rare {rows[-1][7]} Non-Rare {rows[-1][8]}")
    header = ["config", "scheme", "lpca_variant", "lpfa", "pamf", "prior", "DT_Full", "DT_Rare", "DT_Non-Rare",
              "KO_Full", "KO_Rare", "KO_Non-Rare"]
    path = os.path.join(cfg["out"], f"comparison.{_ext(cfg)}")
    print(f"Comparison: wrote {write_table(header, rows, path, cfg['format'])} rows to {path}")
    return 0


def cmd_zero_shot(cfg: Dict[str, Any]) -> int:
    schemes = [str(s) for s in cfg["schemes"]]
    if "SP" in schemes:
        raise ConfigError("the SP scheme has no classifier for unseen objects; use SH or CSP")
    print(f"Loaded config: schemes={schemes} epochs={cfg['epochs']} seed={cfg['seed']}")
    embeddings = load_table(_data_path(cfg, "embeddings"))
    train_set = load_dataset(_data_path(cfg, "train"), vocabulary_path=_data_path(cfg, "vocabulary"))
    seen = _split_dataset(cfg, "test")
    unseen = _split_dataset(cfg, "unseen")
    full_vocabulary = unseen.vocabulary
    seen_categories = seen.vocabulary.categories()
    unseen_categories = [c for c in full_vocabulary.categories() if c not in seen.vocabulary]
    full = Dataset(seen.pairs + unseen.pairs, seen.ground_truths + unseen.ground_truths, full_vocabulary)
    ablation = _subset(cfg, [k for k in AblationConfig._fields if k != "scheme"])
    rows = []
    for scheme in schemes:
        run_dir = os.path.join(cfg["out"], _slug(scheme))
        os.makedirs(run_dir, exist_ok=True)
        config = _train_config(cfg, dict(ablation, scheme=scheme))
        model, log = train(train_set, config, embeddings)
        write_train_log(log, os.path.join(run_dir, "train_log.csv"))
        results = []
        for tag, dataset, categories in (("unseen", unseen, unseen_categories), ("seen", seen, seen_categories),
                                         ("full", full, full_vocabulary.categories())):
            detections = detect(model, dataset, zero_shot=True, vocabulary=full_vocabulary)
            report = _report(cfg, detections, dataset, categories, [], run_dir, tag)
            results.append(_fmt(summary_value(report, "DT", "Full")))
        rows.append([scheme] + results)
        print(f"{scheme}: Unseen {results[0]} Seen {results[1]} Full {results[2]}")
    path = os.path.join(cfg["out"], f"zero_shot.{_ext(cfg)}")
    print(f"Zero-shot: wrote {write_table(['scheme', 'Unseen', 'Seen', 'Full'], rows, path, cfg['format'])} rows "
          f"to {path}")
    return 0


def cmd_grad_check(cfg: Dict[str, Any]) -> int:
    print(f"Loaded config: points={cfg['points']} K_A={cfg['k_a']} K_C={cfg['k_c']} tolerance={cfg['tolerance']}")
    reports = OrderedDict(primitive_checks(cfg["seed"], cfg["points"], tolerance=cfg["tolerance"]))
    reports.update(composed_checks(cfg["seed"], cfg["points"], cfg["k_a"], cfg["k_c"], cfg["max_entries"],
                                   cfg["tolerance"]))
    rows = [[name, "%.3e" % r.max_rel_error, "pass" if r.passed else "FAIL"] for name, r in reports.items()]
    path = os.path.join(cfg["out"], "grad_check.csv")
    write_table(["check", "max_rel_error", "result"], rows, path)
    for row in rows:
        print(f"{row[0]:>22}  {row[1]}  {row[2]}")
    print(f"CSV: wrote {len(rows)} rows to {path}")
    return 0 if all(r.passed for r in reports.values()) else 2


COMMANDS = {
    "synth": cmd_synth,
    "cluster": cmd_cluster,
    "train": cmd_train,
    "eval": cmd_eval,
    "ablate": cmd_ablate,
    "zero-shot": cmd_zero_shot,
    "grad-check": cmd_grad_check,
}


def _fmt(value: Optional[float]) -> str:
    return "-" if value is None else "%.4f" % value


def _slug(name: str) -> str:
    return "".join(c if c.isalnum() or c in "._-" else "_" for c in name).strip("_") or "config"


def _setup_logging(out_dir: str, verbose: bool) -> List[logging.Handler]:
    root = logging.getLogger()
    root.setLevel(logging.DEBUG if verbose else logging.INFO)
    formatter = logging.Formatter("%(levelname)s %(name)s: %(message)s")
    console = logging.StreamHandler()
    console.setLevel(logging.DEBUG if verbose else logging.WARNING)
    console.setFormatter(formatter)
    run_log = logging.FileHandler(os.path.join(out_dir, "run.log"), mode="w", encoding="utf-8")
    run_log.setFormatter(formatter)
    handlers = [console, run_log]
    for handler in handlers:
        root.addHandler(handler)
    return handlers


def _is_validation_error(error: BaseException) -> bool:
    if isinstance(error, PdNetError):
        return isinstance(error, (ValueError, KeyError, IndexError))
    return isinstance(error, (yaml.YAMLError, IOError, OSError))


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_argparser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    handlers = []
    try:
        cfg = apply_overrides(load_config(args.command, args.config), args)
        os.makedirs(cfg["out"], exist_ok=True)
        handlers = _setup_logging(cfg["out"], args.verbose)
        write_effective_config(cfg, cfg["out"])
        return COMMANDS[args.command](cfg)
    except Exception as e:
        if _is_validation_error(e):
            print(f"error: {e}", file=sys.stderr)
            return 1
        logger.exception("%s failed", args.command)
        print(f"failed: {type(e).__name__}: {e}", file=sys.stderr)
        return 2
    finally:
        root = logging.getLogger()
        for handler in handlers:
            root.removeHandler(handler)
            handler.close()


if __name__ == "__main__":
    sys.exit(main())
