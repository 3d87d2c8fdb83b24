"""Command-line surface: prepare, train, eval, plotdata.

``prepare`` parses a dataset directory, prints its statistics, and writes a
canonical JSON dump. ``train`` runs the three phases (together or one at a
time) and writes checkpoints plus per-epoch loss CSVs. ``eval`` loads the
checkpoints, scores the held-out graphs, and writes report.json and
scores.csv. ``plotdata`` turns a report into histogram and embedding CSVs
for external plotting.

Exit codes: 0 success, 1 internal error, 2 dataset/parse, 3 configuration,
4 phase order, 5 numeric or training fault, 6 undefined metric.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import time

import numpy as np

from .data import (dataset_fingerprint, graphset_to_dict, parse_tudataset)
from .errors import (ConfigError, DatasetError, FlowgadError, NumericFault,
                     PhaseOrderError, TrainingFault, UndefinedMetricError)
from .flow import IdentityFlow
from .pipeline import (ExperimentConfig, ScoreReport, SplitGuard,
                       compute_auc, config_from_dict, export_embeddings,
                       load_encoder, load_flow, load_student,
                       precompute_inputs, reconstruction_score,
                       report_from_dict, resolve_normal_class,
                       run_phase_flow, run_phase_source, run_phase_target,
                       save_encoder, save_flow, save_student, score_graph,
                       score_histogram, subsample_graphset)
from .data import make_anomaly_split
from .synthetic import planted_anomaly_set

EXIT_CODES = (
    (DatasetError, 2),
    (ConfigError, 3),
    (PhaseOrderError, 4),
    (NumericFault, 5),
    (TrainingFault, 5),
    (UndefinedMetricError, 6),
)

_BOOL_WORDS = {"true": True, "false": False, "yes": True, "no": False,
               "1": True, "0": False}
_INT_KEYS = {"gcn_layers", "hidden", "d", "flow_steps", "gin_layers", "k_se",
             "s_epochs", "n_epochs", "t_epochs", "batch_size", "max_graphs"}
_FLOAT_KEYS = {"test_fraction", "alpha", "beta", "s_max", "lr"}
_BOOL_KEYS = {"include_degree", "normalize_nf"}


def parse_config_file(path: str) -> ExperimentConfig:
    """Flat ``key = value`` lines; '#' starts a comment; keys mirror the
    experiment configuration fields. Environment variables never override
    file values."""
    if not os.path.isfile(path):
        raise ConfigError(f"config file not found: {path}")
    raw: dict = {}
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            text = line.split("#", 1)[0].strip()
            if not text:
                continue
            if "=" not in text:
                raise ConfigError(
                    f"{path}:{line_no}: expected 'key = value', got {text!r}")
            key, value = (part.strip() for part in text.split("=", 1))
            if key in raw:
                raise ConfigError(f"{path}:{line_no}: duplicate key {key!r}")
            raw[key] = _parse_value(key, value, path, line_no)
    return config_from_dict(raw)


def _parse_value(key: str, value: str, path: str, line_no: int):
    try:
        if key == "seeds":
            return tuple(int(v) for v in value.split(",") if v.strip())
        if key == "normal_class":
            return value if value == "majority" else int(value)
        if key in _INT_KEYS:
            return int(value)
        if key in _FLOAT_KEYS:
            return float(value)
        if key in _BOOL_KEYS:
            if value.lower() not in _BOOL_WORDS:
                raise ValueError(value)
            return _BOOL_WORDS[value.lower()]
    except ValueError:
        raise ConfigError(
            f"{path}:{line_no}: bad value {value!r} for key {key!r}") from None
    return value


def load_dataset(config: ExperimentConfig):
    """The name "planted" builds the seeded synthetic benchmark; anything
    else is parsed from <data_dir>/<name>/ in TUDataset layout."""
    if config.dataset == "planted":
        return planted_anomaly_set()
    return parse_tudataset(os.path.join(config.data_dir, config.dataset),
                           config.dataset)


def _write_csv(path: str, header: list[str], rows):
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def _loss_csv(path: str, trace: list[float]):
    _write_csv(path, ["epoch", "loss"],
               [[i, repr(v)] for i, v in enumerate(trace)])


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def cmd_prepare(args) -> int:
    gs = parse_tudataset(args.directory, args.name)
    nodes = np.array([g.n for g in gs.graphs], dtype=np.float64)
    edges = np.array([g.num_edges for g in gs.graphs], dtype=np.float64)
    print(f"{gs.name}: {len(gs)} graphs, avg nodes {nodes.mean():.2f}, "
          f"avg edges {edges.mean():.2f} "
          f"(both-directions convention {2 * edges.mean():.2f})")
    labels: dict[int, int] = {}
    for g in gs.graphs:
        labels[g.label] = labels.get(g.label, 0) + 1
    print("labels: " + ", ".join(f"{k}: {v}" for k, v in sorted(labels.items())))
    print(f"fingerprint: {dataset_fingerprint(gs)}")
    out = args.out or f"{args.name}_canonical.json"
    with open(out, "w", encoding="utf-8") as fh:
        json.dump(graphset_to_dict(gs), fh, sort_keys=True,
                  separators=(",", ":"))
        fh.write("\n")
    print(f"wrote {out}")
    return 0


def _apply_overrides(config: ExperimentConfig, args) -> ExperimentConfig:
    if getattr(args, "variant", None):
        config.variant = args.variant
    if getattr(args, "seed_override", None):
        config.seeds = tuple(int(v) for v in args.seed_override.split(","))
    return config.validate()


def _seed_dir(out_dir: str, seed: int) -> str:
    return os.path.join(out_dir, str(seed))


def _default_out_dir(config: ExperimentConfig) -> str:
    return os.path.join("runs", f"{config.dataset}_{config.variant}")


def cmd_train(args) -> int:
    config = _apply_overrides(parse_config_file(args.config), args)
    out_dir = args.out_dir or _default_out_dir(config)
    gs = subsample_graphset(load_dataset(config), config.max_graphs)
    normal = resolve_normal_class(gs, config)
    inputs = precompute_inputs(gs, config)
    config_fp = config.fingerprint()
    phases = (["source", "flow", "target"] if args.phase == "all"
              else [args.phase])
    for seed in config.seeds:
        split = make_anomaly_split(gs, normal, config.test_fraction, seed)
        guard = SplitGuard(split)
        sdir = _seed_dir(out_dir, seed)
        enc_path = os.path.join(sdir, "encoder.ckpt")
        flow_path = os.path.join(sdir, "flow.ckpt")
        tgt_path = os.path.join(sdir, "target.ckpt")

        if "source" in phases:
            encoder, decoder, trace = run_phase_source(
                inputs, guard.take(split.train), config, seed)
            fp = save_encoder(enc_path, encoder, decoder, config_fp)
            _loss_csv(os.path.join(sdir, "loss_source.csv"), trace)
            print(f"seed {seed}: encoder trained "
                  f"(final loss {trace[-1]:.4f})" if trace else
                  f"seed {seed}: encoder written untrained")

        if "flow" in phases and config.variant != "non_st":
            encoder, _, enc_fp = load_encoder(enc_path, config_fp)
            if config.variant == "full":
                flow, trace = run_phase_flow(
                    encoder, inputs, guard.take(split.train), config, seed)
                _loss_csv(os.path.join(sdir, "loss_flow.csv"), trace)
            else:
                flow, trace = IdentityFlow(config.d), []
            save_flow(flow_path, flow, config_fp, enc_fp)
            print(f"seed {seed}: flow written"
                  + (f" (final loss {trace[-1]:.4f})" if trace else " (identity)"))

        if "target" in phases and config.variant != "non_st":
            encoder, _, enc_fp = load_encoder(enc_path, config_fp)
            flow, flow_fp = load_flow(flow_path, config_fp, enc_fp)
            student, trace = run_phase_target(
                encoder, flow, inputs, guard.take(split.train), config, seed)
            save_student(tgt_path, student, config_fp, flow_fp)
            _loss_csv(os.path.join(sdir, "loss_target.csv"), trace)
            print(f"seed {seed}: student trained "
                  + (f"(final loss {trace[-1]:.4f})" if trace else "(no epochs)"))
    return 0


def cmd_eval(args) -> int:
    config = _apply_overrides(parse_config_file(args.config), args)
    out_dir = args.out_dir or _default_out_dir(config)
    gs = subsample_graphset(load_dataset(config), config.max_graphs)
    normal = resolve_normal_class(gs, config)
    inputs = precompute_inputs(gs, config)
    config_fp = config.fingerprint()

    missing = [seed for seed in config.seeds if not os.path.isfile(
        os.path.join(_seed_dir(out_dir, seed), "encoder.ckpt"))]
    if missing:
        raise PhaseOrderError(
            f"no encoder checkpoint for seeds {missing}; run train first")

    per_seed = []
    score_rows = []
    t0 = time.perf_counter()
    for seed in config.seeds:
        sdir = _seed_dir(out_dir, seed)
        split = make_anomaly_split(gs, normal, config.test_fraction, seed)
        encoder, decoder, enc_fp = load_encoder(
            os.path.join(sdir, "encoder.ckpt"), config_fp)
        flow = student = None
        if config.variant != "non_st":
            flow, flow_fp = load_flow(os.path.join(sdir, "flow.ckpt"),
                                      config_fp, enc_fp)
            student, _ = load_student(os.path.join(sdir, "target.ckpt"),
                                      config_fp, flow_fp)
        records = []
        for idx, flag in split.test:
            if config.variant == "non_st":
                raw = reconstruction_score(inputs[idx], encoder, decoder,
                                           config.alpha)
                score = raw
            else:
                score, raw = score_graph(inputs[idx], encoder, flow, student,
                                         config)
            records.append({"graph": idx, "flag": bool(flag),
                            "score": float(score), "raw": float(raw)})
            score_rows.append([seed, idx, int(flag), repr(float(score)),
                               repr(float(raw))])
        auc = compute_auc([r["score"] for r in records],
                          [r["flag"] for r in records])
        per_seed.append({"seed": seed, "auc": auc, "records": records,
                         "traces": {}})
        print(f"seed {seed}: AUC {auc:.4f}")

    aucs = np.array([p["auc"] for p in per_seed])
    report = ScoreReport(
        dataset=gs.name, variant=config.variant, config=config.to_dict(),
        config_fingerprint=config_fp, normal_class=normal, per_seed=per_seed,
        auc_mean=float(aucs.mean()), auc_std=float(aucs.std()),
        phase_seconds={"eval": round(time.perf_counter() - t0, 3)},
        timestamp=time.strftime("%Y-%m-%dT%H:%M:%S"))
    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, "report.json"), "w", encoding="utf-8") as fh:
        json.dump(report.to_dict(), fh, sort_keys=True, indent=1)
        fh.write("\n")
    _write_csv(os.path.join(out_dir, "scores.csv"),
               ["seed", "graph", "flag", "score", "raw"], score_rows)
    print(f"{gs.name} {config.variant} "
          f"{100 * report.auc_mean:.2f}±{100 * report.auc_std:.2f}")
    print(f"wrote {os.path.join(out_dir, 'report.json')}")
    return 0


def cmd_plotdata(args) -> int:
    if not os.path.isfile(args.report):
        raise DatasetError("report file not found", path=args.report)
    with open(args.report, "r", encoding="utf-8") as fh:
        try:
            report = report_from_dict(json.load(fh))
        except (json.JSONDecodeError, KeyError) as exc:
            raise DatasetError(f"malformed report: {exc}", path=args.report) from None
    if not report.per_seed:
        raise DatasetError("report contains no seed results", path=args.report)
    out_dir = args.out_dir or os.path.dirname(os.path.abspath(args.report))

    records = [r for p in report.per_seed for r in p["records"]]
    edges, normal, anomalous = score_histogram(records)
    _write_csv(os.path.join(out_dir, "histogram.csv"),
               ["bin_lo", "bin_hi", "normal", "anomalous"],
               [[repr(float(edges[i])), repr(float(edges[i + 1])),
                 int(normal[i]), int(anomalous[i])]
                for i in range(len(normal))])
    print(f"wrote {os.path.join(out_dir, 'histogram.csv')}")

    run_dir = os.path.dirname(os.path.abspath(args.report))
    config = config_from_dict(report.config)
    config_fp = report.config_fingerprint
    first_seed = report.per_seed[0]["seed"]
    sdir = _seed_dir(run_dir, first_seed)
    if not os.path.isfile(os.path.join(sdir, "encoder.ckpt")):
        print("no checkpoints next to the report; skipping embedding export")
        return 0
    gs = subsample_graphset(load_dataset(config), config.max_graphs)
    inputs = precompute_inputs(gs, config)
    split = make_anomaly_split(gs, report.normal_class, config.test_fraction,
                               first_seed)
    encoder, _, enc_fp = load_encoder(os.path.join(sdir, "encoder.ckpt"),
                                      config_fp)
    flow = student = None
    stages = ["source"]
    if config.variant != "non_st":
        flow, flow_fp = load_flow(os.path.join(sdir, "flow.ckpt"),
                                  config_fp, enc_fp)
        student, _ = load_student(os.path.join(sdir, "target.ckpt"),
                                  config_fp, flow_fp)
        stages += ["flow", "target"]
    d = config.d
    for stage in stages:
        rows = export_embeddings(inputs, split.test, stage, encoder, flow,
                                 student, config)
        _write_csv(os.path.join(out_dir, f"embeddings_{stage}.csv"),
                   ["graph", "flag"] + [f"e{j}" for j in range(d)],
                   [row[:2] + [repr(v) for v in row[2:]] for row in rows])
        print(f"wrote {os.path.join(out_dir, f'embeddings_{stage}.csv')}")
    return 0


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="flowgad",
        description="Graph-level anomaly detection by flow-guided distillation")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("prepare", help="parse a dataset and dump stats + canonical JSON")
    p.add_argument("directory", help="dataset directory")
    p.add_argument("name", help="dataset name (file prefix)")
    p.add_argument("--out", help="canonical JSON path")
    p.set_defaults(fn=cmd_prepare)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--variant", choices=("full", "non_st", "asy_st", "non_nf"))
    common.add_argument("--seed-override", help="comma-separated seed list")
    common.add_argument("--out-dir", help="run directory (default runs/<dataset>_<variant>)")

    p = sub.add_parser("train", parents=[common],
                       help="run training phases and write checkpoints")
    p.add_argument("config", help="key = value config file")
    p.add_argument("--phase", choices=("all", "source", "flow", "target"),
                   default="all")
    p.set_defaults(fn=cmd_train)

    p = sub.add_parser("eval", parents=[common],
                       help="score held-out graphs from checkpoints")
    p.add_argument("config", help="key = value config file")
    p.set_defaults(fn=cmd_eval)

    p = sub.add_parser("plotdata", parents=[common],
                       help="emit histogram and embedding CSVs from a report")
    p.add_argument("report", help="path to report.json")
    p.set_defaults(fn=cmd_plotdata)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except FlowgadError as exc:
        for klass, code in EXIT_CODES:
            if isinstance(exc, klass):
                print(f"error: {exc}", file=sys.stderr)
                return code
        print(f"internal error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
