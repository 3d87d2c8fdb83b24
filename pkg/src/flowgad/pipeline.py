"""Three-phase training orchestration, scoring, AUC, variants, reports.

Phase 1 pre-trains the reconstruction encoder on normal graphs and freezes
it. Phase 2 fits the coupling flow to the frozen embeddings. Phase 3
distills a student network toward the flow outputs. A graph's anomaly score
is the disagreement between student and flow at graph and node level.

Variants swap parts out: ``non_st`` stops after phase 1 and scores by
reconstruction loss; ``asy_st`` drops the flow and distills a student with
the same architecture as the encoder (symmetric pair); ``non_nf`` drops the
flow but keeps the heterogeneous student.

Every piece of randomness draws from a stream derived from (seed, phase),
so phases are individually reproducible, and a split guard vets each graph
index handed to a trainer so test data can never leak into training.
"""

from __future__ import annotations

import hashlib
import json
import time
from dataclasses import dataclass, field, asdict, replace

import numpy as np

from . import autodiff as ad
from .checkpoint import (load_checkpoint, payload_fingerprint, save_checkpoint,
                         verify_chain)
from .data import (AnomalySplit, Graph, GraphSet, majority_class,
                   make_anomaly_split, normalized_adjacency)
from .encoding import build_init_features
from .errors import (ConfigError, ContractViolation, PhaseOrderError,
                     TrainingFault, UndefinedMetricError)
from .flow import GraphFlow, IdentityFlow, train_flow
from .optim import make_rng
from .source import (FeatureDecoder, GcnEncoder, graph_source_loss,
                     pretrain_source)
from .target import GinNetwork, READOUTS, distance, train_target

VARIANTS = ("full", "non_st", "asy_st", "non_nf")

# Normal-class conventions for the common benchmark sets. "majority" means
# the most frequent graph label plays the normal role and everything else
# is anomalous; this is a convention of the anomaly-detection literature,
# not a property of the data. Override per run via the normal_class key.
DATASET_NORMAL_CLASS = {name: "majority" for name in (
    "AIDS", "BZR", "COX2", "DD", "DHFR", "ENZYMES", "NCI1",
    "PROTEINS_full", "IMDB-BINARY", "REDDIT-BINARY", "COLLAB",
    "Tox21_HSE", "Tox21_MMP", "Tox21_p53", "Tox21_PPAR-gamma",
)}


@dataclass
class ExperimentConfig:
    dataset: str = "planted"
    data_dir: str = "data"
    normal_class: object = "majority"   # int label or the string "majority"
    test_fraction: float = 0.15
    seeds: tuple = (0, 1, 2, 3, 4)
    variant: str = "full"
    alpha: float = 0.7
    beta: float = 0.6
    gcn_layers: int = 2
    hidden: int = 16
    d: int = 16
    flow_steps: int = 2
    s_max: float = 2.0
    gin_layers: int = 2
    k_se: int = 16
    include_degree: bool = False
    s_epochs: int = 100
    n_epochs: int = 100
    t_epochs: int = 100
    lr: float = 1e-3
    batch_size: int = 1
    distance: str = "cosine"
    readout: str = "max"
    normalize_nf: bool = True
    max_graphs: int = 0                 # 0 keeps the whole set

    def validate(self) -> "ExperimentConfig":
        if self.variant not in VARIANTS:
            raise ConfigError(f"variant must be one of {VARIANTS}, got {self.variant!r}")
        if not (0.0 <= self.alpha <= 1.0):
            raise ConfigError(f"alpha must lie in [0, 1], got {self.alpha}")
        if not (0.0 <= self.beta <= 1.0):
            raise ConfigError(f"beta must lie in [0, 1], got {self.beta}")
        if not (0.0 < self.test_fraction < 1.0):
            raise ConfigError(f"test_fraction must lie in (0, 1), got {self.test_fraction}")
        if self.d < 2 or self.d % 2 != 0:
            raise ConfigError(f"d must be even and at least 2, got {self.d}")
        if not self.seeds:
            raise ConfigError("seeds must be non-empty")
        for name, v in (("gcn_layers", self.gcn_layers), ("hidden", self.hidden),
                        ("flow_steps", self.flow_steps), ("gin_layers", self.gin_layers),
                        ("k_se", self.k_se), ("batch_size", self.batch_size)):
            if v < 1:
                raise ConfigError(f"{name} must be positive, got {v}")
        for name, v in (("s_epochs", self.s_epochs), ("n_epochs", self.n_epochs),
                        ("t_epochs", self.t_epochs), ("max_graphs", self.max_graphs)):
            if v < 0:
                raise ConfigError(f"{name} must be non-negative, got {v}")
        if self.lr <= 0:
            raise ConfigError(f"lr must be positive, got {self.lr}")
        if self.s_max <= 0:
            raise ConfigError(f"s_max must be positive, got {self.s_max}")
        if self.distance not in ("cosine", "sqeuclidean"):
            raise ConfigError(f"unknown distance {self.distance!r}")
        if self.readout not in READOUTS:
            raise ConfigError(f"unknown readout {self.readout!r}")
        if not isinstance(self.normal_class, int) and self.normal_class != "majority":
            raise ConfigError(
                f"normal_class must be an integer label or 'majority', got {self.normal_class!r}")
        return self

    def to_dict(self) -> dict:
        d = asdict(self)
        d["seeds"] = list(self.seeds)
        return d

    def fingerprint(self) -> str:
        return payload_fingerprint(self.to_dict())


def config_from_dict(d: dict) -> ExperimentConfig:
    known = {f.name for f in ExperimentConfig.__dataclass_fields__.values()}
    unknown = set(d) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    cfg = replace(ExperimentConfig(), **d)
    if isinstance(cfg.seeds, list):
        cfg.seeds = tuple(cfg.seeds)
    return cfg.validate()


# ---------------------------------------------------------------------------
# per-graph precomputation and the split guard
# ---------------------------------------------------------------------------

@dataclass
class GraphInputs:
    n: int
    adjacency: np.ndarray
    a_hat: np.ndarray
    x_init: np.ndarray


def precompute_inputs(gs: GraphSet, config: ExperimentConfig) -> list[GraphInputs]:
    """Adjacency, propagation operator, and initial features per graph.

    Deterministic in (dataset, k_se, include_degree); shared across seeds
    and phases, so it runs once per experiment."""
    out = []
    for g in gs.graphs:
        out.append(GraphInputs(
            n=g.n,
            adjacency=g.adjacency,
            a_hat=normalized_adjacency(g),
            x_init=build_init_features(g, config.k_se, config.include_degree),
        ))
    widths = {gi.x_init.shape[1] for gi in out}
    if len(widths) != 1:
        raise ContractViolation(f"inconsistent feature widths across graphs: {widths}")
    return out


class SplitGuard:
    """Vets every graph index a trainer asks for against the split."""

    def __init__(self, split: AnomalySplit):
        self._train = frozenset(split.train)
        self._test = frozenset(split.test_indices())
        self.seen: set[int] = set()

    def take(self, indices) -> list[int]:
        indices = list(indices)
        leaked = [i for i in indices if i in self._test]
        if leaked:
            raise ContractViolation(
                f"test graphs {leaked[:5]} were requested for training")
        foreign = [i for i in indices if i not in self._train]
        if foreign:
            raise ContractViolation(
                f"graphs {foreign[:5]} are outside the training split")
        self.seen.update(indices)
        return indices


def subsample_graphset(gs: GraphSet, max_graphs: int) -> GraphSet:
    """Label-stratified random subset, fixed internal seed, used for large
    sets where a full run is impractical. Keeps at least one graph of every
    label so splits stay constructible."""
    if max_graphs <= 0 or len(gs) <= max_graphs:
        return gs
    rng = make_rng(0, 77, max_graphs)
    by_label: dict[int, list[int]] = {}
    for i, g in enumerate(gs.graphs):
        by_label.setdefault(g.label, []).append(i)
    keep: list[int] = []
    for label in sorted(by_label):
        members = by_label[label]
        share = max(1, int(round(max_graphs * len(members) / len(gs))))
        picked = rng.permutation(len(members))[:share]
        keep.extend(members[j] for j in picked)
    keep = sorted(keep[:max_graphs])
    return GraphSet(name=gs.name, graphs=[gs.graphs[i] for i in keep],
                    label_vocabulary=set(gs.label_vocabulary))


# ---------------------------------------------------------------------------
# scoring and AUC
# ---------------------------------------------------------------------------

def flow_targets(encoder: GcnEncoder, flow, gi: GraphInputs,
                 readout: str) -> tuple[np.ndarray, np.ndarray]:
    """Latent node matrix and pooled graph vector for one graph, no tape."""
    h = encoder.forward(ad.constant(gi.a_hat), ad.constant(gi.x_init))
    z, _ = flow.forward(h, ad.constant(gi.a_hat))
    z_graph = READOUTS[readout](z)
    return z.data, np.ravel(z_graph.data)


def score_graph(gi: GraphInputs, encoder: GcnEncoder, flow, student,
                config: ExperimentConfig) -> tuple[float, float]:
    """Returns (score, raw). The score averages the graph-level and mean
    node-level disagreement so it lives in [0, 1] under the cosine distance;
    raw is their plain sum."""
    z_nodes, z_graph = flow_targets(encoder, flow, gi, config.readout)
    prop = gi.a_hat if isinstance(student, GcnEncoder) else gi.adjacency
    out = student.forward(ad.constant(prop), ad.constant(gi.x_init))
    s_graph = np.ravel(READOUTS[config.readout](out).data)
    graph_term = distance(s_graph, z_graph, config.distance)
    node_terms = [distance(out.data[i], z_nodes[i], config.distance)
                  for i in range(gi.n)]
    raw = graph_term + float(np.mean(node_terms))
    return raw / 2.0, raw


def reconstruction_score(gi: GraphInputs, encoder: GcnEncoder,
                         decoder: FeatureDecoder, alpha: float) -> float:
    """Per-graph reconstruction loss, the score of the flow-less baseline."""
    loss = graph_source_loss(encoder, decoder, gi.a_hat, gi.adjacency,
                             gi.x_init, alpha)
    return loss.item()


def compute_auc(scores, flags) -> float:
    """Tied-rank AUC: the probability a random anomaly outscores a random
    normal graph, ties counted half."""
    s = np.asarray(scores, dtype=np.float64)
    f = np.asarray(flags, dtype=bool)
    if s.ndim != 1 or s.shape != f.shape:
        raise ContractViolation(f"scores {s.shape} and flags {f.shape} must be 1-D and equal length")
    if not np.all(np.isfinite(s)):
        raise ContractViolation("scores must be finite")
    pos = int(f.sum())
    neg = len(f) - pos
    if pos == 0 or neg == 0:
        raise UndefinedMetricError(
            f"AUC needs both classes; got {pos} anomalous and {neg} normal")
    order = np.argsort(s, kind="mergesort")
    ranks = np.empty(len(s), dtype=np.float64)
    i = 0
    while i < len(s):
        j = i
        while j + 1 < len(s) and s[order[j + 1]] == s[order[i]]:
            j += 1
        ranks[order[i:j + 1]] = 0.5 * (i + j) + 1.0   # mean of 1-based ranks
        i = j + 1
    return float((ranks[f].sum() - pos * (pos + 1) / 2.0) / (pos * neg))


def score_histogram(records, width: float = 0.02):
    """Per-class binned score counts over [0, 1]; out-of-range scores land
    in the edge bins. Returns (edges, normal_counts, anomaly_counts)."""
    nbins = int(round(1.0 / width))
    edges = np.linspace(0.0, 1.0, nbins + 1)
    normal = np.zeros(nbins, dtype=np.int64)
    anomalous = np.zeros(nbins, dtype=np.int64)
    for rec in records:
        b = min(nbins - 1, max(0, int(rec["score"] / width)))
        (anomalous if rec["flag"] else normal)[b] += 1
    return edges, normal, anomalous


# ---------------------------------------------------------------------------
# checkpoint adapters
# ---------------------------------------------------------------------------

def _encoder_arrays(encoder: GcnEncoder, decoder: FeatureDecoder) -> dict:
    arrays = {f"encoder_w{i}": w.data for i, w in enumerate(encoder.weights)}
    arrays.update(decoder_w1=decoder.w1.data, decoder_b1=decoder.b1.data,
                  decoder_w2=decoder.w2.data, decoder_b2=decoder.b2.data)
    return arrays


def save_encoder(path: str, encoder: GcnEncoder, decoder: FeatureDecoder,
                 config_fp: str) -> str:
    meta = {"d_in": encoder.d_in, "hidden": encoder.hidden,
            "d_out": encoder.d_out, "layers": len(encoder.weights)}
    return save_checkpoint(path, "encoder", _encoder_arrays(encoder, decoder),
                           meta, config_fp)


def load_encoder(path: str, config_fp: str):
    payload = load_checkpoint(path, expect_kind="encoder")
    verify_chain(payload, None, config_fp, path)
    meta = payload["meta"]
    rng = make_rng(0)
    encoder = GcnEncoder(meta["d_in"], meta["hidden"], meta["d_out"],
                         meta["layers"], rng)
    for i, w in enumerate(encoder.weights):
        w.data = payload["arrays"][f"encoder_w{i}"]
    encoder.freeze()
    decoder = FeatureDecoder(meta["d_out"], meta["d_in"], rng)
    decoder.w1.data = payload["arrays"]["decoder_w1"]
    decoder.b1.data = payload["arrays"]["decoder_b1"]
    decoder.w2.data = payload["arrays"]["decoder_w2"]
    decoder.b2.data = payload["arrays"]["decoder_b2"]
    return encoder, decoder, payload["fingerprint"]


def save_flow(path: str, flow, config_fp: str, encoder_fp: str) -> str:
    if isinstance(flow, IdentityFlow):
        meta = {"identity": True, "d": flow.d}
        return save_checkpoint(path, "flow", {}, meta, config_fp, encoder_fp)
    arrays = {}
    for si, step in enumerate(flow.steps):
        for name, net in (("f1", step.f1), ("f2", step.f2),
                          ("g1", step.g1), ("g2", step.g2)):
            arrays[f"step{si}_{name}_w_prop"] = net.w_prop.data
            arrays[f"step{si}_{name}_w_lin"] = net.w_lin.data
            arrays[f"step{si}_{name}_bias"] = net.bias.data
    meta = {"identity": False, "d": flow.d, "steps": len(flow.steps),
            "s_max": flow.steps[0].s_max}
    return save_checkpoint(path, "flow", arrays, meta, config_fp, encoder_fp)


def load_flow(path: str, config_fp: str, encoder_fp: str):
    payload = load_checkpoint(path, expect_kind="flow")
    verify_chain(payload, encoder_fp, config_fp, path)
    meta = payload["meta"]
    if meta.get("identity"):
        return IdentityFlow(meta["d"]), payload["fingerprint"]
    flow = GraphFlow(meta["d"], meta["steps"], meta["s_max"], make_rng(0))
    for si, step in enumerate(flow.steps):
        for name, net in (("f1", step.f1), ("f2", step.f2),
                          ("g1", step.g1), ("g2", step.g2)):
            net.w_prop.data = payload["arrays"][f"step{si}_{name}_w_prop"]
            net.w_lin.data = payload["arrays"][f"step{si}_{name}_w_lin"]
            net.bias.data = payload["arrays"][f"step{si}_{name}_bias"]
    for p in flow.params():
        p.requires_grad = False
    return flow, payload["fingerprint"]


def save_student(path: str, student, config_fp: str, flow_fp: str) -> str:
    if isinstance(student, GcnEncoder):
        arrays = {f"w{i}": w.data for i, w in enumerate(student.weights)}
        meta = {"family": "gcn", "d_in": student.d_in, "hidden": student.hidden,
                "d_out": student.d_out, "layers": len(student.weights)}
    else:
        arrays = {}
        for li, layer in enumerate(student.layers):
            arrays[f"layer{li}_w1"] = layer.w1.data
            arrays[f"layer{li}_b1"] = layer.b1.data
            arrays[f"layer{li}_w2"] = layer.w2.data
            arrays[f"layer{li}_b2"] = layer.b2.data
        meta = {"family": "gin", "d_in": student.d_in,
                "hidden": student.layers[0].w1.shape[1],
                "d_out": student.d_out, "layers": len(student.layers),
                "eps": student.layers[0].eps}
    return save_checkpoint(path, "target", arrays, meta, config_fp, flow_fp)


def load_student(path: str, config_fp: str, flow_fp: str):
    payload = load_checkpoint(path, expect_kind="target")
    verify_chain(payload, flow_fp, config_fp, path)
    meta = payload["meta"]
    if meta["family"] == "gcn":
        student = GcnEncoder(meta["d_in"], meta["hidden"], meta["d_out"],
                             meta["layers"], make_rng(0))
        for i, w in enumerate(student.weights):
            w.data = payload["arrays"][f"w{i}"]
    else:
        student = GinNetwork(meta["d_in"], meta["hidden"], meta["d_out"],
                             meta["layers"], make_rng(0), eps=meta["eps"])
        for li, layer in enumerate(student.layers):
            layer.w1.data = payload["arrays"][f"layer{li}_w1"]
            layer.b1.data = payload["arrays"][f"layer{li}_b1"]
            layer.w2.data = payload["arrays"][f"layer{li}_w2"]
            layer.b2.data = payload["arrays"][f"layer{li}_b2"]
    for p in student.params():
        p.requires_grad = False
    return student, payload["fingerprint"]


# ---------------------------------------------------------------------------
# phase runners
# ---------------------------------------------------------------------------

def resolve_normal_class(gs: GraphSet, config: ExperimentConfig) -> int:
    if isinstance(config.normal_class, int):
        return config.normal_class
    return majority_class(gs)


def run_phase_source(inputs, train_idx, config: ExperimentConfig, seed: int):
    d_in = inputs[train_idx[0]].x_init.shape[1]
    triples = [(inputs[i].a_hat, inputs[i].adjacency, inputs[i].x_init)
               for i in train_idx]
    return pretrain_source(
        triples, d_in, hidden=config.hidden, d_out=config.d,
        layers=config.gcn_layers, alpha=config.alpha, epochs=config.s_epochs,
        lr=config.lr, rng=make_rng(seed, 1), batch_size=config.batch_size)


def run_phase_flow(encoder: GcnEncoder, inputs, train_idx,
                   config: ExperimentConfig, seed: int):
    if not encoder.frozen:
        raise PhaseOrderError("encoder must be frozen before the flow phase")
    flow = GraphFlow(config.d, config.flow_steps, config.s_max,
                     make_rng(seed, 2))
    pairs = []
    for i in train_idx:
        gi = inputs[i]
        h = encoder.forward(ad.constant(gi.a_hat), ad.constant(gi.x_init))
        pairs.append((gi.a_hat, h.data))
    trace = train_flow(flow, pairs, epochs=config.n_epochs, lr=config.lr,
                       batch_size=config.batch_size,
                       normalize=config.normalize_nf)
    for p in flow.params():
        p.requires_grad = False
    return flow, trace


def run_phase_target(encoder: GcnEncoder, flow, inputs, train_idx,
                     config: ExperimentConfig, seed: int):
    if not encoder.frozen:
        raise PhaseOrderError("encoder must be frozen before the student phase")
    if any(p.requires_grad for p in flow.params()):
        raise PhaseOrderError("flow must be frozen before the student phase")
    d_in = inputs[train_idx[0]].x_init.shape[1]
    rng = make_rng(seed, 3)
    if config.variant == "asy_st":
        student = GcnEncoder(d_in, config.hidden, config.d,
                             config.gcn_layers, rng)
    else:
        student = GinNetwork(d_in, config.d, config.d, config.gin_layers, rng)
    quads = []
    for i in train_idx:
        gi = inputs[i]
        z_nodes, z_graph = flow_targets(encoder, flow, gi, config.readout)
        prop = gi.a_hat if config.variant == "asy_st" else gi.adjacency
        quads.append((prop, gi.x_init, z_nodes, z_graph))
    trace = train_target(student, quads, beta=config.beta,
                         epochs=config.t_epochs, lr=config.lr,
                         batch_size=config.batch_size, kind=config.distance,
                         readout=config.readout)
    for p in student.params():
        p.requires_grad = False
    return student, trace


@dataclass
class SeedResult:
    seed: int
    auc: float
    records: list          # dicts: graph, flag, score, raw
    traces: dict           # phase -> per-epoch loss list
    split: AnomalySplit
    guard: SplitGuard
    phase_seconds: dict
    models: dict = field(default_factory=dict)


def run_seed(gs: GraphSet, inputs, config: ExperimentConfig, seed: int,
             normal: int) -> SeedResult:
    split = make_anomaly_split(gs, normal, config.test_fraction, seed)
    guard = SplitGuard(split)
    traces: dict = {}
    seconds: dict = {}
    try:
        t0 = time.perf_counter()
        train_idx = guard.take(split.train)
        encoder, decoder, traces["source"] = run_phase_source(
            inputs, train_idx, config, seed)
        seconds["source"] = time.perf_counter() - t0

        flow = student = None
        if config.variant == "full":
            t0 = time.perf_counter()
            flow, traces["flow"] = run_phase_flow(
                encoder, inputs, guard.take(split.train), config, seed)
            seconds["flow"] = time.perf_counter() - t0
        elif config.variant in ("asy_st", "non_nf"):
            flow = IdentityFlow(config.d)
        if config.variant != "non_st":
            t0 = time.perf_counter()
            student, traces["target"] = run_phase_target(
                encoder, flow, inputs, guard.take(split.train), config, seed)
            seconds["target"] = time.perf_counter() - t0

        t0 = time.perf_counter()
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
        seconds["scoring"] = time.perf_counter() - t0
        auc = compute_auc([r["score"] for r in records],
                          [r["flag"] for r in records])
    except (TrainingFault, ContractViolation, PhaseOrderError) as exc:
        exc.args = (f"seed {seed}: {exc.args[0]}",) + exc.args[1:]
        raise
    models = {"encoder": encoder, "decoder": decoder, "flow": flow,
              "student": student}
    return SeedResult(seed=seed, auc=auc, records=records, traces=traces,
                      split=split, guard=guard, phase_seconds=seconds,
                      models=models)


# ---------------------------------------------------------------------------
# experiment driver and report
# ---------------------------------------------------------------------------

@dataclass
class ScoreReport:
    dataset: str
    variant: str
    config: dict
    config_fingerprint: str
    normal_class: int
    per_seed: list          # dicts: seed, auc, records, traces
    auc_mean: float
    auc_std: float
    phase_seconds: dict
    timestamp: str

    def to_dict(self) -> dict:
        return {
            "dataset": self.dataset,
            "variant": self.variant,
            "config": self.config,
            "config_fingerprint": self.config_fingerprint,
            "normal_class": self.normal_class,
            "per_seed": self.per_seed,
            "auc_mean": self.auc_mean,
            "auc_std": self.auc_std,
            "phase_seconds": self.phase_seconds,
            "timestamp": self.timestamp,
        }

    def canonical_bytes(self) -> bytes:
        """Deterministic serialization: wall-clock and timestamp excluded."""
        d = self.to_dict()
        d.pop("phase_seconds")
        d.pop("timestamp")
        return json.dumps(d, sort_keys=True, separators=(",", ":")).encode()


def report_from_dict(d: dict) -> ScoreReport:
    return ScoreReport(
        dataset=d["dataset"], variant=d["variant"], config=d["config"],
        config_fingerprint=d["config_fingerprint"],
        normal_class=d["normal_class"], per_seed=d["per_seed"],
        auc_mean=d["auc_mean"], auc_std=d["auc_std"],
        phase_seconds=d.get("phase_seconds", {}), timestamp=d.get("timestamp", ""))


def run_experiment(gs: GraphSet, config: ExperimentConfig,
                   keep_models: bool = False):
    """Full multi-seed experiment. Returns (ScoreReport, list of SeedResult);
    model objects are dropped from the results unless ``keep_models``."""
    config.validate()
    gs = subsample_graphset(gs, config.max_graphs)
    normal = resolve_normal_class(gs, config)
    inputs = precompute_inputs(gs, config)
    results = []
    for seed in config.seeds:
        results.append(run_seed(gs, inputs, config, seed, normal))
    aucs = np.array([r.auc for r in results])
    seconds: dict = {}
    for r in results:
        for k, v in r.phase_seconds.items():
            seconds[k] = seconds.get(k, 0.0) + v
    per_seed = [{"seed": r.seed, "auc": r.auc, "records": r.records,
                 "traces": r.traces} for r in results]
    report = ScoreReport(
        dataset=gs.name, variant=config.variant, config=config.to_dict(),
        config_fingerprint=config.fingerprint(), normal_class=normal,
        per_seed=per_seed, auc_mean=float(aucs.mean()),
        auc_std=float(aucs.std()),
        phase_seconds={k: round(v, 3) for k, v in seconds.items()},
        timestamp=time.strftime("%Y-%m-%dT%H:%M:%S"))
    if not keep_models:
        for r in results:
            r.models = {}
    return report, results


def export_embeddings(inputs, index_flags, stage: str, encoder: GcnEncoder,
                      flow, student, config: ExperimentConfig) -> list[list]:
    """Rows of (graph index, flag, pooled d-vector) at the requested stage."""
    if stage not in ("source", "flow", "target"):
        raise ConfigError(f"unknown embedding stage {stage!r}")
    if stage == "target" and student is None:
        raise ConfigError(f"variant {config.variant!r} trains no student network")
    rows = []
    for idx, flag in index_flags:
        gi = inputs[idx]
        if stage == "source":
            h = encoder.forward(ad.constant(gi.a_hat), ad.constant(gi.x_init))
            vec = np.ravel(READOUTS[config.readout](h).data)
        elif stage == "flow":
            _, vec = flow_targets(encoder, flow, gi, config.readout)
        else:
            prop = gi.a_hat if isinstance(student, GcnEncoder) else gi.adjacency
            out = student.forward(ad.constant(prop), ad.constant(gi.x_init))
            vec = np.ravel(READOUTS[config.readout](out).data)
        rows.append([int(idx), int(bool(flag))] + [float(v) for v in vec])
    return rows
