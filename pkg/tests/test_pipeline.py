import dataclasses
import os

import numpy as np
import pytest

from flowgad.checkpoint import load_checkpoint
from flowgad.data import make_anomaly_split
from flowgad.errors import (ConfigError, ContractViolation, PhaseOrderError,
                            UndefinedMetricError)
from flowgad.optim import make_rng
from flowgad.pipeline import (ExperimentConfig, SplitGuard, compute_auc,
                              config_from_dict, export_embeddings,
                              load_encoder, load_flow, load_student,
                              precompute_inputs, resolve_normal_class,
                              run_experiment, run_seed, save_encoder,
                              save_flow, save_student, score_graph,
                              score_histogram, subsample_graphset)
from flowgad.synthetic import planted_anomaly_set

TINY = dict(s_epochs=6, n_epochs=6, t_epochs=6, d=8, hidden=8, k_se=8,
            seeds=(0,))


def small_set():
    return planted_anomaly_set(num_normal=14, num_anomalous=5, seed=1)


def auc_bruteforce(scores, flags):
    # O(P*N) pairwise oracle: anomaly above normal counts 1, tie 0.5
    pos = [s for s, f in zip(scores, flags) if f]
    neg = [s for s, f in zip(scores, flags) if not f]
    total = 0.0
    for a in pos:
        for b in neg:
            total += 1.0 if a > b else (0.5 if a == b else 0.0)
    return total / (len(pos) * len(neg))


# --------------------------------------------------------------------- config

def test_config_validation_catches_bad_values():
    good = ExperimentConfig()
    good.validate()
    for field, value in [("variant", "vanilla"), ("alpha", 1.2),
                         ("beta", -0.1), ("d", 7), ("d", 0),
                         ("test_fraction", 0.0), ("seeds", ()),
                         ("lr", 0.0), ("s_epochs", -1),
                         ("distance", "l3"), ("readout", "sum"),
                         ("normal_class", "minority")]:
        cfg = dataclasses.replace(ExperimentConfig(), **{field: value})
        with pytest.raises(ConfigError):
            cfg.validate()


def test_config_fingerprint_tracks_content():
    a = ExperimentConfig()
    b = ExperimentConfig()
    assert a.fingerprint() == b.fingerprint()
    b.alpha = 0.8
    assert a.fingerprint() != b.fingerprint()


def test_config_from_dict_rejects_unknown_keys():
    with pytest.raises(ConfigError, match="mystery"):
        config_from_dict({"mystery": 3})


# ------------------------------------------------------------------------ auc

def test_auc_perfect_separation():
    assert compute_auc([0.9, 0.8, 0.2], [True, True, False]) == 1.0


def test_auc_tie_convention():
    assert compute_auc([0.5, 0.5], [True, False]) == 0.5


def test_auc_matches_bruteforce_on_random_instances(rng):
    for _ in range(40):
        m = int(rng.integers(2, 40))
        scores = np.round(rng.random(m), 2)   # rounding forces ties
        flags = rng.random(m) < 0.4
        if flags.all() or not flags.any():
            continue
        assert compute_auc(scores, flags) == pytest.approx(
            auc_bruteforce(scores, flags), abs=1e-12)


def test_auc_single_class_undefined():
    with pytest.raises(UndefinedMetricError):
        compute_auc([0.1, 0.2], [True, True])
    with pytest.raises(UndefinedMetricError):
        compute_auc([0.1, 0.2], [False, False])


def test_auc_shape_checks():
    with pytest.raises(ContractViolation):
        compute_auc([0.1, 0.2], [True])
    with pytest.raises(ContractViolation):
        compute_auc([np.nan, 0.2], [True, False])


# ------------------------------------------------------------------ histogram

def test_histogram_conserves_counts(rng):
    records = [{"score": float(s), "flag": bool(f)}
               for s, f in zip(rng.random(60), rng.random(60) < 0.3)]
    edges, normal, anomalous = score_histogram(records)
    assert len(edges) == 51
    assert normal.sum() + anomalous.sum() == 60
    assert anomalous.sum() == sum(r["flag"] for r in records)


def test_histogram_clamps_out_of_range():
    records = [{"score": -0.5, "flag": False}, {"score": 3.0, "flag": True}]
    _, normal, anomalous = score_histogram(records)
    assert normal[0] == 1
    assert anomalous[-1] == 1


# ---------------------------------------------------------------- split guard

def test_split_guard_blocks_test_indices():
    gs = small_set()
    split = make_anomaly_split(gs, 0, 0.25, seed=0)
    guard = SplitGuard(split)
    assert guard.take(split.train) == split.train
    assert set(guard.seen) == set(split.train)
    with pytest.raises(ContractViolation):
        guard.take([split.test_indices()[0]])


def test_subsample_is_stratified_and_stable():
    gs = planted_anomaly_set(num_normal=40, num_anomalous=20, seed=2)
    sub1 = subsample_graphset(gs, 30)
    sub2 = subsample_graphset(gs, 30)
    assert len(sub1) <= 30
    labels1 = [g.label for g in sub1.graphs]
    assert labels1 == [g.label for g in sub2.graphs]
    # roughly preserves the 2:1 ratio
    assert labels1.count(0) > labels1.count(1)
    assert subsample_graphset(gs, 0) is gs


# ------------------------------------------------------------- end to end

def test_full_variant_separates_planted_anomalies():
    gs = small_set()
    cfg = ExperimentConfig(**TINY)
    report, results = run_experiment(gs, cfg)
    assert report.auc_mean > 0.8
    assert len(report.per_seed) == 1
    for rec in report.per_seed[0]["records"]:
        assert 0.0 <= rec["score"] <= 1.0
        assert rec["raw"] == pytest.approx(2 * rec["score"])


def test_report_canonical_bytes_deterministic():
    gs = small_set()
    cfg = ExperimentConfig(**TINY)
    r1, _ = run_experiment(gs, cfg)
    r2, _ = run_experiment(gs, cfg)
    assert r1.canonical_bytes() == r2.canonical_bytes()


def test_all_variants_run_and_report():
    gs = small_set()
    for variant in ("non_st", "asy_st", "non_nf"):
        cfg = ExperimentConfig(variant=variant, **TINY)
        report, results = run_experiment(gs, cfg)
        assert report.variant == variant
        assert 0.0 <= report.auc_mean <= 1.0
        traces = results[0].traces
        if variant == "non_st":
            assert set(traces) == {"source"}
        else:
            assert "target" in traces and "flow" not in traces


def test_protocol_purity_on_synthetic_run():
    gs = small_set()
    cfg = ExperimentConfig(**TINY)
    _, results = run_experiment(gs, cfg)
    for res in results:
        test_set = set(res.split.test_indices())
        assert not (res.guard.seen & test_set)
        assert res.guard.seen == set(res.split.train)


def test_multi_seed_aggregation():
    gs = small_set()
    cfg = ExperimentConfig(**{**TINY, "seeds": (0, 1, 2),
                              "s_epochs": 3, "n_epochs": 3, "t_epochs": 3})
    report, results = run_experiment(gs, cfg)
    aucs = [p["auc"] for p in report.per_seed]
    assert report.auc_mean == pytest.approx(np.mean(aucs))
    assert report.auc_std == pytest.approx(np.std(aucs))
    # different seeds must produce different splits
    assert results[0].split.train != results[1].split.train


def test_score_graph_agreement_is_zero(rng):
    # student outputs identical to the flow targets give score 0; the
    # cheapest construction is scoring the source against itself through
    # an identity flow and an identity-like student stub
    from flowgad.source import GcnEncoder

    gs = small_set()
    cfg = ExperimentConfig(**TINY)
    inputs = precompute_inputs(gs, cfg)

    class Echo(GcnEncoder):
        # subclassing keeps the normalized-adjacency routing of real
        # GCN students; forward just replays the teacher pipeline
        def __init__(self, encoder, flow):
            self.encoder, self.flow = encoder, flow

        def forward(self, prop, x):
            h = self.encoder.forward(prop, x)
            z, _ = self.flow.forward(h, prop)
            return z

    _, results = run_experiment(gs, cfg, keep_models=True)
    encoder = results[0].models["encoder"]
    flow = results[0].models["flow"]
    echo = Echo(encoder, flow)
    score, raw = score_graph(inputs[0], encoder, flow, echo, cfg)
    assert score < 1e-9 and raw < 1e-9


def test_run_seed_annotates_failures():
    gs = small_set()
    cfg = ExperimentConfig(**{**TINY, "lr": 1e80})
    inputs = precompute_inputs(gs, cfg)
    with np.errstate(all="ignore"):
        with pytest.raises(Exception, match="seed 0"):
            run_seed(gs, inputs, cfg, 0, 0)


# ------------------------------------------------------------- checkpoints

def _trained_models(tmp_path):
    gs = small_set()
    cfg = ExperimentConfig(**{**TINY, "s_epochs": 2, "n_epochs": 2,
                              "t_epochs": 2})
    _, results = run_experiment(gs, cfg, keep_models=True)
    return gs, cfg, precompute_inputs(gs, cfg), results[0]


def test_checkpoint_roundtrip_preserves_scores(tmp_path):
    gs, cfg, inputs, res = _trained_models(tmp_path)
    fp = cfg.fingerprint()
    enc_fp = save_encoder(str(tmp_path / "e.ckpt"), res.models["encoder"],
                          res.models["decoder"], fp)
    flow_fp = save_flow(str(tmp_path / "f.ckpt"), res.models["flow"], fp, enc_fp)
    save_student(str(tmp_path / "t.ckpt"), res.models["student"], fp, flow_fp)

    encoder, decoder, enc_fp2 = load_encoder(str(tmp_path / "e.ckpt"), fp)
    assert enc_fp2 == enc_fp
    flow, flow_fp2 = load_flow(str(tmp_path / "f.ckpt"), fp, enc_fp)
    student, _ = load_student(str(tmp_path / "t.ckpt"), fp, flow_fp)
    for gi in inputs[:4]:
        orig = score_graph(gi, res.models["encoder"], res.models["flow"],
                           res.models["student"], cfg)
        loaded = score_graph(gi, encoder, flow, student, cfg)
        assert orig == loaded


def test_checkpoint_chain_rejects_stale_upstream(tmp_path):
    gs, cfg, inputs, res = _trained_models(tmp_path)
    fp = cfg.fingerprint()
    enc_fp = save_encoder(str(tmp_path / "e.ckpt"), res.models["encoder"],
                          res.models["decoder"], fp)
    save_flow(str(tmp_path / "f.ckpt"), res.models["flow"], fp, enc_fp)
    with pytest.raises(PhaseOrderError, match="retrained"):
        load_flow(str(tmp_path / "f.ckpt"), fp, "0" * 64)
    with pytest.raises(PhaseOrderError, match="config"):
        load_encoder(str(tmp_path / "e.ckpt"), "1" * 64)


def test_checkpoint_detects_tampering(tmp_path):
    gs, cfg, inputs, res = _trained_models(tmp_path)
    path = str(tmp_path / "e.ckpt")
    save_encoder(path, res.models["encoder"], res.models["decoder"],
                 cfg.fingerprint())
    text = open(path).read()
    with open(path, "w") as fh:
        fh.write(text.replace("encoder_w0", "encoder_wX", 1))
    with pytest.raises(PhaseOrderError, match="verification"):
        load_checkpoint(path)


def test_missing_checkpoint_is_phase_order_error(tmp_path):
    with pytest.raises(PhaseOrderError, match="missing"):
        load_checkpoint(str(tmp_path / "nope.ckpt"))


# ------------------------------------------------------------- embeddings

def test_export_embeddings_shapes_and_stage_check(tmp_path):
    gs, cfg, inputs, res = _trained_models(tmp_path)
    pairs = res.split.test[:3]
    for stage in ("source", "flow", "target"):
        rows = export_embeddings(inputs, pairs, stage, res.models["encoder"],
                                 res.models["flow"], res.models["student"], cfg)
        assert len(rows) == 3
        assert all(len(row) == 2 + cfg.d for row in rows)
    with pytest.raises(ConfigError):
        export_embeddings(inputs, pairs, "latent", res.models["encoder"],
                          res.models["flow"], res.models["student"], cfg)
    rows1 = export_embeddings(inputs, pairs, "source", res.models["encoder"],
                              res.models["flow"], res.models["student"], cfg)
    rows2 = export_embeddings(inputs, pairs, "source", res.models["encoder"],
                              res.models["flow"], res.models["student"], cfg)
    assert rows1 == rows2


def test_resolve_normal_class_majority_and_override():
    gs = small_set()
    assert resolve_normal_class(gs, ExperimentConfig()) == 0
    assert resolve_normal_class(
        gs, ExperimentConfig(normal_class=1)) == 1
