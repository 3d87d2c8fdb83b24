"""Phase checkpoints: JSON files carrying parameter arrays plus a hash chain.

Each file stores its kind, architecture metadata, row-major parameter values,
the fingerprint of the config it was produced under, and the fingerprint of
the upstream checkpoint it depends on (flow depends on encoder, student on
flow). Loading a later phase verifies the chain, so a retrained upstream
phase invalidates stale downstream checkpoints instead of silently mixing.

Values serialize through Python floats, whose repr round-trips 64-bit
doubles exactly, so save/load is lossless and byte-stable.
"""

from __future__ import annotations

import hashlib
import json
import os

import numpy as np

from .errors import DatasetError, PhaseOrderError


def _canonical_bytes(payload: dict) -> bytes:
    return json.dumps(payload, sort_keys=True, separators=(",", ":")).encode()


def payload_fingerprint(payload: dict) -> str:
    return hashlib.sha256(_canonical_bytes(payload)).hexdigest()


def save_checkpoint(path: str, kind: str, arrays: dict, meta: dict,
                    config_fingerprint: str,
                    upstream_fingerprint: str | None = None) -> str:
    """Writes the checkpoint and returns its fingerprint."""
    payload = {
        "kind": kind,
        "meta": meta,
        "config_fingerprint": config_fingerprint,
        "upstream_fingerprint": upstream_fingerprint,
        "arrays": {
            name: {"shape": list(a.shape),
                   "data": [float(v) for v in np.ravel(a)]}
            for name, a in arrays.items()
        },
    }
    fingerprint = payload_fingerprint(payload)
    payload["fingerprint"] = fingerprint
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, sort_keys=True, separators=(",", ":"))
        fh.write("\n")
    return fingerprint


def load_checkpoint(path: str, expect_kind: str | None = None) -> dict:
    """Reads a checkpoint, re-verifies its self-fingerprint, and rebuilds
    arrays as float64 ndarrays under the 'arrays' key."""
    if not os.path.isfile(path):
        raise PhaseOrderError(f"checkpoint missing: {path}")
    try:
        with open(path, "r", encoding="utf-8") as fh:
            payload = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise DatasetError(f"unreadable checkpoint: {exc}", path=path) from None
    stored = payload.pop("fingerprint", None)
    actual = payload_fingerprint(payload)
    if stored != actual:
        raise PhaseOrderError(
            f"checkpoint {path} failed verification: stored fingerprint "
            f"{stored} but content hashes to {actual}")
    if expect_kind is not None and payload.get("kind") != expect_kind:
        raise PhaseOrderError(
            f"checkpoint {path} is a {payload.get('kind')!r} checkpoint, "
            f"expected {expect_kind!r}")
    payload["fingerprint"] = actual
    payload["arrays"] = {
        name: np.asarray(entry["data"], dtype=np.float64).reshape(entry["shape"])
        for name, entry in payload["arrays"].items()
    }
    return payload


def verify_chain(payload: dict, upstream_fingerprint: str | None,
                 config_fingerprint: str, path: str):
    """Raises unless the checkpoint was built on exactly these upstreams."""
    if payload.get("config_fingerprint") != config_fingerprint:
        raise PhaseOrderError(
            f"checkpoint {path} was produced under config fingerprint "
            f"{payload.get('config_fingerprint')}, current config is "
            f"{config_fingerprint}; re-run the earlier phase")
    if payload.get("upstream_fingerprint") != upstream_fingerprint:
        raise PhaseOrderError(
            f"checkpoint {path} expected upstream fingerprint "
            f"{upstream_fingerprint} but was built on "
            f"{payload.get('upstream_fingerprint')}; upstream phase was "
            f"retrained after this checkpoint was written")
