"""Binary checkpoint format.

Layout (all integers u32 little-endian, all floats f8 little-endian)::

    b"HDPG" | version | manifest length | manifest (UTF-8 JSON)
    then four network blocks: actor, critic, target actor, target critic
    block = layer count | (rows, cols) per layer | per layer: W row-major, then b

The critic's layers are written as state branch, action branch, trunk, heads.
"""
from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..agent import Agent, CriticParams
from ..nn import MlpParams, MlpSpec

MAGIC = b"HDPG"
VERSION = 1
NETWORKS = ("actor", "critic", "target_actor", "target_critic")


class CheckpointError(ValueError):
    pass


@dataclass
class Checkpoint:
    manifest: dict
    actor: MlpParams
    critic: CriticParams
    target_actor: MlpParams
    target_critic: CriticParams


def _shapes(layers) -> list[tuple[int, int]]:
    return [w.shape for w, _ in layers]


def _write_block(fh, layers, flat: np.ndarray):
    shapes = _shapes(layers)
    fh.write(struct.pack("<I", len(shapes)))
    for rows, cols in shapes:
        fh.write(struct.pack("<II", rows, cols))
    # parameters are stored per layer as W then b, exactly the flat buffer order
    fh.write(np.ascontiguousarray(flat, dtype="<f8").tobytes())


def _mlp_layers(p: MlpParams):
    return list(zip(p.weights, p.biases))


def manifest_for(agent: Agent, extra: dict | None = None) -> dict:
    s, a, k, branch, trunk = agent.critic.dims
    m = {
        "format_version": VERSION,
        "algo": agent.config.algo,
        "state_dim": agent.state_dim,
        "act_dim": agent.act_dim,
        "n_heads": agent.n_heads,
        "actor_layers": list(agent.actor.spec.layer_sizes),
        "actor_hidden_activation": agent.actor.spec.hidden_activation,
        "actor_output_activation": agent.actor.spec.output_activation,
        "critic_dims": [s, a, k, branch, trunk],
        "weights": [float(w) for w in agent.weights],
        "updates": agent.updates,
    }
    m.update(extra or {})
    return m


def save_checkpoint(path, agent: Agent, extra: dict | None = None) -> Path:
    path = Path(path)
    manifest = json.dumps(manifest_for(agent, extra), sort_keys=True).encode("utf-8")
    tmp = path.with_suffix(path.suffix + ".tmp")
    with open(tmp, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<II", VERSION, len(manifest)))
        fh.write(manifest)
        _write_block(fh, _mlp_layers(agent.actor), agent.actor.flat)
        _write_block(fh, list(agent.critic.layers()), agent.critic.flat)
        _write_block(fh, _mlp_layers(agent.target_actor), agent.target_actor.flat)
        _write_block(fh, list(agent.target_critic.layers()), agent.target_critic.flat)
    tmp.replace(path)
    return path


class _Reader:
    def __init__(self, data: bytes, path):
        self.data, self.pos, self.path = data, 0, path

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise CheckpointError(f"{self.path}: truncated at byte {self.pos} (wanted {n} more)")
        out = self.data[self.pos:self.pos + n]
        self.pos += n
        return out

    def u32(self) -> int:
        return struct.unpack("<I", self.take(4))[0]

    def block(self, name: str):
        n = self.u32()
        if not 1 <= n <= 64:
            raise CheckpointError(f"{self.path}: {name} has implausible layer count {n}")
        shapes = [(self.u32(), self.u32()) for _ in range(n)]
        count = sum(r * c + r for r, c in shapes)
        flat = np.frombuffer(self.take(8 * count), dtype="<f8").astype(np.float64)
        return shapes, flat


def load_checkpoint(path) -> Checkpoint:
    path = Path(path)
    if not path.is_file():
        raise CheckpointError(f"checkpoint not found: {path}")
    r = _Reader(path.read_bytes(), path)
    if r.take(4) != MAGIC:
        raise CheckpointError(f"{path}: not an HDPG checkpoint (bad magic)")
    version = r.u32()
    if version != VERSION:
        raise CheckpointError(f"{path}: unsupported format version {version}")
    try:
        manifest = json.loads(r.take(r.u32()).decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CheckpointError(f"{path}: corrupt manifest ({exc})") from None

    spec = MlpSpec(tuple(manifest["actor_layers"]), manifest["actor_hidden_activation"],
                   manifest["actor_output_activation"])
    dims = manifest["critic_dims"]
    nets = {}
    for name in NETWORKS:
        shapes, flat = r.block(name)
        if "actor" in name:
            expected, net = spec.shapes, None
            if list(shapes) == list(expected):
                net = MlpParams(spec, flat)
        else:
            net = CriticParams(*dims)
            expected = _shapes(net.layers())
            net = CriticParams(*dims, flat=flat) if list(shapes) == list(expected) else None
        if net is None:
            raise CheckpointError(f"{path}: {name} layer shapes {shapes} disagree with "
                                  f"manifest {list(expected)}")
        nets[name] = net
    if r.pos != len(r.data):
        raise CheckpointError(f"{path}: {len(r.data) - r.pos} trailing bytes")
    return Checkpoint(manifest, **nets)


def restore_agent(agent: Agent, ckpt: Checkpoint) -> Agent:
    """Copy checkpointed parameters into an agent of matching shape."""
    for name in NETWORKS:
        dst, src = getattr(agent, name), getattr(ckpt, name)
        if dst.flat.shape != src.flat.shape:
            raise CheckpointError(f"{name}: agent has {dst.flat.size} parameters, "
                                  f"checkpoint has {src.flat.size}")
        dst.flat[...] = src.flat
    agent.weights = np.array(ckpt.manifest.get("weights", agent.weights), dtype=np.float64)
    return agent
