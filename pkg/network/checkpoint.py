"""
Checkpoint file format:

    attnseg-v1\\n
    <header byte length>\\n
    <JSON header: model_config, tensor index (name, dtype, shape, offset, nbytes), extra>
    <raw little-endian tensor bytes, in index order>

Identical parameters give byte-identical files.
"""

import json
import logging
from typing import Dict, Optional, Tuple

import numpy as np
import torch

from config import Config
from models.model_config import ModelConfig
from utils.error_handlers import CheckpointError
from utils.io_utils import atomic_write_bytes

logger = logging.getLogger('attnseg.network.checkpoint')

MAGIC = Config.CHECKPOINT_MAGIC


def _tensor_bytes(tensor: torch.Tensor) -> Tuple[str, bytes]:
    array = tensor.detach().cpu().contiguous().numpy()
    array = array.astype(array.dtype.newbyteorder("<"), copy=False)
    return array.dtype.str, array.tobytes(order="C")


def encode_state(state_dict: Dict[str, torch.Tensor], model_config: ModelConfig,
                 extra: Optional[Dict] = None) -> bytes:
    index = []
    blobs = []
    offset = 0
    for name in sorted(state_dict):
        dtype, payload = _tensor_bytes(state_dict[name])
        index.append({
            "name": name,
            "dtype": dtype,
            "shape": list(state_dict[name].shape),
            "offset": offset,
            "nbytes": len(payload),
        })
        blobs.append(payload)
        offset += len(payload)

    header = json.dumps({
        "model_config": model_config.to_dict(),
        "tensors": index,
        "extra": extra or {},
    }, sort_keys=True, separators=(",", ":")).encode("utf-8")
    return b"".join([MAGIC.encode("ascii"), b"\n", str(len(header)).encode("ascii"), b"\n",
                     header] + blobs)


def decode_state(payload: bytes, source: str = "<bytes>") -> Tuple[Dict[str, torch.Tensor], ModelConfig, Dict]:
    magic_line, sep, rest = payload.partition(b"\n")
    if not sep or magic_line.decode("ascii", errors="replace") != MAGIC:
        raise CheckpointError(f"{source}: not an {MAGIC} checkpoint")
    length_line, sep, rest = rest.partition(b"\n")
    try:
        header_length = int(length_line)
        header = json.loads(rest[:header_length].decode("utf-8"))
    except (ValueError, UnicodeDecodeError) as e:
        raise CheckpointError(f"{source}: corrupt header: {e}")

    data = rest[header_length:]
    state_dict = {}
    for entry in header["tensors"]:
        start, stop = entry["offset"], entry["offset"] + entry["nbytes"]
        if stop > len(data):
            raise CheckpointError(f"{source}: truncated tensor data", [entry["name"]])
        array = np.frombuffer(data[start:stop], dtype=np.dtype(entry["dtype"]))
        state_dict[entry["name"]] = torch.from_numpy(array.reshape(entry["shape"]).copy())
    return state_dict, ModelConfig.from_dict(header["model_config"]), header.get("extra", {})


def save_checkpoint(model, path: str, extra: Optional[Dict] = None) -> str:
    """Atomic write of the model's parameters, buffers and config"""
    atomic_write_bytes(path, encode_state(model.state_dict(), model.config, extra))
    logger.debug(f"💾 Checkpoint written to {path}")
    return path


def read_checkpoint(path: str):
    try:
        with open(path, "rb") as f:
            payload = f.read()
    except OSError as e:
        raise CheckpointError(f"Unreadable checkpoint {path}: {e}")
    return decode_state(payload, path)


def _load_into(module: torch.nn.Module, state_dict: Dict[str, torch.Tensor], what: str,
               optional: Tuple[str, ...] = ()):
    """Strict load, except that tensors under an optional prefix may be absent"""
    expected = module.state_dict()
    missing = sorted(name for name in set(expected) - set(state_dict)
                     if not name.startswith(optional))
    unexpected = sorted(set(state_dict) - set(expected))
    mismatched = sorted(name for name in set(expected) & set(state_dict)
                        if tuple(expected[name].shape) != tuple(state_dict[name].shape))
    if missing or unexpected or mismatched:
        names = ([f"missing:{n}" for n in missing] + [f"unexpected:{n}" for n in unexpected]
                 + [f"shape:{n} {tuple(state_dict[n].shape)} != {tuple(expected[n].shape)}"
                    for n in mismatched])
        raise CheckpointError(f"{what} is incompatible with the model ({len(names)} tensors)", names)
    module.load_state_dict(state_dict, strict=not optional)


def load_checkpoint(path: str):
    """Rebuild the model stored in a checkpoint; returns (model, extra)"""
    from network.segclass_net import SegClassNet

    state_dict, model_config, extra = read_checkpoint(path)
    model = SegClassNet(model_config.validate())
    _load_into(model, state_dict, path)
    model.eval()
    logger.info(f"📦 Loaded checkpoint {path} ({model_config.backbone.value})")
    return model, extra


def load_encoder_weights(model, path: str):
    """
    Load encoder weights from a torch-saved state dict (optionally nested under
    'state_dict' and/or prefixed with 'encoder.'), a torchvision ResNet-18 state dict
    (resnet backbone only) or an attnseg checkpoint.
    """
    try:
        with open(path, "rb") as f:
            head = f.read(len(MAGIC))
    except OSError as e:
        raise CheckpointError(f"Unreadable weight file {path}: {e}")
    if head == MAGIC.encode("ascii"):
        state_dict, _, _ = read_checkpoint(path)
    else:
        try:
            state_dict = torch.load(path, map_location="cpu", weights_only=True)
        except Exception as e:
            raise CheckpointError(f"Unreadable weight file {path}: {e}")
        if isinstance(state_dict, dict) and "state_dict" in state_dict:
            state_dict = state_dict["state_dict"]
        if not isinstance(state_dict, dict):
            raise CheckpointError(f"{path} does not hold a state dict")

    if any(name.startswith("encoder.") for name in state_dict):
        state_dict = {name[len("encoder."):]: tensor for name, tensor in state_dict.items()
                      if name.startswith("encoder.")}
    encoder = model.encoder
    optional = ()
    if hasattr(encoder, "adapt_pretrained"):
        state_dict = encoder.adapt_pretrained(state_dict)
        optional = encoder.PRETRAINED_OPTIONAL
    _load_into(encoder, state_dict, f"weight file {path}", optional)
    logger.info(f"✅ Encoder initialized from {path}")
