import hashlib
import json
import logging
import os
from typing import Any, Dict, List, Mapping, Optional

import pandas as pd

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1
CSV_FLOAT_FORMAT = "%.10g"
UNHASHED_FIELDS = ("workers", "output_dir")


def realization_seed(master_seed: int, experiment: str, index: int) -> int:
    """Derive a 63-bit seed from (master seed, experiment id, counter)"""
    digest = hashlib.blake2b(f"{master_seed}:{experiment}:{index}".encode(), digest_size=8).digest()
    return int.from_bytes(digest, "little") & (2 ** 63 - 1)


def canonical_json(payload: Any) -> str:
    return json.dumps(payload, sort_keys=True, separators=(",", ":"))


def config_hash(config: Mapping[str, Any]) -> str:
    """SHA-256 of the canonical config, ignoring fields that cannot change data bytes"""
    hashed = {k: v for k, v in config.items() if k not in UNHASHED_FIELDS}
    return hashlib.sha256(canonical_json(hashed).encode()).hexdigest()


def file_digest(path: str) -> str:
    with open(path, "rb") as f:
        return hashlib.sha256(f.read()).hexdigest()


def validate_probability(value: float, name: str = "probability") -> bool:
    """Check a probability lies in [0, 1]"""
    return isinstance(value, (int, float)) and 0.0 <= value <= 1.0


def validate_chain_length(n_qubits: int, needs_thirds: bool = False) -> bool:
    """Even chain length, divisible by 6 when I2 thirds are needed"""
    if not isinstance(n_qubits, int) or n_qubits < 2 or n_qubits % 2:
        return False
    return not (needs_thirds and n_qubits % 6)


def format_point(p: float, r: float) -> str:
    """Stable file-name fragment for a (p, r) point"""
    return f"p{p:.4g}_r{r:.4g}".replace(".", "_")


class OutputWriter:
    """Writes CSV/JSON artifacts stamped with the config hash; tracks files for manifest and cleanup."""

    def __init__(self, output_dir: str, cfg_hash: str, master_seed: int):
        self.output_dir = output_dir
        self.cfg_hash = cfg_hash
        self.master_seed = master_seed
        self.outputs: List[Dict[str, Any]] = []
        os.makedirs(output_dir, exist_ok=True)

    def path(self, name: str) -> str:
        return os.path.join(self.output_dir, name)

    def write_csv(self, frame: pd.DataFrame, name: str) -> str:
        path = self.path(name)
        stamped = frame.copy()
        stamped["config_hash"] = self.cfg_hash
        stamped["master_seed"] = str(self.master_seed)
        self._track(path, len(stamped))
        stamped.to_csv(path, index=False, float_format=CSV_FLOAT_FORMAT, lineterminator="\n")
        logger.info(f"Wrote {name} ({len(stamped)} rows)")
        return path

    def write_json(self, payload: Mapping[str, Any], name: str) -> str:
        path = self.path(name)
        body = dict(payload)
        body.update({"config_hash": self.cfg_hash, "master_seed": self.master_seed,
                     "schema_version": SCHEMA_VERSION})
        self._track(path, 1)
        with open(path, "w", encoding="utf8", newline="\n") as f:
            json.dump(body, f, sort_keys=True, indent=2, default=_json_default)
            f.write("\n")
        logger.info(f"Wrote {name}")
        return path

    def _track(self, path: str, rows: int) -> None:
        self.outputs = [o for o in self.outputs if o["path"] != path]
        self.outputs.append({"path": os.path.basename(path), "rows": rows})

    def cleanup(self) -> None:
        """Remove every file this writer produced (used after a failed run)."""
        for out in self.outputs:
            path = self.path(out["path"])
            if os.path.exists(path):
                os.remove(path)
                logger.warning(f"Removed partial output {out['path']}")
        self.outputs = []


def _json_default(value: Any) -> Any:
    if hasattr(value, "item"):
        return value.item()
    if isinstance(value, (set, frozenset, tuple)):
        return list(value)
    raise TypeError(f"{type(value).__name__} is not JSON serializable")


def read_csv_checked(path: str, expected_hash: str) -> Optional[pd.DataFrame]:
    """Load a previously written CSV only if every row carries ``expected_hash``"""
    if not os.path.exists(path):
        return None
    frame = pd.read_csv(path, dtype={"config_hash": str, "master_seed": str})
    if frame.empty or set(frame["config_hash"]) != {expected_hash}:
        logger.info(f"Ignoring {os.path.basename(path)}: config hash differs")
        return None
    return frame.drop(columns=["config_hash", "master_seed"])


def read_json(path: str) -> Dict[str, Any]:
    with open(path, encoding="utf8") as f:
        return json.load(f)
