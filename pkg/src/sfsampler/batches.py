"""Sample containers and their on-disk form: CSV plus a JSON sidecar.

The CSV is the reproducibility contract (fixed float format, fixed
newlines, digest in the header), so two runs with the same resolved config
and seed produce byte-identical files. Timings live only in the sidecar.
"""

import hashlib
import json
import os
from dataclasses import dataclass, field

import numpy as np


def config_digest(config):
    """SHA-256 over the canonical JSON form of a resolved config dict."""
    blob = json.dumps(config, sort_keys=True, separators=(",", ":"), allow_nan=False)
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()


@dataclass
class SampleBatch:
    """Terminal states of one run plus everything needed to replay it.

    Attributes:
        samples: (n, dim) float array of terminal particle states.
        config: fully resolved, JSON-serializable run description.
        config_digest: SHA-256 of the canonical config JSON.
        seed: root seed the run used.
        wallclock: run duration in seconds (informational only).
        trajectories: optional (n, steps + 1, dim) path array.
    """

    samples: np.ndarray
    config: dict
    config_digest: str
    seed: int
    wallclock: float
    trajectories: np.ndarray | None = field(default=None, repr=False)

    @property
    def n(self):
        return self.samples.shape[0]

    @property
    def dim(self):
        return self.samples.shape[1]


def save_batch(batch, out_dir, stem="samples"):
    """Write ``<stem>.csv`` and ``<stem>.json`` under out_dir.

    Returns:
        dict with the written paths under keys "csv" and "sidecar".
    """
    os.makedirs(out_dir, exist_ok=True)
    csv_path = os.path.join(out_dir, stem + ".csv")
    sidecar_path = os.path.join(out_dir, stem + ".json")
    columns = [f"x{i}" for i in range(batch.dim)]
    with open(csv_path, "w", newline="\n") as fh:
        fh.write(f"# config_digest: {batch.config_digest}\n")
        fh.write(f"# seed: {batch.seed}\n")
        fh.write(",".join(columns) + "\n")
        np.savetxt(fh, batch.samples, fmt="%.17g", delimiter=",")
    sidecar = {
        "columns": columns,
        "config": batch.config,
        "config_digest": batch.config_digest,
        "dim": batch.dim,
        "n": batch.n,
        "seed": batch.seed,
        "wallclock": batch.wallclock,
    }
    with open(sidecar_path, "w") as fh:
        json.dump(sidecar, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return {"csv": csv_path, "sidecar": sidecar_path}


def load_batch(csv_path):
    """Read a batch back from its CSV (and sidecar, if present)."""
    with open(csv_path) as fh:
        digest_line = fh.readline().strip()
        seed_line = fh.readline().strip()
    if not digest_line.startswith("# config_digest:") or not seed_line.startswith("# seed:"):
        raise ValueError(f"{csv_path} does not look like a sample CSV")
    digest = digest_line.split(":", 1)[1].strip()
    seed = int(seed_line.split(":", 1)[1].strip())
    samples = np.loadtxt(csv_path, delimiter=",", skiprows=3, ndmin=2)
    sidecar_path = os.path.splitext(csv_path)[0] + ".json"
    config = {}
    wallclock = float("nan")
    if os.path.exists(sidecar_path):
        with open(sidecar_path) as fh:
            sidecar = json.load(fh)
        config = sidecar.get("config", {})
        wallclock = sidecar.get("wallclock", wallclock)
    return SampleBatch(
        samples=samples,
        config=config,
        config_digest=digest,
        seed=seed,
        wallclock=wallclock,
    )
