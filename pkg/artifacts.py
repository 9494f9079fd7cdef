import json
import logging
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import numpy as np
import pandas as pd

FLOAT_FORMAT = "%.12g"


def _header_value(value) -> str:
    if isinstance(value, (list, tuple, dict)):
        return json.dumps(value, sort_keys=True)
    return str(value)


def _json_default(value):
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, (set, tuple)):
        return list(value)
    raise TypeError(f"{type(value).__name__} is not JSON serializable")


class ArtifactManager:
    """Writes and reads the CSV / JSON / gnuplot artifacts of a results directory."""

    def __init__(self, output_dir: str = "results"):
        self.output_dir = Path(output_dir)
        self.output_dir.mkdir(parents=True, exist_ok=True)

    def path_for(self, name: str) -> Path:
        return self.output_dir / name

    def write_frame(self, name: str, frame: pd.DataFrame, header: Optional[Dict] = None) -> Path:
        """CSV with '# key: value' header lines; numbers at 12 significant digits."""
        path = self.path_for(name)
        with open(path, "w", newline="") as f:
            for key in sorted(header or {}):
                f.write(f"# {key}: {_header_value(header[key])}\n")
            frame.to_csv(f, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
        logging.info(f"wrote {len(frame)} rows to {path}")
        return path

    def write_json(self, name: str, payload: Dict, header: Optional[Dict] = None) -> Path:
        path = self.path_for(name)
        document = dict(payload)
        document["header"] = header or {}
        with open(path, "w") as f:
            json.dump(document, f, indent=2, sort_keys=True, default=_json_default)
            f.write("\n")
        logging.info(f"wrote {path}")
        return path

    def write_gnuplot(self, name: str, frame: pd.DataFrame, columns: Sequence[str]) -> Path:
        """Whitespace-separated data file; the column names go in a leading comment."""
        path = self.path_for(name)
        missing = [c for c in columns if c not in frame.columns]
        if missing:
            raise KeyError(f"columns not in frame: {missing}")
        with open(path, "w") as f:
            f.write("# " + " ".join(columns) + "\n")
            frame[list(columns)].to_csv(f, sep=" ", index=False, header=False,
                                        float_format=FLOAT_FORMAT, lineterminator="\n")
        return path

    def read_header(self, path) -> Dict[str, str]:
        header = {}
        with open(path, "r") as f:
            for line in f:
                if not line.startswith("# "):
                    break
                key, _, value = line[2:].rstrip("\n").partition(": ")
                header[key] = value
        return header

    def read_frame(self, path) -> pd.DataFrame:
        return pd.read_csv(path, comment="#")

    def read_json(self, path) -> Dict:
        with open(path, "r") as f:
            return json.load(f)

    def list_runs(self, pattern: str = "*") -> List[Path]:
        """Artifact files in the output directory, sorted by name."""
        return sorted(p for p in self.output_dir.glob(pattern)
                      if p.is_file() and p.suffix in (".csv", ".json", ".dat"))


# Singleton instance
_artifact_manager = None


def get_artifact_manager(output_dir: str = "results") -> ArtifactManager:
    """Get the artifact manager for output_dir, reusing it while the directory is unchanged."""
    global _artifact_manager
    if _artifact_manager is None or _artifact_manager.output_dir != Path(output_dir):
        _artifact_manager = ArtifactManager(output_dir)
    return _artifact_manager
