import json
import logging
import os
from dataclasses import asdict, dataclass, field
from typing import Dict, List, Mapping, Optional, Tuple

import numpy as np
from dotenv import load_dotenv

from exceptions import ConfigError

VERSION = "0.3.0"

CONFIG_PATH = "config.json"

# Default configuration
DEFAULT_CONFIG = {
    "simulation": {
        "n": 10000,
        "k": 1.0,
        "seed": 20240611,
        "trials": 5,
        "checkpoints": 50,
        "workers": 1,
        "process": "packing"
    },
    "sampling": {
        "vertices": 64,
        "pairs": 64,
        "edges": 64
    },
    "ode": {
        "t_end": 5.0,
        "h": 1e-4
    },
    "bounds": {
        "grid_step": 1e-3,
        "k_min": 0.2,
        "k_max": 3.0
    },
    "tolerances": {
        "band": 0.05,
        "packing_rel": 0.03,
        "tfp_rel": 0.03,
        "open_pairs_rel": 0.05
    },
    "guards": {
        "open_pairs_limit": 5000,
        "oracle_triangle_limit": 100000
    },
    "small_graphs": {
        "max_n": 7,
        "random_count": 200,
        "random_n": 10,
        "random_m": 25
    },
    "scaling": {
        "ns": [3000, 10000, 30000]
    },
    "output": {
        "dir": "results"
    }
}

# Environment variable -> (section, key, caster)
ENV_OVERRIDES = {
    "TRIANGLE_WORKERS": ("simulation", "workers", int),
    "TRIANGLE_SEED": ("simulation", "seed", int),
    "TRIANGLE_OUTPUT_DIR": ("output", "dir", str),
}


def merge_config(default: Dict, user: Dict) -> Dict:
    """Merge user config with default config to ensure all keys exist."""
    result = dict(default)
    for key, value in user.items():
        if isinstance(value, dict) and isinstance(result.get(key), dict):
            result[key] = merge_config(result[key], value)
        else:
            result[key] = value
    return result


def save_config(config: Dict, path: str = CONFIG_PATH) -> bool:
    """Save configuration to file."""
    try:
        with open(path, "w") as f:
            json.dump(config, f, indent=2)
        return True
    except OSError as e:
        logging.error(f"Error saving configuration to {path}: {e}")
        return False


def load_config(path: str = CONFIG_PATH) -> Dict:
    """Load configuration from file or create default if not exists."""
    if os.path.exists(path):
        try:
            with open(path, "r") as f:
                config = json.load(f)
            return merge_config(DEFAULT_CONFIG, config)
        except (OSError, json.JSONDecodeError) as e:
            logging.error(f"Error loading configuration from {path}: {e}")
            return merge_config(DEFAULT_CONFIG, {})
    save_config(DEFAULT_CONFIG, path)
    return merge_config(DEFAULT_CONFIG, {})


def env_overrides(config: Dict) -> Dict:
    """Apply TRIANGLE_* environment variables (and a local .env file) on top of config."""
    load_dotenv()
    result = merge_config(config, {})
    for name, (section, key, caster) in ENV_OVERRIDES.items():
        raw = os.getenv(name)
        if raw is None or raw == "":
            continue
        try:
            result[section] = merge_config(result.get(section, {}), {key: caster(raw)})
        except ValueError:
            raise ConfigError(f"{name}={raw!r} is not a valid {caster.__name__}")
    return result


@dataclass(frozen=True)
class RunConfig:
    """Fully resolved settings for one cli invocation."""
    subcommand: str = "simulate-packing"
    n: int = 10000
    k: float = 1.0
    seed: int = 20240611
    trials: int = 5
    checkpoints: int = 50
    workers: int = 1
    process: str = "packing"
    out: str = "results"
    samples_vertices: int = 64
    samples_pairs: int = 64
    samples_edges: int = 64
    t_end: float = 5.0
    h: float = 1e-4
    grid_step: float = 1e-3
    k_min: float = 0.2
    k_max: float = 3.0
    band: float = 0.05
    packing_rel: float = 0.03
    tfp_rel: float = 0.03
    open_pairs_rel: float = 0.05
    open_pairs_limit: int = 5000
    oracle_triangle_limit: int = 100000
    max_n_small: int = 7
    random_small_graphs: int = 200
    random_small_n: int = 10
    random_small_m: int = 25
    scaling_ns: Tuple[int, ...] = (3000, 10000, 30000)
    graph_file: Optional[str] = None
    graph6_file: Optional[str] = None
    version: str = VERSION
    extra: Dict = field(default_factory=dict)

    @property
    def m(self) -> int:
        """Number of revealed edges, floor(k n^{3/2})."""
        return int(np.floor(self.k * self.n ** 1.5))

    def header(self) -> Dict:
        """Config, seed and version for artifact headers."""
        data = asdict(self)
        data.pop("extra")
        data["m"] = self.m
        data["scaling_ns"] = list(self.scaling_ns)
        return data


def _flatten(config: Dict) -> Dict:
    sim, smp, ode = config["simulation"], config["sampling"], config["ode"]
    bnd, tol, grd = config["bounds"], config["tolerances"], config["guards"]
    small, out = config["small_graphs"], config["output"]
    return {
        "n": sim["n"], "k": sim["k"], "seed": sim["seed"], "trials": sim["trials"],
        "checkpoints": sim["checkpoints"], "workers": sim["workers"], "process": sim["process"],
        "samples_vertices": smp["vertices"], "samples_pairs": smp["pairs"],
        "samples_edges": smp["edges"],
        "t_end": ode["t_end"], "h": ode["h"],
        "grid_step": bnd["grid_step"], "k_min": bnd["k_min"], "k_max": bnd["k_max"],
        "band": tol["band"], "packing_rel": tol["packing_rel"], "tfp_rel": tol["tfp_rel"],
        "open_pairs_rel": tol["open_pairs_rel"],
        "open_pairs_limit": grd["open_pairs_limit"],
        "oracle_triangle_limit": grd["oracle_triangle_limit"],
        "max_n_small": small["max_n"], "random_small_graphs": small["random_count"],
        "random_small_n": small["random_n"], "random_small_m": small["random_m"],
        "scaling_ns": tuple(config["scaling"]["ns"]),
        "out": out["dir"],
    }


def validate_run_config(cfg: RunConfig) -> RunConfig:
    """Raise ConfigError for values no command can run with."""
    problems: List[str] = []
    if cfg.n < 1:
        problems.append(f"n must be >= 1 (got {cfg.n})")
    if cfg.k < 0:
        problems.append(f"k must be >= 0 (got {cfg.k})")
    if cfg.trials < 1:
        problems.append(f"trials must be >= 1 (got {cfg.trials})")
    if cfg.checkpoints < 1:
        problems.append(f"checkpoints must be >= 1 (got {cfg.checkpoints})")
    if cfg.workers < 1:
        problems.append(f"workers must be >= 1 (got {cfg.workers})")
    if cfg.band <= 0:
        problems.append(f"band must be > 0 (got {cfg.band})")
    if cfg.h <= 0:
        problems.append(f"h must be > 0 (got {cfg.h})")
    if cfg.process not in ("packing", "tfp"):
        problems.append(f"process must be 'packing' or 'tfp' (got {cfg.process!r})")
    if cfg.subcommand == "bounds" and not 0 < cfg.grid_step <= 1e-3:
        problems.append(f"grid step must lie in (0, 1e-3] (got {cfg.grid_step})")
    if min(cfg.samples_vertices, cfg.samples_pairs, cfg.samples_edges) < 0:
        problems.append("sample sizes must be nonnegative")
    if cfg.n >= 2 and cfg.m > cfg.n * (cfg.n - 1) // 2:
        problems.append(f"k={cfg.k} asks for {cfg.m} edges but K_{cfg.n} has only {cfg.n * (cfg.n - 1) // 2}")
    if problems:
        raise ConfigError("; ".join(problems))
    return cfg


def build_run_config(overrides: Mapping, config: Optional[Dict] = None) -> RunConfig:
    """Resolve flags > environment > config file > defaults into a RunConfig."""
    if config is None:
        config = load_config()
    values = _flatten(env_overrides(config))
    for key, value in overrides.items():
        if value is None:
            continue
        if key == "samples":
            values["samples_vertices"] = values["samples_pairs"] = values["samples_edges"] = value
        elif key == "scaling_ns":
            values[key] = tuple(value)
        else:
            values[key] = value
    known = {f for f in RunConfig.__dataclass_fields__}
    extra = {key: value for key, value in values.items() if key not in known}
    values = {key: value for key, value in values.items() if key in known}
    return validate_run_config(RunConfig(extra=extra, **values))


def split_seed(seed: int, trial: int) -> Tuple[np.random.Generator, np.random.Generator]:
    """Per-trial generators: (process stream, sampling stream).

    The trial stream is SeedSequence(entropy=seed, spawn_key=(trial,)); it is
    spawned into two children so tracker sampling never perturbs the edge
    stream or the triangle choices.
    """
    trial_seq = np.random.SeedSequence(entropy=seed, spawn_key=(trial,))
    process_seq, sampling_seq = trial_seq.spawn(2)
    return np.random.default_rng(process_seq), np.random.default_rng(sampling_seq)
