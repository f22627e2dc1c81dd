"""Command-line entry point.

    hybridqudit <command> [--config run.json] [--set key=value ...] [--seed N] [--out PATH]

Commands: ``simulate``, ``tomo``, ``rhom``, ``distill``, ``entropy``.
Exit codes: 0 success, 2 configuration error, 3 runtime error.
"""
from __future__ import annotations

import argparse
import json
import logging
import re
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable

import numpy as np

from . import __version__
from .chip import PumpConfig, SourceModel, biphoton_state, fringe_frequency, fringe_visibility, rhom_sweep
from .core import (
    average_entanglement_entropy,
    entanglement_entropy,
    fidelity_pure,
    ket_to_dm,
    purity,
)
from .distillation import POSTSELECT_RULES, distill_sweep, distill_table
from .errors import HybridQuditError
from .io import (
    metadata,
    read_counts_csv,
    read_projector_set,
    write_counts_csv,
    write_density_matrix,
    write_table,
)
from .states import REGISTER_DIMS, SIGNAL_QUBITS, STATE_NAMES, mix_with_white_noise, named_state
from .tomography import (
    MleOptions,
    bootstrap_estimate,
    measurement_rank,
    named_projector_set,
    run_mle,
    simulate_counts,
)

log = logging.getLogger(__name__)

COMMANDS = ("simulate", "tomo", "rhom", "distill", "entropy")
EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 2, 3

# experiment names accepted in the config and what they imply
EXPERIMENTS = {
    "ghz4": {"state": "ghz4"},
    "hyper": {"state": "hyper"},
    "bell": {"state": "bell-phi-plus"},
    "rhom": {"command": "rhom"},
    "tomo": {"command": "tomo"},
    "distill": {"command": "distill"},
    "entropy": {"command": "entropy"},
}


class ConfigError(Exception):
    pass


# ---------------------------------------------------------------------------
# config schema


def _int(lo=None):
    def check(v):
        if isinstance(v, bool) or not isinstance(v, int):
            raise ValueError("expected an integer")
        if lo is not None and v < lo:
            raise ValueError(f"must be >= {lo}")
        return v
    return check


def _real(lo=None, hi=None):
    def check(v):
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise ValueError("expected a number")
        v = float(v)
        if not np.isfinite(v):
            raise ValueError("must be finite")
        if (lo is not None and v < lo) or (hi is not None and v > hi):
            raise ValueError(f"must lie in [{lo}, {hi}]")
        return v
    return check


def _choice(*options):
    def check(v):
        if v not in options:
            raise ValueError(f"expected one of {', '.join(map(str, options))}")
        return v
    return check


def _str(v):
    if not isinstance(v, str) or not v:
        raise ValueError("expected a non-empty string")
    return v


def _optional(check):
    return lambda v: None if v is None else check(v)


def _complex(v):
    if isinstance(v, (list, tuple)) and len(v) == 2:
        return complex(_real()(v[0]), _real()(v[1]))
    return complex(_real()(v))


def _pump(v):
    if not isinstance(v, list) or len(v) != 4:
        raise ValueError("expected 4 amplitudes (numbers or [re, im] pairs)")
    return [_complex(x) for x in v]


def _visibility(v):
    if isinstance(v, (int, float)) and not isinstance(v, bool):
        return _real(0.0, 1.0)(v)
    arr = np.asarray(v, dtype=float)
    if arr.shape != (4, 4):
        raise ValueError("expected a number or a 4x4 matrix")
    return arr.tolist()


def _efficiency(v):
    if not isinstance(v, list) or len(v) != 4:
        raise ValueError("expected 4 numbers")
    return [_real(0.0)(x) for x in v]


def _partition(v):
    if not isinstance(v, list) or not v:
        raise ValueError("expected a non-empty list of qubit indices")
    return [_int(0)(x) for x in v]


_GRID_KEYS = {"start": _real(0.0, 1.0), "stop": _real(0.0, 1.0), "count": _int(1)}


def _grid(v):
    if not isinstance(v, dict):
        raise ValueError("expected an object with start, stop, count")
    extra = set(v) - set(_GRID_KEYS)
    if extra:
        raise ValueError(f"unknown key(s) {sorted(extra)}")
    out = {k: check(v[k]) for k, check in _GRID_KEYS.items() if k in v}
    return {"start": 0.0, "stop": 1.0, "count": 101, **out}


SCHEMA: dict[str, tuple[Callable[[Any], Any], Any]] = {
    "experiment": (_optional(_choice(*EXPERIMENTS)), None),
    "state": (_choice("chip", *STATE_NAMES), "hyper"),
    "pump": (_optional(_pump), None),
    "visibility": (_visibility, 1.0),
    "efficiency": (_optional(_efficiency), None),
    "intermodal_weight": (_real(0.0, 1.0), 0.0),
    "noise_lambda": (_real(0.0, 1.0), 1.0),
    "shots": (_int(1), 1_000_000),
    "seed": (_optional(_int()), None),
    "projector_set": (_str, "complete"),
    "counts_file": (_optional(_str), None),
    "bootstrap_resamples": (_int(0), 20),
    "max_iterations": (_int(1), 100_000),
    "convergence_threshold": (_real(1e-300), 1e-10),
    "p_grid": (_grid, {"start": 0.0, "stop": 1.0, "count": 101}),
    "photon": (_choice("signal", "idler"), "idler"),
    "postselect": (_choice(*POSTSELECT_RULES), "correlated"),
    "method": (_choice("stabilizer", "mle"), "stabilizer"),
    "n_points": (_int(4), 1000),
    "rhom_visibility": (_real(0.0, 1.0), 1.0),
    "entropy_base": (_optional(_real(1.0 + 1e-12)), None),
    "partition": (_optional(_partition), None),
    "out": (_optional(_str), None),
}

DEFAULT_OUT = {
    "simulate": "counts.csv",
    "tomo": "rho.json",
    "rhom": "rhom.csv",
    "distill": "distill.csv",
    "entropy": "entropy.json",
}


def _key_lines(text: str) -> dict[str, int]:
    lines = {}
    for n, line in enumerate(text.splitlines(), start=1):
        for key in re.findall(r'"([^"\\]+)"\s*:', line):
            lines.setdefault(key, n)
    return lines


def _reject_duplicates(pairs):
    seen = {}
    for k, v in pairs:
        if k in seen:
            raise ConfigError(f"duplicate key {k!r}")
        seen[k] = v
    return seen


def load_config_text(text: str, source: str = "<config>") -> tuple[dict, dict[str, int]]:
    try:
        doc = json.loads(text, object_pairs_hook=_reject_duplicates)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{source}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
    except ConfigError as exc:
        raise ConfigError(f"{source}: {exc}") from None
    if not isinstance(doc, dict):
        raise ConfigError(f"{source}:1: top level must be a JSON object")
    return doc, _key_lines(text)


def _parse_override(item: str) -> tuple[str, Any]:
    key, sep, raw = item.partition("=")
    if not sep or not key:
        raise ConfigError(f"--set {item!r}: expected key=value")
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return key.strip(), value


def build_config(doc: dict, lines: dict[str, int], overrides: list[str], source: str) -> dict:
    """Validate the raw document plus ``--set`` overrides against the schema."""
    where = {k: f"{source}:{lines.get(k, 1)}" for k in doc}
    raw = dict(doc)
    for n, item in enumerate(overrides, start=1):
        key, value = _parse_override(item)
        top, _, sub = key.partition(".")
        if sub:
            base = raw.get(top)
            base = dict(base) if isinstance(base, dict) else {}
            base[sub] = value
            value = base
        raw[top] = value
        where[top] = f"--set #{n} ({item})"

    unknown = sorted(set(raw) - set(SCHEMA))
    if unknown:
        key = unknown[0]
        raise ConfigError(f"{where[key]}: unknown key {key!r}; allowed keys: {', '.join(sorted(SCHEMA))}")
    cfg = {}
    for key, (check, default) in SCHEMA.items():
        if key not in raw:
            cfg[key] = default
            continue
        try:
            cfg[key] = check(raw[key])
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"{where[key]}: {key}: {exc}") from None
    return cfg


def resolve(command: str, cfg: dict, seed_flag: int | None, out_flag: str | None) -> dict:
    exp = cfg["experiment"]
    if exp is not None:
        implied = EXPERIMENTS[exp]
        if "command" in implied and implied["command"] != command:
            raise ConfigError(f"experiment {exp!r} does not match command {command!r}")
        if "state" in implied:
            cfg["state"] = implied["state"]
    if seed_flag is not None:
        cfg["seed"] = seed_flag
    if out_flag is not None:
        cfg["out"] = out_flag
    if cfg["out"] is None:
        cfg["out"] = DEFAULT_OUT[command]
    if cfg["state"] == "chip" and cfg["pump"] is None:
        raise ConfigError("state 'chip' needs a 'pump' entry")
    if cfg["p_grid"]["start"] > cfg["p_grid"]["stop"]:
        raise ConfigError("p_grid: start exceeds stop")
    needs_seed = command == "simulate" or (
        command == "tomo" and (cfg["counts_file"] is None or cfg["bootstrap_resamples"] > 0)
    )
    if needs_seed and cfg["seed"] is None:
        raise ConfigError(f"command {command!r} is stochastic: pass --seed (or set 'seed' in the config)")
    return cfg


# ---------------------------------------------------------------------------
# experiment helpers


@dataclass
class Prepared:
    rho: np.ndarray
    target: np.ndarray


def prepare_state(cfg: dict) -> Prepared:
    if cfg["state"] == "chip":
        pump = PumpConfig.normalized(cfg["pump"])
        v = cfg["visibility"]
        src_kwargs = {"intermodal_weight": cfg["intermodal_weight"]}
        if cfg["efficiency"] is not None:
            src_kwargs["efficiency"] = np.array(cfg["efficiency"])
        src = SourceModel.uniform(v, **src_kwargs) if isinstance(v, float) else SourceModel(np.array(v), **src_kwargs)
        rho = biphoton_state(pump, src)
        _, vecs = np.linalg.eigh(biphoton_state(pump))
        target = vecs[:, -1]
    else:
        target = named_state(cfg["state"])
        rho = ket_to_dm(target)
    return Prepared(mix_with_white_noise(rho, cfg["noise_lambda"]), target)


def projector_set(cfg: dict, dim: int):
    name = cfg["projector_set"]
    n_qubits = int(round(np.log2(dim)))
    if name in ("complete", "restricted", "restricted-xz"):
        return named_projector_set(name, n_qubits)
    settings = read_projector_set(name)
    if settings[0].dim != dim:
        raise HybridQuditError(f"projector set dimension {settings[0].dim} does not match state dimension {dim}")
    return settings


def _meta(cfg: dict, command: str) -> dict:
    # the output location is not part of the run
    run = {k: v for k, v in cfg.items() if k != "out"}
    return metadata({"command": command, **run}, cfg["seed"], __version__)


def _photon_entropy(rho: np.ndarray, base=None) -> float:
    if rho.shape[0] == 16:
        return entanglement_entropy(rho, REGISTER_DIMS, SIGNAL_QUBITS, base=base)
    return entanglement_entropy(rho, (2, 2), (0,), base=base)


def cmd_simulate(cfg: dict) -> str:
    """Simulate Poisson counts and write a count CSV."""
    prep = prepare_state(cfg)
    settings = projector_set(cfg, prep.rho.shape[0])
    records = simulate_counts(prep.rho, settings, cfg["shots"], cfg["seed"])
    write_counts_csv(cfg["out"], records, _meta(cfg, "simulate"))
    return (
        f"simulate: state={cfg['state']} set={cfg['projector_set']} settings={len(settings)} "
        f"shots={cfg['shots']} records={len(records)} -> {cfg['out']}"
    )


def cmd_tomo(cfg: dict) -> str:
    """Reconstruct a density matrix by maximum likelihood."""
    prep = prepare_state(cfg)
    settings = projector_set(cfg, prep.rho.shape[0])
    if cfg["counts_file"] is not None:
        records = read_counts_csv(cfg["counts_file"])
    else:
        records = simulate_counts(prep.rho, settings, cfg["shots"], cfg["seed"])
    opts = MleOptions(max_iterations=cfg["max_iterations"], convergence_threshold=cfg["convergence_threshold"])
    result = run_mle(records, settings, opts)
    fid = fidelity_pure(result.rho, prep.target)

    stderr = None
    if cfg["bootstrap_resamples"] > 0:
        def estimator(sample):
            return fidelity_pure(run_mle(sample, settings, opts).rho, prep.target)

        n = max(cfg["bootstrap_resamples"], 2)
        stderr = bootstrap_estimate(records, estimator, n, cfg["seed"]).stderr

    entropy = _photon_entropy(result.rho)
    extra = {
        "fidelity": fid,
        "fidelity_stderr": stderr,
        "photon_entropy": entropy,
        "purity": purity(result.rho),
        "iterations": result.iterations,
        "converged": result.converged,
        "measurement_rank": measurement_rank(settings),
        "gauge_freedom": result.gauge_freedom,
    }
    write_density_matrix(cfg["out"], result.rho, _meta(cfg, "tomo"), extra)
    err = f" ± {stderr:.6f}" if stderr is not None else ""
    return (
        f"tomo: state={cfg['state']} set={cfg['projector_set']} fidelity={fid:.6f}{err} "
        f"entropy={entropy:.6f} rank={extra['measurement_rank']} gauge_freedom={result.gauge_freedom} "
        f"converged={str(result.converged).lower()} -> {cfg['out']}"
    )


def cmd_rhom(cfg: dict) -> str:
    """Write coincidence and classical fringes over one period."""
    sweep = rhom_sweep(cfg["n_points"], cfg["rhom_visibility"])
    rows = zip(sweep["phi"], sweep["coincidence"], sweep["classical"])
    write_table(cfg["out"], ("phi", "coincidence", "classical"), rows, _meta(cfg, "rhom"))
    vis = fringe_visibility(sweep["coincidence"])
    ratio = fringe_frequency(sweep["phi"], sweep["coincidence"]) / fringe_frequency(sweep["phi"], sweep["classical"])
    return f"rhom: visibility={vis:.6f} frequency_ratio={ratio:.6f} points={cfg['n_points']} -> {cfg['out']}"


def cmd_distill(cfg: dict) -> str:
    """Sweep the bit-flip probability with and without distillation."""
    prep = prepare_state(cfg)
    g = cfg["p_grid"]
    grid = np.linspace(g["start"], g["stop"], g["count"])
    if cfg["method"] == "stabilizer":
        rows = distill_table(prep.rho, grid, cfg["photon"], cfg["postselect"])
        table = [(r.p, r.fidelity_no_distill, r.fidelity_distill, r.success_probability) for r in rows]
    else:
        plain = distill_sweep(prep.rho, grid, False, cfg["photon"], "mle", cfg["postselect"])
        dist = distill_sweep(prep.rho, grid, True, cfg["photon"], "mle", cfg["postselect"])
        table = [(a.p, a.fidelity, b.fidelity, b.success_probability) for a, b in zip(plain, dist)]
    columns = ("p", "fidelity_no_distill", "fidelity_distill", "success_probability")
    write_table(cfg["out"], columns, table, _meta(cfg, "distill"))
    gains = [d - n for p, n, d, _ in table if p <= 0.5 + 1e-12 and np.isfinite(d)]
    gain = f" mean_gain(p<=0.5)={np.mean(gains):.6f}" if gains else ""
    return f"distill: state={cfg['state']} method={cfg['method']} points={len(table)}{gain} -> {cfg['out']}"


def cmd_entropy(cfg: dict) -> str:
    """Entanglement entropy across the photon cut and per qubit."""
    prep = prepare_state(cfg)
    rho = prep.rho
    n_qubits = int(round(np.log2(rho.shape[0])))
    dims = (2,) * n_qubits
    if cfg["partition"] is not None:
        cut = entanglement_entropy(rho, dims, cfg["partition"], base=cfg["entropy_base"])
        label = "partition"
    else:
        cut = _photon_entropy(rho, cfg["entropy_base"])
        label = "photon_cut"
    avg = average_entanglement_entropy(rho, dims, base=cfg["entropy_base"])
    doc = {"metadata": _meta(cfg, "entropy"), label: cut, "average_qubit": avg}
    Path(cfg["out"]).write_text(json.dumps(doc, indent=1) + "\n", encoding="utf-8")
    return f"entropy: state={cfg['state']} {label}={cut:.6f} average_qubit={avg:.6f} -> {cfg['out']}"


HANDLERS = {
    "simulate": cmd_simulate,
    "tomo": cmd_tomo,
    "rhom": cmd_rhom,
    "distill": cmd_distill,
    "entropy": cmd_entropy,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hybridqudit", description="Two-photon hybrid qudit simulator.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name, help=(HANDLERS[name].__doc__ or name))
        p.add_argument("--config", help="JSON run configuration")
        p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", help="override a config key")
        p.add_argument("--seed", type=int, help="random seed (required for stochastic commands)")
        p.add_argument("--out", help="output file")
        p.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.ERROR, format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.config:
            source = args.config
            try:
                text = Path(source).read_text(encoding="utf-8")
            except OSError as exc:
                raise ConfigError(f"{source}: cannot read config: {exc.strerror}") from None
            doc, lines = load_config_text(text, source)
        else:
            source, doc, lines = "<defaults>", {}, {}
        cfg = build_config(doc, lines, args.set, source)
        cfg = resolve(args.command, cfg, args.seed, args.out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        print(HANDLERS[args.command](cfg))
    except (HybridQuditError, OSError, ValueError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
