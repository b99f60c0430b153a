"""Command line entry point.

Exit codes: 0 all checks pass, 1 a check failed, 2 configuration error.
"""
from __future__ import annotations

import argparse
import configparser
import csv
import hashlib
import io
import json
import logging
import os
import sys
import time
import warnings
from pathlib import Path

from . import __version__, functions, harness, montecarlo, store
from .process_models import Kind, ParameterDomainError, ProcessSpec, simulate_path

log = logging.getLogger("extito")

SCHEMA = "identity-report/1"
CSV_COLUMNS = ["identity", "dt", "t_checkpoint", "n_paths", "mean_residual", "se_residual",
               "max_abs_residual", "pass"]
SEED_ENV = "EXTITO_SEED"
COMMANDS = ("simulate", "verify-ito", "verify-tanaka", "verify-occupation", "verify-localtime",
            "verify-multidim", "table")

# section -> key -> parser
_float = float
_int = int


def _floats(s):
    return tuple(float(v) for v in s.replace(";", ",").split(",") if v.strip())


def _bool(s):
    v = s.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


SCHEMA_KEYS = {
    "process": {"kind": str, "sigma2": _float, "alpha": _float, "scale": _float,
                "delta": _float, "rate": _float, "jump_dist": str, "jump_scale": _float,
                "a11": _float, "a12": _float, "a22": _float, "x0": _floats},
    "experiment": {"t": _float, "dt": _floats, "n_paths": _int, "seed": _int,
                   "checkpoints": _floats, "start": str, "burn_in": _float, "workers": _int,
                   "level_cells": _int, "identity": str},
    "functions": {"u": str, "f": str, "level": _float, "occupation_f": str, "bandwidth": _float},
    "tolerances": {k: _float for k in harness.DEFAULT_TOLERANCES},
    "output": {"csv_export": _bool},
}


class ConfigurationError(Exception):
    pass


def read_config(path) -> dict:
    """Parse and type-check an INI file; unknown sections or keys are errors."""
    cp = configparser.ConfigParser(interpolation=None)
    try:
        with open(path) as fh:
            cp.read_file(fh)
    except FileNotFoundError:
        raise ConfigurationError(f"config file not found: {path}")
    except configparser.Error as e:
        raise ConfigurationError(f"cannot parse config: {e}")
    out = {s: {} for s in SCHEMA_KEYS}
    for section in cp.sections():
        if section not in SCHEMA_KEYS:
            raise ConfigurationError(f"unknown section [{section}]")
        for key, raw in cp.items(section):
            if key not in SCHEMA_KEYS[section]:
                raise ConfigurationError(f"unknown key '{key}' in [{section}]")
            try:
                out[section][key] = SCHEMA_KEYS[section][key](raw)
            except ValueError as e:
                raise ConfigurationError(f"bad value for '{key}' in [{section}]: {e}")
    return out


def build_spec(p: dict) -> ProcessSpec:
    kind = p.get("kind", "brownian")
    try:
        kind = Kind(kind)
    except ValueError:
        raise ConfigurationError(f"unknown process kind {kind!r}")
    kw = {k: p[k] for k in ("sigma2", "alpha", "scale", "delta", "rate", "jump_dist", "jump_scale")
          if k in p}
    if kind == Kind.BROWNIAN:
        kw.setdefault("sigma2", 1.0)
    if kind == Kind.ALPHA_STABLE:
        kw.setdefault("delta", 0.05)
    if kind == Kind.DIFFUSION_2D:
        a12 = p.get("a12", 0.0)
        kw["a_matrix"] = ((p.get("a11", 1.0), a12), (a12, p.get("a22", 1.0)))
    if "x0" in p:
        x0 = p["x0"]
        kw["x0"] = x0[0] if len(x0) == 1 else tuple(x0)
    elif kind == Kind.DIFFUSION_2D:
        kw["x0"] = (0.0, 0.0)
    try:
        return ProcessSpec(kind, **kw)
    except (ParameterDomainError, TypeError) as e:
        raise ConfigurationError(f"invalid [process]: {e}")


def build_experiment(cfg: dict, seed=None, n_paths=None, dts=None) -> harness.ExperimentConfig:
    e, f, tol = cfg["experiment"], cfg["functions"], cfg["tolerances"]
    spec = build_spec(cfg["process"])
    seed_base = e.get("seed", 0)
    if os.environ.get(SEED_ENV):
        try:
            seed_base = int(os.environ[SEED_ENV])
        except ValueError:
            raise ConfigurationError(f"{SEED_ENV} must be an integer")
    if seed is not None:
        seed_base = seed
    try:
        u = functions.parse(f.get("u", "identity"))
        Ftxt = f.get("f")
        if Ftxt is None:
            F = None
        elif spec.dim == 2:
            F = functions.parse_2d(Ftxt)
        else:
            F = functions.parse(Ftxt)
        occ = functions.parse(f.get("occupation_f", "indicator:-1,1"))
    except (functions.UnsupportedFunction, ValueError) as err:
        raise ConfigurationError(f"unknown function in [functions]: {err}")
    tolerances = dict(harness.DEFAULT_TOLERANCES)
    tolerances.update(tol)
    try:
        return harness.ExperimentConfig(
            spec=spec, u=u, F=F, T=e.get("t", 1.0),
            dts=tuple(sorted(set(dts), reverse=True)) if dts else e.get("dt", (1e-2, 1e-3, 1e-4)),
            n_paths=n_paths if n_paths is not None else e.get("n_paths", 1000),
            seed_base=seed_base, level_cells=e.get("level_cells", 2 ** 8),
            checkpoints=e.get("checkpoints"), start=e.get("start", "fixed"),
            burn_in=e.get("burn_in"), level=f.get("level", 0.0), occupation_f=occ,
            bandwidth=f.get("bandwidth", 0.02), tolerances=tolerances,
            workers=e.get("workers", 1))
    except harness.ConfigError as err:
        raise ConfigurationError(str(err))


def config_hash(cfg: dict, exp: harness.ExperimentConfig) -> str:
    resolved = {"file": cfg, "seed_base": exp.seed_base, "n_paths": exp.n_paths,
                "dts": list(exp.dts)}
    blob = json.dumps(resolved, sort_keys=True, default=str).encode()
    return hashlib.sha256(blob).hexdigest()


def _fmt(x) -> str:
    return repr(float(x))


def rows_to_csv(rows) -> str:
    buf = io.StringIO()
    buf.write(f"# schema: {SCHEMA}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in rows:
        w.writerow([r.identity, _fmt(r.dt), _fmt(r.t_checkpoint), r.n_paths, _fmt(r.mean_residual),
                    _fmt(r.se_residual), _fmt(r.max_abs_residual), "pass" if r.passed else "fail"])
    return buf.getvalue()


def _identity_for(command: str, exp: harness.ExperimentConfig, cfg: dict) -> str:
    if command == "table":
        name = cfg["experiment"].get("identity", "multidim" if exp.spec.dim == 2 else "ito")
        if name not in harness.IDENTITIES:
            raise ConfigurationError(f"unknown identity {name!r}")
        return name
    name = command.removeprefix("verify-")
    if name == "ito" and exp.spec.dim == 2:
        name = "multidim"
    if name == "multidim" and exp.spec.dim != 2:
        raise ConfigurationError("verify-multidim needs kind = diffusion2d")
    if name in ("ito", "multidim") and exp.F is None:
        raise ConfigurationError("missing key 'f' in [functions]")
    if name != "multidim" and exp.spec.dim == 2:
        raise ConfigurationError(f"{command} needs a one-dimensional process")
    return name


def run(command: str, config_path, out_dir, seed=None, n_paths=None, dts=None) -> int:
    t0 = time.perf_counter()
    try:
        if command not in COMMANDS:
            raise ConfigurationError(f"unknown command {command!r}")
        cfg = read_config(config_path)
        exp = build_experiment(cfg, seed, n_paths, dts)
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        manifest = {"version": __version__, "command": command,
                    "catalog": {"report_schema": SCHEMA, "store_format": store.FORMAT_VERSION},
                    "config_hash": config_hash(cfg, exp), "seed_base": exp.seed_base,
                    "n_paths": exp.n_paths, "dts": list(exp.dts), "outputs": [], "checks": {},
                    "timings": {}}
        if command == "simulate":
            ok = _simulate(exp, cfg, out, manifest)
        else:
            identity = _identity_for(command, exp, cfg)
            if command == "table" and len(exp.dts) < 2:
                raise ConfigurationError("≥ 2 dt values required")
            ok = _verify(command, identity, exp, out, manifest)
    except (ConfigurationError, harness.ConfigError) as e:
        log.error("configuration error: %s", e)
        return 2
    manifest["timings"]["total_s"] = round(time.perf_counter() - t0, 3)
    manifest["pass"] = bool(ok)
    (out / "manifest.json").write_text(json.dumps(manifest, indent=1, sort_keys=True) + "\n")
    log.info("%s: %s", command, "pass" if ok else "FAIL")
    return 0 if ok else 1


def _simulate(exp, cfg, out: Path, manifest) -> bool:
    for dt in exp.dts:
        t = time.perf_counter()
        paths = [simulate_path(exp.spec, exp.T, dt, s)
                 for s in montecarlo.path_seeds(exp.seed_base, exp.n_paths)]
        d = out / f"paths_dt{dt!r}"
        store.store_paths(paths, d)
        manifest["outputs"].append(str((d / store.BATCH_FILE).relative_to(out)))
        if cfg["output"].get("csv_export", False):
            csv_file = store.export_csv(paths, d / "paths.csv")
            manifest["outputs"].append(str(csv_file.relative_to(out)))
        manifest["timings"][f"simulate_dt{dt!r}_s"] = round(time.perf_counter() - t, 3)
    return True


def _verify(command, identity, exp, out: Path, manifest) -> bool:
    t = time.perf_counter()
    if command == "table":
        table = harness.convergence_table(exp, identity)
        rows, ok = table.rows, table.passed
        manifest["checks"]["decreasing"] = table.decreasing
    else:
        rows = []
        for dt in exp.dts:
            rows.extend(harness.run_identity(exp, identity, dt))
        finest = [r for r in rows if r.dt == exp.dts[-1]]
        ok = all(r.passed for r in finest)
    name = f"{identity}_{'table' if command == 'table' else 'report'}.csv"
    (out / name).write_text(rows_to_csv(rows))
    manifest["outputs"].append(name)
    manifest["checks"][identity] = bool(ok)
    manifest["checks"]["rows"] = [
        {"dt": r.dt, "t": r.t_checkpoint, "pass": r.passed, **r.extras} for r in rows]
    manifest["timings"][f"{identity}_s"] = round(time.perf_counter() - t, 3)
    if not ok:
        log.warning("%s: some rows fail their tolerance", identity)
    return ok


def make_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="extito", description="Monte Carlo checks of extended Itô "
                                "formulas for symmetric Lévy-type processes.")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", required=True, help="INI configuration file")
    p.add_argument("--out", default="out", help="output directory")
    p.add_argument("--seed", type=int, help="seed base (overrides config and $%s)" % SEED_ENV)
    p.add_argument("--paths", type=int, help="number of paths")
    p.add_argument("--dt", type=float, action="append", help="time step (repeatable)")
    p.add_argument("--quiet", action="store_true")
    return p


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO,
                        format="%(levelname)s %(message)s")
    if args.quiet:
        warnings.simplefilter("ignore")
    return run(args.command, args.config, args.out, args.seed, args.paths, args.dt)


if __name__ == "__main__":
    sys.exit(main())
