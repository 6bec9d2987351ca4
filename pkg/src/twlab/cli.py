"""Command-line front end: ``twlab <command> --config <file> [--out DIR] [--n LIST] [--quiet]``.

Every run writes ``manifest.json`` (the resolved configuration and library
versions), one CSV per table, one JSON file per record and ``checks.json``.
Exit status: 0 success, 2 a check failed, 3 a solver did not converge,
4 configuration error, 1 any other library error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import platform
import sys
import warnings
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
import scipy
import yaml

from twlab import __version__
from twlab.baes import (BaeSystem, Continuation, DensityQuantile, bae_residual, newton_solve,
                        seed_roots)
from twlab.chainops import ChainSpec, Open, Periodic
from twlab.errors import ConfigError, TwlabError
from twlab.spectra import (classify_strings, ground_state, ground_state_polynomials, spectrum,
                           verify_identity_suite)
from twlab.thermo import decay_ratio, gs_energy_closed, lambda_per_site, w_g_closed

log = logging.getLogger("twlab")

EXIT_OK, EXIT_ERROR, EXIT_CHECK, EXIT_NONCONVERGED, EXIT_CONFIG = 0, 1, 2, 3, 4

COMMANDS = ("verify", "spectrum", "roots", "bae", "thermo", "decay", "figures")
GROUND_STATE_COMMANDS = {"roots", "bae", "thermo", "decay", "figures"}
DEFAULT_TRIAL_POINTS = ("0.31+0.17j", "-0.42+0.23j", "0.57-0.11j")
DEFAULT_TOLERANCES = {"newton": 1e-12, "max_iter": 200, "bae_residual": 1e-7}
DEFAULT_FIGURE_SWEEP = {"periodic": [6, 8, 10, 12], "open": [6]}

TOP_KEYS = {"command", "n", "eta", "thetas", "boundary", "sweep", "output_dir",
            "seed_strategy", "tolerances", "u", "trial_points"}
BOUNDARY_KEYS = {"kind", "p", "q", "qbar", "xi"}
SEED_STRATEGIES = ("density", "continuation")


@dataclass
class RunConfig:
    command: str
    n: int
    eta: complex = 1j
    thetas: tuple | None = None
    boundary: dict = field(default_factory=lambda: {"kind": "periodic"})
    sweep: list | None = None
    output_dir: str = "twlab-out"
    seed_strategy: str = "density"
    tolerances: dict = field(default_factory=lambda: dict(DEFAULT_TOLERANCES))
    u: list = field(default_factory=lambda: [1.0])
    trial_points: list = field(default_factory=lambda: [complex(s) for s in DEFAULT_TRIAL_POINTS])
    physical: bool = True
    warnings: list = field(default_factory=list)

    @property
    def sizes(self) -> list:
        return list(self.sweep) if self.sweep else [self.n]

    def spec(self, n: int | None = None) -> ChainSpec:
        n = self.n if n is None else n
        thetas = self.thetas if self.thetas is not None and n == self.n else None
        b = self.boundary
        if b["kind"] == "open":
            if "qbar" in b:
                boundary = Open.from_qbar(b["p"], b["qbar"], b["xi"])
            else:
                boundary = Open(b["p"], b["q"], b["xi"])
        else:
            boundary = Periodic()
        return ChainSpec(n, eta=self.eta, thetas=thetas, boundary=boundary)

    def resolved(self) -> dict:
        out = asdict(self)
        out["eta"] = _cjson(self.eta)
        out["thetas"] = None if self.thetas is None else [_cjson(t) for t in self.thetas]
        out["boundary"] = {k: (_cjson(v) if isinstance(v, complex) else v) for k, v in self.boundary.items()}
        out["u"] = [_cjson(x) for x in self.u]
        out["trial_points"] = [_cjson(x) for x in self.trial_points]
        return out


def _cjson(z):
    z = complex(z)
    return {"re": z.real, "im": z.imag}


def _as_complex(value, key: str) -> complex:
    if isinstance(value, bool):
        raise ConfigError("expected a number, got a boolean", key=key)
    if isinstance(value, (int, float, complex)):
        return complex(value)
    if isinstance(value, str):
        try:
            return complex(value.replace(" ", "").replace("i", "j"))
        except ValueError:
            pass
    raise ConfigError(f"cannot read {value!r} as a complex number", key=key)


def _as_int(value, key: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"expected an integer, got {value!r}", key=key)
    return value


def _reject_unknown(mapping: dict, allowed: set, prefix: str) -> None:
    for k in mapping:
        if k not in allowed:
            path = f"{prefix}.{k}" if prefix else str(k)
            raise ConfigError("unknown key", key=path)


def parse_config(source) -> RunConfig:
    """Build a RunConfig from YAML text or an already-parsed mapping."""
    if isinstance(source, str):
        try:
            data = yaml.safe_load(source)
        except yaml.YAMLError as exc:
            raise ConfigError(f"invalid YAML: {exc}") from exc
    else:
        data = source
    if not isinstance(data, dict):
        raise ConfigError("configuration must be a mapping")
    _reject_unknown(data, TOP_KEYS, "")
    if "command" not in data:
        raise ConfigError("missing key", key="command")
    command = data["command"]
    if command not in COMMANDS:
        raise ConfigError(f"expected one of {COMMANDS}, got {command!r}", key="command")
    sweep = data.get("sweep")
    if sweep is not None:
        if not isinstance(sweep, list) or not sweep:
            raise ConfigError("expected a non-empty list of integers", key="sweep")
        sweep = [_as_int(v, f"sweep[{i}]") for i, v in enumerate(sweep)]
    if "n" in data:
        n = _as_int(data["n"], "n")
    elif sweep:
        n = sweep[0]
    else:
        raise ConfigError("missing key", key="n")
    cfg = RunConfig(command=command, n=n, sweep=sweep)
    if "eta" in data:
        cfg.eta = _as_complex(data["eta"], "eta")
    if "thetas" in data and data["thetas"] is not None:
        th = data["thetas"]
        if not isinstance(th, list) or len(th) != n:
            raise ConfigError(f"expected a list of {n} numbers", key="thetas")
        cfg.thetas = tuple(_as_complex(v, f"thetas[{i}]") for i, v in enumerate(th))
    if "boundary" in data:
        cfg.boundary = _parse_boundary(data["boundary"])
    if "output_dir" in data:
        if not isinstance(data["output_dir"], str):
            raise ConfigError("expected a path string", key="output_dir")
        cfg.output_dir = data["output_dir"]
    if "seed_strategy" in data:
        if data["seed_strategy"] not in SEED_STRATEGIES:
            raise ConfigError(f"expected one of {SEED_STRATEGIES}", key="seed_strategy")
        cfg.seed_strategy = data["seed_strategy"]
    if "tolerances" in data:
        tol = data["tolerances"]
        if not isinstance(tol, dict):
            raise ConfigError("expected a mapping", key="tolerances")
        _reject_unknown(tol, set(DEFAULT_TOLERANCES), "tolerances")
        for k, v in tol.items():
            if isinstance(v, bool) or not isinstance(v, (int, float)) or v <= 0:
                raise ConfigError("expected a positive number", key=f"tolerances.{k}")
            cfg.tolerances[k] = int(v) if k == "max_iter" else float(v)
    for key in ("u", "trial_points"):
        if key in data:
            vals = data[key] if isinstance(data[key], list) else [data[key]]
            setattr(cfg, key, [_as_complex(v, f"{key}[{i}]") for i, v in enumerate(vals)])
    for k, size in enumerate(cfg.sizes):
        if size < 1:
            raise ConfigError("chain length must be positive", key="n" if not sweep else f"sweep[{k}]")
        if command in GROUND_STATE_COMMANDS and size % 2:
            path = "n" if not sweep else f"sweep[{k}]"
            raise ConfigError("ground-state pipelines need an even chain length", key=path)
    try:
        spec = cfg.spec()
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid chain parameters: {exc}") from exc
    cfg.physical = spec.physical
    if not cfg.physical:
        cfg.warnings.append("parameters violate the hermiticity constraints; H is not Hermitian")
    return cfg


def _parse_boundary(b) -> dict:
    if isinstance(b, str):
        b = {"kind": b}
    if not isinstance(b, dict):
        raise ConfigError("expected a mapping", key="boundary")
    _reject_unknown(b, BOUNDARY_KEYS, "boundary")
    kind = b.get("kind", "periodic")
    if kind == "periodic":
        if len(b) > 1 or ("kind" not in b and b):
            raise ConfigError("a periodic chain takes no boundary fields", key="boundary")
        return {"kind": "periodic"}
    if kind != "open":
        raise ConfigError(f"expected periodic or open, got {kind!r}", key="boundary.kind")
    if "p" not in b or ("q" in b) == ("qbar" in b):
        raise ConfigError("an open chain needs p and exactly one of q, qbar", key="boundary")
    out = {"kind": "open", "p": _as_complex(b["p"], "boundary.p"),
           "xi": _as_complex(b.get("xi", 1.0), "boundary.xi")}
    key = "qbar" if "qbar" in b else "q"
    out[key] = _as_complex(b[key], f"boundary.{key}")
    if out["xi"].imag == 0:
        out["xi"] = out["xi"].real
    return out


# bundles


@dataclass
class ResultBundle:
    manifest: dict
    tables: dict = field(default_factory=dict)
    records: dict = field(default_factory=dict)
    checks: dict = field(default_factory=dict)
    converged: bool = True

    @property
    def status(self) -> int:
        if not self.converged:
            return EXIT_NONCONVERGED
        if not all(c["passed"] for c in self.checks.values()):
            return EXIT_CHECK
        return EXIT_OK

    def add_check(self, name: str, passed: bool, residual: float, threshold: float) -> None:
        self.checks[name] = {"passed": bool(passed), "residual": float(residual),
                             "threshold": float(threshold)}


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return str(v)


def csv_text(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def _json_default(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, complex):
        return _cjson(obj)
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def write_bundle(bundle: ResultBundle, out: Path) -> None:
    out.mkdir(parents=True, exist_ok=True)

    def dump(obj):
        return json.dumps(obj, indent=2, sort_keys=True, default=_json_default) + "\n"

    (out / "manifest.json").write_text(dump(bundle.manifest), newline="\n")
    for name, (header, rows) in bundle.tables.items():
        (out / f"{name}.csv").write_text(csv_text(header, rows), newline="\n")
    for name, rec in bundle.records.items():
        (out / f"{name}.json").write_text(dump(rec), newline="\n")
    (out / "checks.json").write_text(dump(bundle.checks), newline="\n")


def _manifest(cfg: RunConfig) -> dict:
    return {
        "config": cfg.resolved(),
        "versions": {"twlab": __version__, "numpy": np.__version__, "scipy": scipy.__version__,
                     "python": platform.python_version()},
    }


def _root_rows(rs) -> list:
    rows = [(r.real, r.imag, "z") for r in rs.z_roots()]
    rows += [(r.real, r.imag, "w") for r in rs.w_roots()]
    return rows


# commands


def _cmd_verify(cfg: RunConfig, bundle: ResultBundle) -> None:
    rows = []
    for n in cfg.sizes:
        report = verify_identity_suite(cfg.spec(n), cfg.trial_points)
        for e in report.entries:
            rows.append((n, e.name, e.residual, e.threshold, e.passed))
            bundle.add_check(f"N{n}.{e.name}", e.passed, e.residual, e.threshold)
    bundle.tables["identities"] = (("n", "identity", "residual", "threshold", "passed"), rows)


def _cmd_spectrum(cfg: RunConfig, bundle: ResultBundle) -> None:
    rows = []
    for n in cfg.sizes:
        rows += [(n, k, float(e)) for k, e in enumerate(spectrum(cfg.spec(n)))]
    bundle.tables["spectrum"] = (("n", "index", "energy"), rows)


def _cmd_roots(cfg: RunConfig, bundle: ResultBundle) -> None:
    tol = cfg.tolerances["bae_residual"]
    for n in cfg.sizes:
        spec = cfg.spec(n)
        lam, w = ground_state_polynomials(spec)
        rs = classify_strings(lam, w, spec)
        rs.bae_residual = bae_residual(rs, spec)
        bundle.records[f"lambda_N{n}"] = lam.to_record()
        bundle.records[f"w_N{n}"] = w.to_record()
        bundle.records[f"rootset_N{n}"] = rs.to_record()
        bundle.tables[f"roots_N{n}"] = (("re", "im", "family"), _root_rows(rs))
        bundle.add_check(f"N{n}.bae_residual", rs.bae_residual <= tol, rs.bae_residual, tol)


def _cmd_bae(cfg: RunConfig, bundle: ResultBundle) -> None:
    previous = None
    rows = []
    for n in cfg.sizes:
        spec = cfg.spec(n)
        strategy = DensityQuantile()
        if cfg.seed_strategy == "continuation" and previous is not None and previous.converged:
            strategy = Continuation(previous)
        system = BaeSystem(spec)
        report = newton_solve(system, seed_roots(spec, strategy), tol=cfg.tolerances["newton"],
                              max_iter=cfg.tolerances["max_iter"])
        bundle.records[f"solve_N{n}"] = report.to_record()
        rows.append((n, report.converged, report.iterations, report.final_residual, report.energy))
        bundle.converged &= report.converged
        previous = report
    bundle.tables["bae"] = (("n", "converged", "iterations", "final_residual", "energy"), rows)


def _cmd_thermo(cfg: RunConfig, bundle: ResultBundle) -> None:
    rows = []
    for n in cfg.sizes:
        spec = cfg.spec(n)
        result = gs_energy_closed(spec)
        energy, _ = ground_state(spec)
        rows.append((n, energy, energy / n, result.per_site_energy, result.total_energy,
                     energy - result.total_energy))
        bundle.records[f"thermo_N{n}"] = result.to_record()
    bundle.tables["thermo"] = (("n", "ed_energy", "ed_per_site", "closed_per_site",
                                "closed_total", "difference"), rows)
    if not cfg.spec().is_open:
        lam_rows = []
        for n in cfg.sizes:
            spec = cfg.spec(n)
            lam, w = ground_state_polynomials(spec)
            for u in cfg.u:
                lam_rows.append((n, u.real, u.imag, abs(lam(u)) ** (1 / n), abs(lambda_per_site(u)),
                                 abs(w(u)) ** (1 / n), abs(w_g_closed(u, n, spec)) ** (1 / n)))
        bundle.tables["closed_forms"] = (("n", "u_re", "u_im", "lambda_ed", "lambda_closed",
                                          "w_ed", "w_closed"), lam_rows)


def _cmd_decay(cfg: RunConfig, bundle: ResultBundle) -> None:
    rows = []
    for u in cfg.u:
        for n in cfg.sizes:
            d = decay_ratio(cfg.spec(n), u)
            rows.append((d.n_sites, u.real, u.imag, d.measured, d.predicted))
        measured = [r[3] for r in rows if r[1] == u.real and r[2] == u.imag]
        if len(measured) > 1:
            steps = np.diff(measured)
            bundle.add_check(f"decreasing_u{u.real:g}{u.imag:+g}i", bool(np.all(steps < 0)),
                             float(steps.max()), 0.0)
    bundle.tables["decay"] = (("n", "u_re", "u_im", "measured", "predicted"), rows)


def _cmd_figures(cfg: RunConfig, bundle: ResultBundle) -> None:
    kind = cfg.boundary["kind"]
    sizes = cfg.sweep or DEFAULT_FIGURE_SWEEP[kind]
    for n in sizes:
        spec = cfg.spec(n)
        lam, w = ground_state_polynomials(spec)
        rs = classify_strings(lam, w, spec)
        # z-roots are reported both as zeros of Lambda shifted by eta/2 and as raw zeros
        rows = [(r.real, r.imag, "z") for r in rs.z_roots()]
        rows += [(r.real, r.imag, "lambda_zero") for r in rs.lambda_roots()]
        rows += [(r.real, r.imag, "w") for r in rs.w_roots()]
        bundle.tables[f"roots_{kind}_N{n}"] = (("re", "im", "family"), rows)


DISPATCH = {"verify": _cmd_verify, "spectrum": _cmd_spectrum, "roots": _cmd_roots, "bae": _cmd_bae,
            "thermo": _cmd_thermo, "decay": _cmd_decay, "figures": _cmd_figures}


class StageError(TwlabError):
    """A library error annotated with the pipeline stage that raised it."""


def run(cfg: RunConfig) -> ResultBundle:
    bundle = ResultBundle(manifest=_manifest(cfg))
    bundle.manifest["physical"] = cfg.physical
    bundle.manifest["warnings"] = list(cfg.warnings)
    try:
        DISPATCH[cfg.command](cfg, bundle)
    except (TwlabError, ValueError, ArithmeticError) as exc:
        raise StageError(f"{cfg.command}: {type(exc).__name__}: {exc}") from exc
    return bundle


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="twlab", description=__doc__.splitlines()[0])
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", required=True, help="YAML run configuration")
    parser.add_argument("--out", help="output directory (overrides output_dir)")
    parser.add_argument("--n", help="comma-separated chain lengths (overrides n and sweep)")
    parser.add_argument("-q", "--quiet", action="store_true", help="suppress the summary on stdout")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(message)s")
    try:
        data = yaml.safe_load(Path(args.config).read_text())
        if not isinstance(data, dict):
            raise ConfigError("configuration must be a mapping")
        data = dict(data)
        if data.get("command", args.command) != args.command:
            raise ConfigError(f"config says {data['command']!r}, CLI says {args.command!r}",
                              key="command")
        data["command"] = args.command
        if args.n:
            try:
                sizes = [int(s) for s in args.n.split(",") if s.strip()]
            except ValueError as exc:
                raise ConfigError(str(exc), key="n") from exc
            data.pop("n", None)
            data["sweep"] = sizes
        cfg = parse_config(data)
    except (OSError, yaml.YAMLError, ConfigError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if args.out:
        cfg.output_dir = args.out
    for msg in cfg.warnings:
        log.warning(msg)
    try:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            bundle = run(cfg)
        bundle.manifest["warnings"] += [str(w.message) for w in caught]
    except StageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    write_bundle(bundle, Path(cfg.output_dir))
    if not args.quiet:
        for name, (header, rows) in bundle.tables.items():
            print(f"{name}: {len(rows)} rows -> {Path(cfg.output_dir) / (name + '.csv')}")
        failed = [k for k, c in bundle.checks.items() if not c["passed"]]
        print(f"checks: {len(bundle.checks) - len(failed)} passed, {len(failed)} failed")
        if not bundle.converged:
            print("solver did not converge")
    return bundle.status


if __name__ == "__main__":
    sys.exit(main())
