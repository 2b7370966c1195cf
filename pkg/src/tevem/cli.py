"""Command-line front end: ``tevem mesh | solve | study``.

Settings come from an optional INI file (``--config``) and are overridden by
command-line flags.  Everything is validated before any computation starts.

Exit codes: 0 success, 1 configuration error, 2 mesh or validation error,
3 solver error.
"""

from __future__ import annotations

import argparse
import configparser
import json
import logging
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

EXIT_OK, EXIT_CONFIG, EXIT_MESH, EXIT_SOLVER = 0, 1, 2, 3
THREADS_ENV = "TEVEM_NUM_THREADS"

DOMAIN_NAMES = {"unit-square": "unit_square", "centered-square": "centered_square", "disk": "disk",
                "l-shape": "l_shape"}
FAMILY_NAMES = {"triangle": "triangle", "quad": "quad", "hex": "hex", "distorted-hex": "distorted_hex",
                "polar": "polar", "voronoi": "voronoi"}

# section -> key -> parser; keys double as attribute names of RunConfig
SCHEMA = {
    "mesh": {"domain": str, "family": str, "n": int, "seed": int, "mesh_file": str, "c_t": float},
    "problem": {"index_n": float, "nev": int},
    "solver": {"tol": float, "krylov_dim": int, "max_restarts": int, "shift": complex},
    "study": {"levels": str},
    "output": {"out": str, "export_vtk": "bool", "dump_matrices": "bool"},
}


class ConfigError(ValueError):
    pass


class UsageError(ConfigError):
    pass


@dataclass
class RunConfig:
    command: str
    domain: str = "unit_square"
    family: str = "triangle"
    n: int = 16
    seed: int | None = None
    mesh_file: str | None = None
    c_t: float = 0.05
    index_n: float = 16.0
    nev: int = 4
    tol: float = 1e-10
    krylov_dim: int | None = None
    max_restarts: int = 50
    shift: complex = 0.0
    levels: list[int] = field(default_factory=lambda: [16, 32, 64])
    out: str | None = None
    export_vtk: bool = False
    dump_matrices: bool = False

    def validate(self):
        from .mesh.generate import _ALLOWED

        if self.domain not in _ALLOWED.get(self.family, ()):
            if self.family not in _ALLOWED:
                raise ConfigError(f"unknown family {self.family!r}")
            raise ConfigError(f"family {self.family!r} is not available on domain {self.domain!r}")
        if self.n < 2:
            raise ConfigError("n must be at least 2")
        if not self.index_n > 1:
            raise ConfigError("index-n must be greater than 1")
        if self.nev < 1:
            raise ConfigError("nev must be positive")
        if not self.tol > 0:
            raise ConfigError("tol must be positive")
        if not self.c_t > 0:
            raise ConfigError("c_t must be positive")
        if self.command == "study":
            if len(self.levels) < 3 or any(b <= a for a, b in zip(self.levels, self.levels[1:])):
                raise ConfigError("levels must hold at least 3 strictly increasing values")
            if self.mesh_file:
                raise ConfigError("a study generates its meshes; mesh_file is not allowed")
        if self.command == "mesh" and not self.out:
            raise ConfigError("mesh needs --out")
        if self.mesh_file and not Path(self.mesh_file).is_file():
            raise ConfigError(f"mesh file {self.mesh_file!r} does not exist")
        return self


def _parse_bool(s: str) -> bool:
    v = s.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"expected a boolean, got {s!r}")


def _domain(name: str) -> str:
    if name not in DOMAIN_NAMES:
        raise ConfigError(f"unknown domain {name!r}; choose from {', '.join(DOMAIN_NAMES)}")
    return DOMAIN_NAMES[name]


def _family(name: str) -> str:
    if name not in FAMILY_NAMES:
        raise ConfigError(f"unknown family {name!r}; choose from {', '.join(FAMILY_NAMES)}")
    return FAMILY_NAMES[name]


def _levels(text: str) -> list[int]:
    try:
        return [int(s) for s in text.replace(",", " ").split()]
    except ValueError:
        raise ConfigError(f"levels must be integers, got {text!r}") from None


def read_config(path) -> dict:
    """Flat ``key = value`` pairs from the known sections; anything else is an error."""
    cp = configparser.ConfigParser(interpolation=None)
    try:
        with open(path) as fh:
            cp.read_file(fh)
    except (OSError, configparser.Error) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    values = {}
    for section in cp.sections():
        if section not in SCHEMA:
            raise ConfigError(f"unknown config section [{section}]")
        for key, raw in cp.items(section):
            if key not in SCHEMA[section]:
                raise ConfigError(f"unknown key {key!r} in section [{section}]")
            kind = SCHEMA[section][key]
            try:
                if kind == "bool":
                    values[key] = _parse_bool(raw)
                elif key == "domain":
                    values[key] = _domain(raw.strip())
                elif key == "family":
                    values[key] = _family(raw.strip())
                elif key == "levels":
                    values[key] = _levels(raw)
                else:
                    values[key] = kind(raw.strip())
            except ValueError as exc:
                raise ConfigError(f"[{section}] {key}: {exc}") from None
    return values


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="tevem", description="C1 virtual element solver for transmission eigenvalues.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp):
        sp.add_argument("--config", help="INI file with [mesh] [problem] [solver] [study] [output] sections")
        sp.add_argument("--domain", choices=list(DOMAIN_NAMES))
        sp.add_argument("--family", choices=list(FAMILY_NAMES))
        sp.add_argument("--seed", type=int)
        sp.add_argument("--out")

    sp = sub.add_parser("mesh", help="generate a mesh and its quality report")
    common(sp)
    sp.add_argument("--n", type=int)
    sp.add_argument("--c-t", type=float, dest="c_t", help="quality threshold C_T (default 0.05)")

    for name, help_ in (("solve", "solve one mesh"), ("study", "refinement study with fitted orders")):
        sp = sub.add_parser(name, help=help_)
        common(sp)
        sp.add_argument("--index-n", type=float, dest="index_n")
        sp.add_argument("--nev", type=int)
        sp.add_argument("--tol", type=float)
        sp.add_argument("--krylov-dim", type=int, dest="krylov_dim")
        sp.add_argument("--max-restarts", type=int, dest="max_restarts")
        sp.add_argument("--shift", type=complex)
        if name == "solve":
            sp.add_argument("--n", type=int)
            sp.add_argument("--mesh-file", dest="mesh_file")
            sp.add_argument("--export-vtk", action="store_true", default=None, dest="export_vtk")
            sp.add_argument("--dump-matrices", action="store_true", default=None, dest="dump_matrices")
        else:
            sp.add_argument("--levels", type=_levels, help="e.g. 16,32,64")
    return p


def make_config(argv) -> tuple[RunConfig, bool]:
    args = build_parser().parse_args(argv)
    values = read_config(args.config) if args.config else {}
    for key, val in vars(args).items():
        if key in ("command", "config", "verbose") or val is None:
            continue
        if key == "domain":
            val = _domain(val)
        elif key == "family":
            val = _family(val)
        values[key] = val
    cfg = RunConfig(command=args.command, **values)
    return cfg.validate(), args.verbose


# ------------------------------------------------------------------ commands


def _mesh_for(cfg: RunConfig):
    from .mesh import generate_structured, load_mesh

    if cfg.mesh_file:
        return load_mesh(cfg.mesh_file)
    return generate_structured(cfg.domain, cfg.family, cfg.n, seed=cfg.seed)


def _solver_config(cfg: RunConfig):
    from .eigensolve import SolverConfig

    return SolverConfig(nev=cfg.nev, krylov_dim=cfg.krylov_dim, tol=cfg.tol,
                        max_restarts=cfg.max_restarts, shift=cfg.shift)


def cmd_mesh(cfg: RunConfig) -> int:
    from .mesh import save_mesh, validate

    mesh = _mesh_for(cfg)
    out = Path(cfg.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    save_mesh(mesh, out)
    report = validate(mesh, cfg.c_t).to_dict()
    report.update(n_vertices=mesh.n_vertices, domain=mesh.domain_tag, metadata=mesh.metadata)
    text = json.dumps(report, indent=2, sort_keys=True, default=str)
    out.with_name(out.name + ".quality.json").write_text(text + "\n")
    print(text)
    return EXIT_OK if report["passed"] else EXIT_MESH


def _out_dir(cfg: RunConfig) -> Path:
    d = Path(cfg.out or ".")
    d.mkdir(parents=True, exist_ok=True)
    return d


def cmd_solve(cfg: RunConfig) -> int:
    import csv

    from .assembly import assemble
    from .eigensolve import solve_pencil, verify_residuals

    mesh = _mesh_for(cfg)
    pencil = assemble(mesh, cfg.index_n)
    out = _out_dir(cfg)
    if cfg.dump_matrices:
        pencil.dump(str(out / "pencil"))
    pairs = solve_pencil(pencil, _solver_config(cfg))
    report = verify_residuals(pencil, pairs, tol=max(cfg.tol, 1e-10))
    with open(out / "eigenvalues.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["i", "re_k", "im_k", "re_lambda", "im_lambda", "residual", "backward_error"])
        for i, (p, r, b) in enumerate(zip(pairs, report.residuals, report.backward_errors), start=1):
            w.writerow([i, repr(p.k.real), repr(p.k.imag), repr(p.lam.real), repr(p.lam.imag), repr(float(r)),
                        repr(float(b))])
    if cfg.export_vtk:
        from .export import write_vtk

        for i, p in enumerate(pairs, start=1):
            write_vtk(out / f"mode_{i}.vtk", mesh, pencil, p.x, title=f"k = {p.k:.10g}")
    for i, p in enumerate(pairs, start=1):
        print(f"k{i} = {p.k.real:.6f}{p.k.imag:+.6f}i")
    if not report.ok:
        print(f"residual check failed for pairs {[i + 1 for i in report.flagged]}", file=sys.stderr)
        return EXIT_SOLVER
    return EXIT_OK


def cmd_study(cfg: RunConfig) -> int:
    from .study import StudyConfig, emit_table, run_study

    scfg = StudyConfig(cfg.domain, cfg.family, cfg.levels, cfg.index_n, cfg.nev, _solver_config(cfg), seed=cfg.seed)
    table = run_study(scfg)
    out = _out_dir(cfg)
    (out / "study.csv").write_bytes(emit_table(table, "csv"))
    text = emit_table(table, "text")
    (out / "study.txt").write_bytes(text)
    sys.stdout.write(text.decode())
    return EXIT_OK


COMMANDS = {"mesh": cmd_mesh, "solve": cmd_solve, "study": cmd_study}


def _limit_threads():
    n = os.environ.get(THREADS_ENV)
    if n:
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
            os.environ.setdefault(var, n)


def main(argv=None) -> int:
    _limit_threads()
    try:
        cfg, verbose = make_config(sys.argv[1:] if argv is None else argv)
    except ConfigError as exc:
        print(f"tevem: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    logging.basicConfig(level=logging.INFO if verbose else logging.WARNING, format="%(name)s: %(message)s")

    from .eigensolve import SolverError
    from .mesh import MeshError

    try:
        return COMMANDS[cfg.command](cfg)
    except MeshError as exc:
        print(f"tevem: mesh error: {exc}", file=sys.stderr)
        return EXIT_MESH
    except SolverError as exc:
        print(f"tevem: solver error: {exc}", file=sys.stderr)
        for i, r in enumerate(exc.residuals, start=1):
            print(f"  pair {i}: residual {r:.3e}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
