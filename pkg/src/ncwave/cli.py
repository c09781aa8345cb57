"""Command-line entry point: ``ncwave {run,verify,classical,compare}``.

Exit codes: 0 success, 1 configuration or precondition error, 2 numerical
failure, 3 failed verification check.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import output
from .classical import ClassicalState, compare_ehrenfest, integrate
from .core import (Barrier, Free, Grid, Harmonic, NcwaveError, PhysicsParams,
                   PreconditionError, Sampled, init_gaussian)
from .solver import EvolutionPlan, evolve
from . import verify as verify_suite

log = logging.getLogger("ncwave")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_VERIFY = 0, 1, 2, 3


class ConfigError(PreconditionError):
    pass


@dataclass
class Outputs:
    csv_path: Path = Path("observables.csv")
    snapshot_every: int = 0
    svg_path: Optional[Path] = None
    classical_csv_path: Path = Path("classical.csv")
    compare_csv_path: Path = Path("compare.csv")

    def relocate(self, directory: Optional[Path]) -> "Outputs":
        if directory is None:
            return self
        move = lambda p: None if p is None else Path(directory) / Path(p).name
        return Outputs(move(self.csv_path), self.snapshot_every, move(self.svg_path),
                       move(self.classical_csv_path), move(self.compare_csv_path))


@dataclass
class ClassicalSetup:
    q0: np.ndarray
    v0: np.ndarray
    dt: float
    n_steps: int


@dataclass
class RunConfig:
    physics: PhysicsParams
    grid: Grid
    initial: dict
    potential: object
    plan: EvolutionPlan
    outputs: Outputs = field(default_factory=Outputs)
    classical: Optional[dict] = None

    def initial_state(self):
        return init_gaussian(self.grid, self.physics, center=self.initial["center"],
                             width=self.initial["sigma"], momentum=self.initial.get("momentum", 0.0))

    def classical_setup(self) -> ClassicalSetup:
        spec = dict(self.classical or {})
        dim = self.physics.dim
        q0 = spec.get("q0", self.initial["center"])
        v0 = spec.get("v0", np.asarray(self.initial.get("momentum", 0.0), float) / self.physics.mass)
        q0 = np.broadcast_to(np.asarray(q0, float), (dim,)).copy()
        v0 = np.broadcast_to(np.asarray(v0, float), (dim,)).copy()
        dt = float(spec.get("dt", self.plan.dt))
        n_steps = int(spec.get("n_steps", self.plan.n_steps))
        return ClassicalSetup(q0, v0, dt, n_steps)


def _require(section: dict, key: str, where: str):
    if key not in section:
        raise ConfigError(f"missing '{where}.{key}'")
    return section[key]


def parse_potential(spec: dict, grid: Grid):
    kind = str(spec.get("type", "free")).lower()
    if kind == "free":
        return Free()
    if kind == "harmonic":
        return Harmonic(float(_require(spec, "omega", "potential")), spec.get("center", 0.0))
    if kind == "barrier":
        return Barrier(float(_require(spec, "height", "potential")),
                       float(_require(spec, "half_width", "potential")),
                       spec.get("center", 0.0))
    if kind == "sampled":
        return Sampled(np.asarray(_require(spec, "values", "potential"), float), grid)
    raise ConfigError(f"unknown potential type {kind!r}")


def parse_config(doc: dict) -> RunConfig:
    if not isinstance(doc, dict):
        raise ConfigError("config must be a JSON object")
    phys = doc.get("physics", {})
    physics = PhysicsParams(hbar=float(phys.get("hbar", 1.0)), mass=float(phys.get("mass", 1.0)),
                            friction_k=float(phys.get("k", 0.0)), dim=int(phys.get("dim", 1)))
    g = _require(doc, "grid", "config")
    grid = Grid(_require(g, "x_min", "grid"), _require(g, "x_max", "grid"),
                _require(g, "n_points", "grid"))
    if grid.ndim == 1 and physics.dim > 1:
        # scalar grid entries are shared by every axis
        grid = Grid((grid.x_min[0],) * physics.dim, (grid.x_max[0],) * physics.dim,
                    grid.n_points * physics.dim)
    grid.check_params(physics)

    initial = dict(_require(doc, "initial", "config"))
    _require(initial, "center", "initial")
    _require(initial, "sigma", "initial")

    p = _require(doc, "plan", "config")
    dt = float(_require(p, "dt", "plan"))
    if "n_steps" in p:
        n_steps = int(p["n_steps"])
    elif "t_final" in p:
        n_steps = int(round(float(p["t_final"]) / dt))
    else:
        raise ConfigError("plan needs 'n_steps' or 't_final'")
    plan = EvolutionPlan(dt, n_steps, int(p.get("record_every", 1)),
                         p.get("integrator", "split_step"))
    plan.validate(physics)

    o = doc.get("outputs", {})
    outputs = Outputs(
        csv_path=Path(o.get("csv_path", "observables.csv")),
        snapshot_every=int(o.get("snapshot_every", 0)),
        svg_path=Path(o["svg_path"]) if o.get("svg_path") else None,
        classical_csv_path=Path(o.get("classical_csv_path", "classical.csv")),
        compare_csv_path=Path(o.get("compare_csv_path", "compare.csv")),
    )
    return RunConfig(physics, grid, initial, parse_potential(doc.get("potential", {}), grid),
                     plan, outputs, doc.get("classical"))


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON: {exc}") from None
    try:
        return parse_config(doc)
    except PreconditionError:
        raise
    except (TypeError, ValueError, KeyError) as exc:
        raise ConfigError(f"{path}: {exc}") from exc


# --- commands ------------------------------------------------------------------

def cmd_run(config: RunConfig) -> int:
    outs = config.outputs
    psi0 = config.initial_state()
    snapshots = []

    def sink(record, psi):
        idx = len(snapshots)
        snapshots.append(None)
        if outs.snapshot_every and idx % outs.snapshot_every == 0:
            target = outs.csv_path.parent / f"snapshot_{idx:05d}.csv"
            output.write_snapshot(target, psi)

    log.debug("run: %s, %d steps of dt=%g", config.plan.integrator.value,
              config.plan.n_steps, config.plan.dt)
    _, records = evolve(psi0, config.potential, config.physics, config.plan, sink)
    output.write_observables(outs.csv_path, records, config.physics.dim)
    if outs.svg_path is not None:
        output.write_svg(outs.svg_path, [r.time for r in records],
                         {"norm": [r.norm for r in records],
                          "<x>": [r.mean_position[0] for r in records]})
    last = records[-1]
    print(f"wrote {len(records)} records to {outs.csv_path}; "
          f"final t={last.time:.6g} norm={last.norm:.12g}")
    return EXIT_OK


CLASSICAL_AXES = ("x", "y", "z")


def _classical_trajectory(config: RunConfig):
    setup = config.classical_setup()
    state = ClassicalState(setup.q0, setup.v0)
    return integrate(state, config.potential, config.physics, setup.dt, setup.n_steps), setup


def cmd_classical(config: RunConfig) -> int:
    traj, _ = _classical_trajectory(config)
    axes = CLASSICAL_AXES[:traj.q.shape[1]]
    header = (["time"] + [f"q_{a}" for a in axes] + [f"v_{a}" for a in axes]
              + ["T", "V", "L", "S", "w_nc"])
    path = output.write_csv(config.outputs.classical_csv_path, header, traj.rows())
    print(f"wrote {len(traj)} samples to {path}; final w_nc={traj.w_nc[-1]:.12g}")
    return EXIT_OK


def cmd_compare(config: RunConfig) -> int:
    setup = config.classical_setup()
    if not np.isclose(setup.dt, config.plan.dt, rtol=1e-12, atol=0):
        raise ConfigError(f"classical dt {setup.dt} differs from quantum dt {config.plan.dt}")
    if setup.n_steps != config.plan.n_steps:
        raise ConfigError("classical n_steps differs from quantum n_steps")
    _, records = evolve(config.initial_state(), config.potential, config.physics, config.plan)
    traj, _ = _classical_trajectory(config)
    traj = traj.subsample(config.plan.record_every)
    times = [r.time for r in records]
    mean_x = np.array([r.mean_position for r in records])
    report = compare_ehrenfest(times, mean_x, traj)
    axes = CLASSICAL_AXES[:config.physics.dim]
    header = (["time"] + [f"mean_{a}" for a in axes] + [f"q_{a}" for a in axes]
              + ["deviation"])
    rows = ([t, *mx, *q, d] for t, mx, q, d in zip(times, mean_x, traj.q, report.deviation))
    path = output.write_csv(config.outputs.compare_csv_path, header, rows)
    print(f"wrote {len(times)} rows to {path}")
    print(f"max deviation {report.max_deviation:.6e}  rms deviation {report.rms_deviation:.6e}")
    return EXIT_OK


def cmd_verify(eps_list=verify_suite.DEFAULT_EPS, delta=verify_suite.DEFAULT_DELTA,
               params: Optional[PhysicsParams] = None, fourth_moment_factor: float = 3.0) -> int:
    checks = verify_suite.run_all(eps_list, delta, params, fourth_moment_factor)
    for c in checks:
        print(c.line())
    failed = sum(not c.passed for c in checks)
    print(f"{len(checks) - failed}/{len(checks)} checks passed")
    return EXIT_OK if failed == 0 else EXIT_VERIFY


# --- argument handling ---------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ncwave", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, helptext in (("run", "evolve a wave packet and write observables"),
                           ("classical", "integrate the damped classical trajectory"),
                           ("compare", "compare quantum <x>(t) with the classical q(t)")):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("config", help="JSON configuration file")
        p.add_argument("--output-dir", type=Path, default=None)

    p = sub.add_parser("verify", help="check moment integrals and the generator defect")
    p.add_argument("--eps", type=float, nargs="+", default=list(verify_suite.DEFAULT_EPS))
    p.add_argument("--delta", type=float, default=verify_suite.DEFAULT_DELTA)
    p.add_argument("--hbar", type=float, default=1.0)
    p.add_argument("--mass", type=float, default=1.0)
    p.add_argument("--k", type=float, default=0.05)
    p.add_argument("--fourth-moment-factor", type=float, default=3.0,
                   help=argparse.SUPPRESS)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "verify":
            params = PhysicsParams(hbar=args.hbar, mass=args.mass, friction_k=args.k)
            return cmd_verify(tuple(args.eps), args.delta, params, args.fourth_moment_factor)
        config = load_config(args.config)
        config.outputs = config.outputs.relocate(args.output_dir)
        return {"run": cmd_run, "classical": cmd_classical, "compare": cmd_compare}[
            args.command](config)
    except PreconditionError as exc:
        print(f"ncwave: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"ncwave: error: cannot write output: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NcwaveError as exc:
        print(f"ncwave: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
