"""Command-line entry point: ``netbridge <command> --graph FILE ...``.

Exit status: 0 success, 1 usage or parse error, 2 infeasible, 3 no
convergence.  ``NETBRIDGE_TOL`` and ``NETBRIDGE_MAX_ITER`` override the
solver defaults; explicit flags override the environment.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import dataclass

import numpy as np

from . import bridge_solver as bs
from . import report
from .errors import (
    CapacityError,
    ConvergenceError,
    InfeasibleError,
    NetbridgeError,
)
from .graph_core import Graph, ensure_sink_loop, is_primitive, kernel_costs, parse_graph
from .spectral import entropy_energy_rates, perron, rb_walk
from .transport_plans import (
    PRIOR_MODES,
    compare,
    cost_matrix,
    min_cost_paths,
    minimizing_paths,
    omt_plan,
    oracle_bridge,
    prior_kernel,
    robust_plan,
)

COMMANDS = ("perron", "rb", "bridge", "plan", "omt", "verify")
VERIFY_TOL = 1e-9

EXIT_OK, EXIT_USAGE, EXIT_INFEASIBLE, EXIT_NO_CONVERGENCE = 0, 1, 2, 3


class UsageError(NetbridgeError):
    pass


@dataclass
class RunConfig:
    command: str
    graph_path: str | None = None
    source: int | None = None
    sink: int | None = None
    steps: int | None = None
    prior_mode: str | None = None
    teleport_energy: float = 8.0
    tol: float = bs.DEFAULT_TOL
    max_iter: int = bs.DEFAULT_MAX_ITER
    output_format: str = "text"
    output_path: str | None = None
    sink_loop: bool = True
    nu0_path: str | None = None
    nuN_path: str | None = None
    schedule: bool = True

    def validate(self):
        if self.command not in COMMANDS:
            raise UsageError(f"unknown command {self.command!r}")
        if self.prior_mode is not None and self.prior_mode not in PRIOR_MODES:
            raise UsageError(f"--prior must be one of {', '.join(PRIOR_MODES)}")
        if self.command in ("plan", "verify"):
            for flag, value in (("--source", self.source), ("--sink", self.sink), ("--steps", self.steps)):
                if value is None:
                    raise UsageError(f"{self.command} requires {flag}")
        if self.command in ("bridge", "omt"):
            if self.steps is None:
                raise UsageError(f"{self.command} requires --steps")
            if self.nu0_path is None and self.source is None:
                raise UsageError(f"{self.command} requires --nu0 FILE or --source NODE")
            if self.nuN_path is None and self.sink is None:
                raise UsageError(f"{self.command} requires --nuN FILE or --sink NODE")
        if self.steps is not None and self.steps < 1:
            raise UsageError("--steps must be >= 1")
        if not self.teleport_energy > 0:
            raise UsageError("--teleport-energy must be positive")
        if not self.tol > 0:
            raise UsageError("--tol must be positive")
        if self.max_iter < 1:
            raise UsageError("--max-iter must be >= 1")
        if self.output_format not in ("text", "json"):
            raise UsageError("--format must be text or json")


def _mode(config: RunConfig, g: Graph) -> str:
    if config.prior_mode is not None:
        return config.prior_mode
    return "adjacency" if g.weights is None else "weighted"


def _node(label, n, flag):
    if label is None:
        return None
    if not 1 <= label <= n:
        raise UsageError(f"{flag} {label} outside 1..{n}")
    return label - 1


def read_marginal(path, n) -> np.ndarray:
    """One nonnegative weight per line (``#`` comments allowed), normalised to sum 1."""
    values = []
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            try:
                values.append(float(line))
            except ValueError:
                raise UsageError(f"{path}:{lineno}: {line!r} is not a number") from None
    w = np.array(values)
    if len(w) != n:
        raise UsageError(f"{path}: expected {n} weights, found {len(w)}")
    if np.any(w < 0) or not w.sum() > 0:
        raise UsageError(f"{path}: weights must be nonnegative with positive sum")
    return w / w.sum()


def _marginals(config, n):
    s = _node(config.source, n, "--source")
    t = _node(config.sink, n, "--sink")
    nu0 = read_marginal(config.nu0_path, n) if config.nu0_path else bs.delta(n, s)
    nuN = read_marginal(config.nuN_path, n) if config.nuN_path else bs.delta(n, t)
    return nu0, nuN, s, t


def run(config: RunConfig, text: str) -> tuple[int, str]:
    """Execute one command on a graph document; returns ``(exit status, report)``.

    Library errors propagate; :func:`main` maps them to exit statuses.
    """
    config.validate()
    g = parse_graph(text)
    mode = _mode(config, g)
    fmt = config.output_format
    cmd = config.command

    if cmd in ("perron", "rb"):
        if config.sink is not None and config.sink_loop:
            g = ensure_sink_loop(g, _node(config.sink, g.n, "--sink"))
        M = prior_kernel(g, mode, config.teleport_energy)
        if cmd == "perron":
            doc = report.perron_doc(perron(M), mode, is_primitive(M).exponent)
            render = report.perron_text
        else:
            walk = rb_walk(M)
            S, Ubar = entropy_energy_rates(walk, kernel_costs(M))
            doc = report.walk_doc(walk, mode, S, Ubar)
            render = report.walk_text

    elif cmd == "bridge":
        nu0, nuN, _, t = _marginals(config, g.n)
        if t is not None and config.sink_loop and config.nuN_path is None:
            g = ensure_sink_loop(g, t)
        M = prior_kernel(g, mode, config.teleport_energy)
        problem = bs.BridgeProblem(M, config.steps, nu0, nuN)
        pot, ts, flow = bs.solve(problem, config.tol, config.max_iter)
        doc = report.bridge_doc(problem, pot, ts, flow, mode)
        render = lambda d: report.bridge_text(d, config.schedule)  # noqa: E731

    elif cmd == "plan":
        s = _node(config.source, g.n, "--source")
        t = _node(config.sink, g.n, "--sink")
        plan = robust_plan(
            g, s, t, config.steps, mode, config.teleport_energy,
            config.tol, config.max_iter, config.sink_loop,
        )
        rep = None
        if plan.ensemble is not None:
            C, mc = min_cost_paths(plan.costs, s, t, config.steps)
            coupling = omt_plan(C, bs.delta(g.n, s), bs.delta(g.n, t))
            rep = compare(plan.ensemble, mc, C, coupling)
        doc = report.plan_doc(plan, rep)
        render = report.plan_text

    elif cmd == "omt":
        nu0, nuN, s, t = _marginals(config, g.n)
        if t is not None and config.sink_loop:
            g = ensure_sink_loop(g, t)
        M = prior_kernel(g, mode, config.teleport_energy)
        C = cost_matrix(kernel_costs(M), config.steps)
        coupling = omt_plan(C, nu0, nuN)
        delta_pair = config.nu0_path is None and config.nuN_path is None
        mc = minimizing_paths(C, s, t) if delta_pair else []
        doc = report.omt_doc(C, coupling, mc, s, t)
        render = report.omt_text

    else:  # verify
        s = _node(config.source, g.n, "--source")
        t = _node(config.sink, g.n, "--sink")
        plan = robust_plan(
            g, s, t, config.steps, mode, config.teleport_energy,
            config.tol, config.max_iter, config.sink_loop,
        )
        oracle = oracle_bridge(plan.kernel, s, t, config.steps)
        if plan.ensemble is None:
            raise CapacityError("too many paths to enumerate the plan")
        got = plan.ensemble.as_dict()
        want = oracle.as_dict()
        diff = max(
            (abs(got.get(p, 0.0) - want.get(p, 0.0)) for p in set(got) | set(want)),
            default=0.0,
        )
        doc = report.verify_doc(plan, oracle, diff, VERIFY_TOL)
        render = report.verify_text

    # a failed verification is reported like a usage failure
    status = EXIT_USAGE if cmd == "verify" and not doc["passed"] else EXIT_OK
    if fmt == "json":
        return status, report.dumps(report.envelope(cmd, doc))
    return status, render(doc) + "\n"


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--graph", required=True, dest="graph_path", help="edge-list or JSON graph file")
    common.add_argument("--source", type=int, help="source node (1-based)")
    common.add_argument("--sink", type=int, help="sink node (1-based)")
    common.add_argument("--steps", type=int, help="horizon N")
    common.add_argument("--prior", dest="prior_mode", choices=PRIOR_MODES,
                        help="prior kernel (default: weighted if the graph carries values, else adjacency)")
    common.add_argument("--teleport-energy", type=float, default=8.0, dest="teleport_energy",
                        help="energy U0 of non-edges in teleport mode (default 8)")
    common.add_argument("--tol", type=float, help="Hilbert-gap tolerance (default 1e-12)")
    common.add_argument("--max-iter", type=int, dest="max_iter", help="iteration cap (default 10000)")
    common.add_argument("--format", choices=("text", "json"), default="text", dest="output_format")
    common.add_argument("--output", "-o", dest="output_path", help="write the report here instead of stdout")
    common.add_argument("--no-sink-loop", action="store_false", dest="sink_loop",
                        help="do not add a self-loop at the sink")
    common.add_argument("--nu0", dest="nu0_path", help="initial marginal file (bridge/omt)")
    common.add_argument("--nuN", dest="nuN_path", help="final marginal file (bridge/omt)")
    common.add_argument("--no-schedule", action="store_false", dest="schedule",
                        help="omit transition matrices from bridge text output")

    parser = argparse.ArgumentParser(
        prog="netbridge", description="Robust transport plans from discrete Schrödinger bridges."
    )
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "perron": "spectral radius, Perron vectors and entropy rate",
        "rb": "maximum-entropy walk and its stationary measure",
        "bridge": "bridge between arbitrary marginals",
        "plan": "robust source-to-sink plan with path table",
        "omt": "end-point cost matrix and optimal coupling",
        "verify": "compare the plan with brute-force path enumeration",
    }
    for name in COMMANDS:
        sub.add_parser(name, parents=[common], help=helps[name])
    return parser


def _env_default(name, cast, default):
    raw = os.environ.get(name)
    if raw is None:
        return default
    try:
        return cast(raw)
    except ValueError:
        raise UsageError(f"environment variable {name}={raw!r} is not valid") from None


def config_from_args(ns) -> RunConfig:
    tol = ns.tol if ns.tol is not None else _env_default("NETBRIDGE_TOL", float, bs.DEFAULT_TOL)
    max_iter = (
        ns.max_iter if ns.max_iter is not None
        else _env_default("NETBRIDGE_MAX_ITER", int, bs.DEFAULT_MAX_ITER)
    )
    return RunConfig(
        command=ns.command,
        graph_path=ns.graph_path,
        source=ns.source,
        sink=ns.sink,
        steps=ns.steps,
        prior_mode=ns.prior_mode,
        teleport_energy=ns.teleport_energy,
        tol=tol,
        max_iter=max_iter,
        output_format=ns.output_format,
        output_path=ns.output_path,
        sink_loop=ns.sink_loop,
        nu0_path=ns.nu0_path,
        nuN_path=ns.nuN_path,
        schedule=ns.schedule,
    )


def main(argv=None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    try:
        config = config_from_args(ns)
        with open(config.graph_path, encoding="utf-8") as fh:
            text = fh.read()
        status, out = run(config, text)
    except InfeasibleError as exc:
        print(f"netbridge: infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except ConvergenceError as exc:
        print(f"netbridge: no convergence: {exc}", file=sys.stderr)
        return EXIT_NO_CONVERGENCE
    except (NetbridgeError, OSError) as exc:
        print(f"netbridge: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if config.output_path:
        with open(config.output_path, "w", encoding="utf-8") as fh:
            fh.write(out)
    else:
        sys.stdout.write(out)
    return status


if __name__ == "__main__":
    sys.exit(main())
