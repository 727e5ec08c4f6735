"""Serialisation of results: JSON documents and aligned text tables.

Node labels are shifted to 1-based here and nowhere else.  JSON keeps
full double precision; text tables round to six decimals, half-even.
"""

from __future__ import annotations

import json
import math
from decimal import ROUND_HALF_EVEN, Decimal

import numpy as np

SCHEMA_VERSION = "netbridge.report/v1"
_SIX = Decimal("0.000001")


def fmt6(x) -> str:
    """Round to six decimals, half-even on the shortest decimal repr of ``x``."""
    x = float(x)
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    if math.isnan(x):
        return "nan"
    d = Decimal(repr(x)).quantize(_SIX, rounding=ROUND_HALF_EVEN)
    if d == 0:
        d = abs(d)
    return f"{d:f}"


def text_table(matrix, row_labels, col_labels, corner="") -> str:
    cells = [[corner] + [str(c) for c in col_labels]]
    for label, row in zip(row_labels, np.asarray(matrix)):
        cells.append([str(label)] + [fmt6(v) for v in row])
    widths = [max(len(r[k]) for r in cells) for k in range(len(cells[0]))]
    return "\n".join(
        "  ".join(c.rjust(w) for c, w in zip(r, widths)).rstrip() for r in cells
    )


def _num(x):
    x = float(x)
    return x if math.isfinite(x) else None


def _matrix(a):
    return [[_num(v) for v in row] for row in np.asarray(a, dtype=float)]


def _vector(a):
    return [_num(v) for v in np.asarray(a, dtype=float)]


def _path(p):
    return [int(x) + 1 for x in p]


def dumps(doc) -> str:
    return json.dumps(doc, indent=2, allow_nan=False) + "\n"


def envelope(command, body) -> dict:
    return {"schema": SCHEMA_VERSION, "command": command, **body}


# ---------------------------------------------------------------------------
# per-command bodies


def perron_doc(perron, mode, exponent) -> dict:
    return {
        "mode": mode,
        "n": len(perron.right),
        "lambda": perron.lam,
        "entropy_rate": perron.entropy_rate,
        "primitive_exponent": exponent,
        "right": _vector(perron.right),
        "left": _vector(perron.left),
    }


def perron_text(doc) -> str:
    n = doc["n"]
    return "\n".join(
        [
            f"prior mode: {doc['mode']}",
            f"lambda: {fmt6(doc['lambda'])}",
            f"entropy rate log(lambda): {fmt6(doc['entropy_rate'])}",
            f"primitive exponent: {doc['primitive_exponent']}",
            "",
            text_table(
                [doc["right"], doc["left"]], ["right v", "left u"], range(1, n + 1), "node"
            ),
        ]
    )


def walk_doc(walk, mode, S, Ubar) -> dict:
    return {
        "mode": mode,
        "n": len(walk.stationary),
        "lambda": walk.perron.lam,
        "entropy_rate": S,
        "energy_rate": Ubar,
        "free_energy_gap": S - Ubar - math.log(walk.perron.lam),
        "kernel": _matrix(walk.kernel),
        "stationary": _vector(walk.stationary),
    }


def walk_text(doc) -> str:
    n = doc["n"]
    labels = range(1, n + 1)
    return "\n".join(
        [
            f"prior mode: {doc['mode']}",
            f"lambda: {fmt6(doc['lambda'])}",
            f"entropy rate S: {fmt6(doc['entropy_rate'])}",
            f"energy rate U: {fmt6(doc['energy_rate'])}",
            "",
            "transition kernel:",
            text_table(doc["kernel"], labels, labels, "from\\to"),
            "",
            "stationary measure:",
            text_table([doc["stationary"]], ["pi"], labels, "node"),
        ]
    )


def bridge_doc(problem, pot, ts, flow, mode) -> dict:
    return {
        "mode": mode,
        "n": problem.n,
        "horizon": problem.horizon,
        "iterations": pot.iterations,
        "hilbert_gap": pot.gaps[-1] if pot.gaps else 0.0,
        "nu0": _vector(problem.nu0),
        "nuN": _vector(problem.nuN),
        "flow": _matrix(flow.rows),
        "schedule": [_matrix(P) for P in ts.steps],
    }


def flow_text(flow_rows) -> str:
    flow_rows = np.asarray(flow_rows, dtype=float)
    return text_table(
        flow_rows, [f"t={t}" for t in range(len(flow_rows))], range(1, flow_rows.shape[1] + 1)
    )


def bridge_text(doc, show_schedule=True) -> str:
    lines = [
        f"prior mode: {doc['mode']}",
        f"horizon: {doc['horizon']}   sweeps: {doc['iterations']}",
        "",
        "marginal flow:",
        flow_text(doc["flow"]),
    ]
    if show_schedule:
        labels = range(1, doc["n"] + 1)
        for t, P in enumerate(doc["schedule"]):
            lines += ["", f"transition matrix t={t}:", text_table(P, labels, labels, "from\\to")]
    return "\n".join(lines)


def comparison_doc(report) -> dict:
    return {
        "cost_levels": [
            {
                "cost": lv.cost,
                "paths": lv.paths,
                "probability_min": lv.prob_min,
                "probability_max": lv.prob_max,
                "mass": lv.mass,
            }
            for lv in report.levels
        ],
        "decreasing_in_cost": report.decreasing_in_cost,
        "equal_cost_gap": report.equal_cost_gap,
        "boltzmann_spread": report.boltzmann_spread,
        "min_cost_paths": [
            {"path": _path(p), "probability": pr}
            for p, pr in zip(report.min_cost_paths, report.min_cost_path_probs)
        ],
        "mass_on_min_cost_paths": report.mass_on_min_cost_paths,
        "bridge_path_count": report.bridge_path_count,
        "omt_path_count": report.omt_path_count,
        "effective_support": report.effective_support,
    }


def plan_doc(plan, report=None) -> dict:
    doc = {
        "mode": plan.mode,
        "n": plan.graph.n,
        "source": plan.source + 1,
        "sink": plan.sink + 1,
        "horizon": plan.horizon,
        "path_count": float(plan.path_count),
        "flow": _matrix(plan.flow.rows),
        "schedule": [_matrix(P) for P in plan.schedule.steps],
        "paths": None,
        "comparison": None,
    }
    if plan.ensemble is not None:
        doc["paths"] = [
            {"path": _path(p), "probability": float(pr), "cost": float(c)}
            for p, pr, c in zip(plan.ensemble.paths, plan.ensemble.probs, plan.ensemble.costs)
        ]
    if report is not None:
        doc["comparison"] = comparison_doc(report)
    return doc


def plan_text(doc) -> str:
    lines = [
        f"prior mode: {doc['mode']}",
        f"source {doc['source']} -> sink {doc['sink']} in {doc['horizon']} steps "
        f"((M^N)_{{{doc['source']},{doc['sink']}}} = {doc['path_count']:.6g})",
        "",
        "marginal flow:",
        flow_text(doc["flow"]),
    ]
    if doc["paths"] is not None:
        rows = [[pr["probability"], pr["cost"]] for pr in doc["paths"]]
        names = ["-".join(map(str, pr["path"])) for pr in doc["paths"]]
        lines += ["", "paths:", text_table(rows, names, ["probability", "cost"], "path")]
    cmp_ = doc["comparison"]
    if cmp_ is not None:
        lines += [
            "",
            "comparison with cheapest routes:",
            f"  cost levels: {len(cmp_['cost_levels'])}",
            f"  probability strictly decreasing in cost: {cmp_['decreasing_in_cost']}",
            f"  mass on minimum-cost paths: {fmt6(cmp_['mass_on_min_cost_paths'])}",
            f"  paths used by bridge / OMT: {cmp_['bridge_path_count']} / {cmp_['omt_path_count']}",
            f"  effective support exp(H): {fmt6(cmp_['effective_support'])}",
        ]
        for m in cmp_["min_cost_paths"]:
            lines.append(f"  min-cost {'-'.join(map(str, m['path']))}: {fmt6(m['probability'])}")
    return "\n".join(lines)


def omt_doc(C, coupling, paths, source, sink) -> dict:
    return {
        "n": len(C.matrix),
        "horizon": C.horizon,
        "source": None if source is None else source + 1,
        "sink": None if sink is None else sink + 1,
        "cost_matrix": _matrix(C.matrix),
        "coupling": _matrix(coupling.q),
        "total_cost": coupling.total_cost,
        "slackness_residual": coupling.slackness_residual,
        "dual_violation": coupling.dual_violation,
        "min_cost_paths": [_path(p) for p in paths],
    }


def omt_text(doc) -> str:
    labels = range(1, doc["n"] + 1)
    lines = [
        f"horizon: {doc['horizon']}",
        f"total cost: {fmt6(doc['total_cost'])}",
        f"complementary slackness residual: {doc['slackness_residual']:.3e}",
        "",
        "end-point cost matrix:",
        text_table([[math.inf if v is None else v for v in r] for r in doc["cost_matrix"]], labels, labels, "from\\to"),
        "",
        "optimal coupling:",
        text_table(doc["coupling"], labels, labels, "from\\to"),
    ]
    if doc["min_cost_paths"]:
        lines += ["", "minimum-cost paths:"]
        lines += ["  " + "-".join(map(str, p)) for p in doc["min_cost_paths"]]
    return "\n".join(lines)


def verify_doc(plan, oracle, max_diff, tolerance) -> dict:
    return {
        "mode": plan.mode,
        "source": plan.source + 1,
        "sink": plan.sink + 1,
        "horizon": plan.horizon,
        "plan_paths": len(plan.ensemble) if plan.ensemble is not None else None,
        "oracle_paths": len(oracle),
        "max_discrepancy": max_diff,
        "tolerance": tolerance,
        "passed": bool(max_diff <= tolerance),
    }


def verify_text(doc) -> str:
    return "\n".join(
        [
            f"prior mode: {doc['mode']}",
            f"source {doc['source']} -> sink {doc['sink']} in {doc['horizon']} steps",
            f"paths (plan / oracle): {doc['plan_paths']} / {doc['oracle_paths']}",
            f"max path-probability discrepancy: {doc['max_discrepancy']:.3e}",
            f"result: {'PASS' if doc['passed'] else 'FAIL'} (tolerance {doc['tolerance']:.0e})",
        ]
    )
