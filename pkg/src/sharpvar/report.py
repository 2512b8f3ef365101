"""Serialisable report documents (JSON and ``metric<TAB>value`` TSV).

Floats are written as their shortest round-trip decimal strings (``repr``),
so a JSON report parses back to exactly the same numbers.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any, Optional

from .estimators import CI_BASES_ESTIMATE, VarianceEstimateSet
from .population import INFINITE, ExperimentDesign
from .simulation import SimulationReport

__all__ = [
    "SCHEMA_VERSION",
    "ReportDocument",
    "design_to_dict",
    "estimate_document",
    "illustration_document",
    "simulation_document",
]

SCHEMA_VERSION = "1"


def design_to_dict(design: ExperimentDesign) -> dict:
    return {"N": "infinite" if design.N is INFINITE else design.N, "n": design.n, "m": design.m}


def _flatten(prefix: str, value: Any, out: list) -> None:
    if isinstance(value, dict):
        for key, sub in value.items():
            _flatten(f"{prefix}.{key}" if prefix else str(key), sub, out)
    elif isinstance(value, (list, tuple)):
        for i, sub in enumerate(value):
            _flatten(f"{prefix}.{i}", sub, out)
    else:
        out.append((prefix, value))


def _tsv_value(value: Any) -> str:
    if value is None:
        return "NA"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


@dataclass
class ReportDocument:
    command: str
    inputs: dict
    results: dict
    diagnostics: list = field(default_factory=list)
    schema_version: str = SCHEMA_VERSION
    generated_at: Optional[str] = None

    def to_dict(self) -> dict:
        out = {
            "schema_version": self.schema_version,
            "command": self.command,
            "inputs": self.inputs,
            "results": self.results,
            "diagnostics": list(self.diagnostics),
        }
        if self.generated_at is not None:
            out["generated_at"] = self.generated_at
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "ReportDocument":
        return cls(
            command=data["command"],
            inputs=data["inputs"],
            results=data["results"],
            diagnostics=list(data.get("diagnostics", [])),
            schema_version=data["schema_version"],
            generated_at=data.get("generated_at"),
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, allow_nan=False) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "ReportDocument":
        return cls.from_dict(json.loads(text))

    def rows(self) -> list:
        """Flattened ``(metric, value)`` pairs with dotted metric names."""
        out = [("schema_version", self.schema_version), ("command", self.command)]
        _flatten("inputs", self.inputs, out)
        _flatten("results", self.results, out)
        out.append(("diagnostics", ",".join(self.diagnostics) if self.diagnostics else None))
        if self.generated_at is not None:
            out.append(("generated_at", self.generated_at))
        return out

    def to_tsv(self) -> str:
        lines = ["metric\tvalue"]
        lines.extend(f"{name}\t{_tsv_value(value)}" for name, value in self.rows())
        return "\n".join(lines) + "\n"

    def render(self, fmt: str) -> str:
        if fmt == "json":
            return self.to_json()
        if fmt == "tsv":
            return self.to_tsv()
        raise ValueError(f"unknown format {fmt!r}")


def _interval_dict(est: VarianceEstimateSet, basis: str) -> dict:
    ci = est.interval(basis)
    return {"lower": ci.lower, "upper": ci.upper, "half_width": ci.half_width}


def estimate_document(est: VarianceEstimateSet, inputs: dict) -> ReportDocument:
    results = {
        "design": design_to_dict(est.design),
        "tau_hat": est.tau_hat,
        "s2_y1_hat": est.s2_y1_hat,
        "s2_y0_hat": est.s2_y0_hat,
        "cov_high_hat": est.cov_high_hat,
        "cov_low_hat": est.cov_low_hat,
        "v_a": est.v_a,
        "v_b_plus": est.v_b_plus,
        "v_b_minus": est.v_b_minus,
        "v_high": est.v_high,
        "v_low": est.v_low,
        "intervals": {basis: _interval_dict(est, basis) for basis in CI_BASES_ESTIMATE},
    }
    return ReportDocument("estimate", inputs, results, list(est.diagnostics))


def simulation_document(report: SimulationReport, inputs: dict) -> ReportDocument:
    estimators = {
        name: {
            "mean_variance": summary.mean_variance,
            "mean_ci_width": summary.mean_ci_width,
            "coverage": summary.coverage,
        }
        for name, summary in report.estimators.items()
    }
    results = {
        "mode": "exact" if report.exact else "monte_carlo",
        "design": design_to_dict(report.design),
        "replicates": report.replicates,
        "tau": report.tau,
        "true_variance": report.true_variance,
        "mean_tau_hat": report.mean_tau_hat,
        "gamma_hat": report.gamma_hat,
        "width_order_violations": report.width_order_violations,
        "estimators": estimators,
    }
    return ReportDocument("simulate", inputs, results, list(report.diagnostics))


def illustration_document(rows: list, inputs: dict) -> ReportDocument:
    out = []
    for i, row in enumerate(rows, start=1):
        out.append({
            "row": i,
            "alpha0": row.control.alpha,
            "beta0": row.control.beta,
            "alpha1": row.treat.alpha,
            "beta1": row.treat.beta,
            "ratio_vs_conventional": row.ratio_vs_conventional,
            "ratio_vs_neyman_upper": row.ratio_vs_neyman_upper,
        })
    return ReportDocument("illustrate", inputs, {"grid_size": rows[0].grid_size if rows else None,
                                                 "rows": out})

