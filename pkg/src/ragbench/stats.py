"""Rank correlation and score aggregation.

Spearman's rho is the Pearson correlation of mid-ranks (average ranks on
ties). Kendall's tau is the tau-b variant with tie corrections, which 1-5
ratings need. Score cards carry per-sample metric values keyed by stable
metric names; aggregation produces per-model means and a correlation report
of every automatic metric against the matching human dimension.
"""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import ConstantInputError, InputError

HUMAN_PREFIX = "human_"
JUDGE_PREFIXES = ("geval_", "prometheus_")
DIMENSION_NAMES = ("relevance", "readability", "truthfulness", "usability")


def _validate_pair(x: Sequence[float], y: Sequence[float]) -> tuple[np.ndarray, np.ndarray]:
    xs = np.asarray(list(x), dtype=np.float64)
    ys = np.asarray(list(y), dtype=np.float64)
    if xs.shape != ys.shape:
        raise InputError(f"length mismatch: {xs.shape[0]} vs {ys.shape[0]}")
    if xs.shape[0] < 2:
        raise InputError("need at least 2 observations")
    if np.all(xs == xs[0]):
        raise ConstantInputError("x is constant; correlation undefined")
    if np.all(ys == ys[0]):
        raise ConstantInputError("y is constant; correlation undefined")
    return xs, ys


def _midranks(values: np.ndarray) -> np.ndarray:
    order = np.argsort(values, kind="stable")
    sorted_values = values[order]
    ranks = np.empty(len(values), dtype=np.float64)
    i = 0
    while i < len(values):
        j = i
        while j + 1 < len(values) and sorted_values[j + 1] == sorted_values[i]:
            j += 1
        ranks[order[i : j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def spearman(x: Sequence[float], y: Sequence[float]) -> float:
    """Pearson correlation of mid-ranks."""
    xs, ys = _validate_pair(x, y)
    rx = _midranks(xs)
    ry = _midranks(ys)
    dx = rx - rx.mean()
    dy = ry - ry.mean()
    return float(np.dot(dx, dy) / math.sqrt(np.dot(dx, dx) * np.dot(dy, dy)))


def kendall(x: Sequence[float], y: Sequence[float]) -> float:
    """tau-b: (concordant - discordant) / sqrt((n0 - tx) (n0 - ty))."""
    xs, ys = _validate_pair(x, y)
    n = xs.shape[0]
    sign_x = np.sign(xs[:, None] - xs[None, :])
    sign_y = np.sign(ys[:, None] - ys[None, :])
    upper = np.triu_indices(n, k=1)
    concordant_minus_discordant = float(np.sum(sign_x[upper] * sign_y[upper]))
    ties_x = int(np.sum(sign_x[upper] == 0))
    ties_y = int(np.sum(sign_y[upper] == 0))
    n0 = n * (n - 1) / 2.0
    return concordant_minus_discordant / math.sqrt((n0 - ties_x) * (n0 - ties_y))


# ---------------------------------------------------------------------------
# Score cards

@dataclass(frozen=True)
class ScoreCard:
    sample_id: str
    model: str
    values: dict[str, float] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"sample_id": self.sample_id, "model": self.model, "values": dict(self.values)}

    @classmethod
    def from_dict(cls, row: dict) -> "ScoreCard":
        values = row.get("values") or {}
        return cls(
            sample_id=str(row["sample_id"]),
            model=str(row.get("model", "")),
            values={str(k): float(v) for k, v in values.items()},
        )


def merge_cards(cards: Iterable[ScoreCard]) -> list[ScoreCard]:
    """Collapse cards sharing (sample_id, model); duplicate keys average.

    Multi-annotator human cards are the one expected source of duplicates.
    """
    grouped: dict[tuple[str, str], dict[str, list[float]]] = defaultdict(lambda: defaultdict(list))
    order: list[tuple[str, str]] = []
    for card in cards:
        key = (card.sample_id, card.model)
        if key not in grouped:
            order.append(key)
        for metric, value in card.values.items():
            grouped[key][metric].append(value)
    return [
        ScoreCard(
            sample_id=sample_id,
            model=model,
            values={metric: sum(vals) / len(vals) for metric, vals in grouped[(sample_id, model)].items()},
        )
        for sample_id, model in order
    ]


@dataclass(frozen=True)
class SummaryRow:
    model: str
    metric: str
    mean: float | None
    count: int


def score_summary(cards: Sequence[ScoreCard], metrics: Sequence[str] | None = None) -> list[SummaryRow]:
    """Arithmetic mean per (model, metric) over samples carrying the metric.

    When ``metrics`` is given, requested metrics absent from every card still
    get a row with count 0.
    """
    if not cards:
        raise InputError("cards must be non-empty")
    cards = merge_cards(cards)
    models = sorted({card.model for card in cards})
    if metrics is None:
        metric_names = sorted({metric for card in cards for metric in card.values})
    else:
        metric_names = list(metrics)
    rows = []
    for model in models:
        model_cards = [c for c in cards if c.model == model]
        for metric in metric_names:
            values = [c.values[metric] for c in model_cards if metric in c.values]
            rows.append(
                SummaryRow(
                    model=model,
                    metric=metric,
                    mean=sum(values) / len(values) if values else None,
                    count=len(values),
                )
            )
    return rows


# ---------------------------------------------------------------------------
# Correlation report

@dataclass(frozen=True)
class CorrelationCell:
    metric: str
    dimension: str
    model: str
    spearman: float
    kendall: float
    n: int


@dataclass(frozen=True)
class OmittedCell:
    metric: str
    dimension: str
    model: str
    reason: str
    n: int


@dataclass(frozen=True)
class CorrelationReport:
    cells: tuple[CorrelationCell, ...]
    omitted: tuple[OmittedCell, ...]

    def to_dict(self) -> dict:
        return {
            "cells": [vars(c) for c in self.cells],
            "omitted": [vars(o) for o in self.omitted],
        }


def _metric_dimensions(metric: str) -> list[str]:
    """Judge metrics correlate against their own dimension; reference-based
    scalars correlate against every human dimension."""
    for prefix in JUDGE_PREFIXES:
        if metric.startswith(prefix):
            dimension = metric[len(prefix) :]
            return [dimension] if dimension in DIMENSION_NAMES else []
    return list(DIMENSION_NAMES)


def correlation_report(cards: Sequence[ScoreCard]) -> CorrelationReport:
    """Correlate each automatic metric against human ratings, per model.

    Pairs are formed over the explicit per-sample intersection: a sample
    contributes to a (metric, dimension, model) cell only when it carries
    both values. Cells with fewer than 2 pairs or a constant side are
    omitted with a recorded reason.
    """
    cards = merge_cards(cards)
    models = sorted({card.model for card in cards})
    metrics = sorted(
        {m for card in cards for m in card.values if not m.startswith(HUMAN_PREFIX)}
    )
    cells = []
    omitted = []
    for model in models:
        model_cards = [c for c in cards if c.model == model]
        for metric in metrics:
            for dimension in _metric_dimensions(metric):
                human_key = HUMAN_PREFIX + dimension
                pairs = [
                    (c.values[metric], c.values[human_key])
                    for c in model_cards
                    if metric in c.values and human_key in c.values
                ]
                if len(pairs) < 2:
                    omitted.append(
                        OmittedCell(metric, dimension, model, "fewer than 2 overlapping samples", len(pairs))
                    )
                    continue
                xs = [p[0] for p in pairs]
                ys = [p[1] for p in pairs]
                try:
                    rho = spearman(xs, ys)
                    tau = kendall(xs, ys)
                except ConstantInputError:
                    omitted.append(OmittedCell(metric, dimension, model, "constant values", len(pairs)))
                    continue
                cells.append(CorrelationCell(metric, dimension, model, rho, tau, len(pairs)))
    return CorrelationReport(cells=tuple(cells), omitted=tuple(omitted))


# ---------------------------------------------------------------------------
# Text tables

def format_summary_table(rows: Sequence[SummaryRow]) -> str:
    """Aligned means table; always printed next to the correlation table
    because similar averages can hide low correlation."""
    header = ("model", "metric", "mean", "n")
    body = [
        (row.model, row.metric, "-" if row.mean is None else f"{row.mean:.4f}", str(row.count))
        for row in rows
    ]
    return _align([header] + body)


def format_correlation_table(report: CorrelationReport) -> str:
    header = ("metric", "dimension", "model", "spearman", "kendall", "n")
    body = [
        (c.metric, c.dimension, c.model, f"{c.spearman:.4f}", f"{c.kendall:.4f}", str(c.n))
        for c in report.cells
    ]
    lines = [_align([header] + body)] if body else ["(no correlation cells)"]
    if report.omitted:
        lines.append("omitted:")
        for o in report.omitted:
            lines.append(f"  {o.metric}/{o.dimension}/{o.model}: {o.reason} (n={o.n})")
    return "\n".join(lines)


def _align(rows: list[tuple[str, ...]]) -> str:
    widths = [max(len(row[i]) for row in rows) for i in range(len(rows[0]))]
    return "\n".join("  ".join(cell.ljust(widths[i]) for i, cell in enumerate(row)).rstrip() for row in rows)
