"""Evaluation metrics and the tabular report emitted by scenario runs."""

import csv
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np


def asce(estimated_supports, true_supports) -> float:
    """Average support-set cardinality error over trials and users.

    Both arguments are nested per-trial, per-user sequences of index sets;
    ``true_supports`` may instead be a single per-user sequence shared by
    all trials. Returns 1 minus the mean recovered fraction
    |estimate ∩ truth| / |truth|, which lies in [0, 1].
    """
    if not estimated_supports:
        raise ValueError("no estimates given")
    total = 0.0
    count = 0
    for m, per_user in enumerate(estimated_supports):
        truths = true_supports[m] if _nested(true_supports) else true_supports
        if len(truths) != len(per_user):
            raise ValueError("estimate/truth user counts differ")
        for est, truth in zip(per_user, truths):
            truth_set = set(truth)
            if not truth_set:
                raise ValueError("true support must not be empty")
            total += len(truth_set & set(est)) / len(truth_set)
            count += 1
    return 1.0 - total / count


def _nested(true_supports) -> bool:
    first = true_supports[0]
    return bool(first) and not isinstance(first[0], (int, np.integer))


def nmse(h_estimates: Sequence[np.ndarray], h_truths: Sequence[np.ndarray]) -> float:
    """Mean of ||estimate - truth||^2 / ||truth||^2 over channel vectors."""
    if len(h_estimates) != len(h_truths):
        raise ValueError("estimate/truth counts differ")
    if not h_truths:
        raise ValueError("no channels given")
    ratios = []
    for est, truth in zip(h_estimates, h_truths):
        denom = float(np.vdot(truth, truth).real)
        if denom == 0.0:
            raise ValueError("true channel has zero norm")
        diff = np.asarray(est) - np.asarray(truth)
        ratios.append(float(np.vdot(diff, diff).real) / denom)
    return float(np.mean(ratios))


@dataclass(frozen=True)
class MetricsRow:
    """One aggregated result cell of a scenario run."""

    scenario: str
    algorithm: str
    num_slots: int
    snr_tag: str
    asce: float
    nmse: float
    bits: int
    trials: int


@dataclass(frozen=True)
class MetricsReport:
    """All metric rows of one scenario, with lookup helpers."""

    scenario: str
    rows: tuple

    def row(self, algorithm: str, num_slots: int, snr_tag: str) -> MetricsRow:
        for r in self.rows:
            if (r.algorithm == algorithm and r.num_slots == num_slots
                    and r.snr_tag == snr_tag):
                return r
        raise KeyError(f"no row for ({algorithm}, T={num_slots}, {snr_tag})")

    def asce_curve(self, algorithm: str, snr_tag: str) -> dict:
        """ASCE keyed by T, ascending."""
        curve = {
            r.num_slots: r.asce
            for r in self.rows
            if r.algorithm == algorithm and r.snr_tag == snr_tag
        }
        return dict(sorted(curve.items()))

    def smallest_t_reaching(self, algorithm: str, snr_tag: str,
                            threshold: float) -> Optional[int]:
        """Smallest T whose ASCE is at or below the threshold, if any."""
        for t, value in self.asce_curve(algorithm, snr_tag).items():
            if value <= threshold:
                return t
        return None

    def snr_tags(self) -> tuple:
        seen = []
        for r in self.rows:
            if r.snr_tag not in seen:
                seen.append(r.snr_tag)
        return tuple(seen)


CSV_COLUMNS = ("scenario", "algorithm", "T", "snr_tag", "asce", "nmse",
               "bits", "trials")


def emit_csv(report: MetricsReport, path) -> None:
    """Write the report as CSV, one row per (algorithm, T, snr_tag).

    Row order follows the report (deterministic for a given config), so
    re-running the same scenario with the same master seed reproduces the
    file byte for byte.
    """
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(CSV_COLUMNS)
            for r in report.rows:
                writer.writerow([
                    r.scenario, r.algorithm, r.num_slots, r.snr_tag,
                    f"{r.asce:.12g}", f"{r.nmse:.12g}", r.bits, r.trials,
                ])
    except OSError as exc:
        raise OSError(f"failed writing report to {path}: {exc}") from exc
