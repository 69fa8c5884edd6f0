"""Agreement between simulated and measured intercepted fractions."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import List, Sequence

import numpy as np

PAIR_COLUMNS = ("genotype_id", "measured_fraction", "simulated_fraction")


class ValidationError(ValueError):
    pass


@dataclass(frozen=True)
class ValidationRecord:
    genotype_id: str
    measured_fraction: float
    simulated_fraction: float

    def __post_init__(self):
        for name in ("measured_fraction", "simulated_fraction"):
            v = getattr(self, name)
            if not math.isfinite(v) or not 0.0 <= v <= 1.0:
                raise ValidationError(f"{self.genotype_id}: {name} must be a finite value in [0, 1], got {v}")

    @property
    def residual(self) -> float:
        return self.simulated_fraction - self.measured_fraction


@dataclass(frozen=True)
class ValidationReport:
    records: List[ValidationRecord]
    r_squared: float

    def table(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(PAIR_COLUMNS + ("residual",))
        for r in self.records:
            w.writerow([r.genotype_id, repr(r.measured_fraction), repr(r.simulated_fraction), repr(r.residual)])
        return buf.getvalue()


def r_squared(measured: Sequence[float], simulated: Sequence[float]) -> float:
    """Coefficient of determination ``1 - SS_res / SS_tot`` of simulated against measured."""
    y = np.asarray(measured, dtype=float)
    f = np.asarray(simulated, dtype=float)
    if y.shape != f.shape:
        raise ValidationError("measured and simulated differ in length")
    if len(y) < 3:
        raise ValidationError("at least 3 records are required")
    if not (np.isfinite(y).all() and np.isfinite(f).all()):
        raise ValidationError("values must be finite")
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    if ss_tot == 0.0:
        raise ValidationError("measured values have zero variance")
    ss_res = float(np.sum((y - f) ** 2))
    return 1.0 - ss_res / ss_tot


def validate(records: Sequence[ValidationRecord]) -> ValidationReport:
    records = list(records)
    r2 = r_squared([r.measured_fraction for r in records], [r.simulated_fraction for r in records])
    return ValidationReport(records, r2)


def load_pairs(path) -> List[ValidationRecord]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        missing = [c for c in PAIR_COLUMNS if c not in (reader.fieldnames or [])]
        if missing:
            raise ValidationError(f"missing column(s): {', '.join(missing)}")
        out = []
        for n, row in enumerate(reader, start=2):
            try:
                out.append(ValidationRecord(row["genotype_id"], float(row["measured_fraction"]),
                                            float(row["simulated_fraction"])))
            except ValueError as exc:
                raise ValidationError(f"line {n}: {exc}") from None
    return out
