"""
Which way should the rows run?
==============================

Sweeps four row azimuths at Ames with leaves off-row and prints the ranked
report. Sampling is coarse so this finishes in a few minutes.
"""
import datetime as dt
import math

from canopy_par.field import OFF_ROW
from canopy_par.plantgen import PlantParams, generate_maize
from canopy_par.radiation import RadiationConfig
from canopy_par.simdriver import ScenarioSpec, Schedule, row_direction_report, run_sweep

spec = ScenarioSpec(
    plant=generate_maize(PlantParams()),
    rows=3, plants_per_row=15,
    orientations=(OFF_ROW,),
    row_azimuths=tuple(math.radians(a) for a in (0, 45, 90, 135)),
    radiation=RadiationConfig(direct_samples_per_primitive=4, diffuse_samples_per_primitive=8,
                              scatter_samples_per_primitive=4, scattering_iterations=2),
    schedule=Schedule(step_minutes=195, start_date=dt.date(2020, 7, 20), end_date=dt.date(2020, 8, 10),
                      subsample=7),
)
result = run_sweep(spec, progress=lambda i, n: print(f"  scenario {i}/{n}"))
print(result.to_csv())
print(row_direction_report(result))
