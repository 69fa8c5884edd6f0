"""Ray-traced PAR interception for row-crop canopies."""
from .bvh import Bvh, build_bvh, intersect, trace_rays
from .field import (OFF_ROW, ON_ROW, RANDOM, FieldLayout, Orientation, OrientationMode, SceneField, build_field,
                    convert_spacing)
from .geometry import Hit, Mesh, Organ, PeriodicDomain, Ray, Triangle, transform
from .plantgen import (AmbiguousAzimuthError, PlantModel, PlantParams, estimate_leaf_plane_azimuth, generate_maize,
                       reorient)
from .ply import PlyError, load_ply, save_ply
from .radiation import (FluxMap, RadiationConfig, SensorReading, SensorSpec, compute_diffuse, compute_direct,
                        compute_flux, default_sensors, energy_budget, per_plant_interception, read_sensors,
                        run_scattering)
from .simdriver import (DailyResult, ScenarioSpec, Schedule, SeasonalResult, row_direction_report, run_day,
                        run_season, run_sweep, run_timepoint)
from .solar import (AMES, BISMARCK, THOMAS_COUNTY, GeoLocation, SkyModelParams, SolarState, TimePoint,
                    clear_sky_par, solar_position, solar_state)

__version__ = "0.1.0"
