"""
Two scenes with known answers
=============================

A single horizontal plate under a vertical beam, then a random layer of
flat leaves whose direct interception should follow 1 - exp(-L).
"""
import math

import numpy as np

from canopy_par.field import SceneField
from canopy_par.geometry import Mesh, PeriodicDomain
from canopy_par.radiation import RadiationConfig, compute_direct, compute_flux, energy_budget
from canopy_par.solar import SolarState, clear_sky_par

# a 1 m2 plate at z = 1, no ground underneath
plate = Mesh(np.array([[[0, 0, 1], [1, 0, 1], [1, 1, 1]],
                       [[0, 0, 1], [1, 1, 1], [0, 1, 1]]], float), 0)
scene = SceneField.from_mesh(plate, None, ground=False)
dni, _ = clear_sky_par(0.0)
flux = compute_flux(scene, SolarState(0.0, 0.0, dni, 0.0))
absorbed = (flux.absorbed * scene.mesh.areas).sum()
print(f"plate: DNI {dni:.1f}, absorbed {absorbed:.1f} (expect {0.8 * dni:.1f})")

# small horizontal triangles scattered through a periodic 2 m x 2 m cell
rng = np.random.default_rng(1)
side, r = 2.0, 0.05
leaf_area = 3 * math.sqrt(3) / 4 * r * r
for lai in (0.5, 1.0, 2.0, 3.0):
    n = int(round(lai * side * side / leaf_area))
    c = np.column_stack([rng.uniform(0, side, n), rng.uniform(0, side, n), rng.uniform(0.2, 1.5, n)])
    ang = rng.uniform(0, 2 * math.pi, n)[:, None] + np.array([0, 2, 4]) * math.pi / 3
    tris = np.stack([c[:, None, 0] + r * np.cos(ang), c[:, None, 1] + r * np.sin(ang),
                     np.repeat(c[:, None, 2], 3, axis=1)], axis=-1)
    layer = SceneField.from_mesh(Mesh(tris, 0), PeriodicDomain(side, side))
    d = compute_direct(layer, SolarState(0.0, 0.0, 1000.0, 0.0),
                       RadiationConfig(leaf_reflectance=0, leaf_transmittance=0))
    b = energy_budget(d, layer)
    print(f"LAI {lai:.1f}: intercepted {b['canopy'] / b['incident']:.3f}, Beer-Lambert {1 - math.exp(-lai):.3f}")
