import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from orbtrace.geometry import Ray, Shell, intersect_shell
from orbtrace.optics import (
    GLASS_IOR,
    CalciteSpec,
    DielectricSpec,
    GeometryInconsistencyError,
    MediumStack,
    Shell2D,
    aim_with_impact_parameter,
    background_displacement,
    fresnel_reflectance,
    fresnel_transmittance,
    refract,
    shade_dielectric,
    trace_shell_2d,
)
from oracles import march_shell_2d

CRITICAL = math.asin(1.0 / GLASS_IOR)


def angle_between(a, b):
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    return math.atan2(np.linalg.norm(np.cross(a, b)), float(np.dot(a, b)))


def incident_at(theta):
    """Unit direction hitting the plane z=0 from above at ``theta`` from the normal."""
    return np.array([math.sin(theta), 0.0, -math.cos(theta)])


UP = np.array([0.0, 0.0, 1.0])


# --- refraction -------------------------------------------------------------


def test_normal_incidence_passes_straight():
    for eta in (1 / GLASS_IOR, GLASS_IOR, 0.3, 2.0):
        np.testing.assert_allclose(refract(-UP, UP, eta), -UP, atol=1e-15)


def test_snell_at_45_degrees():
    t = refract(incident_at(math.pi / 4), UP, 1 / GLASS_IOR)
    expected = math.asin(math.sin(math.pi / 4) / GLASS_IOR)
    assert angle_between(t, -UP) == pytest.approx(expected, abs=1e-12)
    assert np.linalg.norm(t) == pytest.approx(1.0, abs=1e-12)


def test_total_internal_reflection_at_critical_angle():
    # from inside glass, probing 0.1 degree either side of the critical angle
    below = refract(incident_at(CRITICAL - math.radians(0.1)), UP, GLASS_IOR)
    above = refract(incident_at(CRITICAL + math.radians(0.1)), UP, GLASS_IOR)
    assert below is not None
    assert above is None
    assert fresnel_reflectance(math.cos(CRITICAL + math.radians(0.1)), GLASS_IOR, 1.0) == 1.0


def test_reversibility_over_1e5_samples():
    rng = np.random.default_rng(11)
    worst = 0.0
    done = 0
    while done < 100_000:
        n = rng.normal(size=3)
        n /= np.linalg.norm(n)
        d = rng.normal(size=3)
        d /= np.linalg.norm(d)
        if np.dot(d, n) >= -1e-6:
            continue
        eta = rng.uniform(0.4, 2.5)
        t = refract(d, n, eta)
        if t is None:
            continue
        back = refract(-t, -n, 1.0 / eta)
        worst = max(worst, float(np.max(np.abs(-back - d))))
        done += 1
    assert worst < 1e-9


@settings(max_examples=500, deadline=None)
@given(theta=st.floats(0.0, 1.5), phi=st.floats(0.0, 2 * math.pi), eta=st.floats(0.3, 3.0))
def test_transmitted_direction_stays_in_plane_of_incidence(theta, phi, eta):
    d = np.array([math.sin(theta) * math.cos(phi), math.sin(theta) * math.sin(phi), -math.cos(theta)])
    t = refract(d, UP, eta)
    if t is None:
        assert eta * math.sin(theta) > 1.0 - 1e-12
        return
    plane_normal = np.cross(d, UP)
    if np.linalg.norm(plane_normal) > 1e-9:
        assert abs(np.dot(t, plane_normal / np.linalg.norm(plane_normal))) < 1e-12
    assert abs(np.linalg.norm(t) - 1.0) < 1e-12
    # Snell in angle form
    sin_t = math.sin(angle_between(t, -UP))
    assert sin_t == pytest.approx(eta * math.sin(theta), abs=1e-12)


# --- Fresnel ----------------------------------------------------------------


def test_normal_incidence_reflectance():
    expected = ((GLASS_IOR - 1) / (GLASS_IOR + 1)) ** 2
    assert fresnel_reflectance(1.0, 1.0, GLASS_IOR) == pytest.approx(expected, abs=1e-15)
    assert fresnel_reflectance(1.0, 1.0, GLASS_IOR) == pytest.approx(0.0422, abs=5e-5)
    assert fresnel_transmittance(1.0, 1.0, GLASS_IOR) == pytest.approx(1 - expected, abs=1e-15)


def test_grazing_reflectance_tends_to_one():
    assert fresnel_reflectance(1e-9, 1.0, GLASS_IOR) > 0.999999


def test_reflectance_validates_input():
    with pytest.raises(ValueError):
        fresnel_reflectance(0.0, 1.0, GLASS_IOR)
    with pytest.raises(ValueError):
        fresnel_reflectance(0.5, -1.0, GLASS_IOR)


@settings(max_examples=2000, deadline=None)
@given(cos_i=st.floats(1e-6, 1.0), eta_from=st.floats(1.0, 2.5), eta_to=st.floats(1.0, 2.5))
def test_energy_conservation(cos_i, eta_from, eta_to):
    r = fresnel_reflectance(cos_i, eta_from, eta_to)
    t = fresnel_transmittance(cos_i, eta_from, eta_to)
    assert 0.0 <= r <= 1.0
    assert abs(r + t - 1.0) <= 1e-12


# --- media ------------------------------------------------------------------


def test_medium_stack_depths_through_a_hollow_shell():
    shell = Shell((0, 0, 0), 6.8, 0.13)
    glass = 1
    stack = MediumStack()
    depths = [stack.depth]
    for hit in intersect_shell(Ray((0, 0, -40), (0, 0, 1)), shell):
        # entering the inner sphere means leaving the glass, and vice versa
        if hit.interface == "outer":
            stack.push(glass, GLASS_IOR) if hit.entering else stack.pop(glass)
        else:
            stack.pop(glass) if hit.entering else stack.push(glass, GLASS_IOR)
        depths.append(stack.depth)
    assert depths == [1, 2, 1, 2, 1]
    assert stack.top[1] == 1.0


def test_medium_stack_solid():
    stack = MediumStack()
    stack.push(1, GLASS_IOR)
    assert stack.depth == 2 and stack.ior == GLASS_IOR
    stack.pop(1)
    assert stack.depth == 1


def test_medium_stack_underflow_and_mismatch():
    stack = MediumStack()
    with pytest.raises(GeometryInconsistencyError):
        stack.pop(-1)
    stack.push(1, GLASS_IOR)
    with pytest.raises(GeometryInconsistencyError):
        stack.pop(2)
    with pytest.raises(ValueError):
        MediumStack([])


def test_shade_dielectric_transmission_and_reflection():
    media = {3: DielectricSpec(tint=(0.9, 0.8, 0.7))}
    ray = Ray((0, 0, -40), (0, 0, 1))
    hit = intersect_shell(ray, Shell((0, 0, 0), 6.8, 6.8), material_id=3)[0]
    stack = MediumStack()
    # u above the reflectance transmits
    ev = shade_dielectric(hit, ray.direction, stack, media, 0.9)
    assert ev.transmitted and ev.stack.depth == 2
    np.testing.assert_allclose(ev.weight, (0.9, 0.8, 0.7))
    np.testing.assert_allclose(ev.direction, (0, 0, 1), atol=1e-15)
    assert stack.depth == 1  # input stack untouched
    ev = shade_dielectric(hit, ray.direction, stack, media, 0.01)
    assert not ev.transmitted and ev.stack.depth == 1
    np.testing.assert_allclose(ev.direction, (0, 0, -1), atol=1e-15)
    assert ev.reflect_probability == pytest.approx(fresnel_reflectance(1.0, 1.0, GLASS_IOR))
    # leaving a medium the ray never entered
    far = intersect_shell(ray, Shell((0, 0, 0), 6.8, 6.8), material_id=3)[1]
    with pytest.raises(GeometryInconsistencyError):
        shade_dielectric(far, ray.direction, MediumStack(), media, 0.9)


def test_material_validation():
    with pytest.raises(ValueError):
        DielectricSpec(ior=1.0)
    with pytest.raises(ValueError):
        DielectricSpec(ior=3.5)
    with pytest.raises(ValueError):
        DielectricSpec(tint=(1.2, 1.0, 1.0))
    with pytest.raises(ValueError):
        CalciteSpec(ior_ordinary=1.486, ior_extraordinary=1.658)
    c = CalciteSpec()
    assert (c.ior_ordinary, c.ior_extraordinary) == (1.658, 1.486)
    assert c.as_dielectric("ordinary").ior == 1.658
    assert c.as_dielectric("extraordinary").ior == 1.486


# --- 2D chief ray -----------------------------------------------------------


EYE = np.array([0.0, 65.0])
CENTRE = np.array([0.0, 0.0])


def test_central_ray_is_undeviated_for_random_shells():
    rng = np.random.default_rng(21)
    worst = 0.0
    for _ in range(1000):
        thickness = rng.uniform(1e-3, 6.8)
        ior = rng.uniform(1.01, 3.0)
        path = trace_shell_2d(EYE, Shell2D(tuple(CENTRE), 6.8, thickness, ior), CENTRE)
        assert path.events
        worst = max(worst, path.deviation_angle(CENTRE - EYE))
    assert worst < 1e-10


def test_miss_is_flagged_undeviated():
    path = trace_shell_2d(EYE, Shell2D((0.0, 0.0), 6.8, 0.13), (20.0, 0.0))
    assert path.undeviated and path.events == []


def test_eye_inside_is_rejected():
    with pytest.raises(ValueError):
        trace_shell_2d((0.0, 1.0), Shell2D((0.0, 0.0), 6.8, 0.13), (0.0, -1.0))


def test_vanishing_shell_has_no_deviation():
    for b in (1.0, 3.4, 6.0, 6.7):
        target = aim_with_impact_parameter(EYE, CENTRE, b)
        path = trace_shell_2d(EYE, Shell2D(tuple(CENTRE), 6.8, 1e-9), target)
        assert path.deviation_angle(target - EYE) < 1e-7


def test_displacement_on_background_plane_matches_marching_value():
    # frozen from the marching oracle (steps 0.02 and 0.005 agree to 1e-16)
    expected = 0.2255977981434558
    got = background_displacement((0.0, 90.0), Shell2D((0.0, 0.0), 6.8, 0.13), 3.4, 25.0)
    assert got == pytest.approx(expected, abs=1e-9)


def test_displacement_grows_with_thickness():
    b = 3.4
    values = [abs(background_displacement(EYE, Shell2D((0.0, 0.0), 6.8, th), b, 25.0))
              for th in np.linspace(0.05, 0.5, 50)]
    assert all(v2 >= v1 for v1, v2 in zip(values, values[1:]))


def random_shell_rays(rng, n):
    """Random (shell, target) pairs away from tangencies the fixed-step scan cannot resolve."""
    out = []
    while len(out) < n:
        thickness = rng.uniform(0.05, 6.3)
        ior = rng.uniform(1.2, 2.0)
        b = rng.uniform(0.0, 6.8 * 0.999)
        inner = 6.8 - thickness
        if abs(b / ior - inner) < 1e-2 or abs(b - 6.8) < 1e-2:
            continue
        out.append((thickness, ior, b))
    return out


def oracle_agreement(rays):
    worst = 0.0
    for thickness, ior, b in rays:
        target = aim_with_impact_parameter(EYE, CENTRE, b)
        path = trace_shell_2d(EYE, Shell2D(tuple(CENTRE), 6.8, thickness, ior), target)
        _, d, events = march_shell_2d(EYE, CENTRE, [(6.8, ior), (6.8 - thickness, 1.0)], target, step=0.05)
        assert events == path.events
        e = path.exit_direction
        worst = max(worst, abs(math.atan2(d[0] * e[1] - d[1] * e[0], float(np.dot(d, e)))))
    return worst


def test_analytic_tracer_matches_marching_oracle():
    assert oracle_agreement(random_shell_rays(np.random.default_rng(5), 500)) < 1e-9
