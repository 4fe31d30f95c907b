"""Path-tracing kernel (numba).

The compiled scene is a :class:`KernelScene` namedtuple of flat arrays built
by :func:`orbtrace.scene.build.build_scene`. Each pixel is independent and
its random numbers come from :mod:`orbtrace.render.rng`, so any partition of
the pixels into tiles produces identical sums.
"""
import math
from collections import namedtuple

import numpy as np
from numba import njit

from ..geometry import RAY_EPSILON, bvh_nearest, nearest_sphere_t
from ..optics import scatter_dielectric
from .rng import path_key, uniform

KernelScene = namedtuple("KernelScene", [
    "cam",         # (16,) position, forward, right, up, tan_half, aspect, w, h
    "sph",         # (S, 8) cx cy cz r ior tint_r tint_g tint_b
    "sph_absorb",  # (S, 3) absorption per cm inside each sphere
    "quads",       # (Q, 16) origin U V N half_u half_v material pad
    "tris",        # (T, 3, 3)
    "tri_mat",     # (T,)
    "bvh_min", "bvh_max", "bvh_left", "bvh_right", "bvh_start", "bvh_count", "bvh_order",
    "mats",        # (M, 4) albedo rgb, kind (0 plain, 1 relief)
    "folds",       # (F, 16) see scene.build
    "segs",        # (G, 7) x0 y0 x1 y1 sigma darkness stroke_id
    "bands",       # (B, 8) nx ny offset half_width softness r g b
    "tex",         # (H, W, 3) linear albedo image; (1, 1, 3) when unused
    "tex_info",    # (5,) enabled u0 v0 u1 v1
    "light_dirs",  # (N, 3) unit directions toward the main light
    "light",       # (6,) main radiance total rgb, ambient rgb
])

MAX_STACK = 8
RR_DEPTH = 8
INV_PI = 1.0 / math.pi

# error codes reported through the per-tile status array
ERR_NONE = 0
ERR_STACK_UNDERFLOW = 1
ERR_STACK_OVERFLOW = 2


@njit(cache=True)
def _shadowed(sc, ox, oy, oz, dx, dy, dz):
    """Occlusion by diffuse geometry only; dielectric spheres are ignored."""
    quads = sc.quads
    for q in range(quads.shape[0]):
        nx, ny, nz = quads[q, 9], quads[q, 10], quads[q, 11]
        den = dx * nx + dy * ny + dz * nz
        if abs(den) < 1e-12:
            continue
        t = ((quads[q, 0] - ox) * nx + (quads[q, 1] - oy) * ny + (quads[q, 2] - oz) * nz) / den
        if t <= 0.0:
            continue
        px = ox + t * dx - quads[q, 0]
        py = oy + t * dy - quads[q, 1]
        pz = oz + t * dz - quads[q, 2]
        lu = px * quads[q, 3] + py * quads[q, 4] + pz * quads[q, 5]
        lv = px * quads[q, 6] + py * quads[q, 7] + pz * quads[q, 8]
        if abs(lu) <= quads[q, 12] and abs(lv) <= quads[q, 13]:
            return True
    if sc.tris.shape[0] > 0:
        ti, _, _, _, _ = bvh_nearest(ox, oy, oz, dx, dy, dz, 0.0, np.inf, sc.tris,
                                     sc.bvh_min, sc.bvh_max, sc.bvh_left, sc.bvh_right,
                                     sc.bvh_start, sc.bvh_count, sc.bvh_order)
        if ti >= 0:
            return True
    return False


@njit(cache=True)
def relief_texture(sc, u, v):
    """Albedo multiplier and height gradient of the procedural relief at (u, v)."""
    fr = 1.0
    fg = 1.0
    fb = 1.0
    gu = 0.0
    gv = 0.0
    info = sc.tex_info
    if info[0] > 0.5:
        H = sc.tex.shape[0]
        W = sc.tex.shape[1]
        x = (u - info[1]) / (info[3] - info[1]) * W - 0.5
        y = (info[4] - v) / (info[4] - info[2]) * H - 0.5
        x = min(max(x, 0.0), W - 1.0)
        y = min(max(y, 0.0), H - 1.0)
        x0 = int(x)
        y0 = int(y)
        x1 = min(x0 + 1, W - 1)
        y1 = min(y0 + 1, H - 1)
        ax = x - x0
        ay = y - y0
        c = np.empty(3)
        for ch in range(3):
            top = sc.tex[y0, x0, ch] * (1 - ax) + sc.tex[y0, x1, ch] * ax
            bot = sc.tex[y1, x0, ch] * (1 - ax) + sc.tex[y1, x1, ch] * ax
            c[ch] = top * (1 - ay) + bot * ay
        fr *= c[0]
        fg *= c[1]
        fb *= c[2]

    bands = sc.bands
    for b in range(bands.shape[0]):
        d = abs(bands[b, 0] * u + bands[b, 1] * v - bands[b, 2])
        t = (bands[b, 3] - d) / bands[b, 4] + 0.5
        if t <= 0.0:
            continue
        if t > 1.0:
            t = 1.0
        t = t * t * (3.0 - 2.0 * t)
        fr *= 1.0 + (bands[b, 5] - 1.0) * t
        fg *= 1.0 + (bands[b, 6] - 1.0) * t
        fb *= 1.0 + (bands[b, 7] - 1.0) * t

    folds = sc.folds
    for f in range(folds.shape[0]):
        ru = u - folds[f, 0]
        rv = v - folds[f, 1]
        dx = folds[f, 2]
        dy = folds[f, 3]
        s = ru * dx + rv * dy
        if s < folds[f, 4]:
            continue
        if s <= folds[f, 5]:
            dp = -ru * dy + rv * dx  # signed distance, positive to the left
            lx = -dy  # left normal
            ly = dx
        else:
            # circular bend beyond the straight part
            rho = folds[f, 13]
            turn = folds[f, 14]
            if rho <= 0.0 or turn == 0.0:
                continue
            sgn = 1.0 if turn > 0.0 else -1.0
            ex = folds[f, 0] + folds[f, 5] * dx
            ey = folds[f, 1] + folds[f, 5] * dy
            cx = ex - sgn * rho * dy
            cy = ey + sgn * rho * dx
            vx = u - cx
            vy = v - cy
            vl = math.sqrt(vx * vx + vy * vy)
            if vl == 0.0:
                continue
            # angle travelled along the arc from its start, in the turning sense
            ax = ex - cx
            ay = ey - cy
            ang = sgn * math.atan2(ax * vy - ay * vx, ax * vx + ay * vy)
            if ang < 0.0 or ang > abs(turn):
                continue
            dp = sgn * (rho - vl)
            lx = -sgn * vx / vl
            ly = -sgn * vy / vl
        sig = folds[f, 6]
        k = 1.0 - folds[f, 7] * math.exp(-0.5 * (dp / sig) ** 2)
        sw = folds[f, 11]
        if sw > 0.0 and dp < 0.0:
            k *= 1.0 - folds[f, 12] * math.exp(-0.5 * (dp / (0.5 * sw)) ** 2)
        fr *= k
        fg *= k
        fb *= k
        rs = folds[f, 9]
        dr = dp - folds[f, 10]
        g = -folds[f, 8] * dr / (rs * rs) * math.exp(-0.5 * (dr / rs) ** 2)
        gu += lx * g
        gv += ly * g

    segs = sc.segs
    g = 0
    n = segs.shape[0]
    while g < n:
        sid = segs[g, 6]
        best = np.inf
        sig = segs[g, 4]
        dark = segs[g, 5]
        while g < n and segs[g, 6] == sid:
            x0 = segs[g, 0]
            y0 = segs[g, 1]
            ex = segs[g, 2] - x0
            ey = segs[g, 3] - y0
            ll = ex * ex + ey * ey
            t = ((u - x0) * ex + (v - y0) * ey) / ll
            t = min(max(t, 0.0), 1.0)
            qx = u - (x0 + t * ex)
            qy = v - (y0 + t * ey)
            d2 = qx * qx + qy * qy
            if d2 < best:
                best = d2
            g += 1
        k = 1.0 - dark * math.exp(-0.5 * best / (sig * sig))
        fr *= k
        fg *= k
        fb *= k
    return fr, fg, fb, gu, gv


@njit(cache=True)
def _frame_sample(nx, ny, nz, u1, u2):
    """Cosine-weighted direction about unit normal n."""
    r = math.sqrt(u1)
    phi = 2.0 * math.pi * u2
    lx = r * math.cos(phi)
    ly = r * math.sin(phi)
    lz = math.sqrt(max(0.0, 1.0 - u1))
    sign = 1.0 if nz >= 0.0 else -1.0
    a = -1.0 / (sign + nz)
    b = nx * ny * a
    tx, ty, tz = 1.0 + sign * nx * nx * a, sign * b, -sign * nx
    bx, by, bz = b, sign + ny * ny * a, -ny
    return (lx * tx + ly * bx + lz * nx,
            lx * ty + ly * by + lz * ny,
            lx * tz + ly * bz + lz * nz)


@njit(cache=True)
def trace_path(sc, px, py, sample, max_depth, seed):
    """Radiance along one camera path. Returns (r, g, b, error, primitive)."""
    cam = sc.cam
    key = path_key(seed, px, py, sample, 0)
    x = px + uniform(key, 0)
    y = py + uniform(key, 1)
    sx = (2.0 * x / cam[14] - 1.0) * cam[12] * cam[13]
    sy = (1.0 - 2.0 * y / cam[15]) * cam[12]
    dx = cam[3] + sx * cam[6] + sy * cam[9]
    dy = cam[4] + sx * cam[7] + sy * cam[10]
    dz = cam[5] + sx * cam[8] + sy * cam[11]
    inv = 1.0 / math.sqrt(dx * dx + dy * dy + dz * dz)
    dx *= inv
    dy *= inv
    dz *= inv
    ox, oy, oz = cam[0], cam[1], cam[2]

    tr = 1.0
    tg = 1.0
    tb = 1.0
    lr = 0.0
    lg = 0.0
    lb = 0.0
    stack = np.empty(MAX_STACK, dtype=np.int64)
    depth = 0
    sph = sc.sph
    quads = sc.quads
    light = sc.light
    n_lights = sc.light_dirs.shape[0]

    for bounce in range(max_depth):
        if bounce > 0:
            key = path_key(seed, px, py, sample, bounce)
        t_best = np.inf
        kind = 0
        idx = -1
        for i in range(sph.shape[0]):
            t = nearest_sphere_t(ox, oy, oz, dx, dy, dz, sph[i, 0], sph[i, 1], sph[i, 2], sph[i, 3],
                                 0.0, t_best)
            if t > 0.0 and t < t_best:
                t_best = t
                kind = 1
                idx = i
        for q in range(quads.shape[0]):
            nx, ny, nz = quads[q, 9], quads[q, 10], quads[q, 11]
            den = dx * nx + dy * ny + dz * nz
            if abs(den) < 1e-12:
                continue
            t = ((quads[q, 0] - ox) * nx + (quads[q, 1] - oy) * ny + (quads[q, 2] - oz) * nz) / den
            if t <= 0.0 or t >= t_best:
                continue
            qx = ox + t * dx - quads[q, 0]
            qy = oy + t * dy - quads[q, 1]
            qz = oz + t * dz - quads[q, 2]
            lu = qx * quads[q, 3] + qy * quads[q, 4] + qz * quads[q, 5]
            lv = qx * quads[q, 6] + qy * quads[q, 7] + qz * quads[q, 8]
            if abs(lu) <= quads[q, 12] and abs(lv) <= quads[q, 13]:
                t_best = t
                kind = 2
                idx = q
        if sc.tris.shape[0] > 0:
            ti, t, _, _, _ = bvh_nearest(ox, oy, oz, dx, dy, dz, 0.0, t_best, sc.tris,
                                         sc.bvh_min, sc.bvh_max, sc.bvh_left, sc.bvh_right,
                                         sc.bvh_start, sc.bvh_count, sc.bvh_order)
            if ti >= 0 and t > 0.0 and t < t_best:
                t_best = t
                kind = 3
                idx = ti

        # absorption inside the current medium
        if depth > 0 and kind != 0:
            m = stack[depth - 1]
            tr *= math.exp(-sc.sph_absorb[m, 0] * t_best)
            tg *= math.exp(-sc.sph_absorb[m, 1] * t_best)
            tb *= math.exp(-sc.sph_absorb[m, 2] * t_best)

        if kind == 0:
            lr += tr * light[3]
            lg += tg * light[4]
            lb += tb * light[5]
            break

        hx = ox + t_best * dx
        hy = oy + t_best * dy
        hz = oz + t_best * dz

        if kind == 1:
            r = sph[idx, 3]
            nx = (hx - sph[idx, 0]) / r
            ny = (hy - sph[idx, 1]) / r
            nz = (hz - sph[idx, 2]) / r
            entering = dx * nx + dy * ny + dz * nz < 0.0
            n_from = 1.0 if depth == 0 else sph[stack[depth - 1], 4]
            if entering:
                if depth >= MAX_STACK:
                    return 0.0, 0.0, 0.0, ERR_STACK_OVERFLOW, idx
                n_to = sph[idx, 4]
            else:
                if depth == 0 or stack[depth - 1] != idx:
                    return 0.0, 0.0, 0.0, ERR_STACK_UNDERFLOW, idx
                n_to = 1.0 if depth == 1 else sph[stack[depth - 2], 4]
            ndx, ndy, ndz, transmitted, _ = scatter_dielectric(dx, dy, dz, nx, ny, nz, n_from, n_to,
                                                               uniform(key, 2))
            # offset side: along the facing normal for reflection, against it for transmission
            side = 1.0 if entering else -1.0
            if transmitted:
                side = -side
                # tint once per crossing of a tinted medium's boundary
                m_from = stack[depth - 1] if depth > 0 else -1
                m_to = idx if entering else (stack[depth - 2] if depth > 1 else -1)
                if m_from >= 0:
                    tr *= sph[m_from, 5]
                    tg *= sph[m_from, 6]
                    tb *= sph[m_from, 7]
                if m_to >= 0:
                    tr *= sph[m_to, 5]
                    tg *= sph[m_to, 6]
                    tb *= sph[m_to, 7]
                if entering:
                    stack[depth] = idx
                    depth += 1
                else:
                    depth -= 1
            ox = hx + side * RAY_EPSILON * nx
            oy = hy + side * RAY_EPSILON * ny
            oz = hz + side * RAY_EPSILON * nz
            dx, dy, dz = ndx, ndy, ndz
        else:
            if kind == 2:
                nx, ny, nz = quads[idx, 9], quads[idx, 10], quads[idx, 11]
                mat = int(quads[idx, 14])
            else:
                v = sc.tris[idx]
                e1x = v[1, 0] - v[0, 0]
                e1y = v[1, 1] - v[0, 1]
                e1z = v[1, 2] - v[0, 2]
                e2x = v[2, 0] - v[0, 0]
                e2y = v[2, 1] - v[0, 1]
                e2z = v[2, 2] - v[0, 2]
                nx = e1y * e2z - e1z * e2y
                ny = e1z * e2x - e1x * e2z
                nz = e1x * e2y - e1y * e2x
                nn = 1.0 / math.sqrt(nx * nx + ny * ny + nz * nz)
                nx *= nn
                ny *= nn
                nz *= nn
                mat = sc.tri_mat[idx]
            front = dx * nx + dy * ny + dz * nz < 0.0
            if not front:
                nx, ny, nz = -nx, -ny, -nz
            ar = sc.mats[mat, 0]
            ag = sc.mats[mat, 1]
            ab = sc.mats[mat, 2]
            snx, sny, snz = nx, ny, nz
            if kind == 2 and sc.mats[mat, 3] > 0.5:
                qx = hx - quads[idx, 0]
                qy = hy - quads[idx, 1]
                qz = hz - quads[idx, 2]
                lu = qx * quads[idx, 3] + qy * quads[idx, 4] + qz * quads[idx, 5]
                lv = qx * quads[idx, 6] + qy * quads[idx, 7] + qz * quads[idx, 8]
                fr, fg, fb, gu, gv = relief_texture(sc, lu, lv)
                ar *= fr
                ag *= fg
                ab *= fb
                if front:
                    snx = nx - gu * quads[idx, 3] - gv * quads[idx, 6]
                    sny = ny - gu * quads[idx, 4] - gv * quads[idx, 7]
                    snz = nz - gu * quads[idx, 5] - gv * quads[idx, 8]
                    sl = 1.0 / math.sqrt(snx * snx + sny * sny + snz * snz)
                    snx *= sl
                    sny *= sl
                    snz *= sl
            px_ = hx + RAY_EPSILON * nx
            py_ = hy + RAY_EPSILON * ny
            pz_ = hz + RAY_EPSILON * nz

            if n_lights > 0:
                j = int(uniform(key, 3) * n_lights)
                if j >= n_lights:
                    j = n_lights - 1
                wx = sc.light_dirs[j, 0]
                wy = sc.light_dirs[j, 1]
                wz = sc.light_dirs[j, 2]
                cs = snx * wx + sny * wy + snz * wz
                cg = nx * wx + ny * wy + nz * wz
                if cs > 0.0 and cg > 0.0 and not _shadowed(sc, px_, py_, pz_, wx, wy, wz):
                    # uniform choice among N directions cancels the 1/N split
                    w = cs * INV_PI
                    lr += tr * ar * light[0] * w
                    lg += tg * ag * light[1] * w
                    lb += tb * ab * light[2] * w

            wx, wy, wz = _frame_sample(snx, sny, snz, uniform(key, 4), uniform(key, 5))
            if wx * nx + wy * ny + wz * nz <= 0.0:
                break
            tr *= ar
            tg *= ag
            tb *= ab
            ox, oy, oz = px_, py_, pz_
            dx, dy, dz = wx, wy, wz

        if bounce + 1 >= RR_DEPTH:
            q = max(tr, max(tg, tb))
            q = min(max(q, 0.05), 1.0)
            if uniform(key, 6) >= q:
                break
            tr /= q
            tg /= q
            tb /= q
    return lr, lg, lb, ERR_NONE, -1


@njit(cache=True, nogil=True)
def render_pixels(sc, xs, ys, spp, max_depth, seed, out, status):
    """Accumulate ``spp`` samples for each listed pixel into ``out`` (n, 3).

    ``status`` receives (error code, x, y, primitive) of the first geometry
    error and (count, x, y) of non-finite samples, which are dropped.
    """
    for k in range(xs.shape[0]):
        px = xs[k]
        py = ys[k]
        ar = 0.0
        ag = 0.0
        ab = 0.0
        for s in range(spp):
            r, g, b, err, prim = trace_path(sc, px, py, s, max_depth, seed)
            if err != ERR_NONE:
                if status[0] == 0:
                    status[0] = err
                    status[1] = px
                    status[2] = py
                    status[3] = prim
                return
            if not (math.isfinite(r) and math.isfinite(g) and math.isfinite(b)):
                if status[4] == 0:
                    status[5] = px
                    status[6] = py
                status[4] += 1
                continue
            ar += r
            ag += g
            ab += b
        out[k, 0] = ar
        out[k, 1] = ag
        out[k, 2] = ab
