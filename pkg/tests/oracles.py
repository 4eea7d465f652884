"""Independent brute-force oracles for the estimator tests.

Everything here is written with plain python loops and the math module,
deliberately avoiding the package's vectorised summation machinery, so
the estimators are checked against a second, independent path.  Inputs
are raw arrays plus a window tuple (x_min, x_max, y_min, y_max, topology).
"""

import math


def odist(win, a, b):
    x0, x1, y0, y1, topo = win
    dx = abs(a[0] - b[0])
    dy = abs(a[1] - b[1])
    if topo == "torus":
        dx = min(dx, (x1 - x0) - dx)
        dy = min(dy, (y1 - y0) - dy)
    return math.hypot(dx, dy)


def oarea(win):
    return (win[1] - win[0]) * (win[3] - win[2])


def oedge(win, a, b):
    if win[4] == "torus":
        return 1.0
    sx, sy = win[1] - win[0], win[3] - win[2]
    dx = abs(a[0] - b[0])
    dy = abs(a[1] - b[1])
    return (sx * sy) / ((sx - dx) * (sy - dy))


def okernel(name, u, b):
    if abs(u) > b:
        return 0.0
    if name == "box":
        return 0.5 / b
    if name == "epanechnikov":
        return 0.75 / b * (1.0 - (u / b) ** 2)
    s = b / 3.0
    return math.exp(-0.5 * (u / s) ** 2) / (s * math.sqrt(2 * math.pi) * math.erf(3 / math.sqrt(2)))


def otrap(ts, vals):
    if len(ts) == 1:
        return float(vals[0])
    total = 0.0
    for k in range(len(ts) - 1):
        total += 0.5 * (vals[k] + vals[k + 1]) * (ts[k + 1] - ts[k])
    return total


def ospan(ts):
    return otrap(ts, [1.0] * len(ts))


def otf(kind, a, b):
    if kind == "half_squared_diff":
        return 0.5 * (a - b) ** 2
    if kind == "min_max_ratio":
        return min(a, b) / max(a, b)
    if kind == "product":
        return a * b
    if kind == "left":
        return a
    if kind == "right":
        return b
    return 1.0


def oell(ts, fa, fb, kind):
    return otrap(ts, [otf(kind, fa[k], fb[k]) for k in range(len(ts))])


def omean_curve(curves):
    n = len(curves)
    T = len(curves[0])
    return [sum(curves[i][k] for i in range(n)) / n for k in range(T)]


def omu_int(ts, *channels):
    means = [omean_curve(ch) for ch in channels]
    prod = [1.0] * len(ts)
    for m in means:
        prod = [p * v for p, v in zip(prod, m)]
    return otrap(ts, prod)


def _pairs(n, labels=None, types=None, origin=None):
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            if origin is not None and i != origin:
                continue
            if types is not None:
                i_t, j_t = types
                if labels[i] != i_t:
                    continue
                if j_t != "dot" and labels[j] != j_t:
                    continue
            yield i, j


def oracle_rho(points, win, r_values, kern, b, weight=None, labels=None, types=None):
    """Kernel product density; weight(i, j) supplies the per-pair factor."""
    area = oarea(win)
    out = []
    for r in r_values:
        s = 0.0
        for i, j in _pairs(len(points), labels, types):
            d = odist(win, points[i], points[j])
            kv = okernel(kern, d - r, b)
            if kv:
                w = 1.0 if weight is None else weight(i, j)
                s += w * kv * oedge(win, points[i], points[j])
        out.append(s / (2.0 * math.pi * r * area))
    return out


def oracle_ctf(points, win, r_values, kern, b, fh, fl, ts, kind):
    """Conditional mean of the integrated test function at each distance."""
    num = oracle_rho(points, win, r_values, kern, b,
                     weight=lambda i, j: oell(ts, fh[i], fl[j], kind))
    den = oracle_rho(points, win, r_values, kern, b)
    return [n / d if d > 0 else math.nan for n, d in zip(num, den)]


def oracle_chat(fh, fl, ts, kind, exclude_self=False):
    n = len(fh)
    total = 0.0
    count = 0
    for i in range(n):
        for j in range(n):
            if exclude_self and i == j:
                continue
            total += oell(ts, fh[i], fl[j], kind)
            count += 1
    return total / count


def oracle_pointwise_curves(points, win, r_values, kern, b, T, curve_at):
    """Kernel-weighted mean of a per-pair time curve at each (r, t).

    ``curve_at(i, j, k)`` returns the pair's value at time index k; rows
    with no kernel mass come back as None.
    """
    n = len(points)
    out = []
    for r in r_values:
        wsum = 0.0
        acc = [0.0] * T
        for i, j in _pairs(n):
            d = odist(win, points[i], points[j])
            kv = okernel(kern, d - r, b)
            if kv:
                kv *= oedge(win, points[i], points[j])
                wsum += kv
                for k in range(T):
                    acc[k] += kv * curve_at(i, j, k)
        out.append([v / wsum for v in acc] if wsum > 0 else None)
    return out


def oracle_variogram(points, win, r_values, kern, b, fh, fl, ts, exclude_self=False):
    chat = oracle_chat(fh, fl, ts, "half_squared_diff", exclude_self)
    ratio = oracle_ctf(points, win, r_values, kern, b, fh, fl, ts, "half_squared_diff")
    if chat == 0.0:
        return [0.0 if not math.isnan(v) else math.nan for v in ratio]
    return [v / chat for v in ratio]


def oracle_correlation(points, win, r_values, kern, b, fh, fl, ts):
    mu = omu_int(ts, fh, fl)
    ratio = oracle_ctf(points, win, r_values, kern, b, fh, fl, ts, "product")
    return [v / mu for v in ratio]


def oracle_differentiation(points, win, r_values, kern, b, fh, fl, ts):
    span = ospan(ts)
    ratio = oracle_ctf(points, win, r_values, kern, b, fh, fl, ts, "min_max_ratio")
    return [span - v for v in ratio]


def oracle_cov_stoyan(points, win, r_values, kern, b, fh, fl, ts):
    mu = omu_int(ts, fh, fl)
    ratio = oracle_ctf(points, win, r_values, kern, b, fh, fl, ts, "product")
    return [v - mu for v in ratio]


def oracle_cov_cressie(points, win, r_values, kern, b, fh, fl, ts):
    T = len(ts)
    c3 = oracle_pointwise_curves(points, win, r_values, kern, b, T,
                                 lambda i, j, k: fh[i][k] * fl[j][k])
    c4 = oracle_pointwise_curves(points, win, r_values, kern, b, T,
                                 lambda i, j, k: fh[i][k])
    c5 = oracle_pointwise_curves(points, win, r_values, kern, b, T,
                									 lambda i, j, k: fl[j][k])
    out = []
    for a, b4, b5 in zip(c3, c4, c5):
        if a is None:
            out.append(math.nan)
        else:
            out.append(otrap(ts, [x - y * z for x, y, z in zip(a, b4, b5)]))
    return out


def oracle_isham(points, win, r_values, kern, b, fh, fl, ts):
    T = len(ts)
    floor = 1e-10 * max(1.0, max(max(abs(v) for row in ch for v in row) for ch in (fh, fl)) ** 2)

    def pw(f):
        return oracle_pointwise_curves(points, win, r_values, kern, b, T, f)

    c3 = pw(lambda i, j, k: fh[i][k] * fl[j][k])
    c4h = pw(lambda i, j, k: fh[i][k])
    c5l = pw(lambda i, j, k: fl[j][k])
    phh = pw(lambda i, j, k: fh[i][k] * fh[j][k])
    c5h = pw(lambda i, j, k: fh[j][k])
    pll = pw(lambda i, j, k: fl[i][k] * fl[j][k])
    c4l = pw(lambda i, j, k: fl[i][k])
    out = []
    for idx in range(len(r_values)):
        if c3[idx] is None:
            out.append(math.nan)
            continue
        vals = []
        bad = False
        for k in range(T):
            cov = c3[idx][k] - c4h[idx][k] * c5l[idx][k]
            vhh = phh[idx][k] - c4h[idx][k] * c5h[idx][k]
            vll = pll[idx][k] - c4l[idx][k] * c5l[idx][k]
            if vhh <= floor or vll <= floor:
                bad = True
                break
            vals.append(cov / math.sqrt(vhh * vll))
        out.append(math.nan if bad else otrap(ts, vals))
    return out


def oracle_beisbart(points, win, r_values, kern, b, fh, fl, ts):
    muh = omean_curve(fh)
    mul = omean_curve(fl)

    def weight(i, j):
        return otrap(ts, [(fh[i][k] + fl[j][k]) / (muh[k] + mul[k]) for k in range(len(ts))])

    num = oracle_rho(points, win, r_values, kern, b, weight=weight)
    den = oracle_rho(points, win, r_values, kern, b)
    return [n / d if d > 0 else math.nan for n, d in zip(num, den)]


def oracle_rmark(points, win, r_values, kern, b, fh, fl, ts, side):
    kind = "left" if side == "left" else "right"
    mu = omu_int(ts, fh) if side == "left" else omu_int(ts, fl)
    ratio = oracle_ctf(points, win, r_values, kern, b, fh, fl, ts, kind)
    return [v / mu for v in ratio]


def oracle_u(points, win, r_values, kern, b, base_values):
    rho = oracle_rho(points, win, r_values, kern, b)
    return [g * v for g, v in zip(rho, base_values)]


# -- nearest neighbours -------------------------------------------------------


def oracle_neighbour_order(points, win):
    n = len(points)
    order = []
    for i in range(n):
        cand = sorted((odist(win, points[i], points[j]), j)
                      for j in range(n) if j != i)
        order.append([j for _, j in cand])
    return order


def oracle_nn(points, win, fh, fl, ts):
    n = len(points)
    z = [row[0] for row in oracle_neighbour_order(points, win)]
    span = ospan(ts)
    chat = oracle_chat(fh, fl, ts, "half_squared_diff")
    g_num = sum(oell(ts, fh[i], fl[z[i]], "half_squared_diff") for i in range(n)) / n
    gamma = 0.0 if chat == 0.0 and g_num == 0.0 else g_num / chat
    c_nn = sum(oell(ts, fh[i], fl[z[i]], "product") for i in range(n)) / n
    kappa = c_nn / omu_int(ts, fh, fl)
    tau = span - sum(oell(ts, fh[i], fl[z[i]], "min_max_ratio") for i in range(n)) / n
    return gamma, kappa, c_nn, tau


def oracle_knn(points, win, fh, fl, ts, k_max):
    n = len(points)
    order = oracle_neighbour_order(points, win)
    muh = omean_curve(fh)
    mul = omean_curve(fl)
    span = ospan(ts)
    T = len(ts)
    k_corr, k_vario, k_dom = [], [], []
    for k in range(1, k_max + 1):
        corr_t, vario_t, dom_t = [0.0] * T, [0.0] * T, [0.0] * T
        for i in range(n):
            for v in range(k):
                j = order[i][v]
                for t in range(T):
                    corr_t[t] += fh[i][t] * fl[j][t]
                    vario_t[t] += 0.5 * (fh[i][t] - fl[j][t]) ** 2
                    dom_t[t] += 1.0 if fh[i][t] > fl[j][t] else 0.0
        scale = 1.0 / (k * n)
        k_corr.append(otrap(ts, [corr_t[t] * scale / (muh[t] * mul[t]) for t in range(T)]))
        k_vario.append(otrap(ts, [vario_t[t] * scale for t in range(T)]))
        k_dom.append(otrap(ts, [dom_t[t] * scale for t in range(T)]) / span)
    return k_corr, k_vario, k_dom


# -- cumulative K / pair correlation -------------------------------------------


def _weight_c(fh, fl, ts, kind):
    if kind == "product":
        return omu_int(ts, fh, fl)
    if kind == "left":
        return omu_int(ts, fh)
    if kind == "right":
        return omu_int(ts, fl)
    return 1.0


def oracle_weighted_k(points, win, r_values, fh, fl, ts, kind,
                      labels=None, types=None, origin=None):
    n = len(points)
    area = oarea(win)
    out = []
    if types is None:
        lam_prod = (n / area) ** 2
    else:
        i_t, j_t = types
        n_i = sum(1 for v in labels if v == i_t)
        n_j = n if j_t == "dot" else sum(1 for v in labels if v == j_t)
        lam_prod = (n_i / area) * (n_j / area)
    cnorm = _weight_c(fh, fl, ts, kind)
    for r in r_values:
        s = 0.0
        for i, j in _pairs(n, labels, types, origin):
            if odist(win, points[i], points[j]) <= r:
                w = 1.0 if kind == "unit" else oell(ts, fh[i], fl[j], kind)
                s += w * oedge(win, points[i], points[j])
        if origin is not None:
            out.append(s * area / (n * cnorm))
        else:
            out.append(s / (area * lam_prod * cnorm))
    return out


def oracle_weighted_pcf(points, win, r_values, kern, b, fh, fl, ts, kind,
                        labels=None, types=None):
    n = len(points)
    area = oarea(win)
    if types is None:
        lam_prod = (n / area) ** 2
    else:
        i_t, j_t = types
        n_i = sum(1 for v in labels if v == i_t)
        n_j = n if j_t == "dot" else sum(1 for v in labels if v == j_t)
        lam_prod = (n_i / area) * (n_j / area)
    cnorm = _weight_c(fh, fl, ts, kind)
    out = []
    for r in r_values:
        s = 0.0
        for i, j in _pairs(n, labels, types):
            d = odist(win, points[i], points[j])
            kv = okernel(kern, d - r, b)
            if kv:
                w = 1.0 if kind == "unit" else oell(ts, fh[i], fl[j], kind)
                s += w * kv * oedge(win, points[i], points[j])
        out.append(s / (2.0 * math.pi * r * area) / (lam_prod * cnorm))
    return out


# -- test helper ----------------------------------------------------------------


def assert_curves_match(got, want, rtol=1e-10, atol=1e-12):
    """Equality with NaN agreement: both paths must flag the same gaps."""
    import numpy as np

    got = np.asarray(got, dtype=float)
    want = np.asarray(want, dtype=float)
    assert got.shape == want.shape
    nan_g, nan_w = np.isnan(got), np.isnan(want)
    assert (nan_g == nan_w).all(), "undefined entries disagree"
    ok = ~nan_g
    np.testing.assert_allclose(got[ok], want[ok], rtol=rtol, atol=atol)
