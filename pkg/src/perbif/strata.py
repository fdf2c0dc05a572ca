"""Bifurcation strata near an A_mu point, and cobweb plot data.

Folds are traced by a grid scan over all parameters but one: every cell of
the slice grid solves ``F = x, F_x = 1`` in ``(x, free parameter)`` with a
batched Newton iteration.  Seeds come from an x window and, in later sweeps,
from the roots already found in neighboring cells.  Cusp points are refined
from fold points with one more equation and one more free parameter.
"""

import csv
import io
import itertools
import json
import logging
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy.spatial.distance import directed_hausdorff

from .errors import EmptyRegion, NumericError
from .numeric import Grad
from .system import apply_map, composition_jet

log = logging.getLogger(__name__)

CLUSTER_RADIUS = 1e-6


@dataclass(frozen=True)
class StrataPoint:
    stratum: str  # fold | cusp | top
    x: float
    lambdas: tuple
    res_fp: float
    res_dx: float
    res_dxx: float


@dataclass
class StrataCloud:
    points: list
    mu: int
    slice: dict = field(default_factory=dict)
    skipped: list = field(default_factory=list)  # grid cells where no fold root converged
    rejected: int = 0  # Newton roots that failed the post-hoc check

    def __len__(self):
        return len(self.points)

    def stratum(self, name):
        return [p for p in self.points if p.stratum == name]

    def lambda_array(self, strata=None):
        pts = self.points if strata is None else [p for p in self.points if p.stratum in strata]
        return np.array([p.lambdas for p in pts], dtype=float).reshape(len(pts), self.mu)

    def header(self):
        return ["stratum", "x"] + [f"l{i + 1}" for i in range(self.mu)] + ["res_fp", "res_dx", "res_dxx"]

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.header())
        for p in self.points:
            w.writerow([p.stratum, _g(p.x)] + [_g(v) for v in p.lambdas]
                       + [_g(p.res_fp), _g(p.res_dx), _g(p.res_dxx)])
        return buf.getvalue()

    def to_json(self):
        keys = self.header()
        rows = []
        for p in self.points:
            vals = [p.stratum, p.x, *p.lambdas, p.res_fp, p.res_dx, p.res_dxx]
            rows.append(dict(zip(keys, vals)))
        return {"slice": self.slice, "skipped": len(self.skipped), "rejected": self.rejected, "points": rows}

    def dumps(self):
        return json.dumps(self.to_json(), indent=2)


def _g(v):
    return format(float(v), ".17g")


def hausdorff(a, b):
    """Symmetric Hausdorff distance between two point sets (rows)."""
    a = np.atleast_2d(np.asarray(a, dtype=float))
    b = np.atleast_2d(np.asarray(b, dtype=float))
    if a.size == 0 and b.size == 0:
        return 0.0
    if a.size == 0 or b.size == 0:
        return float("inf")
    return max(directed_hausdorff(a, b)[0], directed_hausdorff(b, a)[0])


# ---------------------------------------------------------------------------
# batched Newton on the ladder F - x, F_x - 1, F_xx, ..., F_{x^r}


def _as_batch(v, n):
    return np.broadcast_to(np.asarray(v, dtype=float), (n,))


def _ladder_raw(system, j, k, x, params, free, r):
    n = x.shape[0]
    nf = len(free)
    gparams = []
    for i, p in enumerate(params):
        if i in free:
            gparams.append(Grad.seed(p, free.index(i), nf))
        else:
            gparams.append(Grad.constant(p, nf))
    jet = composition_jet(system, j, k, Grad.constant(x, nf), gparams, r + 1)
    d = [jet.derivative(i) for i in range(r + 2)]
    eqs = np.empty((n, r + 1))
    jac = np.empty((n, r + 1, r + 1))
    for i in range(r + 1):
        shift = x if i == 0 else (1.0 if i == 1 else 0.0)
        eqs[:, i] = _as_batch(d[i].value, n) - shift
        jac[:, i, 0] = _as_batch(d[i + 1].value, n) - (1.0 if i == 0 else 0.0)
        for c in range(nf):
            jac[:, i, c + 1] = _as_batch(d[i].grad[c], n)
    return eqs, jac


def _ladder(system, j, k, x, params, free, r):
    """Ladder residuals and Jacobian; batch members hitting a numeric fault get NaN."""
    try:
        with np.errstate(all="ignore"):
            return _ladder_raw(system, j, k, x, params, free, r)
    except NumericError:
        n = x.shape[0]
        if n == 1:
            return np.full((1, r + 1), np.nan), np.full((1, r + 1, r + 1), np.nan)
        h = n // 2
        e1, j1 = _ladder(system, j, k, x[:h], [p[:h] for p in params], free, r)
        e2, j2 = _ladder(system, j, k, x[h:], [p[h:] for p in params], free, r)
        return np.concatenate([e1, e2]), np.concatenate([j1, j2])


def batched_newton(system, j, k, x, params, free, r, max_iter=40, tol=1e-12, step_cap=1.0):
    """Solve the order-``r`` ladder in ``(x, params[free])`` for a batch of seeds.

    ``params`` is a list of arrays, one per parameter.  Returns the final
    ``x``, parameter arrays, residual max-norms and a convergence mask.
    """
    x = np.array(x, dtype=float)
    params = [np.array(np.broadcast_to(np.asarray(p, dtype=float), x.shape)) for p in params]
    n = x.shape[0]
    res = np.full(n, np.inf)
    done = np.zeros(n, dtype=bool)
    active = np.ones(n, dtype=bool)
    for _ in range(max_iter + 1):
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        eqs, jac = _ladder(system, j, k, x[idx], [p[idx] for p in params], free, r)
        norm = np.max(np.abs(eqs), axis=1)
        res[idx] = norm
        ok = np.isfinite(norm) & np.all(np.isfinite(jac), axis=(1, 2))
        conv = ok & (norm <= tol)
        done[idx[conv]] = True
        active[idx[conv | ~ok]] = False
        step_idx = ok & ~conv
        if not step_idx.any():
            continue
        sel = idx[step_idx]
        step = -np.einsum("nij,nj->ni", np.linalg.pinv(jac[step_idx]), eqs[step_idx])
        big = np.max(np.abs(step), axis=1)
        scale = np.where(big > step_cap, step_cap / np.maximum(big, 1e-300), 1.0)
        step *= scale[:, None]
        x[sel] += step[:, 0]
        for c, i in enumerate(free):
            params[i][sel] += step[:, c + 1]
    return x, params, res, done


def ladder_residuals(system, j, k, x, params, r):
    """Independent re-evaluation of ``|F - x|, |F_x - 1|, |F_xx|, ...`` (no gradients)."""
    x = np.asarray(x, dtype=float)
    n = x.shape[0]
    out = np.full((n, r + 1), np.nan)
    try:
        with np.errstate(all="ignore"):
            jet = composition_jet(system, j, k, x, [np.asarray(p, dtype=float) for p in params], r, with_grad=False)
    except NumericError:
        if n == 1:
            return out
        h = n // 2
        return np.concatenate([
            ladder_residuals(system, j, k, x[:h], [np.broadcast_to(p, x.shape)[:h] for p in params], r),
            ladder_residuals(system, j, k, x[h:], [np.broadcast_to(p, x.shape)[h:] for p in params], r),
        ])
    for i in range(r + 1):
        shift = x if i == 0 else (1.0 if i == 1 else 0.0)
        out[:, i] = np.abs(_as_batch(jet.derivative(i), n) - shift)
    return out


# ---------------------------------------------------------------------------
# grid tracing


def _dedupe(rows, radius=CLUSTER_RADIUS):
    """Greedy clustering of ``(x, lambda...)`` rows; keeps the first of each cluster."""
    kept = []
    for row in sorted(rows):
        if all(np.linalg.norm(np.subtract(row, other)) > radius for other in kept):
            kept.append(row)
    return kept


def _grid_axes(region, grid, axes):
    if isinstance(grid, int):
        grid = [grid] * len(axes)
    if len(grid) != len(axes):
        raise ValueError(f"need {len(axes)} grid sizes, got {len(grid)}")
    out = []
    for a, g in zip(axes, grid):
        if g < 1:
            raise ValueError("grid resolution must be at least 1")
        lo, hi = region[a]
        out.append(np.linspace(lo, hi, g) if g > 1 else np.array([(lo + hi) / 2]))
    return out


def trace_strata(system, j, mu, point, region, grid=32, k=None, free=0, x_window=None, n_seeds=9,
                 tol=1e-8, max_sweeps=4):
    """Fold, cusp and top strata of ``F_j^k`` over a box in parameter space.

    ``region`` holds one ``(lo, hi)`` pair for each of the first ``mu``
    parameters; parameters beyond ``mu`` stay at the values of ``point``.
    Parameter ``free`` is solved for; the others span the slice grid.
    """
    if not 1 <= mu <= system.mu:
        raise ValueError(f"mu = {mu} outside 1..{system.mu}")
    if len(region) != mu:
        raise ValueError(f"region needs {mu} intervals, got {len(region)}")
    region = [(float(lo), float(hi)) for lo, hi in region]
    for i, (lo, hi) in enumerate(region):
        if not (np.isfinite(lo) and np.isfinite(hi)) or lo >= hi:
            raise EmptyRegion(f"interval {i + 1} [{lo}, {hi}] is empty or degenerate")
    if not 0 <= free < mu:
        raise ValueError(f"free parameter index {free} outside 0..{mu - 1}")
    k = point.power if k is None else k
    base = [float(v) for v in point.params]
    x_star = float(point_at_fiber(system, point, j))
    if x_window is None:
        if system.fibers is not None:
            x_window = tuple(float(v) for v in system.fibers[j])
        else:
            x_window = (x_star - 1.0, x_star + 1.0)
    axes = [i for i in range(mu) if i != free]
    values = _grid_axes(region, grid, axes)
    shape = tuple(len(v) for v in values)
    cells = list(itertools.product(*[range(s) for s in shape]))
    flo, fhi = region[free]

    def cell_params(cell_list, counts):
        ps = []
        for i in range(system.mu):
            col = np.full(sum(counts), base[i])
            if i in axes:
                a = axes.index(i)
                col = np.repeat([values[a][c[a]] for c in cell_list], counts)
            ps.append(col)
        return ps

    def run(seeds):
        # seeds: dict cell -> list of (x, lambda_free)
        order = [c for c in cells if seeds.get(c)]
        if not order:
            return {}
        counts = [len(seeds[c]) for c in order]
        xs = np.array([s[0] for c in order for s in seeds[c]])
        ps = cell_params(order, counts)
        ps[free] = np.array([s[1] for c in order for s in seeds[c]])
        xs, ps, _, ok = batched_newton(system, j, k, xs, ps, [free], 1)
        found = {}
        pos = 0
        for c, n in zip(order, counts):
            for i in range(pos, pos + n):
                if ok[i] and flo <= ps[free][i] <= fhi:
                    found.setdefault(c, []).append((float(xs[i]), float(ps[free][i])))
            pos += n
        return found

    x_seeds = np.linspace(x_window[0], x_window[1], n_seeds)
    lam0 = min(max(base[free], flo), fhi)
    roots = {c: _dedupe(v) for c, v in run({c: [(x, lam0) for x in x_seeds] for c in cells}).items()}
    for _ in range(max_sweeps):
        seeds = {}
        for c in cells:
            nb = []
            for a in range(len(shape)):
                for dlt in (-1, 1):
                    m = list(c)
                    m[a] += dlt
                    if 0 <= m[a] < shape[a]:
                        nb.extend(roots.get(tuple(m), []))
            if nb:
                seeds[c] = nb
        new = run(seeds)
        grew = False
        for c, pts in new.items():
            merged = _dedupe(roots.get(c, []) + pts)
            if len(merged) > len(roots.get(c, [])):
                grew = True
            roots[c] = merged
        if not grew:
            break
    skipped = [c for c in cells if not roots.get(c)]

    # candidate rows in cell order: (x, full lambda vector)
    fold_rows = []
    for c in cells:
        for x, lf in roots.get(c, []):
            lam = list(base)
            for a, i in enumerate(axes):
                lam[i] = float(values[a][c[a]])
            lam[free] = lf
            fold_rows.append((c, x, lam))

    cusp_rows = []
    if mu >= 2 and fold_rows:
        second = axes[0]
        xs = np.array([r[1] for r in fold_rows])
        ps = [np.array([r[2][i] for r in fold_rows]) for i in range(system.mu)]
        xs, ps, _, ok = batched_newton(system, j, k, xs, ps, [free, second], 2)
        slo, shi = region[second]
        by_row = {}
        for i, r in enumerate(fold_rows):
            if not ok[i] or not (flo <= ps[free][i] <= fhi and slo <= ps[second][i] <= shi):
                continue
            row = tuple(v for a, v in enumerate(r[0]) if axes[a] != second)
            by_row.setdefault(row, []).append((float(xs[i]),) + tuple(float(ps[q][i]) for q in range(system.mu)))
        for row in sorted(by_row):
            for rec in _dedupe(by_row[row]):
                cusp_rows.append((rec[0], list(rec[1:])))

    top_rows = []
    xs, ps, _, ok = batched_newton(system, j, k, np.array([x_star]), [np.array([v]) for v in base],
                                   list(range(mu)), mu)
    if ok[0] and all(region[i][0] <= ps[i][0] <= region[i][1] for i in range(mu)):
        top_rows.append((float(xs[0]), [float(p[0]) for p in ps]))

    labelled = [("fold", x, lam) for _, x, lam in fold_rows]
    # with mu = 2 the cusp ladder is already the top one
    if mu > 2:
        labelled += [("cusp", x, lam) for x, lam in cusp_rows]
    labelled += [("top", x, lam) for x, lam in top_rows]

    points, rejected = _recheck(system, j, k, mu, labelled, tol)
    desc = {
        "rotation": j, "power": k, "mu": mu, "free": f"l{free + 1}",
        "axes": [f"l{i + 1}" for i in axes], "grid": list(shape),
        "region": [list(r) for r in region], "x_window": list(x_window),
    }
    if rejected:
        log.info("dropped %d roots failing the post-hoc residual check", rejected)
    return StrataCloud(points, mu, desc, skipped, rejected)


def _recheck(system, j, k, mu, labelled, tol):
    if not labelled:
        return [], 0
    xs = np.array([r[1] for r in labelled])
    ps = [np.array([r[2][i] for r in labelled]) for i in range(system.mu)]
    order = max(2, mu)
    res = ladder_residuals(system, j, k, xs, ps, order)
    need = {"fold": 2, "cusp": 3, "top": mu + 1}
    points, rejected = [], 0
    for i, (stratum, x, lam) in enumerate(labelled):
        row = res[i]
        if not np.all(np.isfinite(row[: need[stratum]])) or np.any(row[: need[stratum]] > tol):
            rejected += 1
            continue
        points.append(StrataPoint(stratum, x, tuple(lam[:mu]), float(row[0]), float(row[1]), float(row[2])))
    return points, rejected


def point_at_fiber(system, point, m):
    from .bifurcation import point_at_rotation

    return point_at_rotation(system, point, m)


# ---------------------------------------------------------------------------
# cobweb data


@dataclass(frozen=True)
class Segment:
    kind: str  # vertical | horizontal | graph name
    x0: object
    y0: object
    x1: object
    y1: object


@dataclass
class Cobweb:
    segments: list
    graphs: dict  # name -> (xs, ys)
    orbit: list

    def to_csv(self, include_graphs=True):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["kind", "x0", "y0", "x1", "y1"])
        for s in self.segments:
            w.writerow([s.kind, _num(s.x0), _num(s.y0), _num(s.x1), _num(s.y1)])
        if include_graphs:
            for name, (xs, ys) in self.graphs.items():
                for a in range(len(xs) - 1):
                    w.writerow([name, _g(xs[a]), _g(ys[a]), _g(xs[a + 1]), _g(ys[a + 1])])
        return buf.getvalue()


def _num(v):
    if isinstance(v, Fraction):
        return str(v.numerator) if v.denominator == 1 else f"{v.numerator}/{v.denominator}"
    return _g(v)


def cobweb_data(system, x0, params, n, fiber=0, graph_samples=201, window=None):
    """Orbit staircase through the fiber maps plus sampled graphs and the diagonal.

    The orbit starts on the diagonal at ``(x0, x0)``; each step draws a
    vertical segment to the graph of the current map and a horizontal one back
    to the diagonal.  Exact inputs keep exact segment endpoints.
    """
    if n < 1:
        raise ValueError("cobweb needs n >= 1")
    segs, orbit = [], [x0]
    cur = x0
    for step in range(n):
        idx = (fiber + step) % system.p
        nxt = apply_map(system, idx, cur, params)
        segs.append(Segment("vertical", cur, cur, cur, nxt))
        segs.append(Segment("horizontal", cur, nxt, nxt, nxt))
        orbit.append(nxt)
        cur = nxt
    if window is None:
        if system.fibers is not None:
            window = (min(float(lo) for lo, _ in system.fibers), max(float(hi) for _, hi in system.fibers))
        else:
            vals = [float(v) for v in orbit]
            lo, hi = min(vals), max(vals)
            pad = max(0.1 * (hi - lo), 0.05)
            window = (lo - pad, hi + pad)
    xs = np.linspace(window[0], window[1], graph_samples)
    fparams = [float(v) for v in params]
    graphs = {}
    for m in range(system.p):
        ys = np.full(xs.shape, np.nan)
        for i, x in enumerate(xs):
            try:
                ys[i] = float(apply_map(system, m, float(x), fparams))
            except NumericError:
                pass
        graphs[f"f{m}"] = (xs, ys)
    graphs["diagonal"] = (xs, xs.copy())
    return Cobweb(segs, graphs, orbit)
