"""Nelder-Mead downhill simplex minimizer.

Hand-rolled so the four step coefficients and both stopping criteria
are explicit, deterministic, and identical across platforms. Returned
points are never worse than the best initial vertex: the best vertex is
only ever replaced by a strictly better one, and shrinks contract
toward it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ObjectiveNotFinite

__all__ = ["SimplexSettings", "NelderMeadResult", "nelder_mead"]


@dataclass(frozen=True)
class SimplexSettings:
    reflection: float = 1.0
    expansion: float = 2.0
    contraction: float = 0.5
    shrink: float = 0.5
    max_iterations: int = 2000
    x_tolerance: float = 1e-6
    f_tolerance: float = 1e-10

    def __post_init__(self):
        if not self.reflection > 0.0:
            raise ValueError("reflection coefficient must be > 0")
        if not self.expansion > 1.0:
            raise ValueError("expansion coefficient must be > 1")
        if not 0.0 < self.contraction < 1.0:
            raise ValueError("contraction coefficient must be in (0, 1)")
        if not 0.0 < self.shrink < 1.0:
            raise ValueError("shrink coefficient must be in (0, 1)")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")


@dataclass
class NelderMeadResult:
    x: np.ndarray
    fun: float
    iterations: int
    converged: bool  # False means the iteration budget ran out


def _check_finite(value: float, where: str) -> float:
    if not np.isfinite(value):
        raise ObjectiveNotFinite(f"objective returned {value!r} {where}")
    return float(value)


def nelder_mead(
    objective,
    start,
    settings: SimplexSettings | None = None,
    initial_step=None,
) -> NelderMeadResult:
    """Minimize ``objective`` from ``start`` (length-k array).

    The initial simplex offsets each coordinate by ``initial_step``
    (scalar or per-coordinate; default 5% of the coordinate, 2.5e-4 for
    zeros). Stops when the simplex diameter falls below x_tolerance and
    the value spread below f_tolerance (both: a symmetric simplex
    straddling a nonsmooth minimum has zero value spread long before it
    has shrunk); otherwise runs to max_iterations and reports
    converged=False.
    """
    s = settings if settings is not None else SimplexSettings()
    x0 = np.asarray(start, dtype=float).ravel()
    n = x0.size
    if n < 1:
        raise ValueError("start point must have at least one coordinate")

    if initial_step is None:
        step = np.where(x0 != 0.0, 0.05 * np.abs(x0), 2.5e-4)
    else:
        step = np.broadcast_to(np.asarray(initial_step, dtype=float), (n,)).copy()
        if np.any(step == 0.0):
            raise ValueError("initial_step entries must be nonzero")

    verts = [x0.copy()]
    for i in range(n):
        v = x0.copy()
        v[i] += step[i]
        verts.append(v)
    fvals = [_check_finite(objective(v), "at an initial vertex") for v in verts]

    iterations = 0
    converged = False
    while iterations < s.max_iterations:
        order = np.argsort(fvals, kind="stable")
        verts = [verts[i] for i in order]
        fvals = [fvals[i] for i in order]

        diam = max(float(np.max(np.abs(v - verts[0]))) for v in verts[1:])
        if diam < s.x_tolerance and abs(fvals[-1] - fvals[0]) < s.f_tolerance:
            converged = True
            break
        iterations += 1

        centroid = np.mean(verts[:-1], axis=0)
        worst = verts[-1]
        reflected = centroid + s.reflection * (centroid - worst)
        fr = _check_finite(objective(reflected), "at a reflection point")

        if fr < fvals[0]:
            expanded = centroid + s.expansion * (centroid - worst)
            fe = _check_finite(objective(expanded), "at an expansion point")
            if fe < fr:
                verts[-1], fvals[-1] = expanded, fe
            else:
                verts[-1], fvals[-1] = reflected, fr
        elif fr < fvals[-2]:
            verts[-1], fvals[-1] = reflected, fr
        else:
            # contract toward the better of worst/reflected
            if fr < fvals[-1]:
                contracted = centroid + s.contraction * (reflected - centroid)
            else:
                contracted = centroid + s.contraction * (worst - centroid)
            fc = _check_finite(objective(contracted), "at a contraction point")
            if fc < min(fr, fvals[-1]):
                verts[-1], fvals[-1] = contracted, fc
            else:
                best = verts[0]
                for i in range(1, n + 1):
                    verts[i] = best + s.shrink * (verts[i] - best)
                    fvals[i] = _check_finite(objective(verts[i]), "after a shrink")

    order = np.argsort(fvals, kind="stable")
    return NelderMeadResult(
        x=verts[order[0]].copy(),
        fun=float(fvals[order[0]]),
        iterations=iterations,
        converged=converged,
    )
