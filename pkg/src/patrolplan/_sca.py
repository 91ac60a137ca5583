"""Convex surrogate for one trajectory step of a segment plan.

The surrogate is built once per slot count as a parametrised cvxpy problem
and reused; only parameter values change between calls. Internal units:
positions in hundreds of metres, bits in Mbit, cycles in Gcycles, energy
in kJ.
"""
from __future__ import annotations

import threading
import warnings

import cvxpy as cp
import numpy as np

LENGTH_UNIT = 100.0
MIN_SLOT_S = 1e-3

_local = threading.local()


class SurrogateProblem:
    def __init__(self, n_slots: int):
        L = n_slots
        self.n_slots = L
        X = cp.Variable((L + 1, 2), name="waypoints")
        delta = cp.Variable(L, name="slot_s")
        ytil = cp.Variable(L, nonneg=True)
        w = cp.Variable(L, nonneg=True)
        r = cp.Variable(L, nonneg=True)
        u = cp.Variable(L, nonneg=True)
        t = cp.Variable(L, nonneg=True)
        s = cp.Variable(L, nonneg=True)
        c = cp.Variable(L, nonneg=True)
        e = cp.Variable(L, nonneg=True)
        beta = cp.Variable(L, nonneg=True)
        rho = cp.Variable(L, nonneg=True)
        hz = cp.Variable(L, nonneg=True)  # horizontal distance to the served station
        self.X, self.delta, self.s, self.c, self.beta = X, delta, s, c, beta
        self.ytil = ytil

        p = {}

        def par(name, shape=(), **kw):
            p[name] = cp.Parameter(shape, name=name, **kw)
            return p[name]

        a_start = par("start", 2)
        a_end = par("end", 2)
        X0 = par("X0", (L + 1, 2))
        radius = par("radius", nonneg=True)
        k_p0 = par("k_p0", nonneg=True)
        k_blade = par("k_blade", nonneg=True)
        k_pi = par("k_pi", nonneg=True)
        k_par = par("k_par", nonneg=True)
        k_cmp = par("k_cmp", nonneg=True)
        k_tx = par("k_tx", nonneg=True)
        vmax = par("vmax", nonneg=True)
        fmax = par("fmax", nonneg=True)
        k_local = par("k_local", nonneg=True)
        gcap = par("gcap", L, nonneg=True)
        ra = par("ra", L)
        rb = par("rb", L, nonneg=True)
        rg = par("rg", (L, 2))
        kh = par("kh", L, nonpos=True)
        sxy = par("sxy", (L, 2))
        y2 = par("y2", L)
        dc = par("dc", (L, 2))
        hc = par("hc", L)
        b2 = par("b2", L)
        qeff = par("qeff")
        self.p = p

        D = X[1:, :] - X[:-1, :]
        mid = 0.5 * (X[1:, :] + X[:-1, :])
        h = cp.multiply(y2, ytil) + cp.sum(cp.multiply(dc, D), axis=1) + hc
        # tangent bound of the log term in squared distance, plus the first-order
        # change of the elevation factor with horizontal distance (concave)
        rate_lb = (
            ra
            - cp.multiply(rb, cp.sum(cp.square(mid), axis=1))
            + cp.sum(cp.multiply(rg, mid), axis=1)
            + cp.multiply(kh, hz)
        )

        cons = [
            X[0, :] == a_start,
            X[L, :] == a_end,
            delta >= MIN_SLOT_S,
            cp.SOC(vmax * delta, D, axis=1),
            cp.SOC(radius * np.ones(L - 1), X[1:L, :] - X0[1:L, :], axis=1),
            # blade-profile speed term: r >= |D|^2 / delta
            cp.SOC(r + delta, cp.hstack([2 * D, cp.reshape(r - delta, (L, 1), order="C")]), axis=1),
            # induced-power slack: (delta^2 / ytil)^2 <= w^2 <= tangent of ytil^2 + |D|^2 / v0^2
            cp.SOC(w + ytil, cp.vstack([2 * delta, w - ytil]), axis=0),
            cp.SOC(h + 1, cp.vstack([2 * w, h - 1]), axis=0),
            # parasite term: t >= |D|^3 / delta^2
            cp.norm(D, 2, axis=1) <= u,
            cp.PowCone3D(t, delta, u, 1.0 / 3.0),
            # local computation: e >= c^3 / delta^2
            cp.PowCone3D(e, delta, c, 1.0 / 3.0),
            c <= fmax * delta,
            s <= delta,
            cp.SOC(hz, mid - sxy, axis=1),
            rho <= rate_lb,
            # offloaded bits beta^2 <= rho * s and <= station processing capacity
            cp.SOC(rho + s, cp.vstack([2 * beta, rho - s]), axis=0),
            cp.SOC(cp.multiply(gcap, delta) + 1, cp.vstack([2 * beta, cp.multiply(gcap, delta) - 1]), axis=0),
            b2 @ beta + k_local * cp.sum(c) >= qeff,
        ]
        obj = (
            k_p0 * cp.sum(delta)
            + k_blade * cp.sum(r)
            + k_pi * cp.sum(ytil)
            + k_par * cp.sum(t)
            + k_cmp * cp.sum(e)
            + k_tx * cp.sum(s)
        )
        self.problem = cp.Problem(cp.Minimize(obj), cons)
        assert self.problem.is_dcp(dpp=True)

    def solve(self, **values):
        for name, val in values.items():
            self.p[name].value = val
        try:
            # inaccurate solutions are fine: the caller accepts a step only if the true energy drops
            with warnings.catch_warnings():
                warnings.filterwarnings("ignore", message="Solution may be inaccurate", category=UserWarning)
                self.problem.solve(solver=cp.CLARABEL, tol_gap_rel=1e-6, tol_feas=1e-7, max_iter=200)
        except cp.SolverError:
            return None
        if self.problem.status not in (cp.OPTIMAL, cp.OPTIMAL_INACCURATE) or self.X.value is None:
            return None
        return {
            "X": self.X.value.copy(),
            "delta": self.delta.value.copy(),
            "s": self.s.value.copy(),
            "c": self.c.value.copy(),
            "beta": self.beta.value.copy(),
            "objective": float(self.problem.value),
        }


def get_problem(n_slots: int) -> SurrogateProblem:
    cache = getattr(_local, "cache", None)
    if cache is None:
        cache = _local.cache = {}
    if n_slots not in cache:
        cache[n_slots] = SurrogateProblem(n_slots)
    return cache[n_slots]
