"""Recursive least-squares policy evaluation on a growing kernel basis.

Three engines share one skeleton:

``BRM``
    ``P = H^T H + s2 K_mm``, ``w = P^-1 H^T r``; symmetric rank-1 rows.
``LSTD``
    ``P = Z^T H + s2 K_mm``, ``w = P^-1 Z^T r``; asymmetric rank-1 rows
    ``z h^T`` where ``z`` is the eligibility trace.
``LSPE``
    ``P = K^T K + s2 K_mm``, ``A = Z^T H``, ``b = Z^T r`` and the damped
    iterate ``w <- w + eta P^-1 (b - A w)``.

Here ``K``, ``H`` and ``Z`` are the data matrices whose rows are ``k_m(x_t)``,
``k_m(x_t) - gamma k_m(x_{t+1})`` and the trace. Each engine processes a
transition with :meth:`~PolicyEvaluator.normal_step` in ``O(m^2)`` and, when
a new center is admitted, borders every maintained quantity with
:meth:`~PolicyEvaluator.grow_step`. History rows are never stored: when a
column is appended its past entries are taken from the subset-of-regressors
approximation ``k(x_i, c) ~ k_m(x_i)^T K_mm^-1 k_m(c)``, which makes them
linear in what is already maintained.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import ClassVar

import numpy as np

from .dictionary import Dictionary, Projection
from .kernel import KernelSpec, StateAction, eval_kernel, kernel_row
from .linalg import (
    DEFAULT_FLOOR,
    NumericalDriftError,
    SingularGrowthError,
    SingularUpdateError,
    border_inverse,
    singularity_floor,
)

__all__ = [
    "Transition",
    "StepVectors",
    "Hyper",
    "Usefulness",
    "TrajectoryLog",
    "PolicyEvaluator",
    "BRM",
    "LSTD",
    "LSPE",
    "METHODS",
    "make_evaluator",
]

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class Transition:
    """One trajectory sample ``(x_t, r_{t+1}, x_{t+1})``.

    ``gamma_eff`` is the discount for this step: the usual ``gamma``, or 0 for
    the zero-reward transition that joins two episodes.
    """

    x: StateAction
    reward: float
    x_next: StateAction
    gamma_eff: float


@dataclass
class StepVectors:
    k_t: np.ndarray
    k_next: np.ndarray
    h: np.ndarray
    k_star_t: float
    k_star_next: float
    h_star: float


@dataclass
class Hyper:
    """Scalars shared by every engine.

    ``eta_schedule`` is ``"constant"`` (``eta`` every step) or ``"harmonic"``
    (``eta_c / (eta_c + t)``); only LSPE reads it.
    """

    gamma: float = 0.99
    lam: float = 0.5
    sigma2: float = 0.1
    eta: float = 0.5
    eta_schedule: str = "constant"
    eta_c: float = 100.0

    def step_size(self, t: int) -> float:
        if self.eta_schedule == "constant":
            return self.eta
        if self.eta_schedule == "harmonic":
            return self.eta_c / (self.eta_c + t)
        raise ValueError(f"unknown eta schedule {self.eta_schedule!r}")


@dataclass
class Usefulness:
    """Cost reduction a candidate center would bring, plus reusable terms."""

    gain: float
    delta_b: float
    kappa: float
    extra: dict = field(default_factory=dict)


@dataclass
class TrajectoryLog:
    """Processed transitions and the moments centers were inserted.

    ``insertions`` holds ``(n_rows, center)`` where ``n_rows`` is the number of
    transitions already processed when the center was added.
    """

    transitions: list = field(default_factory=list)
    insertions: list = field(default_factory=list)


class PolicyEvaluator:
    """Shared machinery: seeding, basis selection and prediction.

    Parameters
    ----------
    spec : KernelSpec
        Kernel of the dictionary.
    hyper : Hyper
        Discount, trace decay, regularization and step size.
    tol1, tol2 : float
        Novelty and usefulness thresholds. ``tol2 <= 0`` disables the
        usefulness test (unsupervised selection).
    dictionary : Dictionary, optional
        Start from an existing dictionary instead of seeding from data.
    grow : bool
        If False the dictionary is never extended after seeding.
    record : bool
        Keep a :class:`TrajectoryLog` for the batch oracle.
    check_every : int, optional
        Every this many steps recompute ``K_mm^-1`` from scratch and raise
        :class:`NumericalDriftError` if the propagated one drifted.
    """

    method: ClassVar[str] = ""

    def __init__(self, spec: KernelSpec, hyper: Hyper | None = None, tol1: float = 0.1,
                 tol2: float = 0.0, dictionary: Dictionary | None = None, grow: bool = True,
                 record: bool = False, floor: float = DEFAULT_FLOOR,
                 check_every: int | None = None):
        self.spec = spec
        self.hyper = hyper or Hyper()
        self.tol2 = float(tol2)
        self.floor = floor
        self.allow_growth = grow
        self.check_every = check_every
        self.dictionary = dictionary if dictionary is not None else Dictionary(spec, tol1, floor)
        self.t = 0
        self.n_skipped = 0
        self.n_rejected = 0
        self.log = TrajectoryLog() if record else None
        self._cache = None
        self._last = None
        if self.dictionary.m:
            self.reset()
            if self.log is not None:
                for c in self.dictionary.centers:
                    self.log.insertions.append((0, c))

    # -- state ------------------------------------------------------------

    @property
    def m(self) -> int:
        return self.dictionary.m

    def reset(self) -> None:
        """Re-initialize on the current dictionary: ``P = s2 K_mm``, ``w = 0``."""
        m = self.m
        self.p_inv = self.dictionary.kmm_inv / self.hyper.sigma2
        self.w = np.zeros(m)
        self.xi = 0.0
        self.t = 0
        self._cache = None
        self._last = None
        self._reset_extra(m)
        self._refresh_floor()

    def _refresh_floor(self) -> None:
        # P^-1 only shrinks between growth steps, so its scale is refreshed lazily
        self._tiny = singularity_floor(self.p_inv, self.floor)

    def _reset_extra(self, m: int) -> None:
        pass

    @property
    def cost(self) -> float:
        """Regularized training cost, where the method defines one."""
        return float("nan")

    # -- per-step quantities ---------------------------------------------

    def step_vectors(self, tr: Transition) -> StepVectors:
        d = self.dictionary
        k_t = kernel_row(self.spec.h, d.states, d.actions, tr.x.state, tr.x.action)
        k_next = kernel_row(self.spec.h, d.states, d.actions, tr.x_next.state, tr.x_next.action)
        g = tr.gamma_eff
        if tr.x.action == tr.x_next.action:
            diff = tr.x.state - tr.x_next.state
            k_star_t = float(np.exp(-self.spec.h * (diff @ diff)))
        else:
            k_star_t = 0.0
        k_star_next = 1.0
        return StepVectors(k_t, k_next, k_t - g * k_next, k_star_t, k_star_next,
                           k_star_t - g * k_star_next)

    def normal_step(self, tr: Transition, sv: StepVectors | None = None):
        """Fold one transition into the state at fixed basis size.

        Returns the per-step cache, or None when the rank-1 update was
        singular and the transition was skipped.
        """
        if sv is None:
            sv = self.step_vectors(tr)
        try:
            cache = self._normal(tr, sv)
        except SingularUpdateError as exc:
            self.n_skipped += 1
            self._cache = None
            log.debug("skipped transition at t=%d: %s", self.t, exc)
            return None
        self.t += 1
        self._cache = cache
        self._last = tr
        if self.log is not None:
            self.log.transitions.append(tr)
        return cache

    def usefulness(self, proj: Projection) -> Usefulness:
        """Score adding ``x_{t+1}`` (projected as ``proj``) after a normal step."""
        if self._cache is None:
            raise RuntimeError("usefulness needs a preceding normal step")
        return self._usefulness(proj)

    def grow_step(self, x: StateAction, proj: Projection,
                  use: Usefulness | None = None) -> Usefulness:
        """Append ``x`` as a new center and border every maintained quantity.

        Raises
        ------
        SingularGrowthError
            The bordered system is singular; nothing is modified.
        """
        if use is None:
            use = self.usefulness(proj)
        if abs(use.delta_b) <= singularity_floor(self.p_inv, self.floor):
            raise SingularGrowthError(f"Delta_b={use.delta_b:.3e}")
        if proj.delta <= self.dictionary.floor:
            raise SingularGrowthError(f"ALD residual {proj.delta:.3e}")
        self._augment(proj, use)
        self._refresh_floor()
        self.dictionary.grow(x, proj, step=self.t)
        # the step cache refers to the old basis size
        self._cache = None
        if self.log is not None:
            self.log.insertions.append((self.t, x))
        return use

    def offer(self, x: StateAction) -> bool:
        """Consider an arbitrary ``x`` as a new center after the last normal step.

        :meth:`observe` already offers every successor ``x_{t+1}``. This is
        for pairs the stream would otherwise never propose, such as replayed
        behavior actions the evaluated policy does not take. Returns True if
        ``x`` was added. Does nothing if the last step already grew.
        """
        if self._cache is None or not self.allow_growth or self.m == 0:
            return False
        proj = self.dictionary.project(x)
        if not self.dictionary.is_novel(proj):
            return False
        self._aim(x)
        return self._select_and_grow(x, proj)

    def _aim(self, x: StateAction) -> None:
        # re-target the candidate terms of the cached step vectors at x
        sv, tr = self._cache.sv, self._last
        sv.k_star_t = eval_kernel(self.spec, tr.x, x)
        sv.k_star_next = eval_kernel(self.spec, tr.x_next, x)
        sv.h_star = sv.k_star_t - tr.gamma_eff * sv.k_star_next

    def predict(self, x: StateAction) -> float:
        """``k_m(x)^T w``."""
        if self.m == 0:
            return 0.0
        return float(self.dictionary.kernel_vector(x) @ self.w)

    def q_values(self, state: np.ndarray, n_actions: int) -> np.ndarray:
        """Predicted Q for every action at ``state``."""
        d = self.dictionary
        if d.m == 0:
            return np.zeros(n_actions)
        diff = d.states - state
        rbf = np.exp(-self.spec.h * np.einsum("ij,ij->i", diff, diff)) * self.w
        return np.bincount(d.actions, weights=rbf, minlength=n_actions)[:n_actions]

    # -- the online loop -------------------------------------------------

    def observe(self, tr: Transition) -> dict:
        """Process one transition: seed if needed, normal step, maybe grow."""
        info = {"grew": False, "skipped": False}
        d = self.dictionary
        if d.m == 0:
            d.seed(tr.x, step=0)
            proj = d.project(tr.x_next)
            if d.is_novel(proj):
                d.grow(tr.x_next, proj, step=0)
            self.reset()
            if self.log is not None:
                self.log.insertions.extend((0, c) for c in d.centers)
        sv = self.step_vectors(tr)
        if self.normal_step(tr, sv) is None:
            info["skipped"] = True
            return info
        if self.allow_growth:
            proj = d.project(tr.x_next, k=sv.k_next)
            if d.is_novel(proj):
                info["grew"] = self._select_and_grow(tr.x_next, proj)
        if self.check_every and self.t % self.check_every == 0:
            self.check_numerics()
        return info

    def _select_and_grow(self, x: StateAction, proj: Projection) -> bool:
        use = self.usefulness(proj)
        seeding = self.m < 2
        if self.tol2 > 0 and not seeding and not use.gain > self.tol2:
            self.n_rejected += 1
            return False
        try:
            self.grow_step(x, proj, use)
        except SingularGrowthError as exc:
            self.n_rejected += 1
            log.debug("growth rejected at t=%d: %s", self.t, exc)
            return False
        return True

    def check_numerics(self, tol: float = 1e-6) -> None:
        self.dictionary.rebuild_check(tol)
        if self.method != "lstd":
            asym = float(np.max(np.abs(self.p_inv - self.p_inv.T))) if self.m else 0.0
            if asym > tol * max(1.0, float(np.max(np.abs(self.p_inv)))):
                raise NumericalDriftError(f"P^-1 asymmetry {asym:.3e}")

    # -- method hooks ----------------------------------------------------

    def _normal(self, tr: Transition, sv: StepVectors):
        raise NotImplementedError

    def _usefulness(self, proj: Projection) -> Usefulness:
        raise NotImplementedError

    def _augment(self, proj: Projection, use: Usefulness) -> None:
        raise NotImplementedError

    # -- copying -----------------------------------------------------------

    def snapshot_arrays(self) -> dict:
        """Arrays needed to restore the evaluator (see :mod:`kernel_pe.snapshot`)."""
        return {"w": self.w.copy(), "p_inv": self.p_inv.copy()}

    def restore_arrays(self, arrays: dict) -> None:
        """Inverse of :meth:`snapshot_arrays` on an evaluator of matching size."""
        for key, value in arrays.items():
            setattr(self, key, np.array(value, dtype=np.float64))
        self._cache = None
        self._refresh_floor()


@dataclass
class _BRMCache:
    sv: StepVectors
    Ph: np.ndarray
    delta: float
    rho: float


class BRM(PolicyEvaluator):
    """Bellman residual minimization; deterministic transitions only."""

    method = "brm"

    @property
    def cost(self) -> float:
        return self.xi

    def _normal(self, tr, sv):
        h = sv.h
        Ph = self.p_inv @ h
        delta = 1.0 + h @ Ph
        if abs(delta) <= self._tiny:
            raise SingularUpdateError(f"Delta={delta:.3e}")
        rho = tr.reward - h @ self.w
        self.w = self.w + (rho / delta) * Ph
        self.p_inv = self.p_inv - Ph[:, None] * (Ph / delta)
        self.xi += rho * rho / delta
        return _BRMCache(sv, Ph, delta, rho)

    def _usefulness(self, proj):
        c = self._cache
        a = proj.a
        delta_h = c.sv.h_star - c.sv.h @ a
        w_b = a + (delta_h / c.delta) * c.Ph
        delta_b = delta_h * delta_h / c.delta + self.hyper.sigma2 * proj.delta
        kappa = delta_h * c.rho / (delta_b * c.delta)
        return Usefulness(kappa * kappa * delta_b, delta_b, kappa, {"w_b": w_b})

    def _augment(self, proj, use):
        w_b = use.extra["w_b"]
        self.p_inv = border_inverse(self.p_inv, w_b, w_b, use.delta_b)
        self.w = np.append(self.w - use.kappa * w_b, use.kappa)
        self.xi -= use.gain


@dataclass
class _TraceCache:
    sv: StepVectors
    z_old: np.ndarray
    decay: float
    delta: float
    rho: float
    reward: float
    Pz: np.ndarray = None
    hP: np.ndarray = None
    Pk: np.ndarray = None
    w_old: np.ndarray = None
    d: np.ndarray = None


class LSTD(PolicyEvaluator):
    """LSTD(lambda) with an auxiliary BRM engine for usefulness scores.

    The fixed-point solve has no cost functional of its own, so candidate
    centers are scored by the BRM cost reduction on the same transitions.
    The auxiliary engine only runs under supervised selection (``tol2 > 0``)
    or when ``shadow=True``; otherwise ``cost`` is NaN and the gain is unused.
    """

    method = "lstd"

    def __init__(self, *args, shadow: bool | None = None, **kwargs):
        tol2 = kwargs.get("tol2", args[3] if len(args) > 3 else 0.0)
        self.shadow = tol2 > 0 if shadow is None else bool(shadow)
        super().__init__(*args, **kwargs)

    def _reset_extra(self, m):
        self.z = np.zeros(m)
        self._brm = None
        if self.shadow:
            self._brm = BRM(self.spec, self.hyper, dictionary=self.dictionary, grow=False,
                            floor=self.floor)

    @property
    def cost(self) -> float:
        return self._brm.xi if self._brm is not None else float("nan")

    def _normal(self, tr, sv):
        decay = self.hyper.lam * tr.gamma_eff
        z = decay * self.z + sv.k_t
        Pz = self.p_inv @ z
        hP = sv.h @ self.p_inv
        delta = 1.0 + hP @ z
        if abs(delta) <= self._tiny:
            raise SingularUpdateError(f"Delta={delta:.3e}")
        # the auxiliary BRM must accept the row too, or both skip it
        if self._brm is not None:
            self._brm._cache = self._brm._normal(tr, sv)
        rho = tr.reward - sv.h @ self.w
        z_old = self.z
        self.z = z
        self.w = self.w + (rho / delta) * Pz
        self.p_inv = self.p_inv - Pz[:, None] * (hP / delta)
        return _TraceCache(sv, z_old, decay, delta, rho, tr.reward, Pz=Pz, hP=hP)

    def _usefulness(self, proj):
        c = self._cache
        a = proj.a
        delta1 = c.sv.h_star - c.sv.h @ a
        z_star = c.decay * (c.z_old @ a) + c.sv.k_star_t
        delta2 = z_star - self.z @ a
        w_b1 = a + (delta1 / c.delta) * c.Pz
        w_b2 = a + (delta2 / c.delta) * c.hP
        delta_b = delta1 * delta2 / c.delta + self.hyper.sigma2 * proj.delta
        kappa = delta2 * c.rho / (delta_b * c.delta)
        brm_use = self._brm._usefulness(proj) if self._brm is not None else None
        gain = brm_use.gain if brm_use is not None else float("nan")
        return Usefulness(gain, delta_b, kappa,
                          {"w_b1": w_b1, "w_b2": w_b2, "z_star": z_star, "brm": brm_use})

    def _augment(self, proj, use):
        e = use.extra
        self.p_inv = border_inverse(self.p_inv, e["w_b1"], e["w_b2"], use.delta_b)
        self.w = np.append(self.w - use.kappa * e["w_b1"], use.kappa)
        self.z = np.append(self.z, e["z_star"])
        if self._brm is not None:
            self._brm._augment(proj, e["brm"])
            self._brm._refresh_floor()

    def snapshot_arrays(self):
        out = super().snapshot_arrays()
        out["z"] = self.z.copy()
        if self._brm is not None:
            out.update(shadow_w=self._brm.w.copy(), shadow_p_inv=self._brm.p_inv.copy(),
                       shadow_xi=np.array(self._brm.xi))
        return out

    def restore_arrays(self, arrays):
        arrays = dict(arrays)
        shadow = {k[7:]: arrays.pop(k) for k in list(arrays) if k.startswith("shadow_")}
        super().restore_arrays(arrays)
        if self._brm is not None and shadow:
            self._brm.restore_arrays({"w": shadow["w"], "p_inv": shadow["p_inv"]})
            self._brm.xi = float(shadow["xi"])


class LSPE(PolicyEvaluator):
    """LSPE(lambda): damped steps toward the regularized projected solution."""

    method = "lspe"

    def _reset_extra(self, m):
        self.z = np.zeros(m)
        self.A = np.zeros((m, m))
        self.b = np.zeros(m)

    def _normal(self, tr, sv):
        decay = self.hyper.lam * tr.gamma_eff
        k = sv.k_t
        Pk = self.p_inv @ k
        delta = 1.0 + k @ Pk
        if abs(delta) <= self._tiny:
            raise SingularUpdateError(f"Delta={delta:.3e}")
        z_old = self.z
        self.z = decay * z_old + k
        self.A = self.A + self.z[:, None] * sv.h
        self.b = self.b + self.z * tr.reward
        self.p_inv = self.p_inv - Pk[:, None] * (Pk / delta)
        w_old = self.w
        rho = tr.reward - sv.h @ w_old
        d = self.b - self.A @ w_old
        self.w = w_old + self.hyper.step_size(self.t) * (self.p_inv @ d)
        return _TraceCache(sv, z_old, decay, delta, rho, tr.reward, Pk=Pk, w_old=w_old, d=d)

    def _usefulness(self, proj):
        c = self._cache
        sv = c.sv
        a = proj.a
        z_a = self.z @ a
        z_star = c.decay * (c.z_old @ a) + sv.k_star_t
        delta2 = z_star - z_a
        delta_k = sv.k_star_t - sv.k_t @ a
        w_b = a + (delta_k / c.delta) * c.Pk
        delta_b = delta_k * delta_k / c.delta + self.hyper.sigma2 * proj.delta
        resid = a @ c.d + delta2 * c.rho - w_b @ c.d
        eta = self.hyper.step_size(self.t - 1)
        return Usefulness(resid * resid / delta_b, delta_b, eta * resid / delta_b,
                          {"w_b": w_b, "z_star": z_star, "delta2": delta2, "z_a": z_a})

    def _augment(self, proj, use):
        c = self._cache
        sv = c.sv
        e = use.extra
        a = proj.a
        w_b = e["w_b"]
        self.p_inv = border_inverse(self.p_inv, w_b, w_b, use.delta_b)
        self.w = np.append(self.w - use.kappa * w_b, use.kappa)
        delta1 = sv.h_star - sv.h @ a
        Aa = self.A @ a
        aA = a @ self.A
        m = self.m
        A = np.empty((m + 1, m + 1))
        A[:m, :m] = self.A
        A[:m, m] = Aa + self.z * delta1
        A[m, :m] = aA + e["delta2"] * sv.h
        A[m, m] = a @ Aa - e["z_a"] * (sv.h @ a) + e["z_star"] * sv.h_star
        self.A = A
        self.b = np.append(self.b, a @ self.b + e["delta2"] * c.reward)
        self.z = np.append(self.z, e["z_star"])

    def snapshot_arrays(self):
        out = super().snapshot_arrays()
        out.update(z=self.z.copy(), A=self.A.copy(), b=self.b.copy())
        return out


METHODS = {"brm": BRM, "lstd": LSTD, "lspe": LSPE}


def make_evaluator(method: str, spec: KernelSpec, hyper: Hyper | None = None,
                   **kwargs) -> PolicyEvaluator:
    """Build an evaluator by method name (``brm``, ``lstd`` or ``lspe``)."""
    try:
        cls = METHODS[method.lower()]
    except KeyError:
        raise ValueError(f"unknown method {method!r}; expected one of {sorted(METHODS)}") from None
    return cls(spec, hyper, **kwargs)
