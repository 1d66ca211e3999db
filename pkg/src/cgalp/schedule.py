"""Open-loop parameter sequences and their admissibility checks."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

B_MAX = 1.0 / 3.0


@dataclass(frozen=True)
class ParameterSchedule:
    """Step, smoothing, dual-step and penalty sequences.

    ``gamma_k = log(k+2)^a / (k+1)^(1-b)``, ``beta_k = 1/(k+1)^(1-delta)``,
    ``theta_k = gamma_k / c`` and ``rho_k = rho`` unless ``rho_seq`` is given.
    """

    a: float = 0.0
    b: float = 0.0
    delta: float = 0.5
    rho: float = 5.0
    c: float = 1.0
    rho_seq: Optional[Callable[[int], float]] = field(default=None, compare=False)

    def gamma(self, k: int) -> float:
        if self.a == 0.0:
            return 1.0 / (k + 1.0) ** (1.0 - self.b)
        return math.log(k + 2.0) ** self.a / (k + 1.0) ** (1.0 - self.b)

    def beta(self, k: int) -> float:
        return 1.0 / (k + 1.0) ** (1.0 - self.delta)

    def theta(self, k: int) -> float:
        return self.gamma(k) / self.c

    def rho_of_k(self, k: int) -> float:
        return self.rho if self.rho_seq is None else float(self.rho_seq(k))

    @property
    def gamma_bar(self) -> float:
        """Upper bound on ``gamma_k / gamma_{k+1}``."""
        return 2.0 ** (1.0 - self.b)

    def gammas(self, ks) -> np.ndarray:
        ks = np.asarray(ks, dtype=np.float64)
        return np.log(ks + 2.0) ** self.a / (ks + 1.0) ** (1.0 - self.b)

    def rhos(self, ks) -> np.ndarray:
        ks = np.asarray(ks)
        if self.rho_seq is None:
            return np.full(ks.shape, float(self.rho))
        return np.array([self.rho_seq(int(k)) for k in ks], dtype=np.float64)

    def as_dict(self) -> dict:
        return {"a": self.a, "b": self.b, "delta": self.delta, "rho": self.rho, "c": self.c}


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    detail: str


@dataclass(frozen=True)
class ValidationReport:
    checks: tuple

    @property
    def ok(self) -> bool:
        return all(c.passed for c in self.checks)

    def failures(self) -> list:
        return [c for c in self.checks if not c.passed]

    def failed_names(self) -> list:
        return [c.name for c in self.failures()]

    def __str__(self):
        lines = [f"{'PASS' if c.passed else 'FAIL'}  {c.name:<12} {c.detail}" for c in self.checks]
        lines.append("schedule admissible" if self.ok else "schedule rejected")
        return "\n".join(lines)


def validate_schedule(s: ParameterSchedule, f_lipschitz=None, d_C=None,
                      horizon=10**6) -> ValidationReport:
    """Check the schedule against the admissibility conditions (P.1)-(P.7).

    Summability in (P.1) is decided from the exponents: with a
    Lipschitz-smooth ``f`` the curvature term is ``zeta(g) = L d_C^2 g^2 / 2``,
    so the three series converge iff ``2(1-b) > 1``, ``2(1-b) - (1-delta) > 1``
    and ``(1-b) + (1-delta) > 1`` (log factors do not change strict
    inequalities).  Everything that involves whole sequences is evaluated
    directly for ``k = 0..horizon``.
    """
    a, b, d, c = s.a, s.b, s.delta, s.c
    checks = []

    checks.append(Check("a-range", a >= 0, f"a = {a:g} (need a >= 0)"))
    checks.append(Check(
        "b-range", 0.0 <= b < B_MAX,
        f"b = {b:g}" if 0.0 <= b < B_MAX else "b outside [0, 1/3)"))
    if d <= 2 * b:
        detail = f"delta = {d:g} <= 2b = {2 * b:g}"
    elif d >= 1.0:
        detail = f"delta = {d:g} >= 1"
    elif d >= 1.0 - b:
        detail = f"delta = {d:g} >= 1 - b = {1 - b:g}"
    else:
        detail = f"2b < delta = {d:g} < min(1, 1-b)"
    checks.append(Check("delta-range", 2 * b < d < 1.0 and d < 1.0 - b, detail))
    checks.append(Check("c-range", c > 0, f"c = {c:g} (need c > 0)"))

    ks = np.arange(horizon + 2, dtype=np.float64)
    with np.errstate(all="ignore"):
        gam = s.gammas(ks)
        rho = s.rhos(ks)
    e_g = 1.0 - b
    e_b = 1.0 - d
    in_unit = bool(np.all((gam > 0) & (gam <= 1.0)))
    summable = {
        "zeta(gamma)": 2 * e_g > 1,
        "gamma^2/beta": 2 * e_g - e_b > 1,
        "gamma*beta": e_g + e_b > 1,
    }
    detail = ", ".join(f"{k} {'summable' if v else 'NOT summable'}" for k, v in summable.items())
    if not in_unit:
        detail = "gamma_k leaves ]0, 1]; " + detail
    if f_lipschitz is not None and d_C is not None:
        detail += f"; zeta(g) = {f_lipschitz * d_C ** 2 / 2:g} g^2"
    checks.append(Check("P.1", in_unit and all(summable.values()), detail))

    checks.append(Check("P.2", e_g <= 1.0, "gamma_k not summable" if e_g <= 1.0
                        else "gamma_k summable"))

    beta_ok = e_b > 0
    checks.append(Check("P.3", beta_ok, "beta_k decreases to 0" if beta_ok
                        else "beta_k does not vanish"))

    rho_ok = bool(np.all(np.isfinite(rho)) and rho.min() > 0 and np.all(np.diff(rho) >= 0))
    rho_lo = float(rho.min()) if rho.size else 0.0
    checks.append(Check("P.4", rho_ok, f"rho_k in [{rho_lo:g}, {float(rho.max()):g}]"
                        + ("" if rho_ok else " not non-decreasing/positive/bounded")))

    with np.errstate(all="ignore"):
        ratio = gam[:-1] / gam[1:]
    ratio_ok = bool(np.all(np.isfinite(ratio)) and ratio.min() > 0
                    and ratio.max() <= s.gamma_bar * (1 + 1e-12))
    checks.append(Check("P.5", ratio_ok,
                        f"gamma_k/gamma_k+1 in [{ratio.min():.4g}, {ratio.max():.4g}], "
                        f"bound {s.gamma_bar:.4g}"))

    margin = s.gamma_bar / c - rho_lo / 2.0 if c > 0 else np.inf
    checks.append(Check("P.6", margin < 0,
                        f"gamma_bar/c - rho/2 = {margin:.4g} (need < 0, i.e. "
                        f"rho > {2 * s.gamma_bar / c if c > 0 else np.inf:.4g})"))

    if c > 0:
        lhs = (rho[1:] - rho[:-1] - gam[1:] * rho[1:]
               + (2.0 / c) * gam[:-1] - gam[:-1] ** 2 / c)
        viol = lhs - gam[1:]
        worst = int(np.argmax(viol))
        p7 = bool(viol[worst] <= 0)
        d7 = (f"holds for k = 0..{horizon}" if p7
              else f"fails first at k = {int(np.argmax(viol > 0))} (excess {viol[worst]:.3g})")
    else:
        p7, d7 = False, "undefined for c <= 0"
    checks.append(Check("P.7", p7, d7))
    return ValidationReport(tuple(checks))
