"""
Vorticity distributions omega(p) and their primitives Omega(p) on [0, 1].

The vorticity is the only physical input of the toolkit. Three concrete
representations are supported:

* ``constant``  -- omega(p) = b
* ``affine``    -- omega(p) = a + b p
* ``tabulated`` -- monotone piecewise cubic (PCHIP) through samples (p_i, omega_i)

All models are immutable and hashable, so derived quantities (s_0, s_c, ...)
can be cached per model.
"""

from __future__ import annotations

import math
from collections.abc import Sequence
from dataclasses import dataclass
from functools import cached_property, lru_cache

import numpy as np
from scipy.interpolate import PchipInterpolator
from scipy.optimize import minimize_scalar

from .errors import ConfigError, DomainError

KINDS = ("constant", "affine", "tabulated")

# dense sampling used to locate the maximiser of Omega
N_SCAN = 1025


@dataclass(frozen=True)
class VorticityModel:
    kind: str
    a: float = 0.0
    b: float = 0.0
    samples: tuple = ()

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown vorticity kind {self.kind!r}; expected one of {KINDS}")
        if self.kind == "tabulated":
            if len(self.samples) < 2:
                raise ConfigError("tabulated vorticity needs at least two samples")
            p = np.array([s[0] for s in self.samples], dtype=float)
            if np.any(np.diff(p) <= 0):
                raise ConfigError("tabulated vorticity sample grid must be strictly increasing")
            if p[0] != 0.0 or p[-1] != 1.0:
                raise ConfigError("tabulated vorticity samples must span exactly [0, 1]")
            if not np.all(np.isfinite([s[1] for s in self.samples])):
                raise ConfigError("tabulated vorticity values must be finite")

    # -- constructors -----------------------------------------------------

    @classmethod
    def constant(cls, b: float) -> VorticityModel:
        return cls("constant", b=float(b))

    @classmethod
    def affine(cls, a: float, b: float) -> VorticityModel:
        return cls("affine", a=float(a), b=float(b))

    @classmethod
    def tabulated(cls, p: Sequence[float], values: Sequence[float]) -> VorticityModel:
        if len(p) != len(values):
            raise ConfigError("tabulated vorticity: p and values differ in length")
        return cls("tabulated", samples=tuple((float(x), float(y)) for x, y in zip(p, values)))

    @classmethod
    def from_config(cls, block: dict) -> VorticityModel:
        """Build a model from the ``vorticity`` block of a run configuration."""
        if not isinstance(block, dict) or "kind" not in block:
            raise ConfigError("vorticity block must be a mapping with a 'kind' key")
        kind = block["kind"]
        try:
            if kind == "constant":
                return cls.constant(block.get("b", 0.0))
            if kind == "affine":
                return cls.affine(block["a"], block["b"])
            if kind == "tabulated":
                pairs = block["samples"]
                return cls.tabulated([s[0] for s in pairs], [s[1] for s in pairs])
        except (KeyError, TypeError, IndexError) as exc:
            raise ConfigError(f"malformed vorticity block: {exc}") from exc
        raise ConfigError(f"unknown vorticity kind {kind!r}; expected one of {KINDS}")

    def to_config(self) -> dict:
        if self.kind == "constant":
            return {"kind": "constant", "b": self.b}
        if self.kind == "affine":
            return {"kind": "affine", "a": self.a, "b": self.b}
        return {"kind": "tabulated", "samples": [list(s) for s in self.samples]}

    # -- evaluation -------------------------------------------------------

    @cached_property
    def _pchip(self):
        p = np.array([s[0] for s in self.samples])
        v = np.array([s[1] for s in self.samples])
        interp = PchipInterpolator(p, v, extrapolate=False)
        return interp, interp.antiderivative()

    def omega(self, p):
        """Vorticity at p (scalar or array), no domain check."""
        if self.kind == "constant":
            return np.full(np.shape(p), self.b) if np.ndim(p) else self.b
        if self.kind == "affine":
            return self.a + self.b * p
        out = self._pchip[0](p)
        return float(out) if np.ndim(p) == 0 else out

    def Omega(self, p):
        """Primitive of omega vanishing at p = 0, no domain check."""
        if self.kind == "constant":
            return self.b * p
        if self.kind == "affine":
            return self.a * p + 0.5 * self.b * p * p
        out = self._pchip[1](p)
        return float(out) if np.ndim(p) == 0 else out

    def scalar_Omega(self):
        """A fast pure-float closure for Omega, used inside quadrature loops."""
        if self.kind == "constant":
            b = self.b
            return lambda p: b * p
        if self.kind == "affine":
            a, b = self.a, self.b
            return lambda p: a * p + 0.5 * b * p * p
        anti = self._pchip[1]
        return lambda p: float(anti(p))


def _check_domain(p):
    arr = np.asarray(p, dtype=float)
    if np.any(~np.isfinite(arr)) or np.any(arr < 0.0) or np.any(arr > 1.0):
        raise DomainError(f"stream-function value outside [0, 1]: {p!r}")


def eval_omega(model: VorticityModel, p):
    """omega(p) for p in [0, 1]."""
    _check_domain(p)
    return model.omega(p)


def eval_Omega(model: VorticityModel, p):
    """Omega(p) = int_0^p omega for p in [0, 1].

    Closed form for constant and affine models; for tabulated models the
    antiderivative of the piecewise cubic interpolant is exact.
    """
    _check_domain(p)
    return model.Omega(p)


@lru_cache(maxsize=256)
def omega_maximizer(model: VorticityModel) -> tuple[float, float]:
    """Return (p*, Omega(p*)) with p* the maximiser of Omega on [0, 1].

    Dense sampling on N_SCAN nodes followed by a bounded golden-section
    (Brent) refinement around the best node to 1e-12 in p.
    """
    grid = np.linspace(0.0, 1.0, N_SCAN)
    vals = np.asarray(model.Omega(grid), dtype=float)
    k = int(np.argmax(vals))
    best_p, best_v = float(grid[k]), float(vals[k])
    lo = grid[max(k - 1, 0)]
    hi = grid[min(k + 1, N_SCAN - 1)]
    if hi > lo:
        res = minimize_scalar(lambda x: -model.Omega(x), bounds=(lo, hi),
                              method="bounded", options={"xatol": 1e-12})
        if res.success and -res.fun > best_v:
            best_p, best_v = float(res.x), float(-res.fun)
    return best_p, best_v


def slip_lower_bound(model: VorticityModel) -> float:
    """s_0 = sqrt(max_{[0,1]} 2 Omega); streams need s > s_0."""
    _, omax = omega_maximizer(model)
    return math.sqrt(max(0.0, 2.0 * omax))
