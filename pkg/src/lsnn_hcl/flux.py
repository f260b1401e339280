"""Scalar flux models and the space-time total flux F(u) = (f_1(u), ..., f_d(u), u)."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

__all__ = ["FluxModel", "builtin_flux", "custom_flux", "total_flux", "BUILTIN_FLUX_NAMES"]

ArrayFn = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class FluxModel:
    """Spatial flux components of a scalar conservation law, with derivatives.

    ``f[i]``, ``f_prime[i]`` and ``f_double_prime[i]`` are vectorized
    callables for the i-th spatial direction.  Derivatives are analytic:
    the characteristic tracer and the exact Riemann solutions need f' to
    machine precision, so numerical differentiation is not an option here.
    """

    d: int
    f: Sequence[ArrayFn]
    f_prime: Sequence[ArrayFn]
    name: str
    f_double_prime: Sequence[ArrayFn] | None = None

    def __post_init__(self):
        if self.d not in (1, 2):
            raise ValueError(f"spatial dimension must be 1 or 2, got {self.d}")
        if len(self.f) != self.d or len(self.f_prime) != self.d:
            raise ValueError("need one flux component and derivative per spatial axis")


def _burgers_f(u):
    return 0.5 * u * u


def _burgers_fp(u):
    return u


def _burgers_fpp(u):
    return np.ones_like(np.asarray(u, dtype=float))


_BUILTINS: dict[str, Callable[[], FluxModel]] = {
    "burgers1d": lambda: FluxModel(
        d=1, f=[_burgers_f], f_prime=[_burgers_fp], f_double_prime=[_burgers_fpp],
        name="burgers1d",
    ),
    "quartic1d": lambda: FluxModel(
        d=1,
        f=[lambda u: 0.25 * u**4],
        f_prime=[lambda u: u**3],
        f_double_prime=[lambda u: 3.0 * u**2],
        name="quartic1d",
    ),
    "cubic1d": lambda: FluxModel(
        d=1,
        f=[lambda u: u**3 / 3.0],
        f_prime=[lambda u: u**2],
        f_double_prime=[lambda u: 2.0 * u],
        name="cubic1d",
    ),
    "burgers2d": lambda: FluxModel(
        d=2,
        f=[_burgers_f, _burgers_f],
        f_prime=[_burgers_fp, _burgers_fp],
        f_double_prime=[_burgers_fpp, _burgers_fpp],
        name="burgers2d",
    ),
}

BUILTIN_FLUX_NAMES = tuple(sorted(_BUILTINS))


def builtin_flux(name: str) -> FluxModel:
    """Return a named builtin flux model with analytic derivatives."""
    try:
        return _BUILTINS[name]()
    except KeyError:
        raise ValueError(f"unknown flux {name!r}; choose from {BUILTIN_FLUX_NAMES}") from None


def custom_flux(f, f_prime, d: int = 1, name: str = "custom", f_double_prime=None) -> FluxModel:
    """Wrap user-supplied (f, f') closures; f'' is optional, diagnostics only."""
    fs = [f] if callable(f) else list(f)
    fps = [f_prime] if callable(f_prime) else list(f_prime)
    fpps = None
    if f_double_prime is not None:
        fpps = [f_double_prime] if callable(f_double_prime) else list(f_double_prime)
    return FluxModel(d=d, f=fs, f_prime=fps, f_double_prime=fpps, name=name)


def total_flux(model: FluxModel, u) -> np.ndarray:
    """Space-time total flux (f_1(u), ..., f_d(u), u) at scalar or array u.

    The last component is always u itself (the temporal flux).
    """
    u = np.asarray(u, dtype=float)
    comps = [np.asarray(fi(u), dtype=float) for fi in model.f]
    comps.append(u)
    if u.ndim == 0:
        return np.array([float(c) for c in comps])
    return np.stack(comps, axis=-1)
