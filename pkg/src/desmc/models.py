"""Built-in differential equation systems and their metadata.

A model bundles the right-hand side g(x, x_lag | theta) with everything the
samplers need to know about it: component count, free parameters and their
support constraints, which components are observed, the observation noise
family, and whether the system is delayed.  Right-hand sides are vectorised
over leading axes and never raise on poles or overflow; non-finite output is
the caller's signal to assign a -inf log density.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = ["DeModel", "lookup", "register", "rhs_eval", "model_names"]


@dataclass(frozen=True, eq=False)
class DeModel:
    name: str
    n_components: int
    n_params: int
    observed: tuple[int, ...]          # zero-based component indices
    has_delay: bool
    rhs: callable                      # (x, x_lag, theta) -> dx/dt, shape (..., I)
    noise: tuple[str, ...]             # per observed component: gaussian | lognormal
    param_names: tuple[str, ...]
    param_support: tuple = ()          # per parameter: None or (lo, hi)
    component_names: tuple[str, ...] = ()

    def __post_init__(self):
        if not self.observed:
            raise ValueError("a model must observe at least one component")
        if len(self.noise) != len(self.observed):
            raise ValueError("one noise family per observed component required")
        if not self.param_support:
            object.__setattr__(self, "param_support",
                               tuple(None for _ in range(self.n_params)))
        if not self.component_names:
            object.__setattr__(
                self, "component_names",
                tuple(f"x{i + 1}" for i in range(self.n_components)))

    def in_support(self, theta) -> bool:
        for value, bounds in zip(theta, self.param_support):
            if bounds is None:
                continue
            lo, hi = bounds
            if not (lo < value < hi):
                return False
        return True


_REGISTRY: dict[str, DeModel] = {}


def register(model: DeModel):
    _REGISTRY[model.name] = model
    return model


def lookup(name: str) -> DeModel:
    try:
        return _REGISTRY[name]
    except KeyError:
        known = ", ".join(sorted(_REGISTRY))
        raise KeyError(f"unknown model {name!r}; registered models: {known}") from None


def model_names() -> tuple[str, ...]:
    return tuple(sorted(_REGISTRY))


def rhs_eval(model: DeModel, x, x_lag, theta) -> np.ndarray:
    """Evaluate the right-hand side; non-finite entries are passed through."""
    x = np.asarray(x, dtype=float)
    x_lag = np.asarray(x_lag, dtype=float)
    with np.errstate(all="ignore"):
        return model.rhs(x, x_lag, theta)


def _ode_basic_rhs(x, x_lag, theta):
    out = np.empty_like(x)
    out[..., 0] = 72.0 / (36.0 + x[..., 1]) - theta[0]
    out[..., 1] = theta[1] * x[..., 0] - 1.0
    return out


def _ode_bimodal_rhs(x, x_lag, theta):
    out = np.empty_like(x)
    out[..., 0] = 72.0 / (36.0 + x[..., 1]) - abs(theta[0])
    out[..., 1] = theta[1] * x[..., 0] - 1.0
    return out


def _hutchinson_log_rhs(x, x_lag, theta):
    # log-population form: dW/dt = nu * (1 - exp(W(t - tau)) / (1000 P))
    nu, cap = theta[0], theta[1]
    out = np.empty_like(x)
    out[..., 0] = nu * (1.0 - np.exp(x_lag[..., 0]) / (1000.0 * cap))
    return out


_MONK_HILL = 8  # fixed Hill coefficient; strong nonlinearity, not estimated


def _monk_rhs(x, x_lag, theta):
    mu_m, mu_p, p0 = theta[0], theta[1], theta[2]
    out = np.empty_like(x)
    out[..., 0] = 1.0 / (1.0 + (x_lag[..., 1] / p0) ** _MONK_HILL) - mu_m * x[..., 0]
    out[..., 1] = x[..., 0] - mu_p * x[..., 1]
    return out


register(DeModel(
    name="ode-basic",
    n_components=2,
    n_params=2,
    observed=(0, 1),
    has_delay=False,
    rhs=_ode_basic_rhs,
    noise=("gaussian", "gaussian"),
    param_names=("theta1", "theta2"),
))

register(DeModel(
    name="ode-bimodal",
    n_components=2,
    n_params=2,
    observed=(0, 1),
    has_delay=False,
    rhs=_ode_bimodal_rhs,
    noise=("gaussian", "gaussian"),
    param_names=("theta1", "theta2"),
))

register(DeModel(
    name="hutchinson-log",
    n_components=1,
    n_params=2,
    observed=(0,),
    has_delay=True,
    rhs=_hutchinson_log_rhs,
    noise=("lognormal",),
    param_names=("nu", "P"),
    param_support=((0.0, np.inf), (0.0, np.inf)),
    component_names=("W",),
))

register(DeModel(
    name="monk",
    n_components=2,
    n_params=3,
    observed=(0, 1),
    has_delay=True,
    rhs=_monk_rhs,
    noise=("gaussian", "gaussian"),
    param_names=("mu_m", "mu_p", "p0"),
    param_support=(None, None, (0.0, np.inf)),
    component_names=("mrna", "protein"),
))
