"""Shipped test maps and forms with their expected residual classes.

Every entry builds a domain, a target structure and a map field at a chosen
resolution. ``expected`` records the class the map belongs to:

* ``horizontal``: whether the contact pullback vanishes on ``D``
* ``normal``: whether a normal certificate with (near) zero residual exists
* ``regularity``: verdict of the constraint differential, when meaningful
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Optional

import numpy as np

from .algebra import LeftInvariantStructure, heisenberg_algebra
from .domain import GridDomain
from .errors import InputError
from .geodesics import heisenberg_geodesic_closed_form

TWO_PI = 2 * np.pi


@dataclass
class CorpusMap:
    name: str
    domain: GridDomain
    structure: LeftInvariantStructure
    f: np.ndarray
    F: Optional[np.ndarray] = None
    expected: dict = field(default_factory=dict)


def _h1():
    return heisenberg_algebra(1)[1]


def _constant(n):
    dom = GridDomain.torus((n, n))
    f = np.broadcast_to(np.array([0.3, -0.2, 0.1]), dom.shape + (3,)).copy()
    return dom, f, None, {"horizontal": True, "normal": True, "regularity": "singular"}


def _linear_x(n):
    dom = GridDomain.box((n, n))
    x, _ = dom.coordinates
    f = np.stack([x, np.zeros_like(x), np.zeros_like(x)], axis=-1)
    return dom, f, None, {"horizontal": True, "normal": True}


def _nonhorizontal_w(n):
    dom = GridDomain.box((n, n))
    x, _ = dom.coordinates
    f = np.stack([np.zeros_like(x), np.zeros_like(x), x], axis=-1)
    return dom, f, None, {"horizontal": False}


def _sin_probe(n):
    dom = GridDomain.torus((n, n))
    x, _ = dom.coordinates
    f = np.stack([np.sin(TWO_PI * x), np.zeros_like(x), np.zeros_like(x)], axis=-1)
    return dom, f, None, {"horizontal": True, "normal": False}


def _geodesic_lift(n):
    dom = GridDomain.interval(n)
    t = dom.coordinates[0]
    zeta, w = heisenberg_geodesic_closed_form([0.0], [1.0], TWO_PI, t)
    f = np.stack([zeta[:, 0].real, zeta[:, 0].imag, w], axis=-1)
    return dom, f, None, {"horizontal": True, "normal": True, "y": TWO_PI}


def _mc(fn):
    def build(n):
        dom = GridDomain.torus((n, n))
        x, y = dom.coordinates
        return dom, np.stack(fn(x, y), axis=-1), None, {"horizontal": False}
    return build


MC_MAPS = {
    "mc_mixed": lambda x, y: (np.sin(TWO_PI * x) * np.cos(TWO_PI * y), np.cos(TWO_PI * (x + 2 * y)),
                              0.3 * np.sin(TWO_PI * (x - y))),
    "mc_exp": lambda x, y: (np.exp(np.sin(TWO_PI * x)) * np.cos(TWO_PI * y) - 1,
                            0.5 * np.sin(TWO_PI * y + np.cos(TWO_PI * x)),
                            np.cos(2 * TWO_PI * x) * np.sin(TWO_PI * y)),
    "mc_product": lambda x, y: (0.8 * np.sin(TWO_PI * (x + y)),
                                np.cos(TWO_PI * x) + np.sin(TWO_PI * y) * np.sin(TWO_PI * x),
                                np.zeros_like(x)),
}


def _grad_interval_poly(n):
    dom = GridDomain.interval(n)
    t = dom.coordinates[0]
    f = np.stack([np.sin(3 * t), t ** 2, 0.3 * np.cos(2 * t)], axis=-1)
    F = np.stack([np.sin(np.pi * t), t * np.sin(TWO_PI * t), 0.5 * np.cos(t)], axis=-1)
    return dom, f, F, {"horizontal": False}


def _grad_interval_geodesic(n):
    dom, f, _, meta = _geodesic_lift(n)
    t = dom.coordinates[0]
    F = np.stack([t * (1 - t), np.sin(np.pi * t) ** 2, np.cos(3 * t)], axis=-1)
    return dom, f, F, meta


def _grad_torus(n):
    dom = GridDomain.torus((n, n))
    x, y = dom.coordinates
    f = np.stack(MC_MAPS["mc_mixed"](x, y), axis=-1)
    F = np.stack([0.5 * np.cos(TWO_PI * y), np.sin(TWO_PI * (x + y)),
                  np.cos(TWO_PI * x) * np.sin(TWO_PI * y)], axis=-1)
    return dom, f, F, {"horizontal": False}


_BUILDERS: Dict[str, tuple] = {
    "constant": (_constant, 16),
    "linear_x": (_linear_x, 17),
    "nonhorizontal_w": (_nonhorizontal_w, 17),
    "sin_probe": (_sin_probe, 32),
    "geodesic_lift": (_geodesic_lift, 401),
    "grad_interval_poly": (_grad_interval_poly, 2001),
    "grad_interval_geodesic": (_grad_interval_geodesic, 2001),
    "grad_torus": (_grad_torus, 64),
}
_BUILDERS.update({name: (_mc(fn), 32) for name, fn in MC_MAPS.items()})

GRADIENT_PAIRS = ("grad_interval_poly", "grad_interval_geodesic", "grad_torus")


def names():
    return sorted(_BUILDERS)


def build(name: str, n: Optional[int] = None) -> CorpusMap:
    """Instantiate corpus entry ``name`` on a grid with ``n`` nodes per axis."""
    try:
        builder, default = _BUILDERS[name]
    except KeyError:
        raise InputError(f"unknown corpus map {name!r}; available: {', '.join(names())}") from None
    dom, f, F, expected = builder(int(n or default))
    return CorpusMap(name, dom, _h1(), f, F, expected)


def regularity_form(name: str, dom: GridDomain) -> np.ndarray:
    """D-restricted ``h_1``-valued forms for the regularity dichotomy.

    ``zero``: the zero form. ``injective``: ``alpha(X_1) = A, alpha(X_2) = B``.
    ``loop``: like ``injective`` but ``alpha(X_1) = sin(2 pi y) A`` vanishes
    along the closed ``X_1``-loops ``y = 0`` and ``y = 1/2``.
    """
    if dom.rank_k != 2:
        raise InputError("regularity forms are defined for rank-2 distributions")
    alpha = np.zeros(dom.shape + (2, 3))
    if name == "zero":
        return alpha
    alpha[..., 0, 0] = 1.0
    alpha[..., 1, 1] = 1.0
    if name == "injective":
        return alpha
    if name == "loop":
        y = dom.coordinates[1]
        alpha[..., 0, 0] = np.sin(TWO_PI * y / (dom.spacing[1] * dom.shape[1]))
        return alpha
    raise InputError(f"unknown regularity form {name!r}; use zero, injective or loop")


REGULARITY_FORMS: Dict[str, str] = {"zero": "singular", "injective": "regular", "loop": "singular"}
