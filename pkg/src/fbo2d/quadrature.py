"""Composite Simpson and Gauss-Legendre helpers shared by the experiments."""

from __future__ import annotations

import numpy as np


class QuadratureError(RuntimeError):
    """A quadrature failed its self-convergence gate."""


def simpson_rule(a: float, b: float, panels: int):
    """Nodes and weights of composite Simpson with ``panels`` subintervals."""
    if panels < 2 or panels % 2:
        raise ValueError(f"Simpson needs an even panel count >= 2, got {panels}")
    nodes = np.linspace(a, b, panels + 1)
    w = np.ones(panels + 1)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    w *= (b - a) / (3.0 * panels)
    return nodes, w


def unit_simpson(panels: int):
    """Simpson nodes/weights on [0, 1]; scale weights by the interval length."""
    return simpson_rule(0.0, 1.0, panels)


def gauss_rule(a: float, b: float, n: int):
    """Gauss-Legendre nodes and weights on [a, b]."""
    x, w = np.polynomial.legendre.leggauss(n)
    half = 0.5 * (b - a)
    return a + half * (x + 1.0), half * w
