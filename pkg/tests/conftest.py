"""Shared oracles: brute-force enumeration of walk paths with exact rational weights."""

from fractions import Fraction
from itertools import product

import pytest


def enumerate_walk(t, alpha, beta, y0):
    """All increment sequences ``(y_1..y_t)`` with their exact probabilities; yields ``(prob, x_t, y_t)``."""
    a, b = Fraction(alpha), Fraction(beta)
    for incs in product((-1, 1), repeat=t):
        p = Fraction(1)
        prev = y0
        for y in incs:
            flip = a if prev < 0 else b
            p *= flip if y != prev else 1 - flip
            prev = y
        if p:
            yield p, y0 + sum(incs), prev


def exact_mgf(lam, t, alpha, beta, y0):
    lam = Fraction(lam)
    return sum(p * lam**x for p, x, _ in enumerate_walk(t, alpha, beta, y0))


def exact_mean(t, alpha, beta, y0):
    return sum(p * x for p, x, _ in enumerate_walk(t, alpha, beta, y0))


@pytest.fixture
def seed():
    return 20260114
