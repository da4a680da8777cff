"""Python front end for the deltafree engines.

Exact values come back as :class:`fractions.Fraction` when real and as a
``complex``-like pair ``(re, im)`` of Fractions otherwise.
"""

import json
from fractions import Fraction

from . import _core
from ._core import ConfigError, MissingMarginal, ParseError, UndefinedMoment

__all__ = [
    "ConfigError",
    "MissingMarginal",
    "ParseError",
    "UndefinedMoment",
    "monte_carlo",
    "normalize",
    "oracle_covariance",
    "oracle_moment",
    "phi1",
    "phi2",
    "run_suite",
    "suite_names",
]


def _exact(doc):
    re, im = Fraction(doc["re"]), Fraction(doc["im"])
    return re if im == 0 else (re, im)


def _dump(obj):
    return "" if obj is None else json.dumps(obj)


def normalize(expr):
    return _core.normalize(expr)


def phi1(expr, first_order=None):
    return _exact(json.loads(_core.phi1(expr, _dump(first_order))))


def phi2(p, q, second_order=None):
    return _exact(json.loads(_core.phi2(p, q, _dump(second_order))))


def _oracle(p, q, laws, at):
    out = json.loads(_core.oracle(p, q, _dump(laws), at or 0))
    out["limit"] = _exact(out["limit"])
    if "value" in out:
        out["value"] = _exact(out["value"])
    return out


def oracle_moment(expr, laws=None, at=None):
    """Exact E[(1/N) Tr p] as a rendered function of N, its limit and optionally its value at N=at."""
    return _oracle(expr, "", laws, at)


def oracle_covariance(p, q, laws=None, at=None):
    return _oracle(p, q, laws, at)


def monte_carlo(expressions, ensemble, pairs=()):
    return json.loads(_core.monte_carlo(list(expressions), [tuple(x) for x in pairs], json.dumps(ensemble)))


def run_suite(name, seed=0, samples=2000, jobs=1):
    return json.loads(_core.run_suite(name, seed, samples, jobs))["results"][0]


def suite_names():
    return list(_core.suite_names())
