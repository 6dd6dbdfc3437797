"""Symbolic expressions for recipe data and their JSON form.

Expressions are sympy trees in the coordinate ``z``.  Two named special
functions, ``wp`` and ``wp_prime`` (square-lattice Weierstrass functions),
may appear; they know their own derivatives, so charts and Hopf
differentials built from them can be differentiated symbolically.
"""

from __future__ import annotations

import sympy as sp

from .elliptic import default_wp

Z = sp.Symbol("z")


class wp(sp.Function):
    nargs = 1

    def fdiff(self, argindex=1):
        return wp_prime(self.args[0])


class wp_prime(sp.Function):
    nargs = 1

    def fdiff(self, argindex=1):
        g2 = sp.Float(default_wp().g2, 17)
        return 6 * wp(self.args[0]) ** 2 - g2 / 2


_FUNCS = {"exp": sp.exp, "sin": sp.sin, "cos": sp.cos, "wp": wp, "wp_prime": wp_prime,
          "conjugate": sp.conjugate}


def to_json(e) -> object:
    """Tagged tree: ``{"op": name, "args": [...]}`` or a leaf."""
    e = sp.sympify(e)
    if e.is_Symbol:
        return {"sym": e.name}
    if e is sp.I:
        return {"const": "I"}
    if e is sp.pi:
        return {"const": "pi"}
    if e is sp.E:
        return {"const": "E"}
    if e.is_Integer:
        return {"int": str(int(e))}
    if e.is_Rational:
        return {"rat": [str(e.p), str(e.q)]}
    if e.is_Float:
        return {"float": repr(float(e))}
    if e.is_Add:
        return {"op": "add", "args": [to_json(a) for a in e.args]}
    if e.is_Mul:
        return {"op": "mul", "args": [to_json(a) for a in e.args]}
    if e.is_Pow:
        return {"op": "pow", "args": [to_json(a) for a in e.args]}
    if isinstance(e, sp.Function):
        name = type(e).__name__
        if name not in _FUNCS:
            raise ValueError(f"function {name} cannot be serialized")
        return {"op": name, "args": [to_json(a) for a in e.args]}
    raise ValueError(f"cannot serialize {e!r}")


def from_json(d) -> sp.Expr:
    if not isinstance(d, dict):
        raise ValueError("expression node must be an object")
    if "sym" in d:
        return sp.Symbol(d["sym"])
    if "const" in d:
        return {"I": sp.I, "pi": sp.pi, "E": sp.E}[d["const"]]
    if "int" in d:
        return sp.Integer(int(d["int"]))
    if "rat" in d:
        return sp.Rational(int(d["rat"][0]), int(d["rat"][1]))
    if "float" in d:
        return sp.Float(float(d["float"]), 17)
    op = d.get("op")
    args = [from_json(a) for a in d.get("args", [])]
    if op == "add":
        return sp.Add(*args)
    if op == "mul":
        return sp.Mul(*args)
    if op == "pow":
        return sp.Pow(*args)
    if op in _FUNCS:
        return _FUNCS[op](*args)
    raise ValueError(f"unknown expression node {d!r}")


def compile_expr(e):
    """Numeric evaluator ``z -> complex`` for an expression in ``z``."""
    w = default_wp()
    f = sp.lambdify(Z, e, modules=[{"wp": w.wp, "wp_prime": w.wp_prime}, "numpy"])

    def call(z):
        return complex(f(complex(z)))

    return call
