"""Tiny arithmetic expressions for boundary data.

Grammar: numbers, the variables ``x, y, z, r, theta``, constants ``pi`` and
``e``, operators ``+ - * / ^`` (``^`` is power; ``**`` also accepted), and
the functions ``log, exp, sin, cos, tan, sqrt, abs, atan2``.  Expressions
are parsed with :mod:`ast` against a whitelist and evaluated with numpy, so
they vectorize over vertex arrays.
"""

from __future__ import annotations

import ast

import numpy as np

from .errors import ExpressionError

_FUNCTIONS = {
    "log": np.log,
    "exp": np.exp,
    "sin": np.sin,
    "cos": np.cos,
    "tan": np.tan,
    "sqrt": np.sqrt,
    "abs": np.abs,
    "atan2": np.arctan2,
}

_CONSTANTS = {"pi": np.pi, "e": np.e}

_VARIABLES = ("x", "y", "z", "r", "theta")

_BINOPS = {
    ast.Add: np.add,
    ast.Sub: np.subtract,
    ast.Mult: np.multiply,
    ast.Div: np.divide,
    ast.Pow: np.power,
}


def compile_expression(text):
    """Parse an expression; returns a callable of an environment dict."""
    source = text.replace("^", "**")
    try:
        tree = ast.parse(source, mode="eval")
    except SyntaxError as exc:
        raise ExpressionError(
            f"cannot parse {text!r}: {exc.msg} (column {exc.offset})"
        ) from None
    _validate(tree.body, text)

    def evaluate(env):
        return _eval(tree.body, env)

    evaluate.source = text
    return evaluate


def evaluate_expression(text, env):
    return compile_expression(text)(env)


def _validate(node, text):
    if isinstance(node, ast.Constant):
        if not isinstance(node.value, (int, float)):
            raise ExpressionError(f"literal {node.value!r} not allowed in {text!r}")
    elif isinstance(node, ast.Name):
        if node.id not in _VARIABLES and node.id not in _CONSTANTS:
            raise ExpressionError(
                f"unknown name {node.id!r} in {text!r} "
                f"(variables: {', '.join(_VARIABLES)})"
            )
    elif isinstance(node, ast.BinOp):
        if type(node.op) not in _BINOPS:
            raise ExpressionError(f"operator not allowed in {text!r}")
        _validate(node.left, text)
        _validate(node.right, text)
    elif isinstance(node, ast.UnaryOp):
        if not isinstance(node.op, (ast.UAdd, ast.USub)):
            raise ExpressionError(f"operator not allowed in {text!r}")
        _validate(node.operand, text)
    elif isinstance(node, ast.Call):
        if not isinstance(node.func, ast.Name) or node.func.id not in _FUNCTIONS:
            raise ExpressionError(f"unknown function call in {text!r}")
        if node.keywords:
            raise ExpressionError(f"keyword arguments not allowed in {text!r}")
        expected = 2 if node.func.id == "atan2" else 1
        if len(node.args) != expected:
            raise ExpressionError(
                f"{node.func.id} takes {expected} argument(s) in {text!r}"
            )
        for arg in node.args:
            _validate(arg, text)
    else:
        raise ExpressionError(
            f"unsupported syntax at column {getattr(node, 'col_offset', '?')} "
            f"in {text!r}"
        )


def _eval(node, env):
    if isinstance(node, ast.Constant):
        return float(node.value)
    if isinstance(node, ast.Name):
        if node.id in _CONSTANTS:
            return _CONSTANTS[node.id]
        try:
            return env[node.id]
        except KeyError:
            raise ExpressionError(f"variable {node.id!r} not available here") from None
    if isinstance(node, ast.BinOp):
        return _BINOPS[type(node.op)](_eval(node.left, env), _eval(node.right, env))
    if isinstance(node, ast.UnaryOp):
        val = _eval(node.operand, env)
        return -val if isinstance(node.op, ast.USub) else val
    if isinstance(node, ast.Call):
        args = [_eval(a, env) for a in node.args]
        return _FUNCTIONS[node.func.id](*args)
    raise ExpressionError("unreachable")
