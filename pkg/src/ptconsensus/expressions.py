"""Minimal arithmetic expressions for scenario-defined models.

Grammar: numbers, ``+ - * / **``, unary minus, parentheses, the functions
``sin cos exp sqrt tanh abs``, the constants ``pi`` and ``e``, the state
variables ``x1..xn`` and time ``t``. Anything else is rejected at parse time,
so evaluation never touches Python builtins.
"""

from __future__ import annotations

import ast
import math
import re

import numpy as np

__all__ = ["Expression", "ExpressionError"]

_FUNCS = {
    "sin": np.sin,
    "cos": np.cos,
    "exp": np.exp,
    "sqrt": np.sqrt,
    "tanh": np.tanh,
    "abs": np.abs,
}
_CONSTS = {"pi": math.pi, "e": math.e}
_BINOPS = (ast.Add, ast.Sub, ast.Mult, ast.Div, ast.Pow)
_UNARY = (ast.UAdd, ast.USub)
_STATE_VAR = re.compile(r"x([1-9][0-9]*)$")


class ExpressionError(ValueError):
    pass


class Expression:
    """Compiled expression in state variables ``x1..xn`` and time ``t``.

    Calling it with ``x`` of shape ``(..., n)`` broadcasts over the leading
    axes.
    """

    def __init__(self, source: str | float | int, n: int):
        self.source = str(source)
        self.n = n
        try:
            tree = ast.parse(self.source.replace("^", "**"), mode="eval")
        except SyntaxError as exc:
            raise ExpressionError(f"cannot parse expression {self.source!r}: {exc.msg}") from None
        self._state_vars: set[int] = set()
        self._check(tree.body)
        self._code = compile(tree, "<expression>", "eval")
        self.uses_state = bool(self._state_vars)
        self.uses_time = "t" in {
            node.id for node in ast.walk(tree) if isinstance(node, ast.Name)
        }

    def _check(self, node):
        if isinstance(node, ast.Constant):
            if isinstance(node.value, bool) or not isinstance(node.value, (int, float)):
                raise ExpressionError(f"unsupported literal {node.value!r} in {self.source!r}")
        elif isinstance(node, ast.BinOp):
            if not isinstance(node.op, _BINOPS):
                raise ExpressionError(f"unsupported operator in {self.source!r}")
            self._check(node.left)
            self._check(node.right)
        elif isinstance(node, ast.UnaryOp):
            if not isinstance(node.op, _UNARY):
                raise ExpressionError(f"unsupported operator in {self.source!r}")
            self._check(node.operand)
        elif isinstance(node, ast.Call):
            if not isinstance(node.func, ast.Name) or node.func.id not in _FUNCS:
                raise ExpressionError(f"unknown function in {self.source!r}")
            if len(node.args) != 1 or node.keywords:
                raise ExpressionError(f"{node.func.id} takes exactly one argument")
            self._check(node.args[0])
        elif isinstance(node, ast.Name):
            name = node.id
            if name == "t" or name in _CONSTS:
                return
            match = _STATE_VAR.match(name)
            if match is None:
                raise ExpressionError(f"unknown name {name!r} in {self.source!r}")
            idx = int(match.group(1))
            if idx > self.n:
                raise ExpressionError(f"{name} exceeds state dimension {self.n}")
            self._state_vars.add(idx)
        else:
            raise ExpressionError(f"unsupported syntax in {self.source!r}")

    def __call__(self, x=None, t: float = 0.0):
        env: dict = {"__builtins__": {}, "t": t}
        env.update(_FUNCS)
        env.update(_CONSTS)
        if self._state_vars:
            x = np.asarray(x, dtype=float)
            for idx in self._state_vars:
                env[f"x{idx}"] = x[..., idx - 1]
        value = eval(self._code, env)
        if x is not None:
            shape = np.shape(x)[:-1]
            return np.broadcast_to(np.asarray(value, dtype=float), shape).astype(float)
        return float(value)

    def __repr__(self):
        return f"Expression({self.source!r}, n={self.n})"
