"""
Vector fields written as expression strings in x1 ... xn, e.g.

    fields = [["1", "0", "-x2**2"], ["0", "1", "x1**2"]]

Expressions are parsed with sympy against a fixed vocabulary (arithmetic,
powers, sin, cos, tan, exp, log, sqrt, pi) and compiled with lambdify;
jacobians come from the same expressions.
"""

import numpy as np
import sympy as sp
from sympy.parsing.sympy_parser import parse_expr, standard_transformations

from .exceptions import ScenarioError
from .system import VectorFieldSet

FUNCTIONS = {
    'sin': sp.sin,
    'cos': sp.cos,
    'tan': sp.tan,
    'exp': sp.exp,
    'log': sp.log,
    'sqrt': sp.sqrt,
    'pi': sp.pi,
}

ALLOWED_CALLS = (sp.sin, sp.cos, sp.tan, sp.exp, sp.log)

_GLOBALS = {
    'Integer': sp.Integer,
    'Float': sp.Float,
    'Rational': sp.Rational,
    'Symbol': sp.Symbol,
}


def state_symbols(n):
    return sp.symbols('x1:%d' % (n + 1), real=True)


def parse_component(text, symbols):
    if not isinstance(text, (str, int, float)):
        raise ScenarioError('field component %r is not an expression' % (text,))
    source = str(text)
    if '__' in source or any(c in source for c in ';[]{}'):
        raise ScenarioError('field component %r contains forbidden characters' % source)
    local = dict(FUNCTIONS)
    local.update({str(s): s for s in symbols})
    try:
        expr = parse_expr(source, local_dict=local, global_dict=dict(_GLOBALS),
                          transformations=standard_transformations, evaluate=True)
    except Exception as exc:
        raise ScenarioError('cannot parse field component %r: %s' % (source, exc))
    if not isinstance(expr, sp.Expr):
        raise ScenarioError('field component %r is not a scalar expression' % source)
    unknown = expr.free_symbols - set(symbols)
    if unknown:
        raise ScenarioError('field component %r uses unknown names %s (state is x1..x%d)'
                            % (source, sorted(str(s) for s in unknown), len(symbols)),
                            code=ScenarioError.DIMENSION)
    for node in sp.preorder_traversal(expr):
        if isinstance(node, sp.Function) and node.func not in ALLOWED_CALLS:
            raise ScenarioError('field component %r calls an unsupported function %s' % (source, node.func))
    return expr


def _compile_vector(exprs, symbols):
    fn = sp.lambdify([symbols], list(exprs), modules='numpy')

    def evaluate(x):
        return np.array([float(v) for v in fn(np.asarray(x, dtype=float))])
    return evaluate


def _compile_matrix(matrix, symbols):
    n = matrix.shape[0]
    fn = sp.lambdify([symbols], matrix.tolist(), modules='numpy')

    def evaluate(x):
        rows = fn(np.asarray(x, dtype=float))
        return np.array([[float(v) for v in row] for row in rows]).reshape(n, n)
    return evaluate


def expression_system(n, fields, name='custom'):
    """VectorFieldSet from m lists of n expression strings, with analytic jacobians."""
    symbols = state_symbols(n)
    if not isinstance(fields, (list, tuple)) or not fields:
        raise ScenarioError('fields must be a non-empty list of vector fields')
    compiled, jacobians = [], []
    for i, components in enumerate(fields, start=1):
        if not isinstance(components, (list, tuple)) or len(components) != n:
            raise ScenarioError('field f%d must list %d components' % (i, n), code=ScenarioError.DIMENSION)
        exprs = sp.Matrix([parse_component(c, symbols) for c in components])
        compiled.append(_compile_vector(exprs, symbols))
        jacobians.append(_compile_matrix(exprs.jacobian(symbols), symbols))
    return VectorFieldSet(n=n, m=len(fields), fields=tuple(compiled), jacobians=tuple(jacobians), name=name)
