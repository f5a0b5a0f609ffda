"""Differentiable primitives.

Every primitive accepts float arrays, tape variables (:class:`Var`) and
dual numbers (:class:`Dual`) and dispatches on the most structured
argument: dual rules first (their payloads may themselves be tape
variables), then tape recording, then a plain counted kernel.

Reverse rules have the signature ``vjp(g, out, args, needs)`` and are
written with these same primitives, so a sweep run with
``create_graph=True`` is itself differentiable.
"""

from __future__ import annotations

import numpy as np

from . import kernels as K


def _classes():
    from .dual import Dual
    from .tape import Var

    return Dual, Var


def shape(x):
    Dual, Var = _classes()
    if isinstance(x, (Var, Dual)):
        return x.shape
    return np.shape(x)


def ndim(x):
    return len(shape(x))


def value(x):
    """Strip dual and tape structure down to a float array."""
    Dual, Var = _classes()
    while isinstance(x, (Dual, Var)):
        x = x.value
    return x


def _tape_of(args):
    _, Var = _classes()
    tape = None
    for a in args:
        if isinstance(a, Var):
            if tape is None:
                tape = a.tape
            elif a.tape is not tape:
                raise ValueError("operands live on different tapes")
    return tape


def _has_dual(args):
    Dual, _ = _classes()
    return any(isinstance(a, Dual) for a in args)


def _raw(a):
    _, Var = _classes()
    return a.value if isinstance(a, Var) else a


def _apply(kernel, args, vjp, **kw):
    """Run ``kernel`` on raw values and record it if any input is taped."""
    tape = _tape_of(args)
    out = kernel(*(_raw(a) for a in args), **kw)
    if tape is None:
        return out
    return tape.record(out, args, vjp)


def record_custom(out_value, args, vjp):
    """Record an externally computed value with a hand-written reverse rule."""
    tape = _tape_of(args)
    if tape is None:
        return out_value
    return tape.record(out_value, args, vjp)


# -- shape plumbing (free) ---------------------------------------------------


def unbroadcast(g, target):
    """Sum ``g`` down to shape ``target`` (adjoint of broadcasting)."""
    target = tuple(target)
    gshape = shape(g)
    if gshape == target:
        return g
    extra = len(gshape) - len(target)
    axes = tuple(range(extra)) + tuple(
        i + extra for i, s in enumerate(target) if s == 1 and gshape[i + extra] != 1
    )
    if axes:
        g = sum(g, axis=axes)
    return reshape(g, target)


def reshape(x, new_shape):
    Dual, _ = _classes()
    if isinstance(x, Dual):
        v = reshape(x.value, new_shape)
        return Dual(v, reshape(x.tangent, (x.width,) + shape(v)))
    old = shape(x)
    return _apply(
        lambda a: np.reshape(a, new_shape),
        (x,),
        lambda g, out, args, needs: (reshape(g, old),),
    )


def transpose(x, axes=None):
    Dual, _ = _classes()
    n = ndim(x)
    axes = tuple(reversed(range(n))) if axes is None else tuple(a % n for a in axes)
    if isinstance(x, Dual):
        return Dual(transpose(x.value, axes), transpose(x.tangent, (0,) + tuple(a + 1 for a in axes)))
    inverse = tuple(np.argsort(axes))
    return _apply(
        lambda a: np.transpose(a, axes),
        (x,),
        lambda g, out, args, needs: (transpose(g, inverse),),
    )


def take(x, i, axis=0):
    """``x[..., i, ...]`` at position ``i`` of ``axis`` (the axis is dropped)."""
    Dual, _ = _classes()
    if isinstance(x, Dual):
        return Dual(take(x.value, i, axis), take(x.tangent, i, axis + 1))
    n = shape(x)[axis]
    return _apply(lambda a: np.take(a, i, axis=axis), (x,),
                  lambda g, out, args, needs: (embed(g, i, n, axis),))


def embed(x, i, n, axis=0):
    """Insert a length-``n`` axis at ``axis``, zero except ``x`` at slot ``i``."""
    Dual, _ = _classes()
    if isinstance(x, Dual):
        return Dual(embed(x.value, i, n, axis), embed(x.tangent, i, n, axis + 1))

    def kernel(a):
        a = np.asarray(a)
        out = np.zeros(a.shape[:axis] + (n,) + a.shape[axis:])
        out[(slice(None),) * axis + (i,)] = a
        return out

    return _apply(kernel, (x,), lambda g, out, args, needs: (take(g, i, axis),))


def swap_last(x):
    n = ndim(x)
    return transpose(x, tuple(range(n - 2)) + (n - 1, n - 2))


def broadcast_to(x, new_shape):
    Dual, _ = _classes()
    new_shape = tuple(new_shape)
    if isinstance(x, Dual):
        t = _lift(x.tangent, len(new_shape))
        return Dual(broadcast_to(x.value, new_shape), broadcast_to(t, (x.width,) + new_shape))
    old = shape(x)
    if old == new_shape:
        return x
    return _apply(
        lambda a: np.broadcast_to(a, new_shape),
        (x,),
        lambda g, out, args, needs: (unbroadcast(g, old),),
    )


def _lift(tangent, rank):
    """Insert unit axes after the seed axis so the tangent has ``rank + 1`` axes."""
    tshape = shape(tangent)
    missing = rank + 1 - len(tshape)
    if missing <= 0:
        return tangent
    return reshape(tangent, (tshape[0],) + (1,) * missing + tshape[1:])


# -- arithmetic --------------------------------------------------------------


def _add_vjp(g, out, args, needs):
    a, b = args
    return (
        unbroadcast(g, shape(a)) if needs[0] else None,
        unbroadcast(g, shape(b)) if needs[1] else None,
    )


def _sub_vjp(g, out, args, needs):
    a, b = args
    return (
        unbroadcast(g, shape(a)) if needs[0] else None,
        unbroadcast(neg(g), shape(b)) if needs[1] else None,
    )


def _mul_vjp(g, out, args, needs):
    a, b = args
    return (
        unbroadcast(mul(g, b), shape(a)) if needs[0] else None,
        unbroadcast(mul(g, a), shape(b)) if needs[1] else None,
    )


def _div_vjp(g, out, args, needs):
    a, b = args
    ga = div(g, b) if (needs[0] or needs[1]) else None
    return (
        unbroadcast(ga, shape(a)) if needs[0] else None,
        unbroadcast(neg(mul(ga, out)), shape(b)) if needs[1] else None,
    )


def _neg_vjp(g, out, args, needs):
    return (neg(g),)


def _dual_sum_tangents(ta, tb, out_shape, width):
    if ta is None and tb is None:
        return None
    rank = len(out_shape)
    full = (width,) + tuple(out_shape)
    if ta is None:
        return broadcast_to(_lift(tb, rank), full)
    if tb is None:
        return broadcast_to(_lift(ta, rank), full)
    return broadcast_to(add(_lift(ta, rank), _lift(tb, rank)), full)


def _parts(x):
    Dual, _ = _classes()
    if isinstance(x, Dual):
        return x.value, x.tangent, x.width
    return x, None, None


def add(a, b):
    if _has_dual((a, b)):
        Dual, _ = _classes()
        av, at, wa = _parts(a)
        bv, bt, wb = _parts(b)
        v = add(av, bv)
        return Dual(v, _dual_sum_tangents(at, bt, shape(v), wa or wb))
    return _apply(K.add, (a, b), _add_vjp)


def sub(a, b):
    if _has_dual((a, b)):
        Dual, _ = _classes()
        av, at, wa = _parts(a)
        bv, bt, wb = _parts(b)
        v = sub(av, bv)
        if bt is not None:
            bt = neg(bt)
        return Dual(v, _dual_sum_tangents(at, bt, shape(v), wa or wb))
    return _apply(K.sub, (a, b), _sub_vjp)


def neg(a):
    Dual, _ = _classes()
    if isinstance(a, Dual):
        return Dual(neg(a.value), neg(a.tangent))
    return _apply(K.neg, (a,), _neg_vjp)


def mul(a, b):
    if _has_dual((a, b)):
        Dual, _ = _classes()
        av, at, wa = _parts(a)
        bv, bt, wb = _parts(b)
        v = mul(av, bv)
        rank = len(shape(v))
        terms = []
        if at is not None:
            terms.append(mul(_lift(at, rank), bv))
        if bt is not None:
            terms.append(mul(av, _lift(bt, rank)))
        t = terms[0] if len(terms) == 1 else add(terms[0], terms[1])
        return Dual(v, broadcast_to(t, ((wa or wb),) + shape(v)))
    return _apply(K.mul, (a, b), _mul_vjp)


def div(a, b):
    if _has_dual((a, b)):
        Dual, _ = _classes()
        av, at, wa = _parts(a)
        bv, bt, wb = _parts(b)
        v = div(av, bv)
        rank = len(shape(v))
        num = _lift(at, rank) if at is not None else None
        if bt is not None:
            cross = mul(v, _lift(bt, rank))
            num = neg(cross) if num is None else sub(num, cross)
        t = div(num, bv)
        return Dual(v, broadcast_to(t, ((wa or wb),) + shape(v)))
    return _apply(K.div, (a, b), _div_vjp)


def square(a):
    return mul(a, a)


def _tanh_vjp(g, out, args, needs):
    return (mul(g, sub(1.0, mul(out, out))),)


def tanh(a):
    Dual, _ = _classes()
    if isinstance(a, Dual):
        v = tanh(a.value)
        slope = sub(1.0, mul(v, v))
        return Dual(v, mul(slope, a.tangent))
    return _apply(K.tanh, (a,), _tanh_vjp)


def _sum_vjp_factory(in_shape, axis, keepdims):
    def vjp(g, out, args, needs):
        if axis is not None and not keepdims:
            kept = list(in_shape)
            for ax in axis:
                kept[ax] = 1
            g = reshape(g, tuple(kept))
        elif axis is None and not keepdims:
            g = reshape(g, (1,) * len(in_shape))
        return (broadcast_to(g, in_shape),)

    return vjp


def sum(a, axis=None, keepdims=False):  # noqa: A001 - mirrors numpy
    Dual, _ = _classes()
    n = ndim(a)
    if axis is not None:
        axis = tuple(sorted(ax % n for ax in np.atleast_1d(axis)))
    if isinstance(a, Dual):
        v = sum(a.value, axis=axis, keepdims=keepdims)
        taxis = tuple(range(1, n + 1)) if axis is None else tuple(ax + 1 for ax in axis)
        return Dual(v, sum(a.tangent, axis=taxis, keepdims=keepdims))
    return _apply(
        lambda x: K.sum(x, axis=axis, keepdims=keepdims),
        (a,),
        _sum_vjp_factory(shape(a), axis, keepdims),
    )


def _matmul_vjp(g, out, args, needs):
    a, b = args
    return (
        unbroadcast(matmul(g, swap_last(b)), shape(a)) if needs[0] else None,
        unbroadcast(matmul(swap_last(a), g), shape(b)) if needs[1] else None,
    )


def _matmul_nd(a, b):
    if _has_dual((a, b)):
        Dual, _ = _classes()
        av, at, wa = _parts(a)
        bv, bt, wb = _parts(b)
        v = _matmul_nd(av, bv)
        rank = len(shape(v))
        terms = []
        if at is not None:
            terms.append(_matmul_nd(_lift(at, ndim(av)), bv))
        if bt is not None:
            terms.append(_matmul_nd(av, _lift(bt, ndim(bv))))
        t = terms[0] if len(terms) == 1 else add(_lift(terms[0], rank), _lift(terms[1], rank))
        return Dual(v, broadcast_to(_lift(t, rank), ((wa or wb),) + shape(v)))
    return _apply(K.matmul, (a, b), _matmul_vjp)


def matmul(a, b):
    """numpy ``matmul`` semantics, including 1-D operands."""
    sa, sb = shape(a), shape(b)
    a_vec, b_vec = len(sa) == 1, len(sb) == 1
    if a_vec:
        a = reshape(a, (1, sa[0]))
    if b_vec:
        b = reshape(b, (sb[0], 1))
    out = _matmul_nd(a, b)
    if a_vec or b_vec:
        s = list(shape(out))
        if b_vec:
            s.pop(-1)
        if a_vec:
            s.pop(-1 if b_vec else -2)
        out = reshape(out, tuple(s))
    return out


def sin(a):
    Dual, _ = _classes()
    if isinstance(a, Dual):
        return Dual(sin(a.value), mul(cos(a.value), a.tangent))
    return _apply(K.sin, (a,), lambda g, out, args, needs: (mul(g, cos(args[0])),))


def cos(a):
    Dual, _ = _classes()
    if isinstance(a, Dual):
        return Dual(cos(a.value), neg(mul(sin(a.value), a.tangent)))
    return _apply(K.cos, (a,), lambda g, out, args, needs: (neg(mul(g, sin(args[0]))),))
