"""Reverse-mode evaluation tape."""

from __future__ import annotations

import weakref

import numpy as np

from . import ops


class TapeError(RuntimeError):
    pass


class Var:
    """A value recorded on a :class:`Tape`.

    ``parents`` holds every input of the producing operation (tape
    variables and plain constants alike); ``vjp`` maps an output cotangent
    to input cotangents.
    """

    __slots__ = ("tape", "index", "value", "parents", "vjp", "__weakref__")
    __array_priority__ = 1000  # ndarray <op> Var defers to Var's reflected method

    def __init__(self, tape, index, value, parents=(), vjp=None):
        self.tape = tape
        self.index = index
        self.value = value
        self.parents = parents
        self.vjp = vjp

    @property
    def shape(self):
        return np.shape(self.value)

    @property
    def ndim(self):
        return np.ndim(self.value)

    @property
    def size(self):
        return np.size(self.value)

    @property
    def T(self):
        return ops.transpose(self)

    def __repr__(self):
        return f"Var(#{self.index}, shape={self.shape})"

    def __add__(self, other):
        return ops.add(self, other)

    def __radd__(self, other):
        return ops.add(other, self)

    def __sub__(self, other):
        return ops.sub(self, other)

    def __rsub__(self, other):
        return ops.sub(other, self)

    def __mul__(self, other):
        return ops.mul(self, other)

    def __rmul__(self, other):
        return ops.mul(other, self)

    def __truediv__(self, other):
        return ops.div(self, other)

    def __rtruediv__(self, other):
        return ops.div(other, self)

    def __neg__(self):
        return ops.neg(self)

    def __matmul__(self, other):
        return ops.matmul(self, other)

    def __rmatmul__(self, other):
        return ops.matmul(other, self)


class Tape:
    """Append-only record of evaluated operations.

    A fresh tape is built for every evaluation; node indices increase in
    evaluation order, so a reverse sweep simply walks the indices backwards.
    The tape only holds weak references: a variable keeps its inputs alive,
    so everything upstream of a live root survives, and dropping the root
    frees the graph without waiting for the cycle collector.
    """

    def __init__(self):
        self._refs: list = []

    def __len__(self):
        return len(self._refs)

    def node(self, index):
        """The variable at ``index``, or ``None`` once it has been released."""
        return self._refs[index]()

    def _append(self, var):
        self._refs.append(weakref.ref(var))
        return var

    def variable(self, value) -> Var:
        """Register ``value`` as a leaf."""
        return self._append(Var(self, len(self._refs), np.asarray(value, dtype=np.float64)))

    def record(self, value, parents, vjp) -> Var:
        return self._append(Var(self, len(self._refs), value, tuple(parents), vjp))


def backward(root: Var, leaves, seed=None, create_graph: bool = False) -> dict:
    """One reverse sweep from ``root``; returns ``{leaf: d root / d leaf}``.

    ``seed`` is the cotangent deposited at the root and defaults to 1 for a
    scalar root.  Only operations lying on a path between the leaves and the
    root are swept.  With ``create_graph`` the sweep itself is recorded on
    the tape, so the returned derivatives can be differentiated again.
    """
    if not isinstance(root, Var):
        raise TapeError("root is not a tape variable")
    tape = root.tape
    if root.index >= len(tape) or tape.node(root.index) is not root:
        raise TapeError("root is not on its tape")
    if isinstance(leaves, Var):
        leaves = [leaves]
    leaves = list(leaves)
    for leaf in leaves:
        if not isinstance(leaf, Var) or leaf.tape is not tape:
            raise TapeError("leaf is not on the root's tape")

    if seed is None:
        if root.size != 1:
            raise TapeError("non-scalar root needs an explicit seed")
        seed = np.ones(root.shape)
    else:
        seed = np.broadcast_to(np.asarray(seed, dtype=np.float64), root.shape)

    stop = root.index
    nodes = [tape.node(i) for i in range(stop + 1)]
    wanted = {leaf.index for leaf in leaves}
    on_path = bytearray(stop + 1)
    for i in range(stop + 1):
        node = nodes[i]
        if node is None:
            continue
        if i in wanted:
            on_path[i] = 1
            continue
        for p in node.parents:
            if isinstance(p, Var) and p.tape is tape and on_path[p.index]:
                on_path[i] = 1
                break

    found = {}
    grads = {stop: seed} if on_path[stop] else {}
    for i in range(stop, -1, -1):
        g = grads.pop(i, None)
        if g is None:
            continue
        if i in wanted:
            found[i] = g
        node = nodes[i]
        if not node.parents:
            continue
        needs = tuple(isinstance(p, Var) and bool(on_path[p.index]) for p in node.parents)
        if not any(needs):
            continue
        if create_graph:
            args, out = node.parents, node
        else:
            args = tuple(p.value if isinstance(p, Var) else p for p in node.parents)
            out = node.value
        for p, need, gp in zip(node.parents, needs, node.vjp(g, out, args, needs)):
            if not need or gp is None:
                continue
            prev = grads.get(p.index)
            grads[p.index] = gp if prev is None else ops.add(prev, gp)

    return {
        leaf: found.get(leaf.index, np.zeros(leaf.shape)) for leaf in leaves
    }


def grad(root: Var, leaves, seed=None, create_graph: bool = False) -> list:
    """Like :func:`backward` but returns derivatives in ``leaves`` order."""
    single = isinstance(leaves, Var)
    leaves = [leaves] if single else list(leaves)
    result = backward(root, leaves, seed=seed, create_graph=create_graph)
    out = [result[leaf] for leaf in leaves]
    return out[0] if single else out
