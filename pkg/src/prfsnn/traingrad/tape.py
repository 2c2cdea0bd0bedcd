"""A small reverse-mode gradient tape over numpy arrays."""

from __future__ import annotations

from typing import Callable, Sequence

import numpy as np


class TimeSlice:
    """Gradient touching a single timestep of a larger operand.

    Accumulated in place so per-step graphs cost O(T), not O(T^2).
    """

    __slots__ = ("t", "value")

    def __init__(self, t: int, value: np.ndarray):
        self.t = t
        self.value = value


class Param:
    """Trainable array that outlives a single tape.

    ``group`` selects the optimizer parameter group (``"weight"`` or
    ``"neuron"``).
    """

    def __init__(self, value, group: str = "weight", name: str = ""):
        self.value = np.asarray(value)
        self.group = group
        self.name = name
        self.grad = np.zeros_like(self.value)

    def zero_grad(self):
        self.grad = np.zeros_like(self.value)

    def __repr__(self):
        return f"Param({self.name!r}, shape={self.value.shape}, group={self.group!r})"


class Var:
    __slots__ = ("value", "tape", "index")

    def __init__(self, value, tape: "Tape", index: int):
        self.value = value
        self.tape = tape
        self.index = index

    @property
    def shape(self):
        return self.value.shape

    @property
    def needs_grad(self) -> bool:
        return self.tape._needs[self.index]


class Tape:
    """Ordered record of primitive ops with the closures needed to replay them backward."""

    def __init__(self):
        self._vjps: list[Callable | None] = []
        self._parents: list[tuple[int, ...]] = []
        self._needs: list[bool] = []
        self._params: dict[int, Param] = {}
        self._shapes: list[tuple] = []

    def __len__(self):
        return len(self._vjps)

    def _push(self, value, parents, vjp, needs) -> Var:
        self._vjps.append(vjp)
        self._parents.append(parents)
        self._needs.append(needs)
        self._shapes.append(np.shape(value))
        return Var(value, self, len(self._vjps) - 1)

    def watch(self, param: Param) -> Var:
        var = self._push(param.value, (), None, True)
        self._params[var.index] = param
        return var

    def constant(self, value) -> Var:
        return self._push(np.asarray(value), (), None, False)

    def record(self, value, parents: Sequence[Var], vjp: Callable) -> Var:
        """Add an op node. ``vjp(g)`` returns one gradient (or None) per parent."""
        for p in parents:
            if p.tape is not self:
                raise ValueError("operand belongs to a different tape")
        needs = any(self._needs[p.index] for p in parents)
        return self._push(value, tuple(p.index for p in parents), vjp if needs else None, needs)

    def backward(self, out: Var, seed=None) -> dict[int, np.ndarray]:
        """Replay in reverse; adds into ``Param.grad`` and returns leaf gradients by index."""
        if out.tape is not self:
            raise ValueError("output belongs to a different tape")
        grads: list = [None] * len(self._vjps)
        grads[out.index] = np.ones_like(out.value) if seed is None else np.asarray(seed)
        if np.shape(grads[out.index]) != self._shapes[out.index]:
            raise ValueError(
                f"seed shape {np.shape(grads[out.index])} does not match output {self._shapes[out.index]}"
            )
        owned: set[int] = set()
        leaves = {}
        for i in range(out.index, -1, -1):
            g = grads[i]
            if g is None or not self._needs[i]:
                continue
            vjp = self._vjps[i]
            if vjp is None:
                leaves[i] = g
                if i in self._params:
                    self._params[i].grad = self._params[i].grad + g
                continue
            for j, pg in zip(self._parents[i], vjp(g)):
                if pg is None or not self._needs[j]:
                    continue
                if isinstance(pg, TimeSlice):
                    if j not in owned:
                        base = grads[j]
                        grads[j] = np.zeros(self._shapes[j], dtype=pg.value.dtype)
                        if base is not None:
                            grads[j] += base
                        owned.add(j)
                    grads[j][pg.t] += pg.value
                    continue
                if np.shape(pg) != self._shapes[j]:
                    raise ValueError(f"gradient shape {np.shape(pg)} does not match operand {self._shapes[j]}")
                if grads[j] is None:
                    grads[j] = pg
                elif j in owned:
                    grads[j] += pg
                else:
                    grads[j] = grads[j] + pg
                    owned.add(j)
            grads[i] = None
        return leaves


def backward(tape: Tape, loss: Var, loss_grad=None) -> dict[int, np.ndarray]:
    return tape.backward(loss, loss_grad)
