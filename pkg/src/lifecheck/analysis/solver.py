"""Worklist fixpoint solver over a function CFG."""

from __future__ import annotations

import random
from collections import deque
from dataclasses import dataclass

from ..normalize.instr import Cfg
from .pset import BOTTOM, MAX_LEVEL, Pmap, join
from .transfer import Context, transfer

ORDERS = ("fifo", "lifo", "random")


class AnalysisError(RuntimeError):
    pass


@dataclass
class DataflowResult:
    cfg: Cfg
    inputs: list[Pmap]
    outputs: list[Pmap]
    pops: int = 0

    def input_at(self, node: int) -> Pmap:
        return self.inputs[node]


def _budget(cfg: Cfg, seed: Pmap) -> int:
    names = set(cfg.kinds) | set(seed.psets)
    for ps in seed.psets.values():
        names |= {e.name for e in ps if e.is_var}
    v = len(names) + 1
    entries = v * (MAX_LEVEL + 1) + 3
    n = len(cfg.nodes)
    # each node's output can only grow: psets, domain and recorded causes
    height = v * (entries + 1) + v * n
    return n * (height + 1) + 10 * n


def solve(cfg: Cfg, seed: Pmap, ctx: Context, order: str = "fifo", rng_seed: int = 0) -> DataflowResult:
    """Least fixpoint: input(n) = join of predecessor outputs, output(n) = transfer(input(n))."""
    if order not in ORDERS:
        raise ValueError(f"unknown worklist order {order!r}")
    n = len(cfg.nodes)
    preds = cfg.preds()
    inputs = [BOTTOM] * n
    outputs = [BOTTOM] * n
    rng = random.Random(rng_seed)
    work = deque(range(n)) if order != "lifo" else deque(reversed(range(n)))
    queued = [True] * n
    # a node is only evaluated once some path from the entry has reached it;
    # transferring an unreached node's empty input would read missing operands
    reached = [False] * n
    reached[cfg.entry] = True
    done = [False] * n
    budget = _budget(cfg, seed)
    pops = 0
    while work:
        if order == "fifo":
            node = work.popleft()
        elif order == "lifo":
            node = work.pop()
        else:
            k = rng.randrange(len(work))
            work[k], work[-1] = work[-1], work[k]
            node = work.pop()
        queued[node] = False
        if not reached[node]:
            continue
        pops += 1
        if pops > budget:
            raise AnalysisError(f"{cfg.function}: no fixpoint after {budget} steps")
        inp = seed if node == cfg.entry else BOTTOM
        for p in preds[node]:
            inp = join(inp, outputs[p])
        inputs[node] = inp
        out = transfer(cfg.nodes[node], inp, ctx)
        if out != outputs[node] or not done[node]:
            done[node] = True
            outputs[node] = out
            for s in cfg.succs[node]:
                reached[s] = True
                if not queued[s]:
                    queued[s] = True
                    work.append(s)
    return DataflowResult(cfg, inputs, outputs, pops)
