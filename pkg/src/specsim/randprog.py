"""Seeded random program generator for differential and property suites.

Programs are biased toward termination: branch displacements mostly point
forward, jump targets come from a small pool of register-loaded landing pcs,
and loops are rare.  `timer` is never emitted — its whole point is to read
micro-state, so interpreter-vs-simulator equivalence is only defined for
timer-free programs.  Registers r12..r14 stay untouched so generated
programs remain in-contract for the masking passes.
"""

from __future__ import annotations

import random

from .isa import OPCODES, Instruction, Program, binop, branch, const, fence, jump, load, store

GEN_REGISTERS = tuple(range(0, 12))  # leave r12..r15 free for passes / links


def random_program(
    rng: random.Random,
    min_len: int = 6,
    max_len: int = 24,
    mem_size: int = 64,
    allow_fence: bool = True,
) -> Program:
    n = rng.randint(min_len, max_len)
    instrs: list[Instruction] = []
    for idx in range(n):
        kind = rng.choices(
            ("const", "binop", "load", "store", "branch", "jump", "fence"),
            weights=(22, 26, 18, 12, 14, 4, 4 if allow_fence else 0),
        )[0]
        rd = rng.choice(GEN_REGISTERS)
        ra = rng.choice(GEN_REGISTERS)
        rb = rng.choice(GEN_REGISTERS)
        if kind == "const":
            # mostly small values usable as addresses or jump targets
            if rng.random() < 0.7:
                imm = rng.randrange(0, mem_size)
            else:
                imm = rng.randrange(-(1 << 12), 1 << 12)
            instrs.append(const(rd, imm))
        elif kind == "binop":
            instrs.append(binop(rng.choice(OPCODES), rd, ra, rb))
        elif kind == "load":
            instrs.append(load(rd, ra, rng.randrange(0, mem_size // 2)))
        elif kind == "store":
            instrs.append(store(ra, rng.randrange(0, mem_size // 2), rb))
        elif kind == "branch":
            if rng.random() < 0.85:
                d = rng.randint(1, max(1, n - idx))  # forward, possibly off the end
            else:
                d = -rng.randint(1, min(4, idx + 1))
            instrs.append(branch(ra, d))
        elif kind == "jump":
            instrs.append(jump(ra))
        else:
            instrs.append(fence())
    mem = tuple(rng.randrange(0, mem_size) for _ in range(mem_size // 2))
    regs = {r: rng.randrange(0, mem_size) for r in rng.sample(GEN_REGISTERS, 4)}
    return Program(
        instructions=tuple(instrs),
        symbols={},
        mem_image=mem,
        reg_inits=regs,
        entry=0,
    )


def random_inputs(rng: random.Random, mem_size: int = 64) -> dict[int, int]:
    return {r: rng.randrange(0, mem_size) for r in rng.sample(GEN_REGISTERS, 3)}
