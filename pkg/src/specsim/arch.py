"""Architectural interpreter: small-step reference semantics.

This is the ground truth the speculative simulator is checked against.  One
rule fires per step; a step either advances ⟨pc, R, M⟩ or halts.  Memory
accesses outside [0, |M|) fault; running off the end of the program is a
normal halt.  `timer` here writes the architectural step count — the
micro-simulator's timer counts micro-steps instead, which is exactly the
observable difference the side-channel toolkit exploits.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .isa import Instruction, Program, eval_binop, wrap

DEFAULT_MEM_SIZE = 64

HALT_NORMAL = "normal"
HALT_FAULT = "fault:oob-memory"
HALT_FUEL = "fuel"


@dataclass
class ArchState:
    pc: int
    regs: list[int]
    mem: list[int]

    @classmethod
    def initial(
        cls,
        program: Program,
        mem_size: int = DEFAULT_MEM_SIZE,
        regs: dict[int, int] | None = None,
        entry: int | None = None,
    ) -> "ArchState":
        mem = list(program.mem_image)
        if len(mem) > mem_size:
            raise ValueError("memory image larger than memory size")
        mem.extend([0] * (mem_size - len(mem)))
        r = [0] * 16
        for i, v in program.reg_inits.items():
            r[i] = wrap(v)
        if regs:
            for i, v in regs.items():
                r[i] = wrap(v)
        pc = program.entry if entry is None else entry
        return cls(pc=pc, regs=r, mem=mem)

    def copy(self) -> "ArchState":
        return ArchState(self.pc, list(self.regs), list(self.mem))


@dataclass
class ArchTrace:
    states: list[ArchState] = field(default_factory=list)
    halt: str | None = None
    steps: int = 0
    load_addrs: list[int] = field(default_factory=list)
    store_addrs: list[int] = field(default_factory=list)

    @property
    def final(self) -> ArchState:
        return self.states[-1]


def arch_step(
    program: Program,
    s: ArchState,
    steps_taken: int = 0,
    trace: ArchTrace | None = None,
) -> str | None:
    """Apply the unique applicable rule in place; return a halt reason or None."""
    if not 0 <= s.pc < len(program.instructions):
        return HALT_NORMAL
    ins = program.instructions[s.pc]
    kind = ins.kind
    if kind == "const":
        s.regs[ins.rd] = wrap(ins.imm)
        s.pc += 1
    elif kind == "load":
        addr = wrap(s.regs[ins.ra] + ins.k)
        if not 0 <= addr < len(s.mem):
            return HALT_FAULT
        if trace is not None:
            trace.load_addrs.append(addr)
        s.regs[ins.rd] = s.mem[addr]
        s.pc += 1
    elif kind == "store":
        addr = wrap(s.regs[ins.ra] + ins.k)
        if not 0 <= addr < len(s.mem):
            return HALT_FAULT
        if trace is not None:
            trace.store_addrs.append(addr)
        s.mem[addr] = s.regs[ins.rv]
        s.pc += 1
    elif kind == "binop":
        s.regs[ins.rd] = eval_binop(ins.op, s.regs[ins.ra], s.regs[ins.rb])
        s.pc += 1
    elif kind == "branch":
        s.pc += ins.d if s.regs[ins.rc] != 0 else 1
    elif kind == "jump":
        s.pc = s.regs[ins.rd]
    elif kind == "timer":
        s.regs[ins.rd] = wrap(steps_taken)
        s.pc += 1
    elif kind == "fence":
        s.pc += 1
    else:
        raise ValueError(f"unknown instruction kind {kind!r}")
    return None


def written_cells(ins: Instruction, pre: ArchState) -> tuple[int | None, int | None]:
    """(register index, memory address) the instruction will write, from `pre`."""
    if ins.kind in ("const", "load", "binop", "timer"):
        return ins.rd, None
    if ins.kind == "store":
        return None, wrap(pre.regs[ins.ra] + ins.k)
    return None, None


def arch_run(
    program: Program,
    s: ArchState,
    fuel: int = 100_000,
    snapshots: bool = False,
) -> ArchTrace:
    """Step until halt or fuel runs out; the trace always holds the final state."""
    trace = ArchTrace()
    if snapshots:
        trace.states.append(s.copy())
    steps = 0
    while True:
        halt = arch_step(program, s, steps, trace)
        if halt is not None:
            trace.halt = halt
            break
        steps += 1
        if snapshots:
            trace.states.append(s.copy())
        if steps >= fuel:
            trace.halt = HALT_FUEL
            break
    trace.steps = steps
    if not snapshots:
        trace.states.append(s.copy())
    return trace


def trace_to_text(trace: ArchTrace) -> str:
    """Line-oriented trace dump: step, pc, registers, memory deltas."""
    lines = []
    prev_mem: list[int] | None = None
    for i, st in enumerate(trace.states):
        regs = " ".join(str(v) for v in st.regs)
        if prev_mem is None:
            deltas = " ".join(f"{a}={v}" for a, v in enumerate(st.mem) if v != 0)
        else:
            deltas = " ".join(
                f"{a}={v}" for a, (u, v) in enumerate(zip(prev_mem, st.mem)) if u != v
            )
        lines.append(f"step {i} pc {st.pc} R {regs} M {deltas}".rstrip())
        prev_mem = st.mem
    lines.append(f"halt {trace.halt} steps {trace.steps}")
    return "\n".join(lines) + "\n"


def trace_to_json(trace: ArchTrace) -> str:
    records = [
        {"step": i, "pc": st.pc, "regs": list(st.regs), "mem": list(st.mem)}
        for i, st in enumerate(trace.states)
    ]
    return json.dumps(
        {"halt": trace.halt, "steps": trace.steps, "states": records},
        sort_keys=True,
    )
