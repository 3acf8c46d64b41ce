"""Differential check: committed micro-state sequence vs the interpreter.

The micro-simulator's committed architectural states must match the reference
interpreter step for step, for any feature combination.  The check runs both
in lockstep: after every commit it compares the program counter and the cell
the reference step wrote, and at the end it compares the complete final
states and halt reasons.
"""

from __future__ import annotations

from dataclasses import dataclass

from .arch import HALT_FUEL, ArchState, arch_step, written_cells
from .isa import Program
from .uarch import MicroSim, MicroState, SimConfig, agreement_check


@dataclass
class EquivResult:
    ok: bool
    detail: str = ""
    commits: int = 0
    ticks: int = 0
    arch_steps: int = 0
    agreement_violation: object = None


class _LockstepMismatch(Exception):
    pass


def check_equivalence(
    program: Program,
    cfg: SimConfig | None = None,
    mem_size: int = 64,
    regs: dict[int, int] | None = None,
    entry: int | None = None,
    fuel: int = 10_000,
    check_agreement_every: int = 0,
) -> EquivResult:
    """Run micro and arch side by side; any divergence is reported, not raised.

    `timer` writes architectural step counts in the interpreter but tick
    counts in the micro-simulator — that divergence is the modelled
    side-channel, so programs under this check must not use `timer`.
    """
    cfg = cfg or SimConfig()
    for ins in program.instructions:
        if ins.kind == "timer":
            raise ValueError("equivalence check is only defined for timer-free programs")

    ref = ArchState.initial(program, mem_size, regs, entry)
    ref_halt: list = [None]
    steps = [0]

    def on_commit(sim: MicroSim, entry_) -> None:
        if ref_halt[0] is not None:
            raise _LockstepMismatch(
                f"micro committed past architectural halt ({ref_halt[0]})"
            )
        ins = program.instructions[ref.pc]
        wreg, wmem = written_cells(ins, ref)
        halt = arch_step(program, ref, steps[0])
        if halt is not None:
            ref_halt[0] = halt
            raise _LockstepMismatch(
                f"interpreter halted ({halt}) where micro committed pc {entry_.pc}"
            )
        steps[0] += 1
        sig = sim.st.sigma
        if sig.pc != ref.pc:
            raise _LockstepMismatch(f"pc {sig.pc} != {ref.pc} after commit {steps[0]}")
        if wreg is not None and sig.regs[wreg] != ref.regs[wreg]:
            raise _LockstepMismatch(
                f"r{wreg}: {sig.regs[wreg]} != {ref.regs[wreg]} after commit {steps[0]}"
            )
        if wmem is not None and 0 <= wmem < len(ref.mem) and sig.mem[wmem] != ref.mem[wmem]:
            raise _LockstepMismatch(
                f"M[{wmem}]: {sig.mem[wmem]} != {ref.mem[wmem]} after commit {steps[0]}"
            )

    state = MicroState.initial(program, cfg, mem_size, regs, entry)
    sim = MicroSim(program, cfg, state, commit_hook=on_commit)
    violation = None
    try:
        if not state.rob and not 0 <= state.sigma.pc < len(program.instructions):
            sim.halted = "normal"
        while sim.halted is None:
            if state.ticks >= fuel:
                sim.halted = HALT_FUEL
                break
            sim.step()
            if check_agreement_every and state.ticks % check_agreement_every == 0:
                violation = agreement_check(program, state)
                if violation is not None:
                    return EquivResult(
                        False,
                        f"agreement violation at tick {state.ticks}: {violation}",
                        sim.trace.commits,
                        state.ticks,
                        steps[0],
                        agreement_violation=violation,
                    )
    except _LockstepMismatch as e:
        return EquivResult(False, str(e), sim.trace.commits, state.ticks, steps[0])

    if sim.halted != HALT_FUEL:
        # drain the reference to its own halt and compare final states
        while ref_halt[0] is None:
            halt = arch_step(program, ref, steps[0])
            if halt is not None:
                ref_halt[0] = halt
            else:
                steps[0] += 1
                if steps[0] > fuel:
                    ref_halt[0] = HALT_FUEL
        sig = state.sigma
        if ref_halt[0] != sim.halted:
            return EquivResult(
                False,
                f"halt mismatch: micro {sim.halted}, arch {ref_halt[0]}",
                sim.trace.commits,
                state.ticks,
                steps[0],
            )
        if sig.pc != ref.pc or sig.regs != ref.regs or sig.mem != ref.mem:
            return EquivResult(
                False, "final state mismatch", sim.trace.commits, state.ticks, steps[0]
            )
        if sim.trace.commits != steps[0]:
            return EquivResult(
                False,
                f"commit count {sim.trace.commits} != arch steps {steps[0]}",
                sim.trace.commits,
                state.ticks,
                steps[0],
            )
    return EquivResult(True, "", sim.trace.commits, state.ticks, steps[0])


def all_toggle_configs(base: SimConfig | None = None) -> list[SimConfig]:
    """The 16 combinations of the four speculation feature toggles."""
    base = base or SimConfig()
    out = []
    for i in range(16):
        out.append(
            base.replace(
                cache=bool(i & 1),
                branch_spec=bool(i & 2),
                jump_spec=bool(i & 4),
                disambiguation=bool(i & 8),
            )
        )
    return out
