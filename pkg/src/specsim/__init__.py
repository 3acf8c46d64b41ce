"""specsim: a deterministic speculative-execution simulator and side-channel toolkit."""

from .arch import ArchState, ArchTrace, arch_run, arch_step
from .isa import AsmError, Instruction, Program, SymbolicProgram, assemble, format_program, resolve
from .uarch import MicroSim, MicroState, MicroTrace, SimConfig, agreement_check, micro_run, misspeculation_depth

__all__ = [
    "ArchState",
    "ArchTrace",
    "AsmError",
    "Instruction",
    "MicroSim",
    "MicroState",
    "MicroTrace",
    "Program",
    "SimConfig",
    "SymbolicProgram",
    "agreement_check",
    "arch_run",
    "arch_step",
    "assemble",
    "format_program",
    "micro_run",
    "misspeculation_depth",
    "resolve",
]
