"""Toy instruction set: machine words, instructions, symbolic assembly, resolver.

Instructions operate on 16 registers and a flat word-addressed memory.  A
symbolic program carries label references that the resolver turns into
absolute instruction indices (jump/const targets) or relative displacements
(branches).  Mitigation passes splice instructions into symbolic programs and
re-resolve, so resolution is kept separate from parsing.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field, replace

REGISTER_COUNT = 16
WORD_BITS = 64
WORD_MASK = (1 << WORD_BITS) - 1
WORD_SIGN = 1 << (WORD_BITS - 1)

OPCODES = ("eq", "ge", "add", "sub", "mul", "div", "shl", "shr", "and", "or", "xor")

KINDS = ("const", "load", "store", "binop", "branch", "jump", "timer", "fence")


def wrap(x: int) -> int:
    """Clamp an integer to a signed 64-bit two's-complement word."""
    x &= WORD_MASK
    return x - (1 << WORD_BITS) if x & WORD_SIGN else x


def to_unsigned(x: int) -> int:
    return x & WORD_MASK


def eval_binop(op: str, a: int, b: int) -> int:
    """Total binary operations on signed words (division by zero yields 0)."""
    if op == "add":
        return wrap(a + b)
    if op == "sub":
        return wrap(a - b)
    if op == "mul":
        return wrap(a * b)
    if op == "div":
        if b == 0:
            return 0
        q = abs(a) // abs(b)
        return wrap(-q if (a < 0) != (b < 0) else q)
    if op == "eq":
        return 1 if a == b else 0
    if op == "ge":
        return 1 if a >= b else 0
    if op == "shl":
        return wrap(to_unsigned(a) << (b % WORD_BITS))
    if op == "shr":
        return wrap(to_unsigned(a) >> (b % WORD_BITS))
    if op == "and":
        return wrap(to_unsigned(a) & to_unsigned(b))
    if op == "or":
        return wrap(to_unsigned(a) | to_unsigned(b))
    if op == "xor":
        return wrap(to_unsigned(a) ^ to_unsigned(b))
    raise ValueError(f"unknown opcode {op!r}")


class AsmError(Exception):
    """Assembly or resolution failure, carrying a source location."""

    def __init__(self, message: str, lineno: int | None = None):
        self.lineno = lineno
        self.message = message
        where = f"line {lineno}: " if lineno is not None else ""
        super().__init__(f"{where}{message}")


@dataclass(frozen=True)
class LabelExpr:
    """A label reference plus a constant offset, e.g. ``@array - 1``."""

    name: str
    offset: int = 0

    def __str__(self) -> str:
        if self.offset == 0:
            return f"@{self.name}"
        sign = "+" if self.offset > 0 else "-"
        return f"@{self.name}{sign}{abs(self.offset)}"


@dataclass(frozen=True)
class Instruction:
    """One instruction; unused operand fields stay None.

    Immediate-like fields (imm, k, d) hold ints in a resolved program and may
    hold LabelExpr in a symbolic one.
    """

    kind: str
    rd: int | None = None
    ra: int | None = None
    rb: int | None = None
    rv: int | None = None
    rc: int | None = None
    op: str | None = None
    imm: object = None
    k: object = None
    d: object = None

    def writes_register(self) -> int | None:
        """Destination register, for the kinds that produce one."""
        if self.kind in ("const", "load", "binop", "timer"):
            return self.rd
        return None

    def registers_read(self) -> tuple[int, ...]:
        if self.kind == "load":
            return (self.ra,)
        if self.kind == "store":
            return (self.ra, self.rv)
        if self.kind == "binop":
            return (self.ra, self.rb)
        if self.kind == "branch":
            return (self.rc,)
        if self.kind == "jump":
            return (self.rd,)
        return ()


def const(rd: int, imm) -> Instruction:
    return Instruction("const", rd=rd, imm=imm)


def load(rd: int, ra: int, k=0) -> Instruction:
    return Instruction("load", rd=rd, ra=ra, k=k)


def store(ra: int, k, rv: int) -> Instruction:
    return Instruction("store", ra=ra, k=k, rv=rv)


def binop(op: str, rd: int, ra: int, rb: int) -> Instruction:
    if op not in OPCODES:
        raise ValueError(f"unknown opcode {op!r}")
    return Instruction("binop", op=op, rd=rd, ra=ra, rb=rb)


def branch(rc: int, d) -> Instruction:
    return Instruction("branch", rc=rc, d=d)


def jump(rd: int) -> Instruction:
    return Instruction("jump", rd=rd)


def timer(rd: int) -> Instruction:
    return Instruction("timer", rd=rd)


def fence() -> Instruction:
    return Instruction("fence")


@dataclass
class AsmLine:
    """A program line: zero or more labels attached to an instruction.

    A trailing line may carry labels with no instruction; those labels bind to
    the first index past the program (useful as a halt target).
    """

    labels: tuple[str, ...]
    instr: Instruction | None
    lineno: int = 0


@dataclass
class SymbolicProgram:
    lines: list[AsmLine] = field(default_factory=list)
    # (optional label, word values, source line)
    mem_chunks: list[tuple[str | None, list, int]] = field(default_factory=list)
    reg_inits: dict[int, object] = field(default_factory=dict)
    entry: object = None  # LabelExpr | int | None

    def instruction_count(self) -> int:
        return sum(1 for ln in self.lines if ln.instr is not None)

    def label_names(self) -> list[str]:
        names = []
        for ln in self.lines:
            names.extend(ln.labels)
        for lbl, _, _ in self.mem_chunks:
            if lbl is not None:
                names.append(lbl)
        return names

    def copy(self) -> "SymbolicProgram":
        return SymbolicProgram(
            lines=[AsmLine(ln.labels, ln.instr, ln.lineno) for ln in self.lines],
            mem_chunks=[(l, list(vs), n) for (l, vs, n) in self.mem_chunks],
            reg_inits=dict(self.reg_inits),
            entry=self.entry,
        )


@dataclass(frozen=True)
class Program:
    """Resolved program: instruction vector plus its initial machine image."""

    instructions: tuple[Instruction, ...]
    symbols: dict[str, int] = field(default_factory=dict)
    mem_image: tuple[int, ...] = ()
    reg_inits: dict[int, int] = field(default_factory=dict)
    entry: int = 0

    def __len__(self) -> int:
        return len(self.instructions)


_REG_RE = re.compile(r"^(r(\d+)|rip)$")
_LABEL_DEF_RE = re.compile(r"^@([A-Za-z_.][\w.]*):")
_LABEL_EXPR_RE = re.compile(r"^@([A-Za-z_.][\w.]*)\s*(?:([+-])\s*(\d+))?$")
_NUM_RE = re.compile(r"^#(-?\d+)$")
_MEM_RE = re.compile(r"^\[\s*(\S+?)\s*(?:([+-])\s*(.+?)\s*)?\]$")
_BINOP_RE = re.compile(r"^binop\[(\w+)\]$")


def _parse_reg(tok: str, lineno: int) -> int:
    m = _REG_RE.match(tok)
    if not m:
        raise AsmError(f"expected register, got {tok!r}", lineno)
    if tok == "rip":
        return 15
    n = int(m.group(2))
    if not 0 <= n < REGISTER_COUNT:
        raise AsmError(f"register {tok!r} out of range", lineno)
    return n


def _parse_imm(tok: str, lineno: int):
    m = _NUM_RE.match(tok)
    if m:
        return int(m.group(1))
    m = _LABEL_EXPR_RE.match(tok)
    if m:
        off = int(m.group(3)) if m.group(3) else 0
        if m.group(2) == "-":
            off = -off
        return LabelExpr(m.group(1), off)
    raise AsmError(f"expected immediate (#n or @label), got {tok!r}", lineno)


def _negate_imm(v, lineno: int):
    if isinstance(v, int):
        return -v
    raise AsmError("cannot negate a label reference", lineno)


def _parse_mem_operand(text: str, lineno: int) -> tuple[int, object]:
    """Parse ``[rA]``, ``[rA + #k]``, ``[rA + @lbl - n]`` and the like."""
    m = _MEM_RE.match(text)
    if not m:
        raise AsmError(f"malformed memory operand {text!r}", lineno)
    ra = _parse_reg(m.group(1), lineno)
    if m.group(3) is None:
        return ra, 0
    disp = m.group(3).strip()
    k = _parse_imm(disp, lineno)
    if m.group(2) == "-":
        if isinstance(k, LabelExpr):
            raise AsmError("cannot negate a label reference", lineno)
        k = _negate_imm(k, lineno)
    return ra, k


def _split_operands(rest: str) -> list[str]:
    """Split an operand string, keeping bracketed memory operands whole."""
    parts: list[str] = []
    depth = 0
    cur = ""
    for ch in rest:
        if ch == "[":
            depth += 1
        elif ch == "]":
            depth -= 1
        if ch.isspace() and depth == 0:
            if cur:
                parts.append(cur)
                cur = ""
        else:
            cur += ch
    if cur:
        parts.append(cur)
    return parts


def _parse_instruction(mnemonic: str, ops: list[str], lineno: int) -> Instruction:
    def arity(n: int):
        if len(ops) != n:
            raise AsmError(
                f"{mnemonic} expects {n} operand(s), got {len(ops)}", lineno
            )

    bm = _BINOP_RE.match(mnemonic)
    if bm:
        op = bm.group(1)
        if op not in OPCODES:
            raise AsmError(f"unknown opcode {op!r}", lineno)
        arity(3)
        return binop(op, *(_parse_reg(t, lineno) for t in ops))
    if mnemonic == "const":
        arity(2)
        return const(_parse_reg(ops[0], lineno), _parse_imm(ops[1], lineno))
    if mnemonic == "load":
        arity(2)
        ra, k = _parse_mem_operand(ops[1], lineno)
        return load(_parse_reg(ops[0], lineno), ra, k)
    if mnemonic == "store":
        arity(2)
        ra, k = _parse_mem_operand(ops[0], lineno)
        return store(ra, k, _parse_reg(ops[1], lineno))
    if mnemonic == "branch":
        arity(2)
        return branch(_parse_reg(ops[0], lineno), _parse_imm(ops[1], lineno))
    if mnemonic == "jump":
        arity(1)
        return jump(_parse_reg(ops[0], lineno))
    if mnemonic == "timer":
        arity(1)
        return timer(_parse_reg(ops[0], lineno))
    if mnemonic == "fence":
        arity(0)
        return fence()
    raise AsmError(f"unknown mnemonic {mnemonic!r}", lineno)


def _parse_directive(line: str, lineno: int, sp: SymbolicProgram) -> None:
    parts = line.split(None, 1)
    head = parts[0]
    rest = parts[1] if len(parts) > 1 else ""
    if head == ".mem":
        label = None
        if rest.startswith("@"):
            if ":" not in rest:
                raise AsmError(".mem label must end with ':'", lineno)
            lbl, rest = rest.split(":", 1)
            label = lbl.strip()[1:]
        elif rest.startswith(":"):
            rest = rest[1:]
        values = []
        for tok in rest.split():
            if tok.startswith("@"):
                values.append(_parse_imm(tok, lineno))
            else:
                try:
                    values.append(int(tok, 0))
                except ValueError:
                    raise AsmError(f"bad .mem value {tok!r}", lineno) from None
        sp.mem_chunks.append((label, values, lineno))
    elif head == ".reg":
        ops = rest.split()
        if len(ops) != 2:
            raise AsmError(".reg expects: .reg rN #v", lineno)
        reg = _parse_reg(ops[0], lineno)
        sp.reg_inits[reg] = _parse_imm(ops[1], lineno)
    elif head == ".entry":
        sp.entry = _parse_imm(rest.strip(), lineno)
    else:
        raise AsmError(f"unknown directive {head!r}", lineno)


def assemble(text: str) -> SymbolicProgram:
    """Parse line-oriented assembly into a symbolic program.

    ``;`` starts a comment.  ``@name:`` defines a label, either on its own
    line or prefixed to an instruction.  Directives: ``.mem``, ``.reg``,
    ``.entry``.
    """
    sp = SymbolicProgram()
    pending_labels: list[str] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split(";", 1)[0].strip()
        if not line:
            continue
        if line.startswith("."):
            _parse_directive(line, lineno, sp)
            continue
        while True:
            m = _LABEL_DEF_RE.match(line)
            if not m:
                break
            pending_labels.append(m.group(1))
            line = line[m.end():].strip()
        if not line:
            continue
        parts = _split_operands(line)
        instr = _parse_instruction(parts[0], parts[1:], lineno)
        sp.lines.append(AsmLine(tuple(pending_labels), instr, lineno))
        pending_labels = []
    if pending_labels:
        sp.lines.append(AsmLine(tuple(pending_labels), None, len(text.splitlines())))
    seen: dict[str, int] = {}
    for name in sp.label_names():
        if name in seen:
            raise AsmError(f"duplicate label @{name}", None)
        seen[name] = 1
    return sp


def symbol_table(sp: SymbolicProgram) -> dict[str, int]:
    """Label values: instruction index for code labels, address for data labels."""
    symbols: dict[str, int] = {}
    idx = 0
    for ln in sp.lines:
        for name in ln.labels:
            if name in symbols:
                raise AsmError(f"duplicate label @{name}", ln.lineno)
            symbols[name] = idx
        if ln.instr is not None:
            idx += 1
    addr = 0
    for label, values, lineno in sp.mem_chunks:
        if label is not None:
            if label in symbols:
                raise AsmError(f"duplicate label @{label}", lineno)
            symbols[label] = addr
        addr += len(values)
    return symbols


def _resolve_value(v, symbols: dict[str, int], lineno: int) -> int:
    if isinstance(v, int):
        return v
    if isinstance(v, LabelExpr):
        if v.name not in symbols:
            raise AsmError(f"undefined label @{v.name}", lineno)
        return symbols[v.name] + v.offset
    raise AsmError(f"unresolvable value {v!r}", lineno)


def resolve(sp: SymbolicProgram) -> Program:
    """Replace label references with concrete integers.

    Branch targets become relative displacements (target index minus branch
    index); every other label reference becomes its absolute value.
    """
    symbols = symbol_table(sp)
    instrs: list[Instruction] = []
    idx = 0
    for ln in sp.lines:
        ins = ln.instr
        if ins is None:
            continue
        if ins.kind == "const" and not isinstance(ins.imm, int):
            ins = replace(ins, imm=_resolve_value(ins.imm, symbols, ln.lineno))
        elif ins.kind in ("load", "store") and not isinstance(ins.k, int):
            ins = replace(ins, k=_resolve_value(ins.k, symbols, ln.lineno))
        elif ins.kind == "branch" and not isinstance(ins.d, int):
            target = _resolve_value(ins.d, symbols, ln.lineno)
            d = target - idx
            if not -WORD_SIGN <= d < WORD_SIGN:
                raise AsmError("branch displacement overflows a word", ln.lineno)
            ins = replace(ins, d=d)
        instrs.append(ins)
        idx += 1
    mem: list[int] = []
    for label, values, lineno in sp.mem_chunks:
        for v in values:
            mem.append(wrap(_resolve_value(v, symbols, lineno)))
    reg_inits = {
        r: wrap(_resolve_value(v, symbols, 0)) for r, v in sp.reg_inits.items()
    }
    entry = 0
    if sp.entry is not None:
        entry = _resolve_value(sp.entry, symbols, 0)
    return Program(
        instructions=tuple(instrs),
        symbols=symbols,
        mem_image=tuple(mem),
        reg_inits=reg_inits,
        entry=entry,
    )


def _fmt_imm(v) -> str:
    if isinstance(v, LabelExpr):
        return str(v)
    return f"#{v}"


def _fmt_mem(ra: int, k) -> str:
    if isinstance(k, int):
        if k == 0:
            return f"[r{ra}]"
        if k < 0:
            return f"[r{ra} - #{-k}]"
        return f"[r{ra} + #{k}]"
    return f"[r{ra} + {k}]"


def format_instruction(ins: Instruction) -> str:
    if ins.kind == "const":
        return f"const r{ins.rd} {_fmt_imm(ins.imm)}"
    if ins.kind == "load":
        return f"load r{ins.rd} {_fmt_mem(ins.ra, ins.k)}"
    if ins.kind == "store":
        return f"store {_fmt_mem(ins.ra, ins.k)} r{ins.rv}"
    if ins.kind == "binop":
        return f"binop[{ins.op}] r{ins.rd} r{ins.ra} r{ins.rb}"
    if ins.kind == "branch":
        return f"branch r{ins.rc} {_fmt_imm(ins.d)}"
    if ins.kind == "jump":
        return f"jump r{ins.rd}"
    if ins.kind == "timer":
        return f"timer r{ins.rd}"
    if ins.kind == "fence":
        return "fence"
    raise ValueError(f"unknown instruction kind {ins.kind!r}")


def format_program(p) -> str:
    """Render a program (symbolic or resolved) back to assembly text."""
    out: list[str] = []
    if isinstance(p, SymbolicProgram):
        for label, values, _ in p.mem_chunks:
            head = f".mem @{label}:" if label else ".mem:"
            out.append(f"{head} " + " ".join(str(v) for v in values))
        for r, v in sorted(p.reg_inits.items()):
            out.append(f".reg r{r} {_fmt_imm(v)}")
        if p.entry is not None:
            out.append(f".entry {_fmt_imm(p.entry)}")
        for ln in p.lines:
            for name in ln.labels:
                out.append(f"@{name}:")
            if ln.instr is not None:
                out.append("  " + format_instruction(ln.instr))
    elif isinstance(p, Program):
        if p.mem_image:
            out.append(".mem: " + " ".join(str(v) for v in p.mem_image))
        for r, v in sorted(p.reg_inits.items()):
            out.append(f".reg r{r} #{v}")
        if p.entry:
            out.append(f".entry #{p.entry}")
        for ins in p.instructions:
            out.append("  " + format_instruction(ins))
    else:
        raise TypeError(f"cannot format {type(p).__name__}")
    return "\n".join(out) + "\n"
