"""Speculative micro-architecture simulator.

State on top of the architectural ⟨pc, R, M⟩: a speculative program counter,
a reorder buffer, an LRU cache, a last-outcome branch predictor, a branch
target buffer with optionally truncated tags, a store-alias disambiguator,
and a tick counter.  Exactly one rule fires per tick, chosen deterministically
by priority issue > execute > commit > stall; the tick counter increments
unconditionally.  Issue runs ahead along the predicted path, loads and binops
execute out of order once their operands resolve through the reorder buffer,
and commits replay the architectural semantics in program order, flushing the
buffer when a prediction or an alias speculation turns out wrong.

Misspeculated loads touch the cache at execute time and their cache lines
survive the flush — that residue is the entire vulnerability the attack
scenarios exploit.  Stores touch the cache only at commit, so misspeculated
stores leave no trace.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .arch import HALT_FAULT, HALT_FUEL, HALT_NORMAL, ArchState, arch_step
from .isa import Program, eval_binop, wrap

_VALUE_KINDS = ("const", "load", "binop", "timer")


@dataclass
class SimConfig:
    """Capacities, penalties, and feature toggles for one simulator instance."""

    c_max: int = 4
    b_max: int = 16
    j_max: int = 16
    btb_tag_bits: int | None = None  # None keeps full-address tags
    btb_target_encoding: str = "relative"  # or "absolute"
    e_max: int = 16
    miss_fill_steps: int = 1
    cache: bool = True
    branch_spec: bool = True
    jump_spec: bool = True
    disambiguation: bool = True
    timer_resolution: int = 1

    def __post_init__(self):
        for name in ("c_max", "b_max", "j_max", "e_max"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.miss_fill_steps < 0:
            raise ValueError("miss_fill_steps must be non-negative")
        if self.timer_resolution <= 0:
            raise ValueError("timer_resolution must be positive")
        if self.btb_target_encoding not in ("relative", "absolute"):
            raise ValueError("btb_target_encoding must be relative or absolute")

    def replace(self, **kw) -> "SimConfig":
        d = self.__dict__.copy()
        d.update(kw)
        return SimConfig(**d)


def cache_access(cache: list[int], addr: int, c_max: int) -> bool:
    """LRU insert-or-promote `addr` at the front; returns whether it was a hit.

    Mutates the list (most-recent first); evicts the last entry when the
    capacity would be exceeded.
    """
    try:
        cache.remove(addr)
        hit = True
    except ValueError:
        hit = False
    cache.insert(0, addr)
    if len(cache) > c_max:
        cache.pop()
    return hit


class LastOutcomePredictor:
    """Per-pc last-outcome branch predictor; not-taken when unseen."""

    def __init__(self, capacity: int):
        self.capacity = capacity
        self.entries: list[list] = []  # [pc, outcome], most-recent first

    def predict(self, pc: int) -> bool:
        for p, outcome in self.entries:
            if p == pc:
                return outcome
        return False

    def update(self, pc: int, outcome: bool) -> None:
        for i, (p, _) in enumerate(self.entries):
            if p == pc:
                del self.entries[i]
                break
        self.entries.insert(0, [pc, outcome])
        if len(self.entries) > self.capacity:
            self.entries.pop()

    def snapshot(self):
        return [tuple(e) for e in self.entries]


class BranchTargetBuffer:
    """Jump-target predictor keyed by (possibly truncated) source-pc tags.

    With t tag bits, pcs that agree on their low t bits alias one another.
    Relative encoding stores target-minus-source, so an aliased hit predicts
    `querying_pc + stored_offset`; absolute encoding replays the raw target.
    """

    def __init__(self, capacity: int, tag_bits: int | None, encoding: str):
        self.capacity = capacity
        self.tag_bits = tag_bits
        self.encoding = encoding
        self.entries: list[list] = []  # [tag, encoded target]

    def _tag(self, pc: int) -> int:
        if self.tag_bits is None:
            return pc
        return pc & ((1 << self.tag_bits) - 1)

    def predict(self, pc: int) -> int | None:
        tag = self._tag(pc)
        for t, enc in self.entries:
            if t == tag:
                return wrap(pc + enc) if self.encoding == "relative" else enc
        return None

    def update(self, pc: int, target: int) -> None:
        tag = self._tag(pc)
        enc = wrap(target - pc) if self.encoding == "relative" else target
        for i, (t, _) in enumerate(self.entries):
            if t == tag:
                del self.entries[i]
                break
        self.entries.insert(0, [tag, enc])
        if len(self.entries) > self.capacity:
            self.entries.pop()

    def snapshot(self):
        return [tuple(e) for e in self.entries]


class Disambiguator:
    """Per-store-pc alias predictor; defaults to the conservative `alias`.

    A store-pc flips to no-alias when the store commits with no executed
    younger load to the same address sitting in the reorder buffer, and flips
    back when a bypass is caught aliasing at commit.
    """

    def __init__(self, capacity: int):
        self.capacity = capacity
        self.entries: list[list] = []  # [store_pc, predicts_no_alias]

    def predicts_no_alias(self, pc: int) -> bool:
        for p, no_alias in self.entries:
            if p == pc:
                return no_alias
        return False

    def update(self, pc: int, no_alias: bool) -> None:
        for i, (p, _) in enumerate(self.entries):
            if p == pc:
                del self.entries[i]
                break
        self.entries.insert(0, [pc, no_alias])
        if len(self.entries) > self.capacity:
            self.entries.pop()

    def snapshot(self):
        return [tuple(e) for e in self.entries]


class ROBEntry:
    """One in-flight instruction.

    value      result word once executed (const: set at issue; timer: at
               execute); None until then and always None for non-producers.
    pred       branch direction or predicted jump target; None when the
               instruction issued unspeculatively.
    addr       effective address frozen at the load's first execute attempt.
    fill_remaining  outstanding cache-fill steps for a missed load.
    bypassed   older store entries this load was allowed to skip.
    """

    __slots__ = (
        "seq", "pc", "instr", "wreg", "value", "pred", "addr",
        "fill_remaining", "bypassed", "forwarded", "commit_addr", "load_record",
    )

    def __init__(self, seq: int, pc: int, instr, pred=None, value=None):
        self.seq = seq
        self.pc = pc
        self.instr = instr
        self.wreg = instr.writes_register()
        self.value = value
        self.pred = pred
        self.addr = None
        self.fill_remaining = None
        self.bypassed = None
        self.forwarded = False
        self.commit_addr = None
        self.load_record = None

    def is_complete(self) -> bool:
        if self.instr.kind in _VALUE_KINDS:
            return self.value is not None
        return True


@dataclass
class MicroState:
    sigma: ArchState
    spc: int
    rob: list[ROBEntry]
    bp: LastOutcomePredictor
    btb: BranchTargetBuffer
    disamb: Disambiguator
    cache: list[int]
    ticks: int = 0

    @classmethod
    def initial(
        cls,
        program: Program,
        cfg: SimConfig,
        mem_size: int = 64,
        regs: dict[int, int] | None = None,
        entry: int | None = None,
    ) -> "MicroState":
        sigma = ArchState.initial(program, mem_size, regs, entry)
        return cls(
            sigma=sigma,
            spc=sigma.pc,
            rob=[],
            bp=LastOutcomePredictor(cfg.b_max),
            btb=BranchTargetBuffer(cfg.j_max, cfg.btb_tag_bits, cfg.btb_target_encoding),
            disamb=Disambiguator(cfg.b_max),
            cache=[],
        )


class SpecLoadRecord:
    """Audit record for one executed load: where it read and what became of it."""

    __slots__ = ("seq", "pc", "addr", "tick", "forwarded", "flushed", "flush_kind")

    def __init__(self, seq, pc, addr, tick, forwarded):
        self.seq = seq
        self.pc = pc
        self.addr = addr
        self.tick = tick
        self.forwarded = forwarded
        self.flushed = False
        self.flush_kind = None  # "branch" | "jump" | "disambiguation"

    def as_dict(self):
        return {
            "pc": self.pc,
            "addr": self.addr,
            "tick": self.tick,
            "forwarded": self.forwarded,
            "flushed": self.flushed,
            "flush_kind": self.flush_kind,
        }


@dataclass
class MicroTrace:
    events: list = field(default_factory=list)
    spec_loads: list[SpecLoadRecord] = field(default_factory=list)
    flushes: list[dict] = field(default_factory=list)
    committed_pcs: list[int] = field(default_factory=list)
    commits: int = 0
    disambiguation_flushes: int = 0
    max_consecutive_stalls: int = 0
    halt: str | None = None
    ticks: int = 0


def lookup_reg(rob: list[ROBEntry], upto: int, r: int, regs: list[int]):
    """Value of register r as seen past the first `upto` reorder-buffer entries.

    The youngest entry in the prefix that writes r supplies the value (None if
    it has not executed); with no such entry the architectural register wins.
    """
    for i in range(upto - 1, -1, -1):
        e = rob[i]
        if e.wreg == r:
            return e.value
    return regs[r]


def lookup_mem(
    rob: list[ROBEntry],
    upto: int,
    addr: int,
    regs: list[int],
    mem: list[int],
    disamb: Disambiguator | None,
):
    """Resolve a load at `addr` against in-flight stores.

    Returns (status, value, bypassed): status "fwd" forwards a store's value,
    "mem" falls through to memory, "blocked" means an older store keeps the
    address or value unknown.  When `disamb` is given, stores whose pc is
    predicted no-alias are skipped and collected in `bypassed` for the
    commit-time aliasing re-check.
    """
    bypassed: list[ROBEntry] = []
    for i in range(upto - 1, -1, -1):
        e = rob[i]
        if e.instr.kind != "store":
            continue
        va = lookup_reg(rob, i, e.instr.ra, regs)
        saddr = None if va is None else wrap(va + e.instr.k)
        if disamb is not None and disamb.predicts_no_alias(e.pc):
            if saddr is None or saddr == addr:
                bypassed.append(e)
                continue
            continue  # resolved non-matching store: ordinary skip
        if saddr is None:
            return "blocked", None, bypassed
        if saddr == addr:
            vv = lookup_reg(rob, i, e.instr.rv, regs)
            if vv is None:
                return "blocked", None, bypassed
            return "fwd", vv, bypassed
    return "mem", None, bypassed


class MicroSim:
    """Driver owning one run: fires one rule per tick until halt or fuel."""

    def __init__(
        self,
        program: Program,
        cfg: SimConfig,
        state: MicroState,
        trace_level: str = "none",
        commit_hook=None,
    ):
        self.program = program
        self.cfg = cfg
        self.st = state
        self.trace_level = trace_level
        self.trace = MicroTrace()
        self.commit_hook = commit_hook
        self.halted: str | None = None
        self._seq = 0
        self._consecutive_stalls = 0
        self._full = trace_level == "full"
        # entries that freeze the front end: timer/fence and unresolved control
        self._issue_blockers = 0

    # -- helpers ----------------------------------------------------------

    def _event(self, rule: str, pc=None, **extra):
        ev = {"tick": self.st.ticks, "rule": rule, "pc": pc}
        ev.update(extra)
        ev["cache"] = list(self.st.cache)
        self.trace.events.append(ev)

    def _clock_value(self) -> int:
        res = self.cfg.timer_resolution
        return (self.st.ticks // res) * res

    def _flush(self, kind: str):
        st = self.st
        for e in st.rob:
            if e.load_record is not None:
                e.load_record.flushed = True
                e.load_record.flush_kind = kind
        st.rob.clear()
        st.spc = st.sigma.pc
        self._issue_blockers = 0
        self.trace.flushes.append({"tick": st.ticks, "kind": kind})
        if kind == "disambiguation":
            self.trace.disambiguation_flushes += 1

    def _record_load(self, entry: ROBEntry, forwarded: bool):
        rec = SpecLoadRecord(entry.seq, entry.pc, entry.addr, self.st.ticks, forwarded)
        entry.load_record = rec
        self.trace.spec_loads.append(rec)

    # -- issue -------------------------------------------------------------

    def _try_issue(self) -> bool:
        st, cfg = self.st, self.cfg
        rob = st.rob
        if len(rob) >= cfg.e_max or self._issue_blockers:
            return False
        spc = st.spc
        instrs = self.program.instructions
        if not 0 <= spc < len(instrs):
            return False
        ins = instrs[spc]
        kind = ins.kind
        self._seq += 1
        if kind == "branch":
            if cfg.branch_spec:
                b = st.bp.predict(spc)
                rob.append(ROBEntry(self._seq, spc, ins, pred=b))
                if self._full:
                    self._event("issue-branch", spc, predicted=b)
                st.spc += ins.d if b else 1
            else:
                if rob:
                    self._seq -= 1
                    return False
                rob.append(ROBEntry(self._seq, spc, ins, pred=None))
                self._issue_blockers += 1
                if self._full:
                    self._event("issue-branch", spc, predicted=None)
                # spc frozen until the branch resolves at commit
        elif kind == "jump":
            target = st.btb.predict(spc) if cfg.jump_spec else None
            if target is not None:
                rob.append(ROBEntry(self._seq, spc, ins, pred=target))
                if self._full:
                    self._event("issue-jump", spc, predicted=target)
                st.spc = target
            else:
                if rob:
                    self._seq -= 1
                    return False
                rob.append(ROBEntry(self._seq, spc, ins, pred=None))
                self._issue_blockers += 1
                if self._full:
                    self._event("issue-jump", spc, predicted=None)
        elif kind == "timer" or kind == "fence":
            if rob:
                self._seq -= 1
                return False
            rob.append(ROBEntry(self._seq, spc, ins))
            self._issue_blockers += 1
            if self._full:
                self._event("issue", spc)
            st.spc += 1
        else:
            value = wrap(ins.imm) if kind == "const" else None
            rob.append(ROBEntry(self._seq, spc, ins, value=value))
            if self._full:
                self._event("issue", spc)
            st.spc += 1
        return True

    # -- execute -----------------------------------------------------------

    def _try_execute(self) -> bool:
        st, cfg = self.st, self.cfg
        rob = st.rob
        regs = st.sigma.regs
        mem = st.sigma.mem
        full = self._full
        for i, e in enumerate(rob):
            if e.value is not None:
                continue
            kind = e.instr.kind
            if kind == "binop":
                va = lookup_reg(rob, i, e.instr.ra, regs)
                if va is None:
                    continue
                vb = lookup_reg(rob, i, e.instr.rb, regs)
                if vb is None:
                    continue
                e.value = eval_binop(e.instr.op, va, vb)
                if full:
                    self._event("execute", e.pc, value=e.value)
                return True
            if kind == "timer":
                e.value = wrap(self._clock_value())
                if full:
                    self._event("execute", e.pc, value=e.value)
                return True
            if kind != "load":
                continue
            if e.addr is None:
                va = lookup_reg(rob, i, e.instr.ra, regs)
                if va is None:
                    continue
                addr = wrap(va + e.instr.k)
                status, value, bypassed = lookup_mem(
                    rob, i, addr, regs, mem,
                    st.disamb if cfg.disambiguation else None,
                )
                if status == "blocked":
                    continue
                e.addr = addr
                e.bypassed = bypassed or None
                if status == "fwd":
                    e.value = value
                    e.forwarded = True
                    self._record_load(e, forwarded=True)
                    if full:
                        self._event("execute", e.pc, addr=addr, forwarded=True)
                    return True
                self._record_load(e, forwarded=False)
            # memory-sourced load with frozen address
            addr = e.addr
            if not 0 <= addr < len(mem):
                e.value = 0  # speculation must stay total; commit will fault
                if full:
                    self._event("execute", e.pc, addr=addr, oob=True)
                return True
            if not cfg.cache:
                e.value = mem[addr]
                if full:
                    self._event("execute", e.pc, addr=addr)
                return True
            hit = cache_access(st.cache, addr, cfg.c_max)
            if hit and not e.fill_remaining:
                e.value = mem[addr]
                if full:
                    self._event("execute", e.pc, addr=addr)
                return True
            if hit:
                e.fill_remaining -= 1
                if full:
                    self._event("fill", e.pc, addr=addr)
                return True
            # miss: this step performs the fill; the value comes later
            e.fill_remaining = cfg.miss_fill_steps - 1 if cfg.miss_fill_steps else 0
            if cfg.miss_fill_steps == 0:
                e.value = mem[addr]
            if full:
                self._event("fill", e.pc, addr=addr)
            return True
        return False

    # -- commit ------------------------------------------------------------

    def _commit_cache_touch(self, addr: int):
        if self.cfg.cache:
            cache_access(self.st.cache, addr, self.cfg.c_max)

    def _try_commit(self) -> bool:
        st, cfg = self.st, self.cfg
        rob = st.rob
        if not rob:
            return False
        e = rob[0]
        if not e.is_complete():
            return False
        sigma = st.sigma
        ins = e.instr
        kind = ins.kind

        if kind == "branch":
            actual = sigma.regs[ins.rc] != 0
            succ = sigma.pc + (ins.d if actual else 1)
            st.bp.update(e.pc, actual)
            sigma.pc = succ
            if e.pred is None:
                rob.pop(0)
                st.spc = succ
                self._event("commit-branch", e.pc, taken=actual)
            elif e.pred == actual:
                rob.pop(0)
                self._event("commit-branch", e.pc, taken=actual)
            else:
                self._event("mispredict-branch", e.pc, taken=actual)
                self._flush("branch")
            self._after_commit(e)
            return True

        if kind == "jump":
            actual = sigma.regs[ins.rd]
            st.btb.update(e.pc, actual)
            sigma.pc = actual
            if e.pred is None or e.pred == actual:
                rob.pop(0)
                st.spc = actual if e.pred is None else st.spc
                self._event("commit-jump", e.pc, target=actual)
            else:
                self._event("mispredict-jump", e.pc, target=actual)
                self._flush("jump")
            self._after_commit(e)
            return True

        if kind == "load":
            addr = wrap(sigma.regs[ins.ra] + ins.k)
            if e.bypassed:
                for b in e.bypassed:
                    if b.commit_addr is not None and b.commit_addr == addr:
                        st.disamb.update(b.pc, no_alias=False)
                        self._event("alias-violation", e.pc, store_pc=b.pc, addr=addr)
                        self._flush("disambiguation")
                        return True
                for b in e.bypassed:
                    st.disamb.update(b.pc, no_alias=True)
            if not 0 <= addr < len(sigma.mem):
                self.halted = HALT_FAULT
                self._event("fault", e.pc, addr=addr)
                return True
            sigma.regs[ins.rd] = sigma.mem[addr]
            sigma.pc += 1
            self._commit_cache_touch(addr)
            rob.pop(0)
            self._event("commit", e.pc)
            self._after_commit(e)
            return True

        if kind == "store":
            addr = wrap(sigma.regs[ins.ra] + ins.k)
            if not 0 <= addr < len(sigma.mem):
                self.halted = HALT_FAULT
                self._event("fault", e.pc, addr=addr)
                return True
            sigma.mem[addr] = sigma.regs[ins.rv]
            sigma.pc += 1
            e.commit_addr = addr
            self._commit_cache_touch(addr)
            observed = any(
                y.instr.kind == "load" and y.addr == addr for y in rob[1:]
            )
            st.disamb.update(e.pc, no_alias=not observed)
            rob.pop(0)
            self._event("commit", e.pc)
            self._after_commit(e)
            return True

        if kind == "const" or kind == "binop" or kind == "timer":
            sigma.regs[ins.rd] = e.value
            sigma.pc += 1
        elif kind == "fence":
            sigma.pc += 1
        else:
            raise ValueError(f"unknown instruction kind {kind!r}")
        rob.pop(0)
        self._event("commit", e.pc)
        self._after_commit(e)
        return True

    def _after_commit(self, entry: ROBEntry):
        self.trace.commits += 1
        if self.trace_level in ("commits", "full"):
            self.trace.committed_pcs.append(entry.pc)
        if self.commit_hook is not None:
            self.commit_hook(self, entry)

    # -- scheduler ---------------------------------------------------------

    def step(self) -> None:
        """One tick: bump the counter, then fire the highest-priority rule."""
        st = self.st
        st.ticks += 1
        if self._try_issue():
            fired = True
        elif self._try_execute():
            fired = True
        elif self._try_commit():
            fired = True
        else:
            fired = False
            self._event("stall")
        if fired:
            self._consecutive_stalls = 0
        elif st.rob:
            self._consecutive_stalls += 1
            if self._consecutive_stalls > self.trace.max_consecutive_stalls:
                self.trace.max_consecutive_stalls = self._consecutive_stalls
        if self.halted is None and not st.rob:
            if not 0 <= st.sigma.pc < len(self.program.instructions):
                self.halted = HALT_NORMAL

    def run(self, fuel: int = 100_000) -> MicroTrace:
        st = self.st
        if not st.rob and not 0 <= st.sigma.pc < len(self.program.instructions):
            self.halted = HALT_NORMAL
        while self.halted is None:
            if st.ticks >= fuel:
                self.halted = HALT_FUEL
                break
            self.step()
        self.trace.halt = self.halted
        self.trace.ticks = st.ticks
        return self.trace


def micro_run(
    program: Program,
    cfg: SimConfig | None = None,
    fuel: int = 100_000,
    mem_size: int = 64,
    regs: dict[int, int] | None = None,
    entry: int | None = None,
    trace_level: str = "none",
) -> tuple[MicroState, MicroTrace]:
    """Run a program to architectural halt (or fuel) on a fresh micro-state."""
    cfg = cfg or SimConfig()
    state = MicroState.initial(program, cfg, mem_size, regs, entry)
    sim = MicroSim(program, cfg, state, trace_level=trace_level)
    trace = sim.run(fuel)
    return state, trace


# -- replay checks ----------------------------------------------------------


@dataclass
class AgreementViolation:
    depth: int
    component: str
    detail: str


def _replay_states(program: Program, st: MicroState):
    """Architectural states σ_0..σ_n reached by replaying the buffered
    instructions from the committed state, plus per-depth store addresses.

    Replay stops early at an architectural halt.
    """
    states = [st.sigma.copy()]
    store_addrs: list[int | None] = []
    s = st.sigma.copy()
    for e in st.rob:
        ins = e.instr
        if ins.kind == "store" and 0 <= s.pc < len(program.instructions):
            store_addrs.append(wrap(s.regs[ins.ra] + ins.k))
        else:
            store_addrs.append(None)
        halt = arch_step(program, s, steps_taken=0)
        if halt is not None:
            break
        states.append(s.copy())
    return states, store_addrs


def misspeculation_depth(program: Program, st: MicroState) -> int | None:
    """Smallest reorder-buffer depth whose entry disagrees with its prediction.

    Branch entries disagree when the replayed condition contradicts the
    predicted direction, jumps when the replayed target differs, and bypassed
    loads when a skipped store turns out to alias.  None when the whole
    buffer is consistent.
    """
    states, store_addrs = _replay_states(program, st)
    entry_addr: dict[int, int | None] = {}
    for m, e in enumerate(st.rob):
        if m >= len(states):
            break
        s_m = states[m]
        ins = e.instr
        if ins.kind == "store":
            entry_addr[id(e)] = store_addrs[m]
        elif ins.kind == "branch" and e.pred is not None:
            actual = s_m.regs[ins.rc] != 0
            if actual != e.pred:
                return m
        elif ins.kind == "jump" and e.pred is not None:
            if s_m.regs[ins.rd] != e.pred:
                return m
        elif ins.kind == "load" and e.bypassed:
            laddr = wrap(s_m.regs[ins.ra] + ins.k)
            for b in e.bypassed:
                baddr = entry_addr.get(id(b), b.commit_addr)
                if baddr is not None and baddr == laddr:
                    return m
    return None


def agreement_check(
    program: Program, st: MicroState
) -> AgreementViolation | None:
    """Check that speculative lookups agree with an architectural replay.

    At every depth up to the first misspeculation (or the end of the buffer),
    every register and memory lookup over the buffer prefix must be either
    unresolved or equal to the replayed architectural value, and the replayed
    pc must line up with the next buffered instruction (or with the
    speculative pc at full depth).  Depths past an unresolved control entry,
    a timer or fence, or a replay halt make no claim.
    """
    rob = st.rob
    states, replay_store_addrs = _replay_states(program, st)
    horizon = len(rob)
    k = misspeculation_depth(program, st)
    if k is not None:
        horizon = min(horizon, k)
    for i, e in enumerate(rob):
        if e.pred is None and e.instr.kind in ("branch", "jump"):
            horizon = min(horizon, i)
        if e.instr.kind in ("timer", "fence"):
            horizon = min(horizon, i)
    horizon = min(horizon, len(states) - 1)

    regs0 = st.sigma.regs
    mem0 = st.sigma.mem
    for m in range(horizon + 1):
        s_m = states[m]
        for r in range(16):
            v = lookup_reg(rob, m, r, regs0)
            if v is not None and v != s_m.regs[r]:
                return AgreementViolation(m, f"register r{r}", f"{v} != {s_m.regs[r]}")
        candidates = set()
        for i in range(m):
            a = replay_store_addrs[i]
            if a is not None:
                candidates.add(a)
            e = rob[i]
            if e.instr.kind == "store":
                va = lookup_reg(rob, i, e.instr.ra, regs0)
                if va is not None:
                    candidates.add(wrap(va + e.instr.k))
        for addr in candidates:
            if not 0 <= addr < len(mem0):
                continue
            status, v, _ = lookup_mem(rob, m, addr, regs0, mem0, None)
            if status == "mem":
                v = mem0[addr]
            if v is not None and v != s_m.mem[addr]:
                return AgreementViolation(m, f"memory {addr}", f"{v} != {s_m.mem[addr]}")
        if m < len(rob):
            if s_m.pc != rob[m].pc:
                return AgreementViolation(m, "pc", f"{s_m.pc} != entry pc {rob[m].pc}")
        elif s_m.pc != st.spc:
            return AgreementViolation(m, "pc", f"{s_m.pc} != spc {st.spc}")
    return None
