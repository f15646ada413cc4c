"""Sequential logic encryption with sporadic re-authentication.

``encrypt`` wraps a netlist in a mode controller lowered entirely to gate
primitives and D flip-flops, so the result is again a plain ``.bench``
netlist:

* an LFSR PRNG (see :mod:`relock.lfsr`) free-running from reset,
* a chain selector ``s`` and progress counter ``p`` addressing a table of
  secret input patterns; applying the selected chain on the primary inputs,
  one pattern per cycle, moves the design from encrypted to functional mode,
* a countdown that keeps the design functional for ``max(PRNG, 1)`` cycles
  after each authentication, then jumps back to encrypted mode and picks the
  next chain from the low bits of the PRNG,
* shadow registers that track the design state while functional and restore
  it on the next authentication, so corrupted encrypted-mode cycles leave no
  trace once the user re-authenticates,
* a corruption word, nonzero on every encrypted-mode cycle and forced to
  zero while functional, XORed into a randomly chosen coverage fraction of
  gate-output nets.

All randomness (key table, corruption words, XOR sites) derives from
``EncryptConfig.master_seed``, so encryption is reproducible byte for byte.
"""

from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass
from pathlib import Path

from .bench import Gate, Netlist
from .lfsr import MAXIMAL_TAPS, new_lfsr

DEFAULT_SEED = 0x5EED

SCHEDULE_FORMAT_VERSION = 1

# comparator logic grows as chains * patterns; keep configs sane
_MAX_FSM_STATES = 4096


@dataclass(frozen=True)
class EncryptConfig:
    """Encryption parameters.

    lfsr_width : PRNG register width in bits.
    lfsr_taps : tap set, or None for the built-in maximal set.
    enc_out_width : corruption word width in bits.
    key_len : patterns per authentication chain (cycles per authentication).
    sbj_bits : chain selector width; 2**sbj_bits chains exist.
    coverage : fraction of gate outputs to corrupt, in (0, 1].
    master_seed : seeds every random choice the encryptor makes.
    """

    lfsr_width: int = 5
    lfsr_taps: tuple[int, ...] | None = None
    enc_out_width: int = 3
    key_len: int = 8
    sbj_bits: int = 2
    coverage: float = 0.1
    master_seed: int = DEFAULT_SEED

    def validate(self) -> None:
        if self.lfsr_width < 1:
            raise ValueError(f"lfsr_width must be >= 1, got {self.lfsr_width}")
        new_lfsr(self.lfsr_width, self.resolved_taps())  # raises on bad taps
        if self.key_len < 1:
            raise ValueError(f"key_len must be >= 1, got {self.key_len}")
        if not 1 <= self.sbj_bits <= self.lfsr_width:
            raise ValueError(
                f"sbj_bits must be in 1..lfsr_width ({self.lfsr_width}), got {self.sbj_bits}"
            )
        if self.enc_out_width < 1:
            raise ValueError(f"enc_out_width must be >= 1, got {self.enc_out_width}")
        if self.enc_out_width == 1 and self.key_len > 1:
            raise ValueError(
                "enc_out_width=1 cannot keep consecutive corruption words distinct; "
                "use enc_out_width >= 2"
            )
        if not 0 < self.coverage <= 1:
            raise ValueError(f"coverage must be in (0, 1], got {self.coverage}")
        if (1 << self.sbj_bits) * self.key_len > _MAX_FSM_STATES:
            raise ValueError(
                f"2**sbj_bits * key_len exceeds {_MAX_FSM_STATES} controller states"
            )

    def resolved_taps(self) -> tuple[int, ...]:
        if self.lfsr_taps is not None:
            return tuple(sorted(set(self.lfsr_taps)))
        if self.lfsr_width not in MAXIMAL_TAPS:
            raise ValueError(
                f"no built-in tap set for width {self.lfsr_width}; set lfsr_taps"
            )
        return MAXIMAL_TAPS[self.lfsr_width]

    def to_dict(self) -> dict:
        return {
            "lfsr_width": self.lfsr_width,
            "lfsr_taps": list(self.lfsr_taps) if self.lfsr_taps is not None else None,
            "enc_out_width": self.enc_out_width,
            "key_len": self.key_len,
            "sbj_bits": self.sbj_bits,
            "coverage": self.coverage,
            "master_seed": self.master_seed,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "EncryptConfig":
        kwargs = dict(d)
        taps = kwargs.get("lfsr_taps")
        if taps is not None:
            kwargs["lfsr_taps"] = tuple(taps)
        unknown = set(kwargs) - {f for f in cls.__dataclass_fields__}
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**kwargs)


def load_config(path: str | Path) -> EncryptConfig:
    cfg = EncryptConfig.from_dict(json.loads(Path(path).read_text()))
    cfg.validate()
    return cfg


def save_config(cfg: EncryptConfig, path: str | Path) -> None:
    Path(path).write_text(json.dumps(cfg.to_dict(), indent=2) + "\n")


@dataclass(frozen=True)
class EncFsmSpec:
    """Behavioral controller spec before gate lowering.

    ``key_table[s][p]`` is the input pattern expected at progress ``p`` of
    chain ``s``; ``enc_out_table[s][p]`` is the corruption word emitted while
    the controller sits in that encrypted-mode state.  The functional mode
    emits the implicit all-zeros word.
    """

    n_inputs: int
    enc_out_width: int
    key_table: tuple[tuple[int, ...], ...]
    enc_out_table: tuple[tuple[int, ...], ...]


def build_enc_fsm(n_inputs: int, cfg: EncryptConfig, rng: random.Random) -> EncFsmSpec:
    """Draw the secret key table and corruption words.

    Corruption words are nonzero and no two consecutive states of a chain
    share a word, so the corruption signal visibly switches every cycle of a
    pending authentication.
    """
    cfg.validate()
    if n_inputs < 1:
        raise ValueError("need at least one primary input")
    chains = 1 << cfg.sbj_bits
    key_table = tuple(
        tuple(rng.getrandbits(n_inputs) for _ in range(cfg.key_len))
        for _ in range(chains)
    )
    enc_rows = []
    for _ in range(chains):
        row: list[int] = []
        prev = None
        for _ in range(cfg.key_len):
            w = rng.randrange(1, 1 << cfg.enc_out_width)
            while w == prev:
                w = rng.randrange(1, 1 << cfg.enc_out_width)
            row.append(w)
            prev = w
        enc_rows.append(tuple(row))
    return EncFsmSpec(n_inputs, cfg.enc_out_width, key_table, tuple(enc_rows))


def derive_sbj(r: int, sbj_bits: int) -> int:
    """Next chain selector: the low ``sbj_bits`` bits of PRNG output ``r``."""
    if sbj_bits < 1:
        raise ValueError("sbj_bits must be >= 1")
    if r < 0:
        raise ValueError("r must be nonnegative")
    return r & ((1 << sbj_bits) - 1)


@dataclass(frozen=True)
class XorSite:
    """One corrupted net: ``net`` is cut and re-driven by XOR(raw_net, enc bit)."""

    net: str
    enc_bit: int
    raw_net: str


def _fresh_prefix(nl: Netlist) -> str:
    names = nl.net_names
    cand = "LK_"
    k = 0
    while any(s.startswith(cand) for s in names):
        cand = f"LK{k}_"
        k += 1
    return cand


def insert_xor(
    nl: Netlist,
    enc_out_width: int,
    coverage: float,
    rng: random.Random,
    prefix: str | None = None,
) -> tuple[Netlist, tuple[XorSite, ...]]:
    """Cut ``ceil(coverage * n_gates)`` random gate-output nets with XOR taps.

    Each chosen net keeps its name but is re-driven by ``XOR(raw, enc_bit)``
    where ``raw`` is the renamed original gate output, so every downstream
    reader sees the corrupted value.  Corruption bits are assigned round
    robin and enter the returned netlist as extra primary inputs named
    ``<prefix>corrupt<j>``; tying them all to zero restores the original
    function exactly.
    """
    if enc_out_width < 1:
        raise ValueError("enc_out_width must be >= 1")
    if not 0 < coverage <= 1:
        raise ValueError(f"coverage must be in (0, 1], got {coverage}")
    if not nl.gates:
        raise ValueError(f"netlist '{nl.name}' has no gates to corrupt")
    if prefix is None:
        prefix = _fresh_prefix(nl)
    k = min(math.ceil(coverage * len(nl.gates)), len(nl.gates))
    picks = rng.sample(range(len(nl.gates)), k)
    used_bits = min(enc_out_width, k)
    new_gates = list(nl.gates)
    xor_gates: list[Gate] = []
    sites: list[XorSite] = []
    for idx, gi in enumerate(picks):
        g = new_gates[gi]
        j = idx % enc_out_width
        raw = f"{prefix}raw{idx}"
        new_gates[gi] = Gate(raw, g.kind, g.ins)
        xor_gates.append(Gate(g.out, "XOR", (raw, f"{prefix}corrupt{j}")))
        sites.append(XorSite(net=g.out, enc_bit=j, raw_net=raw))
    nlx = Netlist(
        name=nl.name,
        inputs=nl.inputs + tuple(f"{prefix}corrupt{j}" for j in range(used_bits)),
        outputs=nl.outputs,
        gates=tuple(new_gates + xor_gates),
        dffs=nl.dffs,
    )
    return nlx, tuple(sites)


@dataclass(frozen=True)
class KeySchedule:
    """Everything the trusted key manager needs to drive an encrypted design."""

    circuit: str
    lfsr_width: int
    lfsr_taps: tuple[int, ...]
    reset_seed: int
    key_len: int
    sbj_bits: int
    n_inputs: int
    key_table: tuple[tuple[int, ...], ...]
    master_seed: int
    config: EncryptConfig

    def to_json(self) -> str:
        doc = {
            "version": SCHEDULE_FORMAT_VERSION,
            "circuit": self.circuit,
            "n": self.lfsr_width,
            "taps": list(self.lfsr_taps),
            "seed": hex(self.reset_seed),
            "c": self.key_len,
            "l": self.sbj_bits,
            "i": self.n_inputs,
            "key_table": [[hex(w) for w in row] for row in self.key_table],
            "master_seed": self.master_seed,
            "config": self.config.to_dict(),
        }
        return json.dumps(doc, indent=2) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "KeySchedule":
        doc = json.loads(text)
        version = doc.get("version")
        if version != SCHEDULE_FORMAT_VERSION:
            raise ValueError(f"unsupported key schedule version: {version!r}")
        return cls(
            circuit=doc["circuit"],
            lfsr_width=doc["n"],
            lfsr_taps=tuple(doc["taps"]),
            reset_seed=int(doc["seed"], 16),
            key_len=doc["c"],
            sbj_bits=doc["l"],
            n_inputs=doc["i"],
            key_table=tuple(tuple(int(w, 16) for w in row) for row in doc["key_table"]),
            master_seed=doc["master_seed"],
            config=EncryptConfig.from_dict(doc["config"]),
        )


def load_schedule(path: str | Path) -> KeySchedule:
    return KeySchedule.from_json(Path(path).read_text())


def save_schedule(sched: KeySchedule, path: str | Path) -> None:
    Path(path).write_text(sched.to_json())


@dataclass(frozen=True)
class EncryptReport:
    prefix: str
    sites: tuple[XorSite, ...]
    requested_coverage: float
    achieved_coverage: float
    added_gates: int
    added_dffs: int

    def as_dict(self) -> dict:
        return {
            "prefix": self.prefix,
            "n_sites": len(self.sites),
            "sites": [{"net": s.net, "enc_bit": s.enc_bit} for s in self.sites],
            "requested_coverage": self.requested_coverage,
            "achieved_coverage": self.achieved_coverage,
            "added_gates": self.added_gates,
            "added_dffs": self.added_dffs,
        }


@dataclass(frozen=True)
class EncryptedDesign:
    netlist: Netlist
    schedule: KeySchedule
    report: EncryptReport


class _NetFactory:
    """Fresh prefixed net names plus small structural building blocks."""

    def __init__(self, prefix: str, gates: list[Gate], anchor: str):
        self.prefix = prefix
        self.gates = gates
        self.anchor = anchor  # any defined net, used to fabricate constants
        self._n = 0
        self._not_cache: dict[str, str] = {}
        self._const0: str | None = None

    def fresh(self) -> str:
        name = f"{self.prefix}t{self._n}"
        self._n += 1
        return name

    def emit(self, kind: str, ins, out: str | None = None) -> str:
        if out is None:
            out = self.fresh()
        self.gates.append(Gate(out, kind, tuple(ins)))
        return out

    def inv(self, a: str) -> str:
        got = self._not_cache.get(a)
        if got is None:
            got = self.emit("NOT", (a,))
            self._not_cache[a] = got
        return got

    def and2(self, a: str, b: str, out: str | None = None) -> str:
        return self.emit("AND", (a, b), out)

    def or2(self, a: str, b: str, out: str | None = None) -> str:
        return self.emit("OR", (a, b), out)

    def xor2(self, a: str, b: str) -> str:
        return self.emit("XOR", (a, b))

    def xnor2(self, a: str, b: str) -> str:
        return self.emit("XNOR", (a, b))

    def const0(self) -> str:
        if self._const0 is None:
            self._const0 = self.emit("XOR", (self.anchor, self.anchor))
        return self._const0

    def and_tree(self, terms: list[str], out: str | None = None) -> str:
        if not terms:
            raise ValueError("empty AND")
        if len(terms) == 1:
            return terms[0] if out is None else self.emit("BUFF", terms, out)
        return self.emit("AND", terms, out)

    def or_tree(self, terms: list[str], out: str | None = None) -> str:
        if not terms:
            return self.const0() if out is None else self.emit("BUFF", (self.const0(),), out)
        if len(terms) == 1:
            return terms[0] if out is None else self.emit("BUFF", terms, out)
        return self.emit("OR", terms, out)

    def mux(self, sel: str, a: str, b: str, out: str | None = None) -> str:
        """sel ? a : b"""
        return self.or2(self.and2(sel, a), self.and2(self.inv(sel), b), out)

    def fold_xnor(self, nets: list[str]) -> str:
        cur = nets[0]
        for x in nets[1:]:
            cur = self.xnor2(cur, x)
        return cur

    def eq_const(self, nets: list[str], value: int) -> str:
        terms = [net if (value >> k) & 1 else self.inv(net) for k, net in enumerate(nets)]
        return self.and_tree(terms)

    def eq_nets(self, xs: list[str], ys: list[str]) -> str:
        return self.and_tree([self.xnor2(a, b) for a, b in zip(xs, ys)])

    def incr(self, nets: list[str]) -> list[str]:
        """nets + 1 modulo 2**len(nets), LSB first."""
        out = [self.inv(nets[0])]
        carry = nets[0]
        for k in range(1, len(nets)):
            out.append(self.xor2(nets[k], carry))
            if k < len(nets) - 1:
                carry = self.and2(nets[k], carry)
        return out


def encrypt(nl: Netlist, cfg: EncryptConfig) -> EncryptedDesign:
    """Encrypt a netlist.  Deterministic given ``cfg.master_seed``.

    The returned design has the same primary inputs and outputs as ``nl``;
    all controller state is added as extra flip-flops.  See the module
    docstring for the controller's behavior.
    """
    cfg.validate()
    n_in = len(nl.inputs)
    if n_in == 0:
        raise ValueError(f"netlist '{nl.name}' has no primary inputs")
    taps = cfg.resolved_taps()
    rng_fsm = random.Random(f"{cfg.master_seed}/fsm")
    rng_sites = random.Random(f"{cfg.master_seed}/sites")
    prefix = _fresh_prefix(nl)

    fsm = build_enc_fsm(n_in, cfg, rng_fsm)
    core, sites = insert_xor(nl, cfg.enc_out_width, cfg.coverage, rng_sites, prefix=prefix)

    n = cfg.lfsr_width
    c = cfg.key_len
    chains = 1 << cfg.sbj_bits
    p_bits = max(1, (c - 1).bit_length())

    f = _NetFactory(prefix, list(core.gates), anchor=nl.inputs[0])
    x = list(nl.inputs)
    lfsr_q = [f"{prefix}lfsr{j}" for j in range(n)]
    cnt_q = [f"{prefix}cnt{j}" for j in range(n)]
    tbj_q = [f"{prefix}tbj{j}" for j in range(n)]
    auth_q = f"{prefix}auth"
    s_q = [f"{prefix}s{j}" for j in range(cfg.sbj_bits)]
    p_q = [f"{prefix}p{j}" for j in range(p_bits)]
    sh_q = [f"{prefix}sh{k}" for k in range(len(nl.dffs))]

    not_auth = f.inv(auth_q)

    # free-running PRNG: shift up, fold-XNOR feedback into bit 0
    fb = f.fold_xnor([lfsr_q[t - 1] for t in taps])
    lfsr_next = [fb] + lfsr_q[:-1]

    # decode (chain, progress) and compare the inputs against the key table
    dec_s = [f.eq_const(s_q, v) for v in range(chains)]
    dec_p = [f.eq_const(p_q, u) for u in range(c)]
    pair = [[f.and2(dec_s[v], dec_p[u]) for u in range(c)] for v in range(chains)]
    match_terms = []
    for v in range(chains):
        for u in range(c):
            match_terms.append(f.and2(pair[v][u], f.eq_const(x, fsm.key_table[v][u])))
    match = f.or_tree(match_terms)
    last = dec_p[c - 1]
    m_na = f.and2(not_auth, match)
    enter = f.and2(m_na, last, out=f"{prefix}enter")
    adv = f.and2(m_na, f.inv(last))

    # functional-mode countdown: back-jump when cnt + 1 reaches the period
    cnt_p1 = f.incr(cnt_q)
    bj = f.and2(auth_q, f.eq_nets(cnt_p1, tbj_q), out=f"{prefix}backjump")

    # corruption word: table lookup while encrypted, all-zeros while functional
    used_bits = sorted({s.enc_bit for s in sites})
    for j in used_bits:
        terms = [
            pair[v][u]
            for v in range(chains)
            for u in range(c)
            if (fsm.enc_out_table[v][u] >> j) & 1
        ]
        word = f.or_tree(terms) if terms else f.const0()
        f.and2(not_auth, word, out=f"{prefix}corrupt{j}")

    new_dffs: list[tuple[str, str]] = []
    # design flip-flops: restored from shadow at the authentication edge
    not_enter = f.inv(enter)
    for k, (q, d) in enumerate(nl.dffs):
        new_dffs.append((q, f.or2(f.and2(enter, sh_q[k]), f.and2(not_enter, d))))
    # shadow: follow the design while functional, hold while encrypted
    for k, (_q, d) in enumerate(nl.dffs):
        new_dffs.append((sh_q[k], f.or2(f.and2(auth_q, d), f.and2(not_auth, sh_q[k]))))
    for j in range(n):
        new_dffs.append((lfsr_q[j], lfsr_next[j]))
    # countdown: clear at the authentication edge, count while functional
    for j in range(n):
        new_dffs.append((cnt_q[j], f.and2(not_enter, f.mux(auth_q, cnt_p1[j], cnt_q[j]))))
    # back-jump period: load max(PRNG, 1) at the authentication edge
    if n == 1:
        prng_zero = f.inv(lfsr_next[0])
    else:
        prng_zero = f.emit("NOR", tuple(lfsr_next))
    load0 = f.or2(lfsr_next[0], prng_zero)
    for j in range(n):
        ld = load0 if j == 0 else lfsr_next[j]
        new_dffs.append((tbj_q[j], f.mux(enter, ld, tbj_q[j])))
    # mode flag
    new_dffs.append((auth_q, f.or2(enter, f.and2(auth_q, f.inv(bj)))))
    # chain selector: low bits of the PRNG at the back-jump edge
    for j in range(cfg.sbj_bits):
        new_dffs.append((s_q[j], f.mux(bj, lfsr_next[j], s_q[j])))
    # progress: advance on a partial match, clear otherwise
    p_p1 = f.incr(p_q)
    for j in range(p_bits):
        new_dffs.append((p_q[j], f.and2(adv, p_p1[j])))

    netlist = Netlist(
        name=f"{nl.name}_enc",
        inputs=nl.inputs,
        outputs=nl.outputs,
        gates=tuple(f.gates),
        dffs=tuple(new_dffs),
    )
    schedule = KeySchedule(
        circuit=nl.name,
        lfsr_width=n,
        lfsr_taps=taps,
        reset_seed=0,
        key_len=c,
        sbj_bits=cfg.sbj_bits,
        n_inputs=n_in,
        key_table=fsm.key_table,
        master_seed=cfg.master_seed,
        config=cfg,
    )
    report = EncryptReport(
        prefix=prefix,
        sites=sites,
        requested_coverage=cfg.coverage,
        achieved_coverage=len(sites) / len(nl.gates),
        added_gates=len(netlist.gates) - len(nl.gates),
        added_dffs=len(netlist.dffs) - len(nl.dffs),
    )
    return EncryptedDesign(netlist=netlist, schedule=schedule, report=report)
