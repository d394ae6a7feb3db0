"""Regular languages over the mode alphabet.

Parses mode regexes, compiles them to minimal total DFAs (Thompson NFA,
subset construction, partition refinement) and derives each traveler's
candidate mode set and language set.

Grammar (precedence postfix > concatenation > alternation):

    alternation := concat ('|' concat)*
    concat      := postfix+
    postfix     := atom ('*' | '+')?
    atom        := SYMBOL | '(' alternation ')'
"""

import logging
from collections import deque
from dataclasses import dataclass
from pathlib import Path

from pydantic import BaseModel, ConfigDict, PrivateAttr, model_validator

from models.network import ALPHABET, ModeLabel
from models.traveler import TravelerProfile
from utils.errors import EmptyLanguage, RegexSyntaxError
from utils.helpers import METERS_PER_MILE

logger = logging.getLogger(__name__)

WALK_SOLE_MODE_LIMIT_M = 1.0 * METERS_PER_MILE
CYCLE_LIMIT_M = 3.0 * METERS_PER_MILE

SYMBOLS = "".join(m.value for m in ALPHABET)
SYMBOL_INDEX = {m.value: i for i, m in enumerate(ALPHABET)}


# ===== SYNTAX TREE =====

@dataclass(frozen=True)
class Symbol:
    value: str


@dataclass(frozen=True)
class Concat:
    items: tuple["ModeRegex", ...]


@dataclass(frozen=True)
class Alt:
    options: tuple["ModeRegex", ...]


@dataclass(frozen=True)
class Star:
    inner: "ModeRegex"


@dataclass(frozen=True)
class Plus:
    inner: "ModeRegex"


ModeRegex = Symbol | Concat | Alt | Star | Plus


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0

    def _peek(self) -> str | None:
        return self.text[self.pos] if self.pos < len(self.text) else None

    def _fail(self, reason: str) -> RegexSyntaxError:
        return RegexSyntaxError(self.pos, reason, self.text)

    def parse(self) -> ModeRegex:
        if not self.text:
            raise self._fail("empty expression")
        node = self._alternation()
        if self.pos != len(self.text):
            raise self._fail(f"unexpected {self._peek()!r}")
        return node

    def _alternation(self) -> ModeRegex:
        options = [self._concat()]
        while self._peek() == "|":
            self.pos += 1
            options.append(self._concat())
        return options[0] if len(options) == 1 else Alt(tuple(options))

    def _concat(self) -> ModeRegex:
        items = []
        while (ch := self._peek()) is not None and ch not in "|)":
            items.append(self._postfix())
        if not items:
            raise self._fail("expected a mode symbol or '('")
        return items[0] if len(items) == 1 else Concat(tuple(items))

    def _postfix(self) -> ModeRegex:
        node = self._atom()
        ch = self._peek()
        if ch == "*":
            self.pos += 1
            node = Star(node)
        elif ch == "+":
            self.pos += 1
            node = Plus(node)
        if (ch := self._peek()) is not None and ch in "*+":
            raise self._fail(f"repeated operator {ch!r}")
        return node

    def _atom(self) -> ModeRegex:
        ch = self._peek()
        if ch is None:
            raise self._fail("unexpected end of expression")
        if ch == "(":
            self.pos += 1
            node = self._alternation()
            if self._peek() != ")":
                raise self._fail("missing ')'")
            self.pos += 1
            return node
        if ch in SYMBOLS:
            self.pos += 1
            return Symbol(ch)
        if ch in "*+":
            raise self._fail(f"operator {ch!r} has nothing to repeat")
        raise self._fail(f"{ch!r} is not a mode symbol")


def parse_regex(text: str) -> ModeRegex:
    """Parse a mode regex such as ``w*(b|s)+w*``."""
    return _Parser(text.strip()).parse()


# ===== AUTOMATA =====

@dataclass
class Nfa:
    """Thompson NFA; transitions[state] maps a symbol (None = ε) to targets."""
    transitions: list[dict[str | None, set[int]]]
    start: int
    accept: int

    def new_state(self) -> int:
        self.transitions.append({})
        return len(self.transitions) - 1

    def add(self, src: int, symbol: str | None, dst: int) -> None:
        self.transitions[src].setdefault(symbol, set()).add(dst)


def thompson(regex: ModeRegex) -> Nfa:
    """Thompson construction: one start and one accepting state per fragment."""
    nfa = Nfa(transitions=[], start=0, accept=0)

    def build(node: ModeRegex) -> tuple[int, int]:
        if isinstance(node, Symbol):
            s, f = nfa.new_state(), nfa.new_state()
            nfa.add(s, node.value, f)
            return s, f
        if isinstance(node, Concat):
            first_start, prev_end = build(node.items[0])
            for item in node.items[1:]:
                s, f = build(item)
                nfa.add(prev_end, None, s)
                prev_end = f
            return first_start, prev_end
        if isinstance(node, Alt):
            s, f = nfa.new_state(), nfa.new_state()
            for option in node.options:
                os_, of = build(option)
                nfa.add(s, None, os_)
                nfa.add(of, None, f)
            return s, f
        s, f = nfa.new_state(), nfa.new_state()
        inner_s, inner_f = build(node.inner)
        nfa.add(s, None, inner_s)
        nfa.add(inner_f, None, f)
        nfa.add(inner_f, None, inner_s)
        if isinstance(node, Star):
            nfa.add(s, None, f)
        return s, f

    nfa.start, nfa.accept = build(regex)
    return nfa


def _closure(nfa: Nfa, states: frozenset[int]) -> frozenset[int]:
    seen = set(states)
    stack = list(states)
    while stack:
        for nxt in nfa.transitions[stack.pop()].get(None, ()):
            if nxt not in seen:
                seen.add(nxt)
                stack.append(nxt)
    return frozenset(seen)


class ModeDfa(BaseModel):
    """Total DFA over the 7-symbol alphabet; rows of `transitions` follow ALPHABET order."""
    model_config = ConfigDict(frozen=True)

    pattern: str = ""
    transitions: tuple[tuple[int, ...], ...]
    start: int = 0
    accepting: frozenset[int]

    @property
    def n_states(self) -> int:
        return len(self.transitions)

    def step(self, state: int, symbol: str | ModeLabel) -> int:
        key = symbol.value if isinstance(symbol, ModeLabel) else symbol
        return self.transitions[state][SYMBOL_INDEX[key]]

    _dead: frozenset[int] = PrivateAttr(default=frozenset())

    @model_validator(mode="after")
    def _find_dead(self) -> "ModeDfa":
        live = set(self.accepting)
        changed = True
        while changed:
            changed = False
            for s, row in enumerate(self.transitions):
                if s not in live and any(t in live for t in row):
                    live.add(s)
                    changed = True
        self._dead = frozenset(range(self.n_states)) - live
        return self

    def is_dead(self, state: int) -> bool:
        """True when no accepting state is reachable from `state`."""
        return state in self._dead

    def accepts(self, word: str) -> bool:
        state = self.start
        for ch in word:
            if ch not in SYMBOL_INDEX:
                return False
            state = self.transitions[state][SYMBOL_INDEX[ch]]
        return state in self.accepting


def subset_construction(nfa: Nfa, pattern: str = "") -> ModeDfa:
    """Determinize; the empty subset becomes the dead state."""
    start = _closure(nfa, frozenset({nfa.start}))
    index: dict[frozenset[int], int] = {start: 0}
    rows: list[list[int]] = []
    queue = deque([start])
    while queue:
        current = queue.popleft()
        row = []
        for sym in SYMBOLS:
            moved = frozenset(t for s in current for t in nfa.transitions[s].get(sym, ()))
            target = _closure(nfa, moved) if moved else frozenset()
            if target not in index:
                index[target] = len(index)
                queue.append(target)
            row.append(index[target])
        rows.append(row)
    accepting = frozenset(i for subset, i in index.items() if nfa.accept in subset)
    return ModeDfa(pattern=pattern, transitions=tuple(tuple(r) for r in rows), start=0, accepting=accepting)


def minimize(dfa: ModeDfa) -> ModeDfa:
    """Moore partition refinement, then renumber states in BFS order from the start."""
    n = dfa.n_states
    block = [1 if s in dfa.accepting else 0 for s in range(n)]
    while True:
        signatures: dict[tuple[int, ...], int] = {}
        refined = []
        for s in range(n):
            sig = (block[s], *(block[t] for t in dfa.transitions[s]))
            refined.append(signatures.setdefault(sig, len(signatures)))
        if len(signatures) == len(set(block)):
            break
        block = refined

    order: dict[int, int] = {block[dfa.start]: 0}
    representative = {}
    for s in range(n):
        representative.setdefault(block[s], s)
    queue = deque([block[dfa.start]])
    rows: dict[int, tuple[int, ...]] = {}
    while queue:
        b = queue.popleft()
        row = []
        for t in dfa.transitions[representative[b]]:
            tb = block[t]
            if tb not in order:
                order[tb] = len(order)
                queue.append(tb)
            row.append(order[tb])
        rows[order[b]] = tuple(row)
    accepting = frozenset(order[block[s]] for s in dfa.accepting if block[s] in order)
    return ModeDfa(
        pattern=dfa.pattern,
        transitions=tuple(rows[i] for i in range(len(rows))),
        start=0,
        accepting=accepting,
    )


def compile_dfa(regex: ModeRegex | str, pattern: str | None = None) -> ModeDfa:
    """Compile a regex (or its text) into a minimal total DFA."""
    if isinstance(regex, str):
        pattern = regex.strip() if pattern is None else pattern
        regex = parse_regex(regex)
    dfa = minimize(subset_construction(thompson(regex), pattern or ""))
    logger.debug(f"Compiled {pattern!r} to a {dfa.n_states}-state DFA")
    return dfa


def accepts(word: str, dfa: ModeDfa) -> bool:
    return dfa.accepts(word)


# ===== CANDIDATE MODES AND LANGUAGES =====

class CandidateModeSet(BaseModel):
    """M_p; walk is always present as an access/egress symbol."""
    model_config = ConfigDict(frozen=True)

    modes: frozenset[ModeLabel]
    walk_sole_mode: bool

    def ordered(self) -> list[ModeLabel]:
        return [m for m in ALPHABET if m in self.modes]


class LanguageElement(BaseModel):
    """One element of L_p: a regex with its compiled DFA."""
    model_config = ConfigDict(frozen=True)

    pattern: str
    dfa: ModeDfa


class LanguageSet(BaseModel):
    """L_p, ordered walk, cycle, bus, subway."""
    model_config = ConfigDict(frozen=True)

    elements: tuple[LanguageElement, ...]

    @property
    def patterns(self) -> list[str]:
        return [e.pattern for e in self.elements]


def candidate_modes(profile: TravelerProfile, trip_distance: float) -> CandidateModeSet:
    """Modes a traveler can be offered for a trip of `trip_distance` meters."""
    modes = {ModeLabel.WALK, ModeLabel.BUS, ModeLabel.SUBWAY}
    if profile.owns_bicycle and trip_distance < CYCLE_LIMIT_M:
        modes.add(ModeLabel.CYCLE)
    return CandidateModeSet(modes=frozenset(modes), walk_sole_mode=trip_distance < WALK_SOLE_MODE_LIMIT_M)


_COMPILED: dict[str, ModeDfa] = {}


def _element(pattern: str) -> LanguageElement:
    dfa = _COMPILED.get(pattern)
    if dfa is None:
        dfa = _COMPILED[pattern] = compile_dfa(pattern)
    return LanguageElement(pattern=pattern, dfa=dfa)


def language_set(m_p: CandidateModeSet) -> LanguageSet:
    """L_p derived from M_p."""
    patterns = []
    if m_p.walk_sole_mode:
        patterns.append("w*")
    if ModeLabel.CYCLE in m_p.modes:
        patterns.append("c+")
    if ModeLabel.BUS in m_p.modes:
        patterns.append("w*b+w*")
    if ModeLabel.SUBWAY in m_p.modes:
        patterns.append("w*s+w*")
    if not patterns:
        raise EmptyLanguage(f"no language element is eligible for modes {sorted(m.value for m in m_p.modes)}")
    return LanguageSet(elements=tuple(_element(p) for p in patterns))


def language_set_from_patterns(patterns: list[str]) -> LanguageSet:
    """L_p used verbatim, as given by a languages file."""
    if not patterns:
        raise EmptyLanguage("language override is empty")
    return LanguageSet(elements=tuple(_element(p.strip()) for p in patterns))


def load_languages_file(path: Path) -> list[str]:
    """One regex per line; blank lines and '#' comments ignored."""
    lines = path.read_text(encoding="utf-8").splitlines()
    patterns = [ln.strip() for ln in lines if ln.strip() and not ln.lstrip().startswith("#")]
    for p in patterns:
        parse_regex(p)
    logger.info(f"Loaded {len(patterns)} language overrides from {path}")
    return patterns
