"""External SMT solver sessions over SMT-LIB 2 pipes, and counter-models."""
from __future__ import annotations

import os
import queue
import shutil
import subprocess
import threading
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Union

from .frontend.ast import Specification
from .interpreter import format_value
from .obligations import ProofObligation, goal_symbol, hyp_symbol

SOLVER_ENV = "STREAMVERIFY_SOLVER"
DEFAULT_LOGIC = "QF_UFNIRA"


@dataclass(frozen=True)
class SolverConfig:
    executable: str = ""
    args: tuple[str, ...] | None = None
    timeout: float = 60.0
    logic: str = DEFAULT_LOGIC

    def __post_init__(self):
        if self.timeout <= 0:
            raise ValueError("timeout must be positive")

    @property
    def command(self) -> list[str]:
        exe = self.executable or os.environ.get(SOLVER_ENV) or "z3"
        args = self.args
        if args is None:
            args = ("-in", "-smt2") if os.path.basename(exe).startswith("z3") else ()
        return [exe, *args]

    def resolve(self) -> str:
        exe = self.command[0]
        found = shutil.which(exe)
        if found is None:
            raise FileNotFoundError(f"SMT solver executable not found: {exe}")
        return found


# ---------------------------------------------------------------- s-expressions

class Symbol(str):
    """A (de-quoted) SMT-LIB symbol, distinct from string literals."""


SExpr = Union[Symbol, str, list]


class SExprError(ValueError):
    pass


_OPEN, _CLOSE = object(), object()


def _tokens(text: str):
    i, n = 0, len(text)
    while i < n:
        c = text[i]
        if c.isspace():
            i += 1
        elif c == ";":
            while i < n and text[i] != "\n":
                i += 1
        elif c == "(":
            yield _OPEN
            i += 1
        elif c == ")":
            yield _CLOSE
            i += 1
        elif c == "|":
            j = text.find("|", i + 1)
            if j < 0:
                raise SExprError("unterminated quoted symbol")
            yield Symbol(text[i + 1:j])
            i = j + 1
        elif c == '"':
            j = i + 1
            buf = []
            while True:
                if j >= n:
                    raise SExprError("unterminated string literal")
                if text[j] == '"':
                    if j + 1 < n and text[j + 1] == '"':
                        buf.append('"')
                        j += 2
                        continue
                    break
                buf.append(text[j])
                j += 1
            yield "".join(buf)  # plain str: a string literal
            i = j + 1
        else:
            j = i
            while j < n and not text[j].isspace() and text[j] not in '()|";':
                j += 1
            yield Symbol(text[i:j])
            i = j


def parse_sexprs(text: str) -> list[SExpr]:
    stack: list[list] = [[]]
    for tok in _tokens(text):
        if tok is _OPEN:
            stack.append([])
        elif tok is _CLOSE:
            if len(stack) == 1:
                raise SExprError("unbalanced ')'")
            done = stack.pop()
            stack[-1].append(done)
        else:
            stack[-1].append(tok)
    if len(stack) != 1:
        raise SExprError("unbalanced '('")
    return stack[0]


def paren_balance(text: str) -> int:
    """Open-minus-close parentheses outside quoted symbols and strings."""
    depth, quoted, string = 0, False, False
    for c in text:
        if quoted:
            quoted = c != "|"
        elif string:
            string = c != '"'
        elif c == "|":
            quoted = True
        elif c == '"':
            string = True
        elif c == "(":
            depth += 1
        elif c == ")":
            depth -= 1
    return depth


@dataclass(frozen=True)
class AlgebraicValue:
    """A model value the solver reports symbolically (e.g. an irrational root)."""
    text: str

    def __str__(self) -> str:
        return self.text


def _unparse(e: SExpr) -> str:
    if isinstance(e, list):
        return "(" + " ".join(_unparse(x) for x in e) + ")"
    return str(e)


def model_value(e: SExpr):
    """Convert a model term to bool, int, Fraction or :class:`AlgebraicValue`."""
    if isinstance(e, str):
        if e == "true":
            return True
        if e == "false":
            return False
        try:
            return int(e)
        except ValueError:
            pass
        try:
            return Fraction(e)
        except ValueError:
            return AlgebraicValue(str(e))
    if isinstance(e, list) and e:
        head = e[0]
        if head == "-" and len(e) == 2:
            v = model_value(e[1])
            return -v if isinstance(v, (int, Fraction)) and not isinstance(v, bool) else AlgebraicValue(_unparse(e))
        if head == "/" and len(e) == 3:
            a, b = model_value(e[1]), model_value(e[2])
            if all(isinstance(x, (int, Fraction)) and not isinstance(x, bool) for x in (a, b)) and b != 0:
                return Fraction(a) / Fraction(b)
    return AlgebraicValue(_unparse(e))


# ---------------------------------------------------------------- counter-models

HYPOTHESIS = "hypothesis"
EQUATION = "equation"
UNCONSTRAINED = "unconstrained"
INPUT = "input"

LEGEND_HYPOTHESIS = "value assumed by induction hypothesis; counterexample may be spurious"


@dataclass(frozen=True)
class CounterModel:
    kind: str
    name: str
    N: int
    failed: tuple[str, ...]               # clause labels whose implication fails
    goal_positions: tuple[int, ...]       # failing goal positions
    values: dict[tuple[str, int], object]
    flags: dict[tuple[str, int], str]
    assumed_positions: tuple[int, ...] = ()
    defaulted: frozenset[tuple[str, int]] = frozenset()

    def value(self, stream: str, position: int):
        return self.values[stream, position]

    def hypothesis_cells(self, stream: str | None = None) -> list[tuple[str, int]]:
        return sorted(k for k, f in self.flags.items() if f == HYPOTHESIS and (stream is None or k[0] == stream))


def _sort_default(sort: str):
    return {"Bool": False, "Int": 0}.get(sort, Fraction(0))


def build_counter_model(ob: ProofObligation, assignment: dict[str, object]) -> CounterModel:
    """Counter-model over the obligation's universe from a solver model.

    ``assignment`` maps de-quoted symbol names to values and includes the
    per-clause indicator constants.
    """
    uni = ob.universe
    spec = uni.spec
    values, flags, defaulted = {}, {}, set()
    params = ob.params
    inputs = set(spec.input_names)
    for (name, j), sym in uni.symbols.items():
        key = sym.strip("|")
        if key in assignment:
            values[name, j] = assignment[key]
        else:
            values[name, j] = _sort_default(uni.sorts[sym])
            defaulted.add((name, j))
        if name in inputs:
            flag = INPUT
        elif params is None:
            flag = EQUATION
        elif j in params.asserted:
            flag = HYPOTHESIS
        elif j in params.streams:
            flag = EQUATION
        else:
            flag = UNCONSTRAINED
        if (name, j) in defaulted and flag != INPUT:
            flag = UNCONSTRAINED
        flags[name, j] = flag
    failed, goals = [], set()
    for k, clause in enumerate(ob.clauses):
        if assignment.get(hyp_symbol(k).strip("|")) is not True:
            continue
        bad = [p for p, _ in clause.goals if assignment.get(goal_symbol(k, p).strip("|")) is False]
        if bad:
            failed.append(clause.label)
            goals.update(p for p in bad if p >= 0)
    return CounterModel(
        ob.kind, ob.name, ob.N, tuple(failed), tuple(sorted(goals)), values, flags,
        tuple(sorted(params.assumed)) if params else (), frozenset(defaulted),
    )


def _cell(v) -> str:
    if isinstance(v, AlgebraicValue):
        return str(v)
    return format_value(v)


def render_counterexample(cm: CounterModel, spec: Specification) -> str:
    """Position-by-position table, inputs first; deterministic."""
    names = spec.input_names + spec.output_names
    header = ["pos"] + names
    rows = []
    for j in range(cm.N + 1):
        mark = ">" if j in cm.goal_positions else " "
        row = [f"{mark}{j}"]
        for name in names:
            text = _cell(cm.values[name, j])
            flag = cm.flags[name, j]
            if flag == HYPOTHESIS:
                text += " ‡"
            elif flag == UNCONSTRAINED:
                text += " ?"
            row.append(text)
        rows.append(row)
    widths = [max(len(r[c]) for r in [header] + rows) for c in range(len(header))]

    def line(r):
        return " | ".join(cell.ljust(w) for cell, w in zip(r, widths)).rstrip()

    out = [f"counterexample for {cm.name} (kind={cm.kind}, N={cm.N})"]
    if cm.failed:
        out.append("violated: " + ", ".join(cm.failed))
    out.append(line(header))
    out.append("-+-".join("-" * w for w in widths))
    out += [line(r) for r in rows]
    out.append("> goal position")
    if any(f == HYPOTHESIS for f in cm.flags.values()):
        out.append(f"‡ {LEGEND_HYPOTHESIS}")
    if any(f == UNCONSTRAINED for f in cm.flags.values()):
        out.append("? unconstrained by the obligation")
    return "\n".join(out) + "\n"


# ---------------------------------------------------------------- sessions

VALID, INVALID, UNKNOWN = "valid", "invalid", "unknown"


@dataclass
class CheckResult:
    status: str
    obligation: ProofObligation
    model: CounterModel | None = None
    reason: str = ""
    raw: str = ""
    elapsed: float = 0.0

    @property
    def valid(self) -> bool:
        return self.status == VALID


class _Session:
    def __init__(self, cfg: SolverConfig):
        cmd = cfg.command
        cmd[0] = cfg.resolve()
        self.proc = subprocess.Popen(
            cmd, stdin=subprocess.PIPE, stdout=subprocess.PIPE, stderr=subprocess.PIPE,
            text=True, encoding="utf-8", bufsize=1,
        )
        self.lines: queue.Queue = queue.Queue()
        self.transcript: list[str] = []
        threading.Thread(target=self._pump, daemon=True).start()

    def _pump(self):
        for line in self.proc.stdout:
            self.lines.put(line)
        self.lines.put(None)

    def send(self, text: str):
        self.proc.stdin.write(text if text.endswith("\n") else text + "\n")
        self.proc.stdin.flush()

    def read_response(self, deadline: float) -> str:
        """One complete response: a bare atom line or a balanced s-expression."""
        buf = ""
        while True:
            remaining = deadline - time.monotonic()
            if remaining <= 0:
                raise TimeoutError
            try:
                line = self.lines.get(timeout=remaining)
            except queue.Empty:
                raise TimeoutError from None
            if line is None:
                raise EOFError(buf)
            self.transcript.append(line)
            if not buf and not line.strip():
                continue
            buf += line
            if paren_balance(buf) <= 0:
                return buf.strip()

    def close(self):
        try:
            if self.proc.poll() is None:
                try:
                    self.send("(exit)")
                except (BrokenPipeError, OSError):
                    pass
                try:
                    self.proc.wait(timeout=1)
                except subprocess.TimeoutExpired:
                    self.proc.kill()
                    self.proc.wait()
        finally:
            for s in (self.proc.stdin, self.proc.stdout, self.proc.stderr):
                try:
                    s.close()
                except OSError:
                    pass


def _assignment(model_text: str) -> dict[str, object]:
    parsed = parse_sexprs(model_text)
    if len(parsed) != 1 or not isinstance(parsed[0], list):
        raise SExprError("model is not a single list")
    entries = parsed[0]
    if entries and entries[0] == "model":
        entries = entries[1:]
    out = {}
    for e in entries:
        if isinstance(e, list) and len(e) == 5 and e[0] == "define-fun" and e[2] == []:
            out[str(e[1])] = model_value(e[4])
    return out


def _values(text: str) -> dict[str, object]:
    parsed = parse_sexprs(text)
    if len(parsed) != 1 or not isinstance(parsed[0], list):
        raise SExprError("get-value response is not a single list")
    out = {}
    for pair in parsed[0]:
        if not (isinstance(pair, list) and len(pair) == 2):
            raise SExprError(f"malformed get-value entry {pair!r}")
        out[str(pair[0])] = model_value(pair[1])
    return out


def check(ob: ProofObligation, cfg: SolverConfig | None = None, split: bool = True) -> CheckResult:
    """Decide validity of an obligation by refuting its negation.

    Obligations with several clauses are decided clause by clause, each in
    its own session: the conjunction is valid iff every clause is, and the
    nonlinear heuristics of the solver cope far better with the pieces.
    The first invalid clause supplies the counter-model.  ``split=False``
    sends the whole conjunction in one query.
    """
    cfg = cfg or SolverConfig()
    if len(ob.clauses) <= 1 or not split:
        return _check_single(ob, cfg)
    start = time.monotonic()
    undecided: CheckResult | None = None
    raw = []
    for k in range(len(ob.clauses)):
        part = _check_single(ob.restricted(k), cfg)
        raw.append(part.raw)
        if part.status == INVALID:
            part.obligation = ob
            part.elapsed = time.monotonic() - start
            part.raw = "".join(raw)
            return part
        if part.status == UNKNOWN and undecided is None:
            undecided = part
    elapsed = time.monotonic() - start
    if undecided is not None:
        label = undecided.obligation.clauses[0].label
        return CheckResult(UNKNOWN, ob, reason=f"clause {label}: {undecided.reason}",
                           raw="".join(raw), elapsed=elapsed)
    return CheckResult(VALID, ob, raw="".join(raw), elapsed=elapsed)


def _check_single(ob: ProofObligation, cfg: SolverConfig) -> CheckResult:
    start = time.monotonic()
    deadline = start + cfg.timeout
    try:
        session = _Session(cfg)
    except (OSError, FileNotFoundError) as exc:
        return CheckResult(UNKNOWN, ob, reason=f"cannot launch solver: {exc}")
    try:
        session.send(ob.script(cfg.logic))
        answer = session.read_response(deadline)
        if answer.startswith("(error"):
            return CheckResult(UNKNOWN, ob, reason=f"solver error: {answer}", raw="".join(session.transcript),
                               elapsed=time.monotonic() - start)
        if answer == "unsat":
            return CheckResult(VALID, ob, raw="".join(session.transcript), elapsed=time.monotonic() - start)
        if answer != "sat":
            return CheckResult(UNKNOWN, ob, reason=f"solver answered {answer!r}",
                               raw="".join(session.transcript), elapsed=time.monotonic() - start)
        session.send("(get-model)")
        model_text = session.read_response(deadline)
        if model_text.startswith("(error"):
            raise SExprError(model_text)
        assignment = _assignment(model_text)
        cm = build_counter_model(ob, assignment)
        return CheckResult(INVALID, ob, cm, raw="".join(session.transcript), elapsed=time.monotonic() - start)
    except TimeoutError:
        return CheckResult(UNKNOWN, ob, reason=f"timeout after {cfg.timeout:g}s",
                           raw="".join(session.transcript), elapsed=time.monotonic() - start)
    except (EOFError, BrokenPipeError, OSError) as exc:
        err = ""
        try:
            err = session.proc.stderr.read() if session.proc.poll() is not None else ""
        except (OSError, ValueError):
            pass
        return CheckResult(UNKNOWN, ob, reason=f"solver terminated unexpectedly {err.strip()}".strip(),
                           raw="".join(session.transcript) + str(exc), elapsed=time.monotonic() - start)
    except (SExprError, ValueError) as exc:
        return CheckResult(UNKNOWN, ob, reason=f"unparseable solver output: {exc}",
                           raw="".join(session.transcript), elapsed=time.monotonic() - start)
    finally:
        session.close()


class QueryError(RuntimeError):
    pass


def query_values(script: str, terms: list[str], cfg: SolverConfig | None = None) -> list[object]:
    """Run a satisfiable script and return the model values of ``terms`` in order.

    ``script`` must end in ``(check-sat)``; anything but ``sat`` raises.
    """
    cfg = cfg or SolverConfig()
    deadline = time.monotonic() + cfg.timeout
    try:
        session = _Session(cfg)
    except (OSError, FileNotFoundError) as exc:
        raise QueryError(f"cannot launch solver: {exc}") from exc
    try:
        session.send(script)
        answer = session.read_response(deadline)
        if answer != "sat":
            raise QueryError(f"expected sat, solver answered {answer!r}")
        if not terms:
            return []
        session.send(f"(get-value ({' '.join(terms)}))")
        text = session.read_response(deadline)
        parsed = parse_sexprs(text)
        if len(parsed) != 1 or not isinstance(parsed[0], list) or len(parsed[0]) != len(terms):
            raise QueryError(f"malformed get-value response: {text[:200]}")
        return [model_value(pair[1]) for pair in parsed[0]]
    except TimeoutError:
        raise QueryError(f"timeout after {cfg.timeout:g}s") from None
    except (EOFError, OSError, SExprError) as exc:
        raise QueryError(f"solver protocol failure: {exc}") from exc
    finally:
        session.close()
