"""Expression evaluation ``σ ⊢ e ↓ (v, σ')`` and the builtin library."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Callable, Dict, Mapping, Optional, Tuple

from .syntax import UNIT, App, Val, Var, cache_hash, closed, value_tag, value_text


class EvalError(Exception):
    pass


class UnknownBuiltin(EvalError):
    pass


class ArityError(EvalError):
    pass


class TypeErrorAtRuntime(EvalError):
    pass


class OpenExpression(EvalError):
    pass


class DuplicateBuiltin(EvalError):
    pass


@cache_hash
@dataclass(frozen=True)
class ProcState:
    """Persistent process state: a sorted key/value store and a counter."""

    store: Tuple[Tuple[str, Any], ...] = ()
    counter: int = 0

    @staticmethod
    def of(counter=0, **items) -> "ProcState":
        return ProcState(tuple(sorted(items.items())), counter)

    def get(self, key, default=None):
        for k, v in self.store:
            if k == key:
                return v
        return default

    def set(self, key, value) -> "ProcState":
        d = dict(self.store)
        d[key] = value
        return ProcState(tuple(sorted(d.items())), self.counter)

    def append(self, key, value) -> "ProcState":
        return self.set(key, tuple(self.get(key, ())) + (value,))

    def tick(self) -> Tuple[int, "ProcState"]:
        return self.counter, ProcState(self.store, self.counter + 1)

    def as_dict(self) -> Dict[str, Any]:
        return dict(self.store)


Fn = Callable[[ProcState, tuple], Tuple[Any, ProcState]]


@dataclass(frozen=True)
class Builtin:
    name: str
    arity: Optional[int]
    fn: Fn
    pure: bool = False
    # effects of two calls at one process commute (order is not observable)
    commutes: bool = False


def _int(name, v):
    if isinstance(v, bool) or not isinstance(v, int):
        raise TypeErrorAtRuntime(f"{name} expects an integer, got {value_text(v)}")
    return v


def _arith(name, op):
    def fn(s, args):
        return op(_int(name, args[0]), _int(name, args[1])), s
    return Builtin(name, 2, fn, pure=True)


def _eq(s, args):
    return value_tag(args[0]) == value_tag(args[1]), s


def _neq(s, args):
    return value_tag(args[0]) != value_tag(args[1]), s


def _concat(s, args):
    return "".join(a if isinstance(a, str) else value_text(a) for a in args), s


def _load(s, args):
    return s.get(_skey(args[0])), s


def _store(s, args):
    return UNIT, s.set(_skey(args[0]), args[1])


def _skey(v):
    return v if isinstance(v, str) else value_text(v)


def _produce(s, args):
    return s.tick()


def _consume(s, args):
    # a multiset: consumption order is not observable
    items = tuple(s.get("consumed", ())) + (args[0],)
    return UNIT, s.set("consumed", tuple(sorted(items, key=value_tag)))


def _sell(s, args):
    stock = s.get("stock", 0)
    if isinstance(stock, int) and stock > 0:
        return args[0], s.set("stock", stock - 1)
    return None, s


def _items_left(s, args):
    n = s.get("remaining", 0)
    return n, s.set("remaining", max(0, n - 1))


def _tagged(tag):
    def fn(s, args):
        n, s2 = s.tick()
        return f"{tag}#{n}", s2
    return fn


def _logger(key):
    def fn(s, args):
        return UNIT, s.append(key, args[0])
    return fn


def _pure1(name, f):
    return Builtin(name, 1, lambda s, a: (f(_int(name, a[0])), s), pure=True)


def _standard() -> Dict[str, Builtin]:
    b = [
        _arith("+", lambda x, y: x + y),
        _arith("-", lambda x, y: x - y),
        _arith("*", lambda x, y: x * y),
        _arith("<", lambda x, y: x < y),
        _arith(">", lambda x, y: x > y),
        _arith("<=", lambda x, y: x <= y),
        _arith(">=", lambda x, y: x >= y),
        Builtin("==", 2, _eq, pure=True),
        Builtin("!=", 2, _neq, pure=True),
        Builtin("not", 1, lambda s, a: (not _bool("not", a[0]), s), pure=True),
        Builtin("concat", None, _concat, pure=True),
        Builtin("id", 1, lambda s, a: (a[0], s), pure=True),
        Builtin("load", 1, _load),
        Builtin("store", 2, _store),
        Builtin("produce", 0, _produce),
        Builtin("consume", 1, _consume, commutes=True),
        Builtin("sell", 1, _sell),
        Builtin("itemsLeft", 0, _items_left),
        Builtin("getText", 0, _tagged("text")),
        Builtin("getKey", 0, _tagged("key")),
        Builtin("display", 1, _logger("display")),
        Builtin("decrypt", 1, _logger("decrypt")),
        _pure1("transform", lambda x: 2 * x + 1),
        _pure1("process", lambda x: x + 7),
        _pure1("compute", lambda x: x * x),
    ]
    return {x.name: x for x in b}


def _bool(name, v):
    if not isinstance(v, bool):
        raise TypeErrorAtRuntime(f"{name} expects a boolean, got {value_text(v)}")
    return v


STANDARD = _standard()


def register_builtins(extra: Optional[Mapping[str, Builtin]] = None) -> Dict[str, Builtin]:
    """Standard registry, optionally extended with extra builtins."""
    reg = dict(STANDARD)
    for name, b in (extra or {}).items():
        if name in reg:
            raise DuplicateBuiltin(name)
        reg[name] = b
    return reg


def evaluate(state: ProcState, e, builtins: Optional[Mapping[str, Builtin]] = None):
    """Innermost-leftmost evaluation; returns ``(value, state')``."""
    reg = STANDARD if builtins is None else builtins
    if isinstance(e, Val):
        return e.value, state
    if isinstance(e, Var):
        raise OpenExpression(f"free variable {e.name}")
    vals = []
    for a in e.args:
        v, state = evaluate(state, a, reg)
        vals.append(v)
    b = reg.get(e.fn)
    if b is None:
        raise UnknownBuiltin(e.fn)
    if b.arity is not None and b.arity != len(vals):
        raise ArityError(f"{e.fn} takes {b.arity} arguments, got {len(vals)}")
    return b.fn(state, tuple(vals))


eval = evaluate  # noqa: A001 - the judgment is called eval


def is_pure(e, builtins=None) -> bool:
    reg = STANDARD if builtins is None else builtins
    if isinstance(e, App):
        b = reg.get(e.fn)
        return b is not None and b.pure and all(is_pure(a, reg) for a in e.args)
    return True


# ---------------------------------------------------------------- scenarios


SCENARIOS = ("buyitem", "streamit", "forwarding", "producers", "procx", "default")


def scenario(name: str = "default", processes=(), items_left: int = 1) -> Dict[str, ProcState]:
    """Initial per-process states for a named preset; unknown processes start empty."""
    presets: Dict[str, ProcState] = {}
    if name == "buyitem":
        presets = {"seller": ProcState.of(stock=1)}
    elif name == "streamit":
        presets = {"p1": ProcState.of(100, remaining=items_left),
                   "p2": ProcState.of(200, remaining=items_left)}
    elif name == "producers":
        presets = {"p1": ProcState.of(10), "p2": ProcState.of(20)}
    elif name == "procx":
        presets = {"p": ProcState.of(1)}
    elif name not in SCENARIOS:
        raise KeyError(f"unknown scenario {name}")
    if not processes:
        return dict(presets)
    return {p: presets.get(p, ProcState()) for p in processes}


def scenario_for(path_or_name: str) -> str:
    """Guess a scenario from a corpus file name."""
    base = str(path_or_name).rsplit("/", 1)[-1].split(".")[0].lower()
    return base if base in SCENARIOS else "default"
