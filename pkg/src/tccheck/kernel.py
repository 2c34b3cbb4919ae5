"""Type expressions, terms, unification and normalization.

Definitional equality here is an approximation of a proof-kernel's
reduction: beta (application of a lambda), delta (unfolding an instance
operation whose body is known), iota (recursor applied to a numeral), and
a single eta collapse applied during comparison rather than reduction.
Projections out of opaque (hypothesis) instances and recursors blocked on
neutral scrutinees are kept as stuck terms and compared structurally.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterator, Mapping, Optional, Protocol, runtime_checkable


# ---------------------------------------------------------------------------
# type expressions

@dataclass(frozen=True)
class TypeVar:
    name: str

    def __str__(self) -> str:
        return "?" + self.name


@dataclass(frozen=True)
class TypeApp:
    ctor: str
    args: tuple["TypeExpr", ...] = ()

    def __str__(self) -> str:
        if not self.args:
            return self.ctor
        parts = []
        for a in self.args:
            s = str(a)
            parts.append(f"({s})" if isinstance(a, TypeApp) and a.args else s)
        return self.ctor + " " + " ".join(parts)


TypeExpr = TypeVar | TypeApp

Subst = dict[str, TypeExpr]


class KernelError(Exception):
    pass


class ClashError(KernelError):
    """Two type expressions have incompatible constructors."""


class OccursError(KernelError):
    """A variable would have to contain itself."""


class FuelExhausted(KernelError):
    """Normalization hit its step budget before reaching a normal form."""


def type_vars(t: TypeExpr) -> set[str]:
    if isinstance(t, TypeVar):
        return {t.name}
    out: set[str] = set()
    for a in t.args:
        out |= type_vars(a)
    return out


def is_ground(t: TypeExpr) -> bool:
    if isinstance(t, TypeVar):
        return False
    return all(is_ground(a) for a in t.args)


def apply_subst(s: Mapping[str, TypeExpr], t: TypeExpr) -> TypeExpr:
    if isinstance(t, TypeVar):
        return s.get(t.name, t)
    if not t.args:
        return t
    return TypeApp(t.ctor, tuple(apply_subst(s, a) for a in t.args))


def unify(a: TypeExpr, b: TypeExpr) -> Subst:
    """Most general unifier of `a` and `b`, as an idempotent substitution.

    Raises ClashError on constructor/arity mismatch and OccursError when a
    variable occurs in its own image.
    """
    subst: Subst = {}
    work = [(a, b)]
    while work:
        lhs, rhs = work.pop()
        lhs = apply_subst(subst, lhs)
        rhs = apply_subst(subst, rhs)
        if lhs == rhs:
            continue
        if isinstance(lhs, TypeApp) and isinstance(rhs, TypeApp):
            if lhs.ctor != rhs.ctor or len(lhs.args) != len(rhs.args):
                raise ClashError(f"cannot unify {lhs} with {rhs}")
            work.extend(zip(lhs.args, rhs.args))
            continue
        if isinstance(rhs, TypeVar):
            lhs, rhs = rhs, lhs
        assert isinstance(lhs, TypeVar)
        if lhs.name in type_vars(rhs):
            raise OccursError(f"variable {lhs} occurs in {rhs}")
        binding = {lhs.name: rhs}
        for k in subst:
            subst[k] = apply_subst(binding, subst[k])
        subst[lhs.name] = rhs
    return subst


# ---------------------------------------------------------------------------
# instance references
#
# A Proj node projects an operation field out of an instance structure.
# The reference is either concrete (a resolved derivation), symbolic
# (premise i / the structure being declared, wired in later), or the
# built-in Nat structure whose operations evaluate arithmetically.

@dataclass(frozen=True)
class PremiseRef:
    index: int

    def __str__(self) -> str:
        return f"premise[{self.index}]"


@dataclass(frozen=True)
class SelfRef:
    def __str__(self) -> str:
        return "self"


@dataclass(frozen=True)
class BuiltinNatRef:
    def __str__(self) -> str:
        return "Nat"


@runtime_checkable
class DerivationLike(Protocol):
    instance: str
    children: tuple


@dataclass(frozen=True)
class DerivRef:
    derivation: "DerivationLike"

    def __str__(self) -> str:
        return str(self.derivation.instance)


InstanceRef = PremiseRef | SelfRef | BuiltinNatRef | DerivRef


# ---------------------------------------------------------------------------
# terms

@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Lam:
    binder: str
    body: "Term"


@dataclass(frozen=True)
class App:
    fn: "Term"
    arg: "Term"


@dataclass(frozen=True)
class Proj:
    ref: InstanceRef
    field: str


@dataclass(frozen=True)
class NatLit:
    value: int


@dataclass(frozen=True)
class NatRec:
    zero_case: "Term"
    succ_case: "Term"
    scrut: "Term"


@dataclass(frozen=True)
class Const:
    """A semantic value embedded in a term; appears only during evaluation."""

    value: object


Term = Var | Lam | App | Proj | NatLit | NatRec | Const


@dataclass(frozen=True)
class NormalForm:
    """A term with no beta redex, no unfoldable Proj and no iota redex."""

    term: Term


_fresh_ids = itertools.count(1)


def fresh_name(base: str) -> str:
    base = base.split("#", 1)[0]
    return f"{base}#{next(_fresh_ids)}"


def free_vars(t: Term) -> set[str]:
    if isinstance(t, Var):
        return {t.name}
    if isinstance(t, Lam):
        return free_vars(t.body) - {t.binder}
    if isinstance(t, App):
        return free_vars(t.fn) | free_vars(t.arg)
    if isinstance(t, NatRec):
        return free_vars(t.zero_case) | free_vars(t.succ_case) | free_vars(t.scrut)
    return set()


def subst_var(t: Term, name: str, value: Term) -> Term:
    """Capture-avoiding substitution of `value` for Var(name) in `t`."""
    if isinstance(t, Var):
        return value if t.name == name else t
    if isinstance(t, Lam):
        if t.binder == name:
            return t
        if t.binder in free_vars(value):
            fresh = fresh_name(t.binder)
            body = subst_var(t.body, t.binder, Var(fresh))
            return Lam(fresh, subst_var(body, name, value))
        return Lam(t.binder, subst_var(t.body, name, value))
    if isinstance(t, App):
        return App(subst_var(t.fn, name, value), subst_var(t.arg, name, value))
    if isinstance(t, NatRec):
        return NatRec(
            subst_var(t.zero_case, name, value),
            subst_var(t.succ_case, name, value),
            subst_var(t.scrut, name, value),
        )
    return t


def wire(t: Term, self_deriv, children: tuple) -> Term:
    """Replace symbolic instance references with concrete derivations."""
    if isinstance(t, Proj):
        if isinstance(t.ref, PremiseRef):
            return Proj(DerivRef(children[t.ref.index]), t.field)
        if isinstance(t.ref, SelfRef):
            return Proj(DerivRef(self_deriv), t.field)
        return t
    if isinstance(t, Lam):
        return Lam(t.binder, wire(t.body, self_deriv, children))
    if isinstance(t, App):
        return App(wire(t.fn, self_deriv, children), wire(t.arg, self_deriv, children))
    if isinstance(t, NatRec):
        return NatRec(
            wire(t.zero_case, self_deriv, children),
            wire(t.succ_case, self_deriv, children),
            wire(t.scrut, self_deriv, children),
        )
    return t


@runtime_checkable
class RegistryLike(Protocol):
    def unfold_projection(self, ref: DerivRef, field: str) -> Optional[Term]:
        ...


DEFAULT_FUEL = 10_000


class _Budget:
    __slots__ = ("left",)

    def __init__(self, fuel: int):
        self.left = fuel

    def spend(self) -> None:
        if self.left <= 0:
            raise FuelExhausted("normalization step budget exhausted")
        self.left -= 1


def _step_head(t: Term, reg: Optional[RegistryLike]) -> Optional[Term]:
    """One leftmost-outermost reduction at the head, or None if head-stuck."""
    if isinstance(t, App):
        if isinstance(t.fn, Lam):
            return subst_var(t.fn.body, t.fn.binder, t.arg)
        inner = _step_head(t.fn, reg)
        if inner is not None:
            return App(inner, t.arg)
        return None
    if isinstance(t, Proj) and isinstance(t.ref, DerivRef) and reg is not None:
        return reg.unfold_projection(t.ref, t.field)
    if isinstance(t, NatRec):
        if isinstance(t.scrut, NatLit):
            n = t.scrut.value
            if n == 0:
                return t.zero_case
            prev = NatLit(n - 1)
            return App(App(t.succ_case, prev), NatRec(t.zero_case, t.succ_case, prev))
        inner = _step_head(t.scrut, reg)
        if inner is not None:
            return NatRec(t.zero_case, t.succ_case, inner)
        return None
    return None


def _normalize(t: Term, reg: Optional[RegistryLike], budget: _Budget) -> Term:
    while True:
        nxt = _step_head(t, reg)
        if nxt is None:
            break
        budget.spend()
        t = nxt
    if isinstance(t, Lam):
        return Lam(t.binder, _normalize(t.body, reg, budget))
    if isinstance(t, App):
        # the head is neutral, so normalizing subterms cannot expose a redex
        return App(_normalize(t.fn, reg, budget), _normalize(t.arg, reg, budget))
    if isinstance(t, NatRec):
        return NatRec(
            _normalize(t.zero_case, reg, budget),
            _normalize(t.succ_case, reg, budget),
            _normalize(t.scrut, reg, budget),
        )
    return t


def normalize(t: Term, reg: Optional[RegistryLike] = None, fuel: int = DEFAULT_FUEL) -> NormalForm:
    """Fully normalize `t` under beta/delta/iota, leftmost-outermost first.

    Raises FuelExhausted when the step budget runs out; a hit budget is
    always reported, never silently truncated.
    """
    return NormalForm(_normalize(t, reg, _Budget(fuel)))


def _alpha_eq(a: Term, b: Term, env_a: dict[str, int], env_b: dict[str, int], depth: int) -> bool:
    if isinstance(a, Lam) and isinstance(b, Lam):
        ea = dict(env_a)
        eb = dict(env_b)
        ea[a.binder] = depth
        eb[b.binder] = depth
        return _alpha_eq(a.body, b.body, ea, eb, depth + 1)
    # single-step eta: Lam(x, App(f, x)) matches f when x is not free in f
    if isinstance(a, Lam) and not isinstance(b, Lam):
        if (
            isinstance(a.body, App)
            and isinstance(a.body.arg, Var)
            and a.body.arg.name == a.binder
            and a.binder not in free_vars(a.body.fn)
        ):
            return _alpha_eq(a.body.fn, b, env_a, env_b, depth)
        return False
    if isinstance(b, Lam) and not isinstance(a, Lam):
        return _alpha_eq(b, a, env_b, env_a, depth)
    if isinstance(a, Var) and isinstance(b, Var):
        ia = env_a.get(a.name)
        ib = env_b.get(b.name)
        if ia is None and ib is None:
            return a.name == b.name
        return ia is not None and ia == ib
    if isinstance(a, App) and isinstance(b, App):
        return _alpha_eq(a.fn, b.fn, env_a, env_b, depth) and _alpha_eq(
            a.arg, b.arg, env_a, env_b, depth
        )
    if isinstance(a, Proj) and isinstance(b, Proj):
        return a.ref == b.ref and a.field == b.field
    if isinstance(a, NatLit) and isinstance(b, NatLit):
        return a.value == b.value
    if isinstance(a, NatRec) and isinstance(b, NatRec):
        return (
            _alpha_eq(a.zero_case, b.zero_case, env_a, env_b, depth)
            and _alpha_eq(a.succ_case, b.succ_case, env_a, env_b, depth)
            and _alpha_eq(a.scrut, b.scrut, env_a, env_b, depth)
        )
    if isinstance(a, Const) and isinstance(b, Const):
        return a.value == b.value
    return False


def alpha_eq(a: Term, b: Term) -> bool:
    return _alpha_eq(a, b, {}, {}, 0)


def defeq(a: Term, b: Term, reg: Optional[RegistryLike] = None, fuel: int = DEFAULT_FUEL) -> bool:
    """Definitional equality: alpha-equivalence of normal forms, with the
    one-step eta collapse applied during comparison."""
    na = normalize(a, reg, fuel)
    nb = normalize(b, reg, fuel)
    return alpha_eq(na.term, nb.term)


def term_to_str(t: Term) -> str:
    if isinstance(t, Var):
        return t.name.split("#", 1)[0]
    if isinstance(t, Lam):
        binders = [t.binder]
        body = t.body
        while isinstance(body, Lam):
            binders.append(body.binder)
            body = body.body
        names = " ".join(b.split("#", 1)[0] for b in binders)
        return f"fun {names} => {term_to_str(body)}"
    if isinstance(t, App):
        fn = term_to_str(t.fn)
        if isinstance(t.fn, Lam):
            fn = f"({fn})"
        arg = term_to_str(t.arg)
        if isinstance(t.arg, (App, Lam, NatRec)):
            arg = f"({arg})"
        return f"{fn} {arg}"
    if isinstance(t, Proj):
        return f"{t.ref}.{t.field}"
    if isinstance(t, NatLit):
        return str(t.value)
    if isinstance(t, NatRec):
        parts = []
        for sub in (t.zero_case, t.succ_case, t.scrut):
            s = term_to_str(sub)
            parts.append(f"({s})" if isinstance(sub, (App, Lam, NatRec)) else s)
        return "natrec " + " ".join(parts)
    if isinstance(t, Const):
        return str(t.value)
    raise TypeError(f"unknown term node {t!r}")
