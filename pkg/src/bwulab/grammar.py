"""Parser for the config mini-grammar of weights, Theta functions, spaces, kernels and operators.

    spec  ::= NAME [ "{" [ item ("," item)* ] "}" ]
    item  ::= NAME "=" value | NUMBER ":" NUMBER
    value ::= NUMBER | spec

Examples: ``power{sigma=1.5}``,
``composite{w0=power{sigma=2}, w1=power{sigma=1}, theta=power{theta=0.5}}``,
``table{0.5:2, 1:1, 4:0.25}``, ``Morrey{p=2, lam=-0.25}``, ``singular{kernel=hilbert_1d}``.
"""
from __future__ import annotations

import re
from dataclasses import dataclass

from .local_norms import SpaceSpec
from .operators import KernelSpec, OperatorSpec
from .weights import (CompositeWeight, MaxPowersTheta, MaxPowersWeight, PowerLogTheta,
                      PowerLogWeight, PowerTheta, PowerWeight, ScaledWeight, TableWeight)


class GrammarError(ValueError):
    pass


@dataclass(frozen=True)
class Node:
    name: str
    args: tuple  # ((key, value), ...) with value a float or a Node; table pairs use float keys


_TOKEN = re.compile(r"\s*(?:(?P<num>[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?|[-+]?inf)"
                    r"|(?P<name>[A-Za-z_][A-Za-z0-9_]*)|(?P<sym>[{}=,:]))")


def _tokens(text: str) -> list[tuple[str, str]]:
    out, pos = [], 0
    text = text.strip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            raise GrammarError(f"unexpected character at {pos} in {text!r}")
        kind = m.lastgroup
        out.append((kind, m.group(kind)))
        pos = m.end()
        while pos < len(text) and text[pos].isspace():
            pos += 1
    return out


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.toks = _tokens(text)
        self.i = 0

    def peek(self):
        return self.toks[self.i] if self.i < len(self.toks) else (None, None)

    def take(self, kind=None, value=None):
        tok = self.peek()
        if tok[0] is None or (kind and tok[0] != kind) or (value and tok[1] != value):
            want = value or kind
            raise GrammarError(f"expected {want!r} in {self.text!r}, got {tok[1]!r}")
        self.i += 1
        return tok[1]

    def spec(self) -> Node:
        name = self.take("name")
        args = []
        if self.peek() == ("sym", "{"):
            self.take("sym", "{")
            while self.peek() != ("sym", "}"):
                args.append(self.item())
                if self.peek() == ("sym", ","):
                    self.take("sym", ",")
                elif self.peek() != ("sym", "}"):
                    raise GrammarError(f"expected ',' or '}}' in {self.text!r}")
            self.take("sym", "}")
        return Node(name, tuple(args))

    def item(self):
        kind, tok = self.peek()
        if kind == "num":
            a = float(self.take("num"))
            self.take("sym", ":")
            return (a, float(self.take("num")))
        key = self.take("name")
        self.take("sym", "=")
        k2, _ = self.peek()
        if k2 == "num":
            return (key, float(self.take("num")))
        return (key, self.spec())

    def parse(self) -> Node:
        node = self.spec()
        if self.i != len(self.toks):
            raise GrammarError(f"trailing input in {self.text!r}")
        return node


def parse(text: str) -> Node:
    return _Parser(text).parse()


def _kw(node: Node, allowed: dict) -> dict:
    """Keyword arguments with defaults; unknown keys are errors."""
    out = dict(allowed)
    for k, v in node.args:
        if not isinstance(k, str) or k not in allowed:
            raise GrammarError(f"{node.name}: unknown argument {k!r}")
        out[k] = v
    missing = [k for k, v in out.items() if v is _REQUIRED]
    if missing:
        raise GrammarError(f"{node.name}: missing {', '.join(missing)}")
    return out


_REQUIRED = object()


def build_theta(node: Node | str):
    node = parse(node) if isinstance(node, str) else node
    if node.name == "power":
        return PowerTheta(**_kw(node, {"theta": _REQUIRED}))
    if node.name == "max_powers":
        return MaxPowersTheta(**_kw(node, {"alpha": _REQUIRED, "beta": _REQUIRED}))
    if node.name == "power_log":
        return PowerLogTheta(**_kw(node, {"theta": _REQUIRED, "beta1": 0.0, "beta2": 0.0}))
    raise GrammarError(f"unknown Theta family {node.name!r}")


def build_weight(node: Node | str):
    node = parse(node) if isinstance(node, str) else node
    n = node.name
    if n == "power":
        return PowerWeight(**_kw(node, {"sigma": _REQUIRED}))
    if n == "power_log":
        return PowerLogWeight(**_kw(node, {"sigma": _REQUIRED, "beta1": 0.0, "beta2": 0.0}))
    if n == "max_powers":
        return MaxPowersWeight(**_kw(node, {"e1": _REQUIRED, "e2": _REQUIRED}))
    if n == "scaled":
        kw = _kw(node, {"c": _REQUIRED, "w": _REQUIRED})
        return ScaledWeight(kw["c"], build_weight(_as_node(kw["w"], node)))
    if n == "composite":
        kw = _kw(node, {"w0": _REQUIRED, "w1": _REQUIRED, "theta": _REQUIRED})
        return CompositeWeight(build_weight(_as_node(kw["w0"], node)),
                               build_weight(_as_node(kw["w1"], node)),
                               build_theta(_as_node(kw["theta"], node)))
    if n == "table":
        if not node.args or any(not isinstance(k, float) for k, _ in node.args):
            raise GrammarError("table needs r:w pairs")
        return TableWeight(tuple(k for k, _ in node.args), tuple(v for _, v in node.args))
    raise GrammarError(f"unknown weight family {n!r}")


def _as_node(v, parent: Node) -> Node:
    if not isinstance(v, Node):
        raise GrammarError(f"{parent.name}: expected a nested spec, got {v!r}")
    return v


_SPACE_KEYS = {"p": 1.0, "lam": 0.0, "alpha": 1.0, "center_stride": 1.0}


def build_space(node: Node | str) -> SpaceSpec:
    node = parse(node) if isinstance(node, str) else node
    kw = _kw(node, _SPACE_KEYS)
    kw["center_stride"] = int(kw["center_stride"])
    return SpaceSpec(node.name, **kw)


def space_spec_string(E: SpaceSpec) -> str:
    from .weights import _fmt
    parts = [f"p={_fmt(E.p)}", f"lam={_fmt(E.lam)}", f"alpha={_fmt(E.alpha)}"]
    if E.center_stride != 1:
        parts.append(f"center_stride={E.center_stride}")
    return f"{E.kind}{{{', '.join(parts)}}}"


def build_kernel(node: Node | str) -> KernelSpec:
    node = parse(node) if isinstance(node, str) else node
    if node.name == "hilbert_1d":
        return KernelSpec("hilbert_1d", **{k: v for k, v in _kw(node, {"kappa": 1.0}).items()})
    if node.name == "riesz_like":
        kw = _kw(node, {"omega": None})
        om = kw["omega"]
        omega = "sign" if om is None else _as_node(om, node).name
        return KernelSpec("riesz_like", kappa=1.0 if omega == "cos" else None, omega=omega)
    raise GrammarError(f"unknown kernel {node.name!r}")


def build_operator(node: Node | str) -> OperatorSpec:
    node = parse(node) if isinstance(node, str) else node
    kw = _kw(node, {"alpha": 0.0, "kernel": None, "eta": None, "exterior": 0.0})
    kernel = build_kernel(_as_node(kw.pop("kernel"), node)) if kw["kernel"] is not None \
        else KernelSpec("hilbert_1d")
    if node.name not in ("maximal", "fractional_integral", "modified_fractional_integral",
                         "singular", "modified_singular", "zero", "phase_maximal"):
        raise GrammarError(f"unknown operator {node.name!r}")
    kw.pop("kernel", None)
    return OperatorSpec(node.name, kernel=kernel, **kw)
