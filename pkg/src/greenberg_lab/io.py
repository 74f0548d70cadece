"""JSON instance and module files.

Instance file::

    {
      "label": "Q(sqrt(6559))",
      "p": 3,
      "s_count": 1,
      "groups": {"ck": [2], "rk": [3]},
      "layers": [{"n": 0, "class_exponents": [2], "b": 1}, ...],
      "invariants": {"lambda": 0, "mu": 0, "nu": 2},
      "metadata": {...}
    }

Groups are exponent lists (``[3, 1]`` is ``Z/27 + Z/3``). ``metadata`` is
carried along untouched. Unknown keys are rejected.

Module file::

    {"p": 3, "n": 1, "exponents": [3, 1], "sigma": [[1, 9], [0, 1]]}
"""
from __future__ import annotations

import json
from pathlib import Path
from typing import Any

from .filtration import GModule, InvalidModuleError
from .formulas import FieldInstance, InconsistentDataError, IwasawaInvariants, Layer
from .pgroup import AbelianPGroup, GroupError

GROUP_NAMES = ("ck", "tk", "rk", "rk_nr", "wk")
_INSTANCE_KEYS = {"label", "p", "s_count", "groups", "layers", "invariants", "metadata"}
_LAYER_KEYS = {"n", "class_exponents", "order_valuation", "b"}
_INVARIANT_KEYS = {"lambda", "mu", "nu"}
_MODULE_KEYS = {"p", "n", "exponents", "sigma", "label"}


class InputError(ValueError):
    """A malformed input file; the message names the offending location."""


def _load_json(path: str | Path) -> Any:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        raise InputError(f"{path}: cannot read: {exc}") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}:{exc.lineno}:{exc.colno}: invalid JSON: {exc.msg}") from exc


def _require_keys(obj: Any, allowed: set[str], where: str, required: tuple[str, ...] = ()) -> None:
    if not isinstance(obj, dict):
        raise InputError(f"{where}: expected an object")
    unknown = sorted(set(obj) - allowed)
    if unknown:
        raise InputError(f"{where}: unknown key(s) {unknown}")
    for key in required:
        if key not in obj:
            raise InputError(f"{where}: missing key '{key}'")


def _int(value: Any, where: str, minimum: int | None = None) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise InputError(f"{where}: expected an integer, got {value!r}")
    if minimum is not None and value < minimum:
        raise InputError(f"{where}: must be >= {minimum}, got {value}")
    return value


def _exponents(value: Any, where: str) -> tuple[int, ...]:
    if not isinstance(value, list):
        raise InputError(f"{where}: expected a list of exponents")
    exps = tuple(_int(e, f"{where}[{j}]", 1) for j, e in enumerate(value))
    if any(a < b for a, b in zip(exps, exps[1:])):
        raise InputError(f"{where}: exponents must be non-increasing, got {list(exps)}")
    return exps


def instance_from_dict(doc: Any, where: str = "instance") -> FieldInstance:
    _require_keys(doc, _INSTANCE_KEYS, where, ("label", "p", "s_count"))
    label = doc["label"]
    if not isinstance(label, str):
        raise InputError(f"{where}.label: expected text")
    p = _int(doc["p"], f"{where}.p", 2)
    s_count = _int(doc["s_count"], f"{where}.s_count", 1)

    groups_doc = doc.get("groups", {})
    _require_keys(groups_doc, set(GROUP_NAMES), f"{where}.groups")
    try:
        groups = {name: AbelianPGroup(p, _exponents(exps, f"{where}.groups.{name}"))
                  for name, exps in groups_doc.items()}
    except GroupError as exc:
        raise InputError(f"{where}: {exc}") from exc

    layers_doc = doc.get("layers", [])
    if not isinstance(layers_doc, list):
        raise InputError(f"{where}.layers: expected a list")
    layers = []
    for j, item in enumerate(layers_doc):
        lw = f"{where}.layers[{j}]"
        _require_keys(item, _LAYER_KEYS, lw, ("n",))
        if "class_exponents" not in item and "order_valuation" not in item:
            raise InputError(f"{lw}: needs class_exponents or order_valuation")
        cg = None
        if "class_exponents" in item:
            cg = AbelianPGroup(p, _exponents(item["class_exponents"], f"{lw}.class_exponents"))
        ov = _int(item["order_valuation"], f"{lw}.order_valuation", 0) if "order_valuation" in item else None
        b = _int(item["b"], f"{lw}.b", 0) if "b" in item else None
        try:
            layers.append(Layer(_int(item["n"], f"{lw}.n", 0), cg, ov, b))
        except InconsistentDataError as exc:
            raise InputError(f"{lw}: {exc}") from exc

    inv = None
    if "invariants" in doc:
        iw = f"{where}.invariants"
        _require_keys(doc["invariants"], _INVARIANT_KEYS, iw, tuple(sorted(_INVARIANT_KEYS)))
        d = doc["invariants"]
        inv = IwasawaInvariants(_int(d["lambda"], f"{iw}.lambda", 0),
                                _int(d["mu"], f"{iw}.mu", 0),
                                _int(d["nu"], f"{iw}.nu"))
    metadata = doc.get("metadata", {})
    if not isinstance(metadata, dict):
        raise InputError(f"{where}.metadata: expected an object")

    try:
        return FieldInstance(label, p, s_count, layers=tuple(layers), invariants=inv,
                             metadata=metadata, **groups)
    except InconsistentDataError as exc:
        raise InputError(f"{where}: {exc}") from exc


def parse_instance(path: str | Path) -> FieldInstance:
    return instance_from_dict(_load_json(path), str(path))


def instance_to_dict(inst: FieldInstance) -> dict:
    """Normalized document; ``instance_from_dict`` inverts it."""
    doc: dict[str, Any] = {"label": inst.label, "p": inst.p, "s_count": inst.s_count}
    doc["groups"] = {name: list(g.exponents) for name in GROUP_NAMES
                     if (g := getattr(inst, name)) is not None}
    layers = []
    for L in inst.layers:
        item: dict[str, Any] = {"n": L.n}
        if L.class_group is not None:
            item["class_exponents"] = list(L.class_group.exponents)
        else:
            item["order_valuation"] = L.order_valuation
        if L.b is not None:
            item["b"] = L.b
        layers.append(item)
    doc["layers"] = layers
    if inst.invariants is not None:
        lam, mu, nu = inst.invariants.as_tuple()
        doc["invariants"] = {"lambda": lam, "mu": mu, "nu": nu}
    if inst.metadata:
        doc["metadata"] = inst.metadata
    return doc


def dump_instance(inst: FieldInstance) -> str:
    return json.dumps(instance_to_dict(inst), indent=2, sort_keys=True) + "\n"


def module_from_dict(doc: Any, where: str = "module") -> GModule:
    _require_keys(doc, _MODULE_KEYS, where, ("p", "n", "exponents", "sigma"))
    p = _int(doc["p"], f"{where}.p", 2)
    n = _int(doc["n"], f"{where}.n", 0)
    exps = _exponents(doc["exponents"], f"{where}.exponents")
    sigma = doc["sigma"]
    r = len(exps)
    if not isinstance(sigma, list) or len(sigma) != r or any(
            not isinstance(row, list) or len(row) != r for row in sigma):
        raise InputError(f"{where}.sigma: expected a {r}x{r} integer matrix")
    rows = [[_int(x, f"{where}.sigma[{i}][{j}]") for j, x in enumerate(row)]
            for i, row in enumerate(sigma)]
    try:
        return GModule.from_matrix(p, exps, rows, n)
    except (GroupError, InvalidModuleError) as exc:
        raise InputError(f"{where}: {exc}") from exc


def parse_module(path: str | Path) -> GModule:
    return module_from_dict(_load_json(path), str(path))


def module_to_dict(M: GModule) -> dict:
    return {"p": M.p, "n": M.n, "exponents": list(M.group.exponents),
            "sigma": [list(r) for r in M.sigma.matrix]}
