"""Built-in models with closed-form reference values.

Every entry builds a :class:`~patchgrowth.pathmodel.PatchModel` from named
parameters and carries oracles for the limits it has closed forms for,
each guarded by machine-checkable domain predicates.

Two-patch entries (half-year seasons, patch 1 good in the first half and
patch 2 good in the second):

``two-patch-worst``
    One-way migration into the currently poor patch.
``two-patch-best``
    One-way migration into the currently good patch.
``two-patch-epsilon``
    Migration towards the poor patch at rate 1 and back at rate ``eps``.

Three-patch entries (three equal seasons, one patch at rate ``a`` and two
at rate ``b`` in each season, the good patch rotating):

``three-patch-fig1``
    Symmetric migration between the two poor patches.
``three-patch-fig3``
    Symmetric migration between the good patch and one poor patch.
``one-way-{b-to-b,b-to-a,a-to-b}-{1,2}``
    A single one-way link per season, from a poor patch to the other poor
    patch, from a poor patch into the good one, or from the good patch to
    a poor one; variants 1 and 2 differ in the rotation order of the links.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Mapping

import numpy as np

from .errors import DomainError
from .pathmodel import PatchModel

__all__ = [
    "Predicate",
    "Oracle",
    "CatalogEntry",
    "OracleRow",
    "catalog",
    "get_entry",
    "oracle_check",
]

Params = Mapping[str, float]


@dataclass(frozen=True)
class Predicate:
    """Named domain restriction on a parameter binding."""

    name: str
    test: Callable[[Params], bool]

    def __call__(self, p: Params) -> bool:
        return bool(self.test(p))


@dataclass(frozen=True)
class Oracle:
    """Closed-form value of one quantity.

    ``kind`` is ``"equal"`` or ``"upper_bound"`` (the computed value must
    not exceed the formula).
    """

    quantity: str
    formula: Callable[[Params], float]
    text: str
    kind: str = "equal"
    predicates: tuple = ()
    needs_m: bool = False

    def applies(self, p: Params) -> bool:
        return all(pred(p) for pred in self.predicates)

    def __call__(self, p: Params) -> float:
        return float(self.formula(p))


@dataclass(frozen=True)
class VerdictOracle:
    """Expected hypothesis verdict as a function of the binding."""

    hypothesis: str
    verdict: Callable[[Params], str | None]
    needs_m: bool = False


@dataclass(frozen=True)
class CatalogEntry:
    """A built-in model.

    Attributes
    ----------
    name, description : str
    parameters : tuple of str
        Parameter slots accepted by :meth:`build`.
    defaults : dict
        Default binding (includes ``m`` for m-dependent oracles).
    predicates : tuple of Predicate
        Domain of the model family.
    oracles : tuple of Oracle
    verdicts : tuple of VerdictOracle
    """

    name: str
    description: str
    parameters: tuple
    defaults: dict
    builder: Callable[..., PatchModel]
    predicates: tuple = ()
    oracles: tuple = ()
    verdicts: tuple = ()
    sampler: Callable[[np.random.Generator], dict] | None = field(default=None, repr=False)

    def binding(self, **params) -> dict:
        p = dict(self.defaults)
        unknown = set(params) - set(self.parameters) - {"m", "T"}
        if unknown:
            raise DomainError(f"unknown parameters for {self.name}: {sorted(unknown)}")
        p.update({k: float(v) for k, v in params.items()})
        return p

    def check_domain(self, p: Params) -> None:
        for pred in self.predicates:
            if not pred(p):
                raise DomainError(f"{self.name}: domain predicate violated: {pred.name}", pred.name)

    def build(self, **params) -> PatchModel:
        """Instantiate the model; ``m``/``T`` in ``params`` are ignored."""
        p = self.binding(**params)
        self.check_domain(p)
        args = {k: p[k] for k in self.parameters}
        model = self.builder(**args)
        model.name = self.name
        model.description = self.description
        return model

    def oracle(self, quantity: str) -> Oracle | None:
        for o in self.oracles:
            if o.quantity == quantity:
                return o
        return None

    def expected_verdict(self, hypothesis: str, **params) -> str | None:
        p = self.binding(**params)
        for v in self.verdicts:
            if v.hypothesis == hypothesis:
                return v.verdict(p)
        return None

    def sample(self, rng: np.random.Generator) -> dict:
        """Random in-domain binding (including ``m``)."""
        if self.sampler is None:
            return dict(self.defaults)
        while True:
            p = self.sampler(rng)
            if all(pred(p) for pred in self.predicates):
                return p


HALF = Fraction(1, 2)
THIRDS = [Fraction(0), Fraction(1, 3), Fraction(2, 3)]


def _one_way(n: int, src: int, dst: int, rate: float = 1.0) -> np.ndarray:
    L = np.zeros((n, n))
    L[dst, src] += rate
    L[src, src] -= rate
    return L


def _two_patch(a1, b1, a2, b2, L1, L2, **meta) -> PatchModel:
    return PatchModel.piecewise_constant([0, HALF], [[a1, b2], [b1, a2]], [L1, L2], **meta)


def build_two_patch_worst(a1, b1, a2, b2) -> PatchModel:
    """Two patches, one-way migration into the currently poor patch."""
    return _two_patch(a1, b1, a2, b2, _one_way(2, 0, 1), _one_way(2, 1, 0))


def build_two_patch_best(a1, b1, a2, b2) -> PatchModel:
    """Two patches, one-way migration into the currently good patch."""
    return _two_patch(a1, b1, a2, b2, _one_way(2, 1, 0), _one_way(2, 0, 1))


def build_two_patch_epsilon(a, b, eps) -> PatchModel:
    """Two patches, migration to the poor patch at rate 1 and back at rate ``eps``."""
    L1 = _one_way(2, 0, 1) + _one_way(2, 1, 0, eps)
    L2 = _one_way(2, 1, 0) + _one_way(2, 0, 1, eps)
    return _two_patch(a, b, a, b, L1, L2)


# (good patch, (source, destination), symmetric link) per season
SEASONS = {
    "three-patch-fig1": [(2, (0, 1), True), (1, (0, 2), True), (0, (1, 2), True)],
    "three-patch-fig3": [(0, (0, 1), True), (2, (0, 2), True), (1, (1, 2), True)],
    "one-way-b-to-b-1": [(2, (0, 1), False), (1, (2, 0), False), (0, (1, 2), False)],
    "one-way-b-to-b-2": [(2, (0, 1), False), (0, (1, 2), False), (1, (2, 0), False)],
    "one-way-b-to-a-1": [(1, (0, 1), False), (0, (2, 0), False), (2, (1, 2), False)],
    "one-way-b-to-a-2": [(1, (0, 1), False), (2, (1, 2), False), (0, (2, 0), False)],
    "one-way-a-to-b-1": [(0, (0, 1), False), (2, (2, 0), False), (1, (1, 2), False)],
    "one-way-a-to-b-2": [(0, (0, 1), False), (1, (1, 2), False), (2, (2, 0), False)],
}


def build_three_patch(a, b, seasons) -> PatchModel:
    """Three equal seasons; in each, one patch grows at ``a`` and the others at ``b``."""
    rates, migs = [], []
    for good, (src, dst), symmetric in seasons:
        r = [b, b, b]
        r[good] = a
        L = _one_way(3, src, dst)
        if symmetric:
            L = L + _one_way(3, dst, src)
        rates.append(r)
        migs.append(L)
    return PatchModel.piecewise_constant(THIRDS, rates, migs)


def _two_patch_closed_forms(best: bool) -> tuple:
    cross = Predicate("a1 >= b2 and a2 >= b1", lambda p: p["a1"] >= p["b2"] and p["a2"] >= p["b1"])
    m_pos = Predicate("m > 0", lambda p: p["m"] > 0)

    def rbar(p):
        return (p["a1"] + p["b1"]) / 2, (p["a2"] + p["b2"]) / 2

    def lam_m0(p):
        r1, r2 = rbar(p)
        m = p["m"]
        return 0.5 * (r1 + r2 - m + math.sqrt((r1 - r2) ** 2 + m * m))

    oracles = [
        Oracle("lambda_0T", lambda p: max(rbar(p)), "max(r1_bar, r2_bar)"),
        Oracle("lambda_00", lambda p: max(rbar(p)), "max(r1_bar, r2_bar)"),
        Oracle("lambda_inf0", lambda p: sum(rbar(p)) / 2, "(r1_bar + r2_bar)/2"),
        Oracle("lambda_m0", lam_m0, "(r1+r2-m+sqrt((r1-r2)^2+m^2))/2", predicates=(m_pos,), needs_m=True),
        Oracle("sigma", lambda p: (p["b1"] + p["b2"]) / 2, "(b1+b2)/2", predicates=(cross,)),
        Oracle("chi", lambda p: (p["a1"] + p["a2"]) / 2, "(a1+a2)/2", predicates=(cross,)),
        Oracle("lambda_0inf", lambda p: (p["a1"] + p["a2"]) / 2, "chi", predicates=(cross,)),
    ]
    if best:
        oracles += [
            Oracle("lambda_infT", lambda p: (p["a1"] + p["a2"]) / 2, "(a1+a2)/2"),
            Oracle("lambda_mInf", lambda p: (p["a1"] + p["a2"]) / 2, "chi",
                   predicates=(cross, m_pos), needs_m=True),
        ]
    else:
        off = Predicate(
            "m differs from a1-b2 and a2-b1",
            lambda p: p["m"] != p["a1"] - p["b2"] and p["m"] != p["a2"] - p["b1"],
        )
        oracles += [
            Oracle("lambda_infT", lambda p: (p["b1"] + p["b2"]) / 2, "(b1+b2)/2"),
            Oracle(
                "lambda_mInf",
                lambda p: 0.5 * (max(p["a1"] - p["m"], p["b2"]) + max(p["a2"] - p["m"], p["b1"])),
                "chi-m | (a2+b2-m)/2 | sigma across the bands",
                predicates=(cross, m_pos, off),
                needs_m=True,
            ),
        ]
    verdicts = (
        VerdictOracle("H4", lambda p: "verified-sampled"),
        VerdictOracle(
            "H3",
            lambda p: "verified-sampled"
            if p["a1"] > p["b2"] and p["a2"] > p["b1"]
            and (best or (p["m"] != p["a1"] - p["b2"] and p["m"] != p["a2"] - p["b1"]))
            else None,
            needs_m=True,
        ),
    )
    return tuple(oracles), verdicts


def _sample_two_patch(rng):
    while True:
        a1, a2 = rng.uniform(-1.0, 2.0, size=2)
        b1, b2 = a1 - rng.uniform(0.1, 3.0), a2 - rng.uniform(0.1, 3.0)
        if a1 > b2 and a2 > b1:
            return {"a1": a1, "b1": b1, "a2": a2, "b2": b2, "m": float(np.exp(rng.uniform(np.log(0.05), np.log(5.0))))}


def _sample_ab(rng):
    a = rng.uniform(-0.5, 2.0)
    return {"a": a, "b": a - rng.uniform(0.2, 3.0), "m": float(np.exp(rng.uniform(np.log(0.05), np.log(5.0))))}


def _sample_eps(rng):
    p = _sample_ab(rng)
    p["eps"] = float(rng.uniform(0.05, 2.0))
    return p


def _epsilon_entry() -> CatalogEntry:
    m_pos = Predicate("m > 0", lambda p: p["m"] > 0)

    def lam_inf(p):
        a, b, e, m = p["a"], p["b"], p["eps"], p["m"]
        tr = a - m + b - e * m
        return 0.5 * (tr + math.sqrt((a - m - b + e * m) ** 2 + 4 * e * m * m))

    mean = lambda p: (p["a"] + p["b"]) / 2  # noqa: E731
    oracles = (
        Oracle("lambda_0T", mean, "(a+b)/2"),
        Oracle("lambda_00", mean, "(a+b)/2"),
        Oracle("lambda_m0", mean, "(a+b)/2", predicates=(m_pos,), needs_m=True),
        Oracle("lambda_inf0", mean, "(a+b)/2"),
        Oracle("sigma", lambda p: p["b"], "b"),
        Oracle("chi", lambda p: p["a"], "a"),
        Oracle("lambda_0inf", lambda p: p["a"], "chi"),
        Oracle("lambda_infT", lambda p: (p["b"] + p["eps"] * p["a"]) / (1 + p["eps"]), "(b+eps*a)/(1+eps)"),
        Oracle("lambda_mInf", lam_inf, "lambda_max of either season matrix", predicates=(m_pos,), needs_m=True),
    )
    verdicts = (
        VerdictOracle("H3", lambda p: "verified-sampled", needs_m=True),
        VerdictOracle("H4", lambda p: "verified-sampled"),
    )
    return CatalogEntry(
        "two-patch-epsilon",
        "Two patches alternating good (a) and poor (b) half-seasons; migration to the poor "
        "patch at rate 1 and back at rate eps, so the migration matrix is always irreducible.",
        ("a", "b", "eps"),
        {"a": 1.0, "b": -0.5, "eps": 0.25, "m": 1.0},
        build_two_patch_epsilon,
        (Predicate("a >= b", lambda p: p["a"] >= p["b"]), Predicate("eps > 0", lambda p: p["eps"] > 0)),
        oracles,
        verdicts,
        _sample_eps,
    )


def _three_patch_entry(name: str, description: str, extra: tuple, verdicts: tuple) -> CatalogEntry:
    mean = lambda p: (p["a"] + 2 * p["b"]) / 3  # noqa: E731
    m_pos = Predicate("m > 0", lambda p: p["m"] > 0)
    oracles = (
        Oracle("lambda_0T", mean, "(a+2b)/3"),
        Oracle("lambda_00", mean, "(a+2b)/3"),
        Oracle("lambda_m0", mean, "(a+2b)/3", predicates=(m_pos,), needs_m=True),
        Oracle("lambda_inf0", mean, "(a+2b)/3"),
        Oracle("sigma", lambda p: p["b"], "b"),
        Oracle("chi", lambda p: p["a"], "a"),
    ) + extra
    seasons = SEASONS[name]
    return CatalogEntry(
        name,
        description,
        ("a", "b"),
        {"a": 1.0, "b": -1.0, "m": 1.0},
        lambda a, b: build_three_patch(a, b, seasons),
        (Predicate("a >= b", lambda p: p["a"] >= p["b"]),),
        oracles,
        verdicts,
        _sample_ab,
    )


def _strict(verdict: str):
    return lambda p: verdict if p["a"] > p["b"] else None


def _build_catalog() -> tuple:
    worst_o, worst_v = _two_patch_closed_forms(best=False)
    best_o, best_v = _two_patch_closed_forms(best=True)
    family = (Predicate("a1 >= b1 and a2 >= b2", lambda p: p["a1"] >= p["b1"] and p["a2"] >= p["b2"]),)
    two_defaults = {"a1": 1.0, "b1": -2.0, "a2": 2.0, "b2": -1.0, "m": 1.0}
    entries = [
        CatalogEntry(
            "two-patch-worst",
            "Two patches with growth a_i in the good half-season and b_i in the poor one; "
            "one-way migration into the currently poor patch.",
            ("a1", "b1", "a2", "b2"),
            two_defaults,
            build_two_patch_worst,
            family,
            worst_o,
            worst_v,
            _sample_two_patch,
        ),
        CatalogEntry(
            "two-patch-best",
            "Two patches with growth a_i in the good half-season and b_i in the poor one; "
            "one-way migration into the currently good patch.",
            ("a1", "b1", "a2", "b2"),
            two_defaults,
            build_two_patch_best,
            family,
            best_o,
            best_v,
            _sample_two_patch,
        ),
        _epsilon_entry(),
    ]
    h4_violated = VerdictOracle("H4", _strict("violated"))
    m_pos = Predicate("m > 0", lambda p: p["m"] > 0)
    entries.append(
        _three_patch_entry(
            "three-patch-fig1",
            "Three patches, good patch rotating each third of the period; symmetric migration "
            "between the two poor patches. Growth never exceeds (a+b)/2.",
            (Oracle("lambda_mT", lambda p: (p["a"] + p["b"]) / 2, "(a+b)/2", kind="upper_bound"),),
            (VerdictOracle("H3", _strict("violated"), needs_m=True), h4_violated),
        )
    )
    entries.append(
        _three_patch_entry(
            "three-patch-fig3",
            "Three patches, good patch rotating each third of the period; symmetric migration "
            "between the good patch and one poor patch.",
            (
                Oracle(
                    "lambda_mInf",
                    lambda p: 0.5 * (p["a"] + p["b"] - 2 * p["m"] + math.sqrt((p["a"] - p["b"]) ** 2 + 4 * p["m"] ** 2)),
                    "(a+b-2m+sqrt((a-b)^2+4m^2))/2",
                    predicates=(m_pos,),
                    needs_m=True,
                ),
                Oracle("lambda_0inf", lambda p: p["a"], "a"),
            ),
            (VerdictOracle("H3", _strict("verified-sampled"), needs_m=True), h4_violated),
        )
    )
    violated_h3 = VerdictOracle("H3", _strict("violated"), needs_m=True)
    for variant in ("1", "2"):
        entries.append(
            _three_patch_entry(
                f"one-way-b-to-b-{variant}",
                "Three patches, good patch rotating each third of the period; one-way migration "
                f"from a poor patch to the other poor patch (rotation order {variant}).",
                (),
                (violated_h3, h4_violated),
            )
        )
    entries.append(
        _three_patch_entry(
            "one-way-b-to-a-1",
            "Three patches, good patch rotating each third of the period; one-way migration "
            "from a poor patch into the good patch (rotation order 1).",
            (),
            (violated_h3, h4_violated),
        )
    )
    entries.append(
        _three_patch_entry(
            "one-way-b-to-a-2",
            "Three patches, good patch rotating each third of the period; one-way migration "
            "from a poor patch into the good patch (rotation order 2).",
            (
                Oracle("lambda_mInf", lambda p: p["a"], "a", predicates=(m_pos,), needs_m=True),
                Oracle("lambda_0inf", lambda p: p["a"], "a"),
            ),
            (VerdictOracle("H3", _strict("verified-sampled"), needs_m=True), h4_violated),
        )
    )
    entries.append(
        _three_patch_entry(
            "one-way-a-to-b-1",
            "Three patches, good patch rotating each third of the period; one-way migration "
            "from the good patch to a poor patch (rotation order 1).",
            (),
            (violated_h3, h4_violated),
        )
    )
    window = Predicate("0 < m < a-b", lambda p: 0 < p["m"] < p["a"] - p["b"])

    def ab2_h3(p):
        if not p["a"] > p["b"] or p["m"] == p["a"] - p["b"]:
            return None
        return "verified-sampled" if p["m"] < p["a"] - p["b"] else "violated"

    entries.append(
        _three_patch_entry(
            "one-way-a-to-b-2",
            "Three patches, good patch rotating each third of the period; one-way migration "
            "from the good patch to a poor patch (rotation order 2).",
            (
                Oracle("lambda_mInf", lambda p: p["a"] - p["m"], "a-m", predicates=(window,), needs_m=True),
                Oracle("lambda_0inf", lambda p: p["a"], "a"),
            ),
            (VerdictOracle("H3", ab2_h3, needs_m=True), h4_violated),
        )
    )
    return tuple(entries)


_CATALOG: tuple | None = None


def catalog() -> list[CatalogEntry]:
    """All built-in entries, in a fixed order."""
    global _CATALOG
    if _CATALOG is None:
        _CATALOG = _build_catalog()
    return list(_CATALOG)


def get_entry(name: str) -> CatalogEntry:
    """Look up an entry by name.

    Raises
    ------
    KeyError
        If no entry has that name.
    """
    for e in catalog():
        if e.name == name:
            return e
    raise KeyError(f"unknown catalog entry {name!r}; available: {[e.name for e in catalog()]}")


@dataclass(frozen=True)
class OracleRow:
    """One line of an oracle comparison."""

    quantity: str
    kind: str
    expected: float | str | None
    computed: float | str | None
    abs_err: float | None
    rel_err: float | None
    tol: float | None
    passed: bool | None
    note: str = ""

    def to_dict(self) -> dict:
        return dict(self.__dict__)


DEFAULT_TOL = {"equal": 1e-10, "upper_bound": 1e-9}


def _computed_values(computed, params: Params) -> tuple[dict, dict]:
    """Normalize supported result objects to (values, verdicts)."""
    from .limits import LimitReport
    from .monodromy import MonodromyResult

    values: dict = {}
    verdicts: dict = {}
    items = computed if isinstance(computed, (list, tuple)) else [computed]
    for item in items:
        if isinstance(item, LimitReport):
            values.update(item.values())
            for key in ("H3", "H4"):
                if key in item.reports:
                    verdicts[key] = item.reports[key].verdict
        elif isinstance(item, MonodromyResult):
            values["lambda_mT"] = item.Lambda
        elif isinstance(item, Mapping):
            for k, v in item.items():
                if k in ("H2", "H3", "H4"):
                    verdicts[k] = v if isinstance(v, str) else v.verdict
                else:
                    values[k] = v
        else:
            raise TypeError(f"unsupported computed object {type(item).__name__}")
    return values, verdicts


def oracle_check(
    entry: CatalogEntry,
    params: Params,
    computed,
    tolerances: Mapping[str, float] | None = None,
) -> list[OracleRow]:
    """Compare computed quantities against an entry's oracles.

    Parameters
    ----------
    entry : CatalogEntry
    params : mapping
        Parameter binding, including ``m`` when m-dependent quantities are
        compared.
    computed : LimitReport, MonodromyResult, mapping, or a list of these
        Mappings may hold quantity values and verdict strings under
        ``"H3"``/``"H4"``.
    tolerances : mapping, optional
        Absolute tolerance per quantity name or per oracle kind.

    Returns
    -------
    list of OracleRow
        Rows for every quantity that has both an oracle and a computed
        value; oracles whose own predicates fail are reported as skipped.

    Raises
    ------
    DomainError
        If ``params`` violate the entry's domain predicates.
    """
    p = entry.binding(**{k: v for k, v in params.items()})
    entry.check_domain(p)
    tolerances = dict(tolerances or {})
    values, verdicts = _computed_values(computed, p)
    rows: list[OracleRow] = []
    for o in entry.oracles:
        if o.quantity not in values:
            continue
        got = values[o.quantity]
        if o.needs_m and "m" not in params:
            rows.append(OracleRow(o.quantity, o.kind, None, got, None, None, None, None, "needs m"))
            continue
        failed = [pred.name for pred in o.predicates if not pred(p)]
        if failed:
            rows.append(OracleRow(o.quantity, o.kind, None, got, None, None, None, None,
                                  f"outside oracle domain: {failed[0]}"))
            continue
        want = o(p)
        if got is None:
            rows.append(OracleRow(o.quantity, o.kind, want, None, None, None, None, None,
                                  "computed value absent"))
            continue
        tol = tolerances.get(o.quantity, tolerances.get(o.kind, DEFAULT_TOL[o.kind]))
        err = float(got) - want
        rel = abs(err) / abs(want) if want != 0 else None
        if o.kind == "upper_bound":
            ok = float(got) <= want + tol
            note = f"bound {o.text}"
        else:
            ok = abs(err) <= tol
            note = o.text
        rows.append(OracleRow(o.quantity, o.kind, want, float(got), abs(err), rel, tol, ok, note))
    for v in entry.verdicts:
        if v.hypothesis not in verdicts:
            continue
        want = v.verdict(p)
        got = verdicts[v.hypothesis]
        if want is None:
            rows.append(OracleRow(f"{v.hypothesis} verdict", "verdict", None, got, None, None, None,
                                  None, "no expected verdict for this binding"))
            continue
        rows.append(OracleRow(f"{v.hypothesis} verdict", "verdict", want, got, None, None, None,
                              got == want))
    return rows
