"""Index sets and index families on the faces of the resolvent and heat double spaces.

An index set is a set of pairs (z, p) closed under (z, p) -> (z + 1, p) and
(z, p) -> (z, q) for q <= p. Sets are stored by their minimal generators
together with a truncation order; every query is answered below that order.
"""

import math
from dataclasses import dataclass, field

FACES = ("zf", "bf0", "lb0", "rb0", "sc", "lb", "rb", "bf")
DECAYING_FACES = ("lb", "rb", "bf")
DEFAULT_TRUNCATION = 8.0
_DIGITS = 10


def _key(z):
    return round(float(z), _DIGITS)


def _dominates(a, b):
    """True if the generator a implies membership of b."""
    diff = b[0] - a[0]
    k = round(diff)
    return abs(diff - k) < 10.0 ** -_DIGITS and k >= 0 and b[1] <= a[1]


@dataclass(frozen=True)
class IndexSet:
    """Index set given by an antichain of generators below a truncation order.

    Parameters
    ----------
    generators : iterable of (order, log_power)
    truncation : float
        Membership is only tracked for orders strictly below this value.
        An empty generator set is the empty index set (decay to infinite
        order) and has infinite truncation.
    """

    generators: frozenset = field(default_factory=frozenset)
    truncation: float = DEFAULT_TRUNCATION

    def __post_init__(self):
        gens = set()
        for z, p in self.generators:
            if int(p) != p or p < 0:
                raise ValueError("log powers must be nonnegative integers")
            if _key(z) < self.truncation:
                gens.add((_key(z), int(p)))
        reduced = frozenset(g for g in gens
                            if not any(h != g and _dominates(h, g) for h in gens))
        object.__setattr__(self, "generators", reduced)
        if not reduced:
            object.__setattr__(self, "truncation", math.inf)

    @classmethod
    def of(cls, *pairs, truncation=DEFAULT_TRUNCATION):
        return cls(frozenset(pairs), truncation)

    @classmethod
    def empty(cls):
        return cls(frozenset(), math.inf)

    @property
    def is_empty(self):
        return not self.generators

    def members(self):
        """Dict order -> largest log power, for every order below truncation."""
        out = {}
        for z, p in self.generators:
            k = 0
            while z + k < self.truncation:
                key = _key(z + k)
                out[key] = max(out.get(key, -1), p)
                k += 1
        return out

    def contains(self, z, p=0):
        if _key(z) >= self.truncation:
            raise ValueError(f"order {z} is at or above the truncation {self.truncation}")
        return any(_dominates(g, (_key(z), p)) for g in self.generators)

    def leading(self):
        """(order, log power) of the smallest order, or (inf, 0) if empty."""
        if self.is_empty:
            return (math.inf, 0)
        z = min(g[0] for g in self.generators)
        return (z, max(p for g0, p in self.generators if g0 == z))

    def equivalent(self, other):
        """Same members below the smaller truncation."""
        t = min(self.truncation, other.truncation)
        a = {z: p for z, p in self.members().items() if z < t}
        b = {z: p for z, p in other.members().items() if z < t}
        return a == b

    def __str__(self):
        if self.is_empty:
            return "{}"
        body = ", ".join(f"({_fmt(z)},{p})" for z, p in sorted(self.generators))
        return "{" + body + "}"


def _fmt(z):
    return str(int(z)) if float(z).is_integer() else f"{z:g}"


def _from_members(members, truncation):
    return IndexSet(frozenset(members.items()), truncation)


def shift(e, c):
    """Every (z, p) moves to (z + c, p)."""
    if e.is_empty:
        return e
    return IndexSet(frozenset((z + c, p) for z, p in e.generators), e.truncation + c)


def index_sum(e, f):
    """E + F = {(z + w, p + q)}; empty if either is empty."""
    if e.is_empty or f.is_empty:
        return IndexSet.empty()
    trunc = min(e.truncation + f.leading()[0], f.truncation + e.leading()[0])
    gens = {(z + w, p + q) for z, p in e.generators for w, q in f.generators}
    return IndexSet(frozenset(gens), trunc)


def extended_union(e, f):
    """E ∪ F together with (z, p + q + 1) wherever (z, p) ∈ E and (z, q) ∈ F.

    Coincidences are taken over the full (closed) sets, so {(0,0)} and
    {(1,0)} coincide at order 1 and produce (1, 1).
    """
    if e.is_empty:
        return f
    if f.is_empty:
        return e
    trunc = min(e.truncation, f.truncation)
    me, mf = e.members(), f.members()
    out = {}
    for z in set(me) | set(mf):
        if z >= trunc:
            continue
        if z in me and z in mf:
            out[z] = me[z] + mf[z] + 1
        else:
            out[z] = me.get(z, mf.get(z))
    return _from_members(out, trunc)


def union(e, f):
    """Plain union."""
    if e.is_empty:
        return f
    if f.is_empty:
        return e
    return IndexSet(e.generators | f.generators, min(e.truncation, f.truncation))


@dataclass(frozen=True)
class IndexFamily:
    """Index sets on the eight faces.

    ``upper_bound`` marks families that bound the true index sets from
    above rather than equal them.
    """

    sets: tuple
    upper_bound: bool = False

    def __post_init__(self):
        d = dict(self.sets)
        missing = [f for f in FACES if f not in d]
        if missing:
            raise ValueError(f"index family is missing faces {missing}")
        object.__setattr__(self, "sets", tuple((f, d[f]) for f in FACES))

    @classmethod
    def from_dict(cls, mapping, upper_bound=False):
        full = {f: IndexSet.empty() for f in FACES}
        full.update(mapping)
        return cls(tuple(full.items()), upper_bound)

    def __getitem__(self, face):
        return dict(self.sets)[face]

    def as_dict(self):
        return dict(self.sets)

    def replace(self, upper_bound=None, **faces):
        d = self.as_dict()
        d.update(faces)
        return IndexFamily.from_dict(d, self.upper_bound if upper_bound is None else upper_bound)


def compose_families(e, f):
    """Index family of a composition A B with A, B having families E, F."""
    eu, s = extended_union, index_sum
    g = {
        "sc": s(e["sc"], f["sc"]),
        "zf": eu(s(e["zf"], f["zf"]), s(e["rb0"], f["lb0"])),
        "bf0": eu(s(e["bf0"], f["bf0"]), s(e["lb0"], f["rb0"])),
        "lb0": eu(s(e["bf0"], f["lb0"]), s(e["lb0"], f["zf"])),
        "rb0": eu(s(e["rb0"], f["bf0"]), s(e["zf"], f["rb0"])),
    }
    for face in DECAYING_FACES:
        g[face] = IndexSet.empty()
        if not (e[face].is_empty and f[face].is_empty):
            raise ValueError(f"composition is only modelled with empty {face}")
    return IndexFamily.from_dict(g, e.upper_bound or f.upper_bound)


def low_energy_resolvent_family(n, truncation=DEFAULT_TRUNCATION):
    """Leading index family of the low-energy resolvent for n >= 3."""
    if n < 3:
        raise ValueError("use two_dimensional_resolvent_family for n = 2")
    return IndexFamily.from_dict({
        "sc": IndexSet.of((0, 0), truncation=truncation),
        "bf0": IndexSet.of((n - 2, 0), truncation=truncation),
        "lb0": IndexSet.of((n - 2, 0), truncation=truncation),
        "rb0": IndexSet.of((n - 2, 0), truncation=truncation),
        "zf": IndexSet.of((0, 0), truncation=truncation),
    })


def two_dimensional_resolvent_family(truncation=DEFAULT_TRUNCATION):
    """n = 2: as for n >= 3 with n - 2 = 0, but log growth (0, 1) at zf."""
    o = IndexSet.of((0, 0), truncation=truncation)
    return IndexFamily.from_dict({
        "sc": o, "bf0": o, "lb0": o, "rb0": o,
        "zf": IndexSet.of((0, 1), truncation=truncation),
    })


def resolvent_family(n, truncation=DEFAULT_TRUNCATION):
    if n == 2:
        return two_dimensional_resolvent_family(truncation)
    return low_energy_resolvent_family(n, truncation)


def apply_gaussian_bound(e, n):
    """Raise an index set to order at least n with no log at order n.

    A heat kernel bounded by C w^n cannot have terms below w^n or
    w^n log w, so those members are dropped and (n, 0) is added.
    """
    if e.is_empty:
        return e
    members = {z: p for z, p in e.members().items() if z > n + 1e-12}
    if n < e.truncation:
        members[_key(n)] = max(0, members.get(_key(n), 0))
    return _from_members(members, e.truncation)


def heat_family_from_resolvent(r, n, apply_bound_override=True):
    """Index family bounding the heat kernel from that of the resolvent.

    sc is unchanged and bf0, lb0, rb0, zf are shifted by 2. With
    ``apply_bound_override`` the zf set is raised to order n by the Gaussian
    upper bound. The result is flagged as an upper bound.
    """
    for face in DECAYING_FACES:
        if not r[face].is_empty:
            raise ValueError(f"resolvent family must be empty at {face}")
    h = {"sc": r["sc"]}
    for face in ("bf0", "lb0", "rb0", "zf"):
        h[face] = shift(r[face], 2)
    if apply_bound_override:
        h["zf"] = apply_gaussian_bound(h["zf"], n)
    return IndexFamily.from_dict(h, upper_bound=True)


def leading_order_table(family):
    """Map face -> (order, log_power); empty faces give (inf, 0)."""
    return {face: family[face].leading() for face in FACES}


def render_table(family):
    """Text table, one face per line: 'face: order[+log^p]'."""
    lines = []
    for face, (z, p) in leading_order_table(family).items():
        if math.isinf(z):
            txt = "inf"
        else:
            txt = _fmt(z) + ("" if p == 0 else ("+log" if p == 1 else f"+log^{p}"))
        lines.append(f"{face}: {txt}")
    if family.upper_bound:
        lines.append("(upper bound)")
    return "\n".join(lines)
