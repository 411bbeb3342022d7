"""Blind and verified delegated computation over measurement patterns.

A classical client (Alice) drives a physical server (Bob) through a
message channel.  Alice only does arithmetic on quarter-turn angles and
single bits; Bob holds the simulated systems.  Blinding pads every
prepared system with a random quarter rotation and every instruction
with a random outcome key; verification inserts an isolated trap vertex
surrounded by fixed-basis dummies and accepts when the trap outcome
decodes to zero.

Angle encodings: the *quarter* encoding indexes the equator family
(0: X, 1: Y, 2: -X, 3: -Y); the *formula* encoding used on the wire
keeps the sign in the low bit and the basis in the high bit.  The two
are related by swapping bits.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product
from typing import Callable, Mapping

from .algebra import Element, Group
from .dynamics import Permutation, erase, measure_element
from .mbtc import OpenGraph, Pattern, angle_element, find_gflow


def formula_from_quarter(q: int) -> int:
    q %= 4
    return ((q & 1) << 1) | (q >> 1)


def quarter_from_formula(v: int) -> int:
    v %= 4
    return ((v & 1) << 1) | (v >> 1)


def blind_delta(phi: int, theta: int, r: int) -> int:
    """Blinded instruction, all angles in formula encoding."""
    low = (phi & 1) ^ (theta & 1) ^ (r & 1)
    high = ((phi >> 1) ^ (theta >> 1)) & 1
    return (high << 1) | low


# --------------------------------------------------------------------------
# the server
# --------------------------------------------------------------------------

@dataclass
class Deviation:
    """Hooks describing a (possibly dishonest) server strategy.

    ``assume_corrupted`` switches the failure event from "accepted and
    the decoded output left the honest support" to simply "accepted":
    the adversary is credited with having corrupted the computation
    whenever the trap misses it.
    """

    after_entangle: Callable | None = None   # (state) -> state
    before_measure: Callable | None = None   # (site, quarter, state) -> state
    flip_outcome: Callable | None = None     # (site, quarter, outcome) -> outcome
    assume_corrupted: bool = False


class Bob:
    """Honest physical server; a Deviation warps its behavior."""

    def __init__(self, *, rng=None, forced: Mapping | None = None,
                 deviation: Deviation | None = None):
        self.rng = rng
        self.forced = dict(forced) if forced else {}
        self.deviation = deviation
        self.state = None
        self.n = 0
        self.probability = Fraction(1)

    def handle(self, msg: dict) -> dict:
        op = msg["op"]
        if op == "prepare":
            return self._prepare(msg["states"])
        if op == "entangle":
            return self._entangle(msg["edges"])
        if op == "measure":
            return self._measure(msg["site"], msg["angle"])
        raise ValueError(f"unknown op {op!r}")

    def _prepare(self, states) -> dict:
        self.n = len(states)
        gens = []
        for i, spec in enumerate(states):
            if "dummy" in spec:
                e = Element.single(self.n, i, "Z", bool(spec["dummy"]))
            else:
                e = angle_element(self.n, i, quarter_from_formula(spec["angle"]))
            gens.append(e)
        self.state = Group(self.n, gens).require_valid()
        return {"ok": True}

    def _entangle(self, edges) -> dict:
        perm = Permutation.identity(self.n)
        for a, b in edges:
            perm = perm.then(Permutation.controlled(self.n, "cz", a, b))
        self.state = perm.conjugate(self.state)
        dev = self.deviation
        if dev and dev.after_entangle:
            self.state = dev.after_entangle(self.state)
        return {"ok": True}

    def _measure(self, site: int, angle: int) -> dict:
        if self.probability == 0:
            return {"outcome": self.forced.get(site, 0)}
        quarter = quarter_from_formula(angle)
        dev = self.deviation
        if dev and dev.before_measure:
            self.state = dev.before_measure(site, quarter, self.state)
        e = angle_element(self.n, site, quarter)
        out, self.state, p = measure_element(
            self.state, e, rng=self.rng, force=self.forced.get(site))
        self.probability *= p
        if dev and dev.flip_outcome:
            out = dev.flip_outcome(site, quarter, out)
        return {"outcome": out}


class InProcessChannel:
    """Default transport: deliver each message to a local Bob."""

    def __init__(self, bob: Bob):
        self.bob = bob

    def send(self, msg: dict) -> dict:
        return self.bob.handle(msg)


def extremal_deviation(site: int) -> Deviation:
    """Discard the system at ``site`` and substitute a fresh +X system."""

    def swap_in(state: Group) -> Group:
        cleared = erase(state, [site])
        return cleared.extended(Element.single(state.n, site, "X"))

    return Deviation(after_entangle=swap_in, assume_corrupted=True)


def flip_all_deviation() -> Deviation:
    """Bob reports every outcome negated."""
    return Deviation(flip_outcome=lambda site, quarter, o: o ^ 1)


def pauli_deviation(assignments: Mapping) -> Deviation:
    """Apply fixed local permutations (site -> name) after entangling."""

    def warp(state: Group) -> Group:
        perm = Permutation.identity(state.n)
        for site, name in assignments.items():
            perm = perm.then(Permutation.local(state.n, site, name))
        return perm.conjugate(state)

    return Deviation(after_entangle=warp)


def instruction_conditioned_deviation(rule: Callable) -> Deviation:
    """``rule(site, quarter)`` names a local permutation or returns None;
    it is applied to the held state just before that measurement."""

    def warp(site, quarter, state: Group) -> Group:
        name = rule(site, quarter)
        if name is None:
            return state
        return Permutation.local(state.n, site, name).conjugate(state)

    return Deviation(before_measure=warp)


def fuzzer_deviation(rng, rate: float = 0.5) -> Deviation:
    """Random single-site permutation at the measured site, sometimes."""
    from .dynamics import PERMS

    def warp(site, quarter, state: Group) -> Group:
        if rng.random() >= rate:
            return state
        pid = rng.randrange(len(PERMS))
        return Permutation(state.n, (("local", site, pid),)).conjugate(state)

    return Deviation(before_measure=warp)


def deviation_from_factors(spec: list) -> Deviation:
    """User deviation given as a permutation factor list (JSON shape)."""

    def warp(state: Group) -> Group:
        return Permutation.from_json(state.n, spec).conjugate(state)

    return Deviation(after_entangle=warp)


# --------------------------------------------------------------------------
# the client
# --------------------------------------------------------------------------

def _adapt_quarter(q: int, sx: int, sz: int) -> int:
    if sx:
        q = (-q) % 4
    if sz:
        q ^= 2
    return q


@dataclass
class RoundResult:
    deltas: tuple          # (vertex, formula angle) in send order
    raw: tuple             # Bob's reported outcomes, same order
    decoded: dict          # vertex -> decoded outcome
    output: tuple          # decoded outcomes at output vertices, sorted
    accept: bool | None    # trap verdict, None when no trap
    probability: Fraction  # branch weight (1 for sampled runs)
    alice_ops: int         # count of Alice's mod-4 / bit operations


def _run_round(graph: OpenGraph, angles: Mapping, *, prep: Mapping,
               rbits: Mapping, trap=None, channel=None, rng=None,
               forced: Mapping | None = None,
               deviation: Deviation | None = None,
               blinded: bool = True) -> RoundResult:
    """One protocol round.

    ``prep`` maps each vertex to {"angle": formula theta} or
    {"dummy": bit}; ``angles`` holds the computation's quarter angles
    for the non-dummy, non-trap vertices; the trap, when present, runs
    at base angle zero with no adaptation.
    """
    if graph.inputs:
        raise ValueError("delegated rounds take no quantum inputs")
    nodes = list(graph.nodes)
    idx = {v: i for i, v in enumerate(nodes)}
    dummies = {v for v in nodes if "dummy" in prep[v]}
    comp = [v for v in nodes if v not in dummies and v != trap]

    sub = graph.induced(comp)
    pattern = Pattern(sub, {v: angles[v] for v in comp})
    g, layer = (find_gflow(sub, best_effort=True) if comp else ({}, {}))
    order = pattern.measured_order(layer) if comp else []
    if trap is not None:
        order = order + [trap]

    if channel is None:
        bob_forced = ({idx[v]: b for v, b in forced.items()}
                      if forced else None)
        channel = InProcessChannel(Bob(rng=rng, forced=bob_forced,
                                       deviation=deviation))

    zshift = {v: 0 for v in nodes}
    for d in dummies:
        if prep[d]["dummy"]:
            for w in graph.neighbors(d):
                zshift[w] ^= 1

    channel.send({"op": "prepare",
                  "states": [prep[v] for v in nodes]})
    channel.send({"op": "entangle",
                  "edges": [(idx[a], idx[b]) for a, b in graph.edges]})

    sx = {v: 0 for v in nodes}
    sz = {v: 0 for v in nodes}
    deltas = []
    raw = []
    decoded = {}
    ops = 0
    for u in order:
        base = 0 if u == trap else angles[u]
        phi = _adapt_quarter(base, sx[u], sz[u])
        ops += 1
        if blinded:
            theta = quarter_from_formula(prep[u]["angle"])
            theta_eff = (theta + 2 * zshift[u]) % 4
            delta_q = phi ^ theta_eff ^ (rbits[u] << 1)
            ops += 2
        else:
            delta_q = phi
        wire = formula_from_quarter(delta_q)
        reply = channel.send({"op": "measure", "site": idx[u], "angle": wire})
        o = reply["outcome"]
        dec = o ^ rbits[u] if blinded else o
        ops += 1
        deltas.append((u, wire))
        raw.append(o)
        decoded[u] = dec
        if dec and u != trap:
            for j in g.get(u, ()):
                sx[j] ^= 1
                ops += 1
            for j in sub.odd_neighborhood(g.get(u, ())) - {u}:
                sz[j] ^= 1
                ops += 1

    accept = None
    if trap is not None:
        accept = decoded[trap] == 0
    output = tuple(sorted((v, decoded[v]) for v in graph.outputs
                          if v in decoded))
    prob = channel.bob.probability if isinstance(channel, InProcessChannel) \
        else Fraction(1)
    return RoundResult(tuple(deltas), tuple(raw), decoded, output,
                       accept, prob, ops)


def _sample_pads(graph: OpenGraph, rng, dummies=(), trap=None):
    prep = {}
    rbits = {}
    for v in graph.nodes:
        if v in dummies:
            prep[v] = {"dummy": rng.randrange(2)}
            rbits[v] = 0
        else:
            prep[v] = {"angle": rng.randrange(4)}
            rbits[v] = rng.randrange(2)
    return prep, rbits


def run_delegated(pattern: Pattern, *, rng=None, forced=None,
                  deviation=None, channel=None) -> RoundResult:
    """Unblinded delegation: Bob sees the true adapted angles."""
    graph = pattern.graph
    prep = {v: {"angle": 0} for v in graph.nodes}
    rbits = {v: 0 for v in graph.nodes}
    return _run_round(graph, pattern.angles, prep=prep, rbits=rbits,
                      rng=rng, forced=forced, deviation=deviation,
                      channel=channel, blinded=False)


def run_blind(pattern: Pattern, *, rng=None, prep=None, rbits=None,
              forced=None, deviation=None, channel=None) -> RoundResult:
    """Blind delegation: pads chosen by Alice unless pinned explicitly."""
    graph = pattern.graph
    if prep is None or rbits is None:
        sampled = _sample_pads(graph, rng)
        prep = prep if prep is not None else sampled[0]
        rbits = rbits if rbits is not None else sampled[1]
    return _run_round(graph, pattern.angles, prep=prep, rbits=rbits,
                      rng=rng, forced=forced, deviation=deviation,
                      channel=channel)


def run_verified(pattern: Pattern, *, rng=None, trap=None, prep=None,
                 rbits=None, forced=None, deviation=None) -> RoundResult:
    """Blind round with a trap vertex; its neighbors become dummies."""
    graph = pattern.graph
    if trap is None:
        trap = graph.nodes[rng.randrange(len(graph.nodes))]
    dummies = graph.neighbors(trap)
    if prep is None or rbits is None:
        sampled = _sample_pads(graph, rng, dummies=dummies, trap=trap)
        prep = prep if prep is not None else sampled[0]
        rbits = rbits if rbits is not None else sampled[1]
    return _run_round(graph, pattern.angles, prep=prep, rbits=rbits,
                      trap=trap, rng=rng, forced=forced,
                      deviation=deviation)


# --------------------------------------------------------------------------
# exact analysis
# --------------------------------------------------------------------------

def _measured_vertices(graph: OpenGraph, trap, dummies) -> list:
    comp = [v for v in graph.nodes if v != trap and v not in dummies]
    return comp + ([trap] if trap is not None else [])


def _enumerate_rounds(pattern: Pattern, *, trap=None, deviation=None):
    """Yield (weight, RoundResult) over pads and outcome branches."""
    graph = pattern.graph
    dummies = sorted(graph.neighbors(trap)) if trap is not None else []
    measured = _measured_vertices(graph, trap, dummies)
    padded = [v for v in graph.nodes if v not in dummies]
    pad_weight = Fraction(1, 4 ** len(padded) * 2 ** len(dummies)
                          * 2 ** len(measured))
    for thetas in product(range(4), repeat=len(padded)):
        for dbits in product(range(2), repeat=len(dummies)):
            prep = {v: {"angle": t} for v, t in zip(padded, thetas)}
            prep.update({d: {"dummy": b} for d, b in zip(dummies, dbits)})
            for rvals in product(range(2), repeat=len(measured)):
                rbits = {v: 0 for v in graph.nodes}
                rbits.update(dict(zip(measured, rvals)))
                for bits in product(range(2), repeat=len(measured)):
                    forced = dict(zip(measured, bits))
                    res = _run_round(graph, pattern.angles, prep=prep,
                                     rbits=rbits, trap=trap, forced=forced,
                                     deviation=deviation)
                    if res.probability:
                        yield pad_weight * res.probability, res


def honest_output_support(pattern: Pattern, trap=None) -> frozenset:
    """Decoded output tuples an honest round can produce for this trap."""
    support = set()
    graph = pattern.graph
    dummies = graph.neighbors(trap) if trap is not None else set()
    measured = _measured_vertices(graph, trap, dummies)
    prep = {v: ({"dummy": 0} if v in dummies else {"angle": 0})
            for v in graph.nodes}
    rbits = {v: 0 for v in graph.nodes}
    for bits in product(range(2), repeat=len(measured)):
        forced = dict(zip(measured, bits))
        res = _run_round(graph, pattern.angles, prep=prep, rbits=rbits,
                         trap=trap, forced=forced)
        if res.probability:
            support.add(res.output)
    return frozenset(support)


def exact_pfail(pattern: Pattern, deviation: Deviation) -> Fraction:
    """P(accept and the computation was corrupted), trap uniform."""
    graph = pattern.graph
    total = Fraction(0)
    for trap in graph.nodes:
        honest = (None if deviation.assume_corrupted
                  else honest_output_support(pattern, trap))
        for w, res in _enumerate_rounds(pattern, trap=trap,
                                        deviation=deviation):
            if not res.accept:
                continue
            if deviation.assume_corrupted or res.output not in honest:
                total += w
    return total / len(graph.nodes)


def wilson_interval(k: int, n: int, z: float = 1.959963984540054):
    """Wilson score 95% interval for a binomial proportion."""
    if n == 0:
        return (0.0, 1.0)
    p = k / n
    denom = 1 + z * z / n
    center = (p + z * z / (2 * n)) / denom
    half = (z / denom) * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n))
    return (max(0.0, center - half), min(1.0, center + half))


def estimate_pfail(pattern: Pattern, deviation: Deviation, *, rng,
                   trials: int) -> dict:
    """Monte Carlo failure estimate with a Wilson 95% interval."""
    graph = pattern.graph
    honest = {} if deviation.assume_corrupted else \
        {t: honest_output_support(pattern, t) for t in graph.nodes}
    fails = 0
    for _ in range(trials):
        trap = graph.nodes[rng.randrange(len(graph.nodes))]
        res = run_verified(pattern, rng=rng, trap=trap, deviation=deviation)
        if res.accept and (deviation.assume_corrupted
                           or res.output not in honest[trap]):
            fails += 1
    lo, hi = wilson_interval(fails, trials)
    return {"estimate": fails / trials, "fails": fails, "trials": trials,
            "interval": (lo, hi), "is_estimate": True}


# --------------------------------------------------------------------------
# blindness audit
# --------------------------------------------------------------------------

def server_view_distribution(pattern: Pattern) -> dict:
    """Exact distribution of Bob's transcript (instructions, outcomes)."""
    dist: dict = {}
    for w, res in _enumerate_rounds(pattern):
        key = (res.deltas, res.raw)
        dist[key] = dist.get(key, Fraction(0)) + w
    assert sum(dist.values()) == 1
    return dist


def view_distance(a: dict, b: dict) -> Fraction:
    keys = set(a) | set(b)
    return sum(abs(a.get(k, Fraction(0)) - b.get(k, Fraction(0)))
               for k in keys) / 2
