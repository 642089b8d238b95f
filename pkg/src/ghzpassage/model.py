"""Configuration space of the fiber-coupled cavity chain.

N atoms (odd, N >= 3) sit in N cavities joined by N-1 fibers.  Each atom has
one excited level ``e`` and three ground levels ``gL, g0, gR``.  End cavities
carry a single mode (left-circular for cavity 1, right-circular for cavity N);
middle cavities carry both.  Fiber ``j`` (0-based) joins cavities ``j`` and
``j+1`` through their left modes when ``j`` is even and right modes when odd.

Bases are never hand-listed: they are generated by closing the initial product
state under the coherent couplings (and, for the dissipative basis, under the
jump channels as well).
"""

from __future__ import annotations

import enum
import math
from collections import deque
from dataclasses import dataclass, field, replace
from typing import Iterator, NamedTuple, Sequence


class AtomLevel(enum.Enum):
    E = "e"
    GL = "gL"
    G0 = "g0"
    GR = "gR"

    @property
    def is_ground(self) -> bool:
        return self is not AtomLevel.E

    def __str__(self) -> str:
        return self.value


LEFT = "l"
RIGHT = "r"


def cavity_polarizations(i: int, n_atoms: int) -> tuple[str, ...]:
    """Modes present in cavity ``i`` (0-based), in storage order."""
    pols = []
    if i <= n_atoms - 2:
        pols.append(LEFT)
    if i >= 1:
        pols.append(RIGHT)
    return tuple(pols)


def fiber_endpoints(j: int) -> tuple[tuple[int, str], tuple[int, str]]:
    """The two cavity modes coupled by fiber ``j`` (0-based)."""
    pol = LEFT if j % 2 == 0 else RIGHT
    return (j, pol), (j + 1, pol)


@dataclass(frozen=True)
class BasisState:
    """One atomic configuration plus the photon content of every mode.

    ``cavity_occ[i]`` holds one count per mode of cavity ``i`` in the order
    given by :func:`cavity_polarizations`; ``fiber_occ`` has N-1 entries.
    """

    atoms: tuple[AtomLevel, ...]
    cavity_occ: tuple[tuple[int, ...], ...]
    fiber_occ: tuple[int, ...]

    def __post_init__(self) -> None:
        n = len(self.atoms)
        if len(self.cavity_occ) != n or len(self.fiber_occ) != n - 1:
            raise ValueError("mode layout does not match the number of atoms")
        for i, occ in enumerate(self.cavity_occ):
            if len(occ) != len(cavity_polarizations(i, n)):
                raise ValueError(f"cavity {i} has the wrong number of modes")
        # single-excitation sector: no state in the closure ever has n > 1
        assert all(x in (0, 1) for occ in self.cavity_occ for x in occ)
        assert all(x in (0, 1) for x in self.fiber_occ)

    @property
    def n_atoms(self) -> int:
        return len(self.atoms)

    def cavity(self, i: int, pol: str) -> int:
        return self.cavity_occ[i][cavity_polarizations(i, self.n_atoms).index(pol)]

    @property
    def n_excited(self) -> int:
        return sum(a is AtomLevel.E for a in self.atoms)

    @property
    def n_cavity_photons(self) -> int:
        return sum(sum(occ) for occ in self.cavity_occ)

    @property
    def n_fiber_photons(self) -> int:
        return sum(self.fiber_occ)

    @property
    def is_vacuum(self) -> bool:
        return self.n_cavity_photons == 0 and self.n_fiber_photons == 0

    def with_atom(self, i: int, level: AtomLevel) -> BasisState:
        atoms = list(self.atoms)
        atoms[i] = level
        return replace(self, atoms=tuple(atoms))

    def with_cavity(self, i: int, pol: str, count: int) -> BasisState:
        occ = list(self.cavity_occ[i])
        occ[cavity_polarizations(i, self.n_atoms).index(pol)] = count
        cav = list(self.cavity_occ)
        cav[i] = tuple(occ)
        return replace(self, cavity_occ=tuple(cav))

    def with_fiber(self, j: int, count: int) -> BasisState:
        fib = list(self.fiber_occ)
        fib[j] = count
        return replace(self, fiber_occ=tuple(fib))

    def label(self) -> str:
        atoms = ",".join(str(a) for a in self.atoms)
        fields = []
        for i, occ in enumerate(self.cavity_occ):
            fields.append(f"c{i + 1}=" + "".join(str(x) for x in occ))
            if i < len(self.fiber_occ):
                fields.append(f"f{i + 1}={self.fiber_occ[i]}")
        return f"|{atoms}> " + " ".join(fields)

    def __str__(self) -> str:
        return self.label()


def vacuum_state(atoms: Sequence[AtomLevel]) -> BasisState:
    n = len(atoms)
    return BasisState(
        atoms=tuple(atoms),
        cavity_occ=tuple(tuple(0 for _ in cavity_polarizations(i, n)) for i in range(n)),
        fiber_occ=(0,) * (n - 1),
    )


def initial_atoms(n_atoms: int) -> tuple[AtomLevel, ...]:
    """g0, gL, gR, gL, gR, ..., gR."""
    return (AtomLevel.G0,) + tuple(
        AtomLevel.GL if k % 2 == 1 else AtomLevel.GR for k in range(1, n_atoms)
    )


def target_atoms(n_atoms: int) -> tuple[AtomLevel, ...]:
    """gL, gR, gL, gR, ..., g0: the configuration after full transfer."""
    return tuple(
        AtomLevel.GL if k % 2 == 0 else AtomLevel.GR for k in range(n_atoms - 1)
    ) + (AtomLevel.G0,)


def initial_state(n_atoms: int) -> BasisState:
    return vacuum_state(initial_atoms(n_atoms))


def target_state(n_atoms: int) -> BasisState:
    return vacuum_state(target_atoms(n_atoms))


@dataclass(frozen=True)
class SystemParams:
    """Physical constants and pulse parameters, frequencies in units of g.

    ``gamma`` is the spontaneous-emission rate of each of the three decay
    branches of an excited atom (the total rate is ``3 * gamma``).
    """

    n_atoms: int = 3
    g: float = 1.0
    v: float = 10.0
    omega0: float = 0.1
    alpha: float = math.pi / 4
    tau: float = 50.0
    T: float = 80.0
    phi1: float = 0.0
    phiN: float = math.pi
    kappa: float = 0.0
    k_fiber: float = 0.0
    gamma: float = 0.0

    def __post_init__(self) -> None:
        if not isinstance(self.n_atoms, int) or isinstance(self.n_atoms, bool):
            raise ValueError(f"n_atoms must be an integer, got {self.n_atoms!r}")
        if self.n_atoms < 3 or self.n_atoms % 2 == 0:
            raise ValueError(
                f"n_atoms must be odd and >= 3 (even chains are unsupported), got {self.n_atoms}"
            )
        for name in ("g", "v", "omega0", "kappa", "k_fiber", "gamma"):
            value = getattr(self, name)
            if not math.isfinite(value) or value < 0:
                raise ValueError(f"{name} must be finite and >= 0, got {value}")
        if not (math.isfinite(self.T) and self.T > 0):
            raise ValueError(f"T must be > 0, got {self.T}")
        for name in ("alpha", "tau", "phi1", "phiN"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")

    def replace(self, **changes) -> SystemParams:
        return replace(self, **changes)

    @property
    def basis_size(self) -> int:
        return 4 * self.n_atoms - 1


# --- coherent couplings --------------------------------------------------------

class Coupling(NamedTuple):
    """One matrix element <target|H|source> of the coherent Hamiltonian.

    ``kind`` is one of ``"drive1"``, ``"driveN"``, ``"g"``, ``"v"``;
    ``raising`` tells which side of a laser term (g0 -> e is raising).
    """

    target: BasisState
    kind: str
    raising: bool


def coherent_couplings(state: BasisState) -> Iterator[Coupling]:
    """All states reached from ``state`` by one term of the Hamiltonian."""
    n = state.n_atoms
    atoms = state.atoms
    # laser drives on the end atoms
    for i, kind in ((0, "drive1"), (n - 1, "driveN")):
        if atoms[i] is AtomLevel.G0:
            yield Coupling(state.with_atom(i, AtomLevel.E), kind, True)
        elif atoms[i] is AtomLevel.E:
            yield Coupling(state.with_atom(i, AtomLevel.G0), kind, False)
    # atom-cavity: e <-> gL via the left mode, e <-> gR via the right mode
    for i in range(n):
        for pol, ground in ((LEFT, AtomLevel.GL), (RIGHT, AtomLevel.GR)):
            if pol not in cavity_polarizations(i, n):
                continue
            occ = state.cavity(i, pol)
            if atoms[i] is ground and occ == 1:
                yield Coupling(state.with_atom(i, AtomLevel.E).with_cavity(i, pol, 0), "g", True)
            elif atoms[i] is AtomLevel.E:
                assert occ == 0, "double photon occupancy reached"
                yield Coupling(state.with_atom(i, ground).with_cavity(i, pol, 1), "g", False)
    # cavity-fiber hopping
    for j in range(n - 1):
        b = state.fiber_occ[j]
        for ci, pol in fiber_endpoints(j):
            a = state.cavity(ci, pol)
            if a == 1 and b == 0:
                yield Coupling(state.with_cavity(ci, pol, 0).with_fiber(j, 1), "v", True)
            elif a == 0 and b == 1:
                yield Coupling(state.with_cavity(ci, pol, 1).with_fiber(j, 0), "v", False)
            elif a == 1 and b == 1:
                raise AssertionError("double photon occupancy reached")


# --- jump channels -----------------------------------------------------------------

@dataclass(frozen=True)
class JumpChannel:
    """A single decay channel: photon loss from one mode or one atomic branch.

    ``rate`` names the :class:`SystemParams` field holding its rate.
    """

    label: str
    rate: str
    kind: str  # "cavity" | "fiber" | "atom"
    site: int
    mode: str = ""

    def apply(self, state: BasisState) -> BasisState | None:
        """Image of ``state`` under the (unit-amplitude) jump operator, or None."""
        if self.kind == "cavity":
            if state.cavity(self.site, self.mode) == 1:
                return state.with_cavity(self.site, self.mode, 0)
            return None
        if self.kind == "fiber":
            if state.fiber_occ[self.site] == 1:
                return state.with_fiber(self.site, 0)
            return None
        if state.atoms[self.site] is AtomLevel.E:
            return state.with_atom(self.site, AtomLevel(self.mode))
        return None


def jump_channels(n_atoms: int) -> list[JumpChannel]:
    """Cavity modes, then fibers, then atomic branches, in a fixed order."""
    channels = []
    for i in range(n_atoms):
        for pol in cavity_polarizations(i, n_atoms):
            channels.append(JumpChannel(f"a_{i + 1}{pol}", "kappa", "cavity", i, pol))
    for j in range(n_atoms - 1):
        channels.append(JumpChannel(f"b_{j + 1}", "k_fiber", "fiber", j))
    for i in range(n_atoms):
        for level in (AtomLevel.G0, AtomLevel.GL, AtomLevel.GR):
            channels.append(JumpChannel(f"S-_{i + 1},{level.value}", "gamma", "atom", i, level.value))
    return channels


# --- bases -----------------------------------------------------------------------

@dataclass(frozen=True)
class Basis:
    """Ordered basis with O(1) lookup in both directions."""

    states: tuple[BasisState, ...]
    n_coherent: int
    _index: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        index = {s: k for k, s in enumerate(self.states)}
        if len(index) != len(self.states):
            raise ValueError("duplicate states in basis")
        object.__setattr__(self, "_index", index)

    @property
    def n_atoms(self) -> int:
        return self.states[0].n_atoms

    def __len__(self) -> int:
        return len(self.states)

    def __iter__(self) -> Iterator[BasisState]:
        return iter(self.states)

    def __getitem__(self, k: int) -> BasisState:
        return self.states[k]

    def __contains__(self, state: object) -> bool:
        return state in self._index

    def index_of(self, state: BasisState) -> int:
        try:
            return self._index[state]
        except KeyError:
            raise KeyError(f"state not in basis: {state}") from None

    def state_of(self, index: int) -> BasisState:
        if not 0 <= index < len(self.states):
            raise IndexError(f"basis index {index} out of range [0, {len(self.states)})")
        return self.states[index]


def _close(seeds: list[BasisState], known: dict[BasisState, None]) -> None:
    """Breadth-first closure under the coherent couplings, appending to ``known``."""
    queue = deque(seeds)
    while queue:
        s = queue.popleft()
        for c in coherent_couplings(s):
            if c.target not in known:
                known[c.target] = None
                queue.append(c.target)


def _check_params(params: SystemParams | int) -> int:
    n = params.n_atoms if isinstance(params, SystemParams) else params
    if n < 3 or n % 2 == 0:
        raise ValueError(f"only odd chains with N >= 3 are supported, got N={n}")
    return n


def enumerate_coherent_basis(params: SystemParams | int) -> Basis:
    """Closure of the initial product state under the Hamiltonian, in BFS order."""
    n = _check_params(params)
    start = initial_state(n)
    known: dict[BasisState, None] = {start: None}
    _close([start], known)
    states = tuple(known)
    return Basis(states, n_coherent=len(states))


def enumerate_dissipative_basis(params: SystemParams | int) -> Basis:
    """Coherent basis followed by every state one jump away (re-closed under H)."""
    n = _check_params(params)
    coherent = enumerate_coherent_basis(n)
    known: dict[BasisState, None] = dict.fromkeys(coherent.states)
    new: list[BasisState] = []
    channels = jump_channels(n)
    for s in coherent.states:
        for ch in channels:
            t = ch.apply(s)
            if t is not None and t not in known:
                known[t] = None
                new.append(t)
    _close(new, known)
    return Basis(tuple(known), n_coherent=len(coherent))


def index_of(state: BasisState, basis: Basis) -> int:
    return basis.index_of(state)


def state_of(index: int, basis: Basis) -> BasisState:
    return basis.state_of(index)
