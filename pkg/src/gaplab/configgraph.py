"""Reversible Turing machines, configuration graphs, and spectra of A'^dag A'.

The adjacency matrix uses the step-map convention A|u> = |step(u)>, so
A[v, u] = 1 when there is an edge u -> v and (A^dag A)[u, v] counts common
out-neighbors.  Reversibility means every configuration has in-degree and
out-degree at most one before the graph is modified.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq
from scipy.sparse import csr_matrix

DEFAULT_CONFIG_CAP = 2**20
DEFAULT_DENSE_CAP = 4096

Config = tuple[str, int, tuple[str, ...]]


@dataclass(frozen=True)
class ReversibleTM:
    states: tuple[str, ...]
    alphabet: tuple[str, ...]
    start: str
    accept: str
    reject: str
    transitions: dict  # (state, symbol) -> (state, symbol, move in {L, R, S})
    space_bound: int

    def __post_init__(self):
        if self.space_bound < 1:
            raise ValueError("space bound must be at least one cell")
        names = set(self.states)
        for role, state in (("start", self.start), ("accept", self.accept), ("reject", self.reject)):
            if state not in names:
                raise ValueError(f"{role} state {state!r} not among states")
        if len({self.start, self.accept, self.reject}) != 3:
            raise ValueError("start, accept, and reject states must be distinct")
        symbols = set(self.alphabet)
        for (q, a), (q2, b, move) in self.transitions.items():
            if q in (self.accept, self.reject):
                raise ValueError(f"halting state {q!r} has an outgoing rule")
            if q not in names or q2 not in names:
                raise ValueError(f"rule ({q},{a}) -> ({q2},...) uses unknown state")
            if a not in symbols or b not in symbols:
                raise ValueError(f"rule ({q},{a}) -> (...,{b},...) uses unknown symbol")
            if move not in ("L", "R", "S"):
                raise ValueError(f"bad head move {move!r}")

    @property
    def blank(self) -> str:
        return self.alphabet[0]

    def config_count(self) -> int:
        return len(self.states) * self.space_bound * len(self.alphabet) ** self.space_bound

    def config_index(self, config: Config) -> int:
        state, head, tape = config
        a = len(self.alphabet)
        digits = 0
        for sym in tape:
            digits = digits * a + self.alphabet.index(sym)
        return (self.states.index(state) * self.space_bound + head) * a**self.space_bound + digits

    def config_from_index(self, index: int) -> Config:
        a = len(self.alphabet)
        tape_digits = index % a**self.space_bound
        rest = index // a**self.space_bound
        head = rest % self.space_bound
        state = self.states[rest // self.space_bound]
        tape = []
        for j in range(self.space_bound - 1, -1, -1):
            tape.append(self.alphabet[(tape_digits // a**j) % a])
        return (state, head, tuple(tape))

    def step(self, config: Config) -> Config | None:
        """One machine step, or None when the configuration halts or hangs."""
        state, head, tape = config
        if state in (self.accept, self.reject):
            return None
        rule = self.transitions.get((state, tape[head]))
        if rule is None:
            return None
        q2, b, move = rule
        new_head = head + {"L": -1, "R": 1, "S": 0}[move]
        if not 0 <= new_head < self.space_bound:
            return None
        new_tape = list(tape)
        new_tape[head] = b
        return (q2, new_head, tuple(new_tape))

    def predecessors(self, config: Config) -> list[Config]:
        """All configurations mapping to ``config`` in one step (reversibility
        means there should be at most one)."""
        state, head, tape = config
        preds = []
        for (q, a), (q2, b, move) in self.transitions.items():
            if q2 != state:
                continue
            prev_head = head - {"L": -1, "R": 1, "S": 0}[move]
            if not 0 <= prev_head < self.space_bound:
                continue
            if tape[prev_head] != b:
                continue
            prev_tape = list(tape)
            prev_tape[prev_head] = a
            cand = (q, prev_head, tuple(prev_tape))
            if self.step(cand) == config:
                preds.append(cand)
        return preds

    def start_config(self, input_symbols: str | tuple[str, ...]) -> Config:
        symbols = tuple(input_symbols)
        if len(symbols) > self.space_bound:
            raise ValueError(
                f"input of length {len(symbols)} exceeds space bound {self.space_bound}"
            )
        bad = [s for s in symbols if s not in self.alphabet]
        if bad:
            raise ValueError(f"input symbols {bad} not in the alphabet")
        tape = symbols + (self.blank,) * (self.space_bound - len(symbols))
        return (self.start, 0, tape)


def config_label(config: Config) -> str:
    state, head, tape = config
    return f"{state}@{head}:{''.join(tape)}"


@dataclass(frozen=True)
class ConfigGraph:
    """Full configuration graph over the space bound, with designated start,
    accept, and reject vertices."""

    tm: ReversibleTM
    input_symbols: tuple[str, ...]
    vertices: tuple[Config, ...]
    edges: tuple[tuple[int, int], ...]  # (source index, target index)
    start_index: int
    accept_index: int
    reject_index: int

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    def out_degree(self) -> np.ndarray:
        deg = np.zeros(self.n_vertices, dtype=int)
        for u, _ in self.edges:
            deg[u] += 1
        return deg

    def in_degree(self) -> np.ndarray:
        deg = np.zeros(self.n_vertices, dtype=int)
        for _, v in self.edges:
            deg[v] += 1
        return deg

    def accept_distance(self) -> int | None:
        """Steps from the start to the accept vertex along step edges, or None."""
        succ = {u: v for u, v in self.edges}
        seen = set()
        node, dist = self.start_index, 0
        while node not in seen:
            if node == self.accept_index:
                return dist
            seen.add(node)
            if node not in succ:
                return None
            node = succ[node]
            dist += 1
        return None


def _run_orbit(tm: ReversibleTM, start: Config, cap: int) -> list[Config]:
    orbit, seen = [start], {start}
    node = start
    for _ in range(cap):
        nxt = tm.step(node)
        if nxt is None or nxt in seen:
            break
        orbit.append(nxt)
        seen.add(nxt)
        node = nxt
    return orbit


def _canonical_config(tm: ReversibleTM, run: list[Config], state: str) -> Config:
    for cfg in run:
        if cfg[0] == state:
            return cfg
    # lexicographically first configuration in that state: head 0, blank tape
    return (state, 0, (tm.blank,) * tm.space_bound)


def build_config_graph(
    tm: ReversibleTM,
    input_symbols: str | tuple[str, ...],
    config_cap: int = DEFAULT_CONFIG_CAP,
    scope: str = "reachable",
    declared_accept: Config | None = None,
) -> ConfigGraph:
    """Build the configuration graph; rejects irreversible machines with a
    witness pair.

    ``scope='full'`` enumerates every configuration over the space bound.
    ``scope='reachable'`` keeps the declared instance structure: the run from
    the start configuration plus the chain of configurations feeding the
    accept vertex (and a canonical reject vertex when the run never rejects).
    """
    start = tm.start_config(input_symbols)
    if scope == "full":
        count = tm.config_count()
        if count > config_cap:
            raise ValueError(
                f"machine has {count} configurations, above the cap {config_cap}"
            )
        vertices = tuple(tm.config_from_index(i) for i in range(count))
        run = _run_orbit(tm, start, count)
        accept = (
            declared_accept
            if declared_accept is not None
            else _canonical_config(tm, run, tm.accept)
        )
        reject = _canonical_config(tm, run, tm.reject)
    elif scope == "reachable":
        run = _run_orbit(tm, start, config_cap)
        accept = (
            declared_accept
            if declared_accept is not None
            else _canonical_config(tm, run, tm.accept)
        )
        reject = _canonical_config(tm, run, tm.reject)
        keep = set(run) | {accept, reject}
        # the chain of configurations feeding the accept vertex
        node, steps = accept, 0
        while steps <= config_cap:
            preds = [p for p in tm.predecessors(node) if p not in keep]
            if not preds:
                break
            keep.update(preds)
            node = preds[0]
            steps += 1
        vertices = tuple(sorted(keep, key=tm.config_index))
    else:
        raise ValueError(f"unknown scope {scope!r}")

    index = {cfg: i for i, cfg in enumerate(vertices)}
    edges = []
    pred_of: dict[int, int] = {}
    for i, cfg in enumerate(vertices):
        nxt = tm.step(cfg)
        if nxt is None or nxt not in index:
            continue
        j = index[nxt]
        if j in pred_of:
            raise ValueError(
                "irreversible machine: configurations "
                f"{config_label(vertices[pred_of[j]])} and {config_label(cfg)} "
                f"both step to {config_label(nxt)}"
            )
        pred_of[j] = i
        edges.append((i, j))

    return ConfigGraph(
        tm=tm,
        input_symbols=tuple(input_symbols),
        vertices=vertices,
        edges=tuple(edges),
        start_index=index[start],
        accept_index=index[accept],
        reject_index=index[reject],
    )


@dataclass(frozen=True)
class ModifiedGraph:
    """Configuration graph with self-loops everywhere except the start, accept,
    and tail vertices, plus the tail chain accept -> 1 -> ... -> t -> start."""

    base: ConfigGraph
    tail_length: int
    self_loops: frozenset
    adjacency: csr_matrix  # A'[v, u] = 1 for edge u -> v

    @property
    def n_vertices(self) -> int:
        return self.base.n_vertices + self.tail_length

    def vertex_label(self, index: int) -> str:
        if index < self.base.n_vertices:
            return config_label(self.base.vertices[index])
        return f"tail:{index - self.base.n_vertices + 1}"


def modify_graph(g: ConfigGraph, tail_length: int) -> ModifiedGraph:
    if tail_length < 1:
        raise ValueError("tail length must be at least 1")
    n = g.n_vertices
    total = n + tail_length
    rows, cols = [], []

    def add_edge(u: int, v: int) -> None:
        rows.append(v)
        cols.append(u)

    for u, v in g.edges:
        add_edge(u, v)
    loops = frozenset(range(n)) - {g.start_index, g.accept_index}
    for u in sorted(loops):
        add_edge(u, u)
    chain = [g.accept_index] + [n + k for k in range(tail_length)] + [g.start_index]
    for u, v in zip(chain, chain[1:]):
        add_edge(u, v)

    adjacency = csr_matrix(
        (np.ones(len(rows)), (rows, cols)), shape=(total, total), dtype=float
    )
    mg = ModifiedGraph(
        base=g, tail_length=tail_length, self_loops=loops, adjacency=adjacency
    )
    _check_ata_sparsity(mg)
    return mg


def ata_matrix(mg: ModifiedGraph) -> csr_matrix:
    a = mg.adjacency
    return (a.conj().T @ a).tocsr()


def _check_ata_sparsity(mg: ModifiedGraph) -> None:
    m = ata_matrix(mg)
    per_row = np.diff(m.indptr)
    if per_row.size and int(per_row.max()) > 3:
        raise ValueError(f"A'^dag A' row sparsity {int(per_row.max())} exceeds 3")
    vals = set(np.unique(m.data).tolist())
    if not vals <= {1.0, 2.0}:
        raise ValueError(f"A'^dag A' entries {sorted(vals)} outside {{0, 1, 2}}")


def ata_spectrum(
    mg: ModifiedGraph, dense_cap: int = DEFAULT_DENSE_CAP
) -> tuple[np.ndarray, float, float]:
    """Exact spectrum of A'^dag A' plus its minimum and the gap above it."""
    n = mg.n_vertices
    if n > dense_cap:
        raise ValueError(
            f"dimension {n} exceeds the dense eigensolver cap {dense_cap}; "
            "diagonalize the connected components separately instead"
        )
    vals = np.linalg.eigvalsh(ata_matrix(mg).toarray())
    return vals, float(vals[0]), float(vals[1] - vals[0])


def weakly_connected_sizes(mg: ModifiedGraph) -> list[int]:
    n = mg.n_vertices
    a = mg.adjacency
    und = (a + a.T).tocsr()
    seen = np.zeros(n, dtype=bool)
    sizes = []
    for root in range(n):
        if seen[root]:
            continue
        stack, size = [root], 0
        seen[root] = True
        while stack:
            v = stack.pop()
            size += 1
            for nb in und.indices[und.indptr[v] : und.indptr[v + 1]]:
                if not seen[nb]:
                    seen[nb] = True
                    stack.append(nb)
        sizes.append(size)
    return sorted(sizes, reverse=True)


def no_case_gap_check(
    mg: ModifiedGraph, c_fit: float = 0.1
) -> tuple[float, float, bool]:
    """For a reject-terminated instance: confirm the zero eigenvalue and test
    the spectral gap against c_fit / l_max^4."""
    vals, e1, gap = ata_spectrum(mg)
    if e1 > 1e-12:
        raise ValueError(
            f"no zero eigenvalue found (E1 = {e1!r}); this looks like an "
            "accepting instance"
        )
    l_max = weakly_connected_sizes(mg)[0]
    bound = c_fit * float(l_max) ** -4
    return gap, bound, gap >= bound


# --- closed-form block spectra ----------------------------------------------


def cycle_block_matrix(length: int) -> np.ndarray:
    """A^dag A block of the accepting cycle: tridiagonal with diagonal
    (1, 2, ..., 2) and unit off-diagonals."""
    if length < 1:
        raise ValueError("length must be >= 1")
    m = np.diag([1.0] + [2.0] * (length - 1))
    for i in range(length - 1):
        m[i, i + 1] = m[i + 1, i] = 1.0
    return m


def g1_block_matrix(length: int) -> np.ndarray:
    """Block of a fully self-looped chain: tridiagonal Toeplitz diag 2."""
    if length < 1:
        raise ValueError("length must be >= 1")
    m = 2.0 * np.eye(length)
    for i in range(length - 1):
        m[i, i + 1] = m[i + 1, i] = 1.0
    return m


def g3_block_matrix(length: int) -> np.ndarray:
    """Block of the start-to-reject chain: tridiagonal with diagonal
    (1, 2, ..., 2, 1); it carries the exact zero mode."""
    if length < 2:
        raise ValueError("the start-to-reject block needs length >= 2")
    m = np.diag([1.0] + [2.0] * (length - 2) + [1.0])
    for i in range(length - 1):
        m[i, i + 1] = m[i + 1, i] = 1.0
    return m


def block_spectra(block_type: str, length: int) -> np.ndarray:
    """Closed-form (or root-found) eigenvalues for the three block families."""
    if length < 1:
        raise ValueError("length must be >= 1")
    if block_type == "cycle":
        k = np.arange(1, length + 1)
        return np.sort(2.0 - 2.0 * np.cos((2 * k - 1) * np.pi / (2 * length + 1)))
    if block_type == "g1-path":
        k = np.arange(1, length + 1)
        return np.sort(4.0 * np.sin(k * np.pi / (2 * (length + 1))) ** 2)
    if block_type == "g3-path":
        return _g3_eigenvalues(length)
    raise ValueError(f"unknown block type {block_type!r}")


def _g3_poly(theta: float, n: int) -> float:
    """cos(theta/2) * f_n(theta): same roots as f_n on (0, pi)."""
    return (2.0 * math.cos(theta) - 1.0) * math.cos((n - 0.5) * theta) - math.cos(
        (n - 1.5) * theta
    )


def _g3_eigenvalues(length: int) -> np.ndarray:
    if length < 2:
        raise ValueError("the start-to-reject block needs length >= 2")
    roots = [0.0]
    # stop short of pi: cos(theta/2) f_n(theta) has a spurious zero there
    grid = np.linspace(0.0, np.pi - np.pi / (200.0 * length), 400 * length + 1)
    vals = np.array([_g3_poly(t, length) for t in grid])
    for i in range(len(grid) - 1):
        if grid[i] == 0.0 and abs(vals[i]) < 1e-13:
            continue  # skip the exact root at theta = 0
        a, b = vals[i], vals[i + 1]
        if a == 0.0:
            continue
        if a * b < 0:
            roots.append(float(brentq(_g3_poly, grid[i], grid[i + 1], args=(length,))))
        elif b == 0.0:
            roots.append(float(grid[i + 1]))
    if len(roots) != length:
        raise ValueError(
            f"root finding recovered {len(roots)} of {length} eigenvalues"
        )
    return np.sort(2.0 - 2.0 * np.cos(np.array(roots)))


def characteristic_poly(kind: str, n: int, arg: float) -> float:
    """Characteristic-polynomial evaluations for the chain blocks.

    ``p`` and ``f`` take the angle theta (eigenvalue 2 - 2 cos theta) and use
    the closed trigonometric forms; ``r`` takes the eigenvalue itself and runs
    the determinant recurrence.  f_n(0) = 0 identically: the zero mode.
    """
    if kind in ("p", "f"):
        theta = arg
        if not -math.pi < theta < math.pi:
            raise ValueError(f"theta {theta} outside (-pi, pi)")
        half = math.cos(theta / 2.0)
        if abs(half) < 1e-12:
            raise ValueError(f"cos(theta/2) = {half!r}: too close to the pole")
        if kind == "p":
            return math.cos((n + 0.5) * theta) / half
        if n < 2:
            raise ValueError("f_n needs n >= 2")
        return _g3_poly(theta, n) / half
    if kind == "r":
        if n < 2:
            raise ValueError("r_n needs n >= 2")
        lam = arg
        d_prev, d_cur = 1.0, 2.0 - lam  # leading minors of the all-(2-lam) chain
        minors = [1.0, d_cur]
        for _ in range(2, n):
            d_prev, d_cur = d_cur, (2.0 - lam) * d_cur - d_prev
            minors.append(d_cur)

        def p_of(m: int) -> float:
            if m == 0:
                return 1.0
            lower = minors[m - 2] if m >= 2 else 0.0
            return (1.0 - lam) * minors[m - 1] - lower

        return (1.0 - lam) * p_of(n - 1) - p_of(n - 2)
    raise ValueError(f"unknown polynomial kind {kind!r}")


def calibrate_gap_constant(lengths: range | list[int]) -> float:
    """Fit the prefactor in gap >= c / l^4 on synthetic start-to-reject blocks,
    returning half the smallest observed gap * l^4."""
    worst = math.inf
    for l in lengths:
        vals = np.linalg.eigvalsh(g3_block_matrix(l))
        worst = min(worst, float(vals[1]) * l**4)
    return worst / 2.0


def ata_entry_row(
    tm: ReversibleTM,
    input_symbols: str | tuple[str, ...],
    tail_length: int,
    vertex: int,
) -> dict[int, float]:
    """Row of A'^dag A' computed from the machine's local rules alone, without
    materializing the graph; used to cross-check the assembled matrix."""
    g_start = tm.start_config(input_symbols)
    start_index = tm.config_index(g_start)
    n = tm.config_count()
    # the canonical accept vertex must match build_config_graph's choice
    accept_index = _canonical_index(tm, start_index, tm.accept, n)
    total = n + tail_length

    def out_neighbors(u: int) -> list[int]:
        if u >= n:  # tail vertex
            k = u - n
            return [n + k + 1] if k + 1 < tail_length else [start_index]
        cfg = tm.config_from_index(u)
        outs = []
        nxt = tm.step(cfg)
        if nxt is not None:
            outs.append(tm.config_index(nxt))
        if u == accept_index:
            outs.append(n)  # first tail vertex
        if u not in (start_index, accept_index):
            outs.append(u)  # self-loop
        return outs

    def in_neighbors(w: int) -> list[int]:
        if w >= n:
            k = w - n
            return [accept_index] if k == 0 else [n + k - 1]
        cfg = tm.config_from_index(w)
        ins = []
        preds = tm.predecessors(cfg)
        if len(preds) > 1:
            raise ValueError(f"irreversible machine at {config_label(cfg)}")
        ins.extend(tm.config_index(p) for p in preds)
        if w == start_index:
            ins.append(n + tail_length - 1)
        if w not in (start_index, accept_index):
            ins.append(w)
        return ins

    if not 0 <= vertex < total:
        raise ValueError(f"vertex {vertex} outside [0, {total})")
    row: dict[int, float] = {}
    for w in out_neighbors(vertex):
        for v in in_neighbors(w):
            row[v] = row.get(v, 0.0) + 1.0
    return row


def _canonical_index(tm: ReversibleTM, start_index: int, state: str, n: int) -> int:
    node, seen = start_index, set()
    while node not in seen:
        cfg = tm.config_from_index(node)
        if cfg[0] == state:
            return node
        seen.add(node)
        nxt = tm.step(cfg)
        if nxt is None:
            break
        node = tm.config_index(nxt)
    for i in range(n):
        if tm.config_from_index(i)[0] == state:
            return i
    raise ValueError(f"no configuration in state {state!r}")


# --- Turing machine description files ---------------------------------------


def read_tm(path) -> ReversibleTM:
    """Parse the sectioned machine format (states/alphabet/start/accept/reject/
    space plus one delta rule per line)."""
    fields: dict[str, object] = {}
    transitions: dict = {}
    with open(path, "r", encoding="ascii") as f:
        for lineno, raw in enumerate(f, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if ":" not in line:
                raise ValueError(f"line {lineno}: expected 'key: value', got {line!r}")
            key, _, value = line.partition(":")
            key, value = key.strip(), value.strip()
            if key == "states":
                fields["states"] = tuple(value.split())
            elif key == "alphabet":
                fields["alphabet"] = tuple(value.split())
            elif key in ("start", "accept", "reject"):
                fields[key] = value
            elif key == "space":
                try:
                    fields["space"] = int(value)
                except ValueError:
                    raise ValueError(f"line {lineno}: bad space bound {value!r}")
            elif key == "delta":
                transitions.update(_parse_rule(value, lineno))
            else:
                raise ValueError(f"line {lineno}: unknown section {key!r}")
    missing = {"states", "alphabet", "start", "accept", "reject", "space"} - set(fields)
    if missing:
        raise ValueError(f"machine file missing sections: {sorted(missing)}")
    return ReversibleTM(
        states=fields["states"],
        alphabet=fields["alphabet"],
        start=fields["start"],
        accept=fields["accept"],
        reject=fields["reject"],
        transitions=transitions,
        space_bound=fields["space"],
    )


def _parse_rule(text: str, lineno: int) -> dict:
    try:
        left, right = text.split("->")
        q, a = left.strip().strip("()").split(",")
        q2, b, move = right.strip().strip("()").split(",")
    except ValueError:
        raise ValueError(f"line {lineno}: bad rule {text!r}, expected (q,a)->(q',a',M)")
    return {(q.strip(), a.strip()): (q2.strip(), b.strip(), move.strip())}


def write_tm(path, tm: ReversibleTM) -> None:
    with open(path, "w", encoding="ascii") as f:
        f.write(f"states: {' '.join(tm.states)}\n")
        f.write(f"alphabet: {' '.join(tm.alphabet)}\n")
        f.write(f"start: {tm.start}\naccept: {tm.accept}\nreject: {tm.reject}\n")
        f.write(f"space: {tm.space_bound}\n")
        for (q, a), (q2, b, move) in sorted(tm.transitions.items()):
            f.write(f"delta: ({q},{a})->({q2},{b},{move})\n")


def write_edge_list(path, mg: ModifiedGraph) -> None:
    coo = mg.adjacency.tocoo()
    pairs = sorted(zip(coo.col.tolist(), coo.row.tolist()))
    with open(path, "w", encoding="ascii") as f:
        for u, v in pairs:
            f.write(f"{mg.vertex_label(u)} -> {mg.vertex_label(v)}\n")
