"""Assignment of logical qubits to LPUs on the line of modules.

Each module hosts one pivot plus up to `capacity` (default 11) compute
qubits. The allocation decides which operations are single-module and which
span modules, which in turn fixes the communication-induced inter-module
measurement count.
"""

from __future__ import annotations

from dataclasses import dataclass

from .deferral import DeferredCircuit

DEFAULT_CAPACITY = 11


@dataclass(frozen=True)
class Allocation:
    module_of: tuple[int, ...]
    n_modules: int
    capacity: int = DEFAULT_CAPACITY

    def __post_init__(self):
        loads = [0] * self.n_modules
        for m in self.module_of:
            if not 0 <= m < self.n_modules:
                raise ValueError("module index out of range")
            loads[m] += 1
        if any(load > self.capacity for load in loads):
            raise ValueError("module capacity exceeded")

    def modules_of_support(self, support: list[int]) -> list[int]:
        return sorted({self.module_of[q] for q in support})

    def is_multi_module(self, support: list[int]) -> bool:
        return len(self.modules_of_support(support)) > 1


def _support(op) -> list[int]:
    v = op.pauli.vector
    bits = v.x | v.z
    return [q for q in range(v.n) if (bits >> q) & 1]


def count_multi_module(deferred: DeferredCircuit, alloc: Allocation) -> int:
    return sum(1 for op in deferred.circuit.ops if alloc.is_multi_module(_support(op)))


def allocate_contiguous(
    deferred: DeferredCircuit, n_modules: int, capacity: int = DEFAULT_CAPACITY
) -> Allocation:
    """Qubit q lives in module q // capacity."""
    n = deferred.circuit.n_qubits
    if n > n_modules * capacity:
        raise ValueError(
            f"{n} qubits exceed {n_modules} modules x {capacity} compute qubits"
        )
    return Allocation(tuple(q // capacity for q in range(n)), n_modules, capacity)


def allocate_greedy(
    deferred: DeferredCircuit, n_modules: int, capacity: int = DEFAULT_CAPACITY
) -> Allocation:
    """Co-occurrence-weighted greedy grouping.

    Qubit pairs are weighted by the number of ops whose support contains
    both; the heaviest pairs are merged first (ties broken by lowest qubit
    index), clusters are packed into modules first-fit by decreasing size,
    and the result is kept only if it produces no more multi-module ops than
    the contiguous allocation, so greedy never loses to the baseline.
    """
    n = deferred.circuit.n_qubits
    if n > n_modules * capacity:
        raise ValueError(
            f"{n} qubits exceed {n_modules} modules x {capacity} compute qubits"
        )
    weights: dict[tuple[int, int], int] = {}
    for op in deferred.circuit.ops:
        support = _support(op)
        for i in range(len(support)):
            for j in range(i + 1, len(support)):
                pair = (support[i], support[j])
                weights[pair] = weights.get(pair, 0) + 1

    parent = list(range(n))

    def find(a: int) -> int:
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    size = [1] * n
    for (a, b), _w in sorted(weights.items(), key=lambda kv: (-kv[1], kv[0])):
        ra, rb = find(a), find(b)
        if ra != rb and size[ra] + size[rb] <= capacity:
            ra, rb = min(ra, rb), max(ra, rb)
            parent[rb] = ra
            size[ra] += size[rb]

    clusters: dict[int, list[int]] = {}
    for q in range(n):
        clusters.setdefault(find(q), []).append(q)
    queue = sorted(clusters.values(), key=lambda c: (-len(c), c[0]))

    module_of = [0] * n
    loads = [0] * n_modules
    while queue:
        cluster = queue.pop(0)
        placed = False
        for m in range(n_modules):
            if loads[m] + len(cluster) <= capacity:
                for q in cluster:
                    module_of[q] = m
                loads[m] += len(cluster)
                placed = True
                break
        if not placed:
            # Fragmentation: fill the roomiest module with the lowest-index
            # qubits and requeue the remainder. Always terminates because
            # n <= n_modules * capacity guarantees free space somewhere.
            room, target = max(
                ((capacity - loads[m], m) for m in range(n_modules)),
                key=lambda t: (t[0], -t[1]),
            )
            queue.insert(0, cluster[room:])
            queue.insert(0, cluster[:room])

    greedy = Allocation(tuple(module_of), n_modules, capacity)
    contiguous = allocate_contiguous(deferred, n_modules, capacity)
    if count_multi_module(deferred, greedy) <= count_multi_module(deferred, contiguous):
        return greedy
    return contiguous


ALLOCATORS = {
    "contiguous": allocate_contiguous,
    "greedy": allocate_greedy,
}


def allocate(
    deferred: DeferredCircuit,
    n_modules: int,
    strategy: str = "greedy",
    capacity: int = DEFAULT_CAPACITY,
) -> Allocation:
    try:
        fn = ALLOCATORS[strategy]
    except KeyError:
        raise ValueError(f"unknown allocator {strategy!r}") from None
    return fn(deferred, n_modules, capacity)
