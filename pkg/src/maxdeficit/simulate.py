"""Reproducible simulation of the compound Poisson net-loss process.

Every path owns a counter-based Philox substream keyed by (seed, path
index), and all variates come from inverse-CDF transforms of that
stream's uniforms.  Batches are therefore bit-identical for a given
(line, t, n, seed) no matter how generation is chunked across workers,
and any single path can be regenerated in isolation.

Between claim arrivals the net loss drifts downward at the premium
rate, so the running maximum over a horizon is attained at a claim
epoch (or is zero); paths are reduced to their arrival epochs and
claim sizes with no time discretisation.
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .distortion import choquet_empirical
from .errors import DomainError


def derive_seed(seed, *tags):
    """Deterministic 64-bit child seed for an auxiliary stream.

    Mixes the base seed with integer tags through SeedSequence so
    nested experiments (outer paths, per-path inner batches, bootstrap)
    never reuse a path substream.
    """
    ss = np.random.SeedSequence((int(seed),) + tuple(int(x) for x in tags))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def _path_rng(seed, index):
    key = np.array([seed, index], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def path_events(line, t, seed, index):
    """Arrival epochs and claim sizes of one path over [0, t].

    Arrivals come from sequential exponential gaps drawn until the
    horizon is passed; claim sizes follow in a second block from the
    same substream.  Returns (times, sizes) as ndarrays.
    """
    if t <= 0.0:
        raise DomainError(f"horizon must be positive, got {t}")
    rng = _path_rng(seed, index)
    if line.lam == 0.0:
        return np.empty(0), np.empty(0)
    mean_count = line.lam * t
    block = int(mean_count + 6.0 * math.sqrt(mean_count) + 16.0)
    parts = []
    last = 0.0
    while True:
        gaps = -np.log1p(-rng.random(block)) / line.lam
        chunk = last + np.cumsum(gaps)
        parts.append(chunk)
        last = float(chunk[-1])
        if last > t:
            break
    times = np.concatenate(parts) if len(parts) > 1 else parts[0]
    k = int(np.searchsorted(times, t, side="right"))
    times = times[:k]
    sizes = -line.mu * np.log1p(-rng.random(k))
    return times, sizes


def max_loss_from_events(times, sizes, c, t):
    """Running maximum of the net loss given one path's claim events.

    The loss only increases at claim epochs, so the supremum over the
    whole of [0, t] is the largest jump-epoch value, floored at the
    time-zero value 0.
    """
    times = np.asarray(times, dtype=float)
    sizes = np.asarray(sizes, dtype=float)
    if times.size == 0:
        return 0.0
    jump_values = np.cumsum(sizes) - c * times
    return max(0.0, float(jump_values.max()))


@dataclass(eq=False)
class SimBatch:
    """Samples of the running maximum M_t with their provenance."""

    line: object
    t: float
    n: int
    seed: int
    samples: np.ndarray = field(repr=False)


@dataclass(frozen=True)
class PathState:
    """Snapshot of one path: net loss and running maximum at a time."""

    time: float
    realized_loss: float
    running_max: float

    def __post_init__(self):
        floor = max(0.0, self.realized_loss)
        if self.running_max < floor - 1e-9:
            raise DomainError("running maximum below the realized loss")


def _check_run_args(t, n, seed):
    if t <= 0.0:
        raise DomainError(f"horizon must be positive, got {t}")
    if n <= 0:
        raise DomainError(f"path count must be positive, got {n}")
    if seed < 0 or seed > np.iinfo(np.uint64).max:
        raise DomainError(f"seed must be a nonnegative 64-bit integer, got {seed}")


def _paths_chunk(line, t, seed, lo, hi, want_terminal):
    m = np.empty(hi - lo)
    l = np.empty(hi - lo) if want_terminal else None
    for i in range(lo, hi):
        times, sizes = path_events(line, t, seed, i)
        m[i - lo] = max_loss_from_events(times, sizes, line.c, t)
        if want_terminal:
            l[i - lo] = float(sizes.sum()) - line.c * t
    return m, l


def _run_paths(line, t, n, seed, want_terminal, workers):
    if workers <= 1:
        return _paths_chunk(line, t, seed, 0, n, want_terminal)
    edges = np.linspace(0, n, workers + 1).astype(int)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        futs = [
            pool.submit(_paths_chunk, line, t, seed, int(a), int(b), want_terminal)
            for a, b in zip(edges[:-1], edges[1:])
            if b > a
        ]
        pieces = [f.result() for f in futs]
    m = np.concatenate([p[0] for p in pieces])
    l = np.concatenate([p[1] for p in pieces]) if want_terminal else None
    return m, l


def simulate_max_loss(line, t, n, seed, workers=1):
    """n independent samples of the running maximum over [0, t].

    The merge order is fixed by path index, so the result does not
    depend on workers.
    """
    _check_run_args(t, n, seed)
    m, _ = _run_paths(line, t, n, seed, want_terminal=False, workers=workers)
    return SimBatch(line=line, t=t, n=n, seed=seed, samples=m)


def simulate_path_states(line, r, n, seed, workers=1):
    """PathState snapshots of n paths observed at time r."""
    _check_run_args(r, n, seed)
    m, l = _run_paths(line, r, n, seed, want_terminal=True, workers=workers)
    return [PathState(time=r, realized_loss=l[i], running_max=m[i]) for i in range(n)]


def simulate_aggregate_claims(line, t, n, seed):
    """n samples of the aggregate claim total over [0, t] (no premium)."""
    _check_run_args(t, n, seed)
    out = np.empty(n)
    for i in range(n):
        _, sizes = path_events(line, t, seed, i)
        out[i] = float(sizes.sum())
    return out


def estimate_finite_ruin(batch, u):
    """P(M_t > u) estimated from a batch, with a 95% binomial half-width.

    Returns (estimate, half_width); u < 0 gives (1.0, 0.0) exactly since
    the maximum starts at zero.
    """
    if u < 0.0:
        return 1.0, 0.0
    n = batch.n
    p = float(np.count_nonzero(batch.samples > u)) / n
    half = 1.96 * math.sqrt(p * (1.0 - p) / n)
    return p, half


def conditional_max_samples(line, t, r, state, n_inner, seed):
    """Samples of M_t given the path position summarised by state at r.

    The process restarts after r with the same law, so conditionally
    M_t = max(M_r, L_r + M') with M' an independent fresh maximum over
    the remaining horizon t - r.
    """
    if not 0.0 < r < t:
        raise DomainError(f"need 0 < r < t, got r={r}, t={t}")
    fresh = simulate_max_loss(line, t - r, n_inner, seed).samples
    return np.maximum(state.running_max, state.realized_loss + fresh)


def supermartingale_check(line, g, t, r, n_outer=200, n_inner=2000, seed=0):
    """Compare the time-0 requirement with the mean time-r requirement.

    Outer paths are advanced to r; each is continued by n_inner
    conditional maxima.  Pooling every conditional sample across outer
    paths yields unconditional M_t draws, so the same nested budget
    prices both sides.  Returns (rho_0, mean_rho_r, se) where se is the
    outer-level standard error of the per-path requirements.  Concave g
    only: the comparison is uninformative otherwise.
    """
    if not g.concave:
        raise DomainError("supermartingale comparison needs a concave distortion")
    if not 0.0 < r < t:
        raise DomainError(f"need 0 < r < t, got r={r}, t={t}")
    states = simulate_path_states(line, r, n_outer, derive_seed(seed, 10))
    rho_r = np.empty(n_outer)
    pooled = np.empty(n_outer * n_inner)
    for j, state in enumerate(states):
        cond = conditional_max_samples(
            line, t, r, state, n_inner, derive_seed(seed, 11, j)
        )
        rho_r[j] = choquet_empirical(g, cond)
        pooled[j * n_inner : (j + 1) * n_inner] = cond
    rho_0 = choquet_empirical(g, pooled)
    se = float(np.std(rho_r, ddof=1)) / math.sqrt(n_outer)
    return rho_0, float(rho_r.mean()), se


def rolling_requirement(state, baseline_rho):
    """Time-s requirement for the loss over [s, s+t]: the reassessed
    capital is the realized loss plus the fixed-horizon baseline."""
    return state.realized_loss + baseline_rho


_HEADER_PREFIX = "# maxdeficit-batch"


def save_batch(batch, path):
    """Write a batch as text: one header line, then one sample per line.

    Floats are written with repr so a load restores them bit-exactly.
    """
    line = batch.line
    with open(path, "w") as fh:
        fh.write(
            f"{_HEADER_PREFIX} lam={line.lam!r} mu={line.mu!r} c={line.c!r} "
            f"t={batch.t!r} n={batch.n} seed={batch.seed}\n"
        )
        for v in batch.samples:
            fh.write(f"{float(v)!r}\n")


def load_batch(path):
    """Read a batch written by save_batch."""
    from .model import ExponentialLine

    with open(path) as fh:
        header = fh.readline().rstrip("\n")
        if not header.startswith(_HEADER_PREFIX):
            raise DomainError(f"{path} is not a batch file")
        fields = dict(
            tok.split("=", 1) for tok in header[len(_HEADER_PREFIX) :].split()
        )
        samples = np.array([float(row) for row in fh])
    n = int(fields["n"])
    if samples.size != n:
        raise DomainError(
            f"batch file {path} announces {n} samples but holds {samples.size}"
        )
    line = ExponentialLine(
        lam=float(fields["lam"]), mu=float(fields["mu"]), c=float(fields["c"])
    )
    return SimBatch(
        line=line, t=float(fields["t"]), n=n, seed=int(fields["seed"]), samples=samples
    )
