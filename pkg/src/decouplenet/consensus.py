"""Linear multi-agent consensus over switching topologies.

Agent ``i`` follows ``x_i' = A x_i + F sum_j w_ij(t) (x_j - x_i)``, i.e. the
stacked state obeys ``x' = (I_N kron A - L(t) kron F) x``. Topologies are
piecewise constant, so every segment is an LTI system; switch instants are
always sample points.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .decoupler import (
    DEFAULT_COND_CAP,
    NotDecouplableError,
    assess_diagonalizability,
    construct_perturbation,
    decouple,
)
from .graph import TopologySchedule, has_spanning_tree, laplacian, spanning_tree_gap_intervals
from .linalg import eigenvalues

__all__ = [
    "AgentSystem",
    "SimulationTrace",
    "SegmentDecoupling",
    "TrackProbe",
    "ConsensusVerdict",
    "RobustnessReport",
    "simulate",
    "simulate_decoupled",
    "decouple_schedule",
    "eta",
    "swarm_deviation",
    "hurwitz_check",
    "eigenvalue_tracks",
    "subsystem_stability_probe",
    "check_consensus",
    "robustness_probe",
    "robustness_sweep",
    "max_trace_gap",
]

DEFAULT_DT = 1e-3
DEFAULT_T_END = 50.0
DEFAULT_DECAY = 1e-3
DEFAULT_BLOWUP = 1e3
DEFAULT_HURWITZ_MARGIN = 1e-9
DEFAULT_EPSILON = 1e-6
DEFAULT_TRIALS = 4
OVERFLOW = 1e12
_CHUNK = 256


@dataclass(frozen=True)
class AgentSystem:
    a_matrix: np.ndarray
    f_matrix: np.ndarray
    schedule: TopologySchedule

    def __post_init__(self):
        a = np.atleast_2d(np.asarray(self.a_matrix, dtype=float))
        f = np.atleast_2d(np.asarray(self.f_matrix, dtype=float))
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError(f"A must be square, got shape {a.shape}")
        if f.shape != a.shape:
            raise ValueError(f"F must match A's shape {a.shape}, got {f.shape}")
        object.__setattr__(self, "a_matrix", a)
        object.__setattr__(self, "f_matrix", f)

    @property
    def d(self):
        return self.a_matrix.shape[0]

    @property
    def n_agents(self):
        return self.schedule.n

    def laplacians(self):
        return [laplacian(g) for _, g in self.schedule.segments]

    def system_matrix(self, lap):
        return np.kron(np.eye(lap.shape[0]), self.a_matrix) - np.kron(lap, self.f_matrix)


@dataclass(frozen=True)
class SimulationTrace:
    times: np.ndarray
    states: np.ndarray
    deviations: np.ndarray
    eta_norms: np.ndarray
    n_agents: int
    d: int
    divergent: bool = False
    imag_residual: float = 0.0

    def header(self):
        cols = ["t", "dev", "eta_norm"]
        cols += [f"x_{i + 1}_{k + 1}" for i in range(self.n_agents) for k in range(self.d)]
        return cols

    def write_csv(self, stream):
        stream.write(",".join(self.header()) + "\n")
        table = np.column_stack([self.times, self.deviations, self.eta_norms, self.states])
        for row in table:
            stream.write(",".join("%.17g" % v for v in row) + "\n")


# --- integration -------------------------------------------------------------

def rk4_step_matrix(m, h):
    """One classical RK4 step for ``x' = M x`` collapses to this matrix polynomial."""
    hm = h * np.asarray(m)
    eye = np.eye(hm.shape[-1], dtype=hm.dtype)
    hm2 = hm @ hm
    return eye + hm + hm2 / 2 + hm2 @ hm / 6 + hm2 @ hm2 / 24


def _powers(p, count):
    out = np.empty((count,) + p.shape, dtype=p.dtype)
    out[0] = p
    for k in range(1, count):
        out[k] = out[k - 1] @ p
    return out


def _propagate(p, x0, steps, powers=None):
    """States ``p^k x0`` for ``k = 1..steps`` (rows), stopping early on overflow.

    ``x0`` may be a vector or a matrix whose columns are propagated together.
    Returns ``(states, overflowed)``.
    """
    if powers is None:
        powers = _powers(p, min(_CHUNK, max(steps, 1)))
    chunk = powers.shape[0]
    out = []
    x = x0
    done = 0
    while done < steps:
        c = min(chunk, steps - done)
        block = powers[:c] @ x
        big = np.max(np.abs(block).reshape(c, -1), axis=1) > OVERFLOW
        if np.any(big):
            stop = int(np.argmax(big)) + 1
            out.append(block[:stop])
            return np.concatenate(out), True
        out.append(block)
        x = block[-1]
        done += c
    if not out:
        return np.empty((0,) + np.shape(x0), dtype=np.result_type(p, x0)), False
    return np.concatenate(out), False


def _segment_plan(schedule, dt, t_end):
    """``(segment, t0, t1)`` pieces covering ``[0, t_end]``; the last graph is held past the horizon."""
    pieces = []
    for k in range(len(schedule.segments)):
        t0, t1 = schedule.bounds(k)
        if k == len(schedule.segments) - 1:
            t1 = max(t1, t_end)
        t1 = min(t1, t_end)
        if t1 > t0:
            pieces.append((k, t0, t1))
        if t1 >= t_end:
            break
    return pieces


def _step_times(t0, t1, dt):
    """Sample instants after ``t0`` up to and including ``t1`` with step ``dt``."""
    span = t1 - t0
    full = int(math.floor(span / dt * (1 + 1e-12)))
    times = t0 + dt * np.arange(1, full + 1)
    if full and abs(times[-1] - t1) <= 1e-9 * dt:
        times[-1] = t1
        return times, full, 0.0
    rest = t1 - (t0 + full * dt)
    if rest <= 1e-9 * dt:
        if full:
            times[-1] = t1
        return times, full, 0.0
    return np.append(times, t1), full, rest


def _check_run(sys, x0, dt, t_end):
    if not dt > 0:
        raise ValueError("dt must be positive")
    if not t_end >= dt:
        raise ValueError("t_end must be at least dt")
    x0 = np.asarray(x0, dtype=float).ravel()
    if x0.size != sys.n_agents * sys.d:
        raise ValueError(f"x0 must have length N*d = {sys.n_agents * sys.d}, got {x0.size}")
    if not np.all(np.isfinite(x0)):
        raise ValueError("x0 must be finite")
    return x0


def _deviation_series(states, n, d):
    x = states.reshape(states.shape[0], n, d)
    worst = np.zeros(states.shape[0])
    for i in range(n - 1):
        diff = x[:, i + 1:, :] - x[:, i:i + 1, :]
        worst = np.maximum(worst, np.sqrt(np.max(np.sum(diff * diff, axis=2), axis=1)))
    return worst


def _eta_norm_series(times, states, schedule, laps, n, d):
    idx = np.array([schedule.segment_index(t) for t in times])
    out = np.empty(times.size)
    for k in np.unique(idx):
        sel = idx == k
        x = states[sel].reshape(-1, n, d)
        eta_v = np.einsum("ij,sjk->sik", laps[k], x)
        out[sel] = np.sqrt(np.sum(eta_v.reshape(eta_v.shape[0], -1) ** 2, axis=1))
    return out


def _finish_trace(sys, laps, times, states, divergent, imag=0.0):
    n, d = sys.n_agents, sys.d
    return SimulationTrace(
        times=times,
        states=states,
        deviations=_deviation_series(states, n, d),
        eta_norms=_eta_norm_series(times, states, sys.schedule, laps, n, d),
        n_agents=n,
        d=d,
        divergent=divergent,
        imag_residual=imag,
    )


def _simulate_consensus_start(sys, laps, x0, dt, t_end):
    # x0 = 1 kron xi is invariant under every Laplacian; stepping xi alone with
    # the same RK4 grid keeps the agents bit-identical instead of drifting by rounding
    n, d = sys.n_agents, sys.d
    xi = x0[:d]
    p = rk4_step_matrix(sys.a_matrix, dt)
    times = [np.zeros(1)]
    blocks = [xi[None, :]]
    divergent = False
    for k, t0, t1 in _segment_plan(sys.schedule, dt, t_end):
        ts, full, rest = _step_times(t0, t1, dt)
        seg, divergent = _propagate(p, xi, full)
        if not divergent and rest > 0:
            last = seg[-1] if len(seg) else xi
            tail = rk4_step_matrix(sys.a_matrix, rest) @ last
            seg = np.vstack([seg, tail[None, :]])
            divergent = bool(np.max(np.abs(tail)) > OVERFLOW)
        times.append(ts[:len(seg)])
        blocks.append(seg)
        if divergent:
            break
        xi = seg[-1] if len(seg) else xi
    states = np.tile(np.vstack(blocks), (1, n))
    return _finish_trace(sys, laps, np.concatenate(times), states, divergent)


def _simulate_laps(sys, laps, x0, dt, t_end):
    if sys.n_agents > 1 and np.all(x0.reshape(sys.n_agents, sys.d) == x0[:sys.d]):
        return _simulate_consensus_start(sys, laps, x0, dt, t_end)
    times = [np.zeros(1)]
    states = [x0[None, :]]
    x = x0
    divergent = False
    for k, t0, t1 in _segment_plan(sys.schedule, dt, t_end):
        m = sys.system_matrix(laps[k])
        ts, full, rest = _step_times(t0, t1, dt)
        seg, divergent = _propagate(rk4_step_matrix(m, dt), x, full)
        if not divergent and rest > 0:
            last = seg[-1] if len(seg) else x
            tail = rk4_step_matrix(m, rest) @ last
            seg = np.vstack([seg, tail[None, :]])
            divergent = bool(np.max(np.abs(tail)) > OVERFLOW)
        times.append(ts[:len(seg)])
        states.append(seg)
        if divergent:
            break
        x = seg[-1] if len(seg) else x
    return _finish_trace(sys, laps, np.concatenate(times), np.vstack(states), divergent)


def simulate(sys, x0, dt=DEFAULT_DT, t_end=DEFAULT_T_END):
    """Integrate the coupled system with fixed-step classical RK4.

    Parameters
    ----------
    sys : AgentSystem
    x0 : array_like, length ``N * d``
        Stacked initial state ``[x_1; ...; x_N]``.
    dt, t_end : float
        Step and final time. Segment switches are forced onto the sample grid
        (the step before a switch is shortened). Past ``horizon_end`` the last
        graph stays active.

    Returns
    -------
    SimulationTrace
        Stops early with ``divergent=True`` once any component exceeds 1e12.
    """
    x0 = _check_run(sys, x0, dt, t_end)
    return _simulate_laps(sys, sys.laplacians(), x0, dt, t_end)


@dataclass(frozen=True)
class SegmentDecoupling:
    """Decoupling of one schedule segment; ``perturbation`` is None when none was needed."""

    decoupled: object
    perturbation: object
    spectrum: np.ndarray
    laplacian: np.ndarray = field(repr=False)


def decouple_schedule(sys, epsilon=DEFAULT_EPSILON, gap_tol=None, realify=False, seed=0,
                      cond_cap=DEFAULT_COND_CAP):
    """Decouple every segment, perturbing defective or repeated-spectrum Laplacians first.

    If even the perturbed Laplacian's eigenbasis is too ill-conditioned,
    ``decoupled`` is None but ``spectrum`` still carries the perturbed spectrum.
    """
    out = []
    for lap in sys.laplacians():
        report = assess_diagonalizability(lap, gap_tol=gap_tol, cond_cap=cond_cap)
        pert = None
        target = lap
        if not report.distinct_eigenvalues:
            pert = construct_perturbation(lap, epsilon, gap_tol=gap_tol, realify=realify,
                                          seed=seed, cond_cap=cond_cap)
            target = pert.perturbed
        try:
            dec = decouple(target, sys.a_matrix, sys.f_matrix, gap_tol=gap_tol, cond_cap=cond_cap)
            spectrum = dec.eigenvalues
        except NotDecouplableError:
            if pert is None:
                raise
            dec = None
            spectrum = pert.spectrum_after
        out.append(SegmentDecoupling(dec, pert, np.asarray(spectrum), target))
    return out


def simulate_decoupled(sys, decs, x0, dt=DEFAULT_DT, t_end=DEFAULT_T_END):
    """Integrate the block-diagonal form segment by segment.

    Within segment ``k`` with eigenbasis ``T_k``, ``xt = (T_k kron I) x`` and
    each block ``xi_i' = (A - lambda_i F) xi_i`` is stepped independently
    with the same RK4 grid as :func:`simulate`; states are mapped back to the
    original coordinates at every sample (real part kept, the discarded
    imaginary magnitude is reported as ``imag_residual``).

    ``decs`` holds one :class:`~decouplenet.decoupler.DecoupledSystem` (or
    :class:`SegmentDecoupling`) per schedule segment.
    """
    x0 = _check_run(sys, x0, dt, t_end)
    n, d = sys.n_agents, sys.d
    decs = [s.decoupled if isinstance(s, SegmentDecoupling) else s for s in decs]
    if len(decs) != len(sys.schedule.segments):
        raise ValueError("need one decoupled system per schedule segment")
    laps = []
    for k, dec in enumerate(decs):
        if dec is None:
            raise NotDecouplableError(f"segment {k} has no usable eigenbasis")
        laps.append(dec.inverse @ np.diag(dec.eigenvalues) @ dec.transform)
    lap_real = [np.real(l) for l in laps]

    times = [np.zeros(1)]
    states = [x0[None, :]]
    x = x0.reshape(n, d).astype(complex)
    divergent = False
    imag = 0.0
    for k, t0, t1 in _segment_plan(sys.schedule, dt, t_end):
        dec = decs[k]
        blocks = np.stack(dec.subsystems)
        xt = dec.transform @ x
        ts, full, rest = _step_times(t0, t1, dt)
        p = rk4_step_matrix(blocks, dt)
        # propagate all blocks at once: (steps, n, d, d) @ (n, d, 1)
        seg = []
        if full:
            pw = np.empty((min(_CHUNK, full),) + p.shape, dtype=complex)
            pw[0] = p
            for j in range(1, pw.shape[0]):
                pw[j] = pw[j - 1] @ p
            cur = xt
            done = 0
            while done < full:
                c = min(pw.shape[0], full - done)
                blk = (pw[:c] @ cur[None, :, :, None])[..., 0]
                orig = np.einsum("ij,sjk->sik", dec.inverse, blk)
                big = np.max(np.abs(orig).reshape(c, -1), axis=1) > OVERFLOW
                if np.any(big):
                    stop = int(np.argmax(big)) + 1
                    seg.append(orig[:stop])
                    divergent = True
                    break
                seg.append(orig)
                cur = blk[-1]
                done += c
            xt = cur
        if not divergent and rest > 0:
            pr = rk4_step_matrix(blocks, rest)
            xt = (pr @ xt[:, :, None])[..., 0]
            orig = dec.inverse @ xt
            seg.append(orig[None])
            divergent = bool(np.max(np.abs(orig)) > OVERFLOW)
        seg = np.concatenate(seg) if seg else np.empty((0, n, d), dtype=complex)
        if len(seg):
            imag = max(imag, float(np.max(np.abs(seg.imag))))
            x = seg[-1]
        times.append(ts[:len(seg)])
        states.append(seg.real.reshape(len(seg), n * d))
        if divergent:
            break
    return _finish_trace(sys, lap_real, np.concatenate(times), np.vstack(states), divergent, imag)


def max_trace_gap(a, b):
    """Largest pointwise state difference between two traces on a common grid."""
    m = min(len(a.times), len(b.times))
    return float(np.max(np.abs(a.states[:m] - b.states[:m])))


# --- swarm quantities ---------------------------------------------------------

def eta(sys, x, t, lap=None):
    """Stacked relative-state signal ``eta_i = sum_j w_ij(t) (x_j - x_i)``.

    Equals ``-(L(t) kron I_d) x``. Pass ``lap`` to evaluate it for another
    Laplacian (e.g. a perturbed one) instead of the schedule's.
    """
    n, d = sys.n_agents, sys.d
    x = np.asarray(x).reshape(n, d)
    if lap is None:
        if t < 0:
            raise ValueError("t must be nonnegative")
        lap = laplacian(sys.schedule.segments[sys.schedule.segment_index(t)][1])
    return (-(np.asarray(lap) @ x)).ravel()


def swarm_deviation(x, n_agents=None, d=None):
    """Max pairwise Euclidean distance between agent states.

    ``x`` is an ``(N, d)`` array, or a stacked vector together with ``n_agents``.
    """
    x = np.asarray(x)
    if x.ndim == 1:
        if n_agents is None:
            raise ValueError("n_agents is required for a stacked state vector")
        x = x.reshape(n_agents, -1)
    if x.shape[0] < 2:
        raise ValueError("swarm deviation needs at least two agents")
    return float(_deviation_series(x.reshape(1, -1), x.shape[0], x.shape[1])[0])


def hurwitz_check(a, margin=DEFAULT_HURWITZ_MARGIN):
    """True iff every eigenvalue of ``a`` has real part below ``-margin``."""
    lam = eigenvalues(np.atleast_2d(a))
    return bool(np.all(lam.real < -margin))


# --- stability probes ---------------------------------------------------------

def eigenvalue_tracks(spectra):
    """Follow eigenvalues across segments.

    Index 0 of every spectrum is the pinned zero eigenvalue and forms track 0.
    The other eigenvalues of the first segment are sorted by (real, imag);
    in later segments each track takes the nearest unclaimed eigenvalue, in
    track order, ties going to the lower index.

    Returns an array of shape ``(n_tracks, n_segments)``.
    """
    first = np.asarray(spectra[0])
    n = first.size
    rest = sorted(range(1, n), key=lambda i: (first[i].real, first[i].imag))
    tracks = np.empty((n, len(spectra)), dtype=complex)
    tracks[0, 0] = first[0]
    tracks[1:, 0] = first[rest]
    for s in range(1, len(spectra)):
        spec = np.asarray(spectra[s])
        tracks[0, s] = spec[0]
        free = list(range(1, n))
        for i in range(1, n):
            dist = [abs(spec[j] - tracks[i, s - 1]) for j in free]
            j = free.pop(int(np.argmin(dist)))
            tracks[i, s] = spec[j]
    return tracks


@dataclass(frozen=True)
class TrackProbe:
    """Numerical probe (not a proof) of one eigenvalue track's subsystem."""

    track: int
    eigenvalues: np.ndarray
    status: str
    worst_final_ratio: float
    worst_peak_ratio: float
    decay_rate: float
    start_times: tuple


def _probe_track(sys, lam_track, starts, states0, dt, t_end, decay_factor, blowup_cap):
    a, f = sys.a_matrix, sys.f_matrix
    sched = sys.schedule
    finals, peaks = [], []
    cache = {}
    for s0, xi0 in zip(starts, states0):
        xi = xi0.astype(complex)
        peak = 1.0
        t = s0
        stop = s0 + t_end
        blown = False
        while t < stop - 1e-12 * max(1.0, stop):
            k = sched.segment_index(t)
            seg_end = sched.bounds(k)[1] if k + 1 < len(sched.segments) else math.inf
            t1 = min(seg_end, stop)
            _, full, rest = _step_times(t, t1, dt)
            m = a - lam_track[k] * f
            key = (k, dt)
            if key not in cache:
                p = rk4_step_matrix(m, dt)
                cache[key] = (p, _powers(p, _CHUNK))
            p, pw = cache[key]
            if full:
                seg, over = _propagate(p, xi, full, pw)
                norms = np.linalg.norm(seg, axis=1)
                peak = max(peak, float(norms.max()))
                xi = seg[-1]
                if over or peak > blowup_cap:
                    blown = True
                    break
            if rest > 0:
                xi = rk4_step_matrix(m, rest) @ xi
                peak = max(peak, float(np.linalg.norm(xi)))
            t = t1
        finals.append(math.inf if blown else float(np.linalg.norm(xi)))
        peaks.append(peak)
    worst_final = max(finals)
    worst_peak = max(peaks)
    if worst_peak > blowup_cap or worst_final >= 1.0:
        status = "fail"
    elif worst_final <= decay_factor:
        status = "pass"
    else:
        status = "borderline"
    rate = math.log(worst_final) / t_end if 0 < worst_final < math.inf else (
        -math.inf if worst_final == 0 else math.inf)
    return status, worst_final, worst_peak, rate


def subsystem_stability_probe(sys, gap_tol=None, dt=DEFAULT_DT, t_end=DEFAULT_T_END,
                              n_trials=DEFAULT_TRIALS, seed=0, decay_factor=DEFAULT_DECAY,
                              blowup_cap=DEFAULT_BLOWUP, epsilon=DEFAULT_EPSILON,
                              realify=False, cond_cap=DEFAULT_COND_CAP, decoupling=None):
    """Probe uniform asymptotic stability of ``xi' = (A - lambda_i(t) F) xi`` per track.

    Every nonzero eigenvalue track is integrated from ``n_trials`` random
    unit-norm states, trial ``j`` starting at ``j * horizon_end / n_trials``
    and running for ``t_end``. A track passes when each trial ends below
    ``decay_factor`` and never exceeds ``blowup_cap``; it fails on blow-up or
    no decay at all, and is ``borderline`` otherwise.

    Returns a list of :class:`TrackProbe` (track 0, the zero eigenvalue, is skipped).
    """
    if decoupling is None:
        decoupling = decouple_schedule(sys, epsilon=epsilon, gap_tol=gap_tol, realify=realify,
                                       seed=seed, cond_cap=cond_cap)
    tracks = eigenvalue_tracks([s.spectrum for s in decoupling])
    rng = np.random.default_rng(seed)
    starts = tuple(sys.schedule.horizon_end * j / n_trials for j in range(n_trials))
    results = []
    for i in range(1, tracks.shape[0]):
        x0 = rng.standard_normal((n_trials, sys.d))
        x0 /= np.linalg.norm(x0, axis=1, keepdims=True)
        status, final, peak, rate = _probe_track(
            sys, tracks[i], starts, x0, dt, t_end, decay_factor, blowup_cap
        )
        results.append(TrackProbe(i, tracks[i], status, final, peak, rate, starts))
    return results


@dataclass(frozen=True)
class ConsensusVerdict:
    condition1: bool
    gap_intervals: list
    condition2: object
    probes: list
    hurwitz_a: bool
    overall: str
    rationale: str
    settings: dict = field(default_factory=dict)


def check_consensus(sys, dt=DEFAULT_DT, t_end=DEFAULT_T_END, n_trials=DEFAULT_TRIALS, seed=0,
                    decay_factor=DEFAULT_DECAY, blowup_cap=DEFAULT_BLOWUP,
                    epsilon=DEFAULT_EPSILON, gap_tol=None, realify=False,
                    hurwitz_margin=DEFAULT_HURWITZ_MARGIN, cond_cap=DEFAULT_COND_CAP):
    """Decide uniform consensus from connectivity and per-eigenvalue subsystem stability.

    condition 1: spanning-tree losses are confined to a bounded prefix of time
    (a disconnected final segment persists forever). condition 2: every
    nonzero-eigenvalue subsystem passes :func:`subsystem_stability_probe`.

    With Hurwitz ``A`` the verdict follows condition 2 alone; otherwise
    (including marginal ``A`` such as 0) both conditions are required.
    ``inconclusive`` is returned when the deciding probes are borderline.
    """
    gaps = spanning_tree_gap_intervals(sys.schedule)
    last_graph = sys.schedule.segments[-1][1]
    cond1 = has_spanning_tree(last_graph)
    probes = subsystem_stability_probe(
        sys, gap_tol=gap_tol, dt=dt, t_end=t_end, n_trials=n_trials, seed=seed,
        decay_factor=decay_factor, blowup_cap=blowup_cap, epsilon=epsilon,
        realify=realify, cond_cap=cond_cap,
    )
    statuses = {p.status for p in probes}
    if "fail" in statuses:
        cond2 = False
    elif "borderline" in statuses:
        cond2 = None
    else:
        cond2 = True
    hurwitz = hurwitz_check(sys.a_matrix, hurwitz_margin)
    failing = [p.track for p in probes if p.status == "fail"]
    if hurwitz:
        branch = "A is Hurwitz: consensus iff every subsystem is uniformly asymptotically stable"
        if cond2 is True:
            overall, why = "consensus", "all subsystem probes decayed"
        elif cond2 is False:
            overall, why = "no_consensus", f"subsystem probe failed on tracks {failing}"
        else:
            overall, why = "inconclusive", "some subsystem probes decayed only partially"
    else:
        branch = ("A is not Hurwitz: consensus iff spanning-tree losses stop after some time "
                  "and every subsystem is uniformly asymptotically stable")
        if not cond1:
            overall = "no_consensus"
            why = f"the topology lacks a spanning tree from t = {gaps[-1][0]:g} onwards"
        elif cond2 is True:
            overall, why = "consensus", "spanning tree eventually persistent and all subsystem probes decayed"
        elif cond2 is False:
            overall, why = "no_consensus", f"subsystem probe failed on tracks {failing}"
        else:
            overall, why = "inconclusive", "some subsystem probes decayed only partially"
    settings = {"dt": dt, "t_end": t_end, "n_trials": n_trials, "seed": seed,
                "decay_factor": decay_factor, "blowup_cap": blowup_cap, "epsilon": epsilon,
                "gap_tol": gap_tol, "realify": realify, "hurwitz_margin": hurwitz_margin,
                "cond_cap": cond_cap}
    return ConsensusVerdict(
        condition1=cond1,
        gap_intervals=gaps,
        condition2=cond2,
        probes=probes,
        hurwitz_a=hurwitz,
        overall=overall,
        rationale=f"{branch}; {why} (numerical probe, not a proof)",
        settings=settings,
    )


@dataclass(frozen=True)
class RobustnessReport:
    bound_scale: float
    n_samples: int
    n_converged: int
    seed: int

    @property
    def fraction(self):
        return self.n_converged / self.n_samples if self.n_samples else 1.0


def _random_laplacian_perturbation(rng, n, scale):
    g = rng.standard_normal((n, n))
    g -= g.mean(axis=1, keepdims=True)
    norm = np.linalg.norm(g)
    return g * (scale / norm) if norm > 0 else g


def robustness_probe(sys, bound_scale, n_samples=20, seed=0, dt=DEFAULT_DT, t_end=DEFAULT_T_END,
                     decay_factor=DEFAULT_DECAY, x0=None):
    """Fraction of topology-perturbed systems that still reach consensus.

    Each sample adds a random zero-row-sum ``dL`` with ``||dL||_F = bound_scale``
    to every segment's Laplacian (perturbation field ``-(dL kron F) x``) and
    re-simulates. A sample converges when it does not diverge and its final
    deviation is below ``decay_factor`` times the initial one. Purely
    empirical; intended for systems already judged to reach consensus.
    """
    if bound_scale < 0:
        raise ValueError("bound_scale must be nonnegative")
    rng = np.random.default_rng(seed)
    n, d = sys.n_agents, sys.d
    if x0 is None:
        x0 = rng.standard_normal(n * d)
    x0 = _check_run(sys, x0, dt, t_end)
    base = sys.laplacians()
    dev0 = swarm_deviation(x0, n)
    converged = 0
    for _ in range(n_samples):
        laps = [lap + _random_laplacian_perturbation(rng, n, bound_scale) for lap in base]
        tr = _simulate_laps(sys, laps, x0, dt, t_end)
        if not tr.divergent and tr.deviations[-1] <= decay_factor * dev0:
            converged += 1
    return RobustnessReport(float(bound_scale), int(n_samples), converged, seed)


def robustness_sweep(sys, scales, **kwargs):
    """Run :func:`robustness_probe` per scale; also return the largest fully-converging scale."""
    reports = [robustness_probe(sys, s, **kwargs) for s in scales]
    ok = [r.bound_scale for r in reports if r.n_converged == r.n_samples]
    return reports, (max(ok) if ok else None)
