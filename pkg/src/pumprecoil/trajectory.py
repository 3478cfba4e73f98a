"""Quantum-trajectory sampler for completed optical-pumping runs.

Each trajectory draws waiting times between excitations, a Bernoulli
termination with probability lambda2 per emission (the geometric weight of
the emission count), and an emission direction from the dipole
characteristic of the transition that fired.  The final emission uses
(eta2, mu2), all earlier ones (eta1, mu1), and each emission kicks the
phase-space shift by i * eta * s * exp(i nu t).

Throughput engine: trajectories are partitioned into fixed blocks; every
block consumes its own counter-based Philox stream keyed by (seed, block
index), so results are bit-identical for any worker count.  Blocks run in a
numba kernel that interpolates waiting times from an equal-probability
inverse-CDF table and refills its uniform buffer from the block stream on
demand.  Per-trajectory phases accumulate modulo 2 pi at every emission, so
no precision is lost even at ~1e5 emissions per trajectory.
"""

from __future__ import annotations

import cmath
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from numba import njit

from .config import PumpConfig
from .dipole import DipoleCharacteristic
from .errors import DomainError, InvariantViolation, RunawayTrajectory
from .moments import dipole_pair
from .waiting_time import _TABLE_U_MAX, WaitingTimeModel

DEFAULT_SEED = 123456789
DEFAULT_MAX_EMISSIONS = 100_000_000

_MASK64 = (1 << 64) - 1
_TWO_PI = 2.0 * math.pi
_REFILL_CHUNK = 1 << 20

_DONE = 0
_NEED_BUFFER = 1
_RUNAWAY = 2


@dataclass(frozen=True)
class RecoilShiftSample:
    """One completed trajectory: total shift, emission count, last emission time."""

    alpha: complex
    n_emissions: int
    t_final: float


@dataclass(frozen=True)
class SamplerPlan:
    """Reproducible batch description.

    Results are a function of (seed, n_trajectories, block_size) only; the
    worker count never changes them.
    """

    seed: int
    n_trajectories: int
    n_workers: int = 1
    block_size: int = 4096
    max_emissions: int = DEFAULT_MAX_EMISSIONS

    def __post_init__(self):
        if self.n_trajectories < 0:
            raise DomainError("n_trajectories must be >= 0")
        if self.n_workers < 1:
            raise DomainError("n_workers must be >= 1")
        if self.block_size < 1:
            raise DomainError("block_size must be >= 1")
        if self.max_emissions < 1:
            raise DomainError("max_emissions must be >= 1")


@njit(cache=True, nogil=True)
def _advance_block(
    buf,
    state,
    inv_table,
    inv_du,
    lam2,
    eta1,
    eta2,
    nu,
    max_em,
    a1,
    b1,
    env1,
    a2,
    b2,
    env2,
    out_re,
    out_im,
    out_n,
    out_t,
):
    """Resumable block kernel; consumes `buf` sequentially, saves progress in `state`.

    state = [trajectory, stage, terminal_flag, t, phase, re, im, count];
    stage 1 means the waiting time and the branch decision of the current
    emission are already applied and only the direction is pending.
    """
    n_traj = out_re.shape[0]
    nbuf = buf.shape[0]
    nc = inv_table.shape[0] - 1
    pos = 0
    i = int(state[0])
    stage = int(state[1])
    term = state[2] != 0.0
    t = state[3]
    ph = state[4]
    are = state[5]
    aim = state[6]
    n = int(state[7])
    while i < n_traj:
        while True:
            if stage == 0:
                if pos + 2 > nbuf:
                    state[0] = i
                    state[1] = 0.0
                    state[2] = 0.0
                    state[3] = t
                    state[4] = ph
                    state[5] = are
                    state[6] = aim
                    state[7] = n
                    return _NEED_BUFFER, pos
                x = buf[pos] * inv_du
                pos += 1
                k = int(x)
                if k >= nc:
                    k = nc - 1
                frac = x - k
                if frac > 1.0:
                    frac = 1.0
                tau = inv_table[k] * (1.0 - frac) + inv_table[k + 1] * frac
                t += tau
                ph = (ph + nu * tau) % _TWO_PI
                n += 1
                if n > max_em:
                    state[0] = i
                    return _RUNAWAY, pos
                term = buf[pos] < lam2
                pos += 1
                stage = 1
            if term:
                aa, bb, env, eta = a2, b2, env2, eta2
            else:
                aa, bb, env, eta = a1, b1, env1, eta1
            s = 0.0
            accepted = False
            while not accepted:
                if pos + 2 > nbuf:
                    state[0] = i
                    state[1] = 1.0
                    state[2] = 1.0 if term else 0.0
                    state[3] = t
                    state[4] = ph
                    state[5] = are
                    state[6] = aim
                    state[7] = n
                    return _NEED_BUFFER, pos
                cand = 2.0 * buf[pos] - 1.0
                pos += 1
                accepted = buf[pos] * env <= aa + bb * cand * cand
                pos += 1
                if accepted:
                    s = cand
            kick = eta * s
            are -= kick * math.sin(ph)
            aim += kick * math.cos(ph)
            stage = 0
            if term:
                out_re[i] = are
                out_im[i] = aim
                out_n[i] = n
                out_t[i] = t
                i += 1
                t = 0.0
                ph = 0.0
                are = 0.0
                aim = 0.0
                n = 0
                term = False
                break
    state[0] = i
    return _DONE, pos


def _block_key(seed: int, block_index: int) -> int:
    return (int(seed) & _MASK64) | ((block_index + 1) << 64)


def _dipole_params(d: DipoleCharacteristic) -> tuple[float, float, float]:
    a, b = d._coeffs()
    return a, b, d.envelope()


def _run_block(cfg, inv_table, plan, block_index, out_re, out_im, out_n, out_t):
    """Drive one block to completion, refilling its Philox buffer as needed."""
    n_block = out_re.shape[0]
    gen = np.random.Generator(np.random.Philox(key=_block_key(plan.seed, block_index)))
    d1, d2 = dipole_pair(cfg)
    a1, b1, env1 = _dipole_params(d1)
    a2, b2, env2 = _dipole_params(d2)
    inv_du = inv_table.shape[0] - 1  # u in [0,1) times this indexes the cell
    inv_du = inv_du / _TABLE_U_MAX
    state = np.zeros(8)
    # ~2 draws per emission plus rejection tries at acceptance 1/(2 env)
    per_traj = (2.0 + 4.0 * max(env1, env2)) / cfg.lambda2
    first = int(min(max(n_block * per_traj * 1.2 + 64, 4096), _REFILL_CHUNK))
    leftover = None
    chunk = first
    while True:
        fresh = gen.random(chunk)
        buf = fresh if leftover is None or leftover.size == 0 else np.concatenate((leftover, fresh))
        status, pos = _advance_block(
            buf,
            state,
            inv_table,
            inv_du,
            cfg.lambda2,
            cfg.eta1,
            cfg.eta2,
            cfg.nu,
            plan.max_emissions,
            a1,
            b1,
            env1,
            a2,
            b2,
            env2,
            out_re,
            out_im,
            out_n,
            out_t,
        )
        if status == _DONE:
            break
        if status == _RUNAWAY:
            raise RunawayTrajectory(
                block_index * plan.block_size + int(state[0]), plan.max_emissions
            )
        leftover = buf[pos:]
        chunk = _REFILL_CHUNK
    return {
        "sum_abs2": float(np.sum(out_re * out_re + out_im * out_im)),
        "sum_re": float(np.sum(out_re)),
        "sum_im": float(np.sum(out_im)),
        "sum_a2_re": float(np.sum(out_re * out_re - out_im * out_im)),
        "sum_a2_im": float(np.sum(2.0 * out_re * out_im)),
        "sum_abs4": float(np.sum((out_re * out_re + out_im * out_im) ** 2)),
    }


class TrajectoryEnsemble:
    """Completed batch: per-trajectory arrays plus exactly merged summary sums."""

    def __init__(self, alpha, n_emissions, t_final, plan: SamplerPlan, summary: dict):
        self.alpha = alpha
        self.n_emissions = n_emissions
        self.t_final = t_final
        self.plan = plan
        self._summary = summary

    def __len__(self) -> int:
        return self.alpha.shape[0]

    def __iter__(self):
        for a, n, t in zip(self.alpha, self.n_emissions, self.t_final):
            yield RecoilShiftSample(complex(a), int(n), float(t))

    def __getitem__(self, i) -> RecoilShiftSample:
        return RecoilShiftSample(complex(self.alpha[i]), int(self.n_emissions[i]), float(self.t_final[i]))

    @property
    def mean_alpha(self) -> complex:
        n = max(len(self), 1)
        return complex(self._summary["sum_re"] / n, self._summary["sum_im"] / n)

    @property
    def mean_abs2(self) -> float:
        return self._summary["sum_abs2"] / max(len(self), 1)

    @property
    def mean_alpha2(self) -> complex:
        n = max(len(self), 1)
        return complex(self._summary["sum_a2_re"] / n, self._summary["sum_a2_im"] / n)

    @property
    def mean_abs4(self) -> float:
        return self._summary["sum_abs4"] / max(len(self), 1)

    def emission_histogram(self) -> np.ndarray:
        """Counts of trajectories per emission number (index = count)."""
        if len(self) == 0:
            return np.zeros(1, dtype=np.int64)
        return np.bincount(self.n_emissions)


def sample_trajectory(
    cfg: PumpConfig,
    wtm: WaitingTimeModel,
    rng,
    max_emissions: int = DEFAULT_MAX_EMISSIONS,
) -> RecoilShiftSample:
    """Reference scalar sampler; one completed trajectory.

    Mirrors the geometric termination exactly: a Bernoulli(lambda2) decision
    per emission, taken before the direction draw, so the final kick uses
    the pumping transition and all earlier kicks the recycling one.
    """
    d1, d2 = dipole_pair(cfg)
    t = 0.0
    ph = 0.0
    alpha = 0j
    n = 0
    while True:
        tau = wtm.sample(rng)
        t += tau
        ph = (ph + cfg.nu * tau) % _TWO_PI
        n += 1
        if n > max_emissions:
            raise RunawayTrajectory(0, max_emissions)
        if rng.random() < cfg.lambda2:
            alpha += 1j * cfg.eta2 * d2.sample(rng) * cmath.exp(1j * ph)
            break
        alpha += 1j * cfg.eta1 * d1.sample(rng) * cmath.exp(1j * ph)
    return RecoilShiftSample(alpha, n, t)


def _check_shift_bound(cfg: PumpConfig, alpha: np.ndarray, n: np.ndarray) -> None:
    bound = cfg.eta2 + (n - 1) * cfg.eta1
    slack = 1e-12 * (1.0 + n.astype(float))
    bad = np.abs(alpha) > bound + slack
    if np.any(bad):
        i = int(np.argmax(bad))
        raise InvariantViolation(
            f"|alpha| = {abs(alpha[i])} exceeds the kick-sum bound {bound[i]} at trajectory {i}"
        )


def sample_batch(cfg: PumpConfig, wtm: WaitingTimeModel, plan: SamplerPlan) -> TrajectoryEnsemble:
    """Sample exactly plan.n_trajectories completed trajectories.

    Deterministic for a given (seed, n_trajectories, block_size) no matter
    how many workers run; summary sums are combined with math.fsum, which is
    exactly rounded and hence order-insensitive.
    """
    n = plan.n_trajectories
    alpha_re = np.zeros(n)
    alpha_im = np.zeros(n)
    n_em = np.zeros(n, dtype=np.int64)
    t_final = np.zeros(n)
    keys = ("sum_abs2", "sum_re", "sum_im", "sum_a2_re", "sum_a2_im", "sum_abs4")
    if n == 0:
        return TrajectoryEnsemble(
            alpha_re + 1j * alpha_im, n_em, t_final, plan, {k: 0.0 for k in keys}
        )
    inv_table = wtm.inverse_table()
    n_blocks = (n + plan.block_size - 1) // plan.block_size

    def job(b: int):
        lo = b * plan.block_size
        hi = min(lo + plan.block_size, n)
        return _run_block(
            cfg, inv_table, plan, b, alpha_re[lo:hi], alpha_im[lo:hi], n_em[lo:hi], t_final[lo:hi]
        )

    if plan.n_workers == 1 or n_blocks == 1:
        partials = [job(b) for b in range(n_blocks)]
    else:
        with ThreadPoolExecutor(max_workers=plan.n_workers) as pool:
            futures = [pool.submit(job, b) for b in range(n_blocks)]
            errors = []
            partials = []
            for fut in futures:
                try:
                    partials.append(fut.result())
                except RunawayTrajectory as exc:
                    errors.append(exc)
            if errors:
                raise min(errors, key=lambda e: e.trajectory_index)
    summary = {k: math.fsum(p[k] for p in partials) for k in keys}
    alpha = alpha_re + 1j * alpha_im
    _check_shift_bound(cfg, alpha, n_em)
    return TrajectoryEnsemble(alpha, n_em, t_final, plan, summary)
