"""Decision policies behind a uniform two-phase interface.

Every policy exposes act(t, active) -> arms and update(t, active, arms,
rewards). act may only read state accumulated through round t-1, and all
per-round randomness comes from positioned streams, so the arms chosen for
one player are independent of the iteration order over the others.

Five benchmark algorithms live here: per-player UCB-1 and per-player
Gaussian Thompson sampling without any data sharing, a
confidence-bound algorithm that pools other players' observations through
a bias-aware weighting, and a transfer Thompson sampler that keeps both an
individual and an aggregate Gaussian posterior per (player, arm) pair and
switches between them on a pull-count threshold. The transfer sampler
comes in a delayed-update flavour (a pair's posteriors refresh only when
that player pulls that arm) and an eager flavour that refreshes every
pair's aggregate posterior each round. A uniform-random policy and a
scripted replay policy round out the set for validation work.
"""

import math
from dataclasses import dataclass

import numpy as np

ALGORITHMS = ("ind-ucb", "ind-ts", "robustagg-ucb", "robustagg-ts", "robustagg-ts-v")
EXTRA_POLICIES = ("uniform",)

TIE_LOWEST = "lowest_index"
TIE_RANDOM = "random_uniform"

# c1 scales the posterior-switch threshold, c2 the posterior variances.
CONSTANT_PRESETS = {
    "experiment": (0.5, 1.0),
    "analysis": (40.0, 4.0),
}

# Width multipliers for the pooled confidence bound. The analysis width
# 8 sqrt(13) is the constant the regret guarantee is proved with; it is far
# too conservative to compete empirically. The benchmark width is a
# practical calibration sitting between the Hoeffding width sqrt(2) (which
# would give the pooled UCB the same own-data radius as per-player UCB-1
# and make it as strong as Thompson sampling) and the analysis constant:
# wide enough that the pooled UCB loses to per-player Thompson sampling on
# half-subpar instances, tight enough that it still beats per-player UCB-1
# whenever enough high-gap arms can be shared.
BENCHMARK_UCB_WIDTH = 2.4
ANALYSIS_UCB_WIDTH = 8.0 * math.sqrt(13.0)


@dataclass(frozen=True)
class PolicyConfig:
    algorithm: str
    horizon: int
    epsilon: float
    c1: float = 0.5
    c2: float = 1.0
    tie_break: str = TIE_LOWEST
    ind_ucb_global_time: bool = False
    ucb_width: float = BENCHMARK_UCB_WIDTH

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS + EXTRA_POLICIES:
            raise ValueError(f"unknown algorithm: {self.algorithm!r}")
        if self.horizon < 0:
            raise ValueError("horizon must be non-negative")
        if not 0.0 <= self.epsilon <= 1.0:
            raise ValueError("epsilon must be in [0, 1]")
        if self.c1 <= 0 or self.c2 <= 0:
            raise ValueError("c1 and c2 must be positive")
        if self.ucb_width <= 0:
            raise ValueError("ucb_width must be positive")
        if self.tie_break not in (TIE_LOWEST, TIE_RANDOM):
            raise ValueError(f"unknown tie_break: {self.tie_break!r}")

    @classmethod
    def from_preset(cls, algorithm, horizon, epsilon, preset="experiment", **kwargs):
        if preset not in CONSTANT_PRESETS:
            raise ValueError(f"unknown constants preset: {preset!r}")
        c1, c2 = CONSTANT_PRESETS[preset]
        return cls(algorithm=algorithm, horizon=horizon, epsilon=epsilon,
                   c1=c1, c2=c2, **kwargs)


def switch_threshold(c1, horizon, epsilon, num_players):
    """Own-pull count at which the transfer sampler trusts its own data.

    c1 * ln(T) / eps^2 + 2M; infinite when eps = 0, so the aggregate
    posterior is used forever.
    """
    if epsilon == 0.0 or horizon < 1:
        return math.inf
    return c1 * math.log(horizon) / epsilon**2 + 2.0 * num_players


def ucb1_index(mean, count, t_active):
    """UCB-1 index mean + sqrt(2 ln(t) / n), infinite while n = 0."""
    mean = np.asarray(mean, dtype=np.float64)
    count = np.asarray(count, dtype=np.float64)
    t = np.asarray(t_active, dtype=np.float64)
    with np.errstate(divide="ignore", invalid="ignore"):
        bonus = np.sqrt(2.0 * np.log(t) / count)
        idx = np.where(count == 0, np.inf, mean + bonus)
    return idx


def _eval_deviation_bound(lam, a, b, epsilon, quad_coeff):
    # F(lam) = sqrt(quad_coeff * (a lam^2 + b (1-lam)^2)) + (1-lam) eps,
    # with a = 1/n_bar, b = 1/m_bar, quad_coeff = width^2 * ln T.
    return np.sqrt(quad_coeff * (a * lam**2 + b * (1.0 - lam) ** 2)) + (1.0 - lam) * epsilon


def _minimize_f_arrays(n_bar, m_bar, epsilon, ln_term, width=ANALYSIS_UCB_WIDTH):
    """Minimiser of the pooled deviation bound over lam in [0, 1].

    The objective is convex (a norm of a quadratic plus a linear term) and
    strictly decreasing left of the precision weight b/(a+b), so its
    minimum over [0, 1] sits at the unique stationary point of the
    squared stationarity condition, clipped to [0, 1]. When the bias is so
    large that no stationary point exists (disc <= 0) the bound decreases
    all the way to lam = 1: own data only. Vectorises over (n_bar, m_bar).
    """
    a = 1.0 / np.asarray(n_bar, dtype=np.float64)
    b = 1.0 / np.asarray(m_bar, dtype=np.float64)
    quad_coeff = width * width * ln_term
    ab = a + b
    disc = quad_coeff * ab - epsilon * epsilon
    with np.errstate(invalid="ignore", divide="ignore"):
        station = (b * disc + epsilon * np.sqrt(a * b * disc)) / (ab * disc)
        lam = np.where(disc > 0.0, np.clip(station, 0.0, 1.0), 1.0)
    val = _eval_deviation_bound(lam, a, b, epsilon, quad_coeff)
    return lam, val


def minimize_F(n_bar, m_bar, epsilon, horizon, width=ANALYSIS_UCB_WIDTH):
    """Best mixing weight for own vs pooled data and its bound value.

    Minimises width * sqrt(ln T [lam^2/n_bar + (1-lam)^2/m_bar]) +
    (1-lam) eps over lam in [0, 1]; the default width 8 sqrt(13) gives the
    analysis bound. With eps = 0 the minimiser is the precision weight
    n_bar / (n_bar + m_bar) regardless of width.
    """
    if n_bar < 1 or m_bar < 1:
        raise ValueError("n_bar and m_bar must be at least 1")
    if horizon < 2:
        raise ValueError("horizon must be at least 2")
    lam, val = _minimize_f_arrays(n_bar, m_bar, float(epsilon),
                                  math.log(horizon), width=width)
    return float(lam), float(val)


class BasePolicy:
    """Shared shell: configuration, stream plumbing, argmax tie-breaking."""

    def __init__(self, config, num_players, num_arms):
        self.config = config
        self.M = int(num_players)
        self.K = int(num_arms)
        self.streams = None
        self.snapshots = None

    @staticmethod
    def _require_distinct(active):
        # duplicated players would silently under-count through the fancy
        # indexed updates below
        if np.unique(active).size != active.size:
            raise ValueError(f"duplicate players in round decisions: {active!r}")

    def mismatch(self, num_players, num_arms, horizon, epsilon):
        """Explain any disagreement with the episode about to run, or None."""
        if self.M != num_players:
            return f"policy built for M={self.M}, episode has M={num_players}"
        if self.K != num_arms:
            return f"policy built for K={self.K}, episode has K={num_arms}"
        if self.config.horizon != horizon:
            return f"policy horizon {self.config.horizon} != schedule horizon {horizon}"
        if self.config.epsilon != epsilon:
            return (f"policy epsilon {self.config.epsilon} != instance "
                    f"epsilon {epsilon}")
        return None

    def reset(self, streams, snapshot=False):
        self.streams = streams

    def clone(self):
        return type(self)(self.config, self.M, self.K)

    def capture_snapshot(self, t):
        pass

    def act(self, t, active):
        raise NotImplementedError

    def update(self, t, active, arms, rewards):
        pass

    def _argmax(self, values, t, active):
        if self.config.tie_break == TIE_LOWEST:
            return values.argmax(axis=1)
        tie_u = self.streams.tie.uniforms(t)[active]
        best = values.max(axis=1)
        out = np.empty(values.shape[0], dtype=np.int64)
        for r in range(values.shape[0]):
            ties = np.flatnonzero(values[r] == best[r])
            out[r] = ties[int(tie_u[r] * ties.size)] if ties.size > 1 else ties[0]
        return out


class IndTsPolicy(BasePolicy):
    """Per-player Gaussian Thompson sampling, no data sharing.

    Arm i of player p carries posterior N(mean, 1 / (n ∨ 1)) where mean is
    p's own empirical mean (0 before the first pull), starting from the
    N(0, 1) prior.
    """

    def reset(self, streams, snapshot=False):
        super().reset(streams, snapshot)
        self.own_n = np.zeros((self.M, self.K), dtype=np.int64)
        self.own_sum = np.zeros((self.M, self.K))
        self.post_mean = np.zeros((self.M, self.K))
        self.post_sd = np.ones((self.M, self.K))

    def act(self, t, active):
        z = self.streams.policy.normals(t)
        theta = self.post_mean[active] + self.post_sd[active] * z[active]
        return self._argmax(theta, t, active)

    def update(self, t, active, arms, rewards):
        self._require_distinct(active)
        self.own_n[active, arms] += 1
        self.own_sum[active, arms] += rewards
        n = self.own_n[active, arms]
        self.post_mean[active, arms] = self.own_sum[active, arms] / n
        self.post_sd[active, arms] = np.sqrt(1.0 / n)


class IndUcbPolicy(BasePolicy):
    """Per-player UCB-1, no data sharing.

    The exploration term uses player-local time by default: t_p counts the
    rounds in which p has been active, including the current one. Setting
    ind_ucb_global_time in the config switches to the global round index.
    Each arm is force-pulled once before the index applies.
    """

    def reset(self, streams, snapshot=False):
        super().reset(streams, snapshot)
        self.own_n = np.zeros((self.M, self.K), dtype=np.int64)
        self.own_sum = np.zeros((self.M, self.K))
        self.mean = np.zeros((self.M, self.K))
        self.t_active = np.zeros(self.M, dtype=np.int64)

    def act(self, t, active):
        if self.config.ind_ucb_global_time:
            tp = np.full(active.shape, float(t))
        else:
            tp = (self.t_active[active] + 1).astype(np.float64)
        idx = ucb1_index(self.mean[active], self.own_n[active], tp[:, None])
        return self._argmax(idx, t, active)

    def update(self, t, active, arms, rewards):
        self._require_distinct(active)
        self.t_active[active] += 1
        self.own_n[active, arms] += 1
        self.own_sum[active, arms] += rewards
        self.mean[active, arms] = self.own_sum[active, arms] / self.own_n[active, arms]


class TransferTsPolicy(BasePolicy):
    """Thompson sampling with bias-aware pooling of all players' data.

    Each (player, arm) pair keeps two Gaussian posteriors:

      individual  N(own mean,            c2 / (n ∨ 1))
      aggregate   N(pooled mean + eps,   c2 / ((n_all - M) ∨ 1))

    where the aggregate mean pools every player's rewards for the arm and
    carries a +eps bonus covering the worst-case cross-player bias. A pair
    samples from the individual posterior once its own pull count reaches
    c1 ln(T)/eps^2 + 2M, and from the aggregate one before that.

    In delayed mode (the default) the pair's stored posteriors, snapshot
    count m and selection flag refresh only in rounds where that player
    pulls that arm, so all of them are constant between consecutive pulls.
    In eager mode the aggregate triple is refreshed for every pair in every
    round instead.
    """

    def __init__(self, config, num_players, num_arms, eager=False):
        super().__init__(config, num_players, num_arms)
        self.eager = eager
        self.threshold = switch_threshold(
            config.c1, config.horizon, config.epsilon, num_players
        )

    def clone(self):
        return TransferTsPolicy(self.config, self.M, self.K, eager=self.eager)

    def reset(self, streams, snapshot=False):
        super().reset(streams, snapshot)
        M, K, c2 = self.M, self.K, self.config.c2
        self.own_n = np.zeros((M, K), dtype=np.int64)
        self.own_sum = np.zeros((M, K))
        self.arm_n = np.zeros(K, dtype=np.int64)
        self.arm_sum = np.zeros(K)
        self.ind_mean = np.zeros((M, K))
        self.ind_sd = np.full((M, K), math.sqrt(c2))
        # Aggregate posterior starts at N(0, c2); the +eps offset enters
        # only through updates.
        self.agg_mean = np.zeros((M, K))
        self.agg_sd = np.full((M, K), math.sqrt(c2))
        self.m_snap = np.zeros((M, K), dtype=np.int64)
        self.use_ind = np.zeros((M, K), dtype=bool)
        if snapshot:
            T = self.config.horizon
            self.snapshots = {
                "own_n": np.zeros((T, M, K), dtype=np.int64),
                "m": np.zeros((T, M, K), dtype=np.int64),
                "ind_mean": np.zeros((T, M, K)),
                "ind_var": np.zeros((T, M, K)),
                "agg_mean": np.zeros((T, M, K)),
                "agg_var": np.zeros((T, M, K)),
                "use_ind": np.zeros((T, M, K), dtype=bool),
            }
        else:
            self.snapshots = None

    def capture_snapshot(self, t):
        s = self.snapshots
        s["own_n"][t - 1] = self.own_n
        s["m"][t - 1] = self.m_snap
        s["ind_mean"][t - 1] = self.ind_mean
        s["ind_var"][t - 1] = self.ind_sd**2
        s["agg_mean"][t - 1] = self.agg_mean
        s["agg_var"][t - 1] = self.agg_sd**2
        s["use_ind"][t - 1] = self.use_ind

    def act(self, t, active):
        z = self.streams.policy.normals(t)
        use = self.use_ind[active]
        mean = np.where(use, self.ind_mean[active], self.agg_mean[active])
        sd = np.where(use, self.ind_sd[active], self.agg_sd[active])
        theta = mean + sd * z[active]
        return self._argmax(theta, t, active)

    def update(self, t, active, arms, rewards):
        self._require_distinct(active)
        # Counts first: the posterior refresh below must see end-of-round
        # totals, including rewards other players earned on the same arm.
        self.own_n[active, arms] += 1
        self.own_sum[active, arms] += rewards
        self.arm_n += np.bincount(arms, minlength=self.K)
        self.arm_sum += np.bincount(arms, weights=rewards, minlength=self.K)

        c2, eps, M = self.config.c2, self.config.epsilon, self.M
        n_own = self.own_n[active, arms]
        self.ind_mean[active, arms] = self.own_sum[active, arms] / n_own
        self.ind_sd[active, arms] = np.sqrt(c2 / n_own)
        self.use_ind[active, arms] = n_own >= self.threshold
        if self.eager:
            self.agg_mean[:] = self.arm_sum / np.maximum(self.arm_n, 1) + eps
            self.agg_sd[:] = np.sqrt(c2 / np.maximum(self.arm_n - M, 1))
            self.m_snap[:] = self.arm_n
        else:
            n_all = self.arm_n[arms]
            self.agg_mean[active, arms] = self.arm_sum[arms] / np.maximum(n_all, 1) + eps
            self.agg_sd[active, arms] = np.sqrt(c2 / np.maximum(n_all - M, 1))
            self.m_snap[active, arms] = n_all


class TransferUcbPolicy(BasePolicy):
    """Upper confidence bounds over a bias-aware mix of own and pooled data.

    For each arm the policy forms zeta (own empirical mean) and eta (all
    other players' pooled mean), picks the mixing weight minimising the
    deviation bound F, and scores the arm with the mixed estimate plus F.
    """

    def __init__(self, config, num_players, num_arms):
        super().__init__(config, num_players, num_arms)
        self._ln_horizon = math.log(max(config.horizon, 1))

    def reset(self, streams, snapshot=False):
        super().reset(streams, snapshot)
        self.own_n = np.zeros((self.M, self.K), dtype=np.int64)
        self.own_sum = np.zeros((self.M, self.K))
        self.arm_n = np.zeros(self.K, dtype=np.int64)
        self.arm_sum = np.zeros(self.K)

    def act(self, t, active):
        n = self.own_n[active]
        n_bar = np.maximum(n, 1)
        m_bar = np.maximum(self.arm_n[None, :] - n, 1)
        zeta = self.own_sum[active] / n_bar
        eta = (self.arm_sum[None, :] - self.own_sum[active]) / m_bar
        lam, bound = _minimize_f_arrays(n_bar, m_bar, self.config.epsilon,
                                        self._ln_horizon,
                                        width=self.config.ucb_width)
        ucb = lam * zeta + (1.0 - lam) * eta + bound
        return self._argmax(ucb, t, active)

    def update(self, t, active, arms, rewards):
        self._require_distinct(active)
        self.own_n[active, arms] += 1
        self.own_sum[active, arms] += rewards
        self.arm_n += np.bincount(arms, minlength=self.K)
        self.arm_sum += np.bincount(arms, weights=rewards, minlength=self.K)


class UniformRandomPolicy(BasePolicy):
    """Arm chosen uniformly at random each activation; maximises the
    diversity of stopping times in validation runs."""

    def act(self, t, active):
        u = self.streams.policy.uniforms(t)[active, 0]
        return np.minimum((u * self.K).astype(np.int64), self.K - 1)


class ScriptedPolicy(BasePolicy):
    """Replays a fixed (T, M) arm script; update is a no-op."""

    def __init__(self, config, num_players, num_arms, script):
        super().__init__(config, num_players, num_arms)
        self.script = np.asarray(script, dtype=np.int64)
        if self.script.shape != (config.horizon, num_players):
            raise ValueError("script must have shape (horizon, num_players)")

    def clone(self):
        return ScriptedPolicy(self.config, self.M, self.K, self.script)

    def act(self, t, active):
        return self.script[t - 1, active]


def make_policy(config, num_players, num_arms):
    alg = config.algorithm
    if alg == "ind-ts":
        return IndTsPolicy(config, num_players, num_arms)
    if alg == "ind-ucb":
        return IndUcbPolicy(config, num_players, num_arms)
    if alg == "robustagg-ts":
        return TransferTsPolicy(config, num_players, num_arms, eager=False)
    if alg == "robustagg-ts-v":
        return TransferTsPolicy(config, num_players, num_arms, eager=True)
    if alg == "robustagg-ucb":
        return TransferUcbPolicy(config, num_players, num_arms)
    if alg == "uniform":
        return UniformRandomPolicy(config, num_players, num_arms)
    raise ValueError(f"unknown algorithm: {alg!r}")
