"""
Reuse phase: act with the policy the belief favours, score every library
model on the collected transitions and update the belief, switching policy
inside the episode whenever the belief says so.
"""

import logging
import time
from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Deque, List, Optional, Tuple

import numpy as np

from app.core.belief import belief_init, belief_update, discounted_return, select_policy
from app.core.constants import Phase, SelectionMode
from app.core.types import Belief, DiscountConfig, EpisodeResult, SignalLayout, TransitionSample
from app.dynamics.fitting import DynamicsFitConfig, fit_model
from app.dynamics.likelihood import LikelihoodConfig, log_likelihoods
from app.engine import events as ev
from app.engine.events import EventLog
from app.engine.learning import DEFAULT_LEARNING_SAMPLES, expand_library, learning_phase, learning_samples
from app.engine.library import PolicyLibrary
from app.engine.novelty import NoveltyConfig, detect_novel
from app.environments.base import Environment
from app.environments.suites import make_env
from app.utils.exceptions import DimensionMismatchError, LearnerFailedError

logger = logging.getLogger("bprx.engine")


@dataclass(frozen=True)
class ReuseConfig:
    selection: SelectionMode = SelectionMode.GREEDY
    likelihood: LikelihoodConfig = field(default_factory=LikelihoodConfig)
    discount: DiscountConfig = field(default_factory=DiscountConfig)
    novelty: Optional[NoveltyConfig] = None

    def __post_init__(self):
        object.__setattr__(self, "selection", SelectionMode(self.selection))


@dataclass
class ReusePhaseState:
    belief: Belief
    window: Deque[float]
    episode: int = 0
    step: int = 0
    buffer: List[TransitionSample] = field(default_factory=list)
    rewards: List[float] = field(default_factory=list)
    trace: List[int] = field(default_factory=list)
    current_policy: Optional[int] = None

    @classmethod
    def start(cls, n: int, window_k: int = 3) -> "ReusePhaseState":
        return cls(belief=belief_init(n), window=deque(maxlen=window_k))

    def begin_episode(self):
        self.step = 0
        self.buffer = []
        self.rewards = []
        self.trace = []
        self.current_policy = None


def _flush(state: ReusePhaseState, library: PolicyLibrary, layout: SignalLayout, cfg: ReuseConfig):
    if not state.buffer:
        return
    log_lik = log_likelihoods(library.models, state.buffer, layout, cfg.likelihood)
    state.belief = belief_update(state.belief, log_lik)
    state.buffer = []
    logger.debug(f"episode {state.episode} step {state.step}: belief {np.round(state.belief.weights, 4).tolist()}")


def reuse_step(
    state: ReusePhaseState,
    env: Environment,
    library: PolicyLibrary,
    layout: SignalLayout,
    cfg: ReuseConfig = ReuseConfig(),
    rng: Optional[np.random.Generator] = None,
    events: Optional[EventLog] = None,
) -> Tuple[ReusePhaseState, TransitionSample, bool]:
    """
    One environment step. The policy is chosen at the start of every
    window of N0 samples; the belief is updated once the window fills.
    """
    library.require_entries()
    if state.belief.n != library.n:
        raise DimensionMismatchError(f"belief covers {state.belief.n} tasks, library holds {library.n}")
    rng = rng if rng is not None else np.random.default_rng(0)

    if not state.buffer or state.current_policy is None:
        state.current_policy = select_policy(state.belief, cfg.selection, rng)
    index = state.current_policy

    s = env.state.copy()
    action = library[index].policy.act(s, rng)
    s_next, reward, done = env.step(action)
    sample = env.transition_sample(s, action, reward, s_next)

    state.buffer.append(sample)
    state.rewards.append(reward)
    state.trace.append(index)
    state.step += 1
    if len(state.buffer) >= layout.batch_size:
        _flush(state, library, layout, cfg)

    if events is not None:
        events.emit(
            ev.STEP,
            episode=state.episode,
            step=state.step - 1,
            selected_policy=index,
            belief=state.belief.as_list(),
            reward=reward,
            phase=Phase.REUSE.value,
        )
    return state, sample, done


def run_reuse_episode(
    state: ReusePhaseState,
    env: Environment,
    library: PolicyLibrary,
    layout: SignalLayout,
    cfg: ReuseConfig = ReuseConfig(),
    rng: Optional[np.random.Generator] = None,
    events: Optional[EventLog] = None,
    max_steps: Optional[int] = None,
) -> EpisodeResult:
    """Run until the goal or the step budget; the belief carries into the next episode."""
    rng = rng if rng is not None else np.random.default_rng(0)
    budget = env.max_steps if max_steps is None else min(max_steps, env.max_steps)
    state.begin_episode()
    reached = False
    if budget > 0:
        env.reset()
        done = False
        while not done and state.step < budget:
            _, _, done = reuse_step(state, env, library, layout, cfg, rng, events)
        # a partial window still carries evidence
        _flush(state, library, layout, cfg)
        reached = env.reached_goal

    result = EpisodeResult(
        return_U=discounted_return(state.rewards, cfg.discount),
        steps=state.step,
        reached_goal=reached,
        selected_policy_trace=tuple(state.trace),
    )
    state.window.append(result.return_U)
    if events is not None:
        events.emit(
            ev.EPISODE_END,
            episode=state.episode,
            step=state.step,
            selected_policy=state.trace[-1] if state.trace else None,
            belief=state.belief.as_list(),
            reward=result.return_U,
            phase=Phase.REUSE.value,
        )
    state.episode += 1
    return result


@dataclass
class TargetRun:
    episodes: List[EpisodeResult]
    library: PolicyLibrary
    belief: Belief
    detected_at: Optional[int] = None
    expansions: List[str] = field(default_factory=list)
    wall_times_ms: List[float] = field(default_factory=list)

    @property
    def returns(self) -> List[float]:
        return [e.return_U for e in self.episodes]


class PolicyReuseEngine:
    """
    Owns one library value and one random stream; runs targets one after
    another. In continual mode a novelty detection triggers one learning
    phase per target and the expanded library carries over to later targets.
    """

    def __init__(
        self,
        library: PolicyLibrary,
        layout: Optional[SignalLayout] = None,
        config: ReuseConfig = ReuseConfig(),
        rng: Optional[np.random.Generator] = None,
        learner=None,
        fit_config: DynamicsFitConfig = DynamicsFitConfig(),
        learning_budget: int = DEFAULT_LEARNING_SAMPLES,
        env_factory: Optional[Callable[..., Environment]] = None,
    ):
        library.require_entries()
        self.library = library
        self.layout = layout or library.layout
        self.config = config
        self.rng = rng if rng is not None else np.random.default_rng(0)
        self.learner = learner
        self.fit_config = fit_config
        self.learning_budget = learning_budget
        self.env_factory = env_factory or make_env

    def _learning_env(self, task) -> Environment:
        seed = int(self.rng.integers(2 ** 32))
        return self.env_factory(task, np.random.default_rng(seed))

    def _learn_and_expand(self, task, state: ReusePhaseState, events: Optional[EventLog]):
        env = self._learning_env(task)
        if events is not None:
            events.emit(ev.PHASE_SWITCH, episode=state.episode, step=0, selected_policy=None,
                        belief=state.belief.as_list(), reward=None, phase=Phase.LEARNING.value)
        try:
            outcome = learning_phase(env, self.learner, self.layout, self.fit_config, self.learning_budget, self.rng)
            policy, model, n_samples = outcome.policy, outcome.model, len(outcome.samples)
        except LearnerFailedError as exc:
            logger.warning(f"{exc}; expanding with the best policy found")
            policy = exc.best_policy
            samples = learning_samples(env, policy, [], self.learning_budget, self.rng)
            model = fit_model(samples, self.layout, self.fit_config, self.rng)
            n_samples = len(samples)

        self.library, state.belief = expand_library(self.library, policy, model, task, n_samples)
        state.window.clear()
        if events is not None:
            events.emit(ev.EXPANSION, episode=state.episode, step=0, selected_policy=self.library.n - 1,
                        belief=state.belief.as_list(), reward=None, phase=Phase.LEARNING.value,
                        task_id=task.task_id, library_size=self.library.n)
            events.emit(ev.PHASE_SWITCH, episode=state.episode, step=0, selected_policy=None,
                        belief=state.belief.as_list(), reward=None, phase=Phase.REUSE.value)

    def run_target(
        self,
        env: Environment,
        episodes: int,
        continual: bool = False,
        events: Optional[EventLog] = None,
    ) -> TargetRun:
        """K reuse episodes on ``env``'s task; the belief starts uniform for every target."""
        if episodes < 1:
            raise ValueError(f"episodes must be >= 1, got {episodes}")
        novelty = self.config.novelty
        if continual and (novelty is None or self.learner is None):
            raise ValueError("continual runs need a novelty config and a learner")
        state = ReusePhaseState.start(self.library.n, novelty.k if novelty else 1)
        run = TargetRun(episodes=[], library=self.library, belief=state.belief)

        for _ in range(episodes):
            started = time.perf_counter()
            run.episodes.append(run_reuse_episode(state, env, self.library, self.layout, self.config, self.rng, events))
            run.wall_times_ms.append((time.perf_counter() - started) * 1000.0)
            if continual and run.detected_at is None and detect_novel(state.window, novelty):
                run.detected_at = state.episode - 1
                logger.info(f"Novel task {env.task.task_id} detected after episode {run.detected_at}")
                self._learn_and_expand(env.task, state, events)
                run.expansions.append(env.task.task_id)

        run.library = self.library
        run.belief = state.belief
        return run
