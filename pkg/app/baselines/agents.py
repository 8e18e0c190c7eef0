"""
Episode-level agents for the comparison methods. Each picks one source
policy before the episode and learns from the episode's return afterwards.
"""

from typing import List, Optional

import numpy as np

from app.baselines.ops_drl import OpsState, ops_select, ops_update
from app.baselines.pr_drl import DEFAULT_DELTA_NU, DEFAULT_NU, PrDrlState, pr_probabilities, pr_select, pr_update
from app.baselines.return_bpr import ReturnObservationTable, bpr_return_select, bpr_return_update
from app.core.belief import belief_init, discounted_return
from app.core.constants import Method, Phase
from app.core.types import DiscountConfig, EpisodeResult
from app.engine import events as ev
from app.engine.events import EventLog
from app.environments.base import Environment


class BaselineAgent:
    method: Method

    def select(self, rng: np.random.Generator) -> int:
        raise NotImplementedError

    def observe(self, chosen: int, episode_return: float):
        raise NotImplementedError

    def snapshot(self) -> Optional[List[float]]:
        """Distribution over source policies reported in the event stream."""
        return None


class BprReturnAgent(BaselineAgent):
    method = Method.BPR_RETURN

    def __init__(self, table: ReturnObservationTable):
        self.table = table
        self.belief = belief_init(table.n)

    def select(self, rng):
        return bpr_return_select(self.belief, self.table)

    def observe(self, chosen, episode_return):
        self.belief = bpr_return_update(self.belief, episode_return, chosen, self.table)

    def snapshot(self):
        return self.belief.as_list()


class PrDrlAgent(BaselineAgent):
    method = Method.PR_DRL

    def __init__(self, n: int, nu: float = DEFAULT_NU, delta_nu: float = DEFAULT_DELTA_NU):
        self.state = PrDrlState.start(n, nu, delta_nu)

    def select(self, rng):
        return pr_select(self.state, rng)

    def observe(self, chosen, episode_return):
        self.state = pr_update(self.state, chosen, episode_return)

    def snapshot(self):
        return pr_probabilities(self.state).tolist()


class OpsDrlAgent(BaselineAgent):
    method = Method.OPS_DRL

    def __init__(self, n: int):
        self.state = OpsState.start(n)

    def select(self, rng):
        return ops_select(self.state)

    def observe(self, chosen, episode_return):
        self.state = ops_update(self.state, chosen, episode_return)


def run_baseline_episode(
    agent: BaselineAgent,
    env: Environment,
    policies,
    rng: np.random.Generator,
    discount: DiscountConfig = DiscountConfig(),
    events: Optional[EventLog] = None,
    episode: int = 0,
) -> EpisodeResult:
    """Select once, run the chosen policy for a whole episode, then update."""
    chosen = agent.select(rng)
    policy = policies[chosen]
    state = env.reset()
    rewards: List[float] = []
    done = False
    while not done:
        state, reward, done = env.step(policy.act(state, rng))
        rewards.append(reward)
        if events is not None:
            events.emit(ev.STEP, episode=episode, step=len(rewards) - 1, selected_policy=chosen,
                        belief=agent.snapshot(), reward=reward, phase=Phase.REUSE.value)

    episode_return = discounted_return(rewards, discount)
    agent.observe(chosen, episode_return)
    if events is not None:
        events.emit(ev.EPISODE_END, episode=episode, step=len(rewards), selected_policy=chosen,
                    belief=agent.snapshot(), reward=episode_return, phase=Phase.REUSE.value)
    return EpisodeResult(
        return_U=episode_return,
        steps=len(rewards),
        reached_goal=env.reached_goal,
        selected_policy_trace=(chosen,) * len(rewards),
    )
