import numpy as np
import pytest

from dppersuade.model import NoPrivacy, PersuasionInstance

# Threshold receiver: acts iff P(state 1) >= 0.5; the sender wants the action.
THRESHOLD_PRIOR = 0.475
# Approx(0.095, 0.01) optimum from the refined grid oracle, frozen.
THRESHOLD_APPROX_VALUE = 0.5345179192138582


def threshold_instance(mu=THRESHOLD_PRIOR, privacy=None):
    return PersuasionInstance(
        n=1,
        states=((0,), (1,)),
        prior=np.array([1 - mu, mu]),
        actions=("a0", "a1"),
        receiver_u=np.array([[0.0, 0.0], [-1.0, 1.0]]),
        sender_v=np.array([[0.0, 0.0], [1.0, 1.0]]),
        privacy=NoPrivacy() if privacy is None else privacy,
    )


def random_instance(rng, n=None, num_actions=None, privacy=None):
    """Random full-support instance over {0,1}^n."""
    from dppersuade.model import all_states

    n = int(rng.integers(1, 3)) if n is None else n
    states = all_states(n)
    K = len(states)
    A = int(rng.integers(2, 4)) if num_actions is None else num_actions
    prior = rng.dirichlet(np.ones(K))
    prior = np.maximum(prior, 1e-3)
    prior /= prior.sum()
    return PersuasionInstance(
        n=n,
        states=states,
        prior=prior,
        actions=tuple(f"a{i}" for i in range(A)),
        receiver_u=rng.uniform(-1, 1, (A, K)),
        sender_v=rng.uniform(0, 1, (A, K)),
        privacy=NoPrivacy() if privacy is None else privacy,
    )


@pytest.fixture
def threshold():
    return threshold_instance()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_homogeneous(rng, n, t, privacy=None, privacy_set=None):
    """Random homogeneous multi-receiver instance with an i.i.d. prior."""
    from dppersuade.model import Approx, Pure
    from dppersuade.multi_oblivious import homogeneous_instance, omega_space_for

    W = len(omega_space_for(n, privacy_set))
    ru = rng.uniform(-1, 1, (t, 2, W))
    sv = np.sort(rng.uniform(0, 1, (t + 1, W)), axis=0)
    if privacy is None:
        eps = float(rng.uniform(0.05, 1.5))
        privacy = Pure(eps) if rng.random() < 0.5 else Approx(eps, float(rng.uniform(0.001, 0.2)))
    p = float(rng.uniform(0.2, 0.8))
    return homogeneous_instance(n, t, p, ru, sv, privacy, privacy_set)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
