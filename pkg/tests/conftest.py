import numpy as np
import pytest

from eepc.channel import ChannelMatrix
from eepc.efficiency import AarProtocol, CarProtocol, EnergyModel, ExpThreshold
from eepc.game import GameConfig, SolverParams
from eepc.queueing import AarSpec, QueueParams


def make_config(gains=((2.5, 0.5), (0.5, 2.5)), sigma2=1.0, b=1000.0, rate=1.0,
                p_max=1000.0, c=1.0, protocol=None, k=10, solver=None):
    """Compact builder for game instances; defaults mirror the shipped
    two-user low-interference setup."""
    return GameConfig(
        channel=ChannelMatrix(np.array(gains, dtype=float), sigma2),
        energy=EnergyModel(b=b, rate=rate, p_max=p_max),
        efficiency=ExpThreshold(c=c),
        protocol=protocol if protocol is not None else CarProtocol(q=0.5),
        queue=QueueParams(k),
        solver=solver if solver is not None else SolverParams(),
    )


def single_user_config(g=2.5, sigma2=1.0, b=1000.0, c=1.0, q=1.0, epsilon=1.0,
                       k=10, p_max=1000.0, rate=1.0):
    return make_config(gains=((g,),), sigma2=sigma2, b=b, rate=rate, p_max=p_max,
                       c=c, protocol=CarProtocol(q=q, epsilon=epsilon), k=k)


def random_instance(rng, protocol="car", n=2, tight_solver=False):
    """A well-conditioned random game: gains, noise, cost and traffic kept
    in ranges where the metric has real signal on [0, P_max]."""
    diag = rng.uniform(1.0, 4.0, size=n)
    off = rng.uniform(0.05, 1.0, size=(n, n))
    gains = off
    gains[np.eye(n, dtype=bool)] = diag
    sigma2 = rng.uniform(0.5, 2.0)
    b = rng.uniform(300.0, 3000.0)
    c = rng.uniform(0.5, 2.0)
    k = int(rng.choice([1, 2, 5, 10]))
    if protocol == "car":
        prot = CarProtocol(q=float(rng.uniform(0.25, 0.95)),
                           epsilon=float(rng.choice([1.0, 1.0, 0.2])))
    else:
        prot = AarProtocol(AarSpec(kappa=float(rng.uniform(0.05, 0.3))))
    solver = SolverParams(delta=1e-6 * 1000.0) if tight_solver else SolverParams()
    return make_config(gains=gains, sigma2=sigma2, b=b, c=c, protocol=prot, k=k,
                       solver=solver)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
