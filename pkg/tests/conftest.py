import numpy as np
import pytest

from zskreg.data import SideInfoTable, ZeroShotDataset
from zskreg.svr import SvrConfig


@pytest.fixture
def toy_dataset() -> ZeroShotDataset:
    """Two targets (s = 0 and s = 2), instances x in {0, 2} each, and
    labels from y = (s+1)*x + (s+1): (1, 3) and (3, 9)."""
    side = SideInfoTable([("low", [0.0]), ("high", [2.0])])
    return ZeroShotDataset(
        features=np.array([[0.0], [2.0], [0.0], [2.0]]),
        target_ids=["low", "low", "high", "high"],
        labels=np.array([1.0, 3.0, 3.0, 9.0]),
        side_info=side,
        name="toy",
    )


@pytest.fixture
def toy_precise_cfg() -> SvrConfig:
    """Near-interpolation config for the 4-point toy fits."""
    return SvrConfig(c=1e6, epsilon=0.01, tol=1e-6, max_passes=5_000_000)


def random_dataset(
    rng: np.random.Generator,
    m_targets: int = 4,
    rows_per_target: int = 6,
    a_x: int = 3,
    a_s: int = 2,
    name: str = "random",
) -> ZeroShotDataset:
    """Small random-but-valid dataset for property tests."""
    side = SideInfoTable(
        [(f"g{i}", rng.uniform(-2, 2, size=a_s)) for i in range(m_targets)]
    )
    n = m_targets * rows_per_target
    feats = rng.uniform(-2, 2, size=(n, a_x))
    labels = rng.normal(size=n)
    ids = [f"g{i // rows_per_target}" for i in range(n)]
    return ZeroShotDataset(feats, ids, labels, side, name=name)
