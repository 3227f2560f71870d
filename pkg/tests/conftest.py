import numpy as np

from cluster_guard.certificate import check_conditions
from cluster_guard.model import Dataset, Partition, WeightMatrix


def clustered_1d(rng, n_min=3, n_max=8, k_max=3):
    """Random 1-D data drawn around well-separated centres, with its true partition.

    Retries until the recovery certificate admits some gamma for that partition.
    """
    while True:
        n = int(rng.integers(n_min, n_max + 1))
        k = int(rng.integers(1, min(k_max, n) + 1))
        labels = np.concatenate([np.arange(k), rng.integers(0, k, size=n - k)])
        rng.shuffle(labels)
        centres = np.cumsum(rng.uniform(6.0, 15.0, size=k))
        x = centres[labels] + rng.uniform(-1.0, 1.0, size=n)
        data, part = Dataset(x), Partition.from_labels(labels)
        W = WeightMatrix.uniform(n)
        cert = check_conditions(data, W, part)
        if cert.admissible is not None and np.isfinite(cert.gamma_max):
            return data, W, part, cert


def dense_flip_magnitude(data, weights, config, coord, target, t_max, step=1e-3):
    """Smallest |t| (to ``step``) with delta >= target after adding t to one entry.

    Scans a 50x coarser grid first, then the fine grid just below the first hit.
    """
    from cluster_guard.delta import delta
    from cluster_guard.solver import solve

    ref = solve(data, weights, config).partition

    def hits(t):
        for s in (-t, t):
            vals = data.values.copy()
            vals[coord] += s
            if delta(ref, solve(Dataset(vals), weights, config).partition) >= target:
                return True
        return False

    coarse = 50 * step
    for t in np.arange(0.0, t_max + coarse, coarse):
        if hits(t):
            for u in np.arange(max(t - coarse, 0.0), t + step / 2, step):
                if hits(u):
                    return float(u)
    return float("inf")


_CRITERIA: list[tuple[str, str, str]] = []


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.outcome != "passed"):
        return
    name = report.nodeid.rsplit("::", 1)[-1]
    if not name.startswith("test_criterion_"):
        return
    label = name[len("test_criterion_") :].split("_", 1)[0]
    _CRITERIA.append((label, "PASS" if report.passed else "FAIL", name))


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for label, status, name in _CRITERIA:
        terminalreporter.write_line(f"{status}  criterion {label:<4} {name}")
