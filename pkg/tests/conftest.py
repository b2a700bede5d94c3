import numpy as np
import pytest

from dcmm.model import DcmmParams


def random_params(rng, n, k, mixed_cap=0.8, theta_range=(0.2, 0.9)):
    """Valid parameters with one block of pure nodes per community.

    Mixed rows are Dirichlet draws with every entry below ``mixed_cap`` so
    they stay clear of the vertices.
    """
    n_pure = max(1, n // 10)
    pi = np.zeros((n, k))
    for c in range(k):
        pi[c * n_pure:(c + 1) * n_pure, c] = 1.0
    start = k * n_pure
    rows = []
    while len(rows) < n - start:
        w = rng.dirichlet(np.ones(k))
        if w.max() <= mixed_cap:
            rows.append(w)
    pi[start:] = rows
    while True:
        off = rng.uniform(0.1, 0.6, size=(k, k))
        p = np.triu(off, 1)
        p = p + p.T + np.eye(k)
        if np.linalg.svd(p, compute_uv=False).min() > 0.1:
            break
    theta = rng.uniform(*theta_range, size=n)
    return DcmmParams(theta=theta, pi=pi, p=p)


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


def tree_digest(root) -> dict:
    """sha256 of every file under ``root``, keyed by relative path."""
    import hashlib
    import os

    out = {}
    for dirpath, _, files in os.walk(root):
        for name in files:
            path = os.path.join(dirpath, name)
            with open(path, "rb") as fh:
                out[os.path.relpath(path, root)] = hashlib.sha256(fh.read()).hexdigest()
    return out


def cli_scenarios(workdir):
    """One small invocation per subcommand, with any input files they need."""
    import os

    from dcmm.io import write_adjacency_csv, write_params
    from dcmm.model import build_h, experiment_params, sample_adjacency

    params = experiment_params(60, 7)
    ppath = os.path.join(workdir, "params.txt")
    write_params(params, ppath)
    gpath = os.path.join(workdir, "graph.csv")
    dense = DcmmParams(theta=np.full(60, 0.9), pi=params.pi, p=np.array([[1.0, 0.2], [0.2, 1.0]]))
    write_adjacency_csv(sample_adjacency(build_h(dense), 3), gpath)
    cfg = os.path.join(workdir, "e.cfg")
    with open(cfg, "w") as fh:
        fh.write("n_list = [300, 400]\nreplicates = 2\nvertex_hunter = spa\ntheta_n = [200]\n")
    return {
        "generate": ["generate", "--n", "50"],
        "sample": ["sample", "--params", ppath],
        "estimate": ["estimate", "--input", gpath, "--k", "2", "--vertex-hunter", "spa"],
        "experiment-p": ["experiment-p", "--config", cfg, "--seed", "7"],
        "experiment-theta": ["experiment-theta", "--config", cfg, "--replicates", "2"],
        "lowerbound-verify": ["lowerbound-verify", "--n-list", "100", "200"],
    }


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import VERDICTS
    except ImportError:
        return
    if VERDICTS:
        terminalreporter.section("acceptance criteria")
        for num in sorted(VERDICTS):
            terminalreporter.write_line(VERDICTS[num])
