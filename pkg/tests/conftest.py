import numpy as np
from hypothesis import settings
from hypothesis import strategies as st

settings.register_profile("default", deadline=None, max_examples=40, derandomize=True)
settings.load_profile("default")


def random_hpd(rng, n, lo=0.2, hi=3.0):
    """Random positive definite hermitian matrix with eigenvalues in [lo, hi]."""
    A = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    Q, _ = np.linalg.qr(A)
    lam = rng.uniform(lo, hi, n)
    H = (Q * lam) @ Q.conj().T
    return 0.5 * (H + H.conj().T)


seeds = st.integers(min_value=0, max_value=2 ** 32 - 1)
dims = st.integers(min_value=1, max_value=4)


# one summary line per acceptance criterion, printed at the end of the run
ACCEPTANCE: dict = {}


def record(criterion: int, title: str, passed: bool, detail: str = "") -> None:
    ACCEPTANCE[criterion] = (title, bool(passed), detail)
    print(f"criterion {criterion} [{'PASS' if passed else 'FAIL'}] {title}: {detail}")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        title, passed, detail = ACCEPTANCE[k]
        terminalreporter.write_line(
            f"criterion {k}: {'PASS' if passed else 'FAIL'} - {title} ({detail})")
