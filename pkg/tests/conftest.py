import numpy as np
import pytest

from chlab.evolution import ModelSpec, SolverConfig, integrate
from chlab.spectral_core import DomainSpec, SpectralField

CRITERIA_LINES: dict = {}


def record_criterion(number: int, title: str, checks: dict):
    """Store a one-line verdict for the terminal summary and return it."""
    ok = all(bool(v[0]) for v in checks.values())
    detail = "; ".join(f"{name}: {'ok' if passed else 'FAIL'} ({info})"
                       for name, (passed, info) in checks.items())
    line = f"criterion {number:2d} {'PASS' if ok else 'FAIL'}  {title} | {detail}"
    CRITERIA_LINES[number] = line
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(CRITERIA_LINES):
        terminalreporter.write_line(CRITERIA_LINES[n])


# Reference odd runs u0 = -A sin x on the torus.  The b-family is invariant
# under u -> lam u(lam t, x), so A only sets where the slope cap 1e3 sits
# relative to the initial slope; A is chosen so that the cap is reached while
# the spectrum is still resolved at N = 4096.
REFERENCE_AMPLITUDE = {2.0: 50.0, 3.0: 50.0, 1.5: 150.0}


def sine_seed(N: int, amplitude: float) -> SpectralField:
    return SpectralField.from_function(DomainSpec.torus(N), lambda x: -amplitude * np.sin(x))


def reference_run(b: float, N: int = 4096, cfl: float = 0.5, dense: bool = False):
    A = REFERENCE_AMPLITUDE[b]
    model = ModelSpec("b-family", b)
    bound = model.blowup_bound(-A)
    interval = 2e-4 / A if dense else bound / 400
    solver = SolverConfig(cfl_safety=cfl, sample_interval=interval, horizon=1.05 * bound)
    traj, rep = integrate(sine_seed(N, A), model, solver)
    return model, traj, rep


@pytest.fixture(scope="session")
def ch_run():
    return reference_run(2.0, dense=True)


@pytest.fixture(scope="session")
def ch_run_refined():
    return reference_run(2.0, N=8192, cfl=0.25)


@pytest.fixture(scope="session")
def dp_run():
    return reference_run(3.0)


@pytest.fixture(scope="session")
def b15_run():
    return reference_run(1.5)
