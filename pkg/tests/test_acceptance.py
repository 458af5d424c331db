"""The eleven acceptance criteria at their stated tolerances.

Each criterion runs one or more experiments from :mod:`scatterlab.checks`
(the same code the command-line tool runs) and prints a single PASS/FAIL
line.  Run directly with ``python tests/test_acceptance.py`` for the lines
alone, or under pytest, where they are repeated in the terminal summary.
"""

import sys
import time

import pytest

from scatterlab import checks

CRITERIA = [
    (1, "admissibility constant", lambda: [checks.admissibility(4096, 8)]),
    (2, "unitarity and energy conservation", lambda: [
        checks.filter_unitarity(4096, 8, True),
        checks.energy_conservation(1024, 6, signals=20),
    ]),
    (3, "frequency-decreasing concentration", lambda: [checks.frequency_decreasing_capture()]),
    (4, "nonexpansiveness and monotonicity", lambda: [checks.nonexpansive(pairs=50)]),
    (5, "translation invariance decay", lambda: [checks.translation(c=1.5, signals=3)]),
    (6, "Gabor deformation benchmark", lambda: [checks.gabor_deformation(s=-0.1)]),
    (7, "first-order Taylor improvement", lambda: [checks.taylor(J=6, c=0.5)]),
    (8, "measure and band equivalence", lambda: [checks.measure_map(triples=1000)]),
    (9, "stochastic suite", lambda: [
        checks.stochastic_energy(m_max=4),
        checks.consistency("white"),
        checks.consistency("ma"),
        checks.spectrum_compare(),
    ]),
    (10, "random deformations", lambda: [checks.random_deformation(amplitudes=(0.02, 0.05, 0.1))]),
    (11, "rotation scattering", lambda: [checks.rotation()]),
]


def evaluate(number, title, run):
    start = time.time()
    results = run()
    failed = [c for r in results for c in r.checks if not c.passed]
    status = "PASS" if not failed else "FAIL"
    detail = "; ".join(f"{c.name}={c.value:.4g} ({c.target})" for c in failed)
    line = f"{status} criterion {number:2d}: {title} [{time.time() - start:.1f}s]"
    if detail:
        line += f"  failing: {detail}"
    return not failed, line, results


@pytest.mark.parametrize("number,title,run", CRITERIA, ids=[f"criterion{n:02d}" for n, _, _ in CRITERIA])
def test_criterion(number, title, run, acceptance_log):
    ok, line, results = evaluate(number, title, run)
    print(line)
    for r in results:
        for c in r.checks:
            print("   ", c.line())
    acceptance_log.append(line)
    assert ok, line


if __name__ == "__main__":
    outcomes = []
    for number, title, run in CRITERIA:
        ok, line, _ = evaluate(number, title, run)
        print(line, flush=True)
        outcomes.append(ok)
    sys.exit(0 if all(outcomes) else 1)
