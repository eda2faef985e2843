"""
Shared pytest fixtures for qsiset tests.

This module provides fixtures for:
- Temporary data directories
- Preset and hand-built bound models for every family
- Brute-force oracles over explicit boxes
"""

import itertools
import math
import os
import shutil
import sys
import tempfile

import pytest

# Add the application directory to path for imports
sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..'))


@pytest.fixture(scope='session')
def temp_data_dir():
    """Create a temporary directory for test output that persists across tests."""
    temp_dir = tempfile.mkdtemp(prefix='qsiset_test_')
    yield temp_dir
    shutil.rmtree(temp_dir, ignore_errors=True)


@pytest.fixture(autouse=True)
def isolate_data_dir(temp_data_dir, monkeypatch):
    """Point DATA_DIR at the temp directory for every test."""
    monkeypatch.setenv('DATA_DIR', temp_data_dir)


# ---------------------------------------------------------------------------
# Models
# ---------------------------------------------------------------------------

def make_weighted(lam, name=''):
    from services.bounds import BoundModel
    return BoundModel.from_dict({'dimension': len(lam), 'family': 'WeightedLinear', 'lambda': list(lam), 'name': name})


def make_sup_affine(terms, name=''):
    """terms: list of (offset, weights)."""
    from services.bounds import BoundModel
    return BoundModel.from_dict({
        'dimension': len(terms[0][1]),
        'family': 'SupAffine',
        'affine_terms': [{'offset': off, 'weights': list(w)} for off, w in terms],
        'name': name,
    })


def make_legendre(lam, name=''):
    from services.bounds import BoundModel
    return BoundModel.from_dict({'dimension': len(lam), 'family': 'LegendreSqrt', 'lambda': list(lam), 'name': name})


def make_factorial(alpha, name=''):
    from services.bounds import BoundModel
    return BoundModel.from_dict({'dimension': len(alpha), 'family': 'FactorialAlpha', 'alpha': list(alpha), 'name': name})


@pytest.fixture
def p2_model():
    """Preset P2: b(nu) = nu_1 + nu_2 + 2 nu_3 + 4 nu_4."""
    from services.presets import load_preset
    return load_preset('P2')


@pytest.fixture
def p1_model():
    from services.presets import load_preset
    return load_preset('P1')


@pytest.fixture
def family_models():
    """One small model per family, N <= 3."""
    return {
        'WeightedLinear': make_weighted([1.0, 1.5], name='wl'),
        'SupAffine': make_sup_affine([(0.5, (1.0, 2.0)), (0.0, (1.5, 1.0))], name='sa'),
        'LegendreSqrt': make_legendre([0.5, 1.0], name='ls'),
        'FactorialAlpha': make_factorial([0.3, 0.4], name='fa'),
    }


# ---------------------------------------------------------------------------
# Oracles
# ---------------------------------------------------------------------------

def brute_force_points(model, radius):
    """(nu, b) for every nu in [0, radius]^N."""
    from services.bounds import eval_b
    points = []
    for nu in itertools.product(range(radius + 1), repeat=model.dimension):
        points.append((nu, eval_b(model, nu)))
    return points


def brute_force_superlevel(model, tau, radius):
    return sorted(nu for nu, b in brute_force_points(model, radius) if b <= tau + 1e-12)


def brute_force_tail(model, M, radius):
    """sum of e^{-b} over the box minus the M largest terms."""
    values = sorted(b for _, b in brute_force_points(model, radius))
    return math.fsum(math.exp(-b) for b in values[M:])


def p2_level_counts():
    """#{nu : b(nu) = v} for P2 at v = 0..5."""
    return [1, 2, 4, 6, 10, 14]


def p2_total():
    e = math.exp
    return 1.0 / ((1 - e(-1)) ** 2 * (1 - e(-2)) * (1 - e(-4)))
