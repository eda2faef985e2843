"""
Tests for presets module.

Tests the services/presets.py module including:
- Listing and loading the shipped presets
- Resolving a model from a preset name or a file path
"""

import json
import os
from fractions import Fraction

import pytest


class TestPresets:
    """Tests for the shipped preset models"""

    def test_list_presets(self):
        """Test that the six presets are shipped"""
        from services.presets import list_presets

        assert list_presets() == ['P1', 'P2', 'P3', 'P4', 'P5', 'P6']

    def test_name_variants(self):
        """Test that P.2, p2 and P2 load the same model"""
        from services.presets import load_preset

        assert load_preset('P.2') == load_preset('p2') == load_preset('P2')

    def test_unknown_preset(self):
        """Test that an unknown name raises ArgumentError"""
        from services.presets import load_preset
        from utils.errors import ArgumentError

        with pytest.raises(ArgumentError):
            load_preset('P9')

    def test_every_preset_is_rational_homogeneous(self):
        """Test that all presets admit Ehrhart fitting"""
        from services.presets import list_presets, load_preset

        for name in list_presets():
            model = load_preset(name)
            assert model.is_rational_homogeneous, name
            assert model.model_id == name

    def test_skinny_simplex_volume(self):
        """Test that P4 has volume 2^12 / 8!"""
        from services.polytope import volume
        from services.presets import load_preset

        result = volume(load_preset('P4'))
        assert result.exact_volume == Fraction(4096, 40320)

    def test_p6_is_integral(self):
        """Test that the P6 polytope has integer vertices"""
        from services.polytope import period_heuristic
        from services.presets import load_preset

        assert period_heuristic(load_preset('P6')) == 1


class TestResolveModel:
    """Tests for resolve_model"""

    def test_resolve_preset(self):
        """Test resolving a preset by name"""
        from services.presets import resolve_model

        assert resolve_model('P3').dimension == 8

    def test_resolve_file(self, temp_data_dir):
        """Test resolving a JSON model file"""
        from services.presets import resolve_model

        path = os.path.join(temp_data_dir, 'legendre.json')
        with open(path, 'w') as f:
            json.dump({'dimension': 2, 'family': 'LegendreSqrt', 'lambda': [0.8, 1.2],
                       'description': 'ignored'}, f)
        model = resolve_model(path)
        assert model.family == 'LegendreSqrt'
        assert model.lam == (0.8, 1.2)

    def test_resolve_empty(self):
        """Test that an empty reference is rejected"""
        from services.presets import resolve_model
        from utils.errors import ArgumentError

        with pytest.raises(ArgumentError):
            resolve_model('')
