"""
Tests for packaging and test-config hygiene.

Ensures pytest config stays single-source and that the setuptools manifest
ships the udpx package with its console script.
"""

import re
from pathlib import Path

# Project root (parent of tests/)
PROJECT_ROOT = Path(__file__).resolve().parent.parent.parent


class TestPytestConfig:
    """Pytest config should be single-source."""

    def test_pyproject_has_no_pytest_section(self):
        """pytest.ini is the only pytest config."""
        pyproject = (PROJECT_ROOT / "pyproject.toml").read_text()
        assert "[tool.pytest.ini_options]" not in pyproject

    def test_pytest_ini_declares_markers(self):
        pytest_ini = (PROJECT_ROOT / "pytest.ini").read_text()
        for marker in ("unit", "integration", "slow"):
            assert f"{marker}:" in pytest_ini


class TestSetuptoolsPackageManifest:
    """Single installable package: setuptools must include udpx* only."""

    def test_single_package_in_setuptools_include(self):
        """pyproject must ship only udpx (include = ['udpx*'])."""
        pyproject = (PROJECT_ROOT / "pyproject.toml").read_text()
        match = re.search(
            r"\[tool\.setuptools\.packages\.find\].*?include\s*=\s*\[(.*?)\]", pyproject, re.DOTALL
        )
        assert match, "pyproject.toml should have [tool.setuptools.packages.find] include = [...]"
        include_entries = [
            s.strip().strip('"').strip("'") for s in re.split(r",\s*", match.group(1)) if s.strip()
        ]
        assert include_entries == ["udpx*"]
        assert (PROJECT_ROOT / "udpx" / "__init__.py").exists()

    def test_console_script_points_at_cli(self):
        pyproject = (PROJECT_ROOT / "pyproject.toml").read_text()
        assert 'udpx = "udpx.cli.app:main_entry"' in pyproject

    def test_every_package_directory_has_init(self):
        """Subpackages are regular packages so the wheel contains them."""
        for directory in (PROJECT_ROOT / "udpx").rglob("*"):
            if directory.is_dir() and directory.name != "__pycache__":
                assert (directory / "__init__.py").exists(), f"{directory} lacks __init__.py"
