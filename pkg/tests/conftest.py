import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))


@pytest.fixture
def rng():
    return np.random.default_rng(20190101)


def write_drive_tree(root, n=3, size=96, with_truth=True, image_ext=".png", mask_ext=".gif"):
    """DRIVE-style tree (images/, mask/, 1st_manual/) filled with phantoms."""
    from PIL import Image

    from vesselseg.image import to_uint8
    from vesselseg.synthetic import make_phantom

    phantoms = {}
    for d in ("images", "mask", "1st_manual"):
        (root / d).mkdir(parents=True, exist_ok=True)
    for i in range(1, n + 1):
        cid = f"{i:02d}"
        ph = make_phantom(size=size, seed=i, n_vessels=6)
        phantoms[cid] = ph
        Image.fromarray(to_uint8(ph.rgb)).save(root / "images" / f"{cid}_test{image_ext}")
        Image.fromarray(ph.fov.astype(np.uint8) * 255).save(root / "mask" / f"{cid}_test_mask{mask_ext}")
        if with_truth:
            Image.fromarray(ph.truth.astype(np.uint8) * 255).save(root / "1st_manual" / f"{cid}_manual1{mask_ext}")
    return phantoms


@pytest.fixture
def drive_tree(tmp_path):
    root = tmp_path / "DRIVE" / "test"
    phantoms = write_drive_tree(root)
    return root, phantoms


# one summary line per acceptance criterion
_ACCEPTANCE: dict[str, list[str]] = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    if rep.when == "call" or (rep.when == "setup" and not rep.passed):
        status = "PASS" if rep.passed else "SKIP" if rep.skipped else "FAIL"
        _ACCEPTANCE.setdefault(marker.args[0], []).append(status)


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(label): acceptance criterion this test checks")


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for label in sorted(_ACCEPTANCE):
        statuses = _ACCEPTANCE[label]
        verdict = "FAIL" if "FAIL" in statuses else "PASS" if "PASS" in statuses else "SKIP"
        terminalreporter.write_line(f"{verdict:4}  {label}")
