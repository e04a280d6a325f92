import json

from tractdim.tractgeom import RadiusConfig
from tractdim.verify import ALL_CHECKS, run_verify

from conftest import bundled_constants


def test_all_checks_pass_on_bundled_constants():
    consts = bundled_constants(1.0)
    cfg = RadiusConfig.from_constants(consts)
    rep = run_verify(consts, cfg, seed=0)
    assert rep["all_pass"]
    assert len(rep["checks"]) == len(ALL_CHECKS)
    names = {c["name"] for c in rep["checks"]}
    assert names == {
        "coordinate-round-trip",
        "cylinder-derivative-fd",
        "koebe-distortion",
        "factor-two-bounds",
        "operator-comparison",
        "divergence-boundary",
        "transfer-decay",
    }


def test_report_is_json_serializable_and_reproducible():
    consts = bundled_constants(1.0)
    cfg = RadiusConfig.from_constants(consts)
    a = json.dumps(run_verify(consts, cfg, seed=3), sort_keys=True)
    b = json.dumps(run_verify(consts, cfg, seed=3), sort_keys=True)
    assert a == b
    assert "time" not in a
