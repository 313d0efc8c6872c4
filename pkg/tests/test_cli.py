import hashlib
import json

from conftest import validate_schema
from skewdyn.cli import main, parse_complex, parse_poly


def load(outdir, name):
    with open(outdir / name) as fh:
        return json.load(fh)


def check_manifest(outdir):
    mani = load(outdir, "manifest.json")
    validate_schema(mani, "manifest")
    for art in mani["artifacts"]:
        data = (outdir / art["path"]).read_bytes()
        assert hashlib.sha256(data).hexdigest() == art["sha256"]
        assert len(data) == art["bytes"]
    return mani


def test_parse_complex():
    assert parse_complex("-1.25") == -1.25
    assert parse_complex("0.5+2i") == 0.5 + 2j
    assert parse_complex("1j") == 1j


def test_parse_poly():
    import numpy as np

    p = parse_poly("w^2-1")
    assert np.array_equal(p.coeffs, np.array([-1.0, 0.0, 1.0]))
    q = parse_poly("0,0,1")
    assert np.array_equal(q.coeffs, np.array([0.0, 0.0, 1.0]))


def test_certify_product(tmp_path):
    out = tmp_path / "c"
    rc = main(["certify", "--family", "product", "--p", "0,0,1",
               "--q=-1,0,1", "--n-base", "300", "--n-j2", "3000",
               "--out", str(out)])
    assert rc == 0
    rep = load(out, "certify.json")
    validate_schema(rep, "certification")
    assert rep["verdict"] == "Certified-P2"
    check_manifest(out)


def test_certify_strict_failure_exit_code(tmp_path):
    out = tmp_path / "cf"
    rc = main(["certify", "--family", "Fa", "--a", "1i", "--strict",
               "--n-base", "300", "--n-j2", "3000", "--out", str(out)])
    assert rc == 4
    rep = load(out, "certify.json")
    assert rep["verdict"].startswith("Failed")


def test_precondition_exit_code(tmp_path):
    # continuation only supports the twisted quadratic family
    rc = main(["continue", "--family", "fig3",
               "--out", str(tmp_path / "x")])
    assert rc == 2


def test_unknown_lemma_exit_code(tmp_path):
    rc = main(["verify-lemma", "no-such-check", "--out", str(tmp_path / "x")])
    assert rc == 2


def test_saddles_json(tmp_path):
    out = tmp_path / "s"
    rc = main(["saddles", "--family", "Fa", "--a=-1",
               "--max-period", "2", "--out", str(out)])
    assert rc == 0
    rep = load(out, "saddles.json")
    validate_schema(rep, "saddles")
    assert rep["count"] == len(rep["orbits"]) > 0
    check_manifest(out)


def test_chain_json(tmp_path):
    out = tmp_path / "ch"
    rc = main(["chain", "--family", "Fa", "--a", "2", "--n-base", "150",
               "--out", str(out)])
    assert rc == 0
    rep = load(out, "chain.json")
    validate_schema(rep, "chain")
    assert rep["regime"] == "AllEmpty"
    check_manifest(out)


def test_verify_lemma_alias_and_strict(tmp_path):
    out = tmp_path / "l"
    rc = main(["verify-lemma", "6.9", "--n", "3", "--strict",
               "--out", str(out)])
    assert rc == 0
    rep = load(out, "lemma.json")
    validate_schema(rep, "lemma")
    assert rep["id"] == "box-self-map" and rep["pass"]
    check_manifest(out)


def test_continue_trace(tmp_path):
    out = tmp_path / "t"
    rc = main(["continue", "--family", "Fa", "--from=-1", "--to=-0.95", "--steps", "6", "--base-period", "1",
               "--out", str(out)])
    assert rc == 0
    rep = load(out, "continue.json")
    validate_schema(rep, "continuation")
    assert rep["outcome"] == "Completed"
    lines = (out / "trace.csv").read_text().strip().splitlines()
    assert lines[0].startswith("lambda_re,lambda_im,")
    assert len(lines) == 1 + rep["steps"]
    check_manifest(out)


def test_render_images(tmp_path):
    out = tmp_path / "r"
    rc = main(["render", "--family", "fig3", "--resolution", "64",
               "--fiber-at", "5,-4", "--threads", "2", "--out", str(out)])
    assert rc == 0
    pgm = (out / "base.pgm").read_bytes()
    assert pgm.startswith(b"P5\n64 64\n255\n")
    for name in ("fiber_00.ppm", "fiber_01.ppm"):
        ppm = (out / name).read_bytes()
        assert ppm.startswith(b"P6\n64 64\n255\n")
    rep = load(out, "render.json")
    validate_schema(rep, "render")
    check_manifest(out)


def test_separate_report(tmp_path):
    out = tmp_path / "sep"
    rc = main(["separate", "--family", "Fa", "--a=-1", "--q=-1,0,1",
               "--steps-around", "128", "--n-cloud", "300",
               "--out", str(out)])
    assert rc == 0
    rep = load(out, "separate.json")
    validate_schema(rep, "separation")
    assert rep["A"] == 2 and rep["B"] == 1
    assert rep["verdict"] == "Separated"
    check_manifest(out)


def test_hausdorff_rotation(tmp_path):
    out = tmp_path / "h"
    rc = main(["hausdorff", "--family", "Fa", "--a=-1", "--theta", "1.0",
               "--n-samples", "2000", "--out", str(out)])
    assert rc == 0
    rep = load(out, "hausdorff.json")
    validate_schema(rep, "hausdorff")
    assert rep["rows"][0]["hausdorff"] < 0.1
    check_manifest(out)


def test_config_file_defaults_and_flag_override(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("family = Fa\na = 2\nn-base = 120\n# comment\n")
    out1 = tmp_path / "o1"
    rc = main(["chain", "--config", str(cfg), "--out", str(out1)])
    assert rc == 0
    mani = check_manifest(out1)
    assert mani["config"]["a"] == "2"
    assert mani["config"]["n_base"] == "120"
    # a flag overrides the config value
    out2 = tmp_path / "o2"
    rc = main(["chain", "--config", str(cfg), "--n-base", "150",
               "--out", str(out2)])
    assert rc == 0
    mani2 = check_manifest(out2)
    assert mani2["config"]["n_base"] == "150"


def test_rerun_is_byte_identical(tmp_path):
    args = ["chain", "--family", "Fa", "--a=-1", "--n-base", "120",
            "--seed", "3"]
    out1, out2 = tmp_path / "d1", tmp_path / "d2"
    assert main(args + ["--out", str(out1)]) == 0
    assert main(args + ["--out", str(out2)]) == 0
    for name in ("chain.json", "apt.csv", "acc.csv", "j2.csv"):
        assert (out1 / name).read_bytes() == (out2 / name).read_bytes()
