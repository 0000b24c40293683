"""Command-line surface: exit codes, artifact round-trips, refusal paths.

Everything runs in-process through cli.main(argv) so the exit codes and
emitted files can be asserted directly against tmp_path.
"""

import numpy as np
import pytest

from susyosc.cli import main, parse_z
from susyosc.errors import UsageError
from susyosc.serialize import canonical_json, load_json, load_system

_K1_FLAGS = ["--k", "1", "--eps-top", "-1.0", "--nu", "0.5"]
_K4_FLAGS = ["--k", "4", "--eps-top", "-2.8", "--nu", "-0.9"]


@pytest.fixture(scope="module")
def k1_doc(tmp_path_factory):
    path = tmp_path_factory.mktemp("docs") / "sys_k1.json"
    assert main(["build"] + _K1_FLAGS + ["--out", str(path)]) == 0
    return str(path)


def test_parse_z_forms():
    z = parse_z("1.5@-4.93")
    assert abs(z) == pytest.approx(1.5)
    assert parse_z("-0.3,0.5") == complex(-0.3, 0.5)
    assert parse_z("2.5") == complex(2.5, 0.0)
    with pytest.raises(UsageError):
        parse_z("nope@@1")


def test_build_round_trip(k1_doc):
    text = open(k1_doc).read()
    system, doc = load_system(k1_doc)
    # the canonical printer reproduces the file byte for byte
    assert canonical_json(doc) == text
    assert doc["kind"] == "susy_system"
    assert system.spec.k == 1
    assert doc["derived"]["e_gap"] == pytest.approx(1.5)


def test_corrupted_document_refused(k1_doc, tmp_path, capsys):
    doc = load_json(k1_doc)
    doc["checks"]["residual_max"] = 0.0
    bad = tmp_path / "tampered.json"
    bad.write_text(canonical_json(doc))
    assert main(["verify", "--system", str(bad)]) == 2
    assert "corrupted" in capsys.readouterr().err


def test_not_a_system_document(tmp_path, capsys):
    path = tmp_path / "junk.json"
    path.write_text('{"kind": "something_else"}\n')
    assert main(["painleve", "--system", str(path)]) == 2
    path.write_text("{broken")
    assert main(["painleve", "--system", str(path)]) == 2


def test_cs_reference_label(tmp_path):
    out = tmp_path / "cs.json"
    rc = main(["cs"] + _K4_FLAGS
              + ["--family", "lin-new", "--z", "1.5@-4.93", "--out", str(out)])
    assert rc == 0
    doc = load_json(str(out))
    assert doc["kind"] == "coherent_state"
    assert doc["n_levels"] == 4
    assert doc["probability_sum"] == pytest.approx(1.0, abs=1e-12)
    assert abs(doc["mean_energy"] - (-3.64945)) < 1e-4


def test_cs_density_artifact(tmp_path):
    out = tmp_path / "cs.json"
    dens = tmp_path / "density.csv"
    rc = main(["cs"] + _K1_FLAGS
              + ["--family", "lin-iso", "--z", "0.8@0.4",
                 "--out", str(out), "--density", str(dens)])
    assert rc == 0
    doc = load_json(str(out))
    assert doc["density_norm"] == pytest.approx(1.0, abs=1e-6)
    table = np.genfromtxt(str(dens), delimiter=",", names=True)
    assert table["density"].min() >= 0.0
    assert table["x"].size == 2101


def test_displacement_on_iso_ladder_refused(tmp_path, capsys):
    witness = tmp_path / "witness.csv"
    rc = main(["cs"] + _K4_FLAGS
              + ["--family", "docs-iso", "--z", "1.0",
                 "--witness-out", str(witness), "--out", str(tmp_path / "cs.json")])
    assert rc == 2
    assert "diverges" in capsys.readouterr().err
    table = np.genfromtxt(str(witness), delimiter=",", names=True)
    # the partial sums blow past any threshold within a few terms
    assert np.nanmax(table["partial_sum"]) > 1e30
    assert np.any(table["partial_sum"] > 1e6)


def test_annihilation_on_new_ladder_refused(tmp_path, capsys):
    witness = tmp_path / "powers.csv"
    rc = main(["cs"] + _K4_FLAGS
              + ["--family", "aocs-new", "--z", "0.5,0.5",
                 "--witness-out", str(witness), "--out", str(tmp_path / "cs.json")])
    assert rc == 2
    assert "nilpotent" in capsys.readouterr().err
    table = np.genfromtxt(str(witness), delimiter=",", names=True)
    assert table["frobenius_norm"].size == 4
    assert table["frobenius_norm"][-1] == 0.0
    assert table["frobenius_norm"][0] > 0.0


def test_unknown_family_rejected(tmp_path):
    rc = main(["cs"] + _K4_FLAGS
              + ["--family", "bogus", "--z", "1.0",
                 "--out", str(tmp_path / "cs.json")])
    assert rc == 2


def test_bad_label_rejected(tmp_path):
    rc = main(["cs"] + _K4_FLAGS
              + ["--family", "lin-iso", "--z", "what",
                 "--out", str(tmp_path / "cs.json")])
    assert rc == 2


def test_verify_all_suites(k1_doc, tmp_path, capsys):
    report = tmp_path / "report.json"
    rc = main(["verify", "--system", k1_doc, "--out", str(report)])
    out = capsys.readouterr().out
    assert rc == 0
    lines = [ln for ln in out.splitlines() if ln.startswith(("PASS", "FAIL"))]
    assert len(lines) == 36
    assert all(ln.startswith("PASS") for ln in lines)
    doc = load_json(str(report))
    assert doc["all_passed"] is True
    assert len(doc["checks"]) == len(lines)


def test_verify_suite_filter(k1_doc, capsys):
    rc = main(["verify", "--system", k1_doc, "--suite", "coherent"])
    out = capsys.readouterr().out
    assert rc == 0
    assert all(":" in ln and "coherent:" in ln
               for ln in out.splitlines() if ln.startswith("PASS"))
    assert main(["verify", "--system", k1_doc, "--suite", "nope"]) == 2


def test_painleve_summary(k1_doc, tmp_path):
    out = tmp_path / "piv.json"
    csv = tmp_path / "piv.csv"
    rc = main(["painleve", "--system", k1_doc, "--assign", "half",
               "--out", str(out), "--csv", str(csv)])
    assert rc == 0
    doc = load_json(str(out))
    assert doc["passed"] is True
    assert doc["residual_stats"]["max"] <= 1e-5
    assert doc["residual_stats"]["n_evaluated"] > 500
    table = np.genfromtxt(str(csv), delimiter=",", names=True)
    # masked points travel as nan in the CSV
    assert np.any(np.isnan(table["residual"]))
    assert np.nanmax(table["residual"]) <= 1e-5


def test_painleve_negative_control(k1_doc, tmp_path):
    rc = main(["painleve", "--system", k1_doc, "--perturb-a", "0.05",
               "--out", str(tmp_path / "piv.json")])
    assert rc == 1


def test_painleve_support_guard(k1_doc, tmp_path):
    rc = main(["painleve", "--system", k1_doc, "--min-fraction", "0.999",
               "--out", str(tmp_path / "piv.json")])
    assert rc == 3


def test_painleve_bad_assignment(k1_doc, tmp_path):
    rc = main(["painleve", "--system", k1_doc, "--assign", "top1",
               "--out", str(tmp_path / "piv.json")])
    assert rc == 2


def test_measure_table(tmp_path):
    out = tmp_path / "measures.csv"
    rc = main(["measure"] + _K1_FLAGS
              + ["--rmax", "3.0", "--npoints", "8", "--out", str(out)])
    assert rc == 0
    table = np.genfromtxt(str(out), delimiter=",", names=True)
    assert table.dtype.names == ("r", "f1", "f2", "f3")
    assert table["r"].size == 8
    for name in ("f1", "f2", "f3"):
        assert np.all(table[name] > 0.0)


def test_density_table(tmp_path):
    out = tmp_path / "density.csv"
    rc = main(["density"] + _K1_FLAGS
              + ["--measure", "mu2", "--rmax", "4.0", "--npoints", "6",
                 "--out", str(out)])
    assert rc == 0
    table = np.genfromtxt(str(out), delimiter=",", names=True)
    assert np.all(table["density"] > 0.0)


def test_radial_grid_validation(tmp_path):
    rc = main(["measure"] + _K1_FLAGS
              + ["--rmax", "-1.0", "--out", str(tmp_path / "m.csv")])
    assert rc == 2
    rc = main(["density"] + _K1_FLAGS
              + ["--measure", "mu1", "--npoints", "1",
                 "--out", str(tmp_path / "d.csv")])
    assert rc == 2
