import numpy as np
import pytest

from wiretap_regions.cli import main
from wiretap_regions.errors import ParseError, ValidationError
from wiretap_regions.info_core import ChannelSpec, build_degraded_joint
from wiretap_regions.io_files import (
    emit_channel_file,
    parse_aux_file,
    parse_channel_file,
    parse_dag_file,
    parse_split_file,
    region_csv_text,
)
from wiretap_regions.polytope_fm import IneqSystem, LinIneq, VPolytope, vertices
from wiretap_regions.regions_gaussian import GaussChannel, HGaussChannel


DISCRETE = """\
kind: discrete
input: X 2
outputs: Y1 2 Y2 2 Z 2
stage Y1|X:
1 0
0 1
stage Y2|Y1:
1 0
0 1
stage Z|Y2:
1 0
0 1
"""

GAUSS = """\
kind: gauss
S:
1
Sigma1:
0.5
Sigma2:
1
SigmaZ:
2
"""

AUX = """\
kind: aux
vars: U 2 X 2
table:
0.5 0
0 0.5
"""


def write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def test_parse_discrete_identity(tmp_path):
    ch = parse_channel_file(write(tmp_path, "c.txt", DISCRETE))
    assert isinstance(ch, ChannelSpec)
    assert ch.degraded_flag is True
    assert ch.input.cardinality == 2


def test_parse_gauss_scalar_fixture(tmp_path):
    ch = parse_channel_file(write(tmp_path, "g.txt", GAUSS))
    assert isinstance(ch, GaussChannel)
    assert ch.S[0, 0] == 1.0 and ch.SigmaZ[0, 0] == 2.0


def test_parse_indefinite_sigma_rejected(tmp_path):
    bad = GAUSS.replace("Sigma1:\n0.5", "Sigma1:\n1 2\n2 1").replace(
        "S:\n1", "S:\n1 0\n0 1").replace("Sigma2:\n1", "Sigma2:\n1 0\n0 1").replace(
        "SigmaZ:\n2", "SigmaZ:\n2 0\n0 2")
    with pytest.raises(ValidationError, match="NonPSD"):
        parse_channel_file(write(tmp_path, "bad.txt", bad))


def test_parse_error_carries_line(tmp_path):
    with pytest.raises(ParseError, match="line"):
        parse_channel_file(write(tmp_path, "b.txt", "kind: discrete\no_ops\n"))


def test_round_trip_channels(tmp_path):
    rng = np.random.default_rng(40)
    ch = build_degraded_joint(rng.dirichlet(np.ones(2), size=3),
                              rng.dirichlet(np.ones(3), size=2),
                              rng.dirichlet(np.ones(2), size=3))
    path = tmp_path / "rt.txt"
    emit_channel_file(ch, path)
    back = parse_channel_file(path)
    for a, b in zip(ch.stages, back.stages):
        assert np.array_equal(a, b)  # bit exact

    g = GaussChannel(S=np.array([[1.3, 0.2], [0.2, 0.9]]), Sigma1=np.eye(2) * 0.4,
                     Sigma2=np.eye(2) * 0.8, SigmaZ=np.eye(2) * 1.7)
    emit_channel_file(g, path)
    gb = parse_channel_file(path)
    assert np.array_equal(g.S, gb.S) and np.array_equal(g.SigmaZ, gb.SigmaZ)

    h = HGaussChannel(np.array([[1.0, 0.0]]), np.array([[0.5, 0.0]]),
                      np.array([[0.25, 0.0]]))
    emit_channel_file(h, path)
    hb = parse_channel_file(path)
    assert np.array_equal(h.H2, hb.H2)


def test_parse_aux_and_split(tmp_path):
    aux = parse_aux_file(write(tmp_path, "a.txt", AUX))
    assert aux.kind == "ux"
    split = parse_split_file(write(tmp_path, "s.txt", "kind: split\nK:\n0.5\n"))
    assert split.K[0, 0] == 0.5
    triple = parse_split_file(write(tmp_path, "t.txt",
                                    "kind: split\nK0:\n0.1\nK1:\n0.2\nK2:\n0.3\n"))
    assert triple.K2[0, 0] == 0.3


def test_parse_dag_file(tmp_path):
    text = "kind: dag\nnode: U\nnode: X U\nnode: Y1 X\nnode: Y2 Y1\nnode: Z Y2\n"
    st = parse_dag_file(write(tmp_path, "d.txt", text))
    assert st.parents["Z"] == ("Y2",)


def test_csv_unit_square_vertices():
    sq = IneqSystem.of(("x", "y"), [LinIneq.of({"x": 1}, 1.0), LinIneq.of({"y": 1}, 1.0)])
    text = region_csv_text(vertices(sq))
    rows = [l for l in text.splitlines() if l.startswith("vertex")]
    assert len(rows) == 4


def test_csv_constraint_rows():
    from wiretap_regions.regions_gaussian import CovSplit, eval_gauss_inner
    ch = GaussChannel(S=np.eye(1), Sigma1=0.5 * np.eye(1), Sigma2=np.eye(1),
                      SigmaZ=2 * np.eye(1))
    sys = eval_gauss_inner(CovSplit(K=0.5 * np.eye(1)), ch)
    text = region_csv_text(sys)
    rows = [l for l in text.splitlines() if l.startswith("constraint")]
    assert len(rows) == 5  # nonnegativity is ambient, bounds are explicit


def test_csv_empty_polytope_note():
    empty = VPolytope(("x", "y"), np.empty((0, 2)))
    text = region_csv_text(empty)
    assert "EMPTY" in text


def test_cli_round_trip_determinism(tmp_path):
    ch = write(tmp_path, "c.txt", DISCRETE)
    out1, out2 = tmp_path / "a.csv", tmp_path / "b.csv"
    rc1 = main(["region", "sweep", "--channel", ch, "--budget", "5", "--seed", "3",
                "--out", str(out1)])
    rc2 = main(["region", "sweep", "--channel", ch, "--budget", "5", "--seed", "3",
                "--out", str(out2)])
    assert rc1 == rc2 == 0
    assert out1.read_bytes() == out2.read_bytes()


def test_cli_exit_codes(tmp_path, capsys):
    assert main(["region", "sweep", "--channel", str(tmp_path / "missing.txt"),
                 "--budget", "2"]) == 2
    gauss = write(tmp_path, "g.txt", GAUSS)
    split = write(tmp_path, "s.txt", "kind: split\nK:\n0.5\n")
    assert main(["gauss", "eval", "--channel", gauss, "--split", split]) == 0
    # a property violation: demand an impossible dpc tolerance
    assert main(["gauss", "dpc-check", "--channel", gauss, "--budget", "2",
                 "--seed", "1", "--tol", "1e-30"]) == 1


def test_cli_verify_appendix(capsys):
    assert main(["fm", "verify-appendix", "--instantiations", "1", "--seed", "2"]) == 0
    outerr = capsys.readouterr()
    assert "chain verified" in outerr.out
