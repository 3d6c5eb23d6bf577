"""Channel/aux/split file formats and deterministic CSV emission.

The file format is line-based: ``key: value`` headers plus named matrix
blocks.  A block starts with ``NAME:`` on its own line and collects the
following whitespace-separated numeric rows until the next header.  Floats
are written with ``%.17g`` so a parse/emit round trip is bit exact.
"""

from __future__ import annotations

import numpy as np

from .entropy_algebra import FactorStructure
from .errors import IoError, NotPSD, ParseError, ValidationError
from .info_core import ChannelSpec, VarId, make_table
from .polytope_fm import IneqSystem, VPolytope
from .regions_discrete import AuxJoint, SweepResult
from .regions_gaussian import CovSplit, GaussChannel, HGaussChannel

FLOAT_FMT = "%.17g"
CSV_FMT = "%.12g"


def _fmt(x: float) -> str:
    return CSV_FMT % float(x)


class _Doc:
    """Parsed key/value headers and matrix blocks with line numbers."""

    def __init__(self, text: str):
        self.scalars: dict[str, tuple[str, int]] = {}
        self.blocks: dict[str, tuple[list[list[float]], int]] = {}
        current = None
        for no, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].rstrip()
            if not line.strip():
                continue
            if line.endswith(":"):
                name = line[:-1].strip()
                if name in self.blocks:
                    raise ParseError(f"duplicate block {name!r}", line=no)
                self.blocks[name] = ([], no)
                current = name
                continue
            if ":" in line:
                key, val = line.split(":", 1)
                self.scalars[key.strip()] = (val.strip(), no)
                current = None
                continue
            if current is None:
                raise ParseError(f"numeric row outside a block: {line!r}", line=no)
            try:
                self.blocks[current][0].append([float(t) for t in line.split()])
            except ValueError:
                raise ParseError(f"bad numeric row {line!r}", line=no) from None

    def scalar(self, key: str, required: bool = True) -> str | None:
        if key not in self.scalars:
            if required:
                raise ParseError(f"missing key {key!r}")
            return None
        return self.scalars[key][0]

    def matrix(self, name: str, required: bool = True) -> np.ndarray | None:
        if name not in self.blocks:
            if required:
                raise ParseError(f"missing matrix block {name!r}")
            return None
        rows, no = self.blocks[name]
        widths = {len(r) for r in rows}
        if len(widths) != 1:
            raise ParseError(f"ragged rows in block {name!r}", line=no)
        return np.array(rows, dtype=float)


def _parse_vars(spec: str) -> list[VarId]:
    toks = spec.split()
    if len(toks) % 2:
        raise ParseError(f"variable list {spec!r} must alternate name cardinality")
    out = []
    for i in range(0, len(toks), 2):
        try:
            out.append(VarId(toks[i], int(toks[i + 1])))
        except ValueError:
            raise ParseError(f"bad cardinality {toks[i+1]!r}") from None
    return out


def _read(path) -> str:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return fh.read()
    except OSError as e:
        raise IoError(f"cannot read {path}: {e}") from e


def parse_channel_file(path):
    """Parse a channel file into a ChannelSpec, GaussChannel or HGaussChannel.

    Discrete channels may be given as three degraded cascade stages or as a
    dense kernel; the degraded flag is set for cascades.  Gaussian matrices
    are validated for positive (semi)definiteness on construction.
    """
    doc = _Doc(_read(path))
    kind = doc.scalar("kind")
    try:
        if kind == "discrete":
            inp = _parse_vars(doc.scalar("input"))[0]
            outs = _parse_vars(doc.scalar("outputs"))
            if len(outs) != 3:
                raise ValidationError("a channel needs exactly three outputs (Y1, Y2, Z)")
            names = [f"{outs[0].name}|{inp.name}", f"{outs[1].name}|{outs[0].name}",
                     f"{outs[2].name}|{outs[1].name}"]
            if all(f"stage {n}" in doc.blocks for n in names):
                stages = [doc.matrix(f"stage {n}") for n in names]
                return ChannelSpec(input=inp, outputs=tuple(outs),
                                   stages=tuple(stages), degraded_flag=True)
            k = doc.matrix("kernel")
            shape = (inp.cardinality,) + tuple(o.cardinality for o in outs)
            ch = ChannelSpec(input=inp, outputs=tuple(outs),
                             kernel=k.reshape(shape), degraded_flag=None)
            from .info_core import infer_degraded
            return ChannelSpec(input=inp, outputs=tuple(outs), kernel=ch.kernel,
                               degraded_flag=infer_degraded(ch))
        if kind == "gauss":
            return GaussChannel(S=doc.matrix("S"), Sigma1=doc.matrix("Sigma1"),
                                Sigma2=doc.matrix("Sigma2"), SigmaZ=doc.matrix("SigmaZ"))
        if kind == "gauss_h":
            return HGaussChannel(H1=doc.matrix("H1"), H2=doc.matrix("H2"),
                                 HZ=doc.matrix("HZ"))
    except NotPSD as e:
        raise ValidationError(f"NonPSD: {e}") from e
    raise ParseError(f"unknown channel kind {kind!r}")


def parse_aux_file(path) -> AuxJoint:
    doc = _Doc(_read(path))
    if doc.scalar("kind") != "aux":
        raise ParseError("expected kind: aux")
    vars_ = _parse_vars(doc.scalar("vars"))
    flat = doc.matrix("table").ravel()
    shape = tuple(v.cardinality for v in vars_)
    if flat.size != int(np.prod(shape)):
        raise ValidationError(f"table has {flat.size} entries, expected {np.prod(shape)}")
    kind = "layered" if len(vars_) == 5 else "ux"
    return AuxJoint(make_table(tuple(vars_), flat.reshape(shape)), kind=kind)


def parse_split_file(path) -> CovSplit:
    doc = _Doc(_read(path))
    if doc.scalar("kind") != "split":
        raise ParseError("expected kind: split")
    try:
        if "K" in doc.blocks:
            return CovSplit(K=doc.matrix("K"))
        return CovSplit(K0=doc.matrix("K0"), K1=doc.matrix("K1"), K2=doc.matrix("K2"))
    except NotPSD as e:
        raise ValidationError(f"NonPSD: {e}") from e


def parse_dag_file(path) -> FactorStructure:
    """Factorization fixture: one ``node: NAME [PARENTS...]`` line per variable."""
    parents = {}
    for no, raw in enumerate(_read(path).splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("kind"):
            continue
        if not line.startswith("node:"):
            raise ParseError(f"expected node: lines, got {line!r}", line=no)
        toks = line[5:].split()
        if not toks:
            raise ParseError("empty node line", line=no)
        parents[toks[0]] = tuple(toks[1:])
    return FactorStructure(parents)


def _mat_lines(name: str, m: np.ndarray) -> list[str]:
    m = np.atleast_2d(np.asarray(m, dtype=float))
    lines = [f"{name}:"]
    for row in m:
        lines.append(" ".join(FLOAT_FMT % x for x in row))
    return lines


def emit_channel_file(ch, path) -> None:
    """Write a channel in the parse format (bit-exact round trip)."""
    lines = []
    if isinstance(ch, ChannelSpec):
        lines.append("kind: discrete")
        lines.append(f"input: {ch.input.name} {ch.input.cardinality}")
        lines.append("outputs: " + " ".join(f"{o.name} {o.cardinality}" for o in ch.outputs))
        if ch.stages is not None:
            names = [f"{ch.outputs[0].name}|{ch.input.name}",
                     f"{ch.outputs[1].name}|{ch.outputs[0].name}",
                     f"{ch.outputs[2].name}|{ch.outputs[1].name}"]
            for n, s in zip(names, ch.stages):
                lines.extend(_mat_lines(f"stage {n}", s))
        else:
            lines.extend(_mat_lines("kernel", ch.kernel.reshape(ch.kernel.shape[0], -1)))
    elif isinstance(ch, GaussChannel):
        lines.append("kind: gauss")
        for name, m in (("S", ch.S), ("Sigma1", ch.Sigma1), ("Sigma2", ch.Sigma2),
                        ("SigmaZ", ch.SigmaZ)):
            lines.extend(_mat_lines(name, m))
    elif isinstance(ch, HGaussChannel):
        lines.append("kind: gauss_h")
        for name, m in (("H1", ch.H1), ("H2", ch.H2), ("HZ", ch.HZ)):
            lines.extend(_mat_lines(name, m))
    else:
        raise ValidationError(f"cannot emit {type(ch).__name__}")
    _write(path, "\n".join(lines) + "\n")


def _write(path, text: str) -> None:
    try:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    except OSError as e:
        raise IoError(f"cannot write {path}: {e}") from e


def emit_region_csv(obj, path) -> None:
    """Deterministic CSV for a numeric system, a vertex list or a sweep.

    The ``kind`` column distinguishes constraint, vertex, sample and
    hull_vertex rows; floats use 12 significant digits.  An empty polytope
    yields the header plus a single ``EMPTY`` note row.
    """
    _write(path, region_csv_text(obj))


def region_csv_text(obj) -> str:
    lines = []
    if isinstance(obj, IneqSystem):
        rates = obj.vars
        lines.append("kind,label," + ",".join(rates) + ",rhs")
        for q in obj.ineqs:
            coeffs = q.coeff_dict()
            row = [_fmt(float(coeffs.get(v, 0))) for v in rates]
            lines.append(f"constraint,{q.label or ''}," + ",".join(row) + f",{_fmt(q.rhs)}")
    elif isinstance(obj, VPolytope):
        lines.append("kind,label," + ",".join(obj.vars) + ",rhs")
        if obj.vertices.shape[0] == 0:
            lines.append("note,EMPTY," + "," * len(obj.vars))
        for i, p in enumerate(obj.vertices):
            lines.append(f"vertex,v{i}," + ",".join(_fmt(x) for x in p) + ",")
    elif isinstance(obj, SweepResult):
        width = max((len(r[2]) for r in obj.rows), default=4)
        width = max(width, len(obj.rates))
        cols = ",".join(f"v{i}" for i in range(width))
        lines.append(f"kind,id,hash,nverts,{cols}")
        for i, p in enumerate(obj.hull_points):
            pad = [""] * (width - len(obj.rates))
            lines.append(f"hull_vertex,{i},,," + ",".join(_fmt(x) for x in p) + "".join("," + s for s in pad))
        for idx, h, consts, nv in obj.rows:
            pad = [""] * (width - len(consts))
            lines.append(f"sample,{idx},{h},{nv}," + ",".join(_fmt(c) for c in consts)
                         + "".join("," + s for s in pad))
    else:
        raise ValidationError(f"cannot serialize {type(obj).__name__}")
    return "\n".join(lines) + "\n"


def pretty_text(obj) -> str:
    """Terminal table rendering of the same objects."""
    if isinstance(obj, IneqSystem):
        out = []
        for q in obj.ineqs:
            lhs = " + ".join((f"{c}*{v}" if c != 1 else v) for v, c in q.coeffs) or "0"
            out.append(f"  {q.label or '':10s} {lhs:28s} <= {_fmt(q.rhs)}")
        return "\n".join(out)
    if isinstance(obj, VPolytope):
        if obj.vertices.shape[0] == 0:
            return "  (empty region)"
        head = "  " + "  ".join(f"{v:>12s}" for v in obj.vars)
        rows = ["  " + "  ".join(f"{x:12.6f}" for x in p) for p in obj.vertices]
        return "\n".join([head] + rows)
    if isinstance(obj, SweepResult):
        return (f"  samples: {len(obj.rows)}\n  cloud points: {obj.points.shape[0]}\n"
                f"  hull vertices: {obj.hull_points.shape[0]}")
    return str(obj)
