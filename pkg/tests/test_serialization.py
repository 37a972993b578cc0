"""Text format round trips and error reporting."""

import numpy as np
import pytest

import riskroute as rr
from riskroute import serialization as ser
from riskroute.instances import RecursiveFamilySpec, Variant, build_recursive
from riskroute.synthetic import random_polynomial_instance


def test_function_spec_round_trips():
    for fn in (rr.Constant(1.25),
               rr.Affine(0.1, 2.0),
               rr.Polynomial((0.5, 0.0, 1.0 / 3.0)),
               rr.PiecewiseLinear(((0.0, 0.0), (0.5, 0.0), (1.0, 1.0)))):
        assert ser.function_from_text(ser.function_to_text(fn)) == fn


def test_function_spec_errors():
    with pytest.raises(ser.FormatError):
        ser.function_from_text("")
    with pytest.raises(ser.FormatError):
        ser.function_from_text("spline 1 2 3")
    with pytest.raises(ser.FormatError):
        ser.function_from_text("affine 1")
    with pytest.raises(ser.FormatError):
        ser.function_from_text("const banana")


@pytest.mark.parametrize("variant", [Variant.STRUCTURAL, Variant.FUNCTIONAL])
def test_instance_round_trip_is_value_identical(variant):
    inst, _ = build_recursive(
        RecursiveFamilySpec(level=2, gamma_kappa=0.7, variant=variant))
    assert ser.loads_instance(ser.dumps_instance(inst)) == inst


def test_polynomial_instance_round_trip():
    inst = random_polynomial_instance(3, 3)
    assert ser.loads_instance(ser.dumps_instance(inst)) == inst


def test_oracle_round_trip_with_metadata():
    _, oracle = build_recursive(RecursiveFamilySpec(level=2))
    text = ser.dumps_oracle(oracle, {"family": "recursive", "level": "2"})
    back, meta = ser.loads_oracle(text)
    assert back == oracle
    assert meta == {"family": "recursive", "level": "2"}


def test_result_round_trip():
    inst, _ = build_recursive(RecursiveFamilySpec(level=1))
    res = rr.solve_rnwe(inst)
    back = ser.loads_result(ser.dumps_result(res))
    assert np.array_equal(back.flow, res.flow)
    assert back.path_flow == res.path_flow
    assert back.common_cost == res.common_cost
    assert back.vi_residual == res.vi_residual
    assert back.iterations == res.iterations
    assert back.converged == res.converged


def test_reader_skips_comments_and_blank_lines():
    inst, _ = build_recursive(RecursiveFamilySpec(level=1))
    lines = ser.dumps_instance(inst).splitlines()
    noisy = [lines[0], "", "# a comment"] + lines[1:] + ["   "]
    assert ser.loads_instance("\n".join(noisy)) == inst


def test_missing_or_wrong_header_is_rejected():
    inst, _ = build_recursive(RecursiveFamilySpec(level=1))
    body = ser.dumps_instance(inst).split("\n", 1)[1]
    with pytest.raises(ser.FormatError):
        ser.loads_instance(body)
    with pytest.raises(ser.FormatError):
        ser.loads_instance(ser.ORACLE_HEADER + "\n" + body)


def test_incomplete_records_are_rejected():
    with pytest.raises(ser.FormatError):
        ser.loads_instance(ser.INSTANCE_HEADER + "\nvertices :: 2\n")
    with pytest.raises(ser.FormatError):
        ser.loads_oracle(ser.ORACLE_HEADER + "\nrawe_cost :: 1.0\n")
    with pytest.raises(ser.FormatError):
        ser.loads_result(ser.RESULT_HEADER + "\nconverged :: maybe\n")


def test_result_flow_ids_must_cover_range():
    inst, _ = build_recursive(RecursiveFamilySpec(level=1))
    res = rr.solve_rnwe(inst)
    text = ser.dumps_result(res).replace("edge_flow :: 0 ::", "edge_flow :: 4 ::")
    with pytest.raises(ser.FormatError):
        ser.loads_result(text)


def test_file_round_trip(tmp_path):
    inst, oracle = build_recursive(RecursiveFamilySpec(level=1))
    ipath = tmp_path / "instance.txt"
    opath = tmp_path / "oracle.txt"
    ser.write_instance(ipath, inst)
    ser.write_oracle(opath, oracle, {"family": "recursive"})
    assert ser.read_instance(ipath) == inst
    back, meta = ser.read_oracle(opath)
    assert back == oracle and meta["family"] == "recursive"
