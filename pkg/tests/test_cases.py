import json

import pytest

from gridmesh.cases import (
    DupError,
    RangeError,
    RefError,
    SchemaError,
    case_to_json,
    case_to_topology_vars,
    convert_case,
    parse_case_csv,
    parse_case_json,
    topology_vars_to_case,
)


def test_ieee39_fixture(ieee39_path):
    case = parse_case_json(ieee39_path.read_bytes())
    assert len(case.buses) == 39
    assert len(case.lines) == 46
    assert case.name == "ieee39"


def test_gas_fixture(gas8_path):
    case = parse_case_json(gas8_path.read_bytes())
    assert len(case.buses) == 8
    assert len(case.lines) == 7


def test_minimal_case():
    doc = {"name": "one", "buses": [{"idx": 1, "name": "b", "lat": 0, "lon": 0}]}
    case = parse_case_json(json.dumps(doc))
    assert len(case.buses) == 1 and len(case.lines) == 0


def _doc(**overrides):
    doc = {
        "name": "t",
        "buses": [
            {"idx": 1, "name": "a", "lat": 10.0, "lon": 20.0},
            {"idx": 2, "name": "b", "lat": 11.0, "lon": 21.0},
        ],
        "lines": [{"idx": 1, "from": 1, "to": 2}],
    }
    doc.update(overrides)
    return json.dumps(doc)


def test_missing_field():
    with pytest.raises(SchemaError):
        parse_case_json(_doc(buses=[{"idx": 1, "lat": 0, "lon": 0}]))


def test_wrong_type():
    with pytest.raises(SchemaError):
        parse_case_json(_doc(name=7))


def test_lat_out_of_range():
    with pytest.raises(RangeError):
        parse_case_json(_doc(buses=[{"idx": 1, "name": "a", "lat": 91, "lon": 0}]))


def test_lon_out_of_range():
    with pytest.raises(RangeError):
        parse_case_json(_doc(buses=[{"idx": 1, "name": "a", "lat": 0, "lon": 181}]))


def test_dangling_line():
    with pytest.raises(RefError):
        parse_case_json(_doc(lines=[{"idx": 1, "from": 1, "to": 99}]))


def test_self_loop_line():
    with pytest.raises(RefError):
        parse_case_json(_doc(lines=[{"idx": 1, "from": 1, "to": 1}]))


def test_duplicate_bus_idx():
    with pytest.raises(DupError):
        parse_case_json(
            _doc(
                buses=[
                    {"idx": 1, "name": "a", "lat": 0, "lon": 0},
                    {"idx": 1, "name": "b", "lat": 1, "lon": 1},
                ]
            )
        )


def test_no_buses():
    with pytest.raises(SchemaError):
        parse_case_json(_doc(buses=[]))


def test_unknown_fields_ignored():
    doc = {
        "name": "t",
        "comment": "extra",
        "buses": [{"idx": 1, "name": "a", "lat": 0, "lon": 0, "voltage": 345}],
    }
    assert parse_case_json(json.dumps(doc)).buses[0].idx == 1


def test_invalid_json():
    with pytest.raises(SchemaError):
        parse_case_json(b"not json")


BUSES_CSV = "idx,name,lat,lon\n1,a,10.0,20.0\n2,b,11.0,21.0\n"
LINES_CSV = "idx,from,to\n1,1,2\n"


def test_csv_parse():
    case = parse_case_csv(BUSES_CSV, LINES_CSV, "t")
    assert [b.idx for b in case.buses] == [1, 2]
    assert case.lines[0].from_bus == 1


def test_csv_missing_column():
    with pytest.raises(SchemaError):
        parse_case_csv("idx,name,lat\n1,a,0\n", LINES_CSV)


def test_convert_round_trip():
    doc = convert_case(BUSES_CSV, LINES_CSV, "t")
    assert parse_case_json(doc) == parse_case_csv(BUSES_CSV, LINES_CSV, "t")


def test_convert_idempotent():
    doc = convert_case(BUSES_CSV, LINES_CSV, "t")
    assert case_to_json(parse_case_json(doc)) == doc


def test_topology_vars(ieee39_path):
    case = parse_case_json(ieee39_path.read_bytes())
    pairs = case_to_topology_vars(case)
    assert [n for n, _ in pairs] == ["topo_bus", "topo_line", "topo_name"]
    vars_map = dict(pairs)
    assert vars_map["topo_bus"].dims == (39, 3)
    assert vars_map["topo_line"].dims == (46, 2)
    assert vars_map["topo_name"].v == "ieee39"
    # file order preserved in rows
    assert vars_map["topo_bus"].data[0] == case.buses[0].idx


def test_topology_vars_zero_lines():
    doc = {"name": "one", "buses": [{"idx": 1, "name": "b", "lat": 0, "lon": 0}]}
    pairs = dict(case_to_topology_vars(parse_case_json(json.dumps(doc))))
    assert pairs["topo_bus"].dims == (1, 3)
    assert pairs["topo_line"].dims == (0, 2)


def test_topology_vars_round_trip(ieee39_path):
    case = parse_case_json(ieee39_path.read_bytes())
    back = topology_vars_to_case(dict(case_to_topology_vars(case)))
    assert [(b.idx, b.lat, b.lon) for b in back.buses] == [
        (b.idx, b.lat, b.lon) for b in case.buses
    ]
    assert [(l.from_bus, l.to_bus) for l in back.lines] == [
        (l.from_bus, l.to_bus) for l in case.lines
    ]
