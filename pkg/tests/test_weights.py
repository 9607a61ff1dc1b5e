"""Weight sequence presets, prefix sums and CLI parsing."""

import math

import pytest

from rectree.weights import WeightError, WeightSequence, parse_weights


def test_const():
    w = WeightSequence.const()
    assert w.weight(5) == 1.0
    assert w.prefix(7) == 7.0
    assert w.average(4) == 1.0


def test_hoppe():
    w = WeightSequence.hoppe(2.5)
    assert w.weight(1) == 2.5
    assert w.weight(2) == 1.0
    assert w.prefix(4) == 2.5 + 3


def test_theta_k():
    w = WeightSequence.theta_k(0.5, 3)
    assert [w.weight(i) for i in (1, 3, 4)] == [0.5, 0.5, 1.0]
    assert w.prefix(3) == 1.5
    assert w.prefix(5) == 1.5 + 2


@pytest.mark.parametrize(
    "factory,values",
    [
        (WeightSequence.linear, [1, 2, 3, 4]),
        (lambda: WeightSequence.power(2), [1, 4, 9, 16]),
        (lambda: WeightSequence.reciprocal(2), [1, 0.25, 1 / 9, 1 / 16]),
        (lambda: WeightSequence.geometric(3), [1, 3, 9, 27]),
    ],
)
def test_preset_values(factory, values):
    w = factory()
    assert [w.weight(i) for i in range(1, 5)] == pytest.approx(values)
    assert w.prefix(4) == pytest.approx(sum(values))


def test_log_preset_positive_root():
    w = WeightSequence.log()
    assert w.weight(1) == pytest.approx(math.log(2.0))
    assert w.weight(1) > 0


def test_geometric_closed_prefix():
    w = WeightSequence.geometric(2.0)
    assert w.prefix(10) == 2**10 - 1
    assert math.isinf(w.prefix(1100))  # past the float horizon


def test_prefix_memoized_matches_closed_form():
    direct = WeightSequence(lambda i: float(i), tag="plain")
    closed = WeightSequence.linear()
    for i in range(1, 30):
        assert direct.prefix(i) == pytest.approx(closed.prefix(i), rel=1e-14)


def test_table():
    w = WeightSequence.from_table([2.0, 0.5])
    assert w.weight(2) == 0.5
    with pytest.raises(WeightError):
        w.weight(3)
    tailed = WeightSequence.from_table([2.0, 0.5], tail=1.0)
    assert tailed.weight(17) == 1.0


def test_validation():
    with pytest.raises(WeightError):
        WeightSequence.hoppe(0.0)
    with pytest.raises(WeightError):
        WeightSequence.theta_k(1.0, 0)
    with pytest.raises(WeightError):
        WeightSequence.from_table([])
    with pytest.raises(WeightError):
        WeightSequence.from_table([0.0, 1.0])  # w_1 must be positive
    with pytest.raises(WeightError):
        WeightSequence(lambda i: -1.0, tag="neg")


@pytest.mark.parametrize(
    "spec,tag",
    [
        ("const", "const"),
        ("hoppe:2", "hoppe"),
        ("thetak:2,3", "thetak"),
        ("linear", "linear"),
        ("power:2", "power"),
        ("recip:2", "recip"),
        ("log", "log"),
        ("geom:1.5", "geom"),
    ],
)
def test_parse(spec, tag):
    assert parse_weights(spec).tag == tag


def test_parse_table(tmp_path):
    path = tmp_path / "weights.txt"
    path.write_text("2.0 0.5 1.5\n")
    w = parse_weights(f"table:{path}")
    assert w.weight(2) == 0.5
    assert w.weight(10) == 1.0  # implicit constant tail


def test_parse_errors():
    with pytest.raises(WeightError):
        parse_weights("nope")
    with pytest.raises(WeightError):
        parse_weights("hoppe:abc")
    with pytest.raises(WeightError):
        parse_weights("table:/does/not/exist")


def test_describe():
    assert WeightSequence.const().describe() == "const"
    assert "theta=2" in WeightSequence.hoppe(2).describe()
