import random
from pathlib import Path

import pytest

from dmkh.algebra import GaussQ, RatFunc
from dmkh.manifest import (
    Expr,
    ManifestError,
    parse_manifest,
    parse_scalar,
    parse_value,
    print_manifest,
    print_value,
    validate,
)

FIXTURES = Path(__file__).parent / "fixtures"
HEAD = "version = 1\nentity = difference_module\n"


@pytest.mark.parametrize("path", sorted(FIXTURES.glob("*.dm")), ids=lambda p: p.stem)
def test_fixture_round_trip(path):
    man = parse_manifest(path.read_text())
    validate(man)
    printed = print_manifest(man)
    again = parse_manifest(printed)
    assert again == man
    assert print_manifest(again) == printed


def test_expression_grammar():
    v = parse_value("2 i b^2/(b - 1) + 1/3")
    b = RatFunc.X()
    assert isinstance(v, Expr) and v.var == "b"
    assert v.value == RatFunc.of(GaussQ(0, 2)) * b * b / (b - 1) + RatFunc.of(GaussQ(1) / 3)
    assert parse_value("b^-2").value == RatFunc.of(1) / (b * b)
    assert parse_scalar("1/2 - 3/4 i") == GaussQ(GaussQ(1) / 2 + GaussQ(0, -3) / 4)
    assert parse_value("[1, [i, b]]")[1][0].scalar() == GaussQ(0, 1)


def test_mixed_variables_rejected():
    with pytest.raises(ManifestError):
        parse_value("b + w")


def rand_expr(rng, depth=0):
    choice = rng.randint(0, 5 if depth < 2 else 1)
    if choice == 0:
        return str(rng.randint(0, 9))
    if choice == 1:
        return rng.choice(["b", "i", "1/3", "2 i"])
    if choice == 2:
        return f"({rand_expr(rng, depth + 1)}) + ({rand_expr(rng, depth + 1)})"
    if choice == 3:
        return f"({rand_expr(rng, depth + 1)}) ({rand_expr(rng, depth + 1)})"
    if choice == 4:
        return f"({rand_expr(rng, depth + 1)})^{rng.randint(0, 3)}"
    return f"({rand_expr(rng, depth + 1)}) - b"


def test_randomized_print_parse_round_trip():
    rng = random.Random(7)
    for _ in range(100):
        v = parse_value(rand_expr(rng))
        printed = print_value(v)
        assert parse_value(printed) == v
        assert print_value(parse_value(printed)) == printed


@pytest.mark.parametrize("body,needle,line", [
    ("[module]\nphi = [[b, 0], [0, 1]]\nfoo = 3\n", "unknown key 'foo'", 5),
    ("[module]\nphi = [[b, 0], [0, 1]]\n[module]\n", "may appear once", 5),
    ("[module]\nphi = [[b, 0], [0, b^2 + (]]\n", "expected", 4),
    ("[nowhere]\n", "unknown section", 3),
])
def test_parse_errors_carry_positions(body, needle, line):
    with pytest.raises(ManifestError) as err:
        parse_manifest(HEAD + body)
    assert needle in str(err.value)
    assert err.value.line == line and err.value.col is not None


@pytest.mark.parametrize("body,needle", [
    ("[module]\nphi = [[b, 0, 1], [0, 1, 1]]\n", "rank mismatch"),
    ("[module]\nphi = [[b, 0], [0, 1]]\n[infinity]\nd = [0, 0, 0]\n", "rank mismatch in d"),
    ("[module]\nphi = [[0, 0], [0, 1]]\n", "not invertible"),
    ("[module]\nconstruction = example_c\n", "construction"),
])
def test_validation_errors(body, needle):
    with pytest.raises(ManifestError) as err:
        validate(parse_manifest(HEAD + body))
    assert needle in str(err.value)


def test_entity_must_precede_sections():
    with pytest.raises(ManifestError):
        parse_manifest("version = 1\n[module]\n")


def test_comments_and_blank_lines_ignored():
    text = HEAD + "# note\n\n[module]   # trailing\nphi = [[b]]  # rank one\n"
    man = parse_manifest(text)
    assert print_manifest(man) == print_manifest(parse_manifest(HEAD + "[module]\nphi = [[b]]\n"))
