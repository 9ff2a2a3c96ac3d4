import pytest

from config.settings import settings
from library.class_loader import dump_class, load_class, parse_class_text, resolve_class_path
from library.errors import ClassFileError
from library.learners import ldim, point_class, threshold_class


def test_parse_with_comments_and_names():
    text = """
    # пороги на трёх точках
    n=3 h=4
    111 theta_0
    011 theta_1
    001
    000 theta_3
    """
    hclass = parse_class_text(text)
    assert (hclass.n, hclass.size) == (3, 4)
    assert hclass.names == ("theta_0", "theta_1", "h2", "theta_3")
    assert ldim(hclass) == 2


@pytest.mark.parametrize(
    "text",
    [
        "",
        "# только комментарий",
        "n=3\n111",
        "n=3 h=2\n111",
        "n=3 h=1\n1102",
        "n=3 h=1\n11",
        "n=3 h=2\n111\n111",
        "n=0 h=1\n",
    ],
)
def test_malformed_files(text):
    with pytest.raises(ClassFileError):
        parse_class_text(text)


def test_dump_then_load_keeps_table(tmp_path):
    original = threshold_class(6)
    path = tmp_path / "t6.txt"
    dump_class(original, path)
    loaded = load_class(path)
    assert (loaded.table == original.table).all()
    assert loaded.names == original.names


def test_dump_without_names():
    text = dump_class(point_class(2))
    assert text.splitlines() == ["n=2 h=3", "10", "01", "00"]


@pytest.mark.parametrize(
    "name, expected_ldim",
    [("thresholds_4", 2), ("thresholds_16", 4), ("thresholds_64", 6), ("full_3", 3),
     ("full_4", 4), ("points_5", 1), ("singleton", 0)],
)
def test_bundled_fixtures(name, expected_ldim):
    assert ldim(load_class(name)) == expected_ldim


def test_resolve_prefers_existing_path(tmp_path):
    path = tmp_path / "mine.txt"
    path.write_text("n=1 h=2\n0\n1\n", encoding="utf-8")
    assert resolve_class_path(path) == path
    assert resolve_class_path("points_5") == settings.classes_dir / "points_5.txt"


def test_missing_file():
    with pytest.raises(ClassFileError):
        load_class("no_such_class_file")
