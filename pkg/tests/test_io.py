import numpy as np
import pytest

from d2dplace.gen import generate_design
from d2dplace.io import (
    ParseError,
    Solution,
    parse_design,
    parse_solution,
    render_svg,
    write_design,
    write_solution,
)

MINIMAL = """\
Technology TA 1
LibCell C1 4 10 1
Pin P1 1 2
DieSize 0 0 100 100
TopDieMaxUtil 70
BottomDieMaxUtil 75
TopDieRows 0 0 100 10 10
BottomDieRows 0 0 100 10 10
TopDieTech TA
BottomDieTech TA
TerminalSize 4
TerminalSpacing 2
NumInstances 1
Inst I1 C1
NumNets 1
Net N1 1
Pin I1/P1
"""


class TestParseDesign:
    def test_minimal(self):
        d = parse_design(MINIMAL)
        assert d.n_nodes == 1
        assert d.n_nets == 1
        assert d.top_die.max_util == 0.70
        assert d.terminal_size == 4.0

    def test_instance_count_mismatch(self):
        bad = MINIMAL.replace("NumInstances 1", "NumInstances 3")
        with pytest.raises(ParseError, match="expected Inst"):
            parse_design(bad)
        extra = MINIMAL.replace(
            "Inst I1 C1", "Inst I1 C1\nInst I2 C1"
        ).replace("NumInstances 1", "NumInstances 1")
        with pytest.raises(ParseError, match="more Inst lines"):
            parse_design(extra)

    def test_unknown_lib_cell(self):
        bad = MINIMAL.replace("Inst I1 C1", "Inst I1 NOPE")
        with pytest.raises(ParseError, match="NOPE"):
            parse_design(bad)

    def test_duplicate_net_name(self):
        bad = MINIMAL.replace("NumNets 1", "NumNets 2").replace(
            "Net N1 1\nPin I1/P1", "Net N1 1\nPin I1/P1\nNet N1 1\nPin I1/P1"
        )
        with pytest.raises(ParseError, match="duplicate net name"):
            parse_design(bad)

    def test_utilization_range(self):
        bad = MINIMAL.replace("TopDieMaxUtil 70", "TopDieMaxUtil 120")
        with pytest.raises(ParseError, match="outside"):
            parse_design(bad)

    def test_syntax_error_reports_line(self):
        bad = MINIMAL.replace("DieSize 0 0 100 100", "DieSize 0 0 100")
        with pytest.raises(ParseError, match="line 4"):
            parse_design(bad)

    def test_hetero_round_trip_differs_per_die(self):
        d = generate_design(50, seed=5, hetero_factor=1.5)
        text = write_design(d)
        d2 = parse_design(text)
        top = d2.technologies[d2.top_die.tech_name]
        bot = d2.technologies[d2.bottom_die.tech_name]
        cell = d2.node_cells[0]
        assert top.lib_cells[cell].height != bot.lib_cells[cell].height
        assert write_design(d2) == text  # parse -> write fixpoint

    def test_round_trip_structural_equality(self):
        d = generate_design(30, seed=9)
        text = write_design(d)
        d2 = parse_design(text)
        assert d2.node_names == d.node_names
        assert d2.nets == d.nets
        assert parse_design(write_design(d2)).nets == d.nets


def tiny_solution(design):
    die = [i % 2 for i in range(design.n_nodes)]
    x = [float(10 + i) for i in range(design.n_nodes)]
    y = [float(10) for _ in range(design.n_nodes)]
    return Solution(node_die=die, x=x, y=y, terminals={})


class TestSolutionIo:
    def test_empty_terminals_section(self):
        d = parse_design(MINIMAL)
        sol = Solution(node_die=[0], x=[5.0], y=[10.0], terminals={})
        text = write_solution(sol, d)
        assert "NumTerminals 0" in text
        assert "TopDiePlacement 0" in text
        assert "BottomDiePlacement 1" in text

    def test_one_cell_each_die(self):
        d = generate_design(2, seed=1, n_nets=1)
        sol = Solution(node_die=[1, 0], x=[3.0, 4.0], y=[0.0, 0.0],
                       terminals={0: (50.0, 50.0)})
        text = write_solution(sol, d)
        assert "TopDiePlacement 1" in text
        assert "BottomDiePlacement 1" in text

    def test_write_parse_write_fixpoint(self):
        d = generate_design(20, seed=2, n_nets=10)
        sol = tiny_solution(d)
        text = write_solution(sol, d)
        sol2 = parse_solution(text, d)
        assert write_solution(sol2, d) == text

    def test_writer_rounds_half_up(self):
        d = parse_design(MINIMAL)
        sol = Solution(node_die=[0], x=[5.5], y=[9.4], terminals={})
        text = write_solution(sol, d)
        assert "Inst I1 6 9" in text

    def test_writer_deterministic(self):
        d = generate_design(20, seed=2, n_nets=10)
        sol = tiny_solution(d)
        assert write_solution(sol, d) == write_solution(sol, d)

    def test_parse_rejects_unknown_instance(self):
        d = parse_design(MINIMAL)
        with pytest.raises(ParseError, match="unknown instance"):
            parse_solution(
                "TopDiePlacement 1\nInst BAD 0 0\n"
                "BottomDiePlacement 0\nNumTerminals 0\n", d
            )

    def test_parse_rejects_duplicate_instance(self):
        d = parse_design(MINIMAL)
        with pytest.raises(ParseError, match="placed twice"):
            parse_solution(
                "TopDiePlacement 1\nInst I1 0 0\n"
                "BottomDiePlacement 1\nInst I1 0 0\nNumTerminals 0\n", d
            )


class TestRenderSvg:
    def test_empty_design_outline_only(self):
        d = generate_design(1, seed=1, n_nets=1)
        sol = Solution(node_die=[0], x=[0.0], y=[0.0], terminals={})
        svg = render_svg(d, sol, "top")
        assert svg.startswith("<svg")
        assert svg.count("<rect") >= 1

    def test_two_cells_two_colors(self):
        d = generate_design(2, seed=1, n_nets=1)
        sol = Solution(node_die=[1, 0], x=[3.0, 4.0], y=[0.0, 0.0],
                       terminals={})
        svg = render_svg(d, sol, "both")
        assert "#b0736f" in svg and "#4a6fa5" in svg

    def test_cells_inside_outline(self):
        import re

        d = generate_design(5, seed=3, n_nets=3)
        side = d.top_die.x_max
        xs = [side * f for f in (0.05, 0.2, 0.35, 0.5, 0.6)]
        sol = Solution(node_die=[0] * 5, x=xs, y=[0.0] * 5, terminals={})
        svg = render_svg(d, sol, "bottom")
        rects = [
            tuple(float(v) for v in m)
            for m in re.findall(
                r'<rect x="([\d.]+)" y="([\d.]+)" width="([\d.]+)" '
                r'height="([\d.]+)"', svg)
        ]
        assert len(rects) == 6
        outline = rects[0]
        for r in rects[1:]:
            assert r[0] >= outline[0] - 1e-6
            assert r[0] + r[2] <= outline[0] + outline[2] + 1e-6
            assert r[1] >= outline[1] - 1e-6
            assert r[1] + r[3] <= outline[1] + outline[3] + 1e-6
