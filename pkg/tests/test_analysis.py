"""
Tests for the mean-square error computations and error tables.
"""
import json

import pytest

from app.exceptions import DomainError
from app.schemas.hurst import HurstSpec
from app.services.analysis import (
    ErrorTable,
    TABLE_PRESETS,
    TableCell,
    TableMethod,
    cell_variant,
    error_table,
    kernel_norm_sq,
    mse_direct,
    mse_for_method,
    mse_product,
    paired_variant,
    relative_error,
    round_half_even,
    t_scaling_check,
)
from app.services.kernel import Method, Variant
from tests import reference_tables


def _spec(H, L, T="1"):
    return HurstSpec(hurst=H, horizon=T, order=L)


class TestReferenceValues:
    @pytest.mark.parametrize("H, L, expected", [
        ("0.5", 4, "0.035714"),
        ("0.3", 16, "0.042250"),
        ("0.1", 4, "0.384241"),
        ("0.7", 8, "0.004937"),
    ])
    def test_direct(self, ctx128, H, L, expected):
        assert round_half_even(mse_direct(_spec(H, L), ctx128).epsilon, 6) == expected

    @pytest.mark.parametrize("H, L, expected", [
        ("0.1", 4, "0.385941"),
        ("0.2", 8, "0.136295"),
        ("0.7", 8, "0.004949"),
    ])
    def test_product_paper(self, ctx128, H, L, expected):
        report = mse_product(_spec(H, L), "paper", ctx128)
        assert round_half_even(report.epsilon_star, 6) == expected

    @pytest.mark.parametrize("H, L, expected", [
        ("0.9", 8, "0.061995"),
        ("0.3", 16, "0.042318"),
        ("0.7", 8, "0.004961"),
    ])
    def test_product_paired(self, ctx128, H, L, expected):
        report = mse_product(_spec(H, L), paired_variant(H), ctx128)
        assert round_half_even(report.epsilon_star, 6) == expected


class TestFullTables:
    def _check(self, name, orders, ctx, threads=1):
        all_orders, expected = reference_tables.PRESETS[name]
        method, variant = TABLE_PRESETS[name]
        table = error_table(reference_tables.HURSTS, orders, "1", method, variant, ctx, threads=threads)
        for H in reference_tables.HURSTS:
            for L in orders:
                want = expected[H][all_orders.index(L)]
                got = float(table.cell(H, L).value)
                assert abs(got - want) <= reference_tables.TOLERANCE, (name, H, L, got, want)

    @pytest.mark.parametrize("name", ["table1", "table2", "table3"])
    def test_low_orders(self, ctx128, name):
        self._check(name, [4, 8], ctx128)

    @pytest.mark.slow
    def test_direct_up_to_order_128(self, ctx320):
        self._check("table1", reference_tables.DIRECT_ORDERS, ctx320, threads=4)

    @pytest.mark.slow
    @pytest.mark.parametrize("name", ["table2", "table3"])
    def test_product_up_to_order_64(self, ctx320, name):
        self._check(name, reference_tables.PRODUCT_ORDERS, ctx320, threads=4)


class TestDirectError:
    @pytest.mark.parametrize("T", ["1", "2", "1/3"])
    def test_brownian_identity(self, ctx320, T):
        spec = _spec("0.5", 1, T)
        t = spec.t_real(ctx320)
        for L in range(1, 17):
            eps = mse_direct(spec.with_order(L), ctx320).epsilon
            expected = t * t / (4 * (2 * L - 1))
            assert abs(eps - expected) <= 8 * ctx320.ulp(expected), L

    def test_decreasing_in_order(self, ctx128):
        values = [mse_direct(_spec("0.25", L), ctx128).epsilon for L in (2, 4, 8, 16)]
        assert all(a > b > 0 for a, b in zip(values, values[1:]))

    def test_norms(self, ctx128):
        report = mse_direct(_spec("0.3", 8, "2"), ctx128)
        expected = ctx128.mp.power(2, ctx128.real("1.6")) / ctx128.real("1.6")
        assert abs(report.kernel_norm_sq - expected) <= 4 * ctx128.ulp(expected)
        assert abs(report.kernel_norm_sq - kernel_norm_sq("0.3", "2", ctx128)) <= 2 * ctx128.ulp(expected)
        assert abs(report.epsilon - (report.kernel_norm_sq - report.truncated_norm_sq)) <= 4 * ctx128.ulp(report.kernel_norm_sq)
        assert report.epsilon_star is None and report.defect_norm_sq is None
        assert relative_error(report) == report.epsilon / report.kernel_norm_sq

    def test_report_carries_rounded_kernel(self, ctx128):
        report = mse_direct(_spec("0.3", 4), ctx128)
        assert report.kernel.precision_bits == 128
        assert report.kernel.order == 4
        assert report.precision_bits == 128

    def test_to_dict(self, ctx128):
        d = mse_direct(_spec("0.6", 3, "1/3"), ctx128).to_dict()
        assert d["H"] == "0.6" and d["T"] == "1/3" and d["L"] == 3
        assert d["method"] == "direct" and d["epsilon_star"] is None
        assert ctx128.from_decimal_string(d["epsilon"]) > 0


class TestProductError:
    @pytest.mark.parametrize("H", ["0.2", "0.7"])
    @pytest.mark.parametrize("variant", ["A", "B"])
    def test_star_dominates(self, ctx128, H, variant):
        report = mse_product(_spec(H, 8), variant, ctx128)
        assert report.defect_norm_sq > 0
        assert report.epsilon_star > report.epsilon
        assert abs(report.epsilon_star - report.epsilon - report.defect_norm_sq) <= 4 * ctx128.ulp(report.epsilon_star)

    def test_brownian_has_no_defect(self, ctx128):
        report = mse_product(_spec("0.5", 6), "A", ctx128)
        assert report.defect_norm_sq == 0
        assert report.epsilon_star == report.epsilon

    def test_method_dispatch(self, ctx128):
        spec = _spec("0.4", 4)
        assert mse_for_method(spec, "direct", ctx128).method == Method.DIRECT
        assert mse_for_method(spec, "product_B", ctx128).method == Method.PRODUCT_B
        assert mse_for_method(spec, Method.PRODUCT_PAPER, ctx128).epsilon_star is not None

    def test_paired_variant(self):
        assert paired_variant("0.3") == Variant.B
        assert paired_variant("0.7") == Variant.A
        assert paired_variant("0.5") == Variant.A

    def test_cell_variant(self):
        assert cell_variant("direct", None, "0.3") is None
        assert cell_variant("product", None, "0.3") == "paper"
        assert cell_variant("product", "paired", "0.3") == "B"
        assert cell_variant(TableMethod.PRODUCT, "A", "0.9") == "A"


class TestScaling:
    def test_matches_recomputation(self, ctx320):
        report = mse_product(_spec("0.3", 6), "A", ctx320)
        moved = t_scaling_check(report, "3")
        fresh = mse_product(_spec("0.3", 6, "3"), "A", ctx320)
        tol = ctx320.mp.mpf(10) ** -80
        assert moved.spec.horizon == "3"
        assert abs(moved.epsilon - fresh.epsilon) < tol
        assert abs(moved.epsilon_star - fresh.epsilon_star) < tol
        assert moved.kernel.spec.horizon == "3"


class TestRounding:
    @pytest.mark.parametrize("text, digits, expected", [
        ("0.125", 2, "0.12"),
        ("0.375", 2, "0.38"),
        ("0.0357142857", 6, "0.035714"),
        ("0.0000004", 6, "0.000000"),
        ("1.5", 0, "2"),
        ("2.5", 0, "2"),
    ])
    def test_ties_to_even(self, ctx128, text, digits, expected):
        assert round_half_even(ctx128.real(text), digits) == expected


class TestErrorTable:
    def test_matches_single_reports(self, ctx320):
        table = error_table(["0.3", "0.8"], [2, 5], "1", "direct", None, ctx320)
        assert [(c.H, c.L) for c in table.cells] == [("0.3", 2), ("0.3", 5), ("0.8", 2), ("0.8", 5)]
        tol = ctx320.mp.mpf(10) ** -90
        for c in table.cells:
            single = mse_direct(_spec(c.H, c.L), ctx320).epsilon
            assert abs(c.epsilon - single) < tol, (c.H, c.L)
            assert c.variant is None and c.epsilon_star is None

    def test_product_cells(self, ctx128):
        table = error_table(["0.3", "0.7"], [4], "1", "product", "paired", ctx128)
        assert [c.variant for c in table.cells] == ["B", "A"]
        for c in table.cells:
            assert c.value == c.epsilon_star
            single = mse_product(_spec(c.H, 4), c.variant, ctx128)
            assert abs(c.epsilon_star - single.epsilon_star) <= 4 * ctx128.ulp(single.epsilon_star)

    def test_default_variant(self, ctx128):
        table = error_table(["0.2"], [3], "1", "product", None, ctx128)
        assert table.cells[0].variant == "paper"

    def test_canonical_labels(self, ctx128):
        table = error_table([".50"], [3], "2.0", "direct", None, ctx128)
        assert table.horizon == "2"
        assert table.cells[0].H == "0.5"

    def test_threads_do_not_change_values(self, ctx128):
        one = error_table(["0.2", "0.6", "0.9"], [3, 6], "1", "direct", None, ctx128)
        many = error_table(["0.2", "0.6", "0.9"], [3, 6], "1", "direct", None, ctx128, threads=3)
        assert [c.epsilon for c in one.cells] == [c.epsilon for c in many.cells]

    def test_precomputed_cells_are_reused(self, ctx128):
        marker = TableCell(H="0.4", L=3, epsilon=ctx128.real("0.5"), method="direct")
        table = error_table(["0.4"], [3, 4], "1", "direct", None, ctx128, precomputed={("0.4", 3): marker})
        assert table.cell("0.4", 3) is marker
        assert table.cell("0.4", 4).epsilon < 1

    @pytest.mark.parametrize("H_list, L_list", [([], [4]), (["0.3"], []), (["0.3"], [0])])
    def test_rejects_bad_grids(self, ctx128, H_list, L_list):
        with pytest.raises(DomainError):
            error_table(H_list, L_list, "1", "direct", None, ctx128)

    def test_rejects_bad_hurst(self, ctx128):
        with pytest.raises(ValueError):
            error_table(["1.2"], [4], "1", "direct", None, ctx128)

    def test_csv(self, ctx128):
        table = error_table(["0.5"], [4, 10], "1", "direct", None, ctx128)
        assert table.to_csv() == "H,L,value\n0.5,4,0.035714\n0.5,10,0.013158\n"

    def test_json(self, ctx128):
        table = error_table(["0.5"], [4], "1", "product", "B", ctx128)
        records = json.loads(table.to_json(3))
        assert records == [{"H": "0.5", "L": 4, "epsilon": "0.036", "epsilon_star": "0.036",
                            "method": "product", "variant": "B"}]

    def test_full_precision_output(self, ctx128):
        table = ErrorTable(horizon="1", precision_bits=128,
                           cells=[TableCell(H="0.5", L=1, epsilon=ctx128.real("0.25"), method="direct")])
        assert table.to_csv(None) == f"H,L,value\n0.5,1,{ctx128.to_decimal_string(ctx128.real('0.25'))}\n"
        with pytest.raises(KeyError):
            table.cell("0.5", 2)
