"""
Result cache for error-table cells.
This file stores computed epsilon / epsilon* values in the results database so
repeated tables and API calls only compute the cells they have not seen.
"""
import asyncio
import logging
from dataclasses import dataclass, replace
from typing import Dict, Optional, Sequence, Union

from sqlalchemy import select
from sqlalchemy.exc import IntegrityError
from sqlalchemy.ext.asyncio import AsyncEngine

from app.database import create_db_and_tables, make_engine, session_factory
from app.models.error_cell import ErrorCell
from app.schemas.hurst import HurstSpec
from app.services.analysis import (
    CellKey,
    ErrorReport,
    ErrorTable,
    TableCell,
    TableMethod,
    TableVariant,
    cell_variant,
    error_table,
)
from app.services.kernel import Method, concrete_variant, variant_of
from app.utils.numeric import PrecisionContext, format_exact, make_context, parse_exact

# Set up logging
logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class StoreKey:
    """Identity of a cached cell; variant is '' for the direct method."""

    hurst: str
    horizon: str
    order: int
    method: str
    variant: str
    precision_bits: int


def key_for(spec: HurstSpec, method: Method, precision_bits: int) -> StoreKey:
    """Store identity; a "paper" variant is keyed by the formula (A or B) it uses at H."""
    variant = variant_of(Method(method))
    if variant is not None:
        variant = concrete_variant(variant, spec.H)
    return StoreKey(
        hurst=spec.hurst,
        horizon=spec.horizon,
        order=spec.order,
        method=TableMethod.DIRECT.value if variant is None else TableMethod.PRODUCT.value,
        variant="" if variant is None else variant.value,
        precision_bits=precision_bits,
    )


def key_for_report(report: ErrorReport) -> StoreKey:
    return key_for(report.spec, report.method, report.precision_bits)


def cell_from_report(report: ErrorReport) -> TableCell:
    variant = variant_of(report.method)
    return TableCell(
        H=report.spec.hurst,
        L=report.spec.order,
        epsilon=report.epsilon,
        method=TableMethod.DIRECT.value if variant is None else TableMethod.PRODUCT.value,
        variant=None if variant is None else variant.value,
        epsilon_star=report.epsilon_star,
        truncated_norm_sq=report.truncated_norm_sq,
        defect_norm_sq=report.defect_norm_sq,
    )


def row_to_cell(row: ErrorCell) -> TableCell:
    ctx = make_context(row.precision_bits)
    parse = lambda text: None if text is None else ctx.from_decimal_string(text)  # noqa: E731
    return TableCell(
        H=row.hurst,
        L=row.order,
        epsilon=parse(row.epsilon),
        method=row.method,
        variant=row.variant or None,
        epsilon_star=parse(row.epsilon_star),
        truncated_norm_sq=parse(row.truncated_norm_sq),
        defect_norm_sq=parse(row.defect_norm_sq),
    )


class ResultStore:
    """Async access to the error_cells table."""

    def __init__(self, url: Optional[str] = None, engine: Optional[AsyncEngine] = None):
        self._engine = engine or make_engine(url)
        self._sessions = session_factory(self._engine)

    @property
    def engine(self) -> AsyncEngine:
        return self._engine

    async def create_tables(self) -> None:
        await create_db_and_tables(self._engine)

    async def get(self, key: StoreKey) -> Optional[ErrorCell]:
        async with self._sessions() as session:
            result = await session.execute(
                select(ErrorCell).where(
                    ErrorCell.hurst == key.hurst,
                    ErrorCell.horizon == key.horizon,
                    ErrorCell.order == key.order,
                    ErrorCell.method == key.method,
                    ErrorCell.variant == key.variant,
                    ErrorCell.precision_bits == key.precision_bits,
                )
            )
            return result.scalars().first()

    async def put(self, key: StoreKey, cell: TableCell) -> bool:
        """
        Store a cell under `key`.

        Returns:
            False if the key was already present (the stored row is kept)
        """
        ctx = make_context(key.precision_bits)
        fmt = lambda x: None if x is None else ctx.to_decimal_string(x)  # noqa: E731
        row = ErrorCell(
            hurst=key.hurst,
            horizon=key.horizon,
            order=key.order,
            method=key.method,
            variant=key.variant,
            precision_bits=key.precision_bits,
            epsilon=fmt(cell.epsilon),
            epsilon_star=fmt(cell.epsilon_star),
            defect_norm_sq=fmt(cell.defect_norm_sq),
            truncated_norm_sq=fmt(cell.truncated_norm_sq),
        )
        async with self._sessions() as session:
            session.add(row)
            try:
                await session.commit()
            except IntegrityError:
                await session.rollback()
                logger.info(f"Cell {key} already cached")
                return False
        return True

    async def put_report(self, report: ErrorReport) -> bool:
        return await self.put(key_for_report(report), cell_from_report(report))

    async def dispose(self) -> None:
        await self._engine.dispose()


async def cached_error_table(
    store: ResultStore,
    H_list: Sequence[str],
    L_list: Sequence[int],
    T: str,
    method: Union[TableMethod, str],
    variant: Optional[Union[TableVariant, str]],
    ctx: PrecisionContext,
    threads: Optional[int] = 1,
) -> ErrorTable:
    """
    error_table with cells looked up in, and new cells written to, `store`.
    The computation itself runs in a worker thread.
    """
    method = TableMethod(method)
    horizon = format_exact(parse_exact(T))
    hursts = [HurstSpec(hurst=h, horizon=horizon, order=1).hurst for h in H_list]

    def key(h: str, L: int) -> StoreKey:
        label = cell_variant(method, variant, h)
        stored = "" if label is None else concrete_variant(label, h).value
        return StoreKey(hurst=h, horizon=horizon, order=L, method=method.value,
                        variant=stored, precision_bits=ctx.bits)

    precomputed: Dict[CellKey, TableCell] = {}
    for h in hursts:
        for L in sorted(set(L_list)):
            row = await store.get(key(h, L))
            if row is not None:
                # keep the label the table asked for (paper stays paper)
                precomputed[(h, L)] = replace(row_to_cell(row), variant=cell_variant(method, variant, h))
    logger.info(f"Result cache: {len(precomputed)} of {len(hursts) * len(set(L_list))} cells found")

    table = await asyncio.to_thread(error_table, hursts, L_list, horizon, method, variant, ctx, threads, precomputed)
    for cell in table.cells:
        if (cell.H, cell.L) not in precomputed:
            await store.put(key(cell.H, cell.L), cell)
    return table
