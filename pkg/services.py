"""Service layer between the command line and the library modules."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

from deformation import DeformationError, degenerate, expand
from formats import (
    FormatError,
    dual_to_dot,
    dual_to_json,
    dump_json,
    load_json,
    parse_pocset,
    parse_scenario,
    pocset_to_json,
    realization_to_json,
    retraction_to_json,
)
from median_dual import SizeGuardError, build_dual
from observer_update import ObserverError
from pocset_core import PairRelation, PocSet, PocSetError, classify_pair, validate
from realization import Realization, RealizationError
from scenarios import build_scenario
from simulation import SimulationError, SimulationResult, run_simulation

logger = logging.getLogger(__name__)


@dataclass
class ServiceResult:
    """Generic result container for service operations."""

    success: bool
    message: str
    data: Optional[object] = None
    error_code: Optional[str] = None


def _read(path: str) -> Any:
    """Read and parse a JSON document.

    Raises:
        OSError: If the file cannot be read
        FormatError: If it is not JSON
    """
    text = Path(path).read_text(encoding="utf-8")
    return load_json(text, path)


class PocSetService:
    """Service for loading and validating poc-set files."""

    @staticmethod
    def load(path: str) -> ServiceResult:
        """Load and close the poc-set declared in ``path``."""
        try:
            pocset = parse_pocset(_read(path))
            return ServiceResult(
                success=True,
                message=f"Loaded {len(pocset.alphabet)} tags from {path}",
                data=pocset,
            )
        except OSError as e:
            return ServiceResult(
                success=False, message=f"Cannot read {path}: {e}", error_code="IO_ERROR"
            )
        except FormatError as e:
            return ServiceResult(success=False, message=str(e), error_code="PARSE_ERROR")
        except PocSetError as e:
            return ServiceResult(
                success=False, message=str(e), error_code="CLOSURE_FAILED"
            )

    @staticmethod
    def relation_table(pocset: PocSet) -> List[PairRelation]:
        """Classification of every unordered pair of positive tags."""
        tags = pocset.alphabet
        return [
            classify_pair(pocset, x, y)
            for i, x in enumerate(tags)
            for y in tags[i + 1 :]
        ]

    @staticmethod
    def validate(path: str) -> ServiceResult:
        """Validate a poc-set file and classify its pairs."""
        loaded = PocSetService.load(path)
        if not loaded.success:
            if loaded.error_code == "CLOSURE_FAILED":
                loaded.error_code = "VALIDATION_FAILED"
            return loaded
        pocset = loaded.data
        assert isinstance(pocset, PocSet)
        report = validate(pocset)
        if not report.ok:
            return ServiceResult(
                success=False, message=str(report), error_code="VALIDATION_FAILED"
            )
        return ServiceResult(
            success=True,
            message="ok",
            data={
                "pocset": pocset,
                "report": report,
                "pairs": PocSetService.relation_table(pocset),
            },
        )


class DualService:
    """Service for dual graph export."""

    FORMATS = ("dot", "json")

    @staticmethod
    def export(path: str, fmt: str = "dot") -> ServiceResult:
        """Render Γ(P) of the poc-set in ``path`` as DOT or JSON text."""
        if fmt not in DualService.FORMATS:
            return ServiceResult(
                success=False,
                message=f"Unknown format {fmt!r}",
                error_code="INVALID_ARGUMENT",
            )
        loaded = PocSetService.load(path)
        if not loaded.success:
            return loaded
        assert isinstance(loaded.data, PocSet)
        try:
            graph = build_dual(loaded.data)
        except SizeGuardError as e:
            return ServiceResult(success=False, message=str(e), error_code="SIZE_GUARD")
        text = dual_to_dot(graph) if fmt == "dot" else dump_json(dual_to_json(graph))
        return ServiceResult(
            success=True,
            message=f"{len(graph.vertices)} vertices, {len(graph.edges)} edges",
            data=text,
        )


class DeformationService:
    """Service for degeneration and expansion of poc-set files."""

    @staticmethod
    def degenerate(path: str, a: str, b: str) -> ServiceResult:
        """Collapse the corner V(a, b) of the poc-set in ``path``."""
        loaded = PocSetService.load(path)
        if not loaded.success:
            return loaded
        q = loaded.data
        assert isinstance(q, PocSet)
        try:
            p, retraction = degenerate(q, a, b)
        except DeformationError as e:
            return ServiceResult(
                success=False, message=str(e), error_code="DEGENERATION_FAILED"
            )
        unchanged = retraction.is_identity
        message = (
            f"Corner V({a}, {b}) is already empty; poc-set unchanged"
            if unchanged
            else f"Degenerated V({a}, {b}): {len(q.alphabet)} -> {len(p.alphabet)} tags"
        )
        return ServiceResult(
            success=True,
            message=message,
            data={
                "pocset": pocset_to_json(p),
                "retraction": retraction_to_json(retraction),
                "unchanged": unchanged,
            },
        )

    @staticmethod
    def expand(
        path: str,
        new_tag: Optional[str] = None,
        relax: Optional[Tuple[str, str]] = None,
    ) -> ServiceResult:
        """Add a fresh tag to, or relax a covering relation of, a poc-set file."""
        loaded = PocSetService.load(path)
        if not loaded.success:
            return loaded
        p = loaded.data
        assert isinstance(p, PocSet)
        try:
            q, retraction = expand(p, new_tag=new_tag, relax=relax)
        except DeformationError as e:
            return ServiceResult(
                success=False, message=str(e), error_code="INVALID_ARGUMENT"
            )
        return ServiceResult(
            success=True,
            message=f"Expanded to {len(q.alphabet)} tags",
            data={
                "pocset": pocset_to_json(q),
                "retraction": retraction_to_json(retraction),
            },
        )


class SimulationService:
    """Service for running scenario files."""

    @staticmethod
    def run(
        path: str,
        seed: Optional[int] = None,
        budget: Optional[str] = None,
        threshold: Optional[float] = None,
    ) -> ServiceResult:
        """Run the scenario in ``path``; a failed audit still returns the trace."""
        try:
            scenario = parse_scenario(_read(path), seed, budget, threshold)
            result = run_simulation(scenario)
        except OSError as e:
            return ServiceResult(
                success=False, message=f"Cannot read {path}: {e}", error_code="IO_ERROR"
            )
        except FormatError as e:
            return ServiceResult(success=False, message=str(e), error_code="PARSE_ERROR")
        except SizeGuardError as e:
            return ServiceResult(success=False, message=str(e), error_code="SIZE_GUARD")
        except (ObserverError, SimulationError) as e:
            return ServiceResult(
                success=False, message=str(e), error_code="INVALID_ARGUMENT"
            )
        except (PocSetError, RealizationError) as e:
            return ServiceResult(
                success=False, message=str(e), error_code="VALIDATION_FAILED"
            )

        if result.audit is not None and not result.audit.ok:
            return ServiceResult(
                success=False,
                message=f"Move log fails the audit: {result.audit.violation}",
                data=result,
                error_code="AUDIT_FAILED",
            )
        return SimulationService._summary(result)

    @staticmethod
    def _summary(result: SimulationResult) -> ServiceResult:
        steps = sum(1 for r in result.records if r["type"] == "step")
        return ServiceResult(
            success=True,
            message=f"{steps} steps, {len(result.log)} moves",
            data=result,
        )


class ScenarioService:
    """Service for writing built-in scenarios."""

    @staticmethod
    def generate(name: str, params: Sequence[float] = (), seed: int = 0) -> ServiceResult:
        """Build a scenario and return it as a JSON-ready document."""
        try:
            built = build_scenario(name, params, seed)
        except KeyError:
            return ServiceResult(
                success=False,
                message=f"Unknown scenario {name!r}",
                error_code="INVALID_ARGUMENT",
            )
        except (TypeError, ValueError) as e:
            return ServiceResult(
                success=False,
                message=f"Invalid parameters for {name}: {e}",
                error_code="INVALID_ARGUMENT",
            )
        document: Dict[str, Any]
        if isinstance(built, Realization):
            document = realization_to_json(built)
        else:
            document = pocset_to_json(built)
        logger.debug("Generated scenario %s", name)
        return ServiceResult(success=True, message=f"Generated {name}", data=document)
