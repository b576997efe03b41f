"""Seeded observation streams driving an observer.

Each step observes one element (from an explicit stream, or sampled by
drawing an atom from the world measure and reporting one of its true
answers), updates the conjectured state, and optionally degenerates the
least likely corner below a threshold. The run is recorded as a list of
JSON-ready records: a header, one record per step and per move, and a
final record carrying the excitation and the move-log audit.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, List, Optional, Sequence, Tuple

import numpy as np

from deformation import (
    AuditReport,
    DeformationError,
    MoveLog,
    apply_degeneration,
    audit_postulate,
    degeneration_candidates,
)
from median_dual import build_dual
from observer_update import (
    Observer,
    PropagationBudget,
    misperception_report,
    update_dissipative,
    update_idealized,
)
from pocset_core import (
    Element,
    ElementLike,
    PocMorphism,
    PocSet,
    PocSetError,
    compose,
    is_coherent,
)
from realization import Realization, Weight, encode_weight, pi_x

__all__ = [
    "GENERATOR",
    "Scenario",
    "SimulationError",
    "SimulationResult",
    "run_simulation",
]

logger = logging.getLogger(__name__)

GENERATOR = "PCG64"


class SimulationError(ValueError):
    """Raised for scenarios whose parts do not fit together."""


def _names(elements: FrozenSet[Element]) -> List[str]:
    return [str(e) for e in sorted(elements)]


@dataclass(frozen=True)
class Scenario:
    """Everything a run needs; the seed fixes any sampled stream."""

    name: str
    pocset: PocSet
    realization: Optional[Realization] = None
    stream: Optional[Tuple[Element, ...]] = None
    steps: int = 20
    seed: int = 0
    budget: PropagationBudget = field(default_factory=PropagationBudget)
    threshold: Optional[float] = None
    epsilon: FrozenSet[Element] = frozenset()
    initial_atom: Optional[int] = None
    excitation: Optional[Tuple[Weight, ...]] = None
    report_misperception: bool = False

    def __post_init__(self) -> None:
        if self.realization is not None and self.realization.pocset != self.pocset:
            raise SimulationError("Realization does not belong to the scenario poc-set")
        if self.stream is None and self.realization is None:
            raise SimulationError("A sampled stream needs a realization")
        if self.stream is not None:
            for element in self.stream:
                if element.is_trivial or element not in self.pocset:
                    raise SimulationError(f"Stream names unknown element {element}")
        if self.steps < 0:
            raise SimulationError(f"Step count must be non-negative, got {self.steps}")
        if self.seed < 0:
            raise SimulationError(f"Seed must be non-negative, got {self.seed}")
        if self.threshold is not None and not 0 < self.threshold <= 1:
            raise SimulationError(f"Threshold must lie in (0, 1], got {self.threshold}")
        if self.initial_atom is not None and self.realization is None:
            raise SimulationError("An initial atom needs a realization")
        if not self.pocset.alphabet:
            raise SimulationError("Nothing to observe on an empty alphabet")

    @classmethod
    def build(
        cls,
        name: str,
        pocset: PocSet,
        realization: Optional[Realization] = None,
        stream: Optional[Sequence[ElementLike]] = None,
        epsilon: Sequence[ElementLike] = (),
        *,
        steps: int = 20,
        seed: int = 0,
        budget: Optional[PropagationBudget] = None,
        threshold: Optional[float] = None,
        initial_atom: Optional[int] = None,
        report_misperception: bool = False,
    ) -> Scenario:
        """Resolve element names against ``pocset`` and build the scenario."""
        try:
            resolved = (
                tuple(pocset.proper(e) for e in stream) if stream is not None else None
            )
            conjecture = frozenset(pocset.proper(e) for e in epsilon)
        except PocSetError as exc:
            raise SimulationError(str(exc)) from exc
        return cls(
            name,
            pocset,
            realization=realization,
            stream=resolved,
            steps=steps,
            seed=seed,
            budget=budget or PropagationBudget.unbounded(),
            threshold=threshold,
            epsilon=conjecture,
            initial_atom=initial_atom,
            report_misperception=report_misperception,
        )

    @property
    def step_count(self) -> int:
        return len(self.stream) if self.stream is not None else self.steps


@dataclass
class SimulationResult:
    observer: Observer
    log: MoveLog
    records: List[Dict[str, object]]
    audit: Optional[AuditReport] = None


def _initial_observer(scenario: Scenario) -> Observer:
    graph = build_dual(scenario.pocset)
    epsilon = scenario.epsilon
    if scenario.initial_atom is not None:
        assert scenario.realization is not None
        epsilon = epsilon | pi_x(scenario.realization, scenario.initial_atom)
    if scenario.excitation is not None:
        return Observer.create(
            scenario.pocset,
            scenario.excitation,
            epsilon,
            scenario.realization,
            graph,
        )
    if scenario.realization is not None:
        observer = Observer.objective(scenario.realization, graph=graph)
        return observer.with_epsilon(epsilon)
    return Observer.create(scenario.pocset, epsilon=epsilon, graph=graph)


def _sample(
    scenario: Scenario, rng: np.random.Generator
) -> Tuple[int, Element]:
    realization = scenario.realization
    assert realization is not None
    mu = np.array([float(w) for w in realization.world.mu])
    atom = int(rng.choice(len(mu), p=mu / mu.sum()))
    answers = sorted(pi_x(realization, atom))
    return atom, answers[int(rng.integers(len(answers)))]


def run_simulation(scenario: Scenario) -> SimulationResult:
    """Run a scenario; identical scenarios produce identical records."""
    rng = np.random.default_rng(scenario.seed)
    observer = _initial_observer(scenario)
    log = MoveLog.start(observer)
    carried: PocMorphism = PocMorphism.identity(scenario.pocset)

    records: List[Dict[str, object]] = [
        {
            "type": "header",
            "scenario": scenario.name,
            "seed": scenario.seed,
            "generator": GENERATOR,
            "tags": list(scenario.pocset.alphabet),
            "steps": scenario.step_count,
            "budget": str(scenario.budget),
            "threshold": scenario.threshold,
            "epsilon": _names(observer.epsilon),
        }
    ]

    for step in range(scenario.step_count):
        atom: Optional[int] = None
        if scenario.stream is not None:
            seen = scenario.stream[step]
        else:
            atom, seen = _sample(scenario, rng)
        observed = carried(seen)

        if scenario.budget.is_unbounded:
            observer, report = update_idealized(observer, observed)
        else:
            observer, report = update_dissipative(observer, observed, scenario.budget)
        record: Dict[str, object] = {
            "type": "step",
            "step": step,
            "atom": atom,
            "observation": str(seen),
            "report": report.to_dict(),
            "epsilon": _names(observer.epsilon),
        }
        perceivable = atom is not None and observer.realization is not None
        if scenario.report_misperception and perceivable:
            assert atom is not None
            record["perception"] = misperception_report(observer, atom).to_dict()
        records.append(record)

        if scenario.threshold is None:
            continue
        for candidate in degeneration_candidates(observer, scenario.threshold):
            try:
                degenerated, move = apply_degeneration(observer, candidate.a, candidate.b)
            except DeformationError as exc:
                logger.debug("Skipping %s: %s", candidate.corner, exc)
                continue
            observer = degenerated
            log.append(move, observer)
            carried = compose(carried, move.retraction.morphism)
            records.append(
                {
                    "type": "move",
                    "step": step,
                    "corner": [str(candidate.a), str(candidate.b)],
                    "probability": str(candidate.probability),
                    **move.to_dict(),
                }
            )
            logger.info(
                "Step %d: degenerated %s (Pr = %s)",
                step,
                candidate.corner,
                candidate.probability,
            )
            break

    audit = audit_postulate(log) if len(log.snapshots) > 1 else None
    records.append(
        {
            "type": "final",
            "tags": list(observer.pocset.alphabet),
            "relations": [
                [str(x), str(y)] for x, y in observer.pocset.declared_relations()
            ],
            "epsilon": _names(observer.epsilon),
            "p": {
                str(i): encode_weight(w) for i, w in enumerate(observer.excitation) if w
            },
            "coherent": is_coherent(observer.pocset, observer.epsilon),
            "moves": len(log),
            "audit": audit.to_dict() if audit is not None else None,
        }
    )
    return SimulationResult(observer, log, records, audit)
