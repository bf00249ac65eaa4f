from typing import Any

from rtlforge.core.logging import get_logger
from rtlforge.domain.errors import EmissionError
from rtlforge.domain.diagnostics import RuleId, error

logger = get_logger(__name__)


class Visitor:
    """Read-only pass over IR nodes, dispatching on ``visit_<ClassName>``."""

    name = "visitor"

    def visit(self, node: Any, *args: Any) -> Any:
        method = getattr(self, f"visit_{type(node).__name__}", self.generic_visit)
        return method(node, *args)

    def generic_visit(self, node: Any, *args: Any) -> Any:
        logger.debug("%s: no visitor for %s", self.name, type(node).__name__)
        raise EmissionError(error(RuleId.UNSUPPORTED, f"{self.name} cannot render {type(node).__name__}"))
