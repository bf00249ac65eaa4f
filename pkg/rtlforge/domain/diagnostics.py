from enum import StrEnum

from pydantic import BaseModel, ConfigDict


class Severity(StrEnum):
    ERROR = "error"
    WARNING = "warning"


class RuleId(StrEnum):
    # structure
    DUPLICATE_NAME = "duplicate-name"
    LITERAL_ONLY_TYPE = "literal-only-type"
    UNRESOLVED_TYPE = "unresolved-type"
    TYPE_CYCLE = "type-cycle"
    UNRESOLVED_NAME = "unresolved-name"
    ILLEGAL_TARGET = "illegal-target"
    DANGLING_ELSE = "dangling-else"
    DUPLICATE_CHOICE = "duplicate-choice"
    CHOICE_WIDTH = "choice-width"
    NESTED_BLOCK = "nested-block"
    MISPLACED_STATEMENT = "misplaced-statement"
    EMPTY_FSM = "empty-fsm"
    UNKNOWN_STATE = "unknown-state"
    EMPTY_BODY = "empty-body"
    BAD_IDENTIFIER = "bad-identifier"
    # typing
    LITERAL_TOO_WIDE = "literal-too-wide"
    ARITHMETIC_INTO_BIT = "arithmetic-into-bit"
    OPERAND_TOO_WIDE = "operand-too-wide"
    WIDTH_MISMATCH = "width-mismatch"
    TYPE_MISMATCH = "type-mismatch"
    NOT_A_CONDITION = "not-a-condition"
    INDEX_OUT_OF_RANGE = "index-out-of-range"
    UNKNOWN_FIELD = "unknown-field"
    RECORD_FIELDS = "record-fields"
    # elaboration
    MULTIPLE_DRIVERS = "multiple-drivers"
    COMBINATIONAL_CYCLE = "combinational-cycle"
    DANGLING_SIGNAL = "dangling-signal"
    UNDRIVEN_OUTPUT = "undriven-output"
    CONFLICTING_DEFINITION = "conflicting-definition"
    NOT_CONSTANT = "not-constant"
    # sexpir
    PARSE_ERROR = "parse-error"
    UNBALANCED_PARENS = "unbalanced-parens"
    STRAY_TOKEN = "stray-token"
    EMPTY_INPUT = "empty-input"
    UNKNOWN_FORM = "unknown-form"
    ARITY = "arity"
    MISSING_FIELD = "missing-field"
    BAD_WIDTH = "bad-width"
    UNRESOLVED_COMPONENT = "unresolved-component"
    # backends, simulation, cli
    UNSUPPORTED = "unsupported"
    NAME_COLLISION = "name-collision"
    UNKNOWN_SIGNAL = "unknown-signal"
    NOT_AN_INPUT = "not-an-input"
    BAD_VALUE = "bad-value"
    EXPECT_FAILED = "expect-failed"
    BAD_SCRIPT = "bad-script"
    INPUT_NOT_FOUND = "input-not-found"


class Diagnostic(BaseModel):
    """One structured finding of a toolchain pass."""

    model_config = ConfigDict(frozen=True)

    severity: Severity = Severity.ERROR
    rule: RuleId
    circuit: str = ""
    path: str = ""
    message: str
    line: int | None = None
    column: int | None = None

    @property
    def is_error(self) -> bool:
        return self.severity is Severity.ERROR

    def located(self, circuit: str | None = None, path: str | None = None) -> "Diagnostic":
        update: dict[str, str] = {}
        if circuit is not None and not self.circuit:
            update["circuit"] = circuit
        if path is not None and not self.path:
            update["path"] = path
        return self.model_copy(update=update) if update else self

    def format(self) -> str:
        where = self.path
        if self.line is not None:
            where = f"{where}@{self.line}:{self.column or 0}" if where else f"{self.line}:{self.column or 0}"
        return f"{self.severity} {self.rule} {self.circuit}.{where}: {self.message}"


def error(rule: RuleId, message: str, **location: object) -> Diagnostic:
    return Diagnostic(severity=Severity.ERROR, rule=rule, message=message, **location)


def warning(rule: RuleId, message: str, **location: object) -> Diagnostic:
    return Diagnostic(severity=Severity.WARNING, rule=rule, message=message, **location)


def has_errors(diagnostics: list[Diagnostic] | tuple[Diagnostic, ...]) -> bool:
    return any(d.is_error for d in diagnostics)
