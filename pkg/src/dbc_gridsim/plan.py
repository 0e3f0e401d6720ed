"""Parameter-sweep plan files: parsing, job generation and substitution.

A plan declares parameters and task scripts::

    # comment
    parameter angle_degree integer range from 1 to 165 step 1;
    parameter time_base_value integer default 5;
    parameter db label "database" text select oneof "a" "b" default "b";

    task main
        copy calc.$OS node:calc
        node:execute ./calc $angle_degree $time_base_value
        copy node:output ./output.$jobname
    endtask

Declarations end with ``;`` and may span lines; task commands are one per
line. Task commands are kept structurally and never executed.
"""

from __future__ import annotations

import itertools
import logging
import re
from collections.abc import Iterator, Mapping, Sequence
from dataclasses import dataclass, field
from enum import StrEnum

from .exceptions import PlanSyntaxError, PlanValidationError, UnboundMarkerError
from .models import DEFAULT_PLAN_HOME, DEFAULT_PLAN_OS
from .types import PlanLiteral

logger = logging.getLogger(__name__)

IDENTIFIER = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r\f]+)
    |(?P<comment>\#[^\n]*)
    |(?P<newline>\n)
    |(?P<string>"[^"\n]*")
    |(?P<semi>;)
    |(?P<word>[^\s;"\#]+)
    """,
    re.VERBOSE,
)

_PLAIN_WORD = re.compile(r'[^\s;"\#]+')


class ParamType(StrEnum):
    INTEGER = "integer"
    FLOAT = "float"
    TEXT = "text"


class TaskName(StrEnum):
    MAIN = "main"
    NODESTART = "nodestart"


@dataclass(frozen=True, slots=True)
class RangeKind:
    """Inclusive integer range."""

    start: int
    stop: int
    step: int = 1

    def values(self) -> list[PlanLiteral]:
        end = self.stop + (1 if self.step > 0 else -1)
        return list(range(self.start, end, self.step))


@dataclass(frozen=True, slots=True)
class DefaultKind:
    value: PlanLiteral

    def values(self) -> list[PlanLiteral]:
        return [self.value]


@dataclass(frozen=True, slots=True)
class SelectKind:
    """Choice among text options; contributes only the default unless overridden."""

    options: tuple[str, ...]
    default: str

    def values(self) -> list[PlanLiteral]:
        return [self.default]


type ParameterKind = RangeKind | DefaultKind | SelectKind


@dataclass(frozen=True, slots=True)
class ParameterDecl:
    name: str
    type: ParamType
    kind: ParameterKind
    label: str | None = None
    line: int = field(default=0, compare=False)
    col: int = field(default=0, compare=False)


@dataclass(frozen=True, slots=True)
class CopyCommand:
    source: str
    dest: str


@dataclass(frozen=True, slots=True)
class SubstituteCommand:
    template: str
    output: str
    remote: bool = False


@dataclass(frozen=True, slots=True)
class ExecuteCommand:
    args: tuple[str, ...]
    remote: bool = False


type Command = CopyCommand | SubstituteCommand | ExecuteCommand


@dataclass(frozen=True, slots=True)
class TaskScript:
    name: TaskName
    commands: tuple[Command, ...] = ()


@dataclass(frozen=True, slots=True)
class PlanAst:
    parameters: tuple[ParameterDecl, ...] = ()
    tasks: tuple[TaskScript, ...] = ()

    def parameter(self, name: str) -> ParameterDecl | None:
        return next((p for p in self.parameters if p.name == name), None)

    def task(self, name: str) -> TaskScript | None:
        return next((t for t in self.tasks if t.name == name), None)


@dataclass(frozen=True)
class JobBinding:
    """Values of one generated job, plus the pseudo-parameters."""

    job_index: int
    values: Mapping[str, PlanLiteral]
    pseudo: Mapping[str, str]

    def lookup(self, name: str) -> PlanLiteral | None:
        if name in self.values:
            return self.values[name]
        return self.pseudo.get(name)

    def key(self) -> tuple[PlanLiteral, ...]:
        return tuple(self.values.values())


# Tokenizer


@dataclass(frozen=True, slots=True)
class _Token:
    kind: str
    text: str
    line: int
    col: int


def _tokenize(text: str) -> list[_Token]:
    tokens: list[_Token] = []
    line, line_start, pos = 1, 0, 0
    while pos < len(text):
        match = _TOKEN_RE.match(text, pos)
        col = pos - line_start + 1
        if match is None:
            raise PlanSyntaxError("unterminated string", line, col, 'closing \'"\'')
        kind = match.lastgroup or ""
        if kind == "newline":
            tokens.append(_Token("newline", "\n", line, col))
            line += 1
            line_start = match.end()
        elif kind in {"string", "semi", "word"}:
            tokens.append(_Token(kind, match.group(), line, col))
        pos = match.end()
    tokens.append(_Token("eof", "", line, pos - line_start + 1))
    return tokens


# Parser


class _PlanParser:
    def __init__(self, text: str) -> None:
        self._tokens = _tokenize(text)
        self._index = 0

    def _peek(self) -> _Token:
        return self._tokens[self._index]

    def _next(self) -> _Token:
        token = self._tokens[self._index]
        if token.kind != "eof":
            self._index += 1
        return token

    def _error(self, token: _Token, expected: str) -> PlanSyntaxError:
        found = "end of input" if token.kind == "eof" else repr(token.text.strip())
        return PlanSyntaxError(f"unexpected {found}", token.line, token.col, expected)

    def _skip_newlines(self) -> None:
        while self._peek().kind == "newline":
            self._next()

    def _decl_token(self) -> _Token:
        """Next token of a declaration; declarations ignore line breaks."""
        self._skip_newlines()
        return self._next()

    def _expect_keyword(self, keyword: str) -> _Token:
        token = self._decl_token()
        if token.kind != "word" or token.text != keyword:
            raise self._error(token, f"'{keyword}'")
        return token

    def _expect_int(self) -> int:
        token = self._decl_token()
        if token.kind == "word" and re.fullmatch(r"[+-]?\d+", token.text):
            return int(token.text)
        raise self._error(token, "integer literal")

    def parse(self) -> PlanAst:
        parameters: list[ParameterDecl] = []
        tasks: list[TaskScript] = []
        while True:
            self._skip_newlines()
            token = self._peek()
            if token.kind == "eof":
                break
            if token.kind == "word" and token.text == "parameter":
                decl = self._parameter()
                if any(p.name == decl.name for p in parameters):
                    raise PlanValidationError(
                        f"line {decl.line}: duplicate parameter {decl.name!r}"
                    )
                parameters.append(decl)
            elif token.kind == "word" and token.text == "task":
                task = self._task()
                if any(t.name == task.name for t in tasks):
                    raise PlanValidationError(f"duplicate task {task.name.value!r}")
                tasks.append(task)
            else:
                raise self._error(token, "'parameter' or 'task'")
        return PlanAst(parameters=tuple(parameters), tasks=tuple(tasks))

    def _parameter(self) -> ParameterDecl:
        start = self._next()
        name_token = self._decl_token()
        if name_token.kind != "word" or not IDENTIFIER.fullmatch(name_token.text):
            raise self._error(name_token, "parameter name")
        label = None
        token = self._decl_token()
        if token.kind == "word" and token.text == "label":
            label_token = self._decl_token()
            if label_token.kind != "string":
                raise self._error(label_token, "quoted label")
            label = label_token.text[1:-1]
            token = self._decl_token()
        try:
            param_type = ParamType(token.text) if token.kind == "word" else None
        except ValueError:
            param_type = None
        if param_type is None:
            raise self._error(token, "'integer', 'float' or 'text'")
        kind = self._kind(name_token.text, param_type)
        end = self._decl_token()
        if end.kind != "semi":
            raise self._error(end, "';'")
        return ParameterDecl(
            name=name_token.text,
            type=param_type,
            kind=kind,
            label=label,
            line=start.line,
            col=start.col,
        )

    def _kind(self, name: str, param_type: ParamType) -> ParameterKind:
        token = self._decl_token()
        match token.text if token.kind == "word" else None:
            case "range":
                return self._range(name, param_type, token)
            case "default":
                return DefaultKind(self._literal(param_type))
            case "select":
                return self._select(name, param_type, token)
            case _:
                raise self._error(token, "'range', 'default' or 'select'")

    def _range(self, name: str, param_type: ParamType, at: _Token) -> RangeKind:
        if param_type is not ParamType.INTEGER:
            raise PlanValidationError(
                f"line {at.line}: parameter {name!r}: only integer ranges are "
                f"supported, not {param_type.value}"
            )
        self._expect_keyword("from")
        start = self._expect_int()
        self._expect_keyword("to")
        stop = self._expect_int()
        step = 1
        self._skip_newlines()
        if self._peek().kind == "word" and self._peek().text == "step":
            self._next()
            step = self._expect_int()
        if step == 0 or (stop - start) * step < 0:
            raise PlanValidationError(
                f"line {at.line}: parameter {name!r}: bad range "
                f"from {start} to {stop} step {step}"
            )
        return RangeKind(start=start, stop=stop, step=step)

    def _literal(self, param_type: ParamType) -> PlanLiteral:
        token = self._decl_token()
        if param_type is ParamType.TEXT:
            if token.kind == "string":
                return token.text[1:-1]
            if token.kind == "word":
                return token.text
            raise self._error(token, "text literal")
        try:
            if token.kind != "word":
                raise ValueError(token.text)
            if param_type is ParamType.INTEGER:
                return int(token.text)
            return float(token.text)
        except ValueError:
            raise self._error(token, f"{param_type.value} literal") from None

    def _select(self, name: str, param_type: ParamType, at: _Token) -> SelectKind:
        if param_type is not ParamType.TEXT:
            raise PlanValidationError(
                f"line {at.line}: parameter {name!r}: select requires type text"
            )
        self._expect_keyword("oneof")
        options: list[str] = []
        default: str | None = None
        while True:
            self._skip_newlines()
            token = self._peek()
            if token.kind == "string":
                options.append(self._next().text[1:-1])
            elif token.kind == "word" and token.text == "default" and options:
                self._next()
                value = self._decl_token()
                if value.kind != "string":
                    raise self._error(value, "quoted default option")
                default = value.text[1:-1]
                break
            elif options:
                break
            else:
                raise self._error(token, "quoted option")
        if default is None:
            default = options[0]
        elif default not in options:
            raise PlanValidationError(
                f"line {at.line}: parameter {name!r}: default {default!r} "
                "is not one of the options"
            )
        return SelectKind(options=tuple(options), default=default)

    def _line_words(self) -> list[_Token]:
        words: list[_Token] = []
        while self._peek().kind not in {"newline", "eof"}:
            token = self._next()
            if token.kind == "semi":
                raise self._error(token, "command argument")
            words.append(token)
        return words

    def _task(self) -> TaskScript:
        self._next()
        name_token = self._next()
        try:
            name = TaskName(name_token.text)
        except ValueError:
            raise self._error(name_token, "'main' or 'nodestart'") from None
        trailing = self._line_words()
        if trailing:
            raise self._error(trailing[0], "end of line")
        commands: list[Command] = []
        while True:
            self._skip_newlines()
            if self._peek().kind == "eof":
                raise self._error(self._peek(), "'endtask'")
            words = self._line_words()
            if words[0].text == "endtask" and len(words) == 1:
                return TaskScript(name=name, commands=tuple(commands))
            commands.append(self._command(words))

    def _command(self, words: list[_Token]) -> Command:
        head = words[0]
        verb = head.text
        remote = verb.startswith("node:")
        if remote:
            verb = verb.removeprefix("node:")
        args = [w.text[1:-1] if w.kind == "string" else w.text for w in words[1:]]
        match verb:
            case "copy" if not remote:
                if len(args) != 2:
                    raise self._arity(head, "source and destination")
                return CopyCommand(source=args[0], dest=args[1])
            case "substitute":
                if len(args) != 2:
                    raise self._arity(head, "template and output")
                return SubstituteCommand(
                    template=args[0], output=args[1], remote=remote
                )
            case "execute":
                if not args:
                    raise self._arity(head, "command to execute")
                return ExecuteCommand(args=tuple(args), remote=remote)
            case _:
                raise self._error(head, "'copy', 'substitute' or 'execute'")

    def _arity(self, head: _Token, expected: str) -> PlanSyntaxError:
        return PlanSyntaxError(
            f"wrong number of arguments to {head.text!r}", head.line, head.col, expected
        )


def parse_plan(text: str) -> PlanAst:
    """Parse plan text into an AST.

    Raises:
        PlanSyntaxError: With line, column and what was expected.
        PlanValidationError: Duplicate parameter, bad or float range.
    """
    ast = _PlanParser(text).parse()
    logger.debug(
        "Parsed plan: %d parameters, %d tasks", len(ast.parameters), len(ast.tasks)
    )
    return ast


# Pretty printer


def _format_literal(value: PlanLiteral, param_type: ParamType) -> str:
    if param_type is ParamType.TEXT:
        return f'"{value}"'
    if param_type is ParamType.FLOAT:
        return repr(float(value))
    return str(value)


def _unparse_parameter(decl: ParameterDecl) -> str:
    parts = ["parameter", decl.name]
    if decl.label is not None:
        parts += ["label", f'"{decl.label}"']
    parts.append(decl.type.value)
    match decl.kind:
        case RangeKind(start=start, stop=stop, step=step):
            parts += ["range", "from", str(start), "to", str(stop), "step", str(step)]
        case DefaultKind(value=value):
            parts += ["default", _format_literal(value, decl.type)]
        case SelectKind(options=options, default=default):
            parts += ["select", "oneof", *(f'"{o}"' for o in options)]
            parts += ["default", f'"{default}"']
    return " ".join(parts) + ";"


def _quote_arg(arg: str) -> str:
    """Quote an argument unless it lexes back as a single plain word."""
    if _PLAIN_WORD.fullmatch(arg):
        return arg
    return f'"{arg}"'


def _unparse_command(command: Command) -> str:
    match command:
        case CopyCommand(source=source, dest=dest):
            return f"copy {_quote_arg(source)} {_quote_arg(dest)}"
        case SubstituteCommand(template=template, output=output, remote=remote):
            prefix = "node:" if remote else ""
            return f"{prefix}substitute {_quote_arg(template)} {_quote_arg(output)}"
        case ExecuteCommand(args=args, remote=remote):
            prefix = "node:" if remote else ""
            return f"{prefix}execute {' '.join(_quote_arg(a) for a in args)}"


def unparse(ast: PlanAst) -> str:
    """Render an AST in canonical form; parsing the output yields an equal AST."""
    blocks: list[str] = []
    if ast.parameters:
        blocks.append("\n".join(_unparse_parameter(p) for p in ast.parameters))
    for task in ast.tasks:
        lines = [f"task {task.name.value}"]
        lines += [f"    {_unparse_command(c)}" for c in task.commands]
        lines.append("endtask")
        blocks.append("\n".join(lines))
    return "\n\n".join(blocks) + ("\n" if blocks else "")


# Job generation


def _coerce(decl: ParameterDecl, raw: PlanLiteral) -> PlanLiteral:
    try:
        match decl.type:
            case ParamType.INTEGER:
                return int(raw)
            case ParamType.FLOAT:
                return float(raw)
            case ParamType.TEXT:
                return str(raw)
    except ValueError:
        raise PlanValidationError(
            f"override for {decl.name!r}: {raw!r} is not a valid {decl.type.value}"
        ) from None


def _override_values(
    decl: ParameterDecl, raw_values: Sequence[PlanLiteral]
) -> list[PlanLiteral]:
    if not raw_values:
        raise PlanValidationError(f"override for {decl.name!r} selects no values")
    values = [_coerce(decl, raw) for raw in raw_values]
    allowed: Sequence[PlanLiteral] | None = None
    match decl.kind:
        case RangeKind():
            allowed = decl.kind.values()
        case SelectKind(options=options):
            allowed = options
        case DefaultKind():
            allowed = None
    if allowed is not None:
        outside = [v for v in values if v not in allowed]
        if outside:
            raise PlanValidationError(
                f"override for {decl.name!r}: {outside!r} not among declared values"
            )
    return values


def parameter_values(
    ast: PlanAst, overrides: Mapping[str, Sequence[PlanLiteral]] | None = None
) -> dict[str, list[PlanLiteral]]:
    """Value set of every declared parameter after applying overrides.

    Raises:
        PlanValidationError: If an override names an undeclared parameter or
            selects values the declaration does not allow.
    """
    overrides = overrides or {}
    unknown = [name for name in overrides if ast.parameter(name) is None]
    if unknown:
        raise PlanValidationError(f"override of undeclared parameter(s): {unknown}")
    return {
        decl.name: (
            _override_values(decl, overrides[decl.name])
            if decl.name in overrides
            else decl.kind.values()
        )
        for decl in ast.parameters
    }


def iter_jobs(
    ast: PlanAst,
    overrides: Mapping[str, Sequence[PlanLiteral]] | None = None,
    *,
    os: str = DEFAULT_PLAN_OS,
    home: str = DEFAULT_PLAN_HOME,
) -> Iterator[JobBinding]:
    value_sets = parameter_values(ast, overrides)
    names = list(value_sets)
    for index, combo in enumerate(itertools.product(*value_sets.values())):
        yield JobBinding(
            job_index=index,
            values=dict(zip(names, combo, strict=True)),
            pseudo={"jobname": str(index), "OS": os, "HOME": home},
        )


def generate_jobs(
    ast: PlanAst,
    overrides: Mapping[str, Sequence[PlanLiteral]] | None = None,
    *,
    os: str = DEFAULT_PLAN_OS,
    home: str = DEFAULT_PLAN_HOME,
) -> list[JobBinding]:
    """Expand the cross product of parameter values in declaration order.

    The last declared parameter varies fastest; ``job_index`` counts from 0
    and ``jobname`` is its decimal text.
    """
    jobs = list(iter_jobs(ast, overrides, os=os, home=home))
    logger.debug("Generated %d jobs", len(jobs))
    return jobs


def job_count(
    ast: PlanAst, overrides: Mapping[str, Sequence[PlanLiteral]] | None = None
) -> int:
    count = 1
    for values in parameter_values(ast, overrides).values():
        count *= len(values)
    return count


# Substitution


def _value_text(value: PlanLiteral) -> str:
    return str(value)


def substitute(template: str, binding: JobBinding) -> str:
    """Replace ``$name`` and ``${name}`` markers with bound values.

    ``$$`` yields a literal dollar; a ``$`` not followed by a name or brace
    is kept as is. Replacement text is not scanned again.

    Raises:
        UnboundMarkerError: If a marker names nothing in the binding.
    """
    out: list[str] = []
    pos = 0
    while pos < len(template):
        dollar = template.find("$", pos)
        if dollar < 0:
            out.append(template[pos:])
            break
        out.append(template[pos:dollar])
        after = dollar + 1
        if template.startswith("$", after):
            out.append("$")
            pos = after + 1
            continue
        if template.startswith("{", after):
            close = template.find("}", after)
            name = template[after + 1 : close] if close >= 0 else template[after + 1 :]
            if close < 0 or not IDENTIFIER.fullmatch(name):
                raise UnboundMarkerError(name, dollar)
            pos = close + 1
        else:
            match = IDENTIFIER.match(template, after)
            if match is None:
                out.append("$")
                pos = after
                continue
            name = match.group()
            pos = match.end()
        value = binding.lookup(name)
        if value is None:
            raise UnboundMarkerError(name, dollar)
        out.append(_value_text(value))
    return "".join(out)


def binding_table(ast: PlanAst, bindings: Sequence[JobBinding]) -> list[list[str]]:
    """Header of parameter names, then one row of value text per job."""
    names = [decl.name for decl in ast.parameters]
    rows = [["jobname", *names]]
    rows += [
        [b.pseudo["jobname"], *(_value_text(b.values[name]) for name in names)]
        for b in bindings
    ]
    return rows
