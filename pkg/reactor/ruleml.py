# Reaction RuleML interchange.
#
#   Const      <Ind>a</Ind>
#   Num        <Data type="xsd:integer">1</Data>
#   Str        <Data>text</Data>
#   TimePoint  <Data type="xsd:dateTime">2005-01-01T00:00:01.000Z</Data>
#   Var        <Var>X</Var>
#   f(..)      <Atom><Rel>f</Rel>..</Atom> where a formula is expected,
#              <Expr><Fun>f</Fun>..</Expr> inside another term
#   [a|T]      <Plex>a<repo>T</repo></Plex>
#   , ; not neg
#              <And> <Or> <Naf> <Neg>
#   sequence or and xor concurrent neg/2 any aperiodic periodic
#              <Sequence> <Disjunction> <Conjunction> <Xor> <Concurrent>
#              <Not> <Any> <Aperiodic> <Periodic>
#
# Attributes we have no term for (type="owlTime:Year", mode="-", an
# Atom's <oid>) travel as annotated(Term, [name = Value, ...]).
import logging
import re
import xml.etree.ElementTree as ET
from pathlib import Path
import attr
from reactor.errors import Unserializable, MalformedXml, RuleMLImportError
from reactor.eca import EcaRule, SLOTS, normalize_eca
from reactor.messaging.reactions import Message
from reactor.parser import Clause, conjuncts
from reactor.terms import Var, Const, Str, Num, TimePoint, Struct, PList, TRUE, make_struct

logger = logging.getLogger("reactor.ruleml")

SCHEMA_PATH = Path(__file__).parent / "templates" / "reaction_ruleml.xsd"

ANNOTATED = "annotated"
DIRECTIVE_PREFIX = "ACL:"
MODES = ("+", "-", "?")

EVENT_ELEMENTS = {
    "sequence": "Sequence",
    "or": "Disjunction",
    "and": "Conjunction",
    "xor": "Xor",
    "concurrent": "Concurrent",
    "any": "Any",
    "aperiodic": "Aperiodic",
    "periodic": "Periodic",
}
EVENT_FUNCTORS = {element: functor for functor, element in EVENT_ELEMENTS.items()}
EVENT_FUNCTORS["Not"] = "neg"

CONNECTIVES = {",": "And", ";": "Or"}
NEGATIONS = {"not": "Naf", "neg": "Neg"}

NUMBER_TYPES = ("xsd:integer", "xsd:double")
DATETIME_TYPE = "xsd:dateTime"
DATETIME_RE = re.compile(r"(\d{4})-(\d\d)-(\d\d)T(\d\d):(\d\d):(\d\d)(?:\.(\d{3}))?Z?")

# Rule parts in document order, with the EcaRule slot each one fills
RULE_PARTS = (
    "oid", "label", "qualification",
    "time", "on", "if", "then", "do", "after",
    "else", "elseDo", "elseAfter",
)  # fmt: skip
ECA_PARTS = {
    "time": "time",
    "on": "event",
    "if": "condition",
    "do": "action",
    "after": "post",
    "elseDo": "else_",
}


@attr.s(frozen=True, slots=True)
class ReactionRule:
    """
    A <Rule> whose parts make it neither a derivation rule nor an
    ECA-family rule (if-then-elseDo, else conclusions, elseAfter).
    It is carried through import and export but never executed.
    """

    parts = attr.ib(converter=lambda parts: tuple(sorted(parts.items())))
    execution = attr.ib(default="reasoning")
    eval = attr.ib(default="strong")

    def part(self, name):
        return dict(self.parts).get(name)


def _check_modes(instance, attribute, value):
    for _, _, mode in value:
        if mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {mode}")


@attr.s(frozen=True, slots=True)
class InterfaceDecl:
    functor = attr.ib()
    # (variable name, type tag or None, mode)
    args = attr.ib(converter=tuple, validator=_check_modes)
    description = attr.ib(default="")

    def to_term(self):
        signature = []
        for name, type_tag, mode in self.args:
            entries = [] if type_tag is None else [("type", Str(type_tag))]
            entries.append(("mode", Str(mode)))
            signature.append(annotate(Var(name), entries))
        return Struct(
            "interface", (make_struct(self.functor, signature), Const(self.description))
        )

    def to_clause(self):
        return Clause(self.to_term())

    @classmethod
    def from_term(cls, term):
        signature, description = term.args
        args = []
        for arg in getattr(signature, "args", ()):
            inner, entries = unannotate(arg)
            entries = dict(entries)
            type_tag = entries.get("type")
            mode = entries.get("mode", Str("?"))
            args.append(
                (
                    inner.name if isinstance(inner, Var) else str(inner),
                    None if type_tag is None else type_tag.value,
                    mode.value,
                )
            )
        functor = signature.functor if isinstance(signature, Struct) else signature.symbol
        text = description.symbol if isinstance(description, Const) else description.value
        return cls(functor, args, text)


def interfaces(items):
    return [
        InterfaceDecl.from_term(item.head)
        for item in items
        if isinstance(item, Clause) and item.is_fact() and item.key == ("interface", 2)
    ]


# *********************************************
# Annotations
# *********************************************
def annotate(term, entries):
    if not entries:
        return term
    pairs = [Struct("=", (Const(name), value)) for name, value in entries]
    return Struct(ANNOTATED, (term, PList(tuple(pairs))))


def unannotate(term):
    if isinstance(term, Struct) and term.key == (ANNOTATED, 2) and isinstance(term.args[1], PList):
        entries = [(pair.args[0].symbol, pair.args[1]) for pair in term.args[1].items]
        return term.args[0], entries
    return term, []


# *********************************************
# Export
# *********************************************
def _text_element(tag, text, **attributes):
    element = ET.Element(tag, attributes)
    element.text = text
    return element


def _timestamp(point):
    (year, month, day, hour, minute, second), millis = point.fields()
    return f"{year:04d}-{month:02d}-{day:02d}T{hour:02d}:{minute:02d}:{second:02d}.{millis:03d}Z"


def _flatten(term, functor):
    items = []
    while isinstance(term, Struct) and term.key == (functor, 2):
        items.append(term.args[0])
        term = term.args[1]
    items.append(term)
    return items


def term_element(term, formula=False):
    inner, entries = unannotate(term)
    element = _bare_element(inner, formula)
    for name, value in entries:
        if name == "oid":
            oid = ET.Element("oid")
            oid.append(term_element(value))
            element.insert(0, oid)
        elif name.startswith("rel:"):
            head = element.find("Rel")
            if head is None:
                head = element.find("Fun")
            head.set(name[4:], value.value)
            if name == "rel:uri" and head.text == value.value:
                head.text = None
        else:
            element.set(name, value.value if isinstance(value, Str) else str(value))
    return element


def _bare_element(term, formula):
    if isinstance(term, Var):
        return _text_element("Var", str(term))
    if isinstance(term, Const):
        if formula:
            atom = ET.Element("Atom")
            atom.append(_text_element("Rel", term.symbol))
            return atom
        return _text_element("Ind", term.symbol)
    if isinstance(term, Str):
        return _text_element("Data", term.value)
    if isinstance(term, Num):
        if isinstance(term.value, int):
            return _text_element("Data", str(term.value), type="xsd:integer")
        return _text_element("Data", repr(float(term.value)), type="xsd:double")
    if isinstance(term, TimePoint):
        return _text_element("Data", _timestamp(term), type=DATETIME_TYPE)
    if isinstance(term, PList):
        plex = ET.Element("Plex")
        for item in term.items:
            plex.append(term_element(item))
        if term.tail is not None:
            repo = ET.SubElement(plex, "repo")
            repo.append(term_element(term.tail))
        return plex
    if isinstance(term, Struct):
        return _struct_element(term, formula)
    raise Unserializable(term)


def _struct_element(term, formula):
    functor, args = term.functor, term.args
    if "." in functor:
        raise Unserializable(term)
    if functor in CONNECTIVES and len(args) == 2:
        element = ET.Element(CONNECTIVES[functor])
        for item in _flatten(term, functor):
            element.append(term_element(item, formula=True))
        return element
    if functor in NEGATIONS and len(args) == 1:
        element = ET.Element(NEGATIONS[functor])
        element.append(term_element(args[0], formula=True))
        return element
    if functor == "neg" and len(args) == 2:
        tag = "Not"
    else:
        tag = EVENT_ELEMENTS.get(functor)
    if tag is not None:
        element = ET.Element(tag)
        for arg in args:
            element.append(term_element(arg))
        return element

    element = ET.Element("Atom" if formula else "Expr")
    element.append(_text_element("Rel" if formula else "Fun", functor))
    for arg in args:
        element.append(term_element(arg))
    return element


def _part(tag, term, formula=True):
    element = ET.Element(tag)
    element.append(term_element(term, formula))
    return element


def clause_element(clause):
    if clause.is_fact():
        return term_element(clause.head, formula=True)
    rule = ET.Element("Rule", execution="reasoning")
    condition = ET.SubElement(rule, "if")
    if len(clause.body) == 1:
        condition.append(term_element(clause.body[0], formula=True))
    else:
        both = ET.SubElement(condition, "And")
        for goal in clause.body:
            both.append(term_element(goal, formula=True))
    rule.append(_part("then", clause.head))
    return rule


def eca_element(rule):
    element = ET.Element("Rule", execution="active")
    if rule.source_oid is not None:
        element.append(_part("oid", rule.source_oid, formula=False))
    if rule.rule_id is not None:
        element.append(_text_element("label", rule.rule_id))
    for tag in RULE_PARTS:
        slot = ECA_PARTS.get(tag)
        if slot is None:
            continue
        term = getattr(rule, slot)
        # do is kept even when blank, it marks the rule as ECA on import
        if term != TRUE or tag == "do":
            element.append(_part(tag, term))
    return element


def reaction_rule_element(rule):
    element = ET.Element("Rule", execution=rule.execution, eval=rule.eval)
    for tag in RULE_PARTS:
        term = rule.part(tag)
        if term is None:
            continue
        if tag == "label":
            element.append(_text_element("label", term.value))
        else:
            element.append(_part(tag, term, formula=tag not in ("oid", "qualification")))
    return element


def _performative(message):
    if not isinstance(message.performative, Const):
        raise Unserializable(message.performative)
    return DIRECTIVE_PREFIX + message.performative.symbol


def message_element(message):
    element = ET.Element("Message", mode=message.mode, directive=_performative(message))
    element.append(_part("oid", message.xid, formula=False))
    element.append(_part("protocol", Const(message.protocol), formula=False))
    element.append(_part("sender", message.sender, formula=False))
    if message.receiver is not None:
        element.append(_part("receiver", message.receiver, formula=False))
    element.append(_part("content", message.payload))
    for term in message.context:
        element.append(_part("context", term, formula=False))
    return element


def item_element(item):
    if isinstance(item, Clause):
        return clause_element(item)
    if isinstance(item, EcaRule):
        return eca_element(item)
    if isinstance(item, ReactionRule):
        return reaction_rule_element(item)
    if isinstance(item, Message):
        return message_element(item)
    if isinstance(item, InterfaceDecl):
        return clause_element(item.to_clause())
    return term_element(item, formula=True)


def export(items):
    root = ET.Element("RuleML")
    for item in items:
        root.append(item_element(item))
    ET.indent(root)
    return ET.tostring(root, encoding="unicode")


def message_to_xml(message):
    return export([message])


# *********************************************
# Import
# *********************************************
class _Reader:
    """
    One import run. Unknown elements are collected instead of raised
    so the error names all of them.
    """

    def __init__(self):
        self.unknown = []

    def children(self, element):
        return list(element)

    def only_child(self, element):
        children = self.children(element)
        if len(children) != 1:
            raise MalformedXml(element.tag, f"<{element.tag}> needs exactly one child")
        return children[0]

    def term(self, element):
        tag = element.tag
        entries = [(name, Str(value)) for name, value in element.attrib.items()]
        text = (element.text or "").strip()
        if tag == "Ind":
            return annotate(Const(text), entries)
        if tag == "Var":
            return annotate(Var(text or "_"), entries)
        if tag == "Data":
            return self.data(element, entries)
        if tag in ("Atom", "Expr"):
            return self.compound(element, entries)
        if tag == "Plex":
            return annotate(self.plex(element), entries)
        if tag in ("And", "Or"):
            functor = "," if tag == "And" else ";"
            items = [self.term(child) for child in self.children(element)]
            if not items:
                return TRUE if tag == "And" else Const("fail")
            folded = items[-1]
            for item in reversed(items[:-1]):
                folded = Struct(functor, (item, folded))
            return annotate(folded, entries)
        if tag in ("Naf", "Neg"):
            functor = "not" if tag == "Naf" else "neg"
            return annotate(Struct(functor, (self.term(self.only_child(element)),)), entries)
        if tag in EVENT_FUNCTORS:
            args = [self.term(child) for child in self.children(element)]
            return annotate(make_struct(EVENT_FUNCTORS[tag], args), entries)
        self.unknown.append(tag)
        return TRUE

    def data(self, element, entries):
        raw = element.text or ""
        data_type = element.get("type")
        if data_type in NUMBER_TYPES:
            entries = [e for e in entries if e[0] != "type"]
            value = int(raw.strip()) if data_type == "xsd:integer" else float(raw.strip())
            return annotate(Num(value), entries)
        if data_type == DATETIME_TYPE:
            match = DATETIME_RE.fullmatch(raw.strip())
            if match is None:
                raise MalformedXml("Data", f"bad {DATETIME_TYPE} {raw.strip()}")
            fields = [int(g) for g in match.groups(default="0")]
            entries = [e for e in entries if e[0] != "type"]
            return annotate(TimePoint.from_fields(*fields), entries)
        return annotate(Str(raw), entries)

    def compound(self, element, entries):
        children = self.children(element)
        head_tag = "Rel" if element.tag == "Atom" else "Fun"
        if children and children[0].tag == "oid":
            entries = [("oid", self.term(self.only_child(children[0])))] + entries
            children = children[1:]
        if not children or children[0].tag != head_tag:
            raise MalformedXml(element.tag, f"<{element.tag}> needs a <{head_tag}>")
        head = children[0]
        functor = (head.text or "").strip() or head.get("uri", "")
        entries = entries + [(f"rel:{name}", Str(value)) for name, value in head.attrib.items()]
        args = [self.term(child) for child in children[1:]]
        return annotate(make_struct(functor, args), entries)

    def plex(self, element):
        items, tail = [], None
        for child in self.children(element):
            if child.tag == "repo":
                tail = self.term(self.only_child(child))
            else:
                items.append(self.term(child))
        return PList(tuple(items), tail)

    # ---------------------------
    # Items
    # ---------------------------
    def item(self, element):
        if element.tag == "Rule":
            return self.rule(element)
        if element.tag == "Message":
            return self.message(element)
        term = self.term(element)
        if element.tag == "Atom":
            return Clause(term)
        return term

    def rule(self, element):
        parts = {}
        for child in self.children(element):
            if child.tag not in RULE_PARTS:
                self.unknown.append(child.tag)
            elif child.tag == "label":
                parts["label"] = Str((child.text or "").strip())
            elif child.tag == "if" and self.only_child(child).tag == "And":
                # keep the literal list of a derivation rule body as it was
                parts["if"] = [self.term(c) for c in self.children(self.only_child(child))]
            else:
                parts[child.tag] = self.term(self.only_child(child))
        execution = element.get("execution", "reasoning")
        evaluation = element.get("eval", "strong")
        return self.specialize(parts, execution, evaluation)

    def specialize(self, parts, execution, evaluation):
        present = set(parts) - {"oid", "label", "qualification"}
        if "then" in present and present <= {"if", "then"}:
            body = parts.get("if", [])
            if not isinstance(body, list):
                body = conjuncts(body)
            return Clause(parts["then"], body)
        if "do" in present and present <= set(ECA_PARTS):
            condition = parts.get("if", TRUE)
            if isinstance(condition, list):
                condition = _conjoin(condition)
            slots = {ECA_PARTS[tag]: term for tag, term in parts.items() if tag in ECA_PARTS}
            slots["condition"] = condition
            label = parts.get("label")
            return EcaRule(
                source_oid=parts.get("oid"),
                rule_id=None if label is None else label.value,
                **slots,
            )
        if isinstance(parts.get("if"), list):
            parts["if"] = _conjoin(parts["if"])
        return ReactionRule(parts, execution, evaluation)

    def message(self, element):
        parts = {}
        context = []
        for child in self.children(element):
            if child.tag == "context":
                context.append(self.term(self.only_child(child)))
            elif child.tag in ("oid", "protocol", "sender", "receiver", "content"):
                parts[child.tag] = self.term(self.only_child(child))
            else:
                self.unknown.append(child.tag)
        missing = {"oid", "protocol", "sender", "content"} - set(parts)
        if missing:
            raise MalformedXml("Message", f"missing {', '.join(sorted(missing))}")
        directive = element.get("directive", "")
        if directive.startswith(DIRECTIVE_PREFIX):
            directive = directive[len(DIRECTIVE_PREFIX):]
        protocol = parts["protocol"]
        return Message(
            parts["oid"],
            protocol.symbol if isinstance(protocol, Const) else str(protocol),
            parts["sender"],
            parts.get("receiver"),
            Const(directive),
            parts["content"],
            context,
            element.get("mode", "inbound"),
        )


def _conjoin(goals):
    if not goals:
        return TRUE
    folded = goals[-1]
    for goal in reversed(goals[:-1]):
        folded = Struct(",", (goal, folded))
    return folded


def _parse(text):
    try:
        return ET.fromstring(text)
    except ET.ParseError as err:
        raise MalformedXml(err.position, str(err)) from None


def import_(text):
    root = _parse(text)
    reader = _Reader()
    elements = list(root) if root.tag == "RuleML" else [root]
    items = [reader.item(element) for element in elements]
    if reader.unknown:
        raise RuleMLImportError(reader.unknown)
    logger.debug("imported %s items", len(items))
    return items


def message_from_xml(text):
    items = import_(text)
    if len(items) != 1 or not isinstance(items[0], Message):
        raise MalformedXml("RuleML", "expected a single <Message>")
    return items[0]


# *********************************************
# Schema
# *********************************************
def validate(text, schema_path=SCHEMA_PATH):
    from lxml import etree

    schema = etree.XMLSchema(etree.parse(str(schema_path)))
    document = etree.fromstring(text.encode("utf-8"))
    if not schema.validate(document):
        error = schema.error_log.last_error
        raise MalformedXml((error.line, error.column), error.message)
    return True


# *********************************************
# Rule text <-> items
# *********************************************
def eca_clause(rule):
    """
    The shortest eca/N fact that carries every non-blank part.
    Blank parts come back as _.
    """
    parts = {
        "time": rule.time,
        "event": rule.event,
        "condition": rule.condition,
        "action": rule.action,
        "post": rule.post,
        "else_": rule.else_,
    }
    for arity in sorted(SLOTS):
        slots = SLOTS[arity]
        if all(term == TRUE or name in slots for name, term in parts.items()):
            args = [Var("_") if parts[name] == TRUE else parts[name] for name in slots]
            return Clause(Struct("eca", args))
    raise AssertionError("eca/6 covers every part")


def clauses_to_items(clauses):
    items = []
    for clause in clauses:
        functor, arity = clause.key
        if functor == "eca" and arity in SLOTS and clause.is_fact():
            items.append(normalize_eca(clause.head.args))
        else:
            items.append(clause)
    return items


def items_to_clauses(items):
    clauses = []
    for item in items:
        if isinstance(item, Clause):
            clauses.append(item)
        elif isinstance(item, EcaRule):
            clauses.append(eca_clause(item))
        elif isinstance(item, InterfaceDecl):
            clauses.append(item.to_clause())
        else:
            raise Unserializable(item)
    return clauses
