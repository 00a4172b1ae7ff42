import random
import xml.etree.ElementTree as ET
import pytest
from reactor.eca import EcaRule
from reactor.errors import MalformedXml, RuleMLImportError, Unserializable
from reactor.messaging.reactions import Message
from reactor.parser import Clause, parse_program, parse_term
from reactor.ruleml import (
    InterfaceDecl,
    ReactionRule,
    export,
    import_,
    interfaces,
    message_from_xml,
    message_to_xml,
    unannotate,
    validate,
    eca_clause,
    clauses_to_items,
    items_to_clauses,
)
from reactor.terms import Const, Num, Str, Struct, TimePoint, Var, TRUE
from tests.generators import random_term, FUNCTORS
from tests.ruleml_cases import case1, case2


def round_trip(items):
    return import_(export(items))


def exported(items):
    return list(ET.fromstring(export(items)))


# *********************************************
# Export
# *********************************************
def test_fact_becomes_an_atom():
    (atom,) = exported([Clause(parse_term("f(a)"))])
    assert atom.tag == "Atom"
    assert [(child.tag, child.text) for child in atom] == [("Rel", "f"), ("Ind", "a")]


def test_nested_terms_and_data():
    (atom,) = exported([Clause(parse_term('p(g(X), 1, 2.5, "hi", [a|T])'))])
    rel, expr, integer, double, string, plex = list(atom)
    assert (rel.text, expr.tag, expr[0].tag, expr[0].text) == ("p", "Expr", "Fun", "g")
    assert (integer.get("type"), integer.text) == ("xsd:integer", "1")
    assert (double.get("type"), double.text) == ("xsd:double", "2.5")
    assert (string.get("type"), string.text) == (None, "hi")
    assert [child.tag for child in plex] == ["Ind", "repo"]


def test_time_points_are_xsd_date_times():
    (atom,) = exported([Clause(Struct("at", (TimePoint.from_fields(2005, 1, 1, 0, 0, 1, 250),)))])
    assert atom[1].get("type") == "xsd:dateTime"
    assert atom[1].text == "2005-01-01T00:00:01.250Z"


def test_derivation_rule():
    (clause,) = parse_program("r(X) :- f(X), not(g(X)).").clauses
    (rule,) = exported([clause])
    assert (rule.tag, rule.get("execution")) == ("Rule", "reasoning")
    assert [part.tag for part in rule] == ["if", "then"]
    assert [goal.tag for goal in rule[0][0]] == ["Atom", "Naf"]
    assert round_trip([clause]) == [clause]


def test_eca_rule():
    rule = EcaRule(
        event=parse_term("request(C, D)"),
        condition=parse_term("available(D)"),
        action=parse_term('println(["booked ", C])'),
        else_=parse_term("reject(C)"),
        source_oid=Const("main"),
        rule_id="eca/6#1",
    )
    (element,) = exported([rule])
    assert element.get("execution") == "active"
    assert [part.tag for part in element] == ["oid", "label", "on", "if", "do", "elseDo"]
    assert element.find("label").text == "eca/6#1"
    assert round_trip([rule]) == [rule]


def test_event_algebra_elements():
    rule = EcaRule(
        event=parse_term("sequence(a, neg([c], [a, b]), any(2, d))"),
        action=parse_term("alert"),
    )
    (element,) = exported([rule])
    sequence = element.find("on")[0]
    assert sequence.tag == "Sequence"
    assert [child.tag for child in sequence] == ["Ind", "Not", "Any"]
    assert round_trip([rule]) == [rule]


def test_host_attachments_are_unserializable():
    with pytest.raises(Unserializable):
        export([Clause(parse_term("check(X)"), [parse_term("ext.check(X)")])])
    message = Message(Const("x1"), "self", Const("a"), Const("b"), Var("P"), Const("hi"))
    with pytest.raises(Unserializable):
        message_to_xml(message)


# *********************************************
# Messages
# *********************************************
def test_sample_message():
    message = message_from_xml(case1.given_xml)
    assert message.xid == Const(case1.correct_xid)
    assert message.protocol == case1.correct_protocol
    assert message.sender == Const(case1.correct_sender)
    assert message.receiver == Const(case1.correct_receiver)
    assert message.performative == Const(case1.correct_performative)
    assert message.mode == case1.correct_mode

    facts = message.payload.args
    for fact, (relation, oid, arguments) in zip(facts, case1.correct_facts):
        inner, entries = unannotate(fact)
        entries = dict(entries)
        assert inner.functor == relation, case1.description
        assert entries["rel:use"] == Str("value")
        assert unannotate(entries["oid"])[0] == Const(oid)
        found = [(unannotate(a)[0].symbol, dict(unannotate(a)[1])["type"].value) for a in inner.args]
        assert found == arguments, case1.description


def test_sample_message_round_trip():
    message = message_from_xml(case1.given_xml)
    assert message_from_xml(message_to_xml(message)) == message


def test_message_round_trip():
    message = Message(
        Const("x7"),
        "tcp",
        Const("agent"),
        Const("manager"),
        Const("query"),
        parse_term("consult(sb, [1, 2.5, \"two words\"])"),
        (Const("ctx"),),
        "outbound",
    )
    assert message_from_xml(message_to_xml(message)) == message


def test_message_without_content():
    text = "<Message><oid><Ind>x</Ind></oid><protocol><Ind>esb</Ind></protocol></Message>"
    with pytest.raises(MalformedXml):
        message_from_xml(text)


# *********************************************
# Interfaces
# *********************************************
def test_sample_interface():
    (atom,) = exported([case2.given_interface])
    rel, expr, description = list(atom)
    assert rel.text == case2.correct_relation
    assert expr[0].text == case2.correct_function
    assert [(var.text, dict(var.attrib)) for var in expr[1:]] == case2.correct_variables
    assert description.text == case2.correct_description

    assert interfaces(round_trip([case2.given_interface])) == [case2.given_interface]


def test_interface_from_term_defaults_mode():
    found = InterfaceDecl.from_term(parse_term(case2.given_term))
    assert found == case2.correct_interface


def test_interface_rejects_unknown_modes():
    with pytest.raises(ValueError):
        InterfaceDecl("add", [("X", None, "*")])


# *********************************************
# Import
# *********************************************
def test_reaction_rule_that_is_neither_kind():
    text = """
    <Rule execution="active">
      <if><Atom><Rel>ok</Rel></Atom></if>
      <then><Atom><Rel>done</Rel></Atom></then>
      <elseDo><Atom><Rel>alert</Rel></Atom></elseDo>
    </Rule>
    """
    (rule,) = import_(text)
    assert isinstance(rule, ReactionRule)
    assert rule.part("elseDo") == Const("alert")
    assert rule.execution == "active"
    assert round_trip([rule]) == [rule]


def test_unknown_elements_are_all_named():
    text = "<RuleML><Foo/><Rule><Bar/><then><Atom><Rel>f</Rel></Atom></then></Rule></RuleML>"
    with pytest.raises(RuleMLImportError) as error:
        import_(text)
    assert error.value.elements == ["Bar", "Foo"]


@pytest.mark.parametrize(
    "text",
    ["<RuleML><Atom>", "<RuleML><Atom><Ind>a</Ind></Atom></RuleML>", "<Naf><Ind>a</Ind><Ind>b</Ind></Naf>"],
)
def test_malformed_xml(text):
    with pytest.raises(MalformedXml):
        import_(text)


def random_literal(rng):
    args = [random_term(rng, variables=True) for _ in range(rng.randint(1, 3))]
    return Struct(rng.choice(FUNCTORS), args)


def random_item(rng):
    roll = rng.random()
    if roll < 0.4:
        body = [random_literal(rng) for _ in range(rng.randint(0, 2))]
        return Clause(random_literal(rng), body)
    if roll < 0.7:
        return EcaRule(
            event=random_literal(rng),
            condition=random_literal(rng) if rng.random() < 0.5 else TRUE,
            action=random_literal(rng),
            rule_id=f"eca/3#{rng.randint(1, 9)}",
        )
    return Message(
        Const(f"x{rng.randint(1, 99)}"),
        rng.choice(("self", "tcp", "esb")),
        Const("agent"),
        Const("manager"),
        Const(rng.choice(("inform", "query", "answer"))),
        random_term(rng, variables=True),
        mode=rng.choice(("inbound", "outbound")),
    )


def test_random_items_round_trip():
    rng = random.Random(7)
    for _ in range(500):
        item = random_item(rng)
        assert round_trip([item]) == [item], repr(item)


def test_exported_documents_validate():
    pytest.importorskip("lxml")
    rule = EcaRule(event=Const("e"), condition=Const("c"), action=Const("a"), rule_id="eca/3#1")
    items = [Clause(parse_term("f(a, [1|T])")), rule, case2.given_interface]
    assert validate(export(items))
    assert validate(message_to_xml(message_from_xml(case1.given_xml)))
    with pytest.raises(MalformedXml):
        validate("<RuleML><Bogus/></RuleML>")


# *********************************************
# Rule text and items
# *********************************************
def test_eca_clause_is_the_shortest_form():
    two = EcaRule(condition=Const("c"), action=Const("a"))
    three = EcaRule(event=Const("e"), condition=Const("c"), action=Const("a"))
    timed = EcaRule(time=Const("t"), event=Const("e"), action=Const("a"))
    assert eca_clause(two) == Clause(parse_term("eca(c, a)"))
    assert eca_clause(three) == Clause(parse_term("eca(e, c, a)"))
    assert eca_clause(timed) == Clause(Struct("eca", (Const("t"), Const("e"), Var("_"), Const("a"), Var("_"), Var("_"))))


def test_clauses_and_items():
    clauses = parse_program("eca(e, c, a). f(1). r(X) :- f(X).").clauses
    items = clauses_to_items(clauses)
    assert items[0] == EcaRule(event=Const("e"), condition=Const("c"), action=Const("a"))
    assert items[1:] == list(clauses[1:])
    assert items_to_clauses(items) == list(clauses)
    assert items_to_clauses([case2.given_interface]) == [case2.given_interface.to_clause()]
    with pytest.raises(Unserializable):
        items_to_clauses([Num(1)])


def test_blank_parts_are_not_exported():
    rule = EcaRule(condition=Const("c"), action=Const("a"))
    (element,) = exported([rule])
    assert [part.tag for part in element] == ["if", "do"]
    (back,) = round_trip([rule])
    assert (back.time, back.event, back.post, back.else_) == (TRUE,) * 4


def test_blank_action_still_round_trips_as_eca():
    rule = EcaRule(event=Const("e"), condition=Const("c"))
    (element,) = exported([rule])
    assert [part.tag for part in element] == ["on", "if", "do"]
    (back,) = round_trip([rule])
    assert isinstance(back, EcaRule)
    assert back == rule
