from __future__ import annotations

import pytest

from libtrend.dsm import (
    ClassUnit,
    FieldDecl,
    Instruction,
    MethodDecl,
    extract_api_invocations,
    is_api_signature,
    parse_class_file,
    render_class_file,
    split_api_signature,
)
from libtrend.errors import DsmSyntaxError, DuplicateField

NETWORK = "android.net.ConnectivityManager.getActiveNetworkInfo()"
LOCATION = "android.location.LocationManager.getLastKnownLocation()"


def test_empty_class():
    unit = parse_class_file(".class com.example.Foo\n.end class\n")
    assert unit == ClassUnit("com.example.Foo")


def test_field_transcription():
    unit = parse_class_file(
        ".class com.example.Foo\n"
        ".field private adUrl Ljava/lang/String;\n"
        ".end class\n"
    )
    assert unit.fields == (FieldDecl("adUrl", "Ljava/lang/String;", ("private",)),)


def test_invoke_instruction():
    unit = parse_class_file(
        ".class com.example.Foo\n"
        ".method run ()V\n"
        f"invoke {NETWORK} v0\n"
        ".end method\n"
        ".end class\n"
    )
    (method,) = unit.methods
    (instr,) = method.body
    assert instr.opcode == "invoke"
    assert instr.api == NETWORK
    assert instr.registers == ("v0",)


def test_super_and_order_preserved():
    unit = parse_class_file(
        ".class com.example.Foo\n"
        ".super android.view.View\n"
        ".method run ()V\n"
        "const v0 42\n"
        "move v1 v0\n"
        ".end method\n"
        ".end class\n"
    )
    assert unit.super_name == "android.view.View"
    assert [i.opcode for i in unit.methods[0].body] == ["const", "move"]


def test_comments_and_blanks_ignored():
    unit = parse_class_file(
        "# header comment\n"
        "\n"
        ".class com.example.Foo\n"
        "  # inside\n"
        ".method run ()V\n"
        "# in body\n"
        "nop\n"
        ".end method\n"
        "\n"
        ".end class\n"
        "# trailing\n"
    )
    assert unit.methods[0].body == (Instruction("nop"),)


@pytest.mark.parametrize(
    "text,line",
    [
        ("", 1),
        ("bogus\n", 1),
        (".class two tokens extra\n.end class\n", 1),
        (".class com.x.A\n", 2),
        (".class com.x.A\n.field solo\n.end class\n", 2),
        (".class com.x.A\n.method m ()V\nnop\n.end class\n", 4),
        (".class com.x.A\n.end class\nleftover\n", 3),
        (".class com.x.A\n.super\n.end class\n", 2),
        (".class com.x.A\n.field a I\n.super b\n.end class\n", 3),
        (".class com.x.A\n.method m ()V\ninvoke v0\n.end method\n.end class\n", 3),
        (".class com.x.A\n.method m ()V\ninvoke a.b() v0\n.end method\n.end class\n", 3),
    ],
)
def test_syntax_errors_carry_line_numbers(text, line):
    with pytest.raises(DsmSyntaxError) as err:
        parse_class_file(text)
    assert err.value.line == line


def test_duplicate_field_rejected():
    with pytest.raises(DuplicateField):
        parse_class_file(
            ".class com.x.A\n.field a I\n.field a I\n.end class\n"
        )
    # same name, different descriptor is allowed
    unit = parse_class_file(".class com.x.A\n.field a I\n.field a J\n.end class\n")
    assert len(unit.fields) == 2


def test_extract_empty():
    assert extract_api_invocations(ClassUnit("com.x.A")) == set()


def test_extract_deduplicates():
    unit = parse_class_file(
        ".class com.x.A\n"
        ".method m ()V\n"
        f"invoke {NETWORK} v0\n"
        f"invoke {NETWORK} v1\n"
        ".end method\n"
        ".end class\n"
    )
    assert extract_api_invocations(unit) == {NETWORK}


def test_extract_two_apis():
    unit = parse_class_file(
        ".class com.x.A\n"
        ".method m ()V\n"
        f"invoke {NETWORK} v0\n"
        ".end method\n"
        ".method n ()V\n"
        f"invoke {LOCATION} v2 v3\n"
        ".end method\n"
        ".end class\n"
    )
    assert extract_api_invocations(unit) == {NETWORK, LOCATION}


def test_non_invoke_operands_ignored():
    unit = parse_class_file(
        f".class com.x.A\n.method m ()V\nconst-string {NETWORK}\n.end method\n.end class\n"
    )
    assert extract_api_invocations(unit) == set()


def test_extract_invariant_under_method_reordering():
    a = MethodDecl("a", "()V", (Instruction("invoke", (NETWORK, "v0")),))
    b = MethodDecl("b", "()V", (Instruction("invoke", (LOCATION, "v1")),))
    forward = ClassUnit("com.x.A", methods=(a, b))
    backward = ClassUnit("com.x.A", methods=(b, a))
    assert extract_api_invocations(forward) == extract_api_invocations(backward)


def test_render_round_trip():
    text = (
        ".class com.example.Foo\n"
        ".super android.view.View\n"
        ".field private static adUrl Ljava/lang/String;\n"
        ".field count I\n"
        ".method public synthetic run ()V\n"
        "const v0 17\n"
        f"invoke {NETWORK} v0\n"
        "return\n"
        ".end method\n"
        ".end class\n"
    )
    unit = parse_class_file(text)
    assert parse_class_file(render_class_file(unit)) == unit
    assert render_class_file(unit) == text


def test_api_signature_predicates():
    assert is_api_signature(NETWORK)
    assert is_api_signature("android.os.PowerManager$WakeLock.acquire(J)")
    assert not is_api_signature("getActiveNetworkInfo()")  # no class
    assert not is_api_signature("a.b()")  # class needs two segments
    assert not is_api_signature("android.net.Foo.bar")  # no descriptor
    assert split_api_signature(NETWORK) == (
        "android.net.ConnectivityManager",
        "getActiveNetworkInfo",
        "",
    )
