#!/usr/bin/env python3
"""Independent normalize-and-compare oracle for math answer equivalence.

Regex based, written separately from the C++ scanner. Regenerates
tests/data/answer_pairs.json with the expected verdict for every pair.
"""
from fractions import Fraction
import json
import os
import re

NUM = r"(?:\d+(?:\.\d*)?|\.\d+)"
TERM = rf"(?:[+-]?{NUM}|\([+-]?{NUM}\))"
RATIONAL = re.compile(rf"^([+-]?)({TERM})(?:/({TERM}))?$")


def unwrap(s: str) -> str:
    while True:
        before = s
        s = s.strip()
        for open_, close in (("$$", "$$"), ("$", "$"), ("\\(", "\\)"), ("\\[", "\\]")):
            if len(s) >= len(open_) + len(close) and s.startswith(open_) and s.endswith(close):
                s = s[len(open_):len(s) - len(close)]
        m = re.fullmatch(r"\\(?:boxed|fbox)\{(.*)\}", s, re.S)
        if m and balanced(m.group(1)):
            s = m.group(1)
        if s == before:
            return s


def balanced(s: str) -> bool:
    depth = 0
    for c in s:
        depth += c == "{"
        depth -= c == "}"
        if depth < 0:
            return False
    return depth == 0


def rewrite(s: str) -> str:
    s = re.sub(r"\\(?:text|textbf|mathrm)\{([^{}]*)\}", r"\1", s)
    s = re.sub(r"\\[dt]frac", r"\\frac", s)
    prev = None
    while prev != s:
        prev = s
        s = re.sub(r"\\frac\{([^{}]*)\}\{([^{}]*)\}", r"(\1)/(\2)", s)
    s = re.sub(r"\\left|\\right|\\!|\\,|\\;", "", s)
    return s


def term_value(t: str) -> Fraction:
    return Fraction(t.strip("()"))


def as_rational(s: str):
    compact = re.sub(r"\s+", "", s)
    m = RATIONAL.match(compact)
    if not m:
        return None
    sign, num, den = m.groups()
    value = term_value(num)
    if den is not None:
        d = term_value(den)
        if d == 0:
            return None
        value /= d
    return -value if sign == "-" else value


def normalize(s: str):
    s = rewrite(unwrap(s))
    s = unwrap(s)
    r = as_rational(s)
    if r is not None:
        return ("q", r)
    return ("s", re.sub(r"\s+", " ", s.strip()).lower())


def equivalent(a: str, b: str) -> bool:
    return normalize(a) == normalize(b)


PAIRS = [
    ("1/2", "0.5"), ("42", "42"), ("\\frac{1}{2}", "0.5"), ("42", "43"),
    ("\\boxed{7}", "7"), ("$\\frac{3}{4}$", "0.75"), ("\\dfrac{2}{4}", "1/2"),
    ("-\\frac{1}{2}", "-0.5"), ("\\frac{-1}{2}", "-.5"), ("0.333", "1/3"),
    ("2/6", "\\frac{1}{3}"), ("10", "10.0"), ("10", "10.00"), ("+3", "3"),
    ("(1)/(4)", "0.25"), ("1/0", "0"), ("1/0", "1/0"), ("x + 1", "X+1"),
    ("x + 1", "x  +  1"), ("\\sqrt{2}", "\\sqrt{2}"), ("\\sqrt{2}", "1.414"),
    ("\\text{Monday}", "monday"), ("\\textbf{yes}", "Yes"), ("\\pi", "3.14159"),
    ("$$5$$", "5"), ("\\(6\\)", "6"), ("\\[8\\]", "8.0"), ("\\boxed{\\frac{5}{10}}", ".5"),
    ("  12  ", "12"), ("3.5", "7/2"), ("3.50", "3.5"), ("-0", "0"), ("0.1", "1/10"),
    ("0.1", "1/9"), ("\\tfrac{9}{3}", "3"), ("\\left(2\\right)", "2"),
    ("(2, 3)", "(2,3)"), ("(2, 3)", "(3, 2)"), ("1,000", "1000"),
    ("\\frac{\\sqrt{3}}{2}", "\\frac{\\sqrt{3}}{2}"), ("\\fbox{9}", "9"), ("4/8", "0.50"),
    ("", ""), ("", "0"), ("5\\!", "5"), ("\\mathrm{cm}", "CM"), ("100", "1e2"),
    ("7", "\\boxed{\\boxed{7}}"), ("-(3)/(4)", "-0.75"), ("\\frac{1}{2}", "\\frac{2}{4}"),
]

if __name__ == "__main__":
    assert len(PAIRS) == 50
    out = [{"a": a, "b": b, "equivalent": equivalent(a, b)} for a, b in PAIRS]
    for a, b in PAIRS:
        assert equivalent(a, b) == equivalent(b, a)
        assert equivalent(a, a)
    path = os.path.join(os.path.dirname(__file__), "..", "data", "answer_pairs.json")
    with open(path, "w") as f:
        json.dump(out, f, indent=1)
        f.write("\n")
    print(sum(p["equivalent"] for p in out), "equivalent of", len(out))
    for p in out:
        print(p)
