"""Tokenizer. Tracks line/column so parse errors are reproducible."""

from __future__ import annotations

from dataclasses import dataclass

KEYWORDS = {
    "const", "on", "receive", "let", "if", "else", "while",
    "true", "false", "none", "empty",
}

PUNCT = {
    "(", ")", "{", "}", "[", "]", ",", ";", ":", ".",
    "+", "-", "*", "/", "%",
    "==", "!=", "<=", ">=", "<", ">", "=", "!", "&&", "||",
}


@dataclass(frozen=True)
class Token:
    kind: str  # IDENT KEYWORD INT DEC DBL STR PUNCT EOF
    text: str
    line: int
    col: int


class LexError(ValueError):
    def __init__(self, msg: str, line: int, col: int):
        super().__init__(f"{msg} at {line}:{col}")
        self.msg = msg
        self.line = line
        self.col = col


def tokenize(src: str) -> list[Token]:
    toks: list[Token] = []
    i = 0
    line = 1
    col = 1
    n = len(src)

    def advance(k: int = 1):
        nonlocal i, line, col
        for _ in range(k):
            if i < n and src[i] == "\n":
                line += 1
                col = 1
            else:
                col += 1
            i += 1

    while i < n:
        c = src[i]
        if c in " \t\r\n":
            advance()
            continue
        if c == "/" and i + 1 < n and src[i + 1] == "/":
            while i < n and src[i] != "\n":
                advance()
            continue
        tl, tc = line, col
        if c.isalpha() or c == "_":
            j = i
            while j < n and (src[j].isalnum() or src[j] == "_"):
                j += 1
            word = src[i:j]
            advance(j - i)
            kind = "KEYWORD" if word in KEYWORDS else "IDENT"
            toks.append(Token(kind, word, tl, tc))
            continue
        if c.isdigit():
            j = i
            while j < n and src[j].isdigit():
                j += 1
            is_frac = False
            if j < n and src[j] == "." and j + 1 < n and src[j + 1].isdigit():
                is_frac = True
                j += 1
                while j < n and src[j].isdigit():
                    j += 1
            has_exp = False
            if j < n and src[j] in "eE":
                k = j + 1
                if k < n and src[k] in "+-":
                    k += 1
                if k < n and src[k].isdigit():
                    has_exp = True
                    j = k
                    while j < n and src[j].isdigit():
                        j += 1
            text = src[i : j]
            if j < n and src[j] == "d":
                j += 1
                advance(j - i)
                toks.append(Token("DBL", text, tl, tc))
            elif has_exp:
                raise LexError("exponent literals require the d suffix", tl, tc)
            elif is_frac:
                advance(j - i)
                toks.append(Token("DEC", text, tl, tc))
            else:
                advance(j - i)
                toks.append(Token("INT", text, tl, tc))
            continue
        if src.startswith("'''", i):
            j = src.find("'''", i + 3)
            if j < 0:
                raise LexError("unterminated raw string", tl, tc)
            body = src[i + 3 : j]
            advance(j + 3 - i)
            toks.append(Token("STR", body, tl, tc))
            continue
        if c == '"':
            j = i + 1
            out = []
            while True:
                if j >= n:
                    raise LexError("unterminated string", tl, tc)
                ch = src[j]
                if ch == '"':
                    j += 1
                    break
                if ch == "\n":
                    raise LexError("newline in string literal", tl, tc)
                if ch == "\\":
                    if j + 1 >= n:
                        raise LexError("dangling escape", tl, tc)
                    esc = src[j + 1]
                    if esc == "n":
                        out.append("\n")
                    elif esc == "t":
                        out.append("\t")
                    elif esc == '"':
                        out.append('"')
                    elif esc == "\\":
                        out.append("\\")
                    elif esc == "u":
                        if j + 6 > n:
                            raise LexError("bad \\u escape", tl, tc)
                        hexs = src[j + 2 : j + 6]
                        try:
                            out.append(chr(int(hexs, 16)))
                        except ValueError:
                            raise LexError("bad \\u escape", tl, tc) from None
                        j += 4
                    else:
                        raise LexError(f"unknown escape \\{esc}", tl, tc)
                    j += 2
                else:
                    out.append(ch)
                    j += 1
            advance(j - i)
            toks.append(Token("STR", "".join(out), tl, tc))
            continue
        two = src[i : i + 2]
        if len(two) == 2 and two in PUNCT:
            advance(2)
            toks.append(Token("PUNCT", two, tl, tc))
            continue
        if c in PUNCT:
            advance(1)
            toks.append(Token("PUNCT", c, tl, tc))
            continue
        raise LexError(f"unexpected character {c!r}", tl, tc)
    toks.append(Token("EOF", "", line, col))
    return toks
