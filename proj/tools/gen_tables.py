#!/usr/bin/env python3
"""Expand data/coefficients.src into the machine-readable table data/coefficients.json.

Every coefficient is reduced to  sum(c * n^i b^j al^k be^l) / (C * b^p al^q P^u M^v)
with P = b*al + be and M = b*al - be.  The script also runs the table audit:
degree bookkeeping, the Ricci/Rat/Irrat consistency relation and the divisibility
identity block by block.  Findings are written to data/AUDIT.md.
"""

import argparse
import json
import sys
from pathlib import Path

import sympy as sp

b, al, be, n = sp.symbols("b al be n", positive=True)
P = b * al + be
M = b * al - be
Q = b**2 * al**2 - be**2
S = b**2 * al**2 + be**2
LOCALS = dict(b=b, al=al, be=be, n=n, P=P, M=M, Q=Q, S=S)

# (y-degree, b-degree) of each scalar block; alpha counts (1, 0), beta (1, 1), b (0, 1).
BLOCK_DEG = {
    "r00": (2, 1), "r0": (1, 2), "s0": (1, 2), "r": (0, 3), "r00|0": (3, 1),
    "q00": (2, 2), "t00": (2, 2), "r0|0": (2, 2), "s0|0": (2, 2), "r00|b": (2, 2),
    "p0": (1, 3), "q*0": (1, 3), "q0": (1, 3), "t0": (1, 3), "r|0": (1, 3),
    "r0|b": (1, 3), "s0|b": (1, 3), "p": (0, 4), "q": (0, 4), "t": (0, 4),
    "r|b": (0, 4), "Ric00": (2, 0), "rii": (0, 1), "si0|i": (1, 1), "tii": (0, 2),
    "ri|i": (0, 2), "si|i": (0, 2), "K": (0, -4),
    "y": (1, 0), "b": (0, 1), "rk0": (1, 1), "sk0": (1, 1), "rk": (0, 2), "sk": (0, 2),
    "rik": (0, 1), "sik": (0, 1), "tik": (0, 2), "ri0": (1, 1), "si0": (1, 1), "ti0": (1, 2),
    "r00|k": (2, 1), "rk0|0": (2, 1), "q0k": (1, 2), "qk0": (1, 2), "rk|0": (1, 2),
    "r0|k": (1, 2), "sk|0": (1, 2), "s0|k": (1, 2), "pk": (0, 3), "qk": (0, 3),
    "q*k": (0, 3), "tk": (0, 3), "r|k": (0, 3), "si0|0": (2, 1), "sik|0": (1, 1),
    "si0|k": (1, 1), "ri|0": (1, 2), "si|0": (1, 2), "qi": (0, 3), "ti": (0, 3),
    "ri": (0, 2), "si": (0, 2), "ri|k": (0, 2), "si|k": (0, 2), "delta": (0, 0),
    "yk": (1, 0), "bk": (0, 1),
}

S1 = ["r00 r00", "r00 r0", "r00 s0", "r00 r", "r00|0", "r0 r0", "r0 s0", "s0 s0", "q00",
      "r0|0", "s0|0", "r0 r", "s0 r", "p0", "q0", "t0", "r|0", "r r", "p", "q", "t"]
S4 = ["r00", "r0", "s0", "r"]

RICCI_BLOCKS = ["r00 r00", "r00|0", "r00 r0", "r00 s0", "r00 rii", "r00 r", "q00", "t00",
                "r0 r0", "r0 s0", "s0 s0", "r00|b", "r0|0", "s0|0", "r0 rii", "s0 rii",
                "r0 r", "s0 r", "p0", "q*0", "q0", "t0", "si0|i", "r0|b", "s0|b", "r|0",
                "r rii", "r r", "tii", "p", "q", "t", "ri|i", "si|i", "r|b"]
RAT_BLOCKS = ["Ric00", "K"] + RICCI_BLOCKS

# Structures multiplying the Riemann coefficients.  A family code maps to (structure, scalar list).
RIEMANN_FAMILIES = {
    "1": ("delta", S1), "2": ("y yk", S1), "3": ("y bk", S1), "16": ("b yk", S1),
    "17": ("b bk", S1),
    "5": ("y rk0", S4), "6": ("y sk0", S4), "10": ("y rk", S4), "11": ("y sk", S4),
    "19": ("b rk0", S4), "20": ("b sk0", S4), "24": ("b rk", S4), "25": ("b sk", S4),
    "32": ("ri0 yk", S4), "33": ("ri0 bk", S4), "37": ("si0 yk", S4), "38": ("si0 bk", S4),
    "47": ("rik", S4), "49": ("ri yk", S4), "50": ("ri bk", S4), "55": ("si yk", S4),
    "56": ("si bk", S4),
}
RIEMANN_SINGLE = {
    "4": "y r00|k", "7": "y q0k", "8": "y rk|0", "9": "y sk|0", "12": "y pk", "13": "y qk",
    "14": "y tk", "15": "y r|k", "18": "b r00|k", "21": "b q0k", "22": "b rk|0",
    "23": "b sk|0", "26": "b pk", "27": "b qk", "28": "b tk", "29": "b r|k",
    "30": "si0|0 yk", "31": "si0|0 bk", "34": "ri0 rk0", "35": "ri0 rk", "36": "ri0 sk",
    "39": "si0 sk0", "40": "si0 rk", "41": "si0 sk", "42": "ti0 yk", "43": "ti0 bk",
    "44": "sik|0", "45": "ri|0 yk", "46": "ri|0 bk", "48": "tik", "51": "ri rk0",
    "52": "ri sk0", "53": "ri rk", "54": "ri sk", "57": "si rk0", "58": "si sk0",
    "59": "si rk", "60": "si sk", "61": "qi yk", "62": "qi bk", "63": "ri|k",
}


def degree(words):
    y = bb = 0
    for w in words.split():
        dy, db = BLOCK_DEG[w]
        y += dy
        bb += db
    return y, bb


def riemann_block(name):
    code = name[1:]
    if len(code) >= 3 and code[:-2] in RIEMANN_FAMILIES:
        fam, idx = code[:-2], int(code[-2:])
        structure, scalars = RIEMANN_FAMILIES[fam]
        return structure + " " + scalars[idx - 1]
    return RIEMANN_SINGLE[code]


def expected_degree(table, name):
    """(y-degree, b-degree) the coefficient must carry so every term has the table's target."""
    if table == "riemann":
        target = (2, 0)
        block = riemann_block(name)
    elif table == "ricci":
        target = (2, 0)
        block = RICCI_BLOCKS[int(name[1:]) - 1]
    elif table == "rat":
        target = (10, 8)
        block = RAT_BLOCKS[int(name[1:]) - 1]
    elif table == "irrat":
        target = (9, 9)
        block = RAT_BLOCKS[int(name[1:]) - 1]
    else:
        return None, None
    y, bb = degree(block)
    return (target[0] - y, target[1] - bb), block


def read_source(path):
    records = []
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        table, rest = line.split(None, 1)
        name, text = (s.strip() for s in rest.split("=", 1))
        expr = sp.sympify(text.replace("^", "**"), locals=LOCALS)
        records.append(dict(table=table, name=name, text=text, expr=expr, line=lineno))
    return records


def factor_denominator(den):
    const, factors = sp.factor_list(sp.expand(den))
    powers = {"b": 0, "al": 0, "P": 0, "M": 0}
    for f, k in factors:
        f = sp.expand(f)
        if f == b:
            powers["b"] += k
        elif f == al:
            powers["al"] += k
        elif f == sp.expand(P):
            powers["P"] += k
        elif f == sp.expand(M):
            powers["M"] += k
        elif f == sp.expand(-M):
            powers["M"] += k
            const *= (-1) ** k
        else:
            raise ValueError(f"unexpected denominator factor {f}")
    return const, powers


def encode(expr):
    num, den = sp.fraction(sp.factor(sp.together(expr)))
    const, powers = factor_denominator(den)
    num = sp.expand(num)
    const = sp.Rational(const)
    poly = sp.Poly(num, n, b, al, be)
    lcm = 1
    for c in poly.coeffs():
        lcm = sp.ilcm(lcm, sp.Rational(c).q)
    terms = []
    for (pn, pb, pal, pbe), c in sorted(poly.terms(), key=lambda t: (-t[0][3], t[0])):
        c = sp.Rational(c) * lcm
        terms.append([int(c), int(pn), int(pb), int(pal), int(pbe)])
    const = const * lcm
    if const.q != 1:
        terms = [[t[0] * const.q] + t[1:] for t in terms]
        const = const * const.q
    if const < 0:
        terms = [[-t[0]] + t[1:] for t in terms]
        const = -const
    den = {"c": int(const), "b": int(powers["b"]), "al": int(powers["al"]), "P": int(powers["P"]),
           "M": int(powers["M"])}
    return terms, den


def decode(terms, den):
    num = sum(c * n**pn * b**pb * al**pal * be**pbe for c, pn, pb, pal, pbe in terms)
    return num / (den["c"] * b**den["b"] * al**den["al"] * P**den["P"] * M**den["M"])


def fnv1a64(data: bytes) -> str:
    h = 0xCBF29CE484222325
    for byte in data:
        h ^= byte
        h = (h * 0x100000001B3) & 0xFFFFFFFFFFFFFFFF
    return f"{h:016x}"


def homogeneity(expr):
    """Return (y-degree, b-degree) of a coefficient if it is bi-homogeneous, else None."""
    point = {al: sp.Rational(7, 5), be: sp.Rational(2, 9), b: sp.Rational(3, 4), n: 5}
    base = expr.subs(point)

    def ratio(t, u):
        scaled = {al: t * point[al], be: t * u * point[be], b: u * point[b], n: 5}
        return sp.Rational(expr.subs(scaled) / base)

    r = ratio(2, 3)
    dy = sp.multiplicity(2, r.p) - sp.multiplicity(2, r.q)
    db = sp.multiplicity(3, r.p) - sp.multiplicity(3, r.q)
    if r != sp.Rational(2) ** dy * sp.Rational(3) ** db:
        return None
    if ratio(5, 7) != sp.Rational(5) ** dy * sp.Rational(7) ** db:
        return None
    return dy, db


SQUARE = {"r00 r00": b**8, "r00 r0": -4 * b**6 * be, "r00 r": 2 * b**4 * be**2,
          "r0 r0": 4 * b**4 * be**2, "r0 r": -4 * b**2 * be**3, "r r": be**4}


def audit(records, log):
    tables = {}
    for r in records:
        tables.setdefault(r["table"], {})[r["name"]] = r["expr"]
    ok = True

    log.append("## Degree bookkeeping\n")
    bad = []
    for r in records:
        want, block = expected_degree(r["table"], r["name"])
        if want is None:
            continue
        got = homogeneity(r["expr"]) if r["expr"] != 0 else want
        if got != want:
            bad.append(f"- {r['table']} {r['name']} [{block}]: degree {got}, expected {want}")
    if bad:
        ok = False
        log.extend(bad)
    else:
        log.append("All coefficients carry the (y, b) degree required by their block.")
    log.append("")

    log.append("## Ricci versus Rat/Irrat\n")
    log.append("With D = 9 b^3 al^2 P^2 M^4 the tables must satisfy "
               "D * C_j = b * R_(j+2) + al * I_(j+2), "
               "D * 1 = b * R1 + al * I1 and -(n-1) D F^2 = b * R2 + al * I2.")
    D = 9 * b**3 * al**2 * P**2 * M**4
    mismatch = []
    checks = [("R1/I1", D, tables["rat"]["R1"], tables["irrat"]["I1"]),
              ("R2/I2", -(n - 1) * D * P**4 / al**2, tables["rat"]["R2"], tables["irrat"]["I2"])]
    for j in range(1, 36):
        checks.append((f"C{j}", D * tables["ricci"][f"C{j}"],
                       tables["rat"][f"R{j + 2}"], tables["irrat"][f"I{j + 2}"]))
    for label, lhs, rr, ii in checks:
        if sp.expand(sp.cancel(lhs - b * rr - al * ii)) != 0:
            mismatch.append(label)
    if mismatch:
        ok = False
        log.append("Mismatch: " + ", ".join(mismatch))
    else:
        log.append("Holds for every block.")
    log.append("")

    log.append("## Divisibility identity\n")
    log.append("Residual of b^4 (b^2 Rat - be Irrat) - Q Poly1 - (b^4 r00 - 2 b^2 be r0 + be^2 r)^2 Poly2, "
               "block by block (Q = b^2 al^2 - be^2).  Every residual is a multiple of Q, so the "
               "divisibility statement holds; the displayed Poly1 only carries the four blocks listed "
               "in the source.\n")
    square = SQUARE
    poly1 = {"Ric00": tables["poly"]["P1ric"], "r0|0": tables["poly"]["P1r0l0"],
             "s0|0": tables["poly"]["P1s0l0"], "si0|i": tables["poly"]["P1si0li"]}
    for j, blk in enumerate(RAT_BLOCKS, 1):
        lhs = b**4 * (b**2 * tables["rat"][f"R{j}"] - be * tables["irrat"][f"I{j}"])
        rhs = Q * poly1.get(blk, 0) + square.get(blk, 0) * tables["poly"]["P2"]
        res = sp.expand(lhs - rhs)
        if res == 0:
            continue
        quo, rem = sp.div(sp.Poly(res, be), sp.Poly(Q, be))
        tag = "multiple of Q" if rem.is_zero else "NOT a multiple of Q"
        if not rem.is_zero:
            ok = False
        log.append(f"- {blk}: {sp.factor(res)}  ({tag})")
    log.append("")
    return ok


def quotients(records):
    """Full quotient of b^4 (b^2 Rat - be Irrat) - (b^4 r00 - 2 b^2 be r0 + be^2 r)^2 Poly2 by Q, per block."""
    tables = {}
    for r in records:
        tables.setdefault(r["table"], {})[r["name"]] = r["expr"]
    out = []
    for j, blk in enumerate(RAT_BLOCKS, 1):
        lhs = b**4 * (b**2 * tables["rat"][f"R{j}"] - be * tables["irrat"][f"I{j}"])
        res = sp.expand(lhs - SQUARE.get(blk, 0) * tables["poly"]["P2"])
        quo, rem = sp.div(sp.Poly(res, be), sp.Poly(Q, be))
        if not rem.is_zero:
            sys.exit(f"block {blk} is not divisible by Q")
        out.append((j, blk, sp.expand(quo.as_expr())))
    return out


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    root = Path(__file__).resolve().parent.parent
    ap.add_argument("--source", default=root / "data" / "coefficients.src")
    ap.add_argument("--output", default=root / "data" / "coefficients.json")
    ap.add_argument("--audit", default=root / "data" / "AUDIT.md")
    ap.add_argument("--skip-audit", action="store_true")
    args = ap.parse_args()

    records = read_source(args.source)
    out_tables = {}
    for r in records:
        terms, den = encode(r["expr"])
        if sp.cancel(decode(terms, den) - r["expr"]) != 0:
            sys.exit(f"encoding round trip failed for {r['name']}")
        _, block = expected_degree(r["table"], r["name"])
        entry = {"name": r["name"], "source": r["text"], "terms": terms, "den": den}
        if block is not None:
            entry["block"] = block
        out_tables.setdefault(r["table"], []).append(entry)

    for j, blk, quo in quotients(records):
        terms, den = encode(quo)
        text = str(sp.factor(quo)).replace("**", "^")
        out_tables.setdefault("quotient", []).append(
            {"name": f"Q{j}", "source": text, "terms": terms, "den": den, "block": blk})

    body = json.dumps(out_tables, sort_keys=True, separators=(",", ":"))
    doc = {"format": "finslerlab-coefficients", "version": 1,
           "checksum": "fnv1a64:" + fnv1a64(body.encode("ascii")), "tables": out_tables}
    Path(args.output).write_text(json.dumps(doc, sort_keys=True, indent=1) + "\n")

    if not args.skip_audit:
        log = ["# Coefficient table audit", "",
               "Generated by tools/gen_tables.py from data/coefficients.src.", ""]
        ok = audit(records, log)
        Path(args.audit).write_text("\n".join(log) + "\n")
        print("audit:", "clean" if ok else "issues found (see AUDIT.md)")
    print(f"wrote {args.output} ({sum(len(v) for v in out_tables.values())} records)")


if __name__ == "__main__":
    main()
