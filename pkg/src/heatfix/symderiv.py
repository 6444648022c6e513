"""Symmetrized covariant derivatives of deformed diagonal functions f(x, Phi(x)).

The n-th symmetrized derivative expands over term signatures (k, m; j_1..j_k):
k first-argument-primed factors of the two-point function carry m unprimed
derivative indices, and each of the k dPhi factors carries j_i derivative
indices, with k + m + |j| = n.  The integer coefficients of this expansion
come from a two-case recursion or, equivalently, a closed product formula.

The sigma-specialized generator drops the signature classes whose coincidence
limits vanish and emits the surviving terms as LaTeX, reproducing the
reference output blocks byte-for-byte up to whitespace.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from functools import lru_cache

MAX_N = 8

ALPHABET = [
    r"\alpha", r"\beta", r"\gamma", r"\delta", r"\epsilon",
    r"\zeta", r"\eta", r"\theta", r"\kappa", r"\lambda",
]
PRIME_ALPHABET = [
    r"\mu", r"\nu", r"\xi", r"\pi", r"\rho",
    r"\tau", r"\phi", r"\chi", r"\psi", r"\omega",
]


@dataclass(frozen=True)
class TermSignature:
    k: int  # number of dPhi factors
    m: int  # derivatives of f with respect to the first argument
    j: tuple  # derivative orders on each dPhi factor

    def __post_init__(self):
        if len(self.j) != self.k:
            raise ValueError("j must have length k")
        if self.k < 0 or self.m < 0 or any(x < 0 for x in self.j):
            raise ValueError("signature entries must be non-negative")

    @property
    def order(self) -> int:
        return self.k + self.m + sum(self.j)


@lru_cache(maxsize=None)
def coeff_recursive(k: int, m: int, j: tuple) -> int:
    """Two-case recursion with c(0,0;()) = 1; negative arguments give 0."""
    if k < 0 or m < 0 or any(x < 0 for x in j):
        return 0
    if len(j) != k:
        raise ValueError("j must have length k")
    if k == 0 and m == 0:
        return 1
    total = 0
    if m > 0:
        total += coeff_recursive(k, m - 1, j)
    for i in range(k):
        if j[i] > 0:
            total += coeff_recursive(k, m, j[:i] + (j[i] - 1,) + j[i + 1 :])
    if k > 0 and j and j[-1] == 0:
        total += coeff_recursive(k - 1, m, j[:-1])
    elif k > 0 and not j:
        pass
    return total


def coeff_closed_form(k: int, m: int, j: tuple) -> int:
    """n! / (m! j_1!..j_k! (1+j_k)(2+j_k+j_{k-1})..(k+j_k+..+j_1))."""
    if len(j) != k:
        raise ValueError("j must have length k")
    n = k + m + sum(j)
    num = math.factorial(n)
    den = math.factorial(m)
    for x in j:
        den *= math.factorial(x)
    tail = 0
    for i in range(1, k + 1):
        tail += j[k - i]
        den *= i + tail
    if num % den != 0:
        raise ArithmeticError(
            f"closed form is non-integral for ({k},{m};{j}): {num}/{den}"
        )
    return num // den


def _distributions(n: int, m: int, k: int):
    """Index-count tuples a_i = j_i + 1 (sum = n - m) in generator order.

    Starts at (1, .., 1, n-m-k+1) and repeatedly moves one unit of excess
    from the leftmost non-unit tail slot forward, matching the reference
    enumeration exactly.
    """
    total = n - m
    if k <= 0 or total < k:
        return
    a = [1] * (k - 1) + [total - k + 1]
    while True:
        yield tuple(a)
        if a[0] == total - k + 1:
            return
        head = a[0]
        a[0] = 1
        for i in range(1, k):
            if a[i] != 1:
                a[i] -= 1
                a[i - 1] = head + 1
                break
        else:
            return


def _filtered_out(n: int, k: int, m: int) -> bool:
    """Signature classes whose sigma coincidence limits vanish."""
    t = k + m
    return t == 3 or (k == 1 and m >= 2) or (k >= n - 1 and k >= 3)


def enumerate_terms(n: int, sigma_filter: bool = True):
    """(TermSignature, coefficient) pairs for the n-th derivative.

    With the filter on, the order and the surviving set match the reference
    sigma-generator; without it, all 2^n signatures appear.
    """
    if n < 1 or n > MAX_N:
        raise ValueError(f"n must be in 1..{MAX_N}")
    out = []
    if not sigma_filter:
        for t in range(0, n + 1):
            for m in range(t, -1, -1):
                k = t - m
                if k == 0:
                    if m == n:
                        out.append((TermSignature(0, n, ()), coeff_recursive(0, n, ())))
                    continue
                for a in _distributions(n, m, k):
                    j = tuple(x - 1 for x in a)
                    out.append((TermSignature(k, m, j), coeff_recursive(k, m, j)))
        return out
    for t in range(2, n + 1):
        for m in range(t - 1, -1, -1):
            k = t - m
            if _filtered_out(n, k, m):
                continue
            for a in _distributions(n, m, k):
                j = tuple(x - 1 for x in a)
                out.append((TermSignature(k, m, j), coeff_recursive(k, m, j)))
    return out


def emit_latex(n: int, sigma_filter: bool = True) -> str:
    """LaTeX for the S-derivative block of order n, reference layout."""
    if n < 2 or n > MAX_N:
        raise ValueError("LaTeX emission supports n = 2..8")
    if n > len(ALPHABET):
        raise ValueError("index alphabet exhausted")
    if n == 2:
        return (
            "S_{(" + ALPHABET[0] + ALPHABET[1] + ")}&="
            + "g_{" + ALPHABET[0] + ALPHABET[1] + "}"
            + "-2\\, " + r"\Psi" + "_{(" + ALPHABET[0] + ALPHABET[1] + ")}"
            + "+" + r"\Psi" + "_{" + PRIME_ALPHABET[0] + "(" + ALPHABET[0] + "} "
            + r"\Psi" + "^{" + PRIME_ALPHABET[0] + "}{}_{" + ALPHABET[1] + ")}"
        )
    parts = ["S_{(" + "".join(ALPHABET[:n]) + ")}&=\n"]
    sep = "\n\\displaybreak[0]\\\\ &\n"
    count = 0
    for sig, coef in enumerate_terms(n, sigma_filter):
        k, m, j = sig.k, sig.m, sig.j
        a = tuple(x + 1 for x in j)
        t = k + m
        if count != 0:
            parts.append(sep)
        if k == 1 and m == 1:
            parts.append("-")
        elif count != 0:
            parts.append("+")
        count += 1
        if coef != 1:
            parts.append(f"{coef}\\, ")
        if t == 2:
            head = "g_{" + "".join(PRIME_ALPHABET[:k])
            if m != 0:
                head += "("
            head += "".join(ALPHABET[:m]) + "} "
            parts.append(head)
        else:
            head = "[\\sigma_{" + "".join(p + "'" for p in PRIME_ALPHABET[:k])
            if m != 0:
                head += "("
            head += "".join(ALPHABET[:m]) + "}] "
            parts.append(head)
        psi = "\\Psi^{" + PRIME_ALPHABET[0] + "}{}_{"
        if m == 0:
            psi += "("
        psi += "".join(ALPHABET[m : m + a[0]])
        nxt = m + a[0]
        for i in range(1, k):
            psi += "} \\Psi^{" + PRIME_ALPHABET[i] + "}{}_{"
            psi += "".join(ALPHABET[nxt : nxt + a[i]])
            nxt += a[i]
        psi += ")}"
        parts.append(psi)
    return "".join(parts)


def normalize_block(text: str) -> str:
    """Whitespace-collapse and strip the trailing punctuation of a block."""
    text = text.strip()
    text = re.sub(r"(\\,[,.]\s*(\\\\)?)\s*$", "", text)
    return " ".join(text.split())


def terms_as_json(n: int, sigma_filter: bool = True) -> list:
    return [
        {"k": sig.k, "m": sig.m, "j": list(sig.j), "coefficient": coef}
        for sig, coef in enumerate_terms(n, sigma_filter)
    ]
