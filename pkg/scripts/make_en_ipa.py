"""Build an EN-IPA corpus (word<TAB>IPA) from the CMU Pronouncing Dictionary.

Usage: python scripts/make_en_ipa.py OUT.tsv [--dict PATH]

Without --dict the copy bundled in the ``cmudict`` PyPI package is used.
Only each word's first pronunciation is kept; stress digits select between
reduced and full vowels (AH0 -> ə, ER0 -> ɚ).
"""
import argparse
import re
import sys

ARPABET = {
    "AA": "ɑ", "AE": "æ", "AH": "ʌ", "AO": "ɔ", "AW": "aʊ", "AY": "aɪ", "EH": "ɛ",
    "ER": "ɝ", "EY": "eɪ", "IH": "ɪ", "IY": "i", "OW": "oʊ", "OY": "ɔɪ", "UH": "ʊ",
    "UW": "u", "B": "b", "CH": "tʃ", "D": "d", "DH": "ð", "F": "f", "G": "ɡ", "HH": "h",
    "JH": "dʒ", "K": "k", "L": "l", "M": "m", "N": "n", "NG": "ŋ", "P": "p", "R": "ɹ",
    "S": "s", "SH": "ʃ", "T": "t", "TH": "θ", "V": "v", "W": "w", "Y": "j", "Z": "z",
    "ZH": "ʒ",
}
UNSTRESSED = {"AH": "ə", "ER": "ɚ"}
WORD = re.compile(r"[a-z']+")


def to_ipa(phones):
    out = []
    for ph in phones:
        base, stress = ph.rstrip("012"), ph[len(ph.rstrip("012")):]
        out.append(UNSTRESSED.get(base) if stress == "0" and base in UNSTRESSED else ARPABET[base])
    return "".join(out)


def read_dict(path=None):
    if path is None:
        import cmudict
        fh = cmudict.dict_stream()
        lines = (ln.decode("utf-8") if isinstance(ln, bytes) else ln for ln in fh)
    else:
        lines = open(path, encoding="utf-8")
    for line in lines:
        line = line.split("#")[0].strip()
        if not line:
            continue
        word, *phones = line.split()
        if "(" in word or not WORD.fullmatch(word):
            continue
        yield word, to_ipa(phones)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("out")
    ap.add_argument("--dict", default=None)
    args = ap.parse_args(argv)
    n = 0
    with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
        for word, ipa in read_dict(args.dict):
            fh.write(f"{word}\t{ipa}\n")
            n += 1
    print(f"wrote {n} pairs to {args.out}", file=sys.stderr)


if __name__ == "__main__":
    main()
