#!/usr/bin/env python3
"""Regenerates the planted-bug fixture: Java corpus, bug reports and manifest.

The manifest's baseline figures come from a tokenizer and BM25 scorer written
here from scratch, so they check the C++ pipeline rather than echo it.
"""

import json
import math
import random
import re
import sys
from pathlib import Path

HERE = Path(__file__).resolve().parent
RESOURCES = HERE.parent.parent / "core" / "resources"
SYSTEM = "authsvc"
VERSION = "1.0"
ROOT = HERE / "corpus" / SYSTEM / VERSION
K1, B = 1.2, 0.75
TOP_K, RESULT_K = 50, 10
THRESHOLD = 3


def word_list(name):
    words = set()
    for line in (RESOURCES / name).read_text().splitlines():
        line = line.rstrip()
        if line and not line.startswith("#"):
            words.add(line)
    return words


STOP = word_list("stopwords_en.txt")
KEYWORDS = word_list("java_keywords.txt")
PIECE = re.compile(r"[A-Z]+(?=[A-Z][a-z])|[A-Z]?[a-z]+|[A-Z]+|[0-9]+")


def tokens(text):
    out = []
    for run in re.findall(r"[A-Za-z0-9]+", text):
        for piece in PIECE.findall(run):
            piece = piece.lower()
            if len(piece) < 2 or piece in STOP or piece in KEYWORDS:
                continue
            out.append(piece)
    return out


FILLER = """
alpha anchor arc axis badge beacon blend bolt border bounce bridge buffer canvas carbon cell chain
chunk circle column comet core cursor dial dome drift echo ember fabric fiber flare frame galaxy
gear glyph grain graph grid harbor helix hinge icon ingot jitter kernel knot lane lattice layer
lens lever magnet margin marker matrix meadow mesh metric mirror module nebula nexus node notch
orbit packet panel patch pebble pivot planet prism pulse quartz radar ridge ripple rocket rotor
shard sketch slot socket spark spiral sprite stencil summit swatch tablet tensor thread tile
timber torch tracker trail tunnel vector velvet vertex voxel wave widget zenith
""".split()
VERBS = "build merge scan shift spin trace fold stack twist wrap sort pack split tune mark".split()

BUGS = [
    {
        "bug_id": "AUTH-101",
        "terms": ["session", "expiry", "refresh", "token", "deadline"],
        "title": "Session expiry ignores refresh token",
        "description": "The session deadline is not extended when a refresh token is used.",
        "planted": ("access", "AccessCoordinator", """
    public void applyRenewal(Grant grant) {
        long deadline = grant.issuedAt() + window;
        if (grant.hasRefresh()) {
            grant.extend(window);
        }
        registry.put(grant.session(), deadline);
    }
"""),
        "pairs": [("session", "token"), ("expiry", "deadline"), ("refresh", "token"), ("session", "expiry")],
    },
    {
        "bug_id": "AUTH-102",
        "terms": ["ledger", "balance", "rounding", "currency", "cents"],
        "title": "Ledger balance rounding drops cents",
        "description": "Currency conversion produces a balance that is off by one cent.",
        "planted": ("billing", "StatementAssembler", """
    public long postEntry(Entry entry) {
        long cents = entry.amount() * scale;
        Currency currency = entry.currency();
        return ledger.append(currency, cents);
    }
"""),
        "pairs": [("ledger", "balance"), ("rounding", "cents"), ("currency", "balance"), ("ledger", "rounding")],
    },
    {
        "bug_id": "AUTH-103",
        "terms": ["thumbnail", "resize", "aspect", "pixel", "crop"],
        "title": "Thumbnail resize distorts aspect ratio",
        "description": "Cropped images lose pixel rows because the crop ignores the aspect.",
        "planted": ("media", "AvatarPipeline", """
    public Bitmap scaleAvatar(Bitmap source, int width) {
        int height = source.height() * width / source.width();
        Bitmap thumbnail = source.resize(width, height);
        return thumbnail.crop(aspect);
    }
"""),
        "pairs": [("thumbnail", "pixel"), ("resize", "aspect"), ("crop", "pixel"), ("thumbnail", "resize")],
    },
    {
        "bug_id": "AUTH-104",
        "terms": ["webhook", "retry", "signature", "payload", "delivery"],
        "title": "Webhook retry sends stale signature",
        "description": "Each delivery retry reuses the payload signature computed for the first attempt.",
        "planted": ("notify", "OutboundDispatcher", """
    public void redeliver(Message message) {
        byte[] payload = message.body();
        String signature = signer.sign(payload);
        transport.retry(message.target(), payload, signature);
    }
"""),
        "pairs": [("webhook", "delivery"), ("retry", "payload"), ("signature", "delivery"), ("webhook", "retry")],
    },
    {
        "bug_id": "AUTH-105",
        "terms": ["locale", "plural", "translation", "bundle", "fallback"],
        "title": "Plural forms missing from locale bundle",
        "description": "Translation lookup skips the fallback bundle for plural keys.",
        "planted": ("i18n", "MessageCatalog", """
    public String render(String code, int count) {
        Bundle bundle = bundles.get(current);
        String plural = bundle.plural(code, count);
        return plural != null ? plural : fallback.get(code);
    }
"""),
        "pairs": [("locale", "plural"), ("translation", "bundle"), ("fallback", "locale"), ("plural", "translation")],
    },
]

DISTRACTOR_CLASSES = {
    "AUTH-101": ("access", ["SessionTokenCodec", "ExpiryDeadlineClock", "RefreshTokenStore"]),
    "AUTH-102": ("billing", ["LedgerBalanceView", "RoundingCentsPolicy", "CurrencyBalanceTable"]),
    "AUTH-103": ("media", ["ThumbnailPixelGrid", "ResizeAspectRules", "CropPixelMask"]),
    "AUTH-104": ("notify", ["WebhookDeliveryLog", "RetryPayloadQueue", "SignatureDeliveryAudit"]),
    "AUTH-105": ("i18n", ["LocalePluralRules", "TranslationBundleIndex", "FallbackLocaleChain"]),
}


def camel(*words):
    return words[0] + "".join(w.capitalize() for w in words[1:])


def filler_method(rng):
    a, b, c = rng.sample(FILLER, 3)
    verb = rng.choice(VERBS)
    n, m = rng.randint(2, 9), rng.randint(10, 90)
    return f"""
    public int {camel(verb, a, b)}(int {a}) {{
        int {c} = {a} * {n};
        if ({c} > {m}) {{
            {c} -= {a};
        }}
        return {c} + {a} % {n};
    }}
"""


def planted_file(bug, rng):
    pkg, cls, method = bug["planted"]
    fields = "".join(f"    private int {camel(w, 'count')};\n" for w in rng.sample(FILLER, 4))
    before = "".join(filler_method(rng) for _ in range(12))
    after = "".join(filler_method(rng) for _ in range(4))
    return (f"package com.{SYSTEM}.{pkg};\n\nimport java.util.Map;\n\n"
            f"public class {cls} {{\n{fields}{before}{method}{after}}}\n")


def distractor_file(bug, pkg, cls, index):
    terms = bug["terms"]
    header = " ".join(terms)
    lines = [
        f"package com.{SYSTEM}.{pkg};",
        "",
        f"/* {header}",
        f" * {header} */",
        f"public class {cls} {{",
    ]
    for t in terms:
        lines.append(f"    private int {camel(t, 'total')};")
    pairs = bug["pairs"][index:] + bug["pairs"][:index]
    for x, y in pairs:
        lines.append("")
        lines.append(f"    public int {camel(x, y)}(int {x}) {{")
        lines.append(f"        int {y} = {x} + {camel(x, 'total')};")
        lines.append(f"        return {y} * {camel(y, 'total')};")
        lines.append("    }")
    lines.append("}")
    return "\n".join(lines) + "\n"


def java_path(pkg, cls):
    return f"src/main/java/com/{SYSTEM}/{pkg}/{cls}.java"


def bm25_rank(files, query):
    doc_tokens = {p: tokens(c) for p, c in files.items()}
    n = len(doc_tokens)
    avgdl = sum(len(t) for t in doc_tokens.values()) / n
    df = {}
    for toks in doc_tokens.values():
        for t in set(toks):
            df[t] = df.get(t, 0) + 1
    scored = []
    for path, toks in doc_tokens.items():
        s = 0.0
        for q in query:
            if q not in df:
                continue
            tf = toks.count(q)
            if tf == 0:
                continue
            idf = max(0.0, math.log(1 + (n - df[q] + 0.5) / (df[q] + 0.5)))
            s += idf * tf * (K1 + 1) / (tf + K1 * (1 - B + B * len(toks) / avgdl))
        if s > 0:
            scored.append((path, s))
    scored.sort(key=lambda e: (-e[1], e[0]))
    return scored[:TOP_K]


def metrics(ranked, truth):
    top = ranked[:RESULT_K]
    hits, ap = 0, 0.0
    for i, p in enumerate(top):
        if p in truth:
            hits += 1
            ap += hits / (i + 1)
    first = next((i + 1 for i, p in enumerate(ranked) if p in truth), None)
    rr = 1.0 / first if first else 0.0
    return ap / len(truth), rr, first


def method_bodies(java):
    return re.findall(r"\n    public [^\n]*\{\n.*?\n    \}\n", java, re.S)


def main():
    rng = random.Random(20240917)
    files = {}
    planted_paths = {}
    for bug in BUGS:
        pkg, cls, _ = bug["planted"]
        path = java_path(pkg, cls)
        files[path] = planted_file(bug, rng)
        planted_paths[bug["bug_id"]] = path
        dpkg, dclasses = DISTRACTOR_CLASSES[bug["bug_id"]]
        for i, dcls in enumerate(dclasses):
            files[java_path(dpkg, dcls)] = distractor_file(bug, dpkg, dcls, i)
    assert len(files) == 20, len(files)

    corpus_vocab = set()
    for content in files.values():
        corpus_vocab.update(tokens(content))

    manifest = {"system": SYSTEM, "version": VERSION, "documents": len(files), "bugs": []}
    for bug in BUGS:
        report = tokens(bug["title"] + "\n" + bug["description"])
        stray = (set(report) & corpus_vocab) - set(bug["terms"])
        assert not stray, (bug["bug_id"], stray)
        relevant = []
        for path, content in files.items():
            for body in method_bodies(content):
                if len(set(report) & set(tokens(body))) >= THRESHOLD:
                    relevant.append(path)
                    break
        assert relevant == [planted_paths[bug["bug_id"]]], (bug["bug_id"], relevant)
        ranked = [p for p, _ in bm25_rank(files, report)]
        truth = {planted_paths[bug["bug_id"]]}
        ap, rr, first = metrics(ranked, truth)
        manifest["bugs"].append({
            "bug_id": bug["bug_id"],
            "planted": planted_paths[bug["bug_id"]],
            "relevant_documents": relevant,
            "baseline_rank": first,
            "baseline_top": ranked[:RESULT_K],
            "baseline_average_precision": ap,
            "baseline_reciprocal_rank": rr,
        })
    rows = manifest["bugs"]
    q = len(rows)
    manifest["baseline_metrics"] = {
        "map": sum(r["baseline_average_precision"] for r in rows) / q,
        "mrr": sum(r["baseline_reciprocal_rank"] for r in rows) / q,
        "hit_at_1": sum(1 for r in rows if r["baseline_rank"] and r["baseline_rank"] <= 1) / q,
        "hit_at_5": sum(1 for r in rows if r["baseline_rank"] and r["baseline_rank"] <= 5) / q,
        "hit_at_10": sum(1 for r in rows if r["baseline_rank"] and r["baseline_rank"] <= 10) / q,
    }
    outside = sum(1 for r in rows if not r["baseline_rank"] or r["baseline_rank"] > 3)
    assert outside >= 3, outside

    if "--check" in sys.argv:
        print(json.dumps(manifest, indent=2))
        return

    for path, content in files.items():
        target = ROOT / path
        target.parent.mkdir(parents=True, exist_ok=True)
        target.write_text(content)
    with open(HERE / "bugs.jsonl", "w") as out:
        for bug in BUGS:
            out.write(json.dumps({
                "bug_id": bug["bug_id"],
                "system": SYSTEM,
                "version": VERSION,
                "title": bug["title"],
                "description": bug["description"],
                "fixed_files": [planted_paths[bug["bug_id"]]],
            }) + "\n")
    (HERE / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")


if __name__ == "__main__":
    main()
