#!/usr/bin/env python3
"""Brute-force reference for the toy end-to-end runs.

Recomputes every strategy outcome and the EM / F1 / %Unk / %NM aggregates
directly from the fixture files, with no shared code with the C++ library.
BM25 is evaluated exhaustively for every passage. Prints JSON to stdout.
"""
import json
import math
import os
import re
import sys
import unicodedata

FIX = os.path.join(os.path.dirname(os.path.abspath(__file__)), "..", "fixtures")
STRATEGIES = ["concat", "post_fusion", "pruning", "summary", "concat_pf", "pf_concat"]
MASK = (1 << 64) - 1

SCENARIOS = {
    "rule_no_gold": {"backend": "rule", "placement": "no_gold", "seed": 17, "patterns": []},
    "rule_gold_random": {"backend": "rule", "placement": "gold_random", "seed": 17, "patterns": []},
    "script_gold_random": {"backend": "script", "placement": "gold_random", "seed": 17,
                           "patterns": ["cannot be answered"]},
}
K, L, K1, B = 5, 50, 1.2, 0.75


def read_jsonl(name):
    with open(os.path.join(FIX, name)) as f:
        return [json.loads(line) for line in f if line.strip()]


# --- answers -----------------------------------------------------------------

def normalize(s):
    s = s.lower()
    s = "".join(ch for ch in s if not unicodedata.category(ch).startswith("P"))
    return " ".join(w for w in s.split() if w not in ("a", "an", "the"))


def em(pred, golds):
    return 1 if any(normalize(pred) == normalize(g) for g in golds) else 0


def f1_one(pred, gold):
    p, g = normalize(pred).split(), normalize(gold).split()
    if not p and not g:
        return 1.0
    if not p or not g:
        return 0.0
    pool = {}
    for t in g:
        pool[t] = pool.get(t, 0) + 1
    overlap = 0
    for t in p:
        if pool.get(t, 0) > 0:
            pool[t] -= 1
            overlap += 1
    if overlap == 0:
        return 0.0
    prec, rec = overlap / len(p), overlap / len(g)
    return 2 * prec * rec / (prec + rec)


def f1(pred, golds):
    return max(f1_one(pred, g) for g in golds)


def sentinel_form(s):
    s = s.strip().lower()
    s = s.rstrip(".!?,;:\"'* ")
    return s.lstrip("\"'*")


def classify(text, patterns):
    lines = [ln.strip() for ln in text.split("\n") if ln.strip()]
    line = lines[-1] if lines else ""
    if line.lower().startswith("answer:"):
        line = line[7:].strip()
    if not line:
        return None
    if sentinel_form(line) == sentinel_form("unknown"):
        return None
    low = line.lower()
    if any(p.lower() in low for p in patterns if p):
        return None
    return line


def vote(answers):
    tally = {}
    for rank, a in enumerate(answers):
        if a is None:
            continue
        n = normalize(a)
        if n not in tally:
            tally[n] = [0, rank, a]
        tally[n][0] += 1
    if not tally:
        return None
    best = sorted(tally.items(), key=lambda kv: (-kv[1][0], kv[1][1], kv[0]))[0]
    return best[1][2]


def dedup(cands):
    seen, out = set(), []
    for c in cands:
        if normalize(c) not in seen:
            seen.add(normalize(c))
            out.append(c)
    return out


# --- retrieval ---------------------------------------------------------------

def tokens(text):
    # ASCII-only lowercasing; any non-ASCII character counts as a word character.
    lowered = re.sub(r"[A-Z]", lambda m: m.group().lower(), text)
    return re.findall(r"[a-z0-9\x80-\U0010ffff]+", lowered)


def bm25_rank(passages, query):
    docs = [tokens(p["text"]) for p in passages]
    n = len(docs)
    avg = sum(len(d) for d in docs) / n
    terms = []
    for t in tokens(query):
        if t not in terms:
            terms.append(t)
    scored = []
    for p, d in zip(passages, docs):
        s = 0.0
        for t in terms:
            tf = d.count(t)
            if tf == 0:
                continue
            df = sum(1 for e in docs if t in e)
            idf = math.log(1 + (n - df + 0.5) / (df + 0.5))
            s += idf * (tf * (K1 + 1)) / (tf + K1 * (1 - B + B * len(d) / avg))
        scored.append((s, p["id"]))
    scored.sort(key=lambda x: (-x[0], x[1]))
    return [pid for _, pid in scored]


def fnv1a64(s):
    h = 0xcbf29ce484222325
    for c in s.encode():
        h ^= c
        h = (h * 0x100000001b3) & MASK
    return h


def splitmix64(x):
    x = (x + 0x9e3779b97f4a7c15) & MASK
    x = ((x ^ (x >> 30)) * 0xbf58476d1ce4e5b9) & MASK
    x = ((x ^ (x >> 27)) * 0x94d049bb133111eb) & MASK
    return x ^ (x >> 31)


def place_gold(ranked, q, mode, seed):
    if mode == "no_gold":
        return ranked
    gold = q["gold_passage_id"]
    if gold in ranked:
        return ranked
    kept = ranked[:K - 1]
    pos = splitmix64(seed ^ fnv1a64(q["id"])) % (len(kept) + 1)
    return kept[:pos] + [gold] + kept[pos:]


# --- strategies ----------------------------------------------------------------

def make_backend(kind, questions, script):
    aliases = {q["id"]: q["answers"] for q in questions}

    def rule(qid, key, texts):
        for a in aliases[qid]:
            if any(a.lower() in t.lower() for t in texts):
                return a
        return "unknown"

    def scripted(qid, key, texts):
        return script[(qid, key)]

    return rule if kind == "rule" else scripted


def run(strategy, qid, texts, ask, patterns):
    """Returns (final, per_passage or None, voted)."""
    def per_passage():
        return [classify(ask(qid, "pf:%d" % i, [t]), patterns) for i, t in enumerate(texts)]

    if strategy in ("concat", "pruning", "summary"):
        key = {"concat": "concat", "pruning": "pruning", "summary": "summary"}[strategy]
        return classify(ask(qid, key, texts), patterns), None, False
    if strategy == "post_fusion":
        pp = per_passage()
        return vote(pp), pp, True
    if strategy == "concat_pf":
        first = classify(ask(qid, "concat", texts), patterns)
        if first is not None:
            return first, None, False
        pp = per_passage()
        return vote(pp), pp, True
    pp = per_passage()
    surv = [t for t, a in zip(texts, pp) if a is not None]
    if not surv:
        return None, pp, False
    return classify(ask(qid, "distill", surv), patterns), pp, False


def main():
    corpus = read_jsonl("toy_corpus.jsonl")
    questions = read_jsonl("toy_questions.jsonl")
    script = {(r["question_id"], r["exchange_key"]): r["response"] for r in read_jsonl("toy_script.jsonl")}

    passages = []
    for d in corpus:
        words = d["text"].split()
        for i in range(0, len(words), L):
            passages.append({"id": "%s#%d" % (d["id"], i // L), "text": " ".join(words[i:i + L])})
    by_id = {p["id"]: p for p in passages}

    out = {"passages": len(passages), "scenarios": {}}
    for name, sc in SCENARIOS.items():
        ask = make_backend(sc["backend"], questions, script)
        rows, finals, rankings = {}, {}, {}
        for s in STRATEGIES:
            ems, f1s, unks, nms, pools = [], [], [], 0, 0
            finals[s] = []
            for q in questions:
                ranked = place_gold(bm25_rank(passages, q["question"])[:K], q, sc["placement"], sc["seed"])
                rankings[q["id"]] = ranked
                texts = [by_id[pid]["text"] for pid in ranked]
                final, pp, voted = run(s, q["id"], texts, ask, sc["patterns"])
                finals[s].append(final)
                e = em(final, q["answers"]) if final is not None else 0
                ems.append(e)
                f1s.append(f1(final, q["answers"]) if final is not None else 0.0)
                unks.append(1 if final is None else 0)
                if voted:
                    has_gold = any(a is not None and em(a, q["answers"]) for a in pp)
                    pools += has_gold
                    nms += 1 if (has_gold and e == 0) else 0
            n = len(questions)
            rows[s] = {
                "n": n,
                "em": 100.0 * sum(ems) / n,
                "f1": 100.0 * sum(f1s) / n,
                "unk_rate": sum(unks) / n,
                "nm_rate": (nms / pools) if pools else 0.0,
                "nm_events": nms,
                "nm_pools": pools,
            }
        out["scenarios"][name] = {"config": sc, "rows": rows, "finals": finals, "rankings": rankings}
    json.dump(out, sys.stdout, indent=1, sort_keys=True)
    sys.stdout.write("\n")


if __name__ == "__main__":
    main()
