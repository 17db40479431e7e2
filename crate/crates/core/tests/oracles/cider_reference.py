#!/usr/bin/env python3
"""Python 3 transcription of the original (non -D) CIDEr scorer by
R. Vedantam (github.com/vrama91/cider, pyciderevalcap/cider/cider_scorer.py).

Used once to freeze the toy-corpus values asserted in gen_eval tests.
Inputs are pre-tokenized, space-joined strings, as the original expects
after its PTB tokenizer step.
"""
import math
from collections import defaultdict

import numpy as np


def precook(s, n=4):
    words = s.split()
    counts = defaultdict(int)
    for k in range(1, n + 1):
        for i in range(len(words) - k + 1):
            counts[tuple(words[i:i + k])] += 1
    return counts


def cook_refs(refs, n=4):
    return [precook(ref, n) for ref in refs]


def cook_test(test, n=4):
    return precook(test, n)


def compute_cider(ctest, crefs, n=4):
    document_frequency = defaultdict(float)
    for refs in crefs:
        for ngram in set([ngram for ref in refs for (ngram, count) in ref.items()]):
            document_frequency[ngram] += 1

    def counts2vec(cnts):
        vec = [defaultdict(float) for _ in range(n)]
        length = 0
        norm = [0.0 for _ in range(n)]
        for (ngram, term_freq) in cnts.items():
            df = np.log(max(1.0, document_frequency[ngram]))
            k = len(ngram) - 1
            vec[k][ngram] = float(term_freq) * (ref_len - df)
            norm[k] += pow(vec[k][ngram], 2)
            if k == 1:
                length += term_freq
        norm = [np.sqrt(x) for x in norm]
        return vec, norm, length

    def sim(vec_hyp, vec_ref, norm_hyp, norm_ref, length_hyp, length_ref):
        val = np.array([0.0 for _ in range(n)])
        for k in range(n):
            for (ngram, count) in vec_hyp[k].items():
                val[k] += vec_hyp[k][ngram] * vec_ref[k][ngram]
            if (norm_hyp[k] != 0) and (norm_ref[k] != 0):
                val[k] /= (norm_hyp[k] * norm_ref[k])
            assert not math.isnan(val[k])
        return val

    ref_len = np.log(float(len(crefs)))
    scores = []
    for test, refs in zip(ctest, crefs):
        vec, norm, length = counts2vec(test)
        score = np.array([0.0 for _ in range(n)])
        for ref in refs:
            vec_ref, norm_ref, length_ref = counts2vec(ref)
            score += sim(vec, vec_ref, norm, norm_ref, length, length_ref)
        score_avg = np.mean(score)
        score_avg /= len(refs)
        score_avg *= 10.0
        scores.append(score_avg)
    return np.mean(np.array(scores)), np.array(scores)


TOY = [
    ("slice loaf using sharp knife", ["slice loaf using sharp knife"]),
    ("keep food cold in the kitchen", ["keep food cold", "store milk and eggs in the kitchen"]),
    ("to go to sleep", ["to rest after work", "go to bed early", "sleep"]),
]

if __name__ == "__main__":
    mean, per = compute_cider([cook_test(c) for c, _ in TOY], [cook_refs(r) for _, r in TOY])
    for s in per:
        print(repr(float(s)))
    print("mean", repr(float(mean)))
