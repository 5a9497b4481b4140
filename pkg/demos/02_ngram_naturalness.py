"""Show the n-gram cross-entropy axis: repetitive code reads as natural,
scrambled or unusual code reads as surprising.

Run: python3 demos/02_ngram_naturalness.py
"""

import random

from natrank.ngram import NGramConfig, tokenize_line, train
from natrank.synth import statement_corpus


def main():
    lines = statement_corpus(n_lines=200, seed=11)
    model = train(lines, NGramConfig(order=4, unk_threshold=1))
    print(f"trained a 4-gram model on {len(lines)} statement lines "
          f"(vocabulary {len(model.vocab)})")

    rng = random.Random(5)
    verbatim = rng.choice(lines)
    shuffled_tokens = tokenize_line(verbatim, "jp")
    rng.shuffle(shuffled_tokens)
    shuffled = " ".join(shuffled_tokens)
    unusual = "checksum ^= 0xDEAD ^ sentinel ;"

    print("\ncross-entropy in bits per token (lower = more natural):")
    for label, text in (("verbatim ", verbatim),
                        ("shuffled ", shuffled),
                        ("unusual  ", unusual)):
        h = model.cross_entropy(text)
        print(f"  {label} {h:6.3f}   {text}")

    print("\nthe ranking pipeline uses exactly this number per source line:")
    print("high-entropy lines float to the top of the suspect list.")


if __name__ == "__main__":
    main()
