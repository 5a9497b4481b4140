"""Walk one Java snippet from raw text to masked variants.

Run: python3 demos/01_lexing_and_masking.py
"""

from natrank.lexing import classify_lines, lex_grammar
from natrank.masking import extract_sites, render_variant

SNIPPET = """\
package demo;

public class Counter {
    private int total = 0;

    // bump by a positive step only
    public void add(int step) {
        if (step > 0) {
            total = total + step;
        }
    }
}
"""


def main():
    seq = lex_grammar(SNIPPET, source="Counter.java")
    verdicts = classify_lines(seq, SNIPPET)

    print("line classification (business logic lines get masked):")
    for no, text in enumerate(SNIPPET.splitlines(), start=1):
        mark = "business" if verdicts.is_business_logic.get(no) else "-"
        print(f"  {no:>2} {mark:<8} {text}")

    business = [no for no, ok in verdicts.is_business_logic.items() if ok]
    sites = extract_sites(seq, business)
    print(f"\n{len(sites)} maskable sites on the business lines")
    print("keywords, comments and separators are never masked:")
    for site in sites:
        print(f"  line {site.line_no:>2}  {site.kind:<15} {site.original_text!r}")

    # each variant hides exactly one token inside a context window
    print("\nvariants for line 9, window budget 12 tokens:")
    for site in sites:
        if site.line_no != 9:
            continue
        variant = render_variant(seq, site, budget=12)
        print(f"  hide {site.original_text!r:<8} -> {' '.join(variant.window_tokens)}")


if __name__ == "__main__":
    main()
