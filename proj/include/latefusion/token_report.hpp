#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace latefusion {

/// One tokenizer piece with its [begin, end) byte span into the source text.
struct Token {
  std::string text;
  std::size_t begin = 0;
  std::size_t end = 0;
  double saliency = 0.0;
};

struct TokenAttribution {
  std::vector<Token> tokens;

  /// Spans must be ordered, non-overlapping and inside the source text.
  void validate(std::string_view source_text) const;
};

struct TokenReportOptions {
  std::vector<std::string> negators{"no", "not", "denies", "without", "non"};
  std::vector<std::string> stopwords{"a",    "an",   "and",  "are",  "as",  "at",   "be",  "by",   "for",
                                     "from", "has",  "he",   "her",  "his", "in",   "is",  "it",   "its",
                                     "of",   "on",   "or",   "she",  "that", "the", "to",  "was",  "were",
                                     "will", "with", "this", "there", "which"};
  /// Never pruned even when listed as stopwords (clinical abbreviations).
  std::vector<std::string> whitelist{"nsr", "hr", "bp"};
  std::string subword_marker = "##";
  double sign_frac = 0.20;
  std::size_t snippet_cap = 200;
};

struct Term {
  std::string text;
  double saliency = 0.0;
  std::size_t begin = 0;
  std::size_t end = 0;
  bool negation = false;  // negator + following word
};

struct TokenReport {
  std::vector<Term> risk_increasing;  // descending saliency
  std::vector<Term> risk_reducing;    // ascending saliency (strongest first)
  std::optional<std::string> positive_snippet;
  std::optional<std::string> negative_snippet;
};

/// Readability pipeline over token attributions:
///  1. subword pieces (leading marker) are merged into the previous word,
///     saliencies summed;
///  2. repeated words collapse to the occurrence with the largest |saliency|
///     (negators and the word they negate are left alone);
///  3. a negator merges with the following word into a bigram carrying the summed saliency;
///  4. stopwords are dropped unless whitelisted, as are tokens with no letters or digits;
///  5. per sign, terms below sign_frac x that sign's largest |saliency| are dropped;
///  6. the strongest term of each sign gets its enclosing sentence, cut to snippet_cap chars.
TokenReport token_report(const TokenAttribution& ta, std::string_view source_text, const TokenReportOptions& opts = {});

/// Sentence around [begin, end) bounded by . ! ? or newline, at most `cap`
/// characters; truncated sides are marked with "...".
std::string context_snippet(std::string_view text, std::size_t begin, std::size_t end, std::size_t cap);

std::string render_text(const TokenReport& report);

}  // namespace latefusion
