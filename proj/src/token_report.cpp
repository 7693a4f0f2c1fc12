#include "latefusion/token_report.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <stdexcept>

#include <fmt/format.h>

namespace latefusion {

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

bool contains_ci(const std::vector<std::string>& list, std::string_view word) {
  const auto w = lower(word);
  return std::any_of(list.begin(), list.end(), [&](const std::string& s) { return lower(s) == w; });
}

bool has_alnum(std::string_view s) {
  return std::any_of(s.begin(), s.end(), [](unsigned char c) { return std::isalnum(c) != 0; });
}

bool is_sentence_break(char c) { return c == '.' || c == '!' || c == '?' || c == '\n'; }

struct Word {
  Term term;
  bool alive = true;
};

}  // namespace

void TokenAttribution::validate(std::string_view source_text) const {
  std::size_t prev_end = 0;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const auto& t = tokens[i];
    if (t.begin > t.end || t.end > source_text.size()) {
      throw std::invalid_argument(fmt::format("token {} ('{}'): span [{}, {}) outside source text", i, t.text, t.begin, t.end));
    }
    if (t.begin < prev_end) {
      throw std::invalid_argument(fmt::format("token {} ('{}'): span overlaps or precedes previous token", i, t.text));
    }
    if (!std::isfinite(t.saliency)) throw std::invalid_argument(fmt::format("token {}: non-finite saliency", i));
    prev_end = t.end;
  }
}

std::string context_snippet(std::string_view text, std::size_t begin, std::size_t end, std::size_t cap) {
  constexpr std::string_view kEllipsis = "...";
  std::size_t s = begin;
  while (s > 0 && !is_sentence_break(text[s - 1])) --s;
  std::size_t e = end;
  // a term that carries its own closing punctuation ends the sentence
  const bool closed = end > begin && is_sentence_break(text[end - 1]);
  while (!closed && e < text.size() && !is_sentence_break(text[e])) ++e;
  if (!closed && e < text.size() && text[e] != '\n') ++e;  // keep the closing punctuation
  while (s < begin && std::isspace(static_cast<unsigned char>(text[s]))) ++s;
  while (e > end && std::isspace(static_cast<unsigned char>(text[e - 1]))) --e;
  if (e - s <= cap) return std::string(text.substr(s, e - s));

  if (cap <= 2 * kEllipsis.size()) return std::string(text.substr(begin, std::min(cap, end - begin)));
  const std::size_t room = cap - 2 * kEllipsis.size();
  const std::size_t term_len = end - begin;
  std::size_t ws = begin;
  if (term_len < room) {
    const std::size_t pad = (room - term_len) / 2;
    ws = std::clamp(begin > pad ? begin - pad : 0, s, e - room);
  }
  const std::size_t we = ws + room;
  std::string out;
  if (ws > s) out += kEllipsis;
  out += text.substr(ws, we - ws);
  if (we < e) out += kEllipsis;
  if (out.size() > cap) out.resize(cap);
  return out;
}

TokenReport token_report(const TokenAttribution& ta, std::string_view source_text, const TokenReportOptions& opts) {
  ta.validate(source_text);
  if (!(opts.sign_frac >= 0.0 && opts.sign_frac <= 1.0)) throw std::invalid_argument("token_report: sign_frac must be in [0,1]");

  // 1. subword merge
  std::vector<Word> words;
  for (const auto& tok : ta.tokens) {
    const bool continuation = !opts.subword_marker.empty() && tok.text.starts_with(opts.subword_marker);
    if (continuation && !words.empty()) {
      auto& w = words.back().term;
      w.end = tok.end;
      w.saliency += tok.saliency;
    } else {
      words.push_back({Term{{}, tok.saliency, tok.begin, tok.end, false}, true});
    }
  }
  for (auto& w : words) w.term.text = std::string(source_text.substr(w.term.begin, w.term.end - w.term.begin));

  const auto is_negator = [&](const Word& w) { return contains_ci(opts.negators, w.term.text); };
  std::vector<bool> in_negation(words.size(), false);
  for (std::size_t i = 0; i + 1 < words.size(); ++i) {
    if (is_negator(words[i]) && !in_negation[i]) {
      in_negation[i] = true;
      in_negation[i + 1] = true;
    }
  }

  // 2. duplicate collapse, keeping the peak |saliency| occurrence
  std::map<std::string, std::size_t> best;
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (in_negation[i] || is_negator(words[i])) continue;
    const auto [it, inserted] = best.emplace(words[i].term.text, i);
    if (inserted) continue;
    auto& keep = words[it->second];
    if (std::abs(words[i].term.saliency) > std::abs(keep.term.saliency)) {
      keep.alive = false;
      it->second = i;
    } else {
      words[i].alive = false;
    }
  }

  // 3. negation-aware bigrams
  std::vector<Term> terms;
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (!words[i].alive) continue;
    if (in_negation[i] && is_negator(words[i]) && i + 1 < words.size() && in_negation[i + 1]) {
      const auto& neg = words[i].term;
      const auto& next = words[i + 1].term;
      terms.push_back(Term{fmt::format("{} {}", neg.text, next.text), neg.saliency + next.saliency, neg.begin, next.end, true});
      ++i;
      continue;
    }
    terms.push_back(words[i].term);
  }
  // repeated bigrams collapse the same way as words
  {
    std::map<std::string, std::size_t> seen;
    std::vector<Term> deduped;
    for (auto& t : terms) {
      if (!t.negation) {
        deduped.push_back(std::move(t));
        continue;
      }
      const auto it = seen.find(t.text);
      if (it == seen.end()) {
        seen.emplace(t.text, deduped.size());
        deduped.push_back(std::move(t));
      } else if (std::abs(t.saliency) > std::abs(deduped[it->second].saliency)) {
        deduped[it->second] = std::move(t);
      }
    }
    terms = std::move(deduped);
  }

  // 4. stopword pruning
  std::erase_if(terms, [&](const Term& t) {
    if (t.negation) return false;
    if (!has_alnum(t.text)) return true;
    return contains_ci(opts.stopwords, t.text) && !contains_ci(opts.whitelist, t.text);
  });

  // 5. sign-separated thresholds
  double max_pos = 0.0;
  double max_neg = 0.0;
  for (const auto& t : terms) {
    if (t.saliency > 0.0) max_pos = std::max(max_pos, t.saliency);
    if (t.saliency < 0.0) max_neg = std::max(max_neg, -t.saliency);
  }
  TokenReport report;
  for (const auto& t : terms) {
    if (t.saliency > 0.0 && t.saliency >= opts.sign_frac * max_pos) report.risk_increasing.push_back(t);
    if (t.saliency < 0.0 && -t.saliency >= opts.sign_frac * max_neg) report.risk_reducing.push_back(t);
  }
  std::stable_sort(report.risk_increasing.begin(), report.risk_increasing.end(),
                   [](const Term& a, const Term& b) { return a.saliency > b.saliency; });
  std::stable_sort(report.risk_reducing.begin(), report.risk_reducing.end(),
                   [](const Term& a, const Term& b) { return a.saliency < b.saliency; });

  // 6. context snippets
  if (!report.risk_increasing.empty()) {
    const auto& t = report.risk_increasing.front();
    report.positive_snippet = context_snippet(source_text, t.begin, t.end, opts.snippet_cap);
  }
  if (!report.risk_reducing.empty()) {
    const auto& t = report.risk_reducing.front();
    report.negative_snippet = context_snippet(source_text, t.begin, t.end, opts.snippet_cap);
  }
  return report;
}

std::string render_text(const TokenReport& report) {
  std::string out = "Risk-increasing terms\n";
  std::size_t rank = 1;
  for (const auto& t : report.risk_increasing) out += fmt::format("  {:>2}. {:<32} {:+.4f}\n", rank++, t.text, t.saliency);
  if (report.positive_snippet) out += fmt::format("  context: \"{}\"\n", *report.positive_snippet);
  out += "Risk-reducing terms\n";
  rank = 1;
  for (const auto& t : report.risk_reducing) out += fmt::format("  {:>2}. {:<32} {:+.4f}\n", rank++, t.text, t.saliency);
  if (report.negative_snippet) out += fmt::format("  context: \"{}\"\n", *report.negative_snippet);
  return out;
}

}  // namespace latefusion
