#include "hag/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <map>
#include <stdexcept>

#include "hag/corpus.hpp"

namespace hag {

namespace {

using NgramCounts = std::map<std::vector<std::string>, std::size_t>;

NgramCounts ngrams(const Tokens& t, std::size_t n) {
  NgramCounts out;
  if (t.size() < n) return out;
  for (std::size_t i = 0; i + n <= t.size(); ++i) ++out[Tokens(t.begin() + static_cast<std::ptrdiff_t>(i), t.begin() + static_cast<std::ptrdiff_t>(i + n))];
  return out;
}

std::size_t clipped_overlap(const NgramCounts& cand, const NgramCounts& ref) {
  std::size_t m = 0;
  for (const auto& [g, c] : cand) {
    const auto it = ref.find(g);
    if (it != ref.end()) m += std::min(c, it->second);
  }
  return m;
}

double f1(double p, double r) { return p + r > 0.0 ? 2.0 * p * r / (p + r) : 0.0; }

void require_pairs(const std::vector<EvalPair>& pairs, const char* what) {
  if (pairs.empty()) throw std::invalid_argument(std::string(what) + ": empty candidate set");
  for (const auto& p : pairs)
    if (p.references.empty()) throw std::invalid_argument(std::string(what) + ": pair without references");
}

}  // namespace

std::vector<double> bleu(const std::vector<EvalPair>& pairs, std::size_t max_n) {
  require_pairs(pairs, "bleu");
  if (max_n < 1 || max_n > 4) throw std::invalid_argument("bleu: max_n must be in 1..4");
  std::vector<double> num(max_n + 1, 0.0), den(max_n + 1, 0.0);
  double cand_len = 0.0, ref_len = 0.0;
  for (const auto& p : pairs) {
    const double c = static_cast<double>(p.candidate.size());
    cand_len += c;
    double best = static_cast<double>(p.references.front().size());
    for (const auto& r : p.references) {
      const double l = static_cast<double>(r.size());
      if (std::abs(l - c) < std::abs(best - c) || (std::abs(l - c) == std::abs(best - c) && l < best)) best = l;
    }
    ref_len += best;
    for (std::size_t n = 1; n <= max_n; ++n) {
      const NgramCounts cand = ngrams(p.candidate, n);
      NgramCounts max_ref;
      for (const auto& r : p.references)
        for (const auto& [g, k] : ngrams(r, n)) max_ref[g] = std::max(max_ref[g], k);
      num[n] += static_cast<double>(clipped_overlap(cand, max_ref));
      den[n] += c >= static_cast<double>(n) ? c - static_cast<double>(n) + 1.0 : 0.0;
    }
  }
  const double bp = cand_len == 0.0 ? 0.0 : (cand_len > ref_len ? 1.0 : std::exp(1.0 - ref_len / cand_len));
  std::vector<double> out;
  for (std::size_t upto = 1; upto <= max_n; ++upto) {
    bool smooth = false;
    for (std::size_t n = 2; n <= upto; ++n) smooth = smooth || num[n] == 0.0;
    double log_sum = 0.0;
    bool zero = false;
    for (std::size_t n = 1; n <= upto; ++n) {
      const double a = num[n] + (smooth && n >= 2 ? 1.0 : 0.0);
      const double b = den[n] + (smooth && n >= 2 ? 1.0 : 0.0);
      if (a == 0.0 || b == 0.0) {
        zero = true;
        break;
      }
      log_sum += std::log(a / b);
    }
    out.push_back(zero ? 0.0 : bp * std::exp(log_sum / static_cast<double>(upto)));
  }
  return out;
}

std::size_t lcs_length(const Tokens& a, const Tokens& b) {
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j)
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

RougeScores rouge(const std::vector<EvalPair>& pairs) {
  require_pairs(pairs, "rouge");
  RougeScores out;
  for (const auto& p : pairs) {
    double best1 = 0.0, bestl = 0.0;
    const double c = static_cast<double>(p.candidate.size());
    for (const auto& r : p.references) {
      const double rl = static_cast<double>(r.size());
      if (c == 0.0 || rl == 0.0) continue;
      const double o = static_cast<double>(clipped_overlap(ngrams(p.candidate, 1), ngrams(r, 1)));
      best1 = std::max(best1, f1(o / c, o / rl));
      const double l = static_cast<double>(lcs_length(p.candidate, r));
      bestl = std::max(bestl, f1(l / c, l / rl));
    }
    out.rouge1 += best1;
    out.rougeL += bestl;
  }
  out.rouge1 /= static_cast<double>(pairs.size());
  out.rougeL /= static_cast<double>(pairs.size());
  return out;
}

namespace {

// Depth-first over candidate positions. A word may go unmatched only while
// enough later copies remain to reach its match quota.
struct AlignSearch {
  const Tokens& cand;
  const Tokens& ref;
  std::map<std::string, std::size_t> quota;        // matches still owed per word
  std::map<std::string, std::size_t> remaining;    // candidate copies not yet visited
  std::vector<bool> used;
  std::size_t best = static_cast<std::size_t>(-1);
  long budget = 2'000'000;

  void run(std::size_t i, std::size_t last_ref, bool last_matched, std::size_t chunks) {
    if (chunks >= best || budget-- <= 0) return;
    if (i == cand.size()) {
      best = chunks;
      return;
    }
    const std::string& w = cand[i];
    auto q = quota.find(w);
    --remaining[w];
    if (q != quota.end() && q->second > 0) {
      // Try the continuation of the current chunk first; it tends to find the optimum early.
      std::vector<std::size_t> options;
      for (std::size_t j = 0; j < ref.size(); ++j)
        if (!used[j] && ref[j] == w) options.push_back(j);
      std::stable_sort(options.begin(), options.end(), [&](std::size_t a, std::size_t b) {
        return (last_matched && a == last_ref + 1) > (last_matched && b == last_ref + 1);
      });
      for (std::size_t j : options) {
        used[j] = true;
        --q->second;
        const bool extends = last_matched && j == last_ref + 1;
        run(i + 1, j, true, chunks + (extends ? 0 : 1));
        ++q->second;
        used[j] = false;
      }
      if (remaining[w] >= q->second) run(i + 1, 0, false, chunks);
    } else {
      run(i + 1, 0, false, chunks);
    }
    ++remaining[w];
  }
};

}  // namespace

MeteorAlignment meteor_align(const Tokens& candidate, const Tokens& reference) {
  std::map<std::string, std::size_t> cc, rc;
  for (const auto& w : candidate) ++cc[w];
  for (const auto& w : reference) ++rc[w];
  AlignSearch s{candidate, reference, {}, cc, std::vector<bool>(reference.size(), false)};
  MeteorAlignment out;
  for (const auto& [w, k] : cc) {
    const auto it = rc.find(w);
    if (it == rc.end()) continue;
    s.quota[w] = std::min(k, it->second);
    out.matches += std::min(k, it->second);
  }
  if (out.matches == 0) return out;
  s.run(0, 0, false, 0);
  out.chunks = s.best;
  return out;
}

double meteor_sentence(const Tokens& candidate, const Tokens& reference) {
  const MeteorAlignment a = meteor_align(candidate, reference);
  if (a.matches == 0) return 0.0;
  const double m = static_cast<double>(a.matches);
  const double p = m / static_cast<double>(candidate.size());
  const double r = m / static_cast<double>(reference.size());
  const double fmean = 10.0 * p * r / (r + 9.0 * p);
  const double frag = static_cast<double>(a.chunks) / m;
  return fmean * (1.0 - 0.5 * frag * frag * frag);
}

double meteor(const std::vector<EvalPair>& pairs) {
  require_pairs(pairs, "meteor");
  double total = 0.0;
  for (const auto& p : pairs) {
    double best = 0.0;
    for (const auto& r : p.references) best = std::max(best, meteor_sentence(p.candidate, r));
    total += best;
  }
  return total / static_cast<double>(pairs.size());
}

double fmr(const std::vector<std::vector<Tokens>>& generated, const std::vector<std::vector<std::string>>& gold_aspects) {
  if (generated.size() != gold_aspects.size()) throw std::invalid_argument("fmr: output and gold counts differ");
  std::size_t hit = 0, total = 0;
  for (std::size_t i = 0; i < generated.size(); ++i) {
    for (std::size_t j = 0; j < gold_aspects[i].size(); ++j) {
      ++total;
      if (j < generated[i].size() && contains_span(generated[i][j], gold_aspects[i][j])) ++hit;
    }
  }
  if (total == 0) throw std::invalid_argument("fmr: empty evaluation set");
  return static_cast<double>(hit) / static_cast<double>(total);
}

double mae(const std::vector<double>& preds, const std::vector<double>& golds) {
  if (preds.size() != golds.size()) throw std::invalid_argument("mae: prediction and gold counts differ");
  if (preds.empty()) throw std::invalid_argument("mae: empty input");
  double s = 0.0;
  for (std::size_t i = 0; i < preds.size(); ++i) s += std::abs(preds[i] - golds[i]);
  return s / static_cast<double>(preds.size());
}

nlohmann::json MetricReport::to_json() const {
  return {{"bleu1", bleu1}, {"bleu4", bleu4}, {"rouge1", rouge1}, {"rougeL", rougeL},
          {"meteor", meteor}, {"fmr", fmr},    {"mae", mae},       {"n_examples", n_examples}};
}

MetricReport evaluate_examples(const std::vector<EvalExample>& examples) {
  if (examples.empty()) throw std::invalid_argument("evaluate: empty evaluation set");
  std::vector<EvalPair> pairs;
  std::vector<std::vector<Tokens>> generated;
  std::vector<std::vector<std::string>> gold;
  std::vector<double> preds, golds;
  for (const auto& e : examples) {
    EvalPair p;
    for (const auto& t : e.generated) p.candidate.insert(p.candidate.end(), t.begin(), t.end());
    Tokens ref;
    for (const auto& t : e.gold_explanations) ref.insert(ref.end(), t.begin(), t.end());
    p.references.push_back(std::move(ref));
    pairs.push_back(std::move(p));
    generated.push_back(e.generated);
    gold.push_back(e.gold_aspects);
    preds.push_back(e.predicted_rating);
    golds.push_back(e.gold_rating);
  }
  MetricReport r;
  const auto b = bleu(pairs, 4);
  r.bleu1 = 100.0 * b[0];
  r.bleu4 = 100.0 * b[3];
  const RougeScores rs = rouge(pairs);
  r.rouge1 = 100.0 * rs.rouge1;
  r.rougeL = 100.0 * rs.rougeL;
  r.meteor = 100.0 * meteor(pairs);
  r.fmr = fmr(generated, gold);
  r.mae = mae(preds, golds);
  r.n_examples = examples.size();
  return r;
}

}  // namespace hag
