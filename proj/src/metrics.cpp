#include "nnr/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

namespace nnr {

namespace {

void check_sizes(std::span<const double> scores, std::span<const std::uint8_t> labels) {
  if (scores.size() != labels.size()) throw ShapeError("metric: scores and labels differ in length");
}

}  // namespace

double auc(std::span<const double> scores, std::span<const std::uint8_t> labels) {
  check_sizes(scores, labels);
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  // Sum of average 1-based ascending ranks of the positives, in half units so
  // the sum stays an exact integer.
  std::uint64_t twice_rank_sum = 0;
  std::uint64_t positives = 0;
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
    const std::uint64_t twice_avg = static_cast<std::uint64_t>(i + 1 + j + 1);
    for (std::size_t t = i; t <= j; ++t) {
      if (labels[order[t]]) {
        twice_rank_sum += twice_avg;
        ++positives;
      }
    }
    i = j + 1;
  }
  const std::uint64_t negatives = n - positives;
  if (positives == 0 || negatives == 0) throw DegenerateInputError("auc needs at least one positive and one negative");
  const double u = static_cast<double>(twice_rank_sum - positives * (positives + 1)) / 2.0;
  return u / (static_cast<double>(positives) * static_cast<double>(negatives));
}

std::vector<std::size_t> rank_order(std::span<const double> scores) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  return order;
}

double mrr(std::span<const double> scores, std::span<const std::uint8_t> labels) {
  check_sizes(scores, labels);
  const std::vector<std::size_t> order = rank_order(scores);
  double total = 0.0;
  std::size_t positives = 0;
  for (std::size_t r = 0; r < order.size(); ++r) {
    if (!labels[order[r]]) continue;
    total += 1.0 / static_cast<double>(r + 1);
    ++positives;
  }
  if (positives == 0) throw DegenerateInputError("mrr needs at least one positive");
  return total / static_cast<double>(positives);
}

double ndcg_at_k(std::span<const double> scores, std::span<const std::uint8_t> labels, int k) {
  check_sizes(scores, labels);
  if (k < 1) throw ConfigError("ndcg cutoff must be >= 1");
  const std::vector<std::size_t> order = rank_order(scores);
  const std::size_t cutoff = std::min(order.size(), static_cast<std::size_t>(k));
  double dcg = 0.0;
  for (std::size_t r = 0; r < cutoff; ++r) {
    if (labels[order[r]]) dcg += 1.0 / std::log2(static_cast<double>(r) + 2.0);
  }
  const auto positives = static_cast<std::size_t>(std::count_if(labels.begin(), labels.end(), [](auto l) { return l != 0; }));
  if (positives == 0) throw DegenerateInputError("ndcg needs at least one positive");
  double ideal = 0.0;
  for (std::size_t r = 0; r < std::min(cutoff, positives); ++r) ideal += 1.0 / std::log2(static_cast<double>(r) + 2.0);
  return dcg / ideal;
}

ImpressionMetrics impression_metrics(const std::string& impression_id, std::span<const double> scores,
                                     std::span<const std::uint8_t> labels) {
  check_sizes(scores, labels);
  ImpressionMetrics m;
  m.impression_id = impression_id;
  const auto positives = std::count_if(labels.begin(), labels.end(), [](auto l) { return l != 0; });
  if (positives > 0 && static_cast<std::size_t>(positives) < labels.size()) m.auc = auc(scores, labels);
  if (positives > 0) {
    m.mrr = mrr(scores, labels);
    m.ndcg5 = ndcg_at_k(scores, labels, 5);
    m.ndcg10 = ndcg_at_k(scores, labels, 10);
  }
  return m;
}

RunMetrics aggregate_impressions(std::vector<ImpressionMetrics> per_impression) {
  RunMetrics r;
  double auc_sum = 0.0, mrr_sum = 0.0, n5 = 0.0, n10 = 0.0;
  std::size_t auc_n = 0, rank_n = 0;
  for (const ImpressionMetrics& m : per_impression) {
    if (m.auc) {
      auc_sum += *m.auc;
      ++auc_n;
    } else {
      ++r.auc_excluded;
    }
    if (m.mrr) {
      mrr_sum += *m.mrr;
      n5 += *m.ndcg5;
      n10 += *m.ndcg10;
      ++rank_n;
    } else {
      ++r.rank_excluded;
    }
  }
  if (auc_n > 0) r.auc = auc_sum / static_cast<double>(auc_n);
  if (rank_n > 0) {
    r.mrr = mrr_sum / static_cast<double>(rank_n);
    r.ndcg5 = n5 / static_cast<double>(rank_n);
    r.ndcg10 = n10 / static_cast<double>(rank_n);
  }
  r.per_impression = std::move(per_impression);
  return r;
}

MetricSummary summarize(const std::vector<double>& values) {
  MetricSummary s;
  s.per_seed = values;
  if (values.empty()) return s;
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  if (values.size() >= 2) {
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.std = std::sqrt(ss / static_cast<double>(values.size() - 1));
  }
  return s;
}

MetricReport aggregate_seeds(const std::vector<RunMetrics>& runs, MetricReport metadata) {
  std::vector<double> a, m, n5, n10;
  for (const RunMetrics& r : runs) {
    a.push_back(r.auc);
    m.push_back(r.mrr);
    n5.push_back(r.ndcg5);
    n10.push_back(r.ndcg10);
  }
  metadata.auc = summarize(a);
  metadata.mrr = summarize(m);
  metadata.ndcg5 = summarize(n5);
  metadata.ndcg10 = summarize(n10);
  return metadata;
}

namespace {

std::string seed_list(const std::vector<std::uint64_t>& seeds) {
  std::string out;
  for (std::size_t i = 0; i < seeds.size(); ++i) out += (i ? "," : "") + std::to_string(seeds[i]);
  return out;
}

std::string std_text(const MetricSummary& s) { return s.std ? fmt::format("{:.6f}", *s.std) : "-"; }

}  // namespace

void write_report_table(std::ostream& out, const std::vector<MetricReport>& reports) {
  out << "model\tfusion\tobjective\ttau\tseeds\tsplit\tauc_mean\tauc_std\tmrr_mean\tmrr_std\tndcg5_mean\tndcg5_std\t"
         "ndcg10_mean\tndcg10_std\n";
  for (const MetricReport& r : reports) {
    out << r.model << '\t' << r.fusion << '\t' << r.objective << '\t'
        << (r.objective == "scl" ? fmt::format("{:.2f}", r.tau) : std::string("-")) << '\t' << seed_list(r.seeds)
        << '\t' << r.split;
    for (const MetricSummary* s : {&r.auc, &r.mrr, &r.ndcg5, &r.ndcg10}) {
      out << '\t' << fmt::format("{:.6f}", s->mean) << '\t' << std_text(*s);
    }
    out << '\n';
  }
}

std::string format_summary(const MetricReport& r) {
  std::string out = fmt::format("{} / {} / {}", r.model, r.fusion, r.objective);
  if (r.objective == "scl") out += fmt::format(" (tau {:.2f})", r.tau);
  out += fmt::format(" on {} split, seeds [{}]\n", r.split, seed_list(r.seeds));
  auto line = [&](const char* name, const MetricSummary& s) {
    return s.std ? fmt::format("  {:<8} {:.4f} +- {:.4f}\n", name, s.mean, *s.std)
                 : fmt::format("  {:<8} {:.4f}\n", name, s.mean);
  };
  out += line("AUC", r.auc);
  out += line("MRR", r.mrr);
  out += line("nDCG@5", r.ndcg5);
  out += line("nDCG@10", r.ndcg10);
  return out;
}

}  // namespace nnr
